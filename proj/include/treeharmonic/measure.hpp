#pragma once

/**
 * @file measure.hpp
 * @brief F-harmonic measure of m-adic unions, the perturbed solution
 * v_(f,I,c), and the upper / lower perturbation bounds.
 *
 * v_(f,I,c) is the solution with data f + c chi_I sampled at a data level
 * n >= level of I. Its root minus the root of u (same f, no perturbation) is
 * the "gap" every bound in this header is about. For the general bounds the
 * data level is the level of I; deeper data levels are used by the
 * approximating upper class and by the refinement checks.
 */

#include "dirichlet.hpp"
#include "error.hpp"
#include "operators.hpp"
#include "tree.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace treeharmonic {

/// f + c chi_I at level n, solved on the whole tree.
[[nodiscard]] inline tree_solution<double> perturbed_solution(const averaging_op &op, const boundary_data &f,
                                                              const madic_union &I, double c, unsigned n) {
    if (I.m != op.arity()) {
        throw domain_error("interval and operator use different m");
    }
    if (I.level > n) {
        throw domain_error("data level " + std::to_string(n) + " is above the level of I");
    }
    return solve(op, f.plus_indicator(I, c), n);
}

/// omega_F(I): root of the solve with data chi_I at the level of I.
[[nodiscard]] inline double harmonic_measure(const averaging_op &op, const madic_union &I) {
    return perturbed_solution(op, boundary_data::constant(0.0), I, 1.0, I.level).root();
}

/**
 * Solves u once at a fixed data level and evaluates perturbed roots by
 * recomputing only the ancestors of the perturbed cells.
 */
class gap_engine {
public:
    gap_engine(averaging_op op, const boundary_data &f, unsigned data_level) :
        op_{std::move(op)}, base_{solve(op_, f, data_level)} {
        index_sup();
    }

    gap_engine(averaging_op op, std::vector<double> data) : op_{std::move(op)}, base_{solve<double>(op_, std::move(data))} {
        index_sup();
    }

    [[nodiscard]] const averaging_op &op() const noexcept { return op_; }
    [[nodiscard]] const tree_solution<double> &base() const noexcept { return base_; }
    [[nodiscard]] unsigned data_level() const noexcept { return base_.depth; }
    [[nodiscard]] double u_root() const { return base_.root(); }

    /// Root of v_(f,I,c).
    [[nodiscard]] double perturbed_root(const madic_union &I, double c) const {
        return resolve_root_with_edits(op_, base_, indicator_edits(base_, I, c));
    }

    /// v_(f,I,c)(root) - u(root).
    [[nodiscard]] double gap(const madic_union &I, double c) const { return perturbed_root(I, c) - u_root(); }

    /// Root with the listed cells replaced.
    [[nodiscard]] double edited_root(std::vector<boundary_edit> edits) const {
        return resolve_root_with_edits(op_, base_, std::move(edits));
    }

    /// sup |data| over all cells, and over the cells outside [k0, k1].
    [[nodiscard]] double sup_abs() const { return prefix_sup_.back(); }
    [[nodiscard]] double sup_abs_outside(std::uint64_t k0, std::uint64_t k1) const {
        return std::max(k0 == 0 ? 0.0 : prefix_sup_[k0 - 1], k1 + 1 >= suffix_sup_.size() ? 0.0 : suffix_sup_[k1 + 1]);
    }

private:
    void index_sup() {
        const auto &data = base_.boundary();
        prefix_sup_.resize(data.size());
        suffix_sup_.resize(data.size());
        double running = 0.0;
        for (std::size_t j = 0; j < data.size(); ++j) {
            running = std::max(running, std::abs(data[j]));
            prefix_sup_[j] = running;
        }
        running = 0.0;
        for (std::size_t j = data.size(); j-- > 0;) {
            running = std::max(running, std::abs(data[j]));
            suffix_sup_[j] = running;
        }
    }

    averaging_op op_;
    tree_solution<double> base_;
    std::vector<double> prefix_sup_;
    std::vector<double> suffix_sup_;
};

namespace detail {

inline double required_kappa(const averaging_op &op) {
    const auto kappa = contraction_constant(op);
    if (!kappa) {
        throw unsupported_operator_error(op.name() + " has no closed-form contraction constant");
    }
    return *kappa;
}

inline double required_eta(const averaging_op &op) {
    const auto eta = expansion_constant(op);
    if (!eta) {
        throw unsupported_operator_error(op.name() + " has no closed-form expansion constant");
    }
    return *eta;
}

inline double resolve_exponent(std::optional<double> requested, double sharpest, bool upper, const char *name) {
    if (!requested) {
        return sharpest;
    }
    const double slack = 1e-12 * std::max(1.0, std::abs(sharpest));
    if (upper ? *requested > sharpest + slack : *requested < sharpest - slack) {
        throw domain_error(std::string(name) + " = " + format_double(*requested) + (upper ? " exceeds " : " is below ") +
                           format_double(sharpest) + ", the limit the bound allows");
    }
    return *requested;
}

}  // namespace detail

inline constexpr double bound_tolerance = 1e-10;

struct bound_report {
    madic_union interval;
    double c = 0.0;
    unsigned n = 0;
    double measured_gap = 0.0;

    double kappa = 0.0;
    double gamma = 0.0;
    /// Bound chosen by the shape of I: single cell, adjacent pair or general union.
    double upper_bound = 0.0;
    std::string upper_kind;
    /// 2c(m|I|)^gamma, valid for every union.
    double bound_general = 0.0;
    /// c|I|^gamma, single cells.
    std::optional<double> bound_single;
    /// 2^(1-gamma) c|I|^gamma, two adjacent cells.
    std::optional<double> bound_pair;
    /// c kappa^n (single cell) or 2c kappa^n (pair).
    std::optional<double> bound_raw;

    std::optional<double> eta;
    std::optional<double> theta;
    std::optional<double> lower_bound;

    /// k0 + k1 != m^n - 1, the side condition under which v realizes the upper-class infimum.
    bool infimum_hypothesis = true;
    std::map<std::string, bool> satisfied;

    [[nodiscard]] bool all_satisfied() const {
        for (const auto &[key, ok] : satisfied) {
            if (!ok) {
                return false;
            }
        }
        return true;
    }
};

namespace detail {

inline bound_report base_report(const gap_engine &engine, const madic_union &I, double c) {
    if (!(c > 0.0)) {
        throw domain_error("perturbation height c must be positive");
    }
    if (I.level != engine.data_level()) {
        throw domain_error("bounds are evaluated with data at the level of I");
    }
    bound_report r;
    r.interval = I;
    r.c = c;
    r.n = I.level;
    r.measured_gap = engine.gap(I, c);
    r.infimum_hypothesis = I.k0 + I.k1 != level_size(I.m, I.level) - 1;
    r.satisfied["nonnegative"] = r.measured_gap >= -bound_tolerance;
    return r;
}

inline void add_upper(bound_report &r, double kappa, std::optional<double> gamma_override) {
    const double m = r.interval.m;
    const double length = r.interval.length();
    r.kappa = kappa;
    r.gamma = resolve_exponent(gamma_override, -log_base(kappa, m), true, "gamma");
    r.bound_general = 2.0 * r.c * std::pow(m * length, r.gamma);
    r.upper_bound = r.bound_general;
    r.upper_kind = "general";
    const double kappa_n = std::pow(kappa, r.n);
    if (r.interval.cell_count() == 1) {
        r.bound_single = r.c * std::pow(length, r.gamma);
        r.bound_raw = r.c * kappa_n;
        r.upper_bound = *r.bound_single;
        r.upper_kind = "single";
    } else if (r.interval.cell_count() == 2) {
        r.bound_pair = std::pow(2.0, 1.0 - r.gamma) * r.c * std::pow(length, r.gamma);
        r.bound_raw = 2.0 * r.c * kappa_n;
        r.upper_bound = *r.bound_pair;
        r.upper_kind = "pair";
    }
    r.satisfied["general"] = r.measured_gap <= r.bound_general + bound_tolerance;
    r.satisfied["shape"] = r.measured_gap <= r.upper_bound + bound_tolerance;
    if (r.bound_raw) {
        r.satisfied["raw"] = r.measured_gap <= *r.bound_raw + bound_tolerance;
    }
}

inline void add_lower(bound_report &r, double eta, std::optional<double> theta_override) {
    const double m = r.interval.m;
    r.eta = eta;
    r.theta = resolve_exponent(theta_override, -log_base(eta, m), false, "theta");
    r.lower_bound = r.c * std::pow(r.interval.length() / (2.0 * m), *r.theta);
    r.satisfied["lower"] = r.measured_gap >= *r.lower_bound - bound_tolerance;
}

}  // namespace detail

/// Upper bounds for data f at the level of I; gamma defaults to -log_m(kappa).
[[nodiscard]] inline bound_report check_upper_bounds(const gap_engine &engine, const madic_union &I, double c,
                                                     std::optional<double> gamma = std::nullopt) {
    bound_report r = detail::base_report(engine, I, c);
    detail::add_upper(r, detail::required_kappa(engine.op()), gamma);
    return r;
}

[[nodiscard]] inline bound_report check_upper_bounds(const averaging_op &op, const boundary_data &f, const madic_union &I,
                                                     double c, std::optional<double> gamma = std::nullopt) {
    (void) detail::required_kappa(op);
    return check_upper_bounds(gap_engine(op, f, I.level), I, c, gamma);
}

/// Lower bound c(|I|/(2m))^theta; theta defaults to -log_m(eta).
[[nodiscard]] inline bound_report check_lower_bound(const gap_engine &engine, const madic_union &I, double c,
                                                    std::optional<double> theta = std::nullopt) {
    bound_report r = detail::base_report(engine, I, c);
    detail::add_lower(r, detail::required_eta(engine.op()), theta);
    return r;
}

[[nodiscard]] inline bound_report check_lower_bound(const averaging_op &op, const boundary_data &f, const madic_union &I,
                                                    double c, std::optional<double> theta = std::nullopt) {
    (void) detail::required_eta(op);
    return check_lower_bound(gap_engine(op, f, I.level), I, c, theta);
}

/// Both bound families where the operator has the constants, with optional overrides.
[[nodiscard]] inline bound_report check_bounds(const gap_engine &engine, const madic_union &I, double c,
                                               std::optional<double> gamma = std::nullopt,
                                               std::optional<double> theta = std::nullopt) {
    bound_report r = detail::base_report(engine, I, c);
    if (const auto kappa = contraction_constant(engine.op())) {
        detail::add_upper(r, *kappa, gamma);
    }
    if (const auto eta = expansion_constant(engine.op())) {
        detail::add_lower(r, *eta, theta);
    }
    return r;
}

struct upper_class_result {
    unsigned l = 0;
    unsigned data_level = 0;
    /// I together with its flanking level-(n+l) cells.
    madic_union widened;
    double v_root = 0.0;
    double w_root = 0.0;
    /// 2c kappa^(n+l).
    double certified_gap = 0.0;
    bool within = false;
};

/**
 * w_l: the perturbed solution for I widened by one level-(n+l) cell on each
 * side that has room (one-sided when I touches 0 or 1). Checks
 * v(root) <= w_l(root) <= v(root) + 2c kappa^(n+l). The engine's data level
 * must be at least n + l; all l compared on one engine share their data.
 */
[[nodiscard]] inline upper_class_result approximating_upper_class(const gap_engine &engine, const madic_union &I,
                                                                  double c, unsigned l) {
    if (l < 1) {
        throw domain_error("upper-class index l starts at 1");
    }
    const double kappa = detail::required_kappa(engine.op());
    const unsigned n = I.level;
    if (engine.data_level() < n + l) {
        throw domain_error("data level " + std::to_string(engine.data_level()) + " is above level n + l = " +
                           std::to_string(n + l));
    }
    const madic_union fine = I.refined(n + l);
    const std::uint64_t k0 = fine.touches_left() ? fine.k0 : fine.k0 - 1;
    const std::uint64_t k1 = fine.touches_right() ? fine.k1 : fine.k1 + 1;

    upper_class_result r;
    r.l = l;
    r.data_level = engine.data_level();
    r.widened = madic_union::cells(I.m, n + l, k0, k1);
    r.v_root = engine.perturbed_root(I, c);
    r.w_root = engine.perturbed_root(r.widened, c);
    r.certified_gap = 2.0 * c * std::pow(kappa, n + l);
    r.within = r.w_root >= r.v_root - bound_tolerance && r.w_root <= r.v_root + r.certified_gap + bound_tolerance;
    return r;
}

[[nodiscard]] inline upper_class_result approximating_upper_class(const averaging_op &op, const boundary_data &f,
                                                                  const madic_union &I, double c, unsigned l,
                                                                  std::optional<unsigned> data_level = std::nullopt) {
    (void) detail::required_kappa(op);
    const unsigned depth = std::max(I.level + l, data_level.value_or(I.level + l));
    return approximating_upper_class(gap_engine(op, f, depth), I, c, l);
}

struct comparison_result {
    double gap = 0.0;
    double gamma = 0.0;
    /// (1/m)(eps / (2M))^(1/gamma).
    double delta_required = 0.0;
    /// |I| <= delta_required.
    bool applicable = false;
    /// gap < eps.
    bool satisfied = false;
};

namespace detail {

inline comparison_result finish_comparison(const averaging_op &op, const madic_union &I, double M, double eps, double gap,
                                           double sup_f, double sup_g, std::optional<double> gamma_override) {
    if (!(M > 0.0) || !(eps > 0.0)) {
        throw domain_error("M and eps must be positive");
    }
    if (sup_f + sup_g > M * (1.0 + 1e-12)) {
        throw precondition_error("sup|f| + sup|g| = " + format_double(sup_f + sup_g) + " exceeds M = " + format_double(M));
    }
    const double m = op.arity();
    comparison_result r;
    r.gap = gap;
    r.gamma = resolve_exponent(gamma_override, -log_base(required_kappa(op), m), true, "gamma");
    r.delta_required = std::pow(eps / (2.0 * M), 1.0 / r.gamma) / m;
    r.applicable = I.length() <= r.delta_required;
    r.satisfied = gap < eps;
    return r;
}

inline double sup_abs(const std::vector<double> &values) {
    double s = 0.0;
    for (const double v : values) {
        s = std::max(s, std::abs(v));
    }
    return s;
}

}  // namespace detail

/**
 * Solves data f and g (equal outside I, checked on the level-n grid) and
 * compares the roots. Sup norms are taken over the sampled grid.
 */
[[nodiscard]] inline comparison_result boundary_comparison(const averaging_op &op, const boundary_data &f,
                                                           const boundary_data &g, const madic_union &I, double M,
                                                           double eps, std::optional<unsigned> data_level = std::nullopt,
                                                           std::optional<double> gamma = std::nullopt) {
    (void) detail::required_kappa(op);
    const unsigned n = data_level.value_or(I.level);
    if (n < I.level) {
        throw domain_error("data level is above the level of I");
    }
    const auto fn = sample_boundary(f, n, op.arity());
    const auto gn = sample_boundary(g, n, op.arity());
    for (std::uint64_t j = 0; j < fn.size(); ++j) {
        if (!I.contains_cell(n, j) && fn[j] != gn[j]) {
            throw precondition_error("f and g differ outside I at grid point " + std::to_string(j) + " / " +
                                     std::to_string(fn.size()));
        }
    }
    const double gap = std::abs(solve<double>(op, fn).root() - solve<double>(op, gn).root());
    return detail::finish_comparison(op, I, M, eps, gap, detail::sup_abs(fn), detail::sup_abs(gn), gamma);
}

/// Same comparison with g given as new values on the cells of I over a solved f.
[[nodiscard]] inline comparison_result boundary_comparison(const gap_engine &engine, const madic_union &I,
                                                           const std::vector<double> &g_on_I, double M, double eps,
                                                           std::optional<double> gamma = std::nullopt) {
    const auto &op = engine.op();
    (void) detail::required_kappa(op);
    const madic_union fine = I.refined(engine.data_level());
    if (g_on_I.size() != fine.cell_count()) {
        throw precondition_error("g needs one value per data-level cell of I");
    }
    std::vector<boundary_edit> edits;
    edits.reserve(g_on_I.size());
    for (std::uint64_t i = 0; i < g_on_I.size(); ++i) {
        edits.push_back({fine.k0 + i, g_on_I[i]});
    }
    const double sup_f = engine.sup_abs();
    const double sup_g = std::max(detail::sup_abs(g_on_I), engine.sup_abs_outside(fine.k0, fine.k1));
    const double gap = std::abs(engine.edited_root(std::move(edits)) - engine.u_root());
    return detail::finish_comparison(op, I, M, eps, gap, sup_f, sup_g, gamma);
}

}  // namespace treeharmonic
