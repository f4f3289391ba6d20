#pragma once

/**
 * @file operators.hpp
 * @brief m-ary averaging operators and an empirical axiom checker.
 *
 * An averaging operator F : R^m -> R is continuous and satisfies
 *   (i)   F(0,...,0) = 0 and F(1,...,1) = 1,
 *   (ii)  F(t x) = t F(x) for all real t,
 *   (iii) F(x + t 1) = F(x) + t,
 *   (iv)  F(x) < max x unless all coordinates agree,
 *   (v)   F is nondecreasing in each coordinate.
 *
 * The four concrete families are
 *   F0 = alpha * midrange + beta * mean,
 *   F1 = alpha * median   + beta * mean,
 *   F2 = alpha * median   + beta * midrange,
 *   Fp = the root t of sum_j (x_j - t)|x_j - t|^(p-2) = 0.
 *
 * F0, F1 and F2 evaluate exactly over rationals as well as doubles; Fp and
 * custom operators are double-only.
 */

#include "error.hpp"
#include "random.hpp"
#include "scalar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace treeharmonic {

enum class op_family { mean_midrange, mean_median, median_midrange, p_average, custom };

inline constexpr double default_root_tolerance = 1e-13;
inline constexpr unsigned max_bisection_steps = 200;
inline constexpr double min_p = 1.0 + 1e-6;
inline constexpr double max_p = 64.0;

/// Median of a sorted range: middle element for odd length, mean of the two middles for even length.
template <tree_scalar T>
[[nodiscard]] T median_of_sorted(std::span<const T> sorted) {
    const std::size_t m = sorted.size();
    if (m == 0) {
        throw arity_error("median of an empty sequence");
    }
    if (m % 2 == 1) {
        return sorted[m / 2];
    }
    return (sorted[m / 2 - 1] + sorted[m / 2]) / T(2);
}

template <tree_scalar T>
[[nodiscard]] T median(std::span<const T> values) {
    std::vector<T> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return median_of_sorted<T>(sorted);
}

namespace detail {

inline double signed_power(double d, double exponent) {
    if (d == 0.0) {
        return 0.0;
    }
    const double magnitude = std::pow(std::abs(d), exponent);
    return d > 0.0 ? magnitude : -magnitude;
}

/// g(t) = sum_j sign(x_j - t)|x_j - t|^(p-1), evaluated over sorted data so the sum is order independent.
inline double p_residual(std::span<const double> sorted, double t, double p) {
    double sum = 0.0;
    for (const double x : sorted) {
        sum += signed_power(x - t, p - 1.0);
    }
    return sum;
}

inline double p_root_sorted(std::span<const double> sorted, double p, double tol) {
    double lo = sorted.front();
    double hi = sorted.back();
    if (lo == hi) {
        return lo;
    }
    // g is strictly decreasing with g(lo) > 0 > g(hi).
    for (unsigned step = 0; step < max_bisection_steps && hi - lo > tol; ++step) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (p_residual(sorted, mid, p) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo + 0.5 * (hi - lo);
}

inline void require_finite(std::span<const double> values) {
    for (const double v : values) {
        if (!std::isfinite(v)) {
            throw domain_error("averaging operator input is not finite");
        }
    }
}

}  // namespace detail

/// Root of sum_j (x_j - t)|x_j - t|^(p-2) = 0 by bracketing bisection on [min x, max x].
[[nodiscard]] inline double implicit_p_average(std::span<const double> values, double p, double tol = default_root_tolerance) {
    if (!(p > 1.0)) {
        throw domain_error("p-average needs p > 1");
    }
    if (!(tol > 0.0)) {
        throw domain_error("root tolerance must be positive");
    }
    if (values.empty()) {
        throw arity_error("p-average of an empty sequence");
    }
    detail::require_finite(values);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return detail::p_root_sorted(sorted, p, tol);
}

class averaging_op {
public:
    using custom_fn = std::function<double(std::span<const double>)>;

    /// F0: alpha/2 (max + min) + beta/m sum.
    static averaging_op mean_midrange(unsigned m, double alpha) { return {op_family::mean_midrange, m, alpha, 1.0 - alpha}; }
    static averaging_op mean_midrange(unsigned m, double alpha, double beta) { return {op_family::mean_midrange, m, alpha, beta}; }

    /// F1: alpha med + beta/m sum.
    static averaging_op mean_median(unsigned m, double alpha) { return {op_family::mean_median, m, alpha, 1.0 - alpha}; }
    static averaging_op mean_median(unsigned m, double alpha, double beta) { return {op_family::mean_median, m, alpha, beta}; }

    /// F2: alpha med + beta/2 (max + min).
    static averaging_op median_midrange(unsigned m, double alpha) { return {op_family::median_midrange, m, alpha, 1.0 - alpha}; }
    static averaging_op median_midrange(unsigned m, double alpha, double beta) { return {op_family::median_midrange, m, alpha, beta}; }

    static averaging_op p_average(unsigned m, double p, double root_tolerance = default_root_tolerance) {
        if (!(p >= min_p && p <= max_p)) {
            std::ostringstream msg;
            msg << "p = " << p << " outside the supported range [1+1e-6, 64]";
            throw domain_error(msg.str());
        }
        if (!(root_tolerance > 0.0)) {
            throw domain_error("root tolerance must be positive");
        }
        averaging_op op{op_family::p_average, m, 0.0, 1.0};
        op.p_ = p;
        op.root_tolerance_ = root_tolerance;
        return op;
    }

    /// Test hook for arbitrary rules (used to exercise the axiom checker).
    static averaging_op custom(unsigned m, custom_fn fn, std::string name = "custom") {
        averaging_op op{op_family::custom, m, 0.0, 1.0};
        op.custom_ = std::move(fn);
        op.custom_name_ = std::move(name);
        return op;
    }

    [[nodiscard]] op_family family() const noexcept { return family_; }
    [[nodiscard]] unsigned arity() const noexcept { return m_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] double p() const noexcept { return p_; }
    [[nodiscard]] double root_tolerance() const noexcept { return root_tolerance_; }

    /// F0/F1/F2 are order-statistic rules and evaluate exactly over rationals.
    [[nodiscard]] bool supports_exact() const noexcept {
        return family_ == op_family::mean_midrange || family_ == op_family::mean_median || family_ == op_family::median_midrange;
    }

    [[nodiscard]] bool permutation_invariant() const noexcept { return family_ != op_family::custom; }

    /// Operator string as accepted by parse_operator, e.g. "F1:alpha=0.5" or "Fp:p=3".
    [[nodiscard]] std::string name() const {
        switch (family_) {
            case op_family::mean_midrange: return "F0:alpha=" + format_double(alpha_);
            case op_family::mean_median: return "F1:alpha=" + format_double(alpha_);
            case op_family::median_midrange: return "F2:alpha=" + format_double(alpha_);
            case op_family::p_average: return "Fp:p=" + format_double(p_);
            case op_family::custom: break;
        }
        return custom_name_;
    }

    template <tree_scalar T>
    [[nodiscard]] T operator()(std::span<const T> values) const {
        if (values.size() != m_) {
            std::ostringstream msg;
            msg << "operator of arity " << m_ << " applied to " << values.size() << " values";
            throw arity_error(msg.str());
        }
        if constexpr (is_rational_v<T>) {
            if (!supports_exact()) {
                throw unsupported_operator_error(name() + " has no exact rational evaluation");
            }
            std::vector<T> sorted(values.begin(), values.end());
            std::sort(sorted.begin(), sorted.end());
            return order_statistic_rule<T>(sorted, rational(alpha_), rational(beta_));
        } else {
            detail::require_finite(values);
            if (family_ == op_family::custom) {
                return custom_(values);
            }
            std::vector<double> sorted(values.begin(), values.end());
            std::sort(sorted.begin(), sorted.end());
            if (family_ == op_family::p_average) {
                return detail::p_root_sorted(sorted, p_, root_tolerance_);
            }
            return order_statistic_rule<double>(sorted, alpha_, beta_);
        }
    }

    template <tree_scalar T>
    [[nodiscard]] T operator()(const std::vector<T> &values) const {
        return (*this)(std::span<const T>(values));
    }

    [[nodiscard]] double operator()(std::initializer_list<double> values) const {
        return (*this)(std::span<const double>(values.begin(), values.size()));
    }

private:
    averaging_op(op_family family, unsigned m, double alpha, double beta) :
        family_{family}, m_{m}, alpha_{alpha}, beta_{beta} {
        if (m < 3) {
            throw domain_error("arity m must be at least 3");
        }
        if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0)) {
            throw domain_error("alpha and beta must lie in [0, 1]");
        }
        if (alpha + beta != 1.0) {
            throw domain_error("alpha + beta must equal 1");
        }
    }

    template <tree_scalar T>
    T order_statistic_rule(std::span<const T> sorted, const T &alpha, const T &beta) const {
        const T midrange = (sorted.front() + sorted.back()) / T(2);
        switch (family_) {
            case op_family::mean_midrange:
                return alpha * midrange + beta * mean_of(sorted);
            case op_family::mean_median:
                return alpha * median_of_sorted<T>(sorted) + beta * mean_of(sorted);
            case op_family::median_midrange:
                return alpha * median_of_sorted<T>(sorted) + beta * midrange;
            default:
                throw unsupported_operator_error("not an order-statistic rule");
        }
    }

    template <tree_scalar T>
    static T mean_of(std::span<const T> sorted) {
        T sum(0);
        for (const auto &x : sorted) {
            sum += x;
        }
        return sum / T(static_cast<unsigned>(sorted.size()));
    }

    op_family family_;
    unsigned m_;
    double alpha_;
    double beta_;
    double p_ = 2.0;
    double root_tolerance_ = default_root_tolerance;
    custom_fn custom_;
    std::string custom_name_;
};

/// F(0,...,0,1): the weight carried by a single distinguished successor.
template <tree_scalar T = double>
[[nodiscard]] T delta(const averaging_op &op) {
    std::vector<T> unit(op.arity(), T(0));
    unit.back() = T(1);
    return op(std::span<const T>(unit));
}

/// True when op is exactly the arithmetic mean (F0/F1 with alpha = 0, F2 never, Fp with p = 2).
[[nodiscard]] inline bool is_arithmetic_mean(const averaging_op &op) {
    switch (op.family()) {
        case op_family::mean_midrange:
        case op_family::mean_median: return op.alpha() == 0.0;
        case op_family::p_average: return op.p() == 2.0;
        default: return false;
    }
}

/**
 * Closed-form kappa with F(x + c e_1) <= F(x) + c kappa:
 * alpha/2 + beta/m (F0), alpha + beta/m (F1), alpha + beta/2 (F2), 1/m for the
 * arithmetic mean. No closed form for other p-averages or custom rules.
 */
[[nodiscard]] inline std::optional<double> contraction_constant(const averaging_op &op) {
    const double m = op.arity();
    switch (op.family()) {
        case op_family::mean_midrange: return op.alpha() / 2.0 + op.beta() / m;
        case op_family::mean_median: return op.alpha() + op.beta() / m;
        case op_family::median_midrange: return op.alpha() + op.beta() / 2.0;
        case op_family::p_average:
            if (is_arithmetic_mean(op)) {
                return 1.0 / m;
            }
            return std::nullopt;
        default: return std::nullopt;
    }
}

/// Closed-form eta with F(x + c e_1) >= F(x) + c eta: beta/m for F0 and F1 (absent when beta = 0), 1/m for the mean.
[[nodiscard]] inline std::optional<double> expansion_constant(const averaging_op &op) {
    const double m = op.arity();
    switch (op.family()) {
        case op_family::mean_midrange:
        case op_family::mean_median:
            if (op.beta() > 0.0) {
                return op.beta() / m;
            }
            return std::nullopt;
        case op_family::p_average:
            if (is_arithmetic_mean(op)) {
                return 1.0 / m;
            }
            return std::nullopt;
        default: return std::nullopt;
    }
}

/// Parses "F0:alpha=0.5", "F1:alpha=0.5", "F2:alpha=0.5" or "Fp:p=3.5" (beta inferred as 1 - alpha).
[[nodiscard]] inline averaging_op parse_operator(std::string_view spec, unsigned m) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) {
        throw input_error("operator spec '" + std::string(spec) + "' needs the form F1:alpha=0.5 or Fp:p=3");
    }
    const std::string_view head = spec.substr(0, colon);
    const std::string_view rest = spec.substr(colon + 1);
    const auto eq = rest.find('=');
    if (eq == std::string_view::npos) {
        throw input_error("operator parameter '" + std::string(rest) + "' needs key=value");
    }
    const std::string key{rest.substr(0, eq)};
    const std::string text{rest.substr(eq + 1)};
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
    } catch (const std::exception &) {
        throw input_error("operator parameter value '" + text + "' is not a number");
    }

    if (head == "Fp") {
        if (key != "p") {
            throw input_error("Fp takes the parameter p");
        }
        return averaging_op::p_average(m, value);
    }
    if (key != "alpha") {
        throw input_error(std::string(head) + " takes the parameter alpha");
    }
    if (!(value >= 0.0 && value <= 1.0)) {
        throw domain_error("alpha = " + text + " outside [0, 1]");
    }
    if (head == "F0") {
        return averaging_op::mean_midrange(m, value);
    }
    if (head == "F1") {
        return averaging_op::mean_median(m, value);
    }
    if (head == "F2") {
        return averaging_op::median_midrange(m, value);
    }
    throw input_error("unknown operator family '" + std::string(head) + "'");
}

// ---------------------------------------------------------------------------
// Axiom checker

struct axiom_report {
    std::map<std::string, bool> passed;
    std::map<std::string, double> worst_violation;
    double empirical_kappa = 0.0;
    double empirical_eta = 0.0;
    /// Smallest coordinate seen among samples with F(x) >= 0 and max x <= 1.
    double empirical_b = 0.0;
    unsigned samples = 0;
    unsigned strictness_failures = 0;

    [[nodiscard]] bool all_passed() const {
        return std::all_of(passed.begin(), passed.end(), [](const auto &kv) { return kv.second; });
    }
};

/**
 * Samples x uniformly from [-range_bound, range_bound]^m together with random
 * shifts t, increments c > 0 and permutations, and records the worst residual
 * of each axiom. Residuals are scaled by max(1, magnitude of the inputs) so a
 * single tolerance covers every range. Deterministic given the seed.
 *
 * Keys: i, ii, iii, iv, v, permutation, antisymmetry (F(1,0,...,0,-1) = 0),
 * reflection (F(1 - x) = 1 - F(x)), and Pro / Proinf when op has the closed
 * form constant.
 */
[[nodiscard]] inline axiom_report check_axioms(const averaging_op &op, unsigned num_samples, double range_bound = 1.0,
                                               std::uint64_t seed = 0, double tol = 1e-9) {
    if (num_samples == 0) {
        throw domain_error("axiom check needs at least one sample");
    }
    const unsigned m = op.arity();
    const auto kappa = contraction_constant(op);
    const auto eta = expansion_constant(op);

    axiom_report report;
    report.samples = num_samples;
    std::map<std::string, double> &worst = report.worst_violation;
    for (const char *key : {"i", "ii", "iii", "iv", "v", "permutation", "antisymmetry", "reflection"}) {
        worst[key] = 0.0;
    }
    if (kappa) {
        worst["Pro"] = 0.0;
    }
    if (eta) {
        worst["Proinf"] = 0.0;
    }
    auto record = [&worst](const char *key, double residual) { worst[key] = std::max(worst[key], residual); };
    auto F = [&op](const std::vector<double> &x) { return op(x); };

    record("i", std::abs(F(std::vector<double>(m, 0.0))));
    record("i", std::abs(F(std::vector<double>(m, 1.0)) - 1.0));
    {
        std::vector<double> probe(m, 0.0);
        probe.front() = 1.0;
        probe.back() = -1.0;
        record("antisymmetry", std::abs(F(probe)));
    }

    counter_rng rng{seed};
    double kappa_hat = -std::numeric_limits<double>::infinity();
    double eta_hat = std::numeric_limits<double>::infinity();
    double b_hat = std::numeric_limits<double>::infinity();
    std::vector<double> x(m), y(m);

    for (unsigned s = 0; s < num_samples; ++s) {
        for (auto &v : x) {
            v = rng.uniform(-range_bound, range_bound);
        }
        const double t = rng.uniform(-range_bound, range_bound);
        const double c = rng.positive(range_bound);
        const std::size_t j = rng.below(m);
        const double fx = F(x);
        double scale = 1.0;
        for (const double v : x) {
            scale = std::max(scale, std::abs(v));
        }

        // (ii) homogeneity, including negative t
        for (std::size_t k = 0; k < m; ++k) {
            y[k] = t * x[k];
        }
        record("ii", std::abs(F(y) - t * fx) / std::max(1.0, std::abs(t) * scale));

        // (iii) translation
        for (std::size_t k = 0; k < m; ++k) {
            y[k] = x[k] + t;
        }
        record("iii", std::abs(F(y) - fx - t) / std::max(scale, std::abs(t) + scale));

        // (iv) strictly below the max for non-constant input
        const double xmax = *std::max_element(x.begin(), x.end());
        const double xmin = *std::min_element(x.begin(), x.end());
        record("iv", std::max(0.0, fx - xmax) / scale);
        if (xmax > xmin && fx >= xmax) {
            ++report.strictness_failures;
        }

        // (v) monotone in coordinate j
        y = x;
        y[j] += c;
        const double fy_j = F(y);
        record("v", std::max(0.0, fx - fy_j) / (scale + c));

        // permutation invariance
        y = x;
        rng.shuffle(std::span<double>(y));
        record("permutation", std::abs(F(y) - fx) / scale);

        // reflection F(1 - x) = 1 - F(x)
        for (std::size_t k = 0; k < m; ++k) {
            y[k] = 1.0 - x[k];
        }
        record("reflection", std::abs(F(y) - (1.0 - fx)) / (1.0 + scale));

        // (Pro) / (Proinf) on the first coordinate
        y = x;
        y[0] += c;
        const double slope = (F(y) - fx) / c;
        kappa_hat = std::max(kappa_hat, slope);
        eta_hat = std::min(eta_hat, slope);
        if (kappa) {
            record("Pro", std::max(0.0, slope - *kappa) * c / (scale + c));
        }
        if (eta) {
            record("Proinf", std::max(0.0, *eta - slope) * c / (scale + c));
        }

        // Boundedness below: shift x so its max is 1 and keep it if F stays >= 0.
        for (std::size_t k = 0; k < m; ++k) {
            y[k] = x[k] - xmax + 1.0;
        }
        if (F(y) >= 0.0) {
            b_hat = std::min(b_hat, *std::min_element(y.begin(), y.end()));
        }
    }

    report.empirical_kappa = kappa_hat;
    report.empirical_eta = eta_hat;
    report.empirical_b = std::isfinite(b_hat) ? b_hat : 0.0;
    for (const auto &[key, residual] : worst) {
        report.passed[key] = residual <= tol;
    }
    report.passed["iv"] = report.passed["iv"] && report.strictness_failures == 0;
    return report;
}

}  // namespace treeharmonic
