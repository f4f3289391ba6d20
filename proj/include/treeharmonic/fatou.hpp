#pragma once

/**
 * @file fatou.hpp
 * @brief tau(m, F) = min { sum_j e^(x_j) : F(x) = 0 } and log_m tau.
 *
 * Translation equivariance removes the constraint: for any y, the point
 * y - F(y) 1 is feasible, so tau is the unconstrained minimum of
 * g(y) = sum_j exp(y_j - F(y)). The last coordinate of y is pinned to 0
 * because g is invariant under y -> y + t 1.
 */

#include "error.hpp"
#include "operators.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scalar.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace treeharmonic {

struct tau_result {
    double tau = 0.0;
    /// Feasible minimizer x with F(x) = 0, sorted ascending.
    std::vector<double> minimizer;
    double dim = 0.0;
    double constraint_residual = 0.0;
    std::optional<double> closed_form;
    std::optional<double> discrepancy;
    /// Restarts whose simplex shrank below tol or stalled at machine precision.
    unsigned converged_restarts = 0;
    unsigned restarts = 0;
};

namespace detail {

struct tau_objective {
    const averaging_op *op;
    std::vector<double> y;

    double operator()(const gsl_vector *v) {
        for (std::size_t j = 0; j + 1 < y.size(); ++j) {
            y[j] = gsl_vector_get(v, j);
        }
        y.back() = 0.0;
        for (const double value : y) {
            if (!std::isfinite(value)) {
                return std::numeric_limits<double>::max();
            }
        }
        const double shift = (*op)(y);
        double sum = 0.0;
        for (const double value : y) {
            sum += std::exp(std::min(value - shift, 700.0));
        }
        return sum;
    }

    static double call(const gsl_vector *v, void *self) { return (*static_cast<tau_objective *>(self))(v); }
};

struct simplex_outcome {
    std::vector<double> y;
    double value = std::numeric_limits<double>::infinity();
    bool converged = false;
};

inline simplex_outcome run_simplex(tau_objective &objective, const std::vector<double> &start, double step, double tol,
                                   unsigned max_iterations) {
    const std::size_t dim = start.size();
    gsl_multimin_function fn{&tau_objective::call, dim, &objective};
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(dim), &gsl_vector_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> steps(gsl_vector_alloc(dim), &gsl_vector_free);
    for (std::size_t j = 0; j < dim; ++j) {
        gsl_vector_set(x.get(), j, start[j]);
        gsl_vector_set(steps.get(), j, step);
    }
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim), &gsl_multimin_fminimizer_free);
    simplex_outcome out;
    if (gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), steps.get()) != GSL_SUCCESS) {
        return out;
    }
    // Near the optimum g is flat to machine precision, so the simplex can stall
    // above tol; a stall on a simplex smaller than stall_size also counts.
    constexpr double stall_size = 1e-6;
    const unsigned patience = 100 + 50 * static_cast<unsigned>(dim);
    double best_value = gsl_multimin_fminimizer_minimum(solver.get());
    unsigned idle = 0;
    for (unsigned it = 0; it < max_iterations; ++it) {
        const int status = gsl_multimin_fminimizer_iterate(solver.get());
        const double size = gsl_multimin_fminimizer_size(solver.get());
        if (status != GSL_SUCCESS) {
            out.converged = size <= stall_size;
            break;
        }
        if (gsl_multimin_test_size(size, tol) == GSL_SUCCESS) {
            out.converged = true;
            break;
        }
        const double value = gsl_multimin_fminimizer_minimum(solver.get());
        idle = value < best_value ? 0 : idle + 1;
        best_value = std::min(best_value, value);
        if (idle >= patience) {
            out.converged = size <= stall_size;
            break;
        }
    }
    const gsl_vector *best = gsl_multimin_fminimizer_x(solver.get());
    out.y.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        out.y[j] = gsl_vector_get(best, j);
    }
    out.value = gsl_multimin_fminimizer_minimum(solver.get());
    return out;
}

/// GSL's default handler aborts; failures here are reported through return codes instead.
inline void silence_gsl() {
    static const bool once = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void) once;
}

}  // namespace detail

inline constexpr unsigned default_tau_restarts = 64;

/**
 * Multistart Nelder-Mead (GSL nmsimplex2) on g. Starts are log-ratios of
 * exponential variates (a symmetric Dirichlet spread); each run is restarted
 * from its own best point until it stops improving. Restarts run in parallel
 * and the lowest value wins, ties to the lower restart index.
 */
[[nodiscard]] inline tau_result tau_minimize(const averaging_op &op, unsigned restarts = default_tau_restarts,
                                             double tol = 1e-10, std::uint64_t seed = 0) {
    if (restarts == 0) {
        throw domain_error("tau_minimize needs at least one restart");
    }
    detail::silence_gsl();
    const unsigned m = op.arity();
    const std::size_t dim = m - 1;

    std::vector<detail::simplex_outcome> outcomes(restarts);
    parallel_for(restarts, [&](std::size_t r) {
        counter_rng rng{seed, r + 1};
        std::vector<double> start(dim);
        const double anchor = std::log(rng.exponential());
        for (auto &v : start) {
            v = std::log(rng.exponential()) - anchor;
        }
        if (r == 0) {
            std::fill(start.begin(), start.end(), 0.0);
        }
        detail::tau_objective objective{&op, std::vector<double>(m, 0.0)};
        auto best = detail::run_simplex(objective, start, 1.0, tol, 20000);
        for (int polish = 0; polish < 30; ++polish) {
            auto next = detail::run_simplex(objective, best.y, 0.05, tol, 20000);
            const bool improved = next.value < best.value * (1.0 - 1e-15);
            if (next.value <= best.value) {
                next.converged = next.converged || best.converged;
                best = std::move(next);
            }
            if (!improved) {
                break;
            }
        }
        outcomes[r] = std::move(best);
    }, 1);

    tau_result result;
    result.restarts = restarts;
    std::size_t winner = restarts;
    for (std::size_t r = 0; r < restarts; ++r) {
        if (outcomes[r].converged) {
            ++result.converged_restarts;
        }
        if (std::isfinite(outcomes[r].value) && (winner == restarts || outcomes[r].value < outcomes[winner].value)) {
            winner = r;
        }
    }
    if (winner == restarts || result.converged_restarts == 0) {
        const double best = winner == restarts ? std::numeric_limits<double>::infinity() : outcomes[winner].value;
        throw optimization_error("no simplex restart converged for " + op.name(), best);
    }

    std::vector<double> y(outcomes[winner].y);
    y.push_back(0.0);
    const double shift = op(y);
    for (auto &v : y) {
        v -= shift;
    }
    std::sort(y.begin(), y.end());
    double tau = 0.0;
    for (const double v : y) {
        tau += std::exp(v);
    }
    result.tau = tau;
    result.minimizer = std::move(y);
    result.dim = log_base(tau, m);
    result.constraint_residual = std::abs(op(result.minimizer));
    return result;
}

/// Weights c_i with F(x) = sum_i c_i x_(i) over the ascending order statistics.
[[nodiscard]] inline std::vector<double> order_statistic_weights(const averaging_op &op) {
    const unsigned m = op.arity();
    std::vector<double> c(m, 0.0);
    const auto add_median = [&](double w) {
        if (m % 2 == 1) {
            c[m / 2] += w;
        } else {
            c[m / 2 - 1] += w / 2.0;
            c[m / 2] += w / 2.0;
        }
    };
    const auto add_mean = [&](double w) {
        for (auto &v : c) {
            v += w / m;
        }
    };
    const auto add_midrange = [&](double w) {
        c.front() += w / 2.0;
        c.back() += w / 2.0;
    };
    switch (op.family()) {
        case op_family::mean_midrange:
            add_midrange(op.alpha());
            add_mean(op.beta());
            break;
        case op_family::mean_median:
            add_median(op.alpha());
            add_mean(op.beta());
            break;
        case op_family::median_midrange:
            add_median(op.alpha());
            add_midrange(op.beta());
            break;
        case op_family::p_average:
            if (is_arithmetic_mean(op)) {
                add_mean(1.0);
                break;
            }
            [[fallthrough]];
        default: throw unsupported_operator_error(op.name() + " is not an order-statistic rule");
    }
    return c;
}

/**
 * tau for order-statistic rules, exactly: on sorted x the problem is convex,
 * and the KKT conditions make x constant on the blocks found by pooling
 * adjacent violators of c; then tau = prod_b (s_b / W_b)^(W_b) with block
 * sizes s_b and weights W_b. Blocks of weight 0 are sent to -infinity.
 */
[[nodiscard]] inline tau_result tau_order_statistic(const averaging_op &op) {
    const auto c = order_statistic_weights(op);
    struct block {
        double weight;
        double size;
    };
    std::vector<block> blocks;
    for (const double w : c) {
        blocks.push_back({w, 1.0});
        while (blocks.size() > 1) {
            const auto &last = blocks.back();
            const auto &prev = blocks[blocks.size() - 2];
            if (prev.weight / prev.size <= last.weight / last.size) {
                break;
            }
            const block merged{prev.weight + last.weight, prev.size + last.size};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    double log_tau = 0.0;
    for (const auto &b : blocks) {
        if (b.weight > 0.0) {
            log_tau += b.weight * std::log(b.size / b.weight);
        }
    }
    tau_result result;
    result.tau = std::exp(log_tau);
    result.dim = log_tau / std::log(static_cast<double>(op.arity()));
    for (const auto &b : blocks) {
        const double x = b.weight > 0.0 ? log_tau + std::log(b.weight / b.size) : -std::numeric_limits<double>::infinity();
        result.minimizer.insert(result.minimizer.end(), static_cast<std::size_t>(b.size), x);
    }
    return result;
}

/// Which reading of the even/odd rule for s is used in the F1 closed form.
enum class s_convention {
    /// s = floor(m/2) + 1 for odd m, m/2 for even m (as printed).
    printed,
    /// s = (m - 1)/2 for odd m, m/2 + 1 for even m (odd and even swapped).
    swapped,
};

[[nodiscard]] inline std::string to_string(s_convention c) {
    return c == s_convention::printed ? "printed" : "swapped";
}

struct closed_form {
    double tau = 0.0;
    double dim = 0.0;
    /// Displayed minimizer, in the displayed coordinate order.
    std::vector<double> minimizer;
    unsigned s = 0;
};

namespace detail {

inline void require_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw domain_error("closed forms need 0 <= alpha < 1 (alpha = 1 is singular)");
    }
}

}  // namespace detail

[[nodiscard]] inline unsigned f1_s(unsigned m, s_convention convention) {
    if (convention == s_convention::printed) {
        return m % 2 == 1 ? m / 2 + 1 : m / 2;
    }
    return m % 2 == 1 ? (m - 1) / 2 : m / 2 + 1;
}

/**
 * log_m( m/(1-a) * ((m-s+1)(1-a) / (m+(1-s)(1-a)))^(1 - (s-1)(1-a)/m) ), with
 * minimizer x_i = -(m+(1-s)(1-a))/m log g for i < s and (s-1)(1-a)/m log g
 * otherwise, g = (m+(1-s)(1-a)) / ((m-s+1)(1-a)).
 */
[[nodiscard]] inline closed_form tau_closed_form_F1(unsigned m, double alpha,
                                                    s_convention convention = s_convention::printed) {
    detail::require_alpha(alpha);
    if (m < 3) {
        throw domain_error("arity m must be at least 3");
    }
    const unsigned s = f1_s(m, convention);
    const double b = 1.0 - alpha;
    const double md = m;
    const double sd = s;
    const double ratio = (md + (1.0 - sd) * b) / ((md - sd + 1.0) * b);
    const double log_tau = std::log(md / b) - (1.0 - (sd - 1.0) / md * b) * std::log(ratio);
    closed_form out;
    out.s = s;
    out.tau = std::exp(log_tau);
    out.dim = log_tau / std::log(md);
    out.minimizer.resize(m);
    for (unsigned i = 1; i <= m; ++i) {
        out.minimizer[i - 1] = i <= s - 1 ? -(md + (1.0 - sd) * b) / md * std::log(ratio) : (sd - 1.0) * b / md * std::log(ratio);
    }
    return out;
}

/**
 * log_m( 2(m-1)(1+a)^(-(1+a)/2) / ((m-1)(1-a))^((1-a)/2) ), with the displayed
 * two-regime minimizer built from e = (1+a)/((m-1)(1-a)).
 */
[[nodiscard]] inline closed_form tau_closed_form_F2(unsigned m, double alpha) {
    detail::require_alpha(alpha);
    if (m < 3) {
        throw domain_error("arity m must be at least 3");
    }
    const double md = m;
    const double log_tau = std::log(2.0 * (md - 1.0)) - (1.0 + alpha) / 2.0 * std::log1p(alpha) -
                           (1.0 - alpha) / 2.0 * std::log((md - 1.0) * (1.0 - alpha));
    closed_form out;
    out.tau = std::exp(log_tau);
    out.dim = log_tau / std::log(md);
    const double e = (1.0 + alpha) / ((md - 1.0) * (1.0 - alpha));
    const double low = (1.0 - alpha) / 2.0 * std::log(e);
    const double high = -(1.0 + alpha) / 2.0 * std::log(e);
    out.minimizer.assign(m, low);
    if (alpha <= (md - 2.0) / md) {
        out.minimizer.back() = high;
    } else {
        out.minimizer.front() = high;
    }
    return out;
}

enum class tau_family { F1, F2 };

struct dim_row {
    unsigned m = 0;
    double alpha = 0.0;
    std::optional<double> dim_numeric;
    double dim_exact = 0.0;
    double dim_closed = 0.0;
    double limit = 0.0;
};

/**
 * dim = log_m tau across a grid of m with the limit the closed forms approach
 * (1 for F1, (1+alpha)/2 for F2). The simplex search runs only for
 * m <= numeric_max_m; the order-statistic value is exact for every m.
 */
[[nodiscard]] inline std::vector<dim_row> dim_limits_sweep(tau_family family, double alpha,
                                                           const std::vector<unsigned> &m_grid,
                                                           unsigned numeric_max_m = 12,
                                                           unsigned restarts = default_tau_restarts,
                                                           std::uint64_t seed = 0) {
    std::vector<dim_row> rows;
    for (const unsigned m : m_grid) {
        const auto op = family == tau_family::F1 ? averaging_op::mean_median(m, alpha) : averaging_op::median_midrange(m, alpha);
        dim_row row;
        row.m = m;
        row.alpha = alpha;
        row.dim_exact = tau_order_statistic(op).dim;
        row.dim_closed = family == tau_family::F1 ? tau_closed_form_F1(m, alpha).dim : tau_closed_form_F2(m, alpha).dim;
        row.limit = family == tau_family::F1 ? 1.0 : (1.0 + alpha) / 2.0;
        if (m <= numeric_max_m) {
            row.dim_numeric = tau_minimize(op, restarts, 1e-10, seed).dim;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace treeharmonic
