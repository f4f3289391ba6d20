#pragma once

#include <treeharmonic/csv.hpp>
#include <treeharmonic/dirichlet.hpp>
#include <treeharmonic/fatou.hpp>
#include <treeharmonic/measure.hpp>
#include <treeharmonic/operators.hpp>
#include <treeharmonic/parallel.hpp>
#include <treeharmonic/random.hpp>
#include <treeharmonic/tree.hpp>
#include <treeharmonic/ucp.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace treeharmonic::acceptance {

struct options {
    std::uint64_t seed = 7;
    unsigned tau_restarts = default_tau_restarts;
};

struct outcome {
    unsigned id = 0;
    std::string title;
    bool checks_passed = false;
    /// One deterministic line of measured quantities against their tolerances.
    std::string summary;
    std::vector<std::string> notes;
    double seconds = 0.0;
    /// Wall-clock budget in seconds, 0 when the criterion has none.
    double budget = 0.0;

    [[nodiscard]] bool within_budget() const { return budget <= 0.0 || seconds <= budget; }
    [[nodiscard]] bool passed() const { return checks_passed && within_budget(); }
};

namespace detail {

inline std::string sci(double x) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(3) << x;
    return s.str();
}

inline std::string fixed(double x, int digits = 6) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << x;
    return s.str();
}

/// Largest value and the index where it first occurs.
struct worst_of {
    double value = -std::numeric_limits<double>::infinity();
    std::size_t where = 0;
    std::size_t failures = 0;

    void add(double v, std::size_t i, bool failed) {
        if (v > value) {
            value = v;
            where = i;
        }
        failures += failed ? 1 : 0;
    }
};

/// All single cells and all adjacent pairs of level n.
inline std::vector<madic_union> singles_and_pairs(unsigned m, unsigned n) {
    const std::uint64_t size = level_size(m, n);
    std::vector<madic_union> out;
    out.reserve(2 * size);
    for (std::uint64_t j = 0; j < size; ++j) {
        out.push_back(madic_union::cells(m, n, j, j));
    }
    for (std::uint64_t j = 0; j + 1 < size; ++j) {
        out.push_back(madic_union::cells(m, n, j, j + 1));
    }
    return out;
}

/// Product of the linear weights F(e_d) along the digits of cell j at level k.
inline double linear_weight_product(const averaging_op &op, unsigned k, std::uint64_t j) {
    const unsigned m = op.arity();
    double w = 1.0;
    for (unsigned level = 0; level < k; ++level) {
        std::vector<double> unit(m, 0.0);
        unit[j % m] = 1.0;
        w *= op(unit);
        j /= m;
    }
    return w;
}

inline std::string case_label(const averaging_op &op, const std::string &f, const madic_union &I, double c) {
    return "m=" + std::to_string(op.arity()) + " " + op.name() + " f=" + f + " I=" + I.to_string() + " c=" + format_double(c);
}

struct sweep_case {
    std::string label;
    double excess = 0.0;
    bool failed = false;
};

/**
 * Runs check(engine, I, c) over m in {3, 4}, the given operators, f in
 * {const 0, identity}, n = 1..6, all single cells and adjacent pairs and
 * every c. check returns the excess over the tolerance line (<= 0 passes).
 */
inline std::vector<sweep_case> bound_sweep(const std::function<std::vector<averaging_op>(unsigned)> &ops_for,
                                           const std::vector<double> &cs,
                                           const std::function<double(const gap_engine &, const madic_union &, double)> &check,
                                           std::size_t &checked) {
    const std::vector<std::pair<std::string, boundary_data>> data{{"const:0", boundary_data::constant(0.0)},
                                                                   {"id", boundary_data::identity()}};
    std::vector<sweep_case> worst;
    checked = 0;
    for (const unsigned m : {3U, 4U}) {
        for (const auto &op : ops_for(m)) {
            for (const auto &[fname, f] : data) {
                for (unsigned n = 1; n <= 6; ++n) {
                    const gap_engine engine(op, f, n);
                    const auto cells = singles_and_pairs(m, n);
                    std::vector<double> excess(cells.size() * cs.size());
                    parallel_for(cells.size(), [&](std::size_t i) {
                        for (std::size_t ci = 0; ci < cs.size(); ++ci) {
                            excess[i * cs.size() + ci] = check(engine, cells[i], cs[ci]);
                        }
                    }, 64);
                    worst_of w;
                    for (std::size_t i = 0; i < excess.size(); ++i) {
                        w.add(excess[i], i, excess[i] > 0.0);
                    }
                    checked += excess.size();
                    const auto &I = cells[w.where / cs.size()];
                    worst.push_back({case_label(op, fname, I, cs[w.where % cs.size()]), w.value, w.failures > 0});
                }
            }
        }
    }
    return worst;
}

inline void summarize_sweep(outcome &out, const std::vector<sweep_case> &cases, std::size_t checked,
                            const std::string &what) {
    std::size_t failed_groups = 0;
    const sweep_case *worst = &cases.front();
    for (const auto &c : cases) {
        failed_groups += c.failed ? 1 : 0;
        if (c.excess > worst->excess) {
            worst = &c;
        }
        if (c.failed) {
            out.notes.push_back("violation: " + c.label + " excess " + sci(c.excess));
        }
    }
    out.checks_passed = failed_groups == 0;
    out.summary = std::to_string(checked) + " " + what + " checks, worst margin " + sci(worst->excess) + " at " + worst->label;
}

template <typename Body>
outcome timed(unsigned id, std::string title, double budget, Body &&body) {
    outcome out;
    out.id = id;
    out.title = std::move(title);
    out.budget = budget;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(out);
    } catch (const std::exception &e) {
        out.checks_passed = false;
        out.summary = std::string("error: ") + e.what();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace detail

/// Harmonic measure of single cells under linear rules equals the weight product.
inline outcome linear_exactness(const options &) {
    return detail::timed(1, "linear exactness", 1.0, [](outcome &out) {
        double worst = 0.0;
        std::size_t cells = 0;
        for (const auto &op : {averaging_op::p_average(3, 2.0), averaging_op::mean_midrange(3, 0.0)}) {
            for (unsigned k = 1; k <= 6; ++k) {
                const std::uint64_t size = level_size(3, k);
                std::vector<double> err(size);
                parallel_for(size, [&](std::size_t j) {
                    const double w = harmonic_measure(op, madic_union::cells(3, k, j, j));
                    err[j] = std::max(std::abs(w - std::pow(3.0, -static_cast<double>(k))),
                                      std::abs(w - detail::linear_weight_product(op, k, j)));
                }, 16);
                worst = std::max(worst, *std::max_element(err.begin(), err.end()));
                cells += size;
            }
        }
        out.checks_passed = worst <= 1e-12;
        out.summary = std::to_string(cells) + " cells, worst |omega - 3^-k| " + detail::sci(worst) + " (tol 1e-12)";
    });
}

/// gap <= 2c(m|I|)^gamma, and the raw forms c kappa^n (single) and 2c kappa^n (pair).
inline outcome upper_bound_sweep(const options &) {
    return detail::timed(2, "upper perturbation bounds", 30.0, [](outcome &out) {
        std::size_t checked = 0;
        const auto cases = detail::bound_sweep(
            [](unsigned m) {
                return std::vector<averaging_op>{averaging_op::mean_median(m, 0.25), averaging_op::mean_median(m, 0.5),
                                                 averaging_op::mean_median(m, 0.75)};
            },
            {0.5, 1.0, 2.0},
            [](const gap_engine &engine, const madic_union &I, double c) {
                const auto r = check_upper_bounds(engine, I, c);
                double excess = std::max(r.measured_gap - r.bound_general, -r.measured_gap) - bound_tolerance;
                if (r.bound_raw) {
                    excess = std::max(excess, r.measured_gap - *r.bound_raw - bound_tolerance);
                }
                return excess;
            },
            checked);
        detail::summarize_sweep(out, cases, checked, "upper-bound");
    });
}

/// v(root) <= w_l(root) <= v(root) + 2c kappa^(n+l), w_l nonincreasing in l.
inline outcome upper_class_infimum(const options &opt) {
    return detail::timed(3, "upper-class infimum", 0.0, [&opt](outcome &out) {
        const auto op = averaging_op::mean_median(3, 0.5);
        counter_rng rng{opt.seed, 3};
        double worst_window = -std::numeric_limits<double>::infinity();
        double worst_increase = -std::numeric_limits<double>::infinity();
        bool ok = true;
        for (int config = 0; config < 10; ++config) {
            const unsigned n = 1 + static_cast<unsigned>(rng.below(4));
            const std::uint64_t size = level_size(3, n);
            const std::uint64_t k0 = rng.below(size);
            const std::uint64_t k1 = std::min(size - 1, k0 + rng.below(2));
            const double c = rng.uniform(0.25, 2.0);
            const auto I = madic_union::cells(3, n, k0, k1);
            const gap_engine engine(op, boundary_data::sine(1.0), n + 5);
            double previous = std::numeric_limits<double>::infinity();
            std::ostringstream row;
            row << "I=" << I.to_string() << " c=" << detail::fixed(c, 4) << " w_l-v:";
            for (unsigned l = 1; l <= 5; ++l) {
                const auto w = approximating_upper_class(engine, I, c, l);
                const double window = std::max(w.v_root - w.w_root, w.w_root - w.v_root - w.certified_gap);
                worst_window = std::max(worst_window, window);
                worst_increase = std::max(worst_increase, w.w_root - previous);
                ok = ok && w.within && w.w_root <= previous + 1e-10;
                previous = w.w_root;
                row << ' ' << detail::sci(w.w_root - w.v_root);
            }
            out.notes.push_back(row.str());
        }
        out.checks_passed = ok;
        out.summary = "10 configs x l=1..5, worst window excess " + detail::sci(worst_window) +
                      ", worst increase in l " + detail::sci(worst_increase) + " (tol 1e-10)";
    });
}

/// gap >= c(|I|/(2m))^theta for the mean and F1 with alpha <= 1/2.
inline outcome lower_bound_sweep(const options &) {
    return detail::timed(4, "lower perturbation bound", 0.0, [](outcome &out) {
        std::size_t checked = 0;
        const auto cases = detail::bound_sweep(
            [](unsigned m) {
                return std::vector<averaging_op>{averaging_op::p_average(m, 2.0), averaging_op::mean_median(m, 0.25),
                                                 averaging_op::mean_median(m, 0.5)};
            },
            {0.5, 1.0, 2.0},
            [](const gap_engine &engine, const madic_union &I, double c) {
                const auto r = check_lower_bound(engine, I, c);
                return *r.lower_bound - r.measured_gap - bound_tolerance;
            },
            checked);
        detail::summarize_sweep(out, cases, checked, "lower-bound");
    });
}

/// |u_n(root) - u_(n+3)(root)| <= 3^-n for identity data; exact mean values.
inline outcome dirichlet_error(const options &) {
    return detail::timed(5, "Dirichlet discretization error", 0.0, [](outcome &out) {
        const auto f = boundary_data::identity();
        double worst_ratio = 0.0;
        double worst_exact = 0.0;
        bool ok = true;
        for (const auto &op : {averaging_op::p_average(3, 2.0), averaging_op::mean_median(3, 0.5),
                               averaging_op::mean_midrange(3, 0.5)}) {
            for (unsigned n = 1; n <= 6; ++n) {
                const double un = solve(op, f, n).root();
                const double diff = std::abs(un - solve(op, f, n + 3).root());
                const double bound = std::pow(3.0, -static_cast<double>(n));
                worst_ratio = std::max(worst_ratio, diff / bound);
                ok = ok && diff <= bound;
                if (op.family() == op_family::p_average) {
                    const double exact = (bound * 0.5) * (std::pow(3.0, n) - 1.0);
                    worst_exact = std::max(worst_exact, std::abs(un - exact));
                }
            }
        }
        ok = ok && worst_exact <= 1e-12;
        out.checks_passed = ok;
        out.summary = "worst |u_n - u_(n+3)| / 3^-n " + detail::fixed(worst_ratio) + " (<= 1), worst mean error " +
                      detail::sci(worst_exact) + " (tol 1e-12)";
    });
}

/// f <= g on the boundary gives u - v <= max boundary (f - g) inside.
inline outcome comparison_principle(const options &opt) {
    return detail::timed(6, "comparison principle", 0.0, [&opt](outcome &out) {
        const unsigned m = 3;
        const unsigned n = 5;
        const std::uint64_t size = level_size(m, n);
        double worst = 0.0;
        bool ok = true;
        for (int family = 0; family < 4; ++family) {
            counter_rng rng{opt.seed, 60 + static_cast<std::uint64_t>(family)};
            double family_worst = 0.0;
            for (int trial = 0; trial < 100; ++trial) {
                const double alpha = rng.unit();
                const averaging_op op = family == 0   ? averaging_op::mean_midrange(m, alpha)
                                        : family == 1 ? averaging_op::mean_median(m, alpha)
                                        : family == 2 ? averaging_op::median_midrange(m, alpha)
                                                      : averaging_op::p_average(m, 1.5 + 6.5 * alpha);
                std::vector<double> f(size), g(size);
                for (std::uint64_t j = 0; j < size; ++j) {
                    f[j] = rng.uniform(-1.0, 1.0);
                    g[j] = f[j] + (rng.below(3) == 0 ? 0.0 : rng.positive(1.0));
                }
                const auto u = solve<double>(op, f);
                const auto v = solve<double>(op, g);
                const double excess = comparison_check(u, v);
                family_worst = std::max(family_worst, excess);
                ok = ok && excess <= 1e-10;
            }
            worst = std::max(worst, family_worst);
            const char *names[] = {"F0", "F1", "F2", "Fp"};
            out.notes.push_back(std::string(names[family]) + ": worst interior excess " + detail::sci(family_worst));
        }
        out.checks_passed = ok;
        out.summary = "400 pairs at m=3 n=5, worst excess " + detail::sci(worst) + " (tol 1e-10)";
    });
}

/// Exact counterexample for F1(1/2), m = 3, rho = (2, 2, 2), and the pattern verdicts.
inline outcome ucp_counterexample(const options &) {
    return detail::timed(7, "unique continuation counterexample", 0.0, [](outcome &out) {
        const auto op = averaging_op::mean_median(3, 0.5);
        const std::vector<unsigned> rho{2, 2, 2};
        const auto ce = build_counterexample<rational>(op, rho, 6);
        bool ok = ce.delta == rational(1, 6) && ce.residual == 0 && ce.vanishes_on_u;
        std::size_t zero_hits = 0;
        const auto U = canonical_u_set(3, rho);
        for (const auto &x : U) {
            zero_hits += ce.u.at(x) == 0 ? 1 : 0;
        }
        ok = ok && zero_hits == U.size();
        rational expected(1);
        std::ostringstream maxima;
        for (std::size_t k = 0; k < rho.size(); ++k) {
            expected *= rational(36, 35);
            ok = ok && ce.level_max.at(k) == expected && ce.mk.at(k) == expected;
            maxima << (k ? ", " : "") << ce.level_max[k];
        }
        const auto holds = classify_pattern(1.0 / 6.0, rho_pattern::constant(2));
        const auto fails = classify_pattern(1.0 / 6.0, rho_pattern::linear(1, 0));
        ok = ok && holds == ucp_verdict::holds && fails == ucp_verdict::fails;
        out.checks_passed = ok;
        out.summary = "residual " + ce.residual.str() + ", zero on " + std::to_string(zero_hits) + "/" +
                      std::to_string(U.size()) + " vertices of U, level maxima " + maxima.str() + ", Constant(2) -> " +
                      to_string(holds) + ", Linear(1,0) -> " + to_string(fails);
    });
}

/// Simplex tau against both closed forms, the mean, and the large-m limit of F2.
inline outcome tau_cross_check(const options &opt) {
    return detail::timed(8, "tau cross-check", 120.0, [&opt](outcome &out) {
        const std::vector<double> alphas{0.0, 0.25, 0.5, 0.75};
        bool f1_ok = true;
        bool f2_ok = true;
        bool mean_ok = true;
        bool residual_ok = true;
        std::size_t printed = 0;
        std::size_t swapped = 0;
        std::size_t f2_mismatch = 0;
        double worst_residual = 0.0;
        double worst_mean = 0.0;
        double worst_f1 = 0.0;
        for (unsigned m = 3; m <= 8; ++m) {
            const auto mean = tau_minimize(averaging_op::p_average(m, 2.0), opt.tau_restarts, 1e-10, opt.seed);
            worst_mean = std::max(worst_mean, std::abs(mean.dim - 1.0));
            mean_ok = mean_ok && std::abs(mean.dim - 1.0) <= 1e-9;
            for (const double alpha : alphas) {
                const auto f1 = averaging_op::mean_median(m, alpha);
                const auto r1 = tau_minimize(f1, opt.tau_restarts, 1e-10, opt.seed);
                const double dp = std::abs(r1.dim - tau_closed_form_F1(m, alpha, s_convention::printed).dim);
                const double ds = std::abs(r1.dim - tau_closed_form_F1(m, alpha, s_convention::swapped).dim);
                printed += dp <= 1e-6 ? 1 : 0;
                swapped += ds <= 1e-6 ? 1 : 0;
                worst_f1 = std::max(worst_f1, std::min(dp, ds));
                f1_ok = f1_ok && std::min(dp, ds) <= 1e-6;

                const auto f2 = averaging_op::median_midrange(m, alpha);
                const auto r2 = tau_minimize(f2, opt.tau_restarts, 1e-10, opt.seed);
                const double closed2 = tau_closed_form_F2(m, alpha).dim;
                if (std::abs(r2.dim - closed2) > 1e-6) {
                    f2_ok = false;
                    ++f2_mismatch;
                    out.notes.push_back("F2 m=" + std::to_string(m) + " alpha=" + format_double(alpha) + ": simplex dim " +
                                        detail::fixed(r2.dim, 9) + ", order-statistic dim " +
                                        detail::fixed(tau_order_statistic(f2).dim, 9) + ", closed form " +
                                        detail::fixed(closed2, 9));
                }
                worst_residual = std::max({worst_residual, r1.constraint_residual, r2.constraint_residual});
                residual_ok = residual_ok && r1.constraint_residual <= 1e-9 && r2.constraint_residual <= 1e-9;
            }
        }
        bool limit_ok = true;
        for (const double alpha : alphas) {
            const double dim = tau_order_statistic(averaging_op::median_midrange(200, alpha)).dim;
            const double limit = (1.0 + alpha) / 2.0;
            limit_ok = limit_ok && std::abs(dim - limit) <= 0.02;
            out.notes.push_back("F2 m=200 alpha=" + format_double(alpha) + ": dim " + detail::fixed(dim) + ", limit " +
                                detail::fixed(limit, 4) + ", distance " + detail::fixed(std::abs(dim - limit)) +
                                " (tol 0.02)");
        }
        out.checks_passed = f1_ok && f2_ok && mean_ok && residual_ok && limit_ok;
        out.summary = "F1 matched printed s " + std::to_string(printed) + "/24, swapped s " + std::to_string(swapped) +
                      "/24, worst F1 " + detail::sci(worst_f1) + "; F2 closed form off in " + std::to_string(f2_mismatch) +
                      "/24; mean dim error " + detail::sci(worst_mean) + "; worst residual " + detail::sci(worst_residual) +
                      "; m=200 limit " + (limit_ok ? "met" : "missed");
    });
}

/// Seeded axiom fuzzing of every family.
inline outcome axiom_fuzzing(const options &opt) {
    return detail::timed(9, "axiom fuzzing", 0.0, [&opt](outcome &out) {
        const std::vector<std::string> keys{"i", "ii", "iii", "iv", "v", "permutation", "antisymmetry", "reflection"};
        bool ok = true;
        double worst_order = 0.0;
        double worst_p = 0.0;
        double worst_kappa_excess = -1.0;
        std::size_t checked = 0;
        auto run = [&](const averaging_op &op, double tol) {
            const auto r = check_axioms(op, 10000, 1.0, opt.seed, tol);
            ++checked;
            double worst = 0.0;
            for (const auto &key : keys) {
                worst = std::max(worst, r.worst_violation.at(key));
                if (!r.passed.at(key)) {
                    ok = false;
                    out.notes.push_back("violation: m=" + std::to_string(op.arity()) + " " + op.name() + " axiom " + key +
                                        " residual " + detail::sci(r.worst_violation.at(key)));
                }
            }
            return std::pair{r, worst};
        };
        for (const unsigned m : {3U, 4U, 5U}) {
            for (const double alpha : {0.25, 0.5, 0.75}) {
                for (const auto &op : {averaging_op::mean_midrange(m, alpha), averaging_op::mean_median(m, alpha)}) {
                    const auto [r, worst] = run(op, 1e-9);
                    worst_order = std::max(worst_order, worst);
                    const double excess = r.empirical_kappa - *contraction_constant(op);
                    worst_kappa_excess = std::max(worst_kappa_excess, excess);
                    ok = ok && excess <= 1e-9;
                }
                const auto f2 = averaging_op::median_midrange(m, alpha);
                const auto [r, worst] = run(f2, 1e-9);
                worst_order = std::max(worst_order, worst);
                out.notes.push_back("F2 m=" + std::to_string(m) + " alpha=" + format_double(alpha) + ": empirical kappa " +
                                    detail::fixed(r.empirical_kappa) + " vs alpha+beta/2 = " +
                                    detail::fixed(*contraction_constant(f2)) + " (upper slope bound " +
                                    (r.empirical_kappa <= *contraction_constant(f2) + 1e-9 ? "holds" : "fails") +
                                    "), empirical lower slope " + detail::fixed(r.empirical_eta));
            }
        }
        for (const unsigned m : {3U, 4U}) {
            for (const double p : {1.5, 2.0, 3.0, 8.0}) {
                const auto [r, worst] = run(averaging_op::p_average(m, p), 1e-7);
                worst_p = std::max(worst_p, worst);
                out.notes.push_back("Fp m=" + std::to_string(m) + " p=" + format_double(p) + ": empirical kappa " +
                                    detail::fixed(r.empirical_kappa) + ", empirical lower slope " +
                                    detail::fixed(r.empirical_eta));
            }
        }
        out.checks_passed = ok;
        out.summary = std::to_string(checked) + " operators x 10000 samples, worst residual " + detail::sci(worst_order) +
                      " (tol 1e-9), Fp " + detail::sci(worst_p) + " (tol 1e-7), worst empirical kappa excess " +
                      detail::sci(worst_kappa_excess) + " (tol 1e-9)";
    });
}

/// |u(root) - v(root)| < eps for every small I, f random off I, f = -M/2 and g = M/2 on I.
inline outcome boundary_comparison_check(const options &opt) {
    return detail::timed(10, "boundary comparison", 0.0, [&opt](outcome &out) {
        const auto op = averaging_op::mean_median(3, 0.5);
        const unsigned m = 3;
        const unsigned data_level = 10;
        const double M = 1.0;
        const double eps = 0.1;
        const double gamma = -log_base(*contraction_constant(op), m);
        const double delta_required = std::pow(eps / (2.0 * M), 1.0 / gamma) / m;

        std::vector<madic_union> sets;
        for (std::uint64_t j = 0; j < level_size(m, 9); ++j) {
            sets.push_back(madic_union::cells(m, 9, j, j));
        }
        for (std::uint64_t j = 0; j + 1 < level_size(m, 10); ++j) {
            sets.push_back(madic_union::cells(m, 10, j, j + 1));
        }
        bool ok = true;
        for (const auto &I : sets) {
            ok = ok && I.length() <= delta_required;
        }

        double worst_gap = 0.0;
        double worst_ratio = 0.0;
        double worst_api = 0.0;
        const std::uint64_t size = level_size(m, data_level);
        for (int trial = 0; trial < 20; ++trial) {
            counter_rng rng{opt.seed, 100 + static_cast<std::uint64_t>(trial)};
            std::vector<double> f(size);
            for (auto &v : f) {
                v = rng.uniform(-0.5 * M, 0.5 * M);
            }
            const gap_engine engine(op, f);
            std::vector<double> gaps(sets.size());
            parallel_for(sets.size(), [&](std::size_t i) {
                const auto fine = sets[i].refined(data_level);
                std::vector<boundary_edit> low;
                std::vector<boundary_edit> high;
                for (std::uint64_t j = fine.k0; j <= fine.k1; ++j) {
                    low.push_back({j, -0.5 * M});
                    high.push_back({j, 0.5 * M});
                }
                gaps[i] = std::abs(engine.edited_root(std::move(high)) - engine.edited_root(std::move(low)));
            }, 256);
            for (std::size_t i = 0; i < sets.size(); ++i) {
                worst_gap = std::max(worst_gap, gaps[i]);
                const double bound = 2.0 * M * std::pow(m * sets[i].length(), gamma);
                worst_ratio = std::max(worst_ratio, gaps[i] / bound);
                ok = ok && gaps[i] < eps;
            }

            // library path on one set per trial: f' = f with -M/2 on I, g = M/2 on I
            const auto &I = sets[trial % sets.size()];
            const auto fine = I.refined(data_level);
            std::vector<double> f_low = f;
            for (std::uint64_t j = fine.k0; j <= fine.k1; ++j) {
                f_low[j] = -0.5 * M;
            }
            const gap_engine low_engine(op, f_low);
            const auto r = boundary_comparison(low_engine, I, std::vector<double>(fine.cell_count(), 0.5 * M), M, eps);
            worst_api = std::max(worst_api, std::abs(r.gap - gaps[trial % sets.size()]));
            ok = ok && r.applicable && r.satisfied;
        }
        ok = ok && worst_api <= 1e-12;
        out.checks_passed = ok;
        out.summary = std::to_string(sets.size()) + " sets x 20 data, delta " + detail::sci(delta_required) +
                      ", worst gap " + detail::fixed(worst_gap) + " (< 0.1), worst gap / 2M(m|I|)^gamma " +
                      detail::fixed(worst_ratio) + ", library agreement " + detail::sci(worst_api);
    });
}

/// Text from a fixed slice of the pipeline: bound rows, tau rows, counterexample values.
inline std::string determinism_fingerprint(std::uint64_t seed) {
    std::ostringstream out;
    table_writer w(out, {"kind", "key", "value"});
    const auto op = averaging_op::mean_median(3, 0.5);
    for (unsigned n = 1; n <= 4; ++n) {
        const gap_engine engine(op, boundary_data::identity(), n);
        for (const auto &I : detail::singles_and_pairs(3, n)) {
            const auto r = check_bounds(engine, I, 1.0);
            w.row({std::string("bound"), I.to_string(), r.measured_gap});
        }
    }
    for (unsigned m = 3; m <= 5; ++m) {
        const auto r = tau_minimize(averaging_op::median_midrange(m, 0.5), 8, 1e-10, seed);
        w.row({std::string("tau"), std::to_string(m), r.tau});
    }
    const auto ce = build_counterexample<double>(op, {2, 1}, 4);
    for (unsigned k = 0; k <= 4; ++k) {
        for (const double v : ce.u.levels[k]) {
            w.row({std::string("ucp"), std::to_string(k), v});
        }
    }
    counter_rng rng{seed, 11};
    std::vector<double> f(level_size(3, 6));
    for (auto &v : f) {
        v = rng.uniform(-1.0, 1.0);
    }
    const auto u = solve<double>(averaging_op::p_average(3, 3.0), f);
    w.row({std::string("solve"), std::string("root"), u.root()});
    w.finish({"fingerprint", seed, {}});
    return out.str();
}

/// The fingerprint is byte-identical across repeated runs and thread counts.
inline outcome determinism(const options &opt) {
    return detail::timed(11, "determinism", 0.0, [&opt](outcome &out) {
        const char *previous = std::getenv("TREEHARMONIC_THREADS");
        const std::string saved = previous ? previous : "";
        const std::string first = determinism_fingerprint(opt.seed);
        setenv("TREEHARMONIC_THREADS", "1", 1);
        const std::string single = determinism_fingerprint(opt.seed);
        if (previous) {
            setenv("TREEHARMONIC_THREADS", saved.c_str(), 1);
        } else {
            unsetenv("TREEHARMONIC_THREADS");
        }
        const std::string again = determinism_fingerprint(opt.seed);
        out.checks_passed = first == again && first == single;
        out.summary = std::to_string(first.size()) + " bytes, repeat " + (first == again ? "identical" : "differs") +
                      ", single thread " + (first == single ? "identical" : "differs");
    });
}

inline std::vector<outcome> run_all(const options &opt, std::ostream *progress = nullptr) {
    const std::vector<outcome (*)(const options &)> criteria{
        linear_exactness, upper_bound_sweep, upper_class_infimum, lower_bound_sweep, dirichlet_error, comparison_principle,
        ucp_counterexample, tau_cross_check, axiom_fuzzing, boundary_comparison_check, determinism};
    std::vector<outcome> results;
    for (const auto criterion : criteria) {
        results.push_back(criterion(opt));
        if (progress) {
            const auto &r = results.back();
            *progress << "criterion " << r.id << ": " << detail::fixed(r.seconds, 2) << " s";
            if (r.budget > 0.0) {
                *progress << " (budget " << detail::fixed(r.budget, 0) << " s)";
            }
            *progress << '\n' << std::flush;
        }
    }
    return results;
}

/// One PASS/FAIL line per criterion followed by its notes. Contains no timings.
inline void print_report(const std::vector<outcome> &results, std::ostream &out) {
    for (const auto &r : results) {
        out << (r.passed() ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.title << "): " << r.summary;
        if (!r.within_budget()) {
            out << "; over the " << detail::fixed(r.budget, 0) << " s budget";
        }
        out << '\n';
        for (const auto &note : r.notes) {
            out << "    " << note << '\n';
        }
    }
    const auto passed = std::count_if(results.begin(), results.end(), [](const outcome &r) { return r.passed(); });
    out << passed << "/" << results.size() << " criteria passed\n";
}

[[nodiscard]] inline bool all_passed(const std::vector<outcome> &results) {
    return std::all_of(results.begin(), results.end(), [](const outcome &r) { return r.passed(); });
}

}  // namespace treeharmonic::acceptance
