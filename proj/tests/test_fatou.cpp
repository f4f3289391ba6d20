#include <catch_amalgamated.hpp>

#include <treeharmonic/fatou.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace treeharmonic;
using Catch::Approx;

namespace {

// Independent tau oracle for three inputs: with x sorted, pin F(x) = 0 and scan a
// fine grid over the two free gaps, then refine around the best cell.
double tau_grid_oracle(const averaging_op &op) {
    double best = 1e300;
    double ca = 0.0;
    double cb = 0.0;
    double span = 8.0;
    for (int round = 0; round < 12; ++round) {
        const int steps = 200;
        double next_a = ca;
        double next_b = cb;
        for (int i = -steps; i <= steps; ++i) {
            for (int j = -steps; j <= steps; ++j) {
                const double a = ca + span * i / steps;
                const double b = cb + span * j / steps;
                if (a < 0 || b < 0) {
                    continue;
                }
                std::vector<double> x{0.0, a, a + b};
                const double shift = op(x);
                double sum = 0.0;
                for (const double v : x) {
                    sum += std::exp(v - shift);
                }
                if (sum < best) {
                    best = sum;
                    next_a = a;
                    next_b = b;
                }
            }
        }
        ca = next_a;
        cb = next_b;
        span /= 10.0;
    }
    return best;
}

}  // namespace

TEST_CASE("mean gives tau = m") {
    for (unsigned m : {3U, 5U, 8U}) {
        for (const auto &op : {averaging_op::p_average(m, 2.0), averaging_op::mean_midrange(m, 0.0)}) {
            const auto r = tau_minimize(op, 16);
            CHECK(r.tau == Approx(m).epsilon(1e-9));
            CHECK(r.dim == Approx(1.0).margin(1e-9));
            CHECK(r.tau <= m + 1e-9);
            for (const double x : r.minimizer) {
                CHECK(std::abs(x) <= 1e-4);
            }
        }
    }
}

TEST_CASE("simplex search against a grid oracle at m = 3") {
    for (const auto &op : {averaging_op::mean_median(3, 0.5), averaging_op::median_midrange(3, 0.25),
                           averaging_op::mean_midrange(3, 0.75), averaging_op::p_average(3, 4.0)}) {
        const auto r = tau_minimize(op, 32, 1e-10, 3);
        CHECK(r.constraint_residual <= 1e-9);
        CHECK(r.tau == Approx(tau_grid_oracle(op)).epsilon(1e-9));
        CHECK(std::is_sorted(r.minimizer.begin(), r.minimizer.end()));
    }
}

TEST_CASE("order-statistic solver") {
    const auto w = order_statistic_weights(averaging_op::mean_median(4, 0.5));
    CHECK(w == std::vector<double>{0.125, 0.375, 0.375, 0.125});
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == 1.0);
    CHECK_THROWS_AS(order_statistic_weights(averaging_op::p_average(3, 3.0)), unsupported_operator_error);

    // pure midrange: tau = 2 sqrt(m - 1)
    for (unsigned m : {3U, 7U, 200U}) {
        CHECK(tau_order_statistic(averaging_op::median_midrange(m, 0.0)).tau == Approx(2.0 * std::sqrt(m - 1.0)));
    }
    for (unsigned m = 3; m <= 6; ++m) {
        for (const double alpha : {0.25, 0.5}) {
            for (const auto &op : {averaging_op::mean_median(m, alpha), averaging_op::median_midrange(m, alpha),
                                   averaging_op::mean_midrange(m, alpha)}) {
                const auto exact = tau_order_statistic(op);
                const auto numeric = tau_minimize(op, 24, 1e-10, 1);
                CHECK(numeric.dim == Approx(exact.dim).margin(1e-7));
            }
        }
    }
}

TEST_CASE("F1 closed form") {
    for (unsigned m = 3; m <= 12; ++m) {
        CHECK(tau_closed_form_F1(m, 0.0).dim == Approx(1.0).margin(1e-14));
    }
    CHECK(f1_s(5, s_convention::printed) == 3);
    CHECK(f1_s(6, s_convention::printed) == 3);
    CHECK(f1_s(5, s_convention::swapped) == 2);
    CHECK(f1_s(6, s_convention::swapped) == 4);

    // the printed convention matches the exact optimum; its displayed minimizer is feasible
    for (unsigned m = 3; m <= 10; ++m) {
        for (const double alpha : {0.1, 0.5, 0.9}) {
            const auto cf = tau_closed_form_F1(m, alpha);
            const auto op = averaging_op::mean_median(m, alpha);
            CHECK(cf.dim == Approx(tau_order_statistic(op).dim).margin(1e-12));
            CHECK(std::abs(op(cf.minimizer)) <= 1e-12);
            double sum = 0.0;
            for (const double x : cf.minimizer) {
                sum += std::exp(x);
            }
            CHECK(sum == Approx(cf.tau).epsilon(1e-12));
        }
    }
    double previous = 2.0;
    for (double alpha = 0.0; alpha < 0.96; alpha += 0.05) {
        const double d = tau_closed_form_F1(7, alpha).dim;
        CHECK(d <= previous + 1e-12);
        previous = d;
    }
    CHECK_THROWS_AS(tau_closed_form_F1(3, 1.0), domain_error);
}

TEST_CASE("F2 closed form") {
    CHECK(tau_closed_form_F2(3, 0.0).dim == Approx(std::log(2.0 * std::sqrt(2.0)) / std::log(3.0)).epsilon(1e-14));
    CHECK(tau_closed_form_F2(3, 0.0).dim == Approx(0.94640).margin(1e-5));
    for (unsigned m = 3; m <= 10; ++m) {
        for (const double alpha : {0.0, 0.3, 0.6, 0.9}) {
            const auto cf = tau_closed_form_F2(m, alpha);
            const auto op = averaging_op::median_midrange(m, alpha);
            CHECK(std::abs(op(cf.minimizer)) <= 1e-9);
            double sum = 0.0;
            for (const double x : cf.minimizer) {
                sum += std::exp(x);
            }
            CHECK(sum == Approx(cf.tau).epsilon(1e-12));
            // feasible, hence never below the true minimum
            CHECK(cf.tau >= tau_order_statistic(op).tau * (1 - 1e-12));
        }
    }
    // agreement where the displayed point is optimal, a strict gap where it is not
    CHECK(tau_closed_form_F2(4, 0.5).dim == Approx(tau_order_statistic(averaging_op::median_midrange(4, 0.5)).dim).margin(1e-12));
    CHECK(tau_closed_form_F2(5, 0.75).dim - tau_order_statistic(averaging_op::median_midrange(5, 0.75)).dim > 0.05);
}

TEST_CASE("large-m sweep") {
    const auto f1_rows = dim_limits_sweep(tau_family::F1, 0.5, {3, 10, 100}, 10, 16);
    REQUIRE(f1_rows.size() == 3);
    CHECK(f1_rows[0].dim_exact < f1_rows[1].dim_exact);
    CHECK(f1_rows[1].dim_exact < f1_rows[2].dim_exact);
    CHECK(f1_rows[2].dim_exact < 1.0);
    CHECK(f1_rows[1].dim_numeric.has_value());
    CHECK_FALSE(f1_rows[2].dim_numeric.has_value());
    CHECK(*f1_rows[1].dim_numeric == Approx(f1_rows[1].dim_exact).margin(1e-6));

    const auto f2_rows = dim_limits_sweep(tau_family::F2, 0.0, {3, 20, 200, 2000}, 0);
    for (std::size_t i = 1; i < f2_rows.size(); ++i) {
        CHECK(f2_rows[i].dim_exact < f2_rows[i - 1].dim_exact);
        CHECK(f2_rows[i].limit == 0.5);
    }
}
