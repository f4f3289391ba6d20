#include <catch_amalgamated.hpp>

#include <treeharmonic/operators.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace treeharmonic;
using Catch::Approx;

namespace {

// Independent scalar root oracle: plain bisection on a callable with g(lo) > 0 > g(hi).
template <typename G>
double bisect(G g, double lo, double hi) {
    for (int i = 0; i < 400; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("eval examples") {
    CHECK(averaging_op::mean_midrange(3, 0.0)({1, 2, 3}) == 2.0);
    CHECK(averaging_op::p_average(3, 2.0)({1, 2, 3}) == Approx(2.0).margin(1e-12));
    CHECK(averaging_op::mean_median(3, 0.5)({0, 0, 1}) == Approx(1.0 / 6.0).margin(1e-15));
    CHECK(averaging_op::mean_midrange(3, 1.0)({0, 0, 1}) == 0.5);
    for (const double c : {-3.5, 0.0, 2.25}) {
        CHECK(averaging_op::median_midrange(4, 0.3)({c, c, c, c}) == c);
        CHECK(averaging_op::p_average(4, 3.0)({c, c, c, c}) == Approx(c).margin(1e-13));
    }
}

TEST_CASE("arity and domain errors") {
    const auto op = averaging_op::mean_median(3, 0.5);
    CHECK_THROWS_AS(op({1.0, 2.0}), arity_error);
    CHECK_THROWS_AS(op({1.0, NAN, 2.0}), domain_error);
    CHECK_THROWS_AS(averaging_op::mean_median(2, 0.5), domain_error);
    CHECK_THROWS_AS(averaging_op::mean_median(3, 0.5, 0.6), domain_error);
    CHECK_THROWS_AS(averaging_op::p_average(3, 1.0), domain_error);
    CHECK_THROWS_AS(averaging_op::p_average(3, 65.0), domain_error);
}

TEST_CASE("median convention") {
    CHECK(median<double>(std::vector<double>{3, 1, 2}) == 2.0);
    CHECK(median<double>(std::vector<double>{0, 1, 1, 0}) == 0.5);
    CHECK(median<double>(std::vector<double>{5, 5, 5}) == 5.0);
    CHECK_THROWS_AS(median<double>(std::vector<double>{}), arity_error);
}

TEST_CASE("implicit p-average") {
    CHECK(implicit_p_average(std::vector<double>{0, 0, 3}, 2.0) == Approx(1.0).margin(1e-12));
    CHECK(implicit_p_average(std::vector<double>{0.7, 0.7, 0.7}, 5.0) == Approx(0.7).margin(1e-13));
    CHECK_THROWS_AS(implicit_p_average(std::vector<double>{0, 1, 2}, 1.0), domain_error);

    // p = 4, (0, 0, 1): 2 t^3 + (t - 1)^3 = 0
    const double oracle = bisect([](double t) { return -(2 * t * t * t + (t - 1) * (t - 1) * (t - 1)); }, 0.0, 1.0);
    CHECK(implicit_p_average(std::vector<double>{0, 0, 1}, 4.0) == Approx(oracle).margin(2e-13));
    // the real root is 1 / (1 + 2^(1/3))
    CHECK(oracle == Approx(1.0 / (1.0 + std::cbrt(2.0))).margin(1e-14));
}

TEST_CASE("delta and closed-form constants") {
    CHECK(delta(averaging_op::mean_midrange(3, 1.0)) == 0.5);
    CHECK(delta(averaging_op::mean_median(3, 0.5)) == Approx(1.0 / 6.0).margin(1e-15));
    CHECK(delta(averaging_op::p_average(3, 2.0)) == Approx(1.0 / 3.0).margin(1e-13));
    CHECK(delta<rational>(averaging_op::mean_median(3, 0.5)) == rational(1, 6));

    CHECK(*contraction_constant(averaging_op::mean_midrange(3, 0.5)) == Approx(5.0 / 12.0));
    CHECK(*contraction_constant(averaging_op::mean_median(3, 0.5)) == Approx(2.0 / 3.0));
    CHECK(*contraction_constant(averaging_op::median_midrange(5, 0.25)) == Approx(0.25 + 0.375));
    CHECK_FALSE(contraction_constant(averaging_op::p_average(3, 3.0)).has_value());

    CHECK(*expansion_constant(averaging_op::mean_midrange(3, 0.5)) == Approx(1.0 / 6.0));
    CHECK(*expansion_constant(averaging_op::mean_median(4, 0.0)) == Approx(0.25));
    CHECK_FALSE(expansion_constant(averaging_op::median_midrange(3, 0.5)).has_value());
    CHECK_FALSE(expansion_constant(averaging_op::mean_midrange(3, 1.0)).has_value());
}

TEST_CASE("exact rational evaluation matches double") {
    const auto op = averaging_op::median_midrange(4, 0.25);
    const std::vector<rational> xr{rational(1, 3), rational(-2, 7), rational(5), rational(0)};
    const std::vector<double> xd{1.0 / 3.0, -2.0 / 7.0, 5.0, 0.0};
    CHECK(to_double(op(xr)) == Approx(op(xd)).margin(1e-15));
    // sorted (-2/7, 0, 1/3, 5): median 1/6, midrange 33/14
    CHECK(op(xr) == rational(1, 4) * rational(1, 6) + rational(3, 4) * rational(33, 14));
    CHECK_THROWS_AS(averaging_op::p_average(4, 3.0)(xr), unsupported_operator_error);
}

TEST_CASE("invariance properties on random inputs") {
    counter_rng rng{11};
    const std::vector<averaging_op> ops{averaging_op::mean_midrange(5, 0.3), averaging_op::mean_median(4, 0.6),
                                        averaging_op::median_midrange(6, 0.5), averaging_op::p_average(5, 1.5),
                                        averaging_op::p_average(3, 8.0)};
    for (const auto &op : ops) {
        const double tol = op.family() == op_family::p_average ? 1e-10 : 1e-14;
        for (int s = 0; s < 200; ++s) {
            std::vector<double> x(op.arity());
            for (auto &v : x) {
                v = rng.uniform(-2, 2);
            }
            const double fx = op(x);
            auto shuffled = x;
            rng.shuffle(std::span<double>(shuffled));
            if (op.family() == op_family::p_average) {
                CHECK(std::abs(op(shuffled) - fx) <= tol);
            } else {
                CHECK(op(shuffled) == fx);
            }
            auto shifted = x;
            for (auto &v : shifted) {
                v += 0.75;
            }
            CHECK(std::abs(op(shifted) - fx - 0.75) <= 4 * tol);
            CHECK(fx <= *std::max_element(x.begin(), x.end()));
            CHECK(fx >= *std::min_element(x.begin(), x.end()));
        }
    }
}

TEST_CASE("axiom fuzzer") {
    for (const double alpha : {0.0, 0.25, 0.5, 1.0}) {
        const auto report = check_axioms(averaging_op::mean_midrange(3, alpha), 10000, 1.0, 3);
        CHECK(report.all_passed());
        CHECK(report.empirical_eta <= report.empirical_kappa);
    }
    const auto mean = check_axioms(averaging_op::p_average(4, 2.0), 2000, 1.0, 5, 1e-7);
    CHECK(mean.all_passed());
    CHECK(mean.empirical_kappa == Approx(0.25).margin(1e-6));

    const auto max_op = averaging_op::custom(3, [](std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }, "max");
    const auto bad = check_axioms(max_op, 500, 1.0, 1);
    CHECK_FALSE(bad.passed.at("iv"));
    CHECK(bad.strictness_failures > 0);

    // F2 measured slope never exceeds alpha + beta / 2; for m >= 4 it reaches 0
    const auto f2 = check_axioms(averaging_op::median_midrange(5, 0.5), 10000, 1.0, 9);
    CHECK(f2.passed.at("Pro"));
    CHECK(f2.empirical_kappa <= 0.75 + 1e-9);
    CHECK(f2.empirical_eta == Approx(0.0).margin(1e-12));
}

TEST_CASE("operator strings") {
    CHECK(parse_operator("F1:alpha=0.5", 3).family() == op_family::mean_median);
    CHECK(parse_operator("F2:alpha=0.25", 5).beta() == 0.75);
    CHECK(parse_operator("Fp:p=3.5", 3).p() == 3.5);
    CHECK_THROWS_AS(parse_operator("F2:alpha=1.5", 3), domain_error);
    CHECK_THROWS(parse_operator("F7:alpha=0.5", 3));
    CHECK(parse_operator("F1:alpha=0.5", 3).name() == "F1:alpha=0.5");
}
