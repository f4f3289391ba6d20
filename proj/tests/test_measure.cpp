#include <catch_amalgamated.hpp>

#include <treeharmonic/measure.hpp>
#include <treeharmonic/random.hpp>

#include <cmath>

using namespace treeharmonic;
using Catch::Approx;

TEST_CASE("perturbed solution examples") {
    const auto mean = averaging_op::p_average(3, 2.0);
    const auto zero = boundary_data::constant(0.0);
    CHECK(perturbed_solution(mean, zero, madic_union::cells(3, 1, 0, 0), 1.0, 1).root() == Approx(1.0 / 3.0).margin(1e-13));
    CHECK(perturbed_solution(mean, zero, madic_union::cells(3, 2, 0, 0), 1.0, 2).root() == Approx(1.0 / 9.0).margin(1e-13));

    const auto op = averaging_op::mean_median(3, 0.25);
    const auto f = boundary_data::sine(1.0);
    const double u = solve(op, f, 3).root();
    CHECK(perturbed_solution(op, f, madic_union::whole(3), 0.7, 3).root() == Approx(u + 0.7).margin(1e-14));
    CHECK_THROWS_AS(perturbed_solution(op, f, madic_union::cells(3, 4, 0, 0), 1.0, 3), domain_error);
}

TEST_CASE("harmonic measure") {
    const auto mean = averaging_op::p_average(3, 2.0);
    for (unsigned k = 1; k <= 3; ++k) {
        for (std::uint64_t j = 0; j < level_size(3, k); ++j) {
            CHECK(harmonic_measure(mean, madic_union::cells(3, k, j, j)) == Approx(std::pow(3.0, -static_cast<int>(k))).margin(1e-13));
        }
    }
    CHECK(harmonic_measure(averaging_op::median_midrange(4, 0.5), madic_union::cells(4, 2, 0, 15)) == 1.0);
    CHECK(harmonic_measure(averaging_op::mean_median(3, 0.5), madic_union::cells(3, 1, 0, 0)) == Approx(1.0 / 6.0).margin(1e-15));
}

TEST_CASE("measure properties") {
    const std::vector<averaging_op> ops{averaging_op::mean_midrange(3, 0.5), averaging_op::mean_median(3, 0.5),
                                        averaging_op::median_midrange(3, 0.5), averaging_op::p_average(3, 3.0)};
    for (const auto &op : ops) {
        const double tol = 1e-11;
        for (std::uint64_t k0 = 0; k0 < 9; ++k0) {
            for (std::uint64_t k1 = k0; k1 < 9; ++k1) {
                const auto I = madic_union::cells(3, 2, k0, k1);
                const double w = harmonic_measure(op, I);
                CHECK(w >= -tol);
                CHECK(w <= 1 + tol);
                if (k1 + 1 < 9) {
                    CHECK(w <= harmonic_measure(op, madic_union::cells(3, 2, k0, k1 + 1)) + tol);
                }
                // complement on prefix / suffix unions
                if (k0 == 0 && k1 + 1 < 9) {
                    const double rest = harmonic_measure(op, madic_union::cells(3, 2, k1 + 1, 8));
                    CHECK(w + rest == Approx(1.0).margin(1e-10));
                }
                // the same set one level down
                CHECK(harmonic_measure(op, I.refined(3)) == Approx(w).margin(1e-12));
            }
        }
    }
}

TEST_CASE("refinement consistency with level-n data") {
    const auto op = averaging_op::mean_median(4, 0.5);
    const auto f = boundary_data::indicator(madic_union::cells(4, 1, 1, 2), 0.3);
    const auto I = madic_union::cells(4, 2, 3, 6);
    const double at_n = perturbed_solution(op, f, I, 0.8, 2).root();
    CHECK(perturbed_solution(op, f, I, 0.8, 3).root() == Approx(at_n).margin(1e-14));
    CHECK(perturbed_solution(op, f, I.refined(4), 0.8, 4).root() == Approx(at_n).margin(1e-14));
}

TEST_CASE("upper bounds") {
    const auto op = averaging_op::mean_median(3, 0.5);
    const double gamma = -std::log(2.0 / 3.0) / std::log(3.0);
    const auto r = check_upper_bounds(op, boundary_data::constant(0.0), madic_union::cells(3, 2, 4, 4), 1.0);
    CHECK(r.gamma == Approx(gamma).epsilon(1e-14));
    CHECK(r.gamma == Approx(0.36907).margin(1e-5));
    CHECK(r.upper_kind == "single");
    CHECK(r.upper_bound == Approx(4.0 / 9.0).epsilon(1e-12));
    CHECK(*r.bound_raw == Approx(4.0 / 9.0).epsilon(1e-14));
    CHECK(r.measured_gap <= 4.0 / 9.0);
    CHECK(r.all_satisfied());

    const auto whole = check_upper_bounds(op, boundary_data::identity(), madic_union::whole(3), 1.0);
    CHECK(whole.measured_gap == Approx(1.0).margin(1e-14));
    CHECK(whole.bound_general == Approx(2.0 * std::pow(3.0, gamma)));
    CHECK(whole.all_satisfied());

    const auto pair = check_upper_bounds(op, boundary_data::sine(2.0), madic_union::cells(3, 3, 7, 8), 2.0);
    CHECK(pair.upper_kind == "pair");
    CHECK(*pair.bound_pair == Approx(std::pow(2.0, 1 - gamma) * 2.0 * std::pow(2.0 / 27.0, gamma)));
    CHECK(pair.all_satisfied());
    CHECK_FALSE(pair.infimum_hypothesis == (7 + 8 == 26));

    CHECK_THROWS_AS(check_upper_bounds(averaging_op::p_average(3, 3.0), boundary_data::identity(),
                                       madic_union::cells(3, 1, 0, 0), 1.0),
                    unsupported_operator_error);
    CHECK_THROWS_AS(check_upper_bounds(op, boundary_data::identity(), madic_union::cells(3, 1, 0, 0), 1.0, 0.5), domain_error);
    CHECK(check_upper_bounds(op, boundary_data::identity(), madic_union::cells(3, 1, 0, 0), 1.0, 0.2).gamma == 0.2);
}

TEST_CASE("gap independence of f needs a linear operator") {
    const auto I = madic_union::cells(3, 2, 2, 3);
    const auto mean = averaging_op::p_average(3, 2.0);
    CHECK(check_upper_bounds(mean, boundary_data::identity(), I, 1.0).measured_gap ==
          Approx(check_upper_bounds(mean, boundary_data::constant(0.0), I, 1.0).measured_gap).margin(1e-13));

    // median terms make the gap depend on where f sits relative to its neighbours
    const auto op = averaging_op::mean_median(3, 0.5);
    const double with_id = check_upper_bounds(op, boundary_data::identity(), I, 1.0).measured_gap;
    const double with_zero = check_upper_bounds(op, boundary_data::constant(0.0), I, 1.0).measured_gap;
    CHECK(std::abs(with_id - with_zero) > 1e-3);
}

TEST_CASE("lower bound") {
    const auto mean = averaging_op::p_average(3, 2.0);
    const auto I = madic_union::cells(3, 2, 5, 5);
    auto r = check_lower_bound(mean, boundary_data::constant(0.0), I, 1.0);
    CHECK(*r.theta == Approx(1.0).epsilon(1e-14));
    CHECK(*r.lower_bound == Approx(1.0 / 54.0).epsilon(1e-12));
    CHECK(r.measured_gap == Approx(1.0 / 9.0).margin(1e-13));
    CHECK(r.all_satisfied());

    const auto r2 = check_lower_bound(mean, boundary_data::constant(0.0), I, 2.0);
    CHECK(*r2.lower_bound == Approx(2 * *r.lower_bound));
    CHECK(r2.measured_gap == Approx(2 * r.measured_gap));

    CHECK_THROWS_AS(check_lower_bound(averaging_op::mean_midrange(3, 1.0), boundary_data::identity(), I, 1.0),
                    unsupported_operator_error);
    CHECK_THROWS_AS(check_lower_bound(mean, boundary_data::identity(), I, 1.0, 0.5), domain_error);
}

TEST_CASE("approximating upper class") {
    const auto op = averaging_op::mean_median(3, 0.5);
    const auto I = madic_union::cells(3, 1, 0, 0);
    const auto f = boundary_data::identity();
    const auto r = approximating_upper_class(op, f, I, 1.0, 3);
    CHECK(r.widened == madic_union::cells(3, 4, 0, 27));
    CHECK(r.certified_gap == Approx(2.0 * std::pow(2.0 / 3.0, 4)));
    CHECK(r.within);
    CHECK(r.w_root >= r.v_root);

    counter_rng rng{5};
    for (int trial = 0; trial < 10; ++trial) {
        const unsigned n = 1 + static_cast<unsigned>(rng.below(3));
        const std::uint64_t size = level_size(3, n);
        const std::uint64_t k0 = rng.below(size);
        const std::uint64_t k1 = k0 + rng.below(std::min<std::uint64_t>(size - k0, 3));
        const auto J = madic_union::cells(3, n, k0, k1);
        const double c = rng.uniform(0.25, 2.0);
        const gap_engine engine(op, boundary_data::sine(1.0), n + 5);
        double previous = std::numeric_limits<double>::infinity();
        for (unsigned l = 1; l <= 5; ++l) {
            const auto w = approximating_upper_class(engine, J, c, l);
            CHECK(w.within);
            CHECK(w.w_root <= previous + 1e-10);
            previous = w.w_root;
        }
    }
    CHECK_THROWS_AS(approximating_upper_class(op, f, I, 1.0, 0), domain_error);
}

TEST_CASE("boundary comparison") {
    const auto op = averaging_op::mean_median(3, 0.5);
    const auto f = boundary_data::sine(1.0);
    const auto I = madic_union::cells(3, 4, 10, 11);
    const auto same = boundary_comparison(op, boundary_data::constant(0.25), boundary_data::constant(0.25), I, 1.0, 0.1);
    CHECK(same.gap == 0.0);

    const auto scaled = boundary_data::sine(1.0);
    const auto half = boundary_data(boundary::table{{0.0, 1.0}, {-0.25, 0.25}, 0.5});
    const auto g = half.plus_indicator(I, 0.5);
    const auto r = boundary_comparison(op, half, g, I, 1.0, 0.1);
    CHECK(r.gap <= 2.0 * 1.0 * std::pow(3.0 * I.length(), r.gamma) + 1e-12);
    CHECK(r.delta_required == Approx(std::pow(0.05, 1.0 / r.gamma) / 3.0));

    const auto tiny = madic_union::cells(3, 9, 100, 100);
    const auto r_tiny = boundary_comparison(op, half, half.plus_indicator(tiny, 0.5), tiny, 1.0, 0.1);
    CHECK(r_tiny.applicable);
    CHECK(r_tiny.satisfied);

    CHECK_THROWS_AS(boundary_comparison(op, f, scaled.plus_indicator(madic_union::cells(3, 4, 0, 0), 0.1), I, 2.0, 0.1),
                    precondition_error);
    CHECK_THROWS_AS(boundary_comparison(op, boundary_data::constant(0.9), boundary_data::constant(0.9), I, 1.0, 0.1),
                    precondition_error);

    // edit-based variant agrees with the full solve
    const gap_engine engine(op, half, 4);
    const auto fine = I.refined(4);
    std::vector<double> g_on_I;
    for (std::uint64_t j = fine.k0; j <= fine.k1; ++j) {
        g_on_I.push_back(engine.base().boundary()[j] + 0.5);
    }
    CHECK(boundary_comparison(engine, I, g_on_I, 1.0, 0.1).gap == Approx(r.gap).margin(1e-15));
}
