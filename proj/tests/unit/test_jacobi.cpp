#include "geobound/jacobi.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace geobound;

TEST_CASE("constant schedules give sinh, linear and stuck solutions") {
    const JacobiSolution pos = solve_jacobi(constant_schedule(4.0), 2.0, 1e-3);
    CHECK(pos.j.back() == doctest::Approx(std::sinh(4.0) / 2.0).epsilon(1e-12));
    CHECK(pos.jp.back() == doctest::Approx(std::cosh(4.0)).epsilon(1e-12));
    const JacobiSolution flat = solve_jacobi(constant_schedule(0.0), 2.0, 1e-3);
    CHECK(flat.j.back() == doctest::Approx(2.0).epsilon(1e-14));

    const JacobiSolution neg = solve_jacobi(constant_schedule(-1.0), 5.0, 1e-3);
    REQUIRE(neg.stuck_at.has_value());
    CHECK(std::abs(*neg.stuck_at - std::numbers::pi) < 1e-9);
    for (std::size_t i = 0; i < neg.t.size(); ++i) {
        if (neg.t[i] >= *neg.stuck_at) {
            CHECK(neg.j[i] == 0.0);
            CHECK(neg.jp[i] == 0.0);
        }
    }
}

TEST_CASE("random schedules are reproducible from the seed") {
    std::mt19937_64 a(42), b(42);
    const KappaSchedule ka = random_schedule(a), kb = random_schedule(b);
    for (double t : {0.0, 0.7, 3.1}) CHECK(ka(t) == kb(t));
}

TEST_CASE("multiplicative lemma on random pairs") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 100; ++k) {
        const KappaSchedule a = random_schedule(rng), b = random_schedule(rng);
        const LemmaCheck c = multiplicative_lemma_check(a, b, 3.0, 2e-3);
        CHECK(c.product_holds);
        CHECK(c.ratio_holds);
        CHECK(c.min_margin >= -1e-10);
    }
}

TEST_CASE("equal schedules make the lemma an equality") {
    std::mt19937_64 rng(4);
    const KappaSchedule a = random_schedule(rng);
    const LemmaCheck c = multiplicative_lemma_check(a, a, 3.0, 1e-3);
    CHECK(std::abs(c.min_product_margin) < 1e-10);
    CHECK(std::abs(c.min_ratio_margin) < 1e-10);
}

TEST_CASE("cubic Taylor coefficient of the ratio gap") {
    const KappaSchedule a = constant_schedule(4.0), b = constant_schedule(0.0);
    CHECK(lemma_taylor_prediction(a, b) == doctest::Approx(8.0 / 45.0).epsilon(1e-15));
    CHECK(lemma_taylor_coefficient(a, b) == doctest::Approx(8.0 / 45.0).epsilon(0.01));
    std::mt19937_64 rng(5);
    int tested = 0;
    while (tested < 3) {
        const KappaSchedule x = random_schedule(rng), y = random_schedule(rng);
        const double p = lemma_taylor_prediction(x, y);
        if (p < 1e-2) continue;
        CHECK(lemma_taylor_coefficient(x, y) == doctest::Approx(p).epsilon(0.05));
        ++tested;
    }
}

TEST_CASE("repeated pair averaging never lowers the product") {
    std::mt19937_64 rng(6);
    const MultiAverageResult r =
        multi_average_check({constant_schedule(4.0), constant_schedule(1.0), constant_schedule(1.0)}, 2.0, 1e-3, rng);
    CHECK(r.monotone);
    // limit: all three equal to 2
    const double limit = std::pow(std::sinh(std::sqrt(2.0) * 2.0) / std::sqrt(2.0), 3);
    CHECK(r.products.back() == doctest::Approx(limit).epsilon(1e-6));

    const MultiAverageResult same =
        multi_average_check({constant_schedule(2.0), constant_schedule(2.0), constant_schedule(2.0)}, 2.0, 1e-3, rng);
    CHECK(same.products.front() == doctest::Approx(same.products.back()).epsilon(1e-14));

    // {9, 0, 0} against its full average {3, 3, 3}
    const double original = std::sinh(6.0) / 3.0 * 2.0 * 2.0;
    const double averaged = std::pow(solve_jacobi(constant_schedule(3.0), 2.0, 1e-3).j.back(), 3);
    CHECK(averaged > original);
}

TEST_CASE("shuffled evolution approaches the averaged one") {
    const KappaSchedule a = constant_schedule(2.0), b = constant_schedule(0.0);
    const JacobiSolution sh = shuffle_evolve(a, b, 1e-3, 2.0);
    const double j_av = solve_jacobi(average_pair(a, b), 2.0, 1e-4).j.back();
    CHECK(std::abs(sh.j.back() - j_av) < 1e-2 * j_av);
    CHECK(sh.t.back() == doctest::Approx(2.0).epsilon(1e-14));

    const JacobiSolution same = shuffle_evolve(a, a, 0.1, 2.0);
    CHECK(same.j.back() == doctest::Approx(std::sinh(std::sqrt(2.0) * 2.0) / std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("convergence order of the shuffle") {
    std::mt19937_64 rng(8);
    const KappaSchedule a = random_schedule(rng), b = random_schedule(rng);
    const ShuffleStudy st = shuffle_convergence(a, b, {1e-1, 1e-2, 1e-3}, 2.0);
    // the state converges at first order; j(t_end) alone at second order
    CHECK(st.state_slope == doctest::Approx(1.0).epsilon(0.1));
    CHECK(st.slope > 1.7);
    for (std::size_t i = 1; i < st.deltas.size(); ++i) CHECK(st.state_errors[i] < st.state_errors[i - 1]);
}
