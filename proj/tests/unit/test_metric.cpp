#include "geobound/catalog.hpp"
#include "geobound/error.hpp"
#include "geobound/metric.hpp"
#include "geobound/parallel.hpp"
#include "geobound/sphere_search.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>

using namespace geobound;

namespace {

// squashed metric without analytic derivatives, so the finite-difference path is exercised
MetricSpec squashed_components_only(double c) {
    MetricSpec s;
    s.name = "squashed-fd";
    s.dim = 3;
    s.components = [c](const Vector& p) {
        Matrix g = Matrix::Zero(3, 3);
        g(0, 0) = std::exp(2.0 * c * p(2));
        g(1, 1) = std::exp(2.0 * p(2));
        g(2, 2) = 1.0;
        return g;
    };
    s.base_point = Vector::Zero(3);
    return s;
}

Vector random_point(int d, std::mt19937_64& rng, double scale = 0.5) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector p(d);
    for (int i = 0; i < d; ++i) p(i) = u(rng);
    return p;
}

}  // namespace

TEST_CASE("flat metric is the identity with vanishing derivatives") {
    const CatalogEntry e = get("flat", {{"d", 4}});
    std::mt19937_64 rng(1);
    const Vector p = random_point(4, rng, 3.0);
    CHECK((metric_at(e.spec, p) - Matrix::Identity(4, 4)).norm() == 0.0);
    const Tensor3 dg = metric_derivs(e.spec, p);
    for (double v : dg.data()) CHECK(v == 0.0);
    const Tensor3 dg_fd = metric_derivs_fd(e.spec, p);
    for (double v : dg_fd.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("catalog metrics are symmetric positive definite") {
    std::mt19937_64 rng(2);
    for (const auto& info : list_metrics()) {
        const CatalogEntry e = get(info.name);
        for (int k = 0; k < 5; ++k) {
            Vector p = e.spec.base_point + random_point(e.spec.dim, rng, 0.3);
            const Matrix g = metric_at(e.spec, p);
            CHECK((g - g.transpose()).norm() == 0.0);
            CHECK(symmetric_eigenvalues(g).minCoeff() > 0.0);
        }
    }
}

TEST_CASE("analytic and finite-difference derivatives agree") {
    std::mt19937_64 rng(3);
    for (const auto& info : list_metrics()) {
        const CatalogEntry e = get(info.name);
        const Vector p = e.spec.base_point + random_point(e.spec.dim, rng, 0.3);
        const Tensor3 a = metric_derivs(e.spec, p);
        const Tensor3 f = metric_derivs_fd(e.spec, p);
        for (std::size_t i = 0; i < a.data().size(); ++i) CHECK(a.data()[i] == doctest::Approx(f.data()[i]).epsilon(1e-7));
    }
}

TEST_CASE("central differences converge at second order") {
    const MetricSpec fd = squashed_components_only(2.0);
    const MetricSpec exact = get("squashed-h3", {{"c", 2.0}}).spec;
    const Vector p = (Vector(3) << 0.1, -0.2, 0.3).finished();
    const Tensor3 ref = metric_derivs(exact, p);
    auto err = [&](double h) {
        const Tensor3 t = metric_derivs(fd, p, h);
        double e = 0.0;
        for (std::size_t i = 0; i < t.data().size(); ++i) e = std::max(e, std::abs(t.data()[i] - ref.data()[i]));
        return e;
    };
    const double ratio = err(1e-2) / err(5e-3);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("second derivatives: analytic against differenced first derivatives") {
    const MetricSpec fd = squashed_components_only(1.5);
    const MetricSpec exact = get("squashed-h3", {{"c", 1.5}}).spec;
    const Vector p = (Vector(3) << 0.0, 0.1, -0.25).finished();
    const Tensor4 a = metric_second_derivs(exact, p);
    const Tensor4 f = metric_second_derivs(fd, p);
    for (std::size_t i = 0; i < a.data().size(); ++i) CHECK(a.data()[i] == doctest::Approx(f.data()[i]).epsilon(1e-5));
}

TEST_CASE("inverse metric rejects singular and badly conditioned matrices") {
    Matrix g = Matrix::Identity(3, 3);
    CHECK((inverse_metric(g) - g).norm() == 0.0);
    g(2, 2) = 0.0;
    CHECK_THROWS_AS(inverse_metric(g), Error);
    g(2, 2) = 1e-14;
    CHECK_THROWS_AS(inverse_metric(g), Error);
    CHECK_NOTHROW(inverse_metric(g, std::numeric_limits<double>::infinity()));
    g(2, 2) = -1.0;
    CHECK_THROWS_AS(inverse_metric(g), Error);
}

TEST_CASE("sphere directions are unit in the metric") {
    const auto ident = sphere_directions(Matrix::Identity(4, 4), 400);
    REQUIRE(ident.size() == 400);
    for (const auto& t : ident) CHECK(t.comps.norm() == doctest::Approx(1.0).epsilon(1e-12));

    Matrix g = Matrix::Identity(4, 4);
    g(0, 0) = 4.0;
    for (const auto& t : sphere_directions(g, 400)) {
        CHECK(unit_norm(g, t.comps) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(t.comps(0)) <= 0.5 + 1e-15);
    }
}

TEST_CASE("unit sphere points cover the sphere evenly") {
    for (int d : {2, 3, 5}) {
        const auto pts = unit_sphere_points(d, 2000);
        Vector mean = Vector::Zero(d);
        for (const auto& p : pts) {
            CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));
            mean += p;
        }
        CHECK((mean / 2000.0).norm() < 0.05);
    }
}

TEST_CASE("random unit directions and orthonormal frames") {
    std::mt19937_64 rng(4);
    const CatalogEntry e = get("squashed-h3", {{"c", 3.0}});
    const Vector p = (Vector(3) << 0.2, 0.1, -0.4).finished();
    const Matrix g = metric_at(e.spec, p);
    for (int k = 0; k < 20; ++k) {
        const Vector x = random_unit_direction(g, rng);
        CHECK(unit_norm(g, x) == doctest::Approx(1.0).epsilon(1e-12));
        const Matrix f = orthonormal_frame(g, x);
        CHECK((f.transpose() * g * f - Matrix::Identity(3, 3)).norm() < 1e-12);
        CHECK((f.col(0) - x).norm() < 1e-12);
    }
}

TEST_CASE("sphere refinement finds the top eigenvector of a quadratic form") {
    Matrix a(3, 3);
    a << 2, 1, 0, 1, 3, 0.5, 0, 0.5, 1;
    auto f = [&](const Vector& u) { return u.dot(a * u); };
    const SphereOptimum opt = optimize_on_sphere(f, unit_sphere_points(3, 50), true, 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    CHECK(opt.best.value == doctest::Approx(es.eigenvalues()(2)).epsilon(1e-12));
    CHECK(std::abs(opt.best.u.dot(es.eigenvectors().col(2))) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sphere_gradient_norm(f, opt.best.u) < 1e-8);
    const SphereOptimum low = optimize_on_sphere(f, unit_sphere_points(3, 50), false, 1e-12);
    CHECK(low.best.value == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));
}

TEST_CASE("best_indices orders by value and breaks ties by index") {
    const std::vector<double> v = {1.0, 3.0, 3.0, 2.0};
    CHECK(best_indices(v, 2, true) == std::vector<int>{1, 2});
    CHECK(best_indices(v, 1, false) == std::vector<int>{0});
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
    setenv("GEOBOUND_THREADS", "3", 1);
    CHECK(thread_count() == 3);
    setenv("GEOBOUND_THREADS", "zero", 1);
    CHECK(thread_count() >= 1);
    unsetenv("GEOBOUND_THREADS");
}
