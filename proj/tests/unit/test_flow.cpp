#include "geobound/catalog.hpp"
#include "geobound/error.hpp"
#include "geobound/flow.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace geobound;

namespace {

FlowOptions options(double t_end, double dt = 1e-3) {
    FlowOptions o;
    o.t_end = t_end;
    o.dt = dt;
    return o;
}

Matrix random_traceless(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    Matrix s = a + a.transpose();
    return s - (s.trace() / n) * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("decomposition of a matrix into expansion, shear and vorticity") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    Matrix m(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = normal(rng);
    const Decomposition d = decompose(m);
    CHECK(d.theta == doctest::Approx(m.trace()));
    CHECK(std::abs(d.sigma.trace()) < 1e-14);
    CHECK((d.sigma - d.sigma.transpose()).norm() < 1e-14);
    CHECK((d.omega + d.omega.transpose()).norm() < 1e-14);
    CHECK((d.theta / 3.0 * Matrix::Identity(3, 3) + d.sigma + d.omega - m).norm() < 1e-14);
    CHECK(std::abs(d.f.trace()) < 1e-13);
}

TEST_CASE("flat space: expansion of a cone") {
    const CatalogEntry e = get("flat", {{"d", 4}});
    const FlowSeries s = integrate_flow(e.spec, e.diagonal, options(3.0));
    for (const auto& smp : s.samples) {
        CHECK(smp.dec.theta == doctest::Approx(3.0 / smp.t).epsilon(1e-9));
        CHECK(smp.sigma2 < 1e-16);
    }
}

TEST_CASE("hyperbolic space: theta = (d-1) coth t") {
    for (int d = 3; d <= 5; ++d) {
        const CatalogEntry e = get("hd", {{"d", d}});
        const FlowSeries s = integrate_flow(e.spec, e.diagonal, options(4.0));
        double worst = 0.0;
        for (const auto& smp : s.samples)
            if (smp.t >= 0.1) worst = std::max(worst, std::abs(smp.dec.theta - oracle_eval(e, "theta", {smp.t})));
        CHECK(worst < 1e-7);
    }
}

TEST_CASE("product of hyperbolic planes: closed-form shear along an angle") {
    const CatalogEntry e = get("h2xh2");
    const double psi = 0.4;
    const Vector x = (Vector(4) << std::cos(psi), 0.0, std::sin(psi), 0.0).finished();
    const FlowSeries s = integrate_flow(e.spec, x, options(5.0));
    double worst = 0.0;
    for (const auto& smp : s.samples) {
        if (smp.t < 0.1) continue;
        const std::vector<double> tau = {smp.t * std::cos(psi), smp.t * std::sin(psi)};
        worst = std::max({worst, std::abs(smp.dec.theta - oracle_eval(e, "theta", tau)),
                          std::abs(smp.sigma2 - oracle_eval(e, "sigma2", tau)),
                          std::abs(smp.tr_sigma3 - oracle_eval(e, "tr_sigma3", tau)),
                          std::abs((smp.dec.sigma * smp.w).trace() - oracle_eval(e, "sigma_dot_w", tau))});
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("flow invariants: unit speed, M = T' T^-1, theta = d log det T / dt, no vorticity") {
    const CatalogEntry e = get("squashed-h3", {{"c", 2.0}});
    const Vector x = (Vector(3) << 0.5, -0.4, 0.7).finished().normalized();
    const FlowSeries s = integrate_flow(e.spec, x, options(6.0));
    double norm = 0.0, mt = 0.0, omega = 0.0, dlog = 0.0;
    for (std::size_t i = 1; i + 1 < s.samples.size(); ++i) {
        const FlowSample& smp = s.samples[i];
        norm = std::max(norm, smp.norm_error);
        const Matrix tt = smp.transverse(smp.t_mat), td = smp.transverse(smp.t_dot);
        const Matrix mtt = smp.transverse(smp.m);
        mt = std::max(mt, (td * tt.inverse() - mtt).norm() / mtt.norm());
        omega = std::max(omega, smp.omega2);
        if (smp.t >= 0.5) {
            const double fd = (s.samples[i + 1].log_det_t - s.samples[i - 1].log_det_t) / (2.0 * s.dt);
            dlog = std::max(dlog, std::abs(fd - smp.dec.theta));
        }
    }
    CHECK(norm < 1e-9);
    CHECK(mt < 1e-8);
    CHECK(omega < 1e-16);
    CHECK(dlog < 1e-5);
}

TEST_CASE("Raychaudhuri residuals shrink fourfold when dt halves") {
    const CatalogEntry e = get("squashed-h3", {{"c", 2.0}});
    const Vector x = (Vector(3) << 0.2, 0.9, -0.3).finished().normalized();
    const RaychaudhuriResiduals a = raychaudhuri_residuals(integrate_flow(e.spec, x, options(4.0, 1e-3)));
    const RaychaudhuriResiduals b = raychaudhuri_residuals(integrate_flow(e.spec, x, options(4.0, 5e-4)));
    CHECK(a.first < 1e-5);
    CHECK(a.second < 1e-5);
    CHECK(a.first / b.first == doctest::Approx(4.0).epsilon(0.1));
    CHECK(a.second / b.second == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("expansion matrix stays positive and short series are rejected") {
    const CatalogEntry e = get("h2xh2");
    const FlowSeries s = integrate_flow(e.spec, e.diagonal, options(5.0, 1e-2));
    CHECK(positivity_monitor(s, 0.1) > 0.0);
    CHECK(positivity_run(e.spec, e.diagonal, options(5.0, 1e-2), 0.1) ==
          doctest::Approx(positivity_monitor(s, 0.1)).epsilon(1e-12));
    CHECK_THROWS_AS(raychaudhuri_residuals(s, 10.0), Error);
    CHECK_THROWS_AS(averaged_identity_residual(s, 1.0, 1.0), Error);
}

TEST_CASE("positive curvature produces a caustic at the antipode") {
    const MetricSpec s2 = separable_diagonal_metric("sphere", 2, {{}, {{0, DiagonalFactor::Kind::SinSq, 0.0}}},
                                                    (Vector(2) << std::numbers::pi / 2.0, 0.0).finished());
    bool thrown = false;
    try {
        integrate_flow(s2, Vector::Unit(2, 1), options(4.0));
    } catch (const CausticError& err) {
        thrown = true;
        CHECK(err.time() == doctest::Approx(std::numbers::pi).epsilon(1e-2));
    }
    CHECK(thrown);
}

TEST_CASE("shear trace inequalities hold on random matrices and saturate on the extremal pattern") {
    std::mt19937_64 rng(11);
    for (int d = 3; d <= 8; ++d) {
        const int n = d - 1;
        for (int k = 0; k < 1000; ++k) {
            const TraceCheck c = shear_trace_bounds_check(random_traceless(n, rng), 0.0, false);
            CHECK(c.holds[1]);
            CHECK(c.holds[2]);
            CHECK(c.margin[1] >= -1e-12);
            CHECK(c.margin[2] >= -1e-12);
        }
        Vector pattern = Vector::Constant(n, -1.0);
        pattern(0) = d - 2.0;
        const TraceCheck sat = shear_trace_bounds_check(Matrix(pattern.asDiagonal()), 0.0, false);
        CHECK(std::abs(sat.margin[1]) < 1e-9);
        CHECK(std::abs(sat.margin[2]) < 1e-9);
        // a positive matrix: Tr s^2 <= (d-2) theta^2 / (d-1)
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vector ev(n);
        for (int i = 0; i < n; ++i) ev(i) = u(rng);
        const double theta = ev.sum();
        const Matrix sigma = Matrix(ev.asDiagonal()) - theta / n * Matrix::Identity(n, n);
        const TraceCheck p = shear_trace_bounds_check(sigma, theta, true);
        CHECK(p.holds[0]);
        CHECK(p.margin[0] >= 0.0);
        // with a negative eigenvalue the first bound fails, which is why it is asserted only for positive M
        Vector bad = Vector::Zero(n);
        bad(0) = 1.0;
        bad(1) = -1.0;
        const TraceCheck q = shear_trace_bounds_check(Matrix(bad.asDiagonal()), 0.0, true);
        CHECK_FALSE(q.holds[0]);
    }
}

TEST_CASE("averaged identity on the product of hyperbolic planes") {
    const CatalogEntry e = get("h2xh2");
    const FlowSeries s = integrate_flow(e.spec, e.diagonal, options(40.0, 2e-3));
    const AverageReport r = averaged_identity_residual(s, 10.0, 1.0);
    CHECK(r.identity_residual < 2e-2);
    CHECK(r.mean_r2 == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.mean_tr_w2 == doctest::Approx(1.0 / 6.0).epsilon(1e-8));
    CHECK(r.asymptotic_theta == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
    CHECK(r.min_eig_m > 0.0);
}
