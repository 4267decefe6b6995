#include "geobound/bounds.hpp"
#include "geobound/error.hpp"
#include "geobound/sphere_search.hpp"

#include <cmath>
#include <numbers>

namespace geobound {
namespace {

constexpr double kQuadratureTol = 1e-9;

double simpson(double fa, double fm, double fb, double a, double b) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(fa, flm, fm, a, m);
    const double right = simpson(fm, frm, fb, m, b);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(const F& f, double a, double b, double rel_tol) {
    if (b <= a) return 0.0;
    // coarse composite rule fixes the absolute tolerance for the adaptive pass
    constexpr int panels = 64;
    const double h = (b - a) / panels;
    double coarse = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h;
        coarse += simpson(f(x0), f(x0 + 0.5 * h), f(x0 + h), x0, x0 + h);
    }
    const double tol = rel_tol * std::max(std::abs(coarse), 1e-300) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h, x1 = x0 + h;
        const double f0 = f(x0), fm = f(0.5 * (x0 + x1)), f1 = f(x1);
        total += adaptive_simpson(f, x0, x1, f0, fm, f1, simpson(f0, fm, f1, x0, x1), tol, 40);
    }
    return total;
}

RateResult maximize_rate(const DirectionScan& scan, const DirectionFunctional& per_direction, int d, double a) {
    const double r2_max = scan.r2_max.value;
    if (!std::isfinite(r2_max) || r2_max < -1e-12) {
        throw Error(ErrorKind::DegenerateFlat, "R^2_max must be finite and nonnegative");
    }
    const Vector p = scan.point;
    const Matrix root = inverse_sqrt_spd(scan.metric);
    auto direction = [&](const Vector& u) -> Vector { return root * (u / u.norm()); };
    if (r2_max <= 0.0) return {0.0, scan.r2_max.direction};

    const double wp2 = std::max(scan.wprime2_max.value, 0.0);
    auto objective = [&](const Vector& u) {
        const DirectionalScalars s = per_direction(direction(u));
        return bound_integrand(s.r2, std::max(s.tr_w2, 0.0), a, wp2);
    };
    const std::vector<Vector> grid = unit_sphere_points(d, std::max(scan.resolution, 2 * d));
    const SphereOptimum opt = optimize_on_sphere(objective, grid, true, scan.refine_tol);
    return {(d - 1) * opt.best.value, TangentVector{p, direction(opt.best.u)}};
}

}  // namespace

double sn(double k, double t) {
    if (t < 0.0 || std::isnan(t)) throw Error(ErrorKind::NegativeTime, "sn requires t >= 0");
    if (k > 0.0) {
        const double r = std::sqrt(k);
        if (r * t >= std::numbers::pi) return 0.0;
        return std::sin(r * t) / r;
    }
    if (k < 0.0) {
        const double r = std::sqrt(-k);
        return std::sinh(r * t) / r;
    }
    return t;
}

double unit_sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

double bg_volume(int d, double ricci_min, double t) {
    if (t < 0.0) throw Error(ErrorKind::NegativeTime, "bg_volume requires t >= 0");
    const double k = ricci_min / (d - 1);
    double upper = t;
    if (k > 0.0) upper = std::min(t, std::numbers::pi / std::sqrt(k));
    auto integrand = [&](double tau) { return std::pow(sn(k, tau), d - 1); };
    return unit_sphere_area(d) * integrate(integrand, 0.0, upper, kQuadratureTol);
}

double bg_log_slope(int d, double ricci_min, double t) {
    const double k = ricci_min / (d - 1);
    return unit_sphere_area(d) * std::pow(sn(k, t), d - 1) / bg_volume(d, ricci_min, t);
}

double bound_integrand(double r2, double tr_w2, double a, double wprime2) {
    if (a <= 0.0) return r2;
    const double root_p = std::sqrt(std::max(wprime2, 0.0));
    const double s = (std::sqrt(4.0 * a * tr_w2 + wprime2) - root_p) / (2.0 * a);
    return r2 - s * s;
}

RateResult new_rate2(const DirectionScan& scan, const DirectionFunctional& per_direction, int d) {
    return maximize_rate(scan, per_direction, d, d * scan.r2_max.value);
}

RateResult refined_rate2(const DirectionScan& scan, const DirectionFunctional& per_direction, int d) {
    const double a = d * scan.r2_max.value - std::max(scan.r2_min.value, 0.0) / (d - 1);
    return maximize_rate(scan, per_direction, d, a);
}

double symmetric_space_rate(const Vector& spectrum) {
    double s = 0.0;
    for (double k : spectrum) {
        if (k < -1e-10) throw Error(ErrorKind::NegativeKappa, "spectrum entry " + std::to_string(k) + " < 0");
        s += std::sqrt(std::max(k, 0.0));
    }
    return s;
}

double perfect_precession_rate(const Vector& spectrum) {
    return std::sqrt(std::max(0.0, static_cast<double>(spectrum.size()) * spectrum.sum()));
}

double strategy_functional(const std::vector<StrategySegment>& segments, int d, double r2_max) {
    if (segments.empty()) throw Error(ErrorKind::BadWeights, "no segments");
    double total = 0.0, r2 = 0.0, w2 = 0.0, wp2 = 0.0;
    for (const auto& s : segments) {
        if (!(s.weight >= 0.0)) throw Error(ErrorKind::BadWeights, "negative weight");
        total += s.weight;
        r2 += s.weight * s.r2;
        w2 += s.weight * s.tr_w2;
        wp2 += s.weight * s.tr_wprime2;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorKind::BadWeights, "weights must sum to 1");
    return bound_integrand(r2, w2, d * r2_max, wp2);
}

BoundReport compute_bounds(const MetricSpec& spec, int n, double refine_tol) {
    BoundReport rep;
    rep.d = spec.dim;
    rep.scan = scan_directions(spec, n, refine_tol);
    rep.r2_max = rep.scan.r2_max.value;
    rep.r2_min = rep.scan.r2_min.value;
    rep.w2_min = rep.scan.w2_min.value;
    rep.wprime2_max = rep.scan.wprime2_max.value;
    rep.bg_rate2 = (rep.d - 1) * rep.r2_max;

    const CurvatureData cd = riemann_ricci(spec, rep.scan.point);
    auto per_direction = [&](const Vector& x) { return directional_scalars(cd, x); };
    const RateResult plain = new_rate2(rep.scan, per_direction, rep.d);
    const RateResult refined = refined_rate2(rep.scan, per_direction, rep.d);
    rep.new_rate2 = plain.value;
    rep.argmax_direction = plain.direction;
    rep.refined_rate2 = refined.value;
    rep.refined_argmax_direction = refined.direction;

    rep.spectrum = sectional_spectrum(spec, rep.scan.point, plain.direction.comps);
    rep.symmetric_rate = symmetric_space_rate(rep.spectrum);
    rep.perfect_precession_rate = perfect_precession_rate(rep.spectrum);
    return rep;
}

}  // namespace geobound
