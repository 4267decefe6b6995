#include "geobound/curvature.hpp"
#include "geobound/error.hpp"
#include "geobound/sphere_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geobound {
namespace {

constexpr double kUnitTolerance = 1e-8;
constexpr double kTieTolerance = 1e-9;

void check_unit(const Matrix& g, const Vector& x) {
    const double n2 = inner(g, x, x);
    if (!(std::abs(n2 - 1.0) <= kUnitTolerance)) {
        throw Error(ErrorKind::NonUnitDirection, "direction is not unit: g(X,X) = " + std::to_string(n2));
    }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

struct TracelessPart {
    Matrix w;
    double r2;
};

TracelessPart traceless_part(const Matrix& g, const Matrix& g_inv, const Matrix& kappa, const Vector& x) {
    const int d = static_cast<int>(g.rows());
    const double tr = (g_inv * kappa).trace();
    const Matrix h = transverse_metric(g, x);
    return {kappa - (tr / (d - 1)) * h, tr};
}

Matrix frame_components(const Matrix& frame, const Matrix& lower) {
    return symmetrize(frame.transpose() * lower * frame);
}

Matrix w_in_frame(const MetricSpec& spec, const FrameState& s) {
    const LocalGeometry geo = local_geometry(spec, s.pos);
    const Vector x = s.frame.col(0);
    const Matrix kappa = kappa_direct(geo, x);
    return frame_components(s.frame, traceless_part(geo.g, geo.g_inv, kappa, x).w);
}

}  // namespace

LocalGeometry local_geometry(const MetricSpec& spec, const Vector& p, double h, double max_condition) {
    LocalGeometry geo;
    geo.point = p;
    geo.g = metric_at(spec, p);
    geo.g_inv = inverse_metric(geo.g, max_condition);
    geo.dg = metric_derivs(spec, p, h);
    geo.d2g = metric_second_derivs(spec, p, h);
    geo.gamma = christoffel(geo.g_inv, geo.dg);
    return geo;
}

Tensor3 christoffel(const Matrix& g_inv, const Tensor3& dg) {
    const int d = dg.dim();
    Tensor3 first(d);  // Gamma_fbc
    for (int f = 0; f < d; ++f)
        for (int b = 0; b < d; ++b)
            for (int c = b; c < d; ++c) {
                const double v = 0.5 * (dg(b, f, c) + dg(c, f, b) - dg(f, b, c));
                first(f, b, c) = v;
                first(f, c, b) = v;
            }
    Tensor3 gamma(d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = b; c < d; ++c) {
                double s = 0.0;
                for (int f = 0; f < d; ++f) s += g_inv(a, f) * first(f, b, c);
                gamma(a, b, c) = s;
                gamma(a, c, b) = s;
            }
    return gamma;
}

Tensor3 christoffel(const MetricSpec& spec, const Vector& p, double h) {
    const Matrix g_inv = inverse_metric(metric_at(spec, p));
    return christoffel(g_inv, metric_derivs(spec, p, h));
}

CurvatureData riemann_ricci(const LocalGeometry& geo) {
    const int d = static_cast<int>(geo.g.rows());
    const Tensor3& gam = geo.gamma;

    // dgam(e, a, b, c) = d_e Gamma^a_bc
    Tensor4 dgam(d);
    std::vector<double> lowered(static_cast<std::size_t>(d));
    for (int e = 0; e < d; ++e)
        for (int b = 0; b < d; ++b)
            for (int c = b; c < d; ++c) {
                for (int f = 0; f < d; ++f) {
                    double v = 0.5 * (geo.d2g(e, b, f, c) + geo.d2g(e, c, f, b) - geo.d2g(e, f, b, c));
                    for (int n = 0; n < d; ++n) v -= geo.dg(e, f, n) * gam(n, b, c);
                    lowered[static_cast<std::size_t>(f)] = v;
                }
                for (int a = 0; a < d; ++a) {
                    double s = 0.0;
                    for (int f = 0; f < d; ++f) s += geo.g_inv(a, f) * lowered[static_cast<std::size_t>(f)];
                    dgam(e, a, b, c) = s;
                    dgam(e, a, c, b) = s;
                }
            }

    CurvatureData cd;
    cd.gamma = gam;
    cd.riemann = Tensor4(d);
    cd.at = geo.point;
    cd.g = geo.g;
    cd.g_inv = geo.g_inv;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c)
                for (int dd = c + 1; dd < d; ++dd) {
                    double v = dgam(c, a, dd, b) - dgam(dd, a, c, b);
                    for (int e = 0; e < d; ++e) v += gam(a, c, e) * gam(e, dd, b) - gam(a, dd, e) * gam(e, c, b);
                    cd.riemann(a, b, c, dd) = v;
                    cd.riemann(a, b, dd, c) = -v;
                }
    cd.ricci = Matrix::Zero(d, d);
    for (int b = 0; b < d; ++b)
        for (int dd = 0; dd < d; ++dd) {
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += cd.riemann(a, b, a, dd);
            cd.ricci(b, dd) = s;
        }
    return cd;
}

CurvatureData riemann_ricci(const MetricSpec& spec, const Vector& p, double h) {
    return riemann_ricci(local_geometry(spec, p, h));
}

Matrix kappa_from_riemann(const CurvatureData& cd, const Vector& x) {
    const int d = static_cast<int>(cd.g.rows());
    Matrix upper = Matrix::Zero(d, d);  // kappa^a_d
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c) {
                const double xbxc = x[b] * x[c];
                if (xbxc == 0.0) continue;
                for (int dd = 0; dd < d; ++dd) upper(a, dd) += cd.riemann(a, b, c, dd) * xbxc;
            }
    return symmetrize(cd.g * upper);
}

Matrix kappa_direct(const LocalGeometry& geo, const Vector& x) {
    const int d = static_cast<int>(geo.g.rows());
    const Tensor3& gam = geo.gamma;
    const Tensor3& dg = geo.dg;
    const Tensor4& d2g = geo.d2g;

    Tensor3 hx(d);  // sum_c X^c d2g(c, i, j, k)
    for (int c = 0; c < d; ++c) {
        if (x[c] == 0.0) continue;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) hx(i, j, k) += x[c] * d2g(c, i, j, k);
    }
    Matrix p_mat = Matrix::Zero(d, d), hxx = Matrix::Zero(d, d), q = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double sp = 0.0, sh = 0.0;
            for (int k = 0; k < d; ++k) {
                sp += hx(i, j, k) * x[k];
                sh += x[k] * hx(k, i, j);
            }
            p_mat(i, j) = sp;
            hxx(i, j) = sh;
            double sq = 0.0;
            for (int c = 0; c < d; ++c)
                for (int b = 0; b < d; ++b) sq += x[c] * x[b] * d2g(i, j, c, b);
            q(i, j) = sq;
        }

    Matrix dx = Matrix::Zero(d, d), gmix = Matrix::Zero(d, d), glow = Matrix::Zero(d, d);
    Vector v = Vector::Zero(d);
    for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
            double s = 0.0, t = 0.0;
            for (int c = 0; c < d; ++c) {
                s += x[c] * dg(c, m, n);
                t += gam(m, c, n) * x[c];
            }
            dx(m, n) = s;
            gmix(m, n) = t;  // G^m_n = Gamma^m_cn X^c
        }
    for (int e = 0; e < d; ++e) v[e] = gmix.row(e).dot(x);
    glow = geo.g * gmix;  // Gamma_mce X^c

    Matrix kappa = -0.5 * p_mat.transpose() - 0.5 * p_mat + 0.5 * hxx + 0.5 * q.transpose() - dx * gmix +
                   glow * gmix;
    // (m, d) entries: sum_n dg(d, m, n) V^n - sum_e Gamma_mde V^e
    for (int m = 0; m < d; ++m)
        for (int dd = 0; dd < d; ++dd) {
            double s = 0.0;
            for (int n = 0; n < d; ++n) {
                double gamma_low = 0.0;  // Gamma_{m dd n}
                for (int a = 0; a < d; ++a) gamma_low += geo.g(m, a) * gam(a, dd, n);
                s += (dg(dd, m, n) - gamma_low) * v[n];
            }
            kappa(m, dd) += s;
        }
    return symmetrize(kappa);
}

Matrix transverse_metric(const Matrix& g, const Vector& x) {
    const Vector xl = g * x;
    return g - xl * xl.transpose();
}

double trace_product(const Matrix& g_inv, const Matrix& a, const Matrix& b) {
    return (g_inv * a * g_inv * b).trace();
}

TidalData tidal(const MetricSpec& spec, const Vector& p, const Vector& x, bool with_derivative) {
    const LocalGeometry geo = local_geometry(spec, p);
    check_unit(geo.g, x);
    TidalData out;
    out.kappa = kappa_direct(geo, x);
    const TracelessPart tp = traceless_part(geo.g, geo.g_inv, out.kappa, x);
    out.w = tp.w;
    out.r2 = tp.r2;
    out.h = transverse_metric(geo.g, x);
    out.direction = {p, x};
    out.tr_w2 = trace_product(geo.g_inv, out.w, out.w);
    const int d = spec.dim;
    out.w_prime = Matrix::Zero(d, d);
    if (with_derivative) {
        out.w_prime = tidal_derivative(spec, p, x);
        out.tr_wprime2 = trace_product(geo.g_inv, out.w_prime, out.w_prime);
    }
    return out;
}

Matrix tidal_derivative(const MetricSpec& spec, const Vector& p, const Vector& x, double eps) {
    const Matrix g = metric_at(spec, p);
    check_unit(g, x);
    const FrameState start{p, orthonormal_frame(g, x)};
    const Matrix wp = w_in_frame(spec, transport_step(spec, start, eps));
    const Matrix wm = w_in_frame(spec, transport_step(spec, start, -eps));
    const Matrix deriv = (wp - wm) / (2.0 * eps);
    const double noise = std::numeric_limits<double>::epsilon() * std::max(max_abs(wp), max_abs(wm)) / eps;
    if (noise > 1e-6 * std::max(1.0, max_abs(deriv))) {
        throw Error(ErrorKind::StepTooSmall, "finite-difference cancellation in tidal_derivative");
    }
    const Matrix theta = start.frame.transpose() * g;
    return symmetrize(theta.transpose() * deriv * theta);
}

Vector sectional_spectrum(const MetricSpec& spec, const Vector& p, const Vector& x) {
    const LocalGeometry geo = local_geometry(spec, p);
    check_unit(geo.g, x);
    const int d = spec.dim;
    const Matrix frame = orthonormal_frame(geo.g, x);
    const Matrix kf = frame_components(frame, kappa_direct(geo, x));
    Vector ev = symmetric_eigenvalues(kf.bottomRightCorner(d - 1, d - 1));
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    return ev;
}

FrameState transport_rhs(const Tensor3& gamma, const FrameState& s) {
    const int d = static_cast<int>(s.pos.size());
    const Vector x = s.frame.col(0);
    Matrix gx = Matrix::Zero(d, d);  // Gamma^a_bc X^b
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            if (x[b] == 0.0) continue;
            for (int c = 0; c < d; ++c) gx(a, c) += gamma(a, b, c) * x[b];
        }
    return {x, -gx * s.frame};
}

FrameState transport_step(const MetricSpec& spec, const FrameState& s, double dt) {
    auto rhs = [&](const FrameState& st) { return transport_rhs(christoffel(spec, st.pos), st); };
    auto axpy = [](const FrameState& a, double h, const FrameState& k) {
        return FrameState{a.pos + h * k.pos, a.frame + h * k.frame};
    };
    const FrameState k1 = rhs(s);
    const FrameState k2 = rhs(axpy(s, 0.5 * dt, k1));
    const FrameState k3 = rhs(axpy(s, 0.5 * dt, k2));
    const FrameState k4 = rhs(axpy(s, dt, k3));
    return {s.pos + (dt / 6.0) * (k1.pos + 2.0 * k2.pos + 2.0 * k3.pos + k4.pos),
            s.frame + (dt / 6.0) * (k1.frame + 2.0 * k2.frame + 2.0 * k3.frame + k4.frame)};
}

DirectionalScalars directional_scalars(const CurvatureData& cd, const Vector& x) {
    const Matrix kappa = kappa_from_riemann(cd, x);
    const TracelessPart tp = traceless_part(cd.g, cd.g_inv, kappa, x);
    return {tp.r2, trace_product(cd.g_inv, tp.w, tp.w)};
}

DirectionScan scan_directions(const MetricSpec& spec, int n, double refine_tol) {
    const Vector p = spec.base_point.size() == spec.dim ? spec.base_point : Vector::Zero(spec.dim);
    const CurvatureData cd = riemann_ricci(spec, p);
    const Matrix root = inverse_sqrt_spd(cd.g);
    const std::vector<Vector> grid = unit_sphere_points(spec.dim, n);

    auto direction = [&](const Vector& u) -> Vector { return root * (u / u.norm()); };
    auto r2 = [&](const Vector& u) { return directional_scalars(cd, direction(u)).r2; };
    auto w2 = [&](const Vector& u) { return directional_scalars(cd, direction(u)).tr_w2; };
    auto wprime2 = [&](const Vector& u) {
        const Vector x = direction(u);
        const Matrix wp = tidal_derivative(spec, p, x);
        return trace_product(cd.g_inv, wp, wp);
    };

    auto extremum = [&](const SphereSearchResult& r) {
        return Extremum{r.value, TangentVector{p, direction(r.u)}, r.grad_norm};
    };

    DirectionScan scan;
    scan.resolution = n;
    scan.refine_tol = refine_tol;
    scan.point = p;
    scan.metric = cd.g;

    const SphereOptimum rmax = optimize_on_sphere(r2, grid, true, refine_tol);
    scan.r2_max = extremum(rmax.best);
    scan.r2_min = extremum(optimize_on_sphere(r2, grid, false, refine_tol).best);
    scan.w2_min = extremum(optimize_on_sphere(w2, grid, false, refine_tol).best);
    scan.wprime2_max = extremum(optimize_on_sphere(wprime2, grid, true, refine_tol).best);
    scan.w2_at_argmax_r2 = directional_scalars(cd, scan.r2_max.direction.comps).tr_w2;

    for (const auto& r : rmax.refined) {
        if (std::abs(r.value - rmax.best.value) > kTieTolerance) continue;
        const Vector x = direction(r.u);
        const bool seen = std::any_of(scan.r2_max_ties.begin(), scan.r2_max_ties.end(),
                                      [&](const TangentVector& t) { return (t.comps - x).norm() < 1e-6; });
        if (!seen) scan.r2_max_ties.push_back({p, x});
    }
    return scan;
}

}  // namespace geobound
