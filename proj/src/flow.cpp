#include "geobound/flow.hpp"
#include "geobound/curvature.hpp"
#include "geobound/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geobound {
namespace {

constexpr double kThetaLimit = 1e8;
constexpr double kRenormalizeAbove = 10.0;
constexpr double kNoConditionLimit = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct State {
    Vector pos;
    Matrix frame;
    Matrix m;
    Matrix t;
    Matrix t_dot;
};

State axpy(const State& a, double h, const State& k) {
    return {a.pos + h * k.pos, a.frame + h * k.frame, a.m + h * k.m, a.t + h * k.t, a.t_dot + h * k.t_dot};
}

Matrix frame_kappa(const LocalGeometry& geo, const Matrix& frame) {
    const Matrix k = frame.transpose() * kappa_direct(geo, frame.col(0)) * frame;
    return 0.5 * (k + k.transpose());
}

State rhs(const MetricSpec& spec, const State& s) {
    const LocalGeometry geo = local_geometry(spec, s.pos, 0.0, kNoConditionLimit);
    const Matrix k = frame_kappa(geo, s.frame);
    const FrameState tr = transport_rhs(geo.gamma, FrameState{s.pos, s.frame});
    return {tr.pos, tr.frame, k - s.m * s.m, s.t_dot, k * s.t};
}

State rk4(const MetricSpec& spec, const State& s, double h) {
    const State k1 = rhs(spec, s);
    const State k2 = rhs(spec, axpy(s, 0.5 * h, k1));
    const State k3 = rhs(spec, axpy(s, 0.5 * h, k2));
    const State k4 = rhs(spec, axpy(s, h, k3));
    State out = s;
    out.pos += (h / 6.0) * (k1.pos + 2.0 * k2.pos + 2.0 * k3.pos + k4.pos);
    out.frame += (h / 6.0) * (k1.frame + 2.0 * k2.frame + 2.0 * k3.frame + k4.frame);
    out.m += (h / 6.0) * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
    out.t += (h / 6.0) * (k1.t + 2.0 * k2.t + 2.0 * k3.t + k4.t);
    out.t_dot += (h / 6.0) * (k1.t_dot + 2.0 * k2.t_dot + 2.0 * k3.t_dot + k4.t_dot);
    return out;
}

Matrix block(const Matrix& full) {
    const auto n = full.rows() - 1;
    return full.bottomRightCorner(n, n);
}

// T <- T R^{-1} on the transverse block; returns log|det R| and flips `sign` when det R < 0.
double renormalize(State& s, double& sign) {
    const int n = static_cast<int>(s.t.rows()) - 1;
    Eigen::HouseholderQR<Matrix> qr(block(s.t));
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    Matrix r_full = Matrix::Identity(n + 1, n + 1);
    r_full.bottomRightCorner(n, n) = r;
    const Matrix r_inv = r_full.triangularView<Eigen::Upper>().solve(Matrix::Identity(n + 1, n + 1));
    s.t = s.t * r_inv;
    s.t_dot = s.t_dot * r_inv;
    double log_det = 0.0;
    for (int i = 0; i < n; ++i) {
        log_det += std::log(std::abs(r(i, i)));
        if (r(i, i) < 0.0) sign = -sign;
    }
    return log_det;
}

FlowSample make_sample(const MetricSpec& spec, const State& s, double t, double log_det_scale) {
    const int d = spec.dim;
    const int n = d - 1;
    const LocalGeometry geo = local_geometry(spec, s.pos, 0.0, kNoConditionLimit);
    FlowSample out;
    out.t = t;
    out.pos = s.pos;
    out.x = s.frame.col(0);
    out.frame = s.frame;
    out.m = s.m;
    out.t_mat = s.t;
    out.t_dot = s.t_dot;
    out.log_det_scale = log_det_scale;
    out.kappa = frame_kappa(geo, s.frame);
    const Matrix k = block(out.kappa);
    out.r2 = k.trace();
    out.w = k - (out.r2 / n) * Matrix::Identity(n, n);

    const Matrix mt = block(s.m);
    out.dec = decompose(mt);
    const Matrix& sg = out.dec.sigma;
    const Matrix s2 = sg * sg;
    out.sigma2 = s2.trace();
    out.tr_sigma3 = (s2 * sg).trace();
    out.tr_sigma4 = (s2 * s2).trace();
    out.omega2 = out.dec.omega.squaredNorm();
    out.det_m = mt.determinant();
    out.min_eig_m = symmetric_eigenvalues(0.5 * (mt + mt.transpose()))[0];
    out.norm_error = std::abs(inner(geo.g, out.x, out.x) - 1.0);
    out.log_det_t = std::log(std::abs(block(s.t).determinant())) + log_det_scale;
    return out;
}

double trapezoid_mean(const std::vector<double>& t, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    return s / (t.back() - t.front());
}

double max_interior(const FlowSeries& series, const std::vector<double>& values, double t_min) {
    double best = 0.0;
    int used = 0;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
        if (series.samples[i].t < t_min) continue;
        best = std::max(best, std::abs(values[i]));
        ++used;
    }
    if (used < 1) throw Error(ErrorKind::SeriesTooShort, "fewer than three samples after t_min");
    return best;
}

}  // namespace

Matrix FlowSample::transverse(const Matrix& full) const { return block(full); }

Decomposition decompose(const Matrix& m) {
    const auto n = m.rows();
    const Matrix id = Matrix::Identity(n, n);
    Decomposition dec;
    dec.theta = m.trace();
    dec.sigma = 0.5 * (m + m.transpose()) - (dec.theta / static_cast<double>(n)) * id;
    dec.omega = 0.5 * (m - m.transpose());
    const Matrix s2 = dec.sigma * dec.sigma;
    dec.f = (2.0 * dec.theta / static_cast<double>(n)) * dec.sigma + s2 - (s2.trace() / static_cast<double>(n)) * id;
    return dec;
}

void integrate_flow(const MetricSpec& spec, const Vector& x0, const FlowOptions& opt, const FlowObserver& observer) {
    if (!(opt.t0 > 0.0) || !(opt.dt > 0.0) || !(opt.t_end >= opt.t0)) {
        throw Error(ErrorKind::BadParams, "flow requires 0 < t0 <= t_end and dt > 0");
    }
    const int d = spec.dim;
    const Vector p0 = spec.base_point.size() == d ? spec.base_point : Vector::Zero(d);
    const LocalGeometry geo = local_geometry(spec, p0);
    if (std::abs(inner(geo.g, x0, x0) - 1.0) > 1e-8) {
        throw Error(ErrorKind::NonUnitDirection, "initial direction is not unit");
    }
    State s;
    s.pos = p0;
    s.frame = orthonormal_frame(geo.g, x0);
    const Matrix k0 = frame_kappa(geo, s.frame);
    Matrix h = Matrix::Identity(d, d);
    h(0, 0) = 0.0;
    const double t0 = opt.t0;
    s.m = h / t0 + (t0 / 3.0) * k0;
    s.t = t0 * h + (t0 * t0 * t0 / 6.0) * k0;
    s.t_dot = h + (0.5 * t0 * t0) * k0;

    double log_scale = 0.0;
    double scale_sign = 1.0;  // sign of the determinant removed by renormalisation
    FlowSample sample = make_sample(spec, s, t0, log_scale);
    auto det_t_positive = [&] { return scale_sign * block(s.t).determinant() > 0.0; };
    bool prev_positive = det_t_positive();
    observer(sample);

    const long steps = static_cast<long>(std::floor((opt.t_end - t0) / opt.dt * (1.0 + 1e-12)));
    double t = t0;
    for (long k = 1; k <= steps; ++k) {
        const int sub = std::max(1, static_cast<int>(std::ceil(opt.dt / (opt.early_step_fraction * t))));
        const double h_sub = opt.dt / sub;
        for (int j = 0; j < sub; ++j) s = rk4(spec, s, h_sub);
        t = t0 + static_cast<double>(k) * opt.dt;
        if (max_abs(block(s.t)) > kRenormalizeAbove) log_scale += renormalize(s, scale_sign);

        sample = make_sample(spec, s, t, log_scale);
        if (!std::isfinite(sample.dec.theta) || std::abs(sample.dec.theta) > kThetaLimit ||
            det_t_positive() != prev_positive) {
            throw CausticError(t, "focal point along the geodesic near t = " + std::to_string(t));
        }
        observer(sample);
    }
}

FlowSeries integrate_flow(const MetricSpec& spec, const Vector& x0, const FlowOptions& opt) {
    FlowSeries series;
    series.d = spec.dim;
    series.dt = opt.dt;
    integrate_flow(spec, x0, opt, [&](const FlowSample& s) { series.samples.push_back(s); });
    return series;
}

PointwiseResiduals pointwise_residuals(const FlowSeries& series) {
    const auto& sm = series.samples;
    const std::size_t len = sm.size();
    const double n = series.d - 1;
    PointwiseResiduals out;
    out.first.assign(len, kNaN);
    out.second.assign(len, kNaN);
    out.sigma2_evolution.assign(len, kNaN);
    if (len < 3) return out;
    for (std::size_t i = 1; i + 1 < len; ++i) {
        const FlowSample& s = sm[i];
        const double span = sm[i + 1].t - sm[i - 1].t;
        const double theta_dot = (sm[i + 1].dec.theta - sm[i - 1].dec.theta) / span;
        out.first[i] = theta_dot + s.dec.theta * s.dec.theta / n + s.sigma2 - s.omega2 - s.r2;
        const Matrix sigma_dot = (sm[i + 1].dec.sigma - sm[i - 1].dec.sigma) / span;
        out.second[i] = max_abs(sigma_dot + s.dec.f - s.w);
        const double s2_dot = (sm[i + 1].sigma2 - sm[i - 1].sigma2) / span;
        out.sigma2_evolution[i] = 0.5 * s2_dot + 2.0 * s.dec.theta * s.sigma2 / n + s.tr_sigma3 -
                                  (s.dec.sigma * s.w).trace();
    }
    return out;
}

RaychaudhuriResiduals raychaudhuri_residuals(const FlowSeries& series, double t_min) {
    if (series.samples.size() < 3) throw Error(ErrorKind::SeriesTooShort, "need at least three samples");
    const PointwiseResiduals r = pointwise_residuals(series);
    return {max_interior(series, r.first, t_min), max_interior(series, r.second, t_min)};
}

double sigma2_evolution_residual(const FlowSeries& series, double t_min) {
    if (series.samples.size() < 3) throw Error(ErrorKind::SeriesTooShort, "need at least three samples");
    return max_interior(series, pointwise_residuals(series).sigma2_evolution, t_min);
}

std::vector<Matrix> w_prime_series(const FlowSeries& series) {
    const auto& sm = series.samples;
    std::vector<Matrix> out(sm.size());
    if (sm.size() < 2) {
        for (auto& m : out) m = Matrix::Zero(series.d - 1, series.d - 1);
        return out;
    }
    for (std::size_t i = 0; i < sm.size(); ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == sm.size() ? i : i + 1;
        out[i] = (sm[hi].w - sm[lo].w) / (sm[hi].t - sm[lo].t);
    }
    return out;
}

double asymptotic_theta(const FlowSeries& series, double t_from, double t_to) {
    // weighted least squares for theta = a + b u with u = 1/t
    double sw = 0.0, su = 0.0, suu = 0.0, sy = 0.0, suy = 0.0;
    const auto& sm = series.samples;
    for (std::size_t i = 0; i < sm.size(); ++i) {
        if (sm[i].t < t_from || sm[i].t > t_to) continue;
        const double left = (i > 0 && sm[i - 1].t >= t_from) ? sm[i].t - sm[i - 1].t : 0.0;
        const double right = (i + 1 < sm.size() && sm[i + 1].t <= t_to) ? sm[i + 1].t - sm[i].t : 0.0;
        const double w = 0.5 * (left + right);
        const double u = 1.0 / sm[i].t, y = sm[i].dec.theta;
        sw += w;
        su += w * u;
        suu += w * u * u;
        sy += w * y;
        suy += w * u * y;
    }
    if (!(sw > 0.0)) throw Error(ErrorKind::WindowTooShort, "no samples in the fitting window");
    const double det = sw * suu - su * su;
    if (std::abs(det) < 1e-300) return sy / sw;
    return (suu * sy - su * suy) / det;
}

AverageReport averaged_identity_residual(const FlowSeries& series, double t_burn, double r2_max) {
    const auto& sm = series.samples;
    if (sm.size() < 3) throw Error(ErrorKind::SeriesTooShort, "need at least three samples");
    const double t_last = sm.back().t;
    if (r2_max > 0.0 && t_last - t_burn < 20.0 / std::sqrt(r2_max) - 1e-9) {
        throw Error(ErrorKind::WindowTooShort, "averaging window shorter than 20/R_max");
    }
    const double n = series.d - 1;
    const std::vector<Matrix> wp = w_prime_series(series);

    std::vector<double> t, theta, theta2, sigma2, r2, w2, wp2, lhs, rhs;
    double det_min = std::numeric_limits<double>::infinity();
    double eig_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sm.size(); ++i) {
        const FlowSample& s = sm[i];
        if (s.t < t_burn) continue;
        const double th = s.dec.theta;
        t.push_back(s.t);
        theta.push_back(th);
        theta2.push_back(th * th);
        sigma2.push_back(s.sigma2);
        r2.push_back(s.r2);
        w2.push_back((s.w * s.w).trace());
        wp2.push_back((wp[i] * wp[i]).trace());
        lhs.push_back(n * s.tr_sigma4 + 4.0 * th * s.tr_sigma3 + 5.0 * th * th * s.sigma2 / n - s.sigma2 * s.r2);
        rhs.push_back(n * ((wp[i] * s.dec.sigma).trace() + (s.w * s.w).trace()));
        det_min = std::min(det_min, s.det_m);
        eig_min = std::min(eig_min, s.min_eig_m);
    }
    if (t.size() < 3) throw Error(ErrorKind::WindowTooShort, "fewer than three samples after burn-in");

    AverageReport rep;
    rep.t_burn = t.front();
    rep.t_end = t.back();
    rep.mean_theta = trapezoid_mean(t, theta);
    rep.mean_theta2 = trapezoid_mean(t, theta2);
    rep.mean_sigma2 = trapezoid_mean(t, sigma2);
    rep.mean_r2 = trapezoid_mean(t, r2);
    rep.mean_tr_w2 = trapezoid_mean(t, w2);
    rep.mean_tr_wprime2 = trapezoid_mean(t, wp2);
    rep.asymptotic_theta = asymptotic_theta(series, rep.t_burn, rep.t_end);
    rep.identity_lhs = trapezoid_mean(t, lhs);
    rep.identity_rhs = trapezoid_mean(t, rhs);
    rep.identity_residual = std::abs(rep.identity_lhs - rep.identity_rhs) /
                            std::max(std::abs(rep.identity_rhs), std::numeric_limits<double>::min());
    if (rep.identity_rhs == 0.0 && rep.identity_lhs == 0.0) rep.identity_residual = 0.0;
    const double th_rhs = rep.mean_r2 - rep.mean_sigma2;
    rep.theta2_identity_residual =
        std::abs(rep.mean_theta2 / n - th_rhs) / std::max(std::abs(rep.mean_r2), std::numeric_limits<double>::min());
    if (rep.mean_r2 == 0.0) rep.theta2_identity_residual = std::abs(rep.mean_theta2 / n - th_rhs);

    const PointwiseResiduals res = pointwise_residuals(series);
    for (std::size_t i = 1; i + 1 < sm.size(); ++i) {
        if (sm[i].t < t_burn) continue;
        rep.raychaudhuri1_residual_max = std::max(rep.raychaudhuri1_residual_max, std::abs(res.first[i]));
        rep.raychaudhuri2_residual_max = std::max(rep.raychaudhuri2_residual_max, std::abs(res.second[i]));
    }
    rep.det_m_min = det_min;
    rep.min_eig_m = eig_min;
    return rep;
}

double positivity_monitor(const FlowSeries& series, double t_from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : series.samples)
        if (s.t >= t_from) best = std::min(best, s.min_eig_m);
    return best;
}

double positivity_run(const MetricSpec& spec, const Vector& x0, const FlowOptions& opt, double t_from) {
    double best = std::numeric_limits<double>::infinity();
    integrate_flow(spec, x0, opt, [&](const FlowSample& s) {
        if (s.t >= t_from) best = std::min(best, s.min_eig_m);
    });
    return best;
}

TraceCheck shear_trace_bounds_check(const Matrix& sigma, double theta, bool positive_m) {
    const double n = static_cast<double>(sigma.rows());
    const double d = n + 1.0;
    const Matrix s2m = sigma * sigma;
    const double s2 = s2m.trace();
    const double s3 = (s2m * sigma).trace();
    const double s4 = (s2m * s2m).trace();
    const double rhs[3] = {
        (d - 2.0) * theta * theta / (d - 1.0),
        (d - 3.0) * (d - 3.0) * s2 * s2 * s2 / ((d - 1.0) * (d - 2.0)),
        (std::pow(d - 2.0, 3) + 1.0) * s2 * s2 / ((d - 1.0) * (d - 1.0) * (d - 2.0)),
    };
    const double lhs[3] = {s2, s3 * s3, s4};
    // natural size of each side, so roundoff on a vanishing right-hand side (d = 3) stays small
    const double natural[3] = {std::max(s2, theta * theta), s2 * s2 * s2, s2 * s2};
    TraceCheck out;
    out.asserted[0] = positive_m;
    for (int i = 0; i < 3; ++i) {
        const double scale = std::max({std::abs(rhs[i]), natural[i], 1e-300});
        out.margin[i] = (rhs[i] - lhs[i]) / scale;
        out.holds[i] = !out.asserted[i] || out.margin[i] >= -1e-12;
    }
    return out;
}

}  // namespace geobound
