#pragma once

#include "geobound/metric.hpp"
#include "geobound/tensor.hpp"

#include <functional>
#include <vector>

namespace geobound {

struct FlowOptions {
    double t0 = 1e-3;
    double t_end = 50.0;
    double dt = 1e-3;
    // internal step is capped at this fraction of t while t is small, where M ~ 1/t
    double early_step_fraction = 0.005;
};

/// Expansion, shear and vorticity of the transverse block of M.
struct Decomposition {
    double theta = 0.0;
    Matrix sigma;  // symmetric, traceless
    Matrix omega;  // antisymmetric
    Matrix f;      // 2 theta sigma/(d-1) + sigma^2 - Tr[sigma^2] h/(d-1)
};

Decomposition decompose(const Matrix& m_transverse);

/// One output sample. Matrices are frame components in the parallel-propagated
/// orthonormal frame whose first leg is X; `m`, `t_mat`, `t_dot` and `kappa`
/// are full d x d, `w` and the decomposition are transverse (d-1) x (d-1).
struct FlowSample {
    double t = 0.0;
    Vector pos;
    Vector x;      // coordinate components of the tangent
    Matrix frame;  // coordinate components of the frame legs (columns)
    Matrix m;
    Matrix t_mat;
    Matrix t_dot;
    double log_det_scale = 0.0;  // accumulated log|det| removed from t_mat by renormalisation
    Matrix kappa;
    Matrix w;
    double r2 = 0.0;  // -R_mn X^m X^n
    Decomposition dec;
    double sigma2 = 0.0;
    double omega2 = 0.0;
    double tr_sigma3 = 0.0;
    double tr_sigma4 = 0.0;
    double det_m = 0.0;        // transverse block
    double min_eig_m = 0.0;    // smallest eigenvalue of the symmetrised transverse block
    double norm_error = 0.0;   // |g(X, X) - 1|
    double log_det_t = 0.0;    // log|det T_transverse| including the removed scale

    Matrix transverse(const Matrix& full) const;
};

struct FlowSeries {
    int d = 0;
    double dt = 0.0;
    std::vector<FlowSample> samples;
};

using FlowObserver = std::function<void(const FlowSample&)>;

/// Integrates geodesic, parallel frame, expansion matrix M (dM/dt = kappa - M^2)
/// and transport matrix T (d^2T/dt^2 = kappa T) with RK4 from the near-origin
/// expansion at t0, reporting every sample t0 + k dt <= t_end to `observer`.
/// Throws CausticError when det of the transverse T block changes sign or
/// |theta| exceeds 1e8.
void integrate_flow(const MetricSpec& spec, const Vector& x0, const FlowOptions& opt, const FlowObserver& observer);

FlowSeries integrate_flow(const MetricSpec& spec, const Vector& x0, const FlowOptions& opt);

/// Pointwise residuals of both Raychaudhuri equations by centred differences.
/// Entries at the first and last sample are NaN.
struct PointwiseResiduals {
    std::vector<double> first;
    std::vector<double> second;
    std::vector<double> sigma2_evolution;
};
PointwiseResiduals pointwise_residuals(const FlowSeries& series);

struct RaychaudhuriResiduals {
    double first = 0.0;
    double second = 0.0;
};

/// Max over interior samples with t >= t_min. Throws SeriesTooShort when fewer
/// than three samples qualify.
RaychaudhuriResiduals raychaudhuri_residuals(const FlowSeries& series, double t_min = 1.0);

/// Max residual of 1/2 dTr[s^2]/dt = -2 theta Tr[s^2]/(d-1) - Tr[s^3] + s.W.
double sigma2_evolution_residual(const FlowSeries& series, double t_min = 1.0);

/// dW/dt in the frame by centred differences (one-sided at the ends).
std::vector<Matrix> w_prime_series(const FlowSeries& series);

struct AverageReport {
    double t_burn = 0.0;
    double t_end = 0.0;
    double mean_theta = 0.0;
    double mean_theta2 = 0.0;
    double mean_sigma2 = 0.0;
    double mean_r2 = 0.0;
    double mean_tr_w2 = 0.0;
    double mean_tr_wprime2 = 0.0;
    // theta ~ a + b/t least-squares fit over the window; a estimates the late-time <theta>
    double asymptotic_theta = 0.0;
    // exact averaged identity: lhs = (d-1)<Tr s^4> + 4<theta Tr s^3> + 5<theta^2 Tr s^2>/(d-1) - <Tr s^2 R^2>
    double identity_lhs = 0.0;
    double identity_rhs = 0.0;  // (d-1)<Tr[W' s + W^2]>
    double identity_residual = 0.0;  // |lhs - rhs| / |rhs|
    // <theta^2>/(d-1) = <R^2> - <s^2>, normalised by <R^2>
    double theta2_identity_residual = 0.0;
    double raychaudhuri1_residual_max = 0.0;
    double raychaudhuri2_residual_max = 0.0;
    double det_m_min = 0.0;
    double min_eig_m = 0.0;
};

/// Trapezoidal averages over [t_burn, last sample]. Throws WindowTooShort when
/// the window is shorter than 20/R_max (R_max from `r2_max`, skipped when 0).
AverageReport averaged_identity_residual(const FlowSeries& series, double t_burn, double r2_max);

/// theta ~ a + b/t fit over samples with t in [t_from, t_to]; returns a.
double asymptotic_theta(const FlowSeries& series, double t_from, double t_to);

/// Minimum over samples with t >= t_from of the smallest transverse M eigenvalue.
double positivity_monitor(const FlowSeries& series, double t_from = 0.0);

/// Streaming version: integrates and tracks the minimum without storing the series.
double positivity_run(const MetricSpec& spec, const Vector& x0, const FlowOptions& opt, double t_from);

struct TraceCheck {
    bool holds[3] = {true, true, true};
    bool asserted[3] = {false, true, true};
    double margin[3] = {0.0, 0.0, 0.0};  // (rhs - lhs) / max(rhs, natural size of the sides)
};

/// Tr[s^2] <= (d-2) theta^2/(d-1) (only when positive_m),
/// (Tr[s^3])^2 <= (d-3)^2 (Tr[s^2])^3 / ((d-1)(d-2)),
/// Tr[s^4] <= ((d-2)^3 + 1)(Tr[s^2])^2 / ((d-1)^2 (d-2)), for n = d-1 >= 2.
TraceCheck shear_trace_bounds_check(const Matrix& sigma, double theta, bool positive_m);

}  // namespace geobound
