#pragma once

#include "geobound/metric.hpp"
#include "geobound/tensor.hpp"

#include <vector>

namespace geobound {

/// Metric jet at a point: g, g^{-1}, first and second partials, Christoffel
/// symbols of the second kind. Everything downstream is built from this.
struct LocalGeometry {
    Vector point;
    Matrix g;
    Matrix g_inv;
    Tensor3 dg;     // (c, a, b) -> d_c g_ab
    Tensor4 d2g;    // (c, e, a, b) -> d_c d_e g_ab
    Tensor3 gamma;  // (a, b, c) -> Gamma^a_bc
};

/// `h <= 0` selects the default finite-difference step. Long geodesics push
/// chart metrics to condition numbers like e^{2t}, so the flow integrator
/// raises `max_condition`.
LocalGeometry local_geometry(const MetricSpec& spec, const Vector& p, double h = 0.0,
                             double max_condition = 1e12);

/// Christoffel symbols only (first derivatives of g, no second derivatives).
Tensor3 christoffel(const MetricSpec& spec, const Vector& p, double h = 0.0);
Tensor3 christoffel(const Matrix& g_inv, const Tensor3& dg);

struct CurvatureData {
    Tensor3 gamma;    // Gamma^a_bc
    Tensor4 riemann;  // R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + ...
    Matrix ricci;     // R_bd = R^a_bad
    Vector at;
    Matrix g;
    Matrix g_inv;
};

CurvatureData riemann_ricci(const MetricSpec& spec, const Vector& p, double h = 0.0);
CurvatureData riemann_ricci(const LocalGeometry& geo);

/// kappa_ad = R_abcd X^b X^c (lower indices) from the full Riemann tensor.
Matrix kappa_from_riemann(const CurvatureData& cd, const Vector& x);

/// Same contraction evaluated directly from the metric jet in O(d^4), without
/// forming the Riemann tensor. Used inside the geodesic-flow integrator.
Matrix kappa_direct(const LocalGeometry& geo, const Vector& x);

/// h_ab = g_ab - X_a X_b.
Matrix transverse_metric(const Matrix& g, const Vector& x);

/// Tr[A B] for lower-index tensors, raised with g^{-1}.
double trace_product(const Matrix& g_inv, const Matrix& a, const Matrix& b);

struct TidalData {
    Matrix kappa;    // kappa_ab
    Matrix w;        // traceless transverse part of kappa
    Matrix w_prime;  // X^c nabla_c W_ab along the geodesic through X
    Matrix h;        // g_ab - X_a X_b
    TangentVector direction;
    double r2 = 0.0;          // -R_mn X^m X^n
    double tr_w2 = 0.0;       // Tr[W^2]
    double tr_wprime2 = 0.0;  // Tr[(W')^2]
};

/// Tidal tensors along unit direction X at p. Throws NonUnitDirection when
/// |g(X, X) - 1| > 1e-8.
TidalData tidal(const MetricSpec& spec, const Vector& p, const Vector& x, bool with_derivative = true);

/// Default step of the transported central difference used for W'.
inline constexpr double kTidalDerivativeStep = 1e-4;

/// Covariant derivative of W along the geodesic through (p, X): one RK4 step of
/// the geodesic + parallel-transport ODE forward and backward over `eps`, W
/// compared in the transported frame, central difference.
Matrix tidal_derivative(const MetricSpec& spec, const Vector& p, const Vector& x,
                        double eps = kTidalDerivativeStep);

/// Eigenvalues of kappa on the subspace orthogonal to X, sorted descending.
Vector sectional_spectrum(const MetricSpec& spec, const Vector& p, const Vector& x);

/// Point plus g-orthonormal frame; column 0 is the geodesic tangent.
struct FrameState {
    Vector pos;
    Matrix frame;
};

/// Time derivative of (pos, frame) under geodesic flow with parallel transport.
FrameState transport_rhs(const Tensor3& gamma, const FrameState& s);

/// One classical RK4 step of the geodesic + parallel-transport ODE.
FrameState transport_step(const MetricSpec& spec, const FrameState& s, double dt);

/// Extremal direction-dependent scalars over the unit tangent sphere at the base point.
struct Extremum {
    double value = 0.0;
    TangentVector direction;
    double grad_norm = 0.0;  // Riemannian gradient norm on the sphere after refinement
};

struct DirectionScan {
    Extremum r2_max;
    Extremum r2_min;
    Extremum w2_min;
    Extremum wprime2_max;
    double w2_at_argmax_r2 = 0.0;
    std::vector<TangentVector> r2_max_ties;  // refined seeds within 1e-9 of r2_max
    int resolution = 0;
    double refine_tol = 0.0;
    Vector point;
    Matrix metric;  // g at the base point, fixes the sphere parametrisation
};

DirectionScan scan_directions(const MetricSpec& spec, int n, double refine_tol = 1e-10);

/// (R^2(X), Tr[W(X)^2]) at the spec's base point, reused by the bounds functional.
struct DirectionalScalars {
    double r2 = 0.0;
    double tr_w2 = 0.0;
};
DirectionalScalars directional_scalars(const CurvatureData& cd, const Vector& x);

}  // namespace geobound
