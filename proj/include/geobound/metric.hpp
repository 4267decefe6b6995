#pragma once

#include "geobound/tensor.hpp"

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace geobound {

/// A Riemannian metric on a single coordinate chart.
///
/// `components` is mandatory. `derivs` (first partials, laid out as
/// `(c, a, b) -> d_c g_ab`) and `second_derivs` (`(c, e, a, b) -> d_c d_e g_ab`)
/// are optional; when absent they are recovered by central differences.
struct MetricSpec {
    std::string name;
    int dim = 0;
    std::function<Matrix(const Vector&)> components;
    std::function<Tensor3(const Vector&)> derivs;
    std::function<Tensor4(const Vector&)> second_derivs;
    Vector base_point;
    std::map<std::string, double> params;
};

struct TangentVector {
    Vector point;
    Vector comps;
};

/// Default central-difference step, 1e-5 * (1 + |p|_inf).
double default_fd_step(const Vector& p);

Matrix metric_at(const MetricSpec& spec, const Vector& p);

/// Inverse metric; throws SingularMetric when g is not positive definite or its
/// condition number exceeds `max_condition`.
Matrix inverse_metric(const Matrix& g, double max_condition = 1e12);

/// First partial derivatives of the metric. Uses the analytic derivative when the
/// spec supplies one, otherwise central differences with step `h` (h <= 0 selects
/// the default step).
Tensor3 metric_derivs(const MetricSpec& spec, const Vector& p, double h = 0.0);

/// Central-difference first derivatives regardless of analytic availability.
Tensor3 metric_derivs_fd(const MetricSpec& spec, const Vector& p, double h = 0.0);

/// Second partial derivatives of the metric.
Tensor4 metric_second_derivs(const MetricSpec& spec, const Vector& p, double h = 0.0);

/// sqrt(g(X, X)).
double unit_norm(const Matrix& g, const Vector& x);

/// Quasi-uniform points on the Euclidean unit (dim-1)-sphere: evenly spaced
/// angles for dim 2, a Fibonacci spiral for dim 3, and normalised Box-Muller
/// images of a Kronecker (generalised golden ratio) sequence above that.
std::vector<Vector> unit_sphere_points(int dim, int n);

/// `n` g-unit tangent vectors obtained by mapping unit_sphere_points through g^{-1/2}.
std::vector<TangentVector> sphere_directions(const Matrix& g, int n, const Vector& point = Vector());

/// Uniformly distributed g-unit vector: an isotropic Gaussian sample mapped
/// through g^{-1/2} and normalised.
Vector random_unit_direction(const Matrix& g, std::mt19937_64& rng);

/// g-orthonormal frame as matrix columns, first column along `first`
/// (Gram-Schmidt against the coordinate axes).
Matrix orthonormal_frame(const Matrix& g, const Vector& first);

}  // namespace geobound
