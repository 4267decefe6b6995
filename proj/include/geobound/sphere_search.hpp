#pragma once

#include "geobound/tensor.hpp"

#include <functional>
#include <vector>

namespace geobound {

using SphereObjective = std::function<double(const Vector&)>;

struct SphereSearchResult {
    Vector u;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
};

/// Local refinement of an extremum of `f` on the Euclidean unit sphere, starting
/// at `u0`. Saddle-free Newton steps in a tangent chart with finite-difference
/// derivatives, backtracking line search, at most `max_iter` iterations; stops
/// once the accepted step is shorter than `tol`.
SphereSearchResult refine_on_sphere(const SphereObjective& f, const Vector& u0, bool maximize,
                                    double tol, int max_iter = 200);

/// Riemannian gradient norm of f on the sphere at u (fourth-order differences).
double sphere_gradient_norm(const SphereObjective& f, const Vector& u);

/// Indices of the `k` best grid values (largest when maximize), ties to the lowest index.
std::vector<int> best_indices(const std::vector<double>& values, int k, bool maximize);

/// Grid search over `points` followed by refinement of the best few seeds.
/// The reported optimum is the best refined value; ties keep the lowest grid index.
struct SphereOptimum {
    SphereSearchResult best;
    std::vector<SphereSearchResult> refined;  // one per seed, in seed order
};
SphereOptimum optimize_on_sphere(const SphereObjective& f, const std::vector<Vector>& points,
                                 bool maximize, double tol, int seeds = 4);

}  // namespace geobound
