#pragma once

#include "geobound/curvature.hpp"
#include "geobound/metric.hpp"

#include <functional>
#include <vector>

namespace geobound {

/// Generalised sine: sin(sqrt(k) t)/sqrt(k) up to its first zero and 0 after
/// it (k > 0), t (k = 0), sinh(sqrt(-k) t)/sqrt(-k) (k < 0).
double sn(double k, double t);

/// Area of the unit (d-1)-sphere, 2 pi^{d/2} / Gamma(d/2).
double unit_sphere_area(int d);

/// Volume of the comparison ball of radius t in dimension d whose Ricci
/// curvature along every direction equals `ricci_min` (signed).
double bg_volume(int d, double ricci_min, double t);

/// d/dt log bg_volume, evaluated from the integrand without differencing.
double bg_log_slope(int d, double ricci_min, double t);

/// R^2 - ((sqrt(4 a W^2 + W'^2) - sqrt(W'^2)) / (2 a))^2. `a` is d R^2_max for
/// the plain bound and d R^2_max - R^2_min/(d-1) for the refined one.
double bound_integrand(double r2, double tr_w2, double a, double wprime2);

using DirectionFunctional = std::function<DirectionalScalars(const Vector&)>;

struct RateResult {
    double value = 0.0;  // bound on <theta>^2
    TangentVector direction;
};

/// (d-1) max_X of bound_integrand with a = d R^2_max and the global (W'_max)^2.
/// The maximisation runs over the scan's direction grid and polishes the best
/// seeds on the sphere. Returns 0 when R^2_max = 0; throws DegenerateFlat when
/// R^2_max is negative or not finite.
RateResult new_rate2(const DirectionScan& scan, const DirectionFunctional& per_direction, int d);

/// As new_rate2 with d R^2_max replaced by d R^2_max - R^2_min/(d-1).
RateResult refined_rate2(const DirectionScan& scan, const DirectionFunctional& per_direction, int d);

/// sum_i sqrt(kappa_i); throws NegativeKappa if an entry is below -1e-10.
double symmetric_space_rate(const Vector& spectrum);

/// sqrt((d-1) sum_i kappa_i) with d-1 = spectrum size.
double perfect_precession_rate(const Vector& spectrum);

struct StrategySegment {
    double weight = 0.0;
    double r2 = 0.0;
    double tr_w2 = 0.0;
    double tr_wprime2 = 0.0;
};

/// <R^2> - ((sqrt(4 d R^2_max <W^2> + <W'^2>) - sqrt(<W'^2>)) / (2 d R^2_max))^2
/// with <.> the weighted mixture, i.e. the bound on <theta>^2/(d-1) for a
/// geodesic that spends the given fractions of time in each direction.
/// Throws BadWeights unless the weights are nonnegative and sum to one.
double strategy_functional(const std::vector<StrategySegment>& segments, int d, double r2_max);

struct BoundReport {
    int d = 0;
    double r2_max = 0.0;
    double r2_min = 0.0;
    double w2_min = 0.0;
    double wprime2_max = 0.0;
    double bg_rate2 = 0.0;
    double new_rate2 = 0.0;
    double refined_rate2 = 0.0;
    double symmetric_rate = 0.0;
    double perfect_precession_rate = 0.0;
    Vector spectrum;  // sectional spectrum at the argmax direction
    TangentVector argmax_direction;
    TangentVector refined_argmax_direction;
    DirectionScan scan;

    double bg_volume(double t) const { return geobound::bg_volume(d, -r2_max, t); }
};

/// Direction scan at the base point followed by every bound.
BoundReport compute_bounds(const MetricSpec& spec, int n, double refine_tol = 1e-10);

}  // namespace geobound
