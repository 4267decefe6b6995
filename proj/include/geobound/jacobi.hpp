#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace geobound {

struct KappaSchedule {
    std::function<double(double)> fn;
    std::string label;

    double operator()(double t) const { return fn(t); }
};

KappaSchedule constant_schedule(double k);

/// a_0 + sum_{m=1}^{terms} (a_m cos(2 pi m t / period) + b_m sin(2 pi m t / period)),
/// coefficients uniform in [-amplitude, amplitude].
KappaSchedule random_schedule(std::mt19937_64& rng, int terms = 4, double amplitude = 1.0, double period = 4.0);

/// Pointwise mean of two schedules.
KappaSchedule average_pair(const KappaSchedule& k1, const KappaSchedule& k2);

struct JacobiSolution {
    std::vector<double> t;
    std::vector<double> j;
    std::vector<double> jp;
    std::optional<double> stuck_at;
};

/// RK4 for j'' = kappa(t) j from j(0) = 0, j'(0) = 1 on the grid k dt (plus
/// t_end). A zero crossing is located by bisection on the RK4 sub-step to
/// 1e-10; from then on j = j' = 0.
JacobiSolution solve_jacobi(const KappaSchedule& kappa, double t_end, double dt);

struct LemmaCheck {
    bool product_holds = true;  // j_av^2 >= j1 j2
    bool ratio_holds = true;    // 2 j_av'/j_av >= j1'/j1 + j2'/j2 while all three are positive
    double min_margin = 0.0;    // smallest relative margin of either inequality
    double min_product_margin = 0.0;
    double min_ratio_margin = 0.0;
    // times where j_av is stuck at zero while j1 j2 > 0; logged, not asserted
    std::vector<double> av_stuck_events;
};

LemmaCheck multiplicative_lemma_check(const KappaSchedule& k1, const KappaSchedule& k2, double t_end, double dt,
                                      double tolerance = 1e-10);

/// Least-squares fit of 2 j_av'/j_av - j1'/j1 - j2'/j2 = c t^3 + e t^4 on
/// [t_lo, t_hi]; returns c.
double lemma_taylor_coefficient(const KappaSchedule& k1, const KappaSchedule& k2, double t_lo = 1e-3,
                                double t_hi = 1e-2, double dt = 1e-5);

/// (1/45)(k1(0)^2 + k2(0)^2 - 2 k_av(0)^2).
double lemma_taylor_prediction(const KappaSchedule& k1, const KappaSchedule& k2);

struct MultiAverageResult {
    bool monotone = true;
    std::vector<double> products;  // prod_i j_i(t_end) after each averaging step
    double final_spread = 0.0;     // max_i,t |k_i(t) - mean(t)| on the grid
};

/// Repeatedly replaces a random pair of schedules by their average and checks
/// that prod_i j_i(t_end) never decreases. Stops after `max_steps` or once the
/// schedules agree to 1e-9 on the grid.
MultiAverageResult multi_average_check(const std::vector<KappaSchedule>& ks, double t_end, double dt,
                                       std::mt19937_64& rng, int max_steps = 60);

/// Evolves with k1 on [0, delta), k2 on [delta, 2 delta), ... Samples at every
/// interval end. Internal RK4 step <= min(max_step, delta/4).
JacobiSolution shuffle_evolve(const KappaSchedule& k1, const KappaSchedule& k2, double delta, double t_end,
                              double max_step = 1e-3);

/// Distance of the shuffled evolution from the averaged one at t_end, per delta.
/// The j error alone converges like delta^2 (a kick to j' at t_end does not move
/// j(t_end), so the first-order term integrates to zero); the state error
/// |j - j_av| + |j' - j_av'| shows the first-order rate.
struct ShuffleStudy {
    std::vector<double> deltas;
    std::vector<double> errors;        // |j_shuffled(t_end) - j_av(t_end)|
    std::vector<double> state_errors;  // |dj| + |dj'|
    double slope = 0.0;                // log-log least squares on `errors`
    double state_slope = 0.0;          // log-log least squares on `state_errors`
    double j_av = 0.0;
};

ShuffleStudy shuffle_convergence(const KappaSchedule& k1, const KappaSchedule& k2, const std::vector<double>& deltas,
                                 double t_end);

}  // namespace geobound
