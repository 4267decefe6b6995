#include "geobound/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace geobound {
namespace {

constexpr double kLocateTolerance = 1e-10;

struct JState {
    double j;
    double jp;
};

JState rk4_step(const KappaSchedule& kappa, double t, const JState& s, double h) {
    auto f = [&](double tt, const JState& y) { return JState{y.jp, kappa(tt) * y.j}; };
    const JState k1 = f(t, s);
    const JState k2 = f(t + 0.5 * h, {s.j + 0.5 * h * k1.j, s.jp + 0.5 * h * k1.jp});
    const JState k3 = f(t + 0.5 * h, {s.j + 0.5 * h * k2.j, s.jp + 0.5 * h * k2.jp});
    const JState k4 = f(t + h, {s.j + h * k3.j, s.jp + h * k3.jp});
    return {s.j + h / 6.0 * (k1.j + 2.0 * k2.j + 2.0 * k3.j + k4.j),
            s.jp + h / 6.0 * (k1.jp + 2.0 * k2.jp + 2.0 * k3.jp + k4.jp)};
}

// Advances one step of size h from (t, s) applying the stick-at-zero rule.
JState advance(const KappaSchedule& kappa, double t, const JState& s, double h, std::optional<double>& stuck) {
    if (stuck) return {0.0, 0.0};
    const JState next = rk4_step(kappa, t, s, h);
    if (next.j > 0.0 || t + h <= 0.0) return next;
    double lo = 0.0, hi = h;
    while (hi - lo > kLocateTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (rk4_step(kappa, t, s, mid).j > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    stuck = t + 0.5 * (lo + hi);
    return {0.0, 0.0};
}

double relative(double margin, double scale) {
    if (scale <= 0.0) return 0.0;
    return margin / scale;
}

KappaSchedule mixture(std::shared_ptr<const std::vector<KappaSchedule>> base, std::vector<double> weights) {
    return {[base, weights](double t) {
                double s = 0.0;
                for (std::size_t k = 0; k < base->size(); ++k)
                    if (weights[k] != 0.0) s += weights[k] * (*base)[k](t);
                return s;
            },
            "mixture"};
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++used;
    }
    if (used < 2) return 0.0;
    return (used * sxy - sx * sy) / (used * sxx - sx * sx);
}

}  // namespace

KappaSchedule constant_schedule(double k) {
    return {[k](double) { return k; }, "const(" + std::to_string(k) + ")"};
}

KappaSchedule random_schedule(std::mt19937_64& rng, int terms, double amplitude, double period) {
    std::uniform_real_distribution<double> coef(-amplitude, amplitude);
    std::vector<double> a(static_cast<std::size_t>(terms) + 1), b(static_cast<std::size_t>(terms) + 1);
    for (int m = 0; m <= terms; ++m) {
        a[static_cast<std::size_t>(m)] = coef(rng);
        b[static_cast<std::size_t>(m)] = coef(rng);
    }
    const double omega = 2.0 * std::numbers::pi / period;
    return {[a, b, omega, terms](double t) {
                double s = a[0];
                for (int m = 1; m <= terms; ++m)
                    s += a[static_cast<std::size_t>(m)] * std::cos(m * omega * t) +
                         b[static_cast<std::size_t>(m)] * std::sin(m * omega * t);
                return s;
            },
            "fourier"};
}

KappaSchedule average_pair(const KappaSchedule& k1, const KappaSchedule& k2) {
    return {[k1, k2](double t) { return 0.5 * (k1(t) + k2(t)); }, "avg(" + k1.label + "," + k2.label + ")"};
}

JacobiSolution solve_jacobi(const KappaSchedule& kappa, double t_end, double dt) {
    JacobiSolution sol;
    JState s{0.0, 1.0};
    double t = 0.0;
    sol.t.push_back(t);
    sol.j.push_back(s.j);
    sol.jp.push_back(s.jp);
    const long steps = static_cast<long>(std::floor(t_end / dt * (1.0 + 1e-12)));
    for (long k = 1; k <= steps + 1; ++k) {
        double t_next = static_cast<double>(k) * dt;
        if (k == steps + 1) {
            if (t_end - t <= 1e-12 * std::max(1.0, t_end)) break;
            t_next = t_end;
        }
        s = advance(kappa, t, s, t_next - t, sol.stuck_at);
        t = t_next;
        sol.t.push_back(t);
        sol.j.push_back(s.j);
        sol.jp.push_back(s.jp);
    }
    return sol;
}

LemmaCheck multiplicative_lemma_check(const KappaSchedule& k1, const KappaSchedule& k2, double t_end, double dt,
                                      double tolerance) {
    const JacobiSolution s1 = solve_jacobi(k1, t_end, dt);
    const JacobiSolution s2 = solve_jacobi(k2, t_end, dt);
    const JacobiSolution sa = solve_jacobi(average_pair(k1, k2), t_end, dt);
    LemmaCheck out;
    out.min_product_margin = std::numeric_limits<double>::infinity();
    out.min_ratio_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < sa.t.size(); ++i) {
        const double j1 = s1.j[i], j2 = s2.j[i], ja = sa.j[i];
        const double prod = j1 * j2;
        if (ja == 0.0 && prod > 0.0) {
            out.av_stuck_events.push_back(sa.t[i]);
        } else {
            const double pm = relative(ja * ja - prod, std::max(ja * ja, std::abs(prod)));
            out.min_product_margin = std::min(out.min_product_margin, pm);
        }
        if (j1 > 0.0 && j2 > 0.0 && ja > 0.0) {
            const double ra = 2.0 * sa.jp[i] / ja, r1 = s1.jp[i] / j1, r2 = s2.jp[i] / j2;
            const double rm = relative(ra - r1 - r2, std::abs(ra) + std::abs(r1) + std::abs(r2));
            out.min_ratio_margin = std::min(out.min_ratio_margin, rm);
        }
    }
    if (std::isinf(out.min_product_margin)) out.min_product_margin = 0.0;
    if (std::isinf(out.min_ratio_margin)) out.min_ratio_margin = 0.0;
    out.product_holds = out.min_product_margin >= -tolerance;
    out.ratio_holds = out.min_ratio_margin >= -tolerance;
    out.min_margin = std::min(out.min_product_margin, out.min_ratio_margin);
    return out;
}

double lemma_taylor_coefficient(const KappaSchedule& k1, const KappaSchedule& k2, double t_lo, double t_hi, double dt) {
    const JacobiSolution s1 = solve_jacobi(k1, t_hi, dt);
    const JacobiSolution s2 = solve_jacobi(k2, t_hi, dt);
    const JacobiSolution sa = solve_jacobi(average_pair(k1, k2), t_hi, dt);
    // normal equations for D = c t^3 + e t^4, scaled by t_hi to keep them well conditioned
    double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
    for (std::size_t i = 0; i < sa.t.size(); ++i) {
        const double t = sa.t[i];
        if (t < t_lo || t > t_hi * (1.0 + 1e-12)) continue;
        const double dv = 2.0 * sa.jp[i] / sa.j[i] - s1.jp[i] / s1.j[i] - s2.jp[i] / s2.j[i];
        const double u = t / t_hi;
        const double p3 = u * u * u, p4 = p3 * u;
        a11 += p3 * p3;
        a12 += p3 * p4;
        a22 += p4 * p4;
        b1 += p3 * dv;
        b2 += p4 * dv;
    }
    const double det = a11 * a22 - a12 * a12;
    const double c_scaled = (a22 * b1 - a12 * b2) / det;
    return c_scaled / (t_hi * t_hi * t_hi);
}

double lemma_taylor_prediction(const KappaSchedule& k1, const KappaSchedule& k2) {
    const double a = k1(0.0), b = k2(0.0), av = 0.5 * (a + b);
    return (a * a + b * b - 2.0 * av * av) / 45.0;
}

MultiAverageResult multi_average_check(const std::vector<KappaSchedule>& ks, double t_end, double dt,
                                       std::mt19937_64& rng, int max_steps) {
    const std::size_t m = ks.size();
    auto base = std::make_shared<const std::vector<KappaSchedule>>(ks);
    std::vector<std::vector<double>> weights(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) weights[i][i] = 1.0;

    constexpr int probes = 200;
    std::vector<std::vector<double>> values(m, std::vector<double>(probes + 1));
    for (std::size_t k = 0; k < m; ++k)
        for (int p = 0; p <= probes; ++p) values[k][static_cast<std::size_t>(p)] = ks[k](t_end * p / probes);

    auto product = [&]() {
        double prod = 1.0;
        for (std::size_t i = 0; i < m; ++i) prod *= solve_jacobi(mixture(base, weights[i]), t_end, dt).j.back();
        return prod;
    };
    auto spread = [&]() {
        double worst = 0.0;
        for (int p = 0; p <= probes; ++p) {
            std::vector<double> kv(m, 0.0);
            double mean = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t k = 0; k < m; ++k) kv[i] += weights[i][k] * values[k][static_cast<std::size_t>(p)];
                mean += kv[i] / static_cast<double>(m);
            }
            for (double v : kv) worst = std::max(worst, std::abs(v - mean));
        }
        return worst;
    };

    MultiAverageResult out;
    out.products.push_back(product());
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    for (int step = 0; step < max_steps && m >= 2; ++step) {
        if (spread() < 1e-9) break;
        const std::size_t i = pick(rng);
        std::size_t j = pick(rng);
        while (j == i) j = pick(rng);
        for (std::size_t k = 0; k < m; ++k) {
            const double w = 0.5 * (weights[i][k] + weights[j][k]);
            weights[i][k] = w;
            weights[j][k] = w;
        }
        const double next = product();
        if (next < out.products.back() - 1e-10 * std::abs(out.products.back())) out.monotone = false;
        out.products.push_back(next);
    }
    out.final_spread = spread();
    return out;
}

JacobiSolution shuffle_evolve(const KappaSchedule& k1, const KappaSchedule& k2, double delta, double t_end,
                              double max_step) {
    JacobiSolution sol;
    JState s{0.0, 1.0};
    sol.t.push_back(0.0);
    sol.j.push_back(s.j);
    sol.jp.push_back(s.jp);
    const long intervals = static_cast<long>(std::ceil(t_end / delta - 1e-9));
    const double h_max = std::min(max_step, delta / 4.0);
    for (long m = 0; m < intervals; ++m) {
        const double ta = static_cast<double>(m) * delta;
        const double tb = std::min(static_cast<double>(m + 1) * delta, t_end);
        const KappaSchedule& k = (m % 2 == 0) ? k1 : k2;
        const int sub = std::max(1, static_cast<int>(std::ceil((tb - ta) / h_max - 1e-9)));
        const double h = (tb - ta) / sub;
        for (int i = 0; i < sub; ++i) s = advance(k, ta + i * h, s, h, sol.stuck_at);
        sol.t.push_back(tb);
        sol.j.push_back(s.j);
        sol.jp.push_back(s.jp);
    }
    return sol;
}

ShuffleStudy shuffle_convergence(const KappaSchedule& k1, const KappaSchedule& k2, const std::vector<double>& deltas,
                                 double t_end) {
    ShuffleStudy study;
    study.deltas = deltas;
    const double finest = *std::min_element(deltas.begin(), deltas.end());
    const double ref_dt = std::min(1e-3, finest / 4.0);
    const JacobiSolution ref = solve_jacobi(average_pair(k1, k2), t_end, ref_dt);
    study.j_av = ref.j.back();
    for (double delta : deltas) {
        const JacobiSolution sh = shuffle_evolve(k1, k2, delta, t_end);
        const double dj = std::abs(sh.j.back() - ref.j.back());
        study.errors.push_back(dj);
        study.state_errors.push_back(dj + std::abs(sh.jp.back() - ref.jp.back()));
    }
    study.slope = log_log_slope(deltas, study.errors);
    study.state_slope = log_log_slope(deltas, study.state_errors);
    return study;
}

}  // namespace geobound
