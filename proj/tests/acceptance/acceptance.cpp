// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "geobound/bounds.hpp"
#include "geobound/catalog.hpp"
#include "geobound/curvature.hpp"
#include "geobound/error.hpp"
#include "geobound/flow.hpp"
#include "geobound/jacobi.hpp"
#include "geobound/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

using namespace geobound;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
    bool pass = true;
    std::vector<std::string> lines;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

FlowOptions options(double t_end, double dt) {
    FlowOptions o;
    o.t_end = t_end;
    o.dt = dt;
    return o;
}

double squashed_closed_form(double c) {
    const double root = std::sqrt(3.0 * c * c + 3.0 * c + 1.0) - 1.0;
    return 2.0 * (c * (1.0 + c) - (c - 1.0) * (c - 1.0) * root * root / (18.0 * (c + 1.0) * (c + 1.0)));
}

// ---------------------------------------------------------------- 1

Outcome criterion1() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const CatalogEntry e = get("h2xh2");
    const BoundReport r = compute_bounds(e.spec, 64 * 16);
    o.check(std::abs(r.bg_rate2 - 3.0) < 1e-9, fmt("bg_rate2 = %.15g (3)", r.bg_rate2));
    o.check(std::abs(r.new_rate2 - 23.0 / 8.0) < 1e-9,
            fmt("new_rate2 = %.15g (23/8, diff %.2e)", r.new_rate2, r.new_rate2 - 23.0 / 8.0));
    o.check(std::abs(r.refined_rate2 - 63.0 / 22.0) < 1e-9,
            fmt("refined_rate2 = %.15g (63/22, diff %.2e)", r.refined_rate2, r.refined_rate2 - 63.0 / 22.0));
    const FlowSeries s = integrate_flow(e.spec, e.diagonal, options(50.0, 1e-3));
    const double theta = asymptotic_theta(s, 5.0, 50.0);
    o.check(std::abs(theta * theta - 2.0) < 1e-2, fmt("<theta>^2 along diag to t=50 = %.6f (2 +- 1e-2)", theta * theta));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs < 10.0, fmt("runtime %.2f s (< 10 s)", secs));
    return o;
}

// ---------------------------------------------------------------- 2

Outcome criterion2() {
    Outcome o;
    for (double c : {1.5, 2.0, 4.0}) {
        const BoundReport r = compute_bounds(get("squashed-h3", {{"c", c}}).spec, 64 * 9);
        const double expected = squashed_closed_form(c);
        o.check(std::abs(r.new_rate2 - expected) < 1e-6,
                fmt("c=%g new_rate2 = %.12g closed form %.12g (diff %.2e)", c, r.new_rate2, expected,
                    r.new_rate2 - expected));
    }
    const BoundReport round = compute_bounds(get("squashed-h3", {{"c", 1.0}}).spec, 64 * 9);
    o.check(std::abs(round.new_rate2 - round.bg_rate2) <= 1e-12 * round.bg_rate2,
            fmt("c=1 new_rate2 = %.17g bg_rate2 = %.17g", round.new_rate2, round.bg_rate2));
    const BoundReport big = compute_bounds(get("squashed-h3", {{"c", 1000.0}}).spec, 64 * 9);
    const double fraction = 1.0 - std::sqrt(big.new_rate2 / big.bg_rate2);
    const double limit = 1.0 - std::sqrt(5.0 / 6.0);
    o.check(std::abs(fraction - limit) < 1e-3,
            fmt("c=1000 improvement fraction %.6f, limit 1-sqrt(5/6) = %.6f", fraction, limit));
    return o;
}

// ---------------------------------------------------------------- 3

Outcome criterion3() {
    Outcome o;
    std::vector<double> worst(4, 0.0);
    parallel_for(4, [&](std::size_t i) {
        const int d = 3 + static_cast<int>(i);
        const CatalogEntry e = get("hd", {{"d", d}});
        const FlowSeries s = integrate_flow(e.spec, e.diagonal, options(20.0, 1e-3));
        for (const auto& smp : s.samples)
            if (smp.t >= 0.1 - 1e-12)
                worst[i] = std::max(worst[i], std::abs(smp.dec.theta - (d - 1.0) / std::tanh(smp.t)));
    });
    for (int i = 0; i < 4; ++i)
        o.check(worst[static_cast<std::size_t>(i)] < 1e-6,
                fmt("H^%d theta vs (d-1) coth t on [0.1, 20]: max error %.2e", 3 + i, worst[static_cast<std::size_t>(i)]));
    for (int n : {1, 2, 3}) {
        const BoundReport r = compute_bounds(get("h2n", {{"n", n}}).spec, 256);
        const double slope = bg_log_slope(2 * n, -r.r2_max, 60.0);
        o.check(std::abs(slope - std::sqrt(2.0 * n - 1.0)) < 1e-3,
                fmt("(H^2)^%d BG log-slope at t=60: %.9f vs sqrt(%d) = %.9f", n, slope, 2 * n - 1,
                    std::sqrt(2.0 * n - 1.0)));
    }
    return o;
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
    Outcome o;
    const double tol = 1e-5;
    {
        const CatalogEntry e = get("h2xh2");
        const FlowSeries a = integrate_flow(e.spec, e.diagonal, options(20.0, 1e-3));
        const RaychaudhuriResiduals ra = raychaudhuri_residuals(a);
        double oracle = 0.0;
        const double v = 1.0 / std::sqrt(2.0);
        for (const auto& smp : a.samples) {
            if (smp.t < 0.1) continue;
            const std::vector<double> tau = {v * smp.t, v * smp.t};
            oracle = std::max({oracle, std::abs(smp.dec.theta - oracle_eval(e, "theta", tau)),
                               std::abs(smp.sigma2 - oracle_eval(e, "sigma2", tau)),
                               std::abs(smp.tr_sigma3 - oracle_eval(e, "tr_sigma3", tau)),
                               std::abs((smp.dec.sigma * smp.w).trace() - oracle_eval(e, "sigma_dot_w", tau))});
        }
        const RaychaudhuriResiduals rb = raychaudhuri_residuals(integrate_flow(e.spec, e.diagonal, options(20.0, 5e-4)));
        o.check(ra.first < tol && ra.second < tol,
                fmt("H2xH2 diag residuals at dt=1e-3: first %.2e second %.2e (< 1e-5)", ra.first, ra.second));
        o.check(oracle < 1e-6, fmt("H2xH2 closed forms theta, sigma^2, Tr s^3, s.W: max error %.2e", oracle));
        const double q1 = ra.first / rb.first, q2 = ra.second / rb.second;
        o.check(q1 >= 3.5 && q1 <= 4.5 && q2 >= 3.5 && q2 <= 4.5,
                fmt("H2xH2 halving dt: ratios %.3f, %.3f (in [3.5, 4.5])", q1, q2));
    }
    const CatalogEntry sq = get("squashed-h3", {{"c", 2.0}});
    const Matrix g = metric_at(sq.spec, sq.spec.base_point);
    std::mt19937_64 rng(2024);
    std::vector<Vector> dirs;
    for (int i = 0; i < 50; ++i) dirs.push_back(random_unit_direction(g, rng));
    std::vector<RaychaudhuriResiduals> coarse(dirs.size()), fine(dirs.size());
    parallel_for(dirs.size(), [&](std::size_t i) {
        coarse[i] = raychaudhuri_residuals(integrate_flow(sq.spec, dirs[i], options(5.0, 1e-3)));
        fine[i] = raychaudhuri_residuals(integrate_flow(sq.spec, dirs[i], options(5.0, 5e-4)));
    });
    double max1 = 0, max2 = 0, qlo = kInf, qhi = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        max1 = std::max(max1, coarse[i].first);
        max2 = std::max(max2, coarse[i].second);
        for (double q : {coarse[i].first / fine[i].first, coarse[i].second / fine[i].second}) {
            qlo = std::min(qlo, q);
            qhi = std::max(qhi, q);
        }
    }
    o.check(max1 < tol && max2 < tol,
            fmt("squashed c=2, 50 random directions, dt=1e-3: max first %.2e second %.2e", max1, max2));
    o.check(qlo >= 3.5 && qhi <= 4.5, fmt("squashed halving dt: ratios in [%.3f, %.3f]", qlo, qhi));
    return o;
}

// ---------------------------------------------------------------- 5

Outcome identity_case(const std::string& label, const CatalogEntry& e, double r2_max) {
    Outcome o;
    const double r = std::sqrt(r2_max);
    const double burn = 10.0 / r, window = 50.0 / r;
    FlowSeries s = integrate_flow(e.spec, e.diagonal, options(burn + 2.0 * window, 1e-3));
    const AverageReport doubled = averaged_identity_residual(s, burn, r2_max);
    s.samples.erase(std::find_if(s.samples.begin(), s.samples.end(),
                                 [&](const FlowSample& x) { return x.t > burn + window + 1e-9; }),
                    s.samples.end());
    const AverageReport single = averaged_identity_residual(s, burn, r2_max);
    o.check(single.identity_residual < 1e-2,
            fmt("%s window 50/R_max (burn-in 10/R_max): residual %.3e (< 1e-2)", label.c_str(), single.identity_residual));
    o.check(doubled.identity_residual < single.identity_residual,
            fmt("%s doubled window: residual %.3e (decreases)", label.c_str(), doubled.identity_residual));
    return o;
}

Outcome criterion5() {
    Outcome o;
    for (const Outcome& part : {identity_case("H2xH2", get("h2xh2"), 1.0),
                                identity_case("squashed c=2", get("squashed-h3", {{"c", 2.0}}), 6.0)}) {
        o.pass = o.pass && part.pass;
        o.lines.insert(o.lines.end(), part.lines.begin(), part.lines.end());
    }
    return o;
}

// ---------------------------------------------------------------- 6

Outcome criterion6() {
    Outcome o;
    const std::vector<std::pair<std::string, CatalogEntry>> metrics = {
        {"H2xH2", get("h2xh2")}, {"squashed c=2", get("squashed-h3", {{"c", 2.0}})}, {"(H2)^3", get("h2n", {{"n", 3}})}};
    for (const auto& [label, e] : metrics) {
        std::mt19937_64 rng(606);
        const Matrix g = metric_at(e.spec, e.spec.base_point);
        std::vector<Vector> dirs;
        for (int i = 0; i < 100; ++i) dirs.push_back(random_unit_direction(g, rng));
        std::vector<double> mins(dirs.size(), -kInf);
        parallel_for(dirs.size(), [&](std::size_t i) {
            try {
                mins[i] = positivity_run(e.spec, dirs[i], options(50.0, 1e-2), 0.1);
            } catch (const CausticError&) {
                mins[i] = -kInf;
            }
        });
        const double worst = *std::min_element(mins.begin(), mins.end());
        o.check(worst > 0.0, fmt("%s, 100 random directions, t in [0.1, 50]: min eigenvalue of M %.6f", label.c_str(), worst));
    }
    return o;
}

// ---------------------------------------------------------------- 7

Matrix random_shear(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    Matrix s = a + a.transpose();
    return s - (s.trace() / n) * Matrix::Identity(n, n);
}

Outcome criterion7() {
    Outcome o;
    for (int d = 3; d <= 8; ++d) {
        const int n = d - 1;
        std::mt19937_64 rng(700 + static_cast<unsigned>(d));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        int bad = 0, bad_pos = 0;
        double m1 = kInf, m2 = kInf, m0 = kInf;
        for (int k = 0; k < 10000; ++k) {
            const TraceCheck c = shear_trace_bounds_check(random_shear(n, rng), 0.0, false);
            if (!c.holds[1] || !c.holds[2]) ++bad;
            m1 = std::min(m1, c.margin[1]);
            m2 = std::min(m2, c.margin[2]);
            Vector ev(n);
            for (int i = 0; i < n; ++i) ev(i) = uni(rng);
            const Matrix q = Eigen::HouseholderQR<Matrix>(random_shear(n, rng) + Matrix::Identity(n, n)).householderQ();
            const Matrix m = q * ev.asDiagonal() * q.transpose();
            const double theta = m.trace();
            const TraceCheck p = shear_trace_bounds_check(m - theta / n * Matrix::Identity(n, n), theta, true);
            if (!p.holds[0]) ++bad_pos;
            m0 = std::min(m0, p.margin[0]);
        }
        Vector pattern = Vector::Constant(n, -1.0);
        pattern(0) = d - 2.0;
        const TraceCheck sat = shear_trace_bounds_check(Matrix(pattern.asDiagonal()), 0.0, false);
        o.check(bad == 0 && bad_pos == 0 && std::abs(sat.margin[1]) < 1e-9 && std::abs(sat.margin[2]) < 1e-9,
                fmt("d=%d: 1e4 random shears, violations %d/%d, min margins cubic %.2e quartic %.2e positive-M %.2e, "
                    "pattern margins %.1e %.1e",
                    d, bad, bad_pos, m1, m2, m0, sat.margin[1], sat.margin[2]));
    }
    return o;
}

// ---------------------------------------------------------------- 8

Outcome criterion8() {
    Outcome o;
    std::mt19937_64 rng(808);
    std::vector<std::pair<KappaSchedule, KappaSchedule>> pairs;
    for (int i = 0; i < 1000; ++i) {
        KappaSchedule a = random_schedule(rng);
        KappaSchedule b = random_schedule(rng);
        pairs.emplace_back(std::move(a), std::move(b));
    }
    std::vector<LemmaCheck> checks(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        checks[i] = multiplicative_lemma_check(pairs[i].first, pairs[i].second, 3.0, 1e-3);
    });
    double worst = kInf;
    std::size_t stuck = 0;
    for (const auto& c : checks) {
        worst = std::min(worst, c.min_margin);
        stuck += c.av_stuck_events.size();
    }
    o.check(worst >= -1e-10, fmt("1000 random schedule pairs: min relative margin %.2e (>= -1e-10), %zu logged "
                                 "j_av stick events",
                                 worst, stuck));

    double taylor_worst = 0.0;
    int tested = 0;
    std::mt19937_64 trng(809);
    std::vector<std::pair<KappaSchedule, KappaSchedule>> tpairs = {{constant_schedule(4.0), constant_schedule(0.0)}};
    while (tpairs.size() < 6) {
        KappaSchedule a = random_schedule(trng), b = random_schedule(trng);
        if (lemma_taylor_prediction(a, b) > 1e-2) tpairs.emplace_back(std::move(a), std::move(b));
    }
    for (const auto& [a, b] : tpairs) {
        const double p = lemma_taylor_prediction(a, b);
        taylor_worst = std::max(taylor_worst, std::abs(lemma_taylor_coefficient(a, b) - p) / p);
        ++tested;
    }
    o.check(taylor_worst < 0.05, fmt("t^3 coefficient on %d pairs: worst relative error %.2e (< 5%%)", tested, taylor_worst));

    const ShuffleStudy st =
        shuffle_convergence(constant_schedule(4.0), constant_schedule(0.0), {1e-1, 1e-2, 1e-3, 1e-4}, 2.0);
    o.check(st.state_slope >= 0.8 && st.state_slope <= 1.2,
            fmt("shuffle convergence slope of the state error %.3f (in [0.8, 1.2]); j(t_end) alone %.3f", st.state_slope,
                st.slope));
    return o;
}

// ---------------------------------------------------------------- 9

Outcome criterion9() {
    Outcome o;
    const double pure1 = strategy_functional({{1.0, 1.0, 1.0, 0.0}}, 4, 1.0);
    const double pure2 = strategy_functional({{1.0, 1.0, 2.0, 4.0}}, 4, 1.0);
    const double mixed = strategy_functional({{0.5, 1.0, 1.0, 0.0}, {0.5, 1.0, 2.0, 4.0}}, 4, 1.0);
    const double margin = mixed - std::max(pure1, pure2);
    o.check(margin > 0.0, fmt("d=4: pure %.6f, %.6f, mixed %.6f, margin %.6f", pure1, pure2, mixed, margin));
    return o;
}

// ---------------------------------------------------------------- 10

Outcome criterion10() {
    Outcome o;
    std::vector<double> theta(2);
    parallel_for(2, [&](std::size_t i) {
        const int n = 2 + static_cast<int>(i);
        const CatalogEntry e = get("h2n", {{"n", n}});
        theta[i] = asymptotic_theta(integrate_flow(e.spec, e.diagonal, options(50.0, 1e-3)), 5.0, 50.0);
    });
    for (int n : {2, 3}) {
        const double t = theta[static_cast<std::size_t>(n - 2)];
        o.check(std::abs(t - std::sqrt(n)) < 1e-3 && t < std::sqrt(2.0 * n - 1.0),
                fmt("(H2)^%d diag <theta> = %.6f, sqrt(n) = %.6f, BG exponent %.6f", n, t, std::sqrt(n),
                    std::sqrt(2.0 * n - 1.0)));
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"H2xH2 bound chain and measured rate", criterion1},
        {"squashed H3 closed form, c=1 and large-c limit", criterion2},
        {"BG recovery on H^d and comparison slope", criterion3},
        {"Raychaudhuri residual suite", criterion4},
        {"averaged identity", criterion5},
        {"positivity of the expansion matrix", criterion6},
        {"shear trace inequalities", criterion7},
        {"multiplicative lemma suite", criterion8},
        {"mixed strategy", criterion9},
        {"(H2)^n exponent", criterion10},
    };
    bool all = true;
    int index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = run();
        } catch (const std::exception& e) {
            out.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        all = all && out.pass;
        std::printf("[%s] criterion %d: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", index, name.c_str(), secs);
        for (const auto& line : out.lines) std::printf("       %s\n", line.c_str());
        std::fflush(stdout);
    }
    std::printf("%s\n", all ? "all criteria pass" : "some criteria FAIL");
    return all ? 0 : 1;
}
