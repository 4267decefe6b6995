#include "cli.hpp"

#include "geobound/bounds.hpp"
#include "geobound/catalog.hpp"
#include "geobound/curvature.hpp"
#include "geobound/error.hpp"
#include "geobound/flow.hpp"
#include "geobound/jacobi.hpp"
#include "geobound/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace geobound::cli {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

/// Wrong input (bad flag value, unreadable config, unknown direction form).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Json vec_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + item + "'");
        try {
            std::size_t used = 0;
            const std::string value = item.substr(eq + 1);
            out[item.substr(0, eq)] = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::logic_error&) {
            throw ConfigError("--param value is not a number: '" + item + "'");
        }
    }
    return out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw ConfigError("not a number in list: '" + item + "'");
        }
    }
    return out;
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "metric") cfg.metric = value.get<std::string>();
            else if (key == "params") {
                for (const auto& [k, v] : value.items()) cfg.params[k] = v.get<double>();
            } else if (key == "direction") cfg.direction = value.get<std::string>();
            else if (key == "t0") cfg.t0 = value.get<double>();
            else if (key == "dt") cfg.dt = value.get<double>();
            else if (key == "t_end") cfg.t_end = value.get<double>();
            else if (key == "t_burn") cfg.t_burn = value.get<double>();
            else if (key == "n") cfg.n = value.get<int>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "trials") cfg.trials = value.get<int>();
            else if (key == "suite") cfg.suite = value.get<std::string>();
            else if (key == "out") cfg.out = value.get<std::string>();
            else if (key == "format") cfg.format = value.get<std::string>();
            else if (key == "timestamp") cfg.timestamp = value.get<bool>();
            else if (key == "k1") cfg.k1 = value.get<std::string>();
            else if (key == "k2") cfg.k2 = value.get<std::string>();
            else if (key == "deltas") cfg.deltas = value.get<std::vector<double>>();
            else if (key == "delta") cfg.delta = value.get<double>();
            else throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const Json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

void validate(const RunConfig& cfg) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(cfg.t0, "t0");
    positive(cfg.dt, "dt");
    if (cfg.t_end) positive(*cfg.t_end, "t-end");
    if (cfg.t_burn && !(*cfg.t_burn >= 0.0)) throw ConfigError("t-burn must be nonnegative");
    if (cfg.n && *cfg.n < 8) throw ConfigError("n must be at least 8");
    if (cfg.trials && *cfg.trials < 0) throw ConfigError("trials must be nonnegative");
    if (cfg.format != "json" && cfg.format != "csv") throw ConfigError("format must be json or csv");
    positive(cfg.delta, "delta");
    if (cfg.deltas.size() < 2) throw ConfigError("need at least two deltas");
    for (double d : cfg.deltas) positive(d, "deltas");
}

/// Everything a command needs about the metric, resolved once.
struct Context {
    RunConfig cfg;
    CatalogEntry entry;
    int d = 0;
    double r2_max = 0.0;  // from a coarse scan unless bounds were computed
    double r_max = 0.0;
    double t_end = 0.0;
    double t_burn = 0.0;
    int n = 0;

    Matrix g() const { return metric_at(entry.spec, entry.spec.base_point); }
};

Context make_context(const RunConfig& cfg) {
    Context ctx;
    ctx.cfg = cfg;
    ctx.entry = get(cfg.metric, cfg.params);
    ctx.d = ctx.entry.spec.dim;
    ctx.n = cfg.n.value_or(64 * ctx.d * ctx.d);
    return ctx;
}

void resolve_times(Context& ctx) {
    if (ctx.r2_max == 0.0) {
        ctx.r2_max = std::max(0.0, scan_directions(ctx.entry.spec, std::max(64, 8 * ctx.d * ctx.d), 1e-8).r2_max.value);
    }
    ctx.r_max = std::sqrt(ctx.r2_max);
    const double scale = ctx.r_max > 0.0 ? 1.0 / ctx.r_max : 1.0;
    ctx.t_end = ctx.cfg.t_end.value_or(50.0 * scale);
    ctx.t_burn = ctx.cfg.t_burn.value_or(5.0 * scale);
}

Json header(const Context& ctx) {
    Json h;
    h["tool"] = "geobound";
    h["version"] = kVersion;
    h["command"] = ctx.cfg.command;
    h["metric"] = ctx.entry.name;
    Json params = Json::object();
    for (const auto& [k, v] : ctx.entry.spec.params) params[k] = v;
    h["params"] = params;
    h["dim"] = ctx.d;
    h["defaults"] = {{"t0", 1e-3}, {"dt", 1e-3}, {"t_burn", "5/R_max"}, {"t_end", "50/R_max"}, {"n", "64 d^2"}};
    h["resolved"] = {{"t0", ctx.cfg.t0},       {"dt", ctx.cfg.dt}, {"t_burn", ctx.t_burn}, {"t_end", ctx.t_end},
                     {"n", ctx.n},             {"seed", ctx.cfg.seed}, {"r2_max", ctx.r2_max},
                     {"direction", ctx.cfg.direction}};
    h["threads"] = thread_count();
    if (ctx.cfg.timestamp) h["timestamp"] = utc_timestamp();
    return h;
}

Vector resolve_direction(const Context& ctx, const std::string& text, const BoundReport* bounds) {
    const Matrix g = ctx.g();
    Vector x;
    if (text == "diag") {
        x = ctx.entry.diagonal;
    } else if (text == "x" || text == "y" || text == "z" || text.rfind("axis:", 0) == 0) {
        int k = text == "x" ? 0 : text == "y" ? 1 : text == "z" ? 2 : -1;
        if (k < 0) {
            try {
                k = std::stoi(text.substr(5));
            } catch (const std::logic_error&) {
                throw ConfigError("bad axis direction '" + text + "'");
            }
        }
        if (k < 0 || k >= ctx.d) throw ConfigError("axis " + std::to_string(k) + " out of range");
        x = Vector::Unit(ctx.d, k);
    } else if (text == "scan") {
        if (bounds == nullptr) throw ConfigError("direction 'scan' needs a bounds run");
        x = bounds->argmax_direction.comps;
    } else {
        const std::vector<double> comps = parse_list(text);
        if (static_cast<int>(comps.size()) != ctx.d)
            throw ConfigError("direction needs " + std::to_string(ctx.d) + " components");
        x = Vector::Map(comps.data(), ctx.d);
    }
    const double norm = unit_norm(g, x);
    if (!(norm > 0.0)) throw ConfigError("direction has zero length");
    return x / norm;
}

FlowOptions flow_options(const Context& ctx, double t_end) {
    FlowOptions opt;
    opt.t0 = ctx.cfg.t0;
    opt.dt = ctx.cfg.dt;
    opt.t_end = t_end;
    return opt;
}

void write_output(const RunConfig& cfg, const std::string& text, std::ostream& out) {
    if (cfg.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(cfg.out);
    if (!f) throw ConfigError("cannot write " + cfg.out);
    f << text;
}

std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// ---------------------------------------------------------------- bounds

Json oracle_comparison(const CatalogEntry& entry, const std::map<std::string, double>& computed) {
    Json j = Json::object();
    for (const auto& [name, value] : computed) {
        const auto it = entry.oracles.find(name);
        if (it == entry.oracles.end()) continue;
        const double expected = it->second({});
        j[name] = {{"computed", value}, {"oracle", expected}, {"abs_diff", std::abs(value - expected)}};
    }
    return j;
}

int cmd_bounds(Context& ctx, std::ostream& out) {
    const BoundReport rep = compute_bounds(ctx.entry.spec, ctx.n);
    ctx.r2_max = rep.r2_max;
    resolve_times(ctx);
    Json j;
    j["header"] = header(ctx);
    Json b;
    b["bg_rate2"] = rep.bg_rate2;
    b["new_rate2"] = rep.new_rate2;
    b["refined_rate2"] = rep.refined_rate2;
    b["symmetric_rate2"] = rep.symmetric_rate * rep.symmetric_rate;
    b["perfect_precession_rate2"] = rep.perfect_precession_rate * rep.perfect_precession_rate;
    b["sqrt"] = {{"bg_rate", std::sqrt(rep.bg_rate2)},
                 {"new_rate", std::sqrt(rep.new_rate2)},
                 {"refined_rate", std::sqrt(rep.refined_rate2)},
                 {"symmetric_rate", rep.symmetric_rate},
                 {"perfect_precession_rate", rep.perfect_precession_rate}};
    b["r2_max"] = rep.r2_max;
    b["r2_min"] = rep.r2_min;
    b["w2_min"] = rep.w2_min;
    b["wprime2_max"] = rep.wprime2_max;
    b["w2_at_argmax_r2"] = rep.scan.w2_at_argmax_r2;
    b["argmax_direction"] = vec_json(rep.argmax_direction.comps);
    b["refined_argmax_direction"] = vec_json(rep.refined_argmax_direction.comps);
    b["r2_max_direction"] = vec_json(rep.scan.r2_max.direction.comps);
    Json ties = Json::array();
    for (const auto& t : rep.scan.r2_max_ties) ties.push_back(vec_json(t.comps));
    b["r2_max_ties"] = ties;
    b["sectional_spectrum"] = vec_json(rep.spectrum);
    b["bg_volume"] = {{"t", ctx.t_end}, {"volume", rep.bg_volume(ctx.t_end)},
                      {"log_slope", bg_log_slope(rep.d, -rep.r2_max, ctx.t_end)}};
    j["bounds"] = b;
    j["oracles"] = oracle_comparison(ctx.entry, {{"bg_rate2", rep.bg_rate2},
                                                 {"new_rate2", rep.new_rate2},
                                                 {"refined_rate2", rep.refined_rate2},
                                                 {"symmetric_rate", rep.symmetric_rate},
                                                 {"r2_max", rep.r2_max},
                                                 {"r2_min", rep.r2_min},
                                                 {"w2_min", rep.w2_min},
                                                 {"wprime2_max", rep.wprime2_max}});
    if (ctx.cfg.format == "csv") {
        std::ostringstream os;
        os << "metric,bg_rate2,new_rate2,refined_rate2,symmetric_rate2,r2_max,r2_min,w2_min,wprime2_max\n";
        os << ctx.entry.name;
        for (double v : {rep.bg_rate2, rep.new_rate2, rep.refined_rate2, rep.symmetric_rate * rep.symmetric_rate,
                         rep.r2_max, rep.r2_min, rep.w2_min, rep.wprime2_max})
            os << ',' << csv_number(v);
        os << '\n';
        write_output(ctx.cfg, os.str(), out);
    } else {
        write_output(ctx.cfg, j.dump(2) + "\n", out);
    }
    return kSuccess;
}

// ---------------------------------------------------------------- simulate

double tr_w2_of(const FlowSample& s) { return (s.w * s.w).trace(); }

std::string series_csv(const FlowSeries& series) {
    std::ostringstream os;
    os << "t,theta,sigma2,omega2,tr_sigma3,tr_sigma4,r2,tr_w2,sigma_dot_w,min_eig_m,det_m,norm_error\n";
    for (const auto& s : series.samples) {
        const double sw = (s.dec.sigma * s.w).trace();
        for (double v : {s.t, s.dec.theta, s.sigma2, s.omega2, s.tr_sigma3, s.tr_sigma4, s.r2, tr_w2_of(s), sw,
                         s.min_eig_m, s.det_m})
            os << csv_number(v) << ',';
        os << csv_number(s.norm_error) << '\n';
    }
    return os.str();
}

Json average_json(const AverageReport& a) {
    return {{"t_burn", a.t_burn},
            {"t_end", a.t_end},
            {"mean_theta", a.mean_theta},
            {"mean_theta2", a.mean_theta2},
            {"asymptotic_theta", a.asymptotic_theta},
            {"asymptotic_theta2", a.asymptotic_theta * a.asymptotic_theta},
            {"mean_sigma2", a.mean_sigma2},
            {"mean_r2", a.mean_r2},
            {"mean_tr_w2", a.mean_tr_w2},
            {"mean_tr_wprime2", a.mean_tr_wprime2},
            {"identity_lhs", a.identity_lhs},
            {"identity_rhs", a.identity_rhs},
            {"identity_residual", a.identity_residual},
            {"theta2_identity_residual", a.theta2_identity_residual},
            {"det_m_min", a.det_m_min},
            {"min_eig_m", a.min_eig_m}};
}

int cmd_simulate(Context& ctx, std::ostream& out, std::ostream& err) {
    std::optional<BoundReport> bounds;
    if (ctx.cfg.direction == "scan") {
        bounds = compute_bounds(ctx.entry.spec, ctx.n);
        ctx.r2_max = bounds->r2_max;
    }
    resolve_times(ctx);
    const Vector x = resolve_direction(ctx, ctx.cfg.direction, bounds ? &*bounds : nullptr);
    FlowSeries series;
    series.d = ctx.d;
    series.dt = ctx.cfg.dt;
    std::optional<double> halted;
    try {
        integrate_flow(ctx.entry.spec, x, flow_options(ctx, ctx.t_end),
                       [&](const FlowSample& s) { series.samples.push_back(s); });
    } catch (const CausticError& e) {
        halted = e.time();
        err << "caustic at t = " << e.time() << ": " << e.what() << "\n";
    }
    Json j;
    j["header"] = header(ctx);
    j["direction"] = vec_json(x);
    j["samples"] = series.samples.size();
    if (halted) j["halted_at"] = *halted;
    if (!series.samples.empty()) {
        const FlowSample& last = series.samples.back();
        j["final"] = {{"t", last.t}, {"theta", last.dec.theta}, {"sigma2", last.sigma2}, {"r2", last.r2}};
        double sigma2_max = 0.0;
        for (const auto& s : series.samples) sigma2_max = std::max(sigma2_max, s.sigma2);
        j["sigma2_max"] = sigma2_max;
        j["min_eig_m"] = positivity_monitor(series, 0.0);
    }
    try {
        const RaychaudhuriResiduals r = raychaudhuri_residuals(series);
        j["raychaudhuri"] = {{"first", r.first}, {"second", r.second},
                             {"sigma2_evolution", sigma2_evolution_residual(series)}};
    } catch (const Error& e) {
        j["raychaudhuri"] = {{"skipped", e.what()}};
    }
    try {
        j["averages"] = average_json(averaged_identity_residual(series, ctx.t_burn, ctx.r2_max));
    } catch (const Error& e) {
        j["averages"] = {{"skipped", e.what()}};
    }
    if (ctx.cfg.format == "csv") {
        write_output(ctx.cfg, series_csv(series), out);
        if (!ctx.cfg.out.empty()) out << j.dump(2) << "\n";
    } else {
        write_output(ctx.cfg, j.dump(2) + "\n", out);
    }
    return halted ? kNumericalHalt : kSuccess;
}

// ---------------------------------------------------------------- verify

struct SuiteResult {
    bool pass = true;
    Json detail;
};

/// Split of a unit tangent of a product of hyperbolic planes into factor speeds.
std::vector<double> factor_speeds(const Matrix& g, const Vector& x) {
    std::vector<double> speeds;
    for (Eigen::Index k = 0; k + 1 < x.size(); k += 2) {
        const Vector part = x.segment(k, 2);
        speeds.push_back(std::sqrt(part.dot(g.block(k, k, 2, 2) * part)));
    }
    return speeds;
}

SuiteResult suite_raychaudhuri(Context& ctx) {
    resolve_times(ctx);
    const int trials = ctx.cfg.trials.value_or(0);
    std::mt19937_64 rng(ctx.cfg.seed);
    std::vector<Vector> dirs = {resolve_direction(ctx, ctx.cfg.direction == "scan" ? "diag" : ctx.cfg.direction,
                                                  nullptr)};
    for (int i = 0; i < trials; ++i) dirs.push_back(random_unit_direction(ctx.g(), rng));
    const bool closed_form = ctx.entry.name == "h2xh2" || ctx.entry.name == "h2xh2-polar";

    struct Row {
        double first = 0, second = 0, sigma2 = 0, oracle_err = -1;
        std::string error;
    };
    std::vector<Row> rows(dirs.size());
    parallel_for(dirs.size(), [&](std::size_t i) {
        try {
            const FlowSeries s = integrate_flow(ctx.entry.spec, dirs[i], flow_options(ctx, ctx.t_end));
            const RaychaudhuriResiduals r = raychaudhuri_residuals(s);
            rows[i].first = r.first;
            rows[i].second = r.second;
            rows[i].sigma2 = sigma2_evolution_residual(s);
            if (closed_form) {
                const std::vector<double> v = factor_speeds(ctx.g(), dirs[i]);
                double worst = 0.0;
                for (const auto& smp : s.samples) {
                    if (smp.t < 0.1 || v[0] * smp.t < 1e-3 || v[1] * smp.t < 1e-3) continue;
                    const std::vector<double> tau = {v[0] * smp.t, v[1] * smp.t};
                    worst = std::max({worst, std::abs(smp.dec.theta - oracle_eval(ctx.entry, "theta", tau)),
                                      std::abs(smp.sigma2 - oracle_eval(ctx.entry, "sigma2", tau)),
                                      std::abs(smp.tr_sigma3 - oracle_eval(ctx.entry, "tr_sigma3", tau)),
                                      std::abs((smp.dec.sigma * smp.w).trace() -
                                               oracle_eval(ctx.entry, "sigma_dot_w", tau))});
                }
                rows[i].oracle_err = worst;
            }
        } catch (const CausticError& e) {
            rows[i].error = e.what();
        }
    });
    SuiteResult res;
    Json list = Json::array();
    double worst_first = 0.0, worst_second = 0.0, worst_oracle = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        Json row = {{"direction", vec_json(dirs[i])}};
        if (!r.error.empty()) {
            row["caustic"] = r.error;
            res.pass = false;
        } else {
            row["first"] = r.first;
            row["second"] = r.second;
            row["sigma2_evolution"] = r.sigma2;
            if (r.oracle_err >= 0.0) row["closed_form_max_error"] = r.oracle_err;
            worst_first = std::max(worst_first, r.first);
            worst_second = std::max(worst_second, r.second);
            worst_oracle = std::max(worst_oracle, r.oracle_err);
        }
        list.push_back(row);
    }
    const double tol = 1e-5;
    res.pass = res.pass && worst_first < tol && worst_second < tol && worst_oracle < 1e-6;
    res.detail = {{"tolerance", tol},       {"closed_form_tolerance", 1e-6}, {"max_first", worst_first},
                  {"max_second", worst_second}, {"directions", list}};
    if (closed_form) res.detail["max_closed_form_error"] = worst_oracle;
    return res;
}

Matrix random_traceless(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> kind(0, 2);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    Matrix s = 0.5 * (a + a.transpose());
    const int k = kind(rng);
    if (k > 0) {
        // spectra close to one dominant eigenvalue probe the near-saturated region
        Eigen::SelfAdjointEigenSolver<Matrix> es(s);
        Vector ev = Vector::Constant(n, -1.0) + 0.05 * Vector::NullaryExpr(n, [&](Eigen::Index) { return normal(rng); });
        ev(0) = k == 1 ? n - 1.0 : -(n - 1.0);
        s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    }
    s -= (s.trace() / n) * Matrix::Identity(n, n);
    return s;
}

SuiteResult suite_traces(const Context& ctx) {
    const int trials = ctx.cfg.trials.value_or(10000);
    SuiteResult res;
    Json per_d = Json::array();
    for (int d = 3; d <= 8; ++d) {
        const int n = d - 1;
        std::mt19937_64 rng(ctx.cfg.seed + static_cast<std::uint64_t>(d));
        double min_margin[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity()};
        int violations = 0;
        for (int i = 0; i < trials; ++i) {
            const TraceCheck c = shear_trace_bounds_check(random_traceless(n, rng), 0.0, false);
            for (int q = 1; q < 3; ++q) {
                min_margin[q] = std::min(min_margin[q], c.margin[q]);
                if (!c.holds[q]) ++violations;
            }
            // positive M: theta and shear of a random positive-definite matrix
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            Vector ev(n);
            for (int k = 0; k < n; ++k) ev(k) = std::pow(uni(rng), 4.0) + 1e-12;
            const Matrix q_rand = Eigen::HouseholderQR<Matrix>(random_traceless(n, rng) + Matrix::Identity(n, n) * 1e-3).householderQ();
            const Matrix m = q_rand * ev.asDiagonal() * q_rand.transpose();
            const double theta = m.trace();
            const Matrix sigma = m - (theta / n) * Matrix::Identity(n, n);
            const TraceCheck p = shear_trace_bounds_check(sigma, theta, true);
            min_margin[0] = std::min(min_margin[0], p.margin[0]);
            if (!p.holds[0]) ++violations;
        }
        Vector pattern = Vector::Constant(n, -1.0);
        pattern(0) = d - 2.0;
        const TraceCheck sat = shear_trace_bounds_check(Matrix(pattern.asDiagonal()), 0.0, false);
        const bool saturates = std::abs(sat.margin[1]) < 1e-9 && std::abs(sat.margin[2]) < 1e-9;
        const bool ok = violations == 0 && saturates;
        res.pass = res.pass && ok;
        per_d.push_back({{"d", d},
                         {"trials", trials},
                         {"violations", violations},
                         {"min_margin_positive_m", min_margin[0]},
                         {"min_margin_cubic", min_margin[1]},
                         {"min_margin_quartic", min_margin[2]},
                         {"pattern_margin_cubic", sat.margin[1]},
                         {"pattern_margin_quartic", sat.margin[2]},
                         {"pass", ok}});
    }
    res.detail = {{"per_dimension", per_d}};
    return res;
}

SuiteResult suite_lemma(const Context& ctx) {
    const int trials = ctx.cfg.trials.value_or(1000);
    const double t_end = 3.0, dt = 1e-3;
    std::vector<std::pair<KappaSchedule, KappaSchedule>> pairs;
    std::mt19937_64 rng(ctx.cfg.seed);
    for (int i = 0; i < trials; ++i) {
        KappaSchedule a = random_schedule(rng);
        KappaSchedule b = random_schedule(rng);
        pairs.emplace_back(std::move(a), std::move(b));
    }
    std::vector<LemmaCheck> checks(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        checks[i] = multiplicative_lemma_check(pairs[i].first, pairs[i].second, t_end, dt);
    });
    double min_margin = std::numeric_limits<double>::infinity();
    int failures = 0;
    Json stuck = Json::array();
    for (std::size_t i = 0; i < checks.size(); ++i) {
        min_margin = std::min(min_margin, checks[i].min_margin);
        if (!checks[i].product_holds || !checks[i].ratio_holds) ++failures;
        for (double t : checks[i].av_stuck_events) stuck.push_back({{"trial", i}, {"t", t}});
    }
    SuiteResult res;
    res.detail["random_pairs"] = {{"trials", trials}, {"t_end", t_end}, {"dt", dt}, {"min_margin", min_margin},
                                  {"failures", failures}, {"av_stuck_events", stuck}};
    res.pass = failures == 0 && (trials == 0 || min_margin >= -1e-10);

    const LemmaCheck same = multiplicative_lemma_check(pairs.empty() ? constant_schedule(1.0) : pairs[0].first,
                                                       pairs.empty() ? constant_schedule(1.0) : pairs[0].first,
                                                       t_end, dt);
    const bool equal_ok = std::abs(same.min_product_margin) < 1e-10 && std::abs(same.min_ratio_margin) < 1e-10;
    res.detail["equal_schedules"] = {{"product_margin", same.min_product_margin},
                                     {"ratio_margin", same.min_ratio_margin}, {"pass", equal_ok}};
    res.pass = res.pass && equal_ok;

    Json taylor = Json::array();
    bool taylor_ok = true;
    std::mt19937_64 trng(ctx.cfg.seed + 1);
    for (int i = 0; i < 10; ++i) {
        const KappaSchedule a = random_schedule(trng), b = random_schedule(trng);
        const double predicted = lemma_taylor_prediction(a, b);
        if (predicted < 1e-2) continue;
        const double fitted = lemma_taylor_coefficient(a, b);
        const double rel = std::abs(fitted - predicted) / predicted;
        taylor_ok = taylor_ok && rel < 0.05;
        taylor.push_back({{"predicted", predicted}, {"fitted", fitted}, {"relative_error", rel}});
    }
    res.detail["taylor"] = {{"tolerance", 0.05}, {"pairs", taylor}, {"pass", taylor_ok}};
    res.pass = res.pass && taylor_ok;

    const ShuffleStudy st = shuffle_convergence(constant_schedule(4.0), constant_schedule(0.0), ctx.cfg.deltas, 2.0);
    const bool slope_ok = st.state_slope >= 0.8 && st.state_slope <= 1.2;
    res.detail["shuffle"] = {{"k1", "const:4"},
                             {"k2", "const:0"},
                             {"deltas", st.deltas},
                             {"j_errors", st.errors},
                             {"state_errors", st.state_errors},
                             {"state_slope", st.state_slope},
                             {"j_slope", st.slope},
                             {"pass", slope_ok}};
    res.pass = res.pass && slope_ok;

    std::mt19937_64 mrng(ctx.cfg.seed + 2);
    const MultiAverageResult multi =
        multi_average_check({constant_schedule(4.0), constant_schedule(1.0), constant_schedule(1.0)}, 2.0, 1e-3, mrng);
    res.detail["multi_average"] = {{"schedules", "4,1,1"}, {"monotone", multi.monotone},
                                   {"first_product", multi.products.front()}, {"last_product", multi.products.back()}};
    res.pass = res.pass && multi.monotone;

    const JacobiSolution neg = solve_jacobi(constant_schedule(-1.0), 4.0, 1e-3);
    const bool stick_ok = neg.stuck_at && std::abs(*neg.stuck_at - std::numbers::pi) < 1e-6;
    res.detail["stick_at_zero"] = {{"kappa", -1.0}, {"stuck_at", neg.stuck_at ? Json(*neg.stuck_at) : Json()},
                                   {"pass", stick_ok}};
    res.pass = res.pass && stick_ok;
    return res;
}

SuiteResult suite_positivity(Context& ctx) {
    resolve_times(ctx);
    const int trials = ctx.cfg.trials.value_or(100);
    const double t_from = 0.1;
    std::mt19937_64 rng(ctx.cfg.seed);
    std::vector<Vector> dirs;
    for (int i = 0; i < trials; ++i) dirs.push_back(random_unit_direction(ctx.g(), rng));
    std::vector<double> mins(dirs.size(), 0.0);
    std::vector<std::string> errors(dirs.size());
    parallel_for(dirs.size(), [&](std::size_t i) {
        try {
            mins[i] = positivity_run(ctx.entry.spec, dirs[i], flow_options(ctx, ctx.t_end), t_from);
        } catch (const CausticError& e) {
            errors[i] = e.what();
        }
    });
    SuiteResult res;
    double worst = std::numeric_limits<double>::infinity();
    int caustics = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (!errors[i].empty()) {
            ++caustics;
            continue;
        }
        worst = std::min(worst, mins[i]);
    }
    res.pass = caustics == 0 && worst > 0.0;
    res.detail = {{"trials", trials}, {"t_from", t_from}, {"t_end", ctx.t_end}, {"dt", ctx.cfg.dt},
                  {"min_eigenvalue", trials > 0 ? Json(worst) : Json()}, {"caustics", caustics},
                  {"per_direction_min", mins}};
    return res;
}

SuiteResult suite_identity(Context& ctx) {
    if (ctx.r2_max == 0.0) {
        ctx.r2_max = std::max(0.0, scan_directions(ctx.entry.spec, std::max(64, 8 * ctx.d * ctx.d), 1e-8).r2_max.value);
    }
    if (!(ctx.r2_max > 0.0)) throw Error(ErrorKind::DegenerateFlat, "identity suite needs R_max > 0");
    ctx.r_max = std::sqrt(ctx.r2_max);
    ctx.t_burn = ctx.cfg.t_burn.value_or(10.0 / ctx.r_max);
    const double window = ctx.cfg.t_end ? *ctx.cfg.t_end - ctx.t_burn : 50.0 / ctx.r_max;
    if (!(window > 0.0)) throw ConfigError("t-end must exceed t-burn");
    ctx.t_end = ctx.t_burn + window;
    const Vector x = resolve_direction(ctx, ctx.cfg.direction == "scan" ? "diag" : ctx.cfg.direction, nullptr);
    FlowSeries series = integrate_flow(ctx.entry.spec, x, flow_options(ctx, ctx.t_burn + 2.0 * window));
    const AverageReport doubled = averaged_identity_residual(series, ctx.t_burn, ctx.r2_max);
    const auto cut = std::find_if(series.samples.begin(), series.samples.end(),
                                  [&](const FlowSample& s) { return s.t > ctx.t_end + 1e-9; });
    series.samples.erase(cut, series.samples.end());
    const AverageReport single = averaged_identity_residual(series, ctx.t_burn, ctx.r2_max);
    SuiteResult res;
    res.pass = single.identity_residual < 1e-2 && doubled.identity_residual < single.identity_residual;
    res.detail = {{"direction", vec_json(x)},
                  {"t_burn", ctx.t_burn},
                  {"window", window},
                  {"tolerance", 1e-2},
                  {"residual", single.identity_residual},
                  {"residual_doubled_window", doubled.identity_residual},
                  {"averages", average_json(single)}};
    return res;
}

int cmd_verify(Context& ctx, std::ostream& out) {
    const std::vector<std::string> all = {"raychaudhuri", "traces", "shuffle", "positivity", "identity"};
    std::vector<std::string> suites;
    if (ctx.cfg.suite == "all") {
        suites = all;
    } else if (std::find(all.begin(), all.end(), ctx.cfg.suite) != all.end()) {
        suites = {ctx.cfg.suite};
    } else {
        throw ConfigError("unknown suite '" + ctx.cfg.suite + "'");
    }
    Json results = Json::object();
    bool pass = true;
    for (const auto& name : suites) {
        SuiteResult r;
        if (name == "raychaudhuri") r = suite_raychaudhuri(ctx);
        else if (name == "traces") r = suite_traces(ctx);
        else if (name == "shuffle") r = suite_lemma(ctx);
        else if (name == "positivity") r = suite_positivity(ctx);
        else r = suite_identity(ctx);
        pass = pass && r.pass;
        Json entry = {{"pass", r.pass}};
        for (const auto& [k, v] : r.detail.items()) entry[k] = v;
        results[name] = entry;
    }
    if (ctx.t_end == 0.0) resolve_times(ctx);
    Json j;
    j["header"] = header(ctx);
    j["pass"] = pass;
    j["suites"] = results;
    write_output(ctx.cfg, j.dump(2) + "\n", out);
    return pass ? kSuccess : kVerificationFailure;
}

// ---------------------------------------------------------------- shuffle

KappaSchedule parse_schedule(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "const") {
        const std::vector<double> v = parse_list(rest);
        if (v.size() != 1) throw ConfigError("const schedule takes one value");
        return constant_schedule(v[0]);
    }
    if (kind == "sin") {
        const std::vector<double> v = parse_list(rest);
        if (v.size() != 3) throw ConfigError("sin schedule takes a,b,w for a + b sin(w t)");
        const double a = v[0], b = v[1], w = v[2];
        return {[a, b, w](double t) { return a + b * std::sin(w * t); }, text};
    }
    if (kind == "fourier") {
        const std::vector<double> v = parse_list(rest);
        if (v.size() != 1 || v[0] < 0.0 || v[0] != std::floor(v[0])) throw ConfigError("fourier schedule takes a seed");
        std::mt19937_64 rng(static_cast<std::uint64_t>(v[0]));
        KappaSchedule k = random_schedule(rng);
        k.label = text;
        return k;
    }
    throw ConfigError("unknown schedule '" + text + "' (const:v, sin:a,b,w or fourier:seed)");
}

int cmd_shuffle(const RunConfig& cfg, std::ostream& out) {
    const KappaSchedule k1 = parse_schedule(cfg.k1), k2 = parse_schedule(cfg.k2);
    const double t_end = cfg.t_end.value_or(2.0);
    const ShuffleStudy st = shuffle_convergence(k1, k2, cfg.deltas, t_end);

    const int per = std::max(1, static_cast<int>(std::ceil(cfg.delta / 1e-3 - 1e-9)));
    const double fine = cfg.delta / per;
    const JacobiSolution s1 = solve_jacobi(k1, t_end, fine), s2 = solve_jacobi(k2, t_end, fine);
    const JacobiSolution sa = solve_jacobi(average_pair(k1, k2), t_end, fine);
    const JacobiSolution sh = shuffle_evolve(k1, k2, cfg.delta, t_end);

    Json events = Json::array();
    for (const auto& [label, sol] : {std::pair<std::string, const JacobiSolution*>{"j1", &s1}, {"j2", &s2},
                                     {"j_av", &sa}, {"j_shuffled", &sh}})
        if (sol->stuck_at) events.push_back({{"series", label}, {"t", *sol->stuck_at}});

    Json j;
    j["header"] = {{"tool", "geobound"}, {"version", kVersion}, {"command", "shuffle"}, {"k1", cfg.k1},
                   {"k2", cfg.k2}, {"t_end", t_end}, {"delta", cfg.delta}, {"threads", thread_count()}};
    if (cfg.timestamp) j["header"]["timestamp"] = utc_timestamp();
    Json table = Json::array();
    for (std::size_t i = 0; i < st.deltas.size(); ++i)
        table.push_back({{"delta", st.deltas[i]}, {"j_error", st.errors[i]}, {"state_error", st.state_errors[i]}});
    j["convergence"] = {{"table", table}, {"j_slope", st.slope}, {"state_slope", st.state_slope}, {"j_av", st.j_av}};
    j["stick_events"] = events;

    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "t,j1,j2,j_av,j_shuffled,product_margin,ratio_margin\n";
        const std::size_t count = std::min(sh.t.size(), sa.t.size() / static_cast<std::size_t>(per) + 1);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t f = i * static_cast<std::size_t>(per);
            if (f >= sa.t.size()) break;
            const double j1 = s1.j[f], j2 = s2.j[f], ja = sa.j[f];
            const double pm = ja * ja - j1 * j2;
            const double rm = (j1 > 0 && j2 > 0 && ja > 0) ? 2 * sa.jp[f] / ja - s1.jp[f] / j1 - s2.jp[f] / j2
                                                             : std::numeric_limits<double>::quiet_NaN();
            for (double v : {sa.t[f], j1, j2, ja, sh.j[i], pm}) os << csv_number(v) << ',';
            os << (std::isnan(rm) ? std::string() : csv_number(rm)) << '\n';
        }
        write_output(cfg, os.str(), out);
        if (!cfg.out.empty()) out << j.dump(2) << "\n";
    } else {
        write_output(cfg, j.dump(2) + "\n", out);
    }
    return kSuccess;
}

// ---------------------------------------------------------------- list-metrics

int cmd_list(const RunConfig& cfg, std::ostream& out) {
    Json list = Json::array();
    for (const auto& info : list_metrics()) {
        const CatalogEntry e = get(info.name);
        Json params = Json::object();
        for (const auto& [k, v] : info.default_params) params[k] = v;
        Json oracles = Json::array();
        for (const auto& [k, v] : e.oracles) oracles.push_back(k);
        list.push_back({{"name", info.name},
                        {"description", info.description},
                        {"default_params", params},
                        {"dim", e.spec.dim},
                        {"flags",
                         {{"nonpositive_sectional", e.flags.nonpositive_sectional},
                          {"einstein", e.flags.einstein},
                          {"symmetric_space", e.flags.symmetric_space}}},
                        {"oracles", oracles}});
    }
    Json j;
    j["header"] = {{"tool", "geobound"}, {"version", kVersion}, {"command", "list-metrics"}};
    if (cfg.timestamp) j["header"]["timestamp"] = utc_timestamp();
    j["metrics"] = list;
    write_output(cfg, j.dump(2) + "\n", out);
    return kSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"geobound: volume-growth bounds and geodesic-flow verification"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::vector<std::string> param_items;
    std::string config_path, deltas_text;
    double t_end = 0.0, t_burn = -1.0;
    int n = 0, trials = -1;
    bool no_timestamp = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--metric", cfg.metric, "catalog metric name");
        sub->add_option("--param", param_items, "metric parameter key=value (repeatable)");
        sub->add_option("--config", config_path, "JSON config file; its keys override flags");
        sub->add_option("--direction", cfg.direction, "diag | x | y | z | axis:k | comma-separated comps | scan");
        sub->add_option("--t0", cfg.t0, "start time of the flow");
        sub->add_option("--t-end", t_end, "end time (default 50/R_max)");
        sub->add_option("--dt", cfg.dt, "output step");
        sub->add_option("--t-burn", t_burn, "burn-in before averaging (default 5/R_max)");
        sub->add_option("--n", n, "direction grid size (default 64 d^2)");
        sub->add_option("--seed", cfg.seed, "random seed");
        sub->add_option("--trials", trials, "trial count (per-suite default)");
        sub->add_option("--out", cfg.out, "output path (stdout when empty)");
        sub->add_option("--format", cfg.format, "json or csv");
        sub->add_flag("--no-timestamp", no_timestamp, "omit the timestamp field");
    };
    CLI::App* bounds = app.add_subcommand("bounds", "bound report for a catalog metric");
    CLI::App* simulate = app.add_subcommand("simulate", "integrate the geodesic-ball flow along one direction");
    CLI::App* verify = app.add_subcommand("verify", "run verification suites");
    CLI::App* shuffle = app.add_subcommand("shuffle", "scalar Jacobi shuffling study");
    CLI::App* list = app.add_subcommand("list-metrics", "list catalog metrics");
    for (CLI::App* sub : {bounds, simulate, verify, shuffle, list}) add_common(sub);
    verify->add_option("--suite", cfg.suite, "raychaudhuri | traces | shuffle | positivity | identity | all");
    shuffle->add_option("--k1", cfg.k1, "schedule: const:v, sin:a,b,w or fourier:seed");
    shuffle->add_option("--k2", cfg.k2, "second schedule");
    shuffle->add_option("--deltas", deltas_text, "comma-separated interval widths");
    shuffle->add_option("--delta", cfg.delta, "interval width of the emitted series");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kConfigError;
    }

    try {
        for (CLI::App* sub : app.get_subcommands()) cfg.command = sub->get_name();
        cfg.params = parse_params(param_items);
        if (t_end > 0.0) cfg.t_end = t_end;
        else if (t_end < 0.0) throw ConfigError("t-end must be positive");
        if (t_burn >= 0.0) cfg.t_burn = t_burn;
        if (n != 0) cfg.n = n;
        if (trials >= 0) cfg.trials = trials;
        if (!deltas_text.empty()) cfg.deltas = parse_list(deltas_text);
        cfg.timestamp = !no_timestamp;
        if (!config_path.empty()) apply_config_file(config_path, cfg);
        validate(cfg);

        if (cfg.command == "list-metrics") return cmd_list(cfg, out);
        if (cfg.command == "shuffle") return cmd_shuffle(cfg, out);
        Context ctx = make_context(cfg);
        if (cfg.command == "bounds") return cmd_bounds(ctx, out);
        if (cfg.command == "simulate") return cmd_simulate(ctx, out, err);
        return cmd_verify(ctx, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const CausticError& e) {
        err << e.what() << " (t = " << e.time() << ")\n";
        return kNumericalHalt;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return kConfigError;
    }
}

}  // namespace geobound::cli
