#include "cli.hpp"
#include "geobound/bounds.hpp"
#include "geobound/catalog.hpp"
#include "geobound/curvature.hpp"
#include "geobound/error.hpp"
#include "geobound/flow.hpp"
#include "geobound/jacobi.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <random>
#include <sstream>

namespace py = pybind11;
using namespace geobound;

namespace {

using Params = std::map<std::string, double>;

py::dict tangent_dict(const TangentVector& v) {
    py::dict d;
    d["point"] = v.point;
    d["comps"] = v.comps;
    return d;
}

py::dict extremum_dict(const Extremum& e) {
    py::dict d;
    d["value"] = e.value;
    d["direction"] = e.direction.comps;
    d["grad_norm"] = e.grad_norm;
    return d;
}

// Unit direction at the base point: the catalog diagonal, or the given
// components rescaled to unit length.
Vector resolve_direction(const CatalogEntry& e, const std::optional<Vector>& comps) {
    if (!comps) return e.diagonal;
    if (comps->size() != e.spec.dim)
        throw Error(ErrorKind::BadParams, "direction has " + std::to_string(comps->size()) + " components, expected " +
                                              std::to_string(e.spec.dim));
    const double norm = unit_norm(metric_at(e.spec, e.spec.base_point), *comps);
    if (!(norm > 0.0)) throw Error(ErrorKind::NonUnitDirection, "zero direction");
    return *comps / norm;
}

KappaSchedule to_schedule(const py::object& k) {
    if (py::isinstance<py::float_>(k) || py::isinstance<py::int_>(k)) return constant_schedule(k.cast<double>());
    if (!PyCallable_Check(k.ptr())) throw py::type_error("schedule must be a number or a callable of t");
    auto fn = k.cast<py::function>();
    return KappaSchedule{[fn](double t) { return fn(t).cast<double>(); }, "python"};
}

py::array_t<double> as_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict average_dict(const AverageReport& a) {
    py::dict d;
    d["t_burn"] = a.t_burn;
    d["t_end"] = a.t_end;
    d["mean_theta"] = a.mean_theta;
    d["mean_theta2"] = a.mean_theta2;
    d["mean_sigma2"] = a.mean_sigma2;
    d["mean_r2"] = a.mean_r2;
    d["mean_tr_w2"] = a.mean_tr_w2;
    d["mean_tr_wprime2"] = a.mean_tr_wprime2;
    d["asymptotic_theta"] = a.asymptotic_theta;
    d["identity_lhs"] = a.identity_lhs;
    d["identity_rhs"] = a.identity_rhs;
    d["identity_residual"] = a.identity_residual;
    d["theta2_identity_residual"] = a.theta2_identity_residual;
    d["raychaudhuri1_residual_max"] = a.raychaudhuri1_residual_max;
    d["raychaudhuri2_residual_max"] = a.raychaudhuri2_residual_max;
    d["det_m_min"] = a.det_m_min;
    d["min_eig_m"] = a.min_eig_m;
    return d;
}

py::list list_metrics_py() {
    py::list out;
    for (const auto& info : list_metrics()) {
        const CatalogEntry e = get(info.name);
        py::dict d;
        d["name"] = info.name;
        d["description"] = info.description;
        d["defaults"] = info.default_params;
        d["dim"] = e.spec.dim;
        py::dict flags;
        flags["nonpositive_sectional"] = e.flags.nonpositive_sectional;
        flags["einstein"] = e.flags.einstein;
        flags["symmetric_space"] = e.flags.symmetric_space;
        d["flags"] = flags;
        py::list oracles;
        for (const auto& [q, _] : e.oracles) oracles.append(q);
        d["oracles"] = oracles;
        out.append(d);
    }
    return out;
}

py::dict metric_py(const std::string& name, const Params& params) {
    const CatalogEntry e = get(name, params);
    py::dict d;
    d["name"] = e.name;
    d["description"] = e.description;
    d["dim"] = e.spec.dim;
    d["params"] = e.spec.params;
    d["base_point"] = e.spec.base_point;
    d["diagonal"] = e.diagonal;
    d["metric"] = metric_at(e.spec, e.spec.base_point);
    return d;
}

Matrix metric_components(const std::string& name, const Vector& p, const Params& params) {
    const CatalogEntry e = get(name, params);
    if (p.size() != e.spec.dim) throw Error(ErrorKind::BadParams, "point has the wrong dimension");
    return metric_at(e.spec, p);
}

py::dict tidal_py(const std::string& name, const std::optional<Vector>& direction, const Params& params) {
    const CatalogEntry e = get(name, params);
    const Vector x = resolve_direction(e, direction);
    const TidalData t = tidal(e.spec, e.spec.base_point, x);
    py::dict d;
    d["direction"] = x;
    d["kappa"] = t.kappa;
    d["w"] = t.w;
    d["w_prime"] = t.w_prime;
    d["h"] = t.h;
    d["r2"] = t.r2;
    d["tr_w2"] = t.tr_w2;
    d["tr_wprime2"] = t.tr_wprime2;
    d["sectional_spectrum"] = sectional_spectrum(e.spec, e.spec.base_point, x);
    return d;
}

py::dict bounds_py(const std::string& name, const Params& params, std::optional<int> n, double refine_tol) {
    const CatalogEntry e = get(name, params);
    const int d = e.spec.dim;
    const BoundReport r = compute_bounds(e.spec, n.value_or(64 * d * d), refine_tol);
    py::dict out;
    out["d"] = r.d;
    out["r2_max"] = r.r2_max;
    out["r2_min"] = r.r2_min;
    out["w2_min"] = r.w2_min;
    out["wprime2_max"] = r.wprime2_max;
    out["bg_rate2"] = r.bg_rate2;
    out["new_rate2"] = r.new_rate2;
    out["refined_rate2"] = r.refined_rate2;
    out["bg_rate"] = std::sqrt(r.bg_rate2);
    out["new_rate"] = std::sqrt(r.new_rate2);
    out["refined_rate"] = std::sqrt(r.refined_rate2);
    out["symmetric_rate"] = r.symmetric_rate;
    out["perfect_precession_rate"] = r.perfect_precession_rate;
    out["spectrum"] = r.spectrum;
    out["argmax_direction"] = r.argmax_direction.comps;
    out["refined_argmax_direction"] = r.refined_argmax_direction.comps;
    py::dict scan;
    scan["r2_max"] = extremum_dict(r.scan.r2_max);
    scan["r2_min"] = extremum_dict(r.scan.r2_min);
    scan["w2_min"] = extremum_dict(r.scan.w2_min);
    scan["wprime2_max"] = extremum_dict(r.scan.wprime2_max);
    py::list ties;
    for (const auto& t : r.scan.r2_max_ties) ties.append(tangent_dict(t));
    scan["r2_max_ties"] = ties;
    scan["resolution"] = r.scan.resolution;
    out["scan"] = scan;
    return out;
}

py::dict simulate_py(const std::string& name, const std::optional<Vector>& direction, const Params& params,
                     double t0, double t_end, double dt, std::optional<double> t_burn) {
    const CatalogEntry e = get(name, params);
    const Vector x = resolve_direction(e, direction);
    FlowOptions opt;
    opt.t0 = t0;
    opt.t_end = t_end;
    opt.dt = dt;
    const FlowSeries s = integrate_flow(e.spec, x, opt);

    const std::size_t n = s.samples.size();
    std::vector<double> t(n), theta(n), sigma2(n), omega2(n), r2(n), tr_w2(n), min_eig(n), det_m(n), norm_err(n);
    for (std::size_t i = 0; i < n; ++i) {
        const FlowSample& f = s.samples[i];
        t[i] = f.t;
        theta[i] = f.dec.theta;
        sigma2[i] = f.sigma2;
        omega2[i] = f.omega2;
        r2[i] = f.r2;
        tr_w2[i] = (f.w * f.w).trace();
        min_eig[i] = f.min_eig_m;
        det_m[i] = f.det_m;
        norm_err[i] = f.norm_error;
    }
    py::dict out;
    out["d"] = s.d;
    out["direction"] = x;
    out["t"] = as_array(t);
    out["theta"] = as_array(theta);
    out["sigma2"] = as_array(sigma2);
    out["omega2"] = as_array(omega2);
    out["r2"] = as_array(r2);
    out["tr_w2"] = as_array(tr_w2);
    out["min_eig_m"] = as_array(min_eig);
    out["det_m"] = as_array(det_m);
    out["norm_error"] = as_array(norm_err);
    const RaychaudhuriResiduals res = raychaudhuri_residuals(s);
    out["raychaudhuri_first"] = res.first;
    out["raychaudhuri_second"] = res.second;
    if (t_burn) {
        const double r2_max = scan_directions(e.spec, 64 * e.spec.dim * e.spec.dim).r2_max.value;
        out["averages"] = average_dict(averaged_identity_residual(s, *t_burn, r2_max));
    }
    return out;
}

py::dict trace_check_py(const Matrix& sigma, double theta, bool positive_m) {
    const TraceCheck c = shear_trace_bounds_check(sigma, theta, positive_m);
    py::dict d;
    d["holds"] = py::make_tuple(c.holds[0], c.holds[1], c.holds[2]);
    d["asserted"] = py::make_tuple(c.asserted[0], c.asserted[1], c.asserted[2]);
    d["margin"] = py::make_tuple(c.margin[0], c.margin[1], c.margin[2]);
    return d;
}

double strategy_py(const std::vector<std::tuple<double, double, double, double>>& segments, int d, double r2_max) {
    std::vector<StrategySegment> segs;
    for (const auto& [w, r2, tw2, twp2] : segments) segs.push_back({w, r2, tw2, twp2});
    return strategy_functional(segs, d, r2_max);
}

py::dict jacobi_py(const py::object& kappa, double t_end, double dt) {
    const JacobiSolution s = solve_jacobi(to_schedule(kappa), t_end, dt);
    py::dict d;
    d["t"] = as_array(s.t);
    d["j"] = as_array(s.j);
    d["jp"] = as_array(s.jp);
    d["stuck_at"] = s.stuck_at ? py::cast(*s.stuck_at) : py::none();
    return d;
}

py::dict lemma_py(const py::object& k1, const py::object& k2, double t_end, double dt, double tolerance) {
    const KappaSchedule a = to_schedule(k1), b = to_schedule(k2);
    const LemmaCheck c = multiplicative_lemma_check(a, b, t_end, dt, tolerance);
    py::dict d;
    d["product_holds"] = c.product_holds;
    d["ratio_holds"] = c.ratio_holds;
    d["min_margin"] = c.min_margin;
    d["min_product_margin"] = c.min_product_margin;
    d["min_ratio_margin"] = c.min_ratio_margin;
    d["av_stuck_events"] = c.av_stuck_events;
    d["taylor_prediction"] = lemma_taylor_prediction(a, b);
    return d;
}

py::dict shuffle_py(const py::object& k1, const py::object& k2, const std::vector<double>& deltas, double t_end) {
    const ShuffleStudy st = shuffle_convergence(to_schedule(k1), to_schedule(k2), deltas, t_end);
    py::dict d;
    d["deltas"] = as_array(st.deltas);
    d["j_errors"] = as_array(st.errors);
    d["state_errors"] = as_array(st.state_errors);
    d["slope"] = st.slope;
    d["state_slope"] = st.state_slope;
    d["j_av"] = st.j_av;
    return d;
}

py::tuple run_cli_py(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = cli::run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Expansion-rate bounds for geodesic congruences on negatively curved manifolds";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result(
        [&]() -> py::object { return py::exception<Error>(m, "GeoboundError", PyExc_RuntimeError); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const py::object& type = error_type.get_stored();
            py::object exc = type(e.what());
            exc.attr("kind") = py::str(std::string(to_string(e.kind())));
            PyErr_SetObject(type.ptr(), exc.ptr());
        }
    });

    m.def("list_metrics", &list_metrics_py, "Built-in metrics with defaults, flags and oracle names.");
    m.def("metric", &metric_py, py::arg("name"), py::arg("params") = Params{},
          "Dimension, base point, diagonal direction and metric components at the base point.");
    m.def("metric_components", &metric_components, py::arg("name"), py::arg("point"), py::arg("params") = Params{});
    m.def("oracle", [](const std::string& name, const std::string& quantity, const std::vector<double>& args,
                       const Params& params) { return oracle_eval(get(name, params), quantity, args); },
          py::arg("name"), py::arg("quantity"), py::arg("args") = std::vector<double>{},
          py::arg("params") = Params{}, "Closed-form value of a catalog quantity.");
    m.def("tidal", &tidal_py, py::arg("name"), py::arg("direction") = py::none(), py::arg("params") = Params{},
          "Tidal tensors at the base point along a direction (rescaled to unit length; default diagonal).");
    m.def("bounds", &bounds_py, py::arg("name"), py::arg("params") = Params{}, py::arg("n") = py::none(),
          py::arg("refine_tol") = 1e-10, "Comparison, new and refined rate bounds with the direction scan.");
    m.def("simulate", &simulate_py, py::arg("name"), py::arg("direction") = py::none(), py::arg("params") = Params{},
          py::arg("t0") = 1e-3, py::arg("t_end") = 10.0, py::arg("dt") = 1e-3, py::arg("t_burn") = py::none(),
          "Integrates the congruence from a point source; returns time series and residuals.");
    m.def("shear_trace_bounds_check", &trace_check_py, py::arg("sigma"), py::arg("theta"),
          py::arg("positive_m") = false);
    m.def("sn", &sn, py::arg("k"), py::arg("t"));
    m.def("bg_volume", &bg_volume, py::arg("d"), py::arg("ricci_min"), py::arg("t"));
    m.def("bg_log_slope", &bg_log_slope, py::arg("d"), py::arg("ricci_min"), py::arg("t"));
    m.def("strategy_functional", &strategy_py, py::arg("segments"), py::arg("d"), py::arg("r2_max"),
          "segments: (weight, R^2, Tr W^2, Tr W'^2) tuples.");
    m.def("solve_jacobi", &jacobi_py, py::arg("kappa"), py::arg("t_end"), py::arg("dt") = 1e-3,
          "j'' = kappa(t) j with j(0) = 0, j'(0) = 1; kappa is a number or a callable.");
    m.def("lemma_check", &lemma_py, py::arg("k1"), py::arg("k2"), py::arg("t_end") = 3.0, py::arg("dt") = 1e-3,
          py::arg("tolerance") = 1e-10);
    m.def("shuffle_convergence", &shuffle_py, py::arg("k1"), py::arg("k2"),
          py::arg("deltas") = std::vector<double>{1e-1, 1e-2, 1e-3}, py::arg("t_end") = 2.0);
    m.def("run_cli", &run_cli_py, py::arg("args"), "Runs the command-line tool in process: (exit code, stdout, stderr).");
}
