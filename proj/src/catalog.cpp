#include "geobound/catalog.hpp"
#include "geobound/error.hpp"

#include <cmath>
#include <memory>
#include <numbers>

namespace geobound {
namespace {

struct Jet {
    double v, d1, d2;
};

Jet factor_jet(const DiagonalFactor& f, double x) {
    switch (f.kind) {
        case DiagonalFactor::Kind::Exp: {
            const double v = std::exp(f.rate * x);
            return {v, f.rate * v, f.rate * f.rate * v};
        }
        case DiagonalFactor::Kind::SinhSq: {
            const double s = std::sinh(x);
            return {s * s, std::sinh(2.0 * x), 2.0 * std::cosh(2.0 * x)};
        }
        case DiagonalFactor::Kind::SinSq: {
            const double s = std::sin(x);
            return {s * s, std::sin(2.0 * x), 2.0 * std::cos(2.0 * x)};
        }
    }
    return {1.0, 0.0, 0.0};
}

using FactorTable = std::vector<std::vector<DiagonalFactor>>;

std::vector<std::vector<Jet>> jets(const FactorTable& table, const Vector& p) {
    std::vector<std::vector<Jet>> out(table.size());
    for (std::size_t a = 0; a < table.size(); ++a)
        for (const auto& f : table[a]) out[a].push_back(factor_jet(f, p[f.coord]));
    return out;
}

// product of v over all factors except indices i and j (pass -1 to skip none)
double product_except(const std::vector<Jet>& js, int i, int j) {
    double prod = 1.0;
    for (int k = 0; k < static_cast<int>(js.size()); ++k)
        if (k != i && k != j) prod *= js[static_cast<std::size_t>(k)].v;
    return prod;
}

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

int int_param(const std::map<std::string, double>& params, const std::string& key, int fallback, int lo) {
    const double v = param(params, key, fallback);
    if (!std::isfinite(v) || v != std::floor(v) || v < lo || v > 64) {
        throw Error(ErrorKind::BadParams, key + " must be an integer in [" + std::to_string(lo) + ", 64]");
    }
    return static_cast<int>(v);
}

void check_keys(const std::string& name, const std::map<std::string, double>& params,
                const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : params) {
        bool ok = false;
        for (const auto& a : allowed) ok = ok || a == key;
        if (!ok) throw Error(ErrorKind::BadParams, "unknown parameter '" + key + "' for " + name);
    }
}

double coth(double x) { return std::cosh(x) / std::sinh(x); }

double arg(const std::vector<double>& args, std::size_t i, const char* quantity) {
    if (i >= args.size()) {
        throw Error(ErrorKind::BadParams, std::string(quantity) + " needs " + std::to_string(i + 1) + " argument(s)");
    }
    return args[i];
}

Oracle constant(double v) {
    return [v](const std::vector<double>&) { return v; };
}

// Horospherical hyperbolic plane dx^2 + e^{2x} dy^2 on coordinates (k, k+1).
void add_h2_block(FactorTable& table, int k) {
    table[static_cast<std::size_t>(k)] = {};
    table[static_cast<std::size_t>(k + 1)] = {{k, DiagonalFactor::Kind::Exp, 2.0}};
}

// Polar hyperbolic plane dt^2 + sinh^2 t dphi^2 on coordinates (k, k+1).
void add_polar_h2_block(FactorTable& table, int k) {
    table[static_cast<std::size_t>(k)] = {};
    table[static_cast<std::size_t>(k + 1)] = {{k, DiagonalFactor::Kind::SinhSq, 0.0}};
}

// Product of n hyperbolic planes: expansion and shear along a geodesic ball
// in terms of the per-factor radii tau_i.
std::vector<double> ball_eigenvalues(const std::vector<double>& tau) {
    double r2 = 0.0;
    for (double t : tau) r2 += t * t;
    const double r = std::sqrt(r2);
    std::vector<double> lambda(tau.size() - 1, 1.0 / r);
    for (double t : tau) lambda.push_back(t * coth(t) / r);
    return lambda;
}

double ball_theta(const std::vector<double>& tau) {
    double s = 0.0;
    for (double l : ball_eigenvalues(tau)) s += l;
    return s;
}

double ball_sigma_power(const std::vector<double>& tau, int power) {
    const std::vector<double> l = ball_eigenvalues(tau);
    const double mean = ball_theta(tau) / static_cast<double>(l.size());
    double s = 0.0;
    for (double x : l) s += std::pow(x - mean, power);
    return s;
}

void add_h2n_oracles(CatalogEntry& e, int n) {
    const double dn = n;
    e.oracles["theta"] = [](const std::vector<double>& tau) {
        if (tau.empty()) throw Error(ErrorKind::BadParams, "theta needs the factor radii");
        return ball_theta(tau);
    };
    e.oracles["theta_diag"] = [dn](const std::vector<double>& a) {
        const double t = arg(a, 0, "theta_diag");
        return std::sqrt(dn) * coth(t / std::sqrt(dn)) + (dn - 1.0) / t;
    };
    e.oracles["sigma2"] = [](const std::vector<double>& tau) { return ball_sigma_power(tau, 2); };
    e.oracles["tr_sigma3"] = [](const std::vector<double>& tau) { return ball_sigma_power(tau, 3); };
    e.oracles["r2"] = constant(1.0);
    e.oracles["bg_rate2"] = constant(2.0 * dn - 1.0);
    e.oracles["actual_rate"] = constant(std::sqrt(dn));
    e.oracles["actual_rate2"] = constant(dn);
    e.oracles["volume_rate"] = constant(std::sqrt(2.0 * dn - 1.0));
}

void add_h2xh2_oracles(CatalogEntry& e) {
    add_h2n_oracles(e, 2);
    e.oracles["theta"] = [](const std::vector<double>& a) {
        const double t1 = arg(a, 0, "theta"), t2 = arg(a, 1, "theta");
        return (1.0 + t1 * coth(t1) + t2 * coth(t2)) / std::hypot(t1, t2);
    };
    e.oracles["theta_prime"] = [](const std::vector<double>& a) {
        const double t1 = arg(a, 0, "theta_prime"), t2 = arg(a, 1, "theta_prime");
        const double s1 = std::sinh(t1), s2 = std::sinh(t2);
        return -(1.0 + t1 * t1 / (s1 * s1) + t2 * t2 / (s2 * s2)) / (t1 * t1 + t2 * t2);
    };
    e.oracles["sigma2"] = [](const std::vector<double>& a) {
        const double t1 = arg(a, 0, "sigma2"), t2 = arg(a, 1, "sigma2");
        const double c1 = coth(t1), c2 = coth(t2);
        return 2.0 / (3.0 * (t1 * t1 + t2 * t2)) *
               (t1 * t1 * c1 * c1 - c1 * (t1 * t2 * c2 + t1) + t2 * c2 * (t2 * c2 - 1.0) + 1.0);
    };
    e.oracles["tr_sigma3"] = [](const std::vector<double>& a) {
        const double t1 = arg(a, 0, "tr_sigma3"), t2 = arg(a, 1, "tr_sigma3");
        const double a1 = t1 * coth(t1), a2 = t2 * coth(t2);
        return (a1 - 2.0 * a2 + 1.0) * (a2 - 2.0 * a1 + 1.0) * (2.0 - a1 - a2) /
               (9.0 * std::pow(t1 * t1 + t2 * t2, 1.5));
    };
    e.oracles["sigma_dot_w"] = [](const std::vector<double>& a) {
        const double t1 = arg(a, 0, "sigma_dot_w"), t2 = arg(a, 1, "sigma_dot_w");
        const double theta = (1.0 + t1 * coth(t1) + t2 * coth(t2)) / std::hypot(t1, t2);
        return (t1 * t1 * t1 * coth(t1) + t2 * t2 * t2 * coth(t2)) / std::pow(t1 * t1 + t2 * t2, 1.5) -
               theta / 3.0;
    };
    e.oracles["tr_w2"] = [](const std::vector<double>& a) {
        const double psi = arg(a, 0, "tr_w2");
        const double c = std::cos(psi), s = std::sin(psi);
        return 1.0 / 6.0 + 0.5 * std::pow(c * c - s * s, 2);
    };
    e.oracles["w2_min"] = constant(1.0 / 6.0);
    e.oracles["wprime2_max"] = constant(0.0);
    e.oracles["new_rate2"] = constant(23.0 / 8.0);
    e.oracles["refined_rate2"] = constant(63.0 / 22.0);
    e.oracles["symmetric_rate"] = constant(std::sqrt(2.0));
}

double squashed_new_rate2(double c) {
    const double root = std::sqrt(3.0 * c * c + 3.0 * c + 1.0) - 1.0;
    return 2.0 * (c * (1.0 + c) - (c - 1.0) * (c - 1.0) * root * root / (18.0 * (c + 1.0) * (c + 1.0)));
}

void add_squashed_oracles(CatalogEntry& e, double c) {
    e.oracles["r2_max"] = constant(c * (1.0 + c));
    e.oracles["r2_min"] = constant(1.0 + c);
    e.oracles["tr_w2_x"] = constant(0.5 * c * c * (c - 1.0) * (c - 1.0));
    e.oracles["wprime2_max"] = constant(2.0 * (c - 1.0) * (c - 1.0) * c * c);
    e.oracles["bg_rate2"] = constant(2.0 * c * (1.0 + c));
    e.oracles["new_rate2"] = [c](const std::vector<double>& a) {
        return squashed_new_rate2(a.empty() ? c : a[0]);
    };
    e.oracles["rate_improvement_fraction"] = [c](const std::vector<double>& a) {
        const double cc = a.empty() ? c : a[0];
        if (std::isinf(cc)) return 1.0 - std::sqrt(5.0 / 6.0);
        return 1.0 - std::sqrt(squashed_new_rate2(cc) / (2.0 * cc * (1.0 + cc)));
    };
    e.oracles["sectional_x"] = [c](const std::vector<double>&) { return -c * c; };
}

CatalogEntry make_flat(const std::map<std::string, double>& params) {
    check_keys("flat", params, {"d"});
    const int d = int_param(params, "d", 3, 2);
    CatalogEntry e;
    e.name = "flat";
    e.description = "Euclidean space R^d";
    e.spec = separable_diagonal_metric("flat", d, FactorTable(static_cast<std::size_t>(d)), Vector::Zero(d));
    e.spec.params = {{"d", d}};
    e.flags = {true, true, true};
    e.diagonal = Vector::Constant(d, 1.0 / std::sqrt(d));
    const double dm1 = d - 1.0;
    e.oracles["theta"] = [dm1](const std::vector<double>& a) { return dm1 / arg(a, 0, "theta"); };
    for (const char* q : {"sigma2", "r2", "r2_max", "bg_rate2", "new_rate2", "refined_rate2"}) e.oracles[q] = constant(0.0);
    return e;
}

void add_hd_oracles(CatalogEntry& e, int d) {
    const double dm1 = d - 1.0;
    e.oracles["theta"] = [dm1](const std::vector<double>& a) { return dm1 * coth(arg(a, 0, "theta")); };
    e.oracles["sigma2"] = constant(0.0);
    e.oracles["tr_w2"] = constant(0.0);
    e.oracles["r2"] = constant(dm1);
    e.oracles["r2_max"] = constant(dm1);
    e.oracles["bg_rate2"] = constant(dm1 * dm1);
    e.oracles["new_rate2"] = constant(dm1 * dm1);
    e.oracles["refined_rate2"] = constant(dm1 * dm1);
    e.oracles["symmetric_rate"] = constant(dm1);
    e.oracles["volume_rate"] = constant(dm1);
}

CatalogEntry make_hd(const std::map<std::string, double>& params) {
    check_keys("hd", params, {"d"});
    const int d = int_param(params, "d", 3, 2);
    FactorTable table(static_cast<std::size_t>(d));
    for (int a = 1; a < d; ++a) table[static_cast<std::size_t>(a)] = {{0, DiagonalFactor::Kind::Exp, 2.0}};
    CatalogEntry e;
    e.name = "hd";
    e.description = "hyperbolic space H^d, horospherical chart dz^2 + e^{2z} sum dx_i^2";
    e.spec = separable_diagonal_metric("hd", d, std::move(table), Vector::Zero(d));
    e.spec.params = {{"d", d}};
    e.flags = {true, true, true};
    e.diagonal = Vector::Constant(d, 1.0 / std::sqrt(d));
    add_hd_oracles(e, d);
    return e;
}

CatalogEntry make_hd_polar(const std::map<std::string, double>& params) {
    check_keys("hd-polar", params, {"d"});
    const int d = int_param(params, "d", 3, 2);
    FactorTable table(static_cast<std::size_t>(d));
    for (int a = 1; a < d; ++a) {
        auto& row = table[static_cast<std::size_t>(a)];
        row.push_back({0, DiagonalFactor::Kind::SinhSq, 0.0});
        for (int j = 1; j < a; ++j) row.push_back({j, DiagonalFactor::Kind::SinSq, 0.0});
    }
    Vector base = Vector::Constant(d, std::numbers::pi / 2.0);
    base[0] = 1.0;
    base[d - 1] = 0.0;
    CatalogEntry e;
    e.name = "hd-polar";
    e.description = "hyperbolic space H^d, geodesic polar chart dt^2 + sinh^2 t dOmega^2";
    e.spec = separable_diagonal_metric("hd-polar", d, std::move(table), base);
    e.spec.params = {{"d", d}};
    e.flags = {true, true, true};
    e.diagonal = Vector::Unit(d, 0);
    add_hd_oracles(e, d);
    return e;
}

CatalogEntry make_h2n(const std::string& name, int n, bool polar) {
    const int d = 2 * n;
    FactorTable table(static_cast<std::size_t>(d));
    Vector base = Vector::Zero(d);
    Vector diag = Vector::Zero(d);
    for (int k = 0; k < n; ++k) {
        if (polar) {
            add_polar_h2_block(table, 2 * k);
            base[2 * k] = 1.0;
        } else {
            add_h2_block(table, 2 * k);
        }
        diag[2 * k] = 1.0 / std::sqrt(n);
    }
    CatalogEntry e;
    e.name = name;
    e.description = polar ? "product of hyperbolic planes, polar charts dtau^2 + sinh^2 tau dphi^2"
                          : "product of hyperbolic planes, horospherical charts dx^2 + e^{2x} dy^2";
    e.spec = separable_diagonal_metric(name, d, std::move(table), base);
    e.flags = {true, true, true};
    e.diagonal = diag;
    return e;
}

CatalogEntry make_squashed(const std::map<std::string, double>& params) {
    check_keys("squashed-h3", params, {"c"});
    const double c = param(params, "c", 2.0);
    if (!std::isfinite(c) || c < 1.0) throw Error(ErrorKind::BadParams, "squashed-h3 requires finite c >= 1");
    FactorTable table(3);
    table[0] = {{2, DiagonalFactor::Kind::Exp, 2.0 * c}};
    table[1] = {{2, DiagonalFactor::Kind::Exp, 2.0}};
    CatalogEntry e;
    e.name = "squashed-h3";
    e.description = "squashed hyperbolic space e^{2cz} dx^2 + e^{2z} dy^2 + dz^2, c >= 1";
    e.spec = separable_diagonal_metric("squashed-h3", 3, std::move(table), Vector::Zero(3));
    e.spec.params = {{"c", c}};
    const bool round = c == 1.0;
    e.flags = {true, round, round};
    e.diagonal = Vector::Constant(3, 1.0 / std::sqrt(3.0));
    add_squashed_oracles(e, c);
    return e;
}

}  // namespace

MetricSpec separable_diagonal_metric(std::string name, int dim, std::vector<std::vector<DiagonalFactor>> factors,
                                     Vector base_point) {
    auto table = std::make_shared<const FactorTable>(std::move(factors));
    MetricSpec spec;
    spec.name = std::move(name);
    spec.dim = dim;
    spec.base_point = std::move(base_point);
    spec.components = [table, dim](const Vector& p) {
        Matrix g = Matrix::Zero(dim, dim);
        const auto js = jets(*table, p);
        for (int a = 0; a < dim; ++a) g(a, a) = product_except(js[static_cast<std::size_t>(a)], -1, -1);
        return g;
    };
    spec.derivs = [table, dim](const Vector& p) {
        Tensor3 out(dim);
        const auto js = jets(*table, p);
        for (int a = 0; a < dim; ++a) {
            const auto& row = (*table)[static_cast<std::size_t>(a)];
            const auto& ja = js[static_cast<std::size_t>(a)];
            for (int i = 0; i < static_cast<int>(row.size()); ++i)
                out(row[static_cast<std::size_t>(i)].coord, a, a) +=
                    ja[static_cast<std::size_t>(i)].d1 * product_except(ja, i, -1);
        }
        return out;
    };
    spec.second_derivs = [table, dim](const Vector& p) {
        Tensor4 out(dim);
        const auto js = jets(*table, p);
        for (int a = 0; a < dim; ++a) {
            const auto& row = (*table)[static_cast<std::size_t>(a)];
            const auto& ja = js[static_cast<std::size_t>(a)];
            const int nf = static_cast<int>(row.size());
            for (int i = 0; i < nf; ++i) {
                const int ci = row[static_cast<std::size_t>(i)].coord;
                out(ci, ci, a, a) += ja[static_cast<std::size_t>(i)].d2 * product_except(ja, i, -1);
                for (int j = 0; j < nf; ++j) {
                    if (j == i) continue;
                    const int cj = row[static_cast<std::size_t>(j)].coord;
                    out(ci, cj, a, a) += ja[static_cast<std::size_t>(i)].d1 * ja[static_cast<std::size_t>(j)].d1 *
                                         product_except(ja, i, j);
                }
            }
        }
        return out;
    };
    return spec;
}

std::vector<CatalogInfo> list_metrics() {
    std::vector<CatalogInfo> out;
    for (const auto& name : {"flat", "hd", "hd-polar", "h2xh2", "h2xh2-polar", "h2n", "squashed-h3"}) {
        const CatalogEntry e = get(name);
        out.push_back({e.name, e.description, e.spec.params});
    }
    return out;
}

CatalogEntry get(const std::string& name, const std::map<std::string, double>& params) {
    if (name == "flat") return make_flat(params);
    if (name == "hd") return make_hd(params);
    if (name == "hd-polar") return make_hd_polar(params);
    if (name == "h2xh2" || name == "h2xh2-polar") {
        check_keys(name, params, {});
        CatalogEntry e = make_h2n(name, 2, name == "h2xh2-polar");
        add_h2xh2_oracles(e);
        return e;
    }
    if (name == "h2n") {
        check_keys(name, params, {"n"});
        const int n = int_param(params, "n", 2, 1);
        CatalogEntry e = make_h2n(name, n, false);
        e.spec.params = {{"n", n}};
        add_h2n_oracles(e, n);
        return e;
    }
    if (name == "squashed-h3") return make_squashed(params);
    throw Error(ErrorKind::UnknownMetric, "no catalog metric named '" + name + "'");
}

double oracle_eval(const CatalogEntry& entry, const std::string& quantity, const std::vector<double>& args) {
    auto it = entry.oracles.find(quantity);
    if (it == entry.oracles.end()) {
        throw Error(ErrorKind::UnknownQuantity, "no oracle '" + quantity + "' for " + entry.name);
    }
    return it->second(args);
}

}  // namespace geobound
