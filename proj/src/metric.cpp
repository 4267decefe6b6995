#include "geobound/metric.hpp"
#include "geobound/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace geobound {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kNoiseLimit = 1e-6;

Matrix eval_checked(const MetricSpec& spec, const Vector& p) {
    Matrix g = spec.components(p);
    if (g.rows() != spec.dim || g.cols() != spec.dim) {
        throw Error(ErrorKind::BadParams, "metric components have wrong shape for " + spec.name);
    }
    if (!g.allFinite()) {
        throw Error(ErrorKind::NonFiniteMetric, "non-finite component in " + spec.name);
    }
    return g;
}

void check_noise(double noise, double signal, const char* what) {
    if (noise > kNoiseLimit * std::max(1.0, signal)) {
        throw Error(ErrorKind::StepTooSmall, std::string("finite-difference cancellation in ") + what);
    }
}

double tensor_max(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

double default_fd_step(const Vector& p) {
    const double scale = p.size() == 0 ? 0.0 : p.cwiseAbs().maxCoeff();
    return 1e-5 * (1.0 + scale);
}

Matrix metric_at(const MetricSpec& spec, const Vector& p) { return eval_checked(spec, p); }

Matrix inverse_metric(const Matrix& g, double max_condition) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(g, Eigen::EigenvaluesOnly);
    const Vector& ev = solver.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.cwiseAbs().maxCoeff();
    if (!(lo > 0.0) || hi / lo > max_condition) {
        throw Error(ErrorKind::SingularMetric, "metric not invertible (condition number " +
                                                   std::to_string(hi / lo) + ")");
    }
    Matrix inv = g.ldlt().solve(Matrix::Identity(g.rows(), g.cols()));
    return 0.5 * (inv + inv.transpose());
}

Tensor3 metric_derivs_fd(const MetricSpec& spec, const Vector& p, double h) {
    if (h <= 0.0) h = default_fd_step(p);
    const int d = spec.dim;
    Tensor3 out(d);
    double gmax = 0.0;
    for (int c = 0; c < d; ++c) {
        Vector pp = p, pm = p;
        pp[c] += h;
        pm[c] -= h;
        const Matrix gp = eval_checked(spec, pp);
        const Matrix gm = eval_checked(spec, pm);
        gmax = std::max({gmax, max_abs(gp), max_abs(gm)});
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) out(c, a, b) = (gp(a, b) - gm(a, b)) / (2.0 * h);
    }
    check_noise(kEps * gmax / h, tensor_max(out.data()), "metric_derivs");
    return out;
}

Tensor3 metric_derivs(const MetricSpec& spec, const Vector& p, double h) {
    if (spec.derivs) return spec.derivs(p);
    return metric_derivs_fd(spec, p, h);
}

Tensor4 metric_second_derivs(const MetricSpec& spec, const Vector& p, double h) {
    if (spec.second_derivs) return spec.second_derivs(p);
    const int d = spec.dim;
    Tensor4 out(d);
    if (spec.derivs) {
        if (h <= 0.0) h = default_fd_step(p);
        double dmax = 0.0;
        for (int e = 0; e < d; ++e) {
            Vector pp = p, pm = p;
            pp[e] += h;
            pm[e] -= h;
            const Tensor3 dp = spec.derivs(pp);
            const Tensor3 dm = spec.derivs(pm);
            dmax = std::max({dmax, tensor_max(dp.data()), tensor_max(dm.data())});
            for (int c = 0; c < d; ++c)
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b)
                        out(e, c, a, b) = (dp(c, a, b) - dm(c, a, b)) / (2.0 * h);
        }
        check_noise(kEps * dmax / h, tensor_max(out.data()), "metric_second_derivs");
    } else {
        // Nested differences of g: error O(h^2), roundoff O(eps / h^2), so a
        // coarser step than the first-derivative default.
        if (h <= 0.0) h = 10.0 * default_fd_step(p);
        const Matrix g0 = eval_checked(spec, p);
        double gmax = max_abs(g0);
        for (int c = 0; c < d; ++c) {
            for (int e = c; e < d; ++e) {
                Matrix val;
                if (c == e) {
                    Vector pp = p, pm = p;
                    pp[c] += h;
                    pm[c] -= h;
                    const Matrix gp = eval_checked(spec, pp), gm = eval_checked(spec, pm);
                    gmax = std::max({gmax, max_abs(gp), max_abs(gm)});
                    val = (gp - 2.0 * g0 + gm) / (h * h);
                } else {
                    Vector ppp = p, ppm = p, pmp = p, pmm = p;
                    ppp[c] += h; ppp[e] += h;
                    ppm[c] += h; ppm[e] -= h;
                    pmp[c] -= h; pmp[e] += h;
                    pmm[c] -= h; pmm[e] -= h;
                    const Matrix a1 = eval_checked(spec, ppp), a2 = eval_checked(spec, ppm);
                    const Matrix a3 = eval_checked(spec, pmp), a4 = eval_checked(spec, pmm);
                    gmax = std::max({gmax, max_abs(a1), max_abs(a2), max_abs(a3), max_abs(a4)});
                    val = (a1 - a2 - a3 + a4) / (4.0 * h * h);
                }
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) {
                        out(c, e, a, b) = val(a, b);
                        out(e, c, a, b) = val(a, b);
                    }
            }
        }
        check_noise(4.0 * kEps * gmax / (h * h), tensor_max(out.data()), "metric_second_derivs");
    }
    return out;
}

double unit_norm(const Matrix& g, const Vector& x) { return std::sqrt(inner(g, x, x)); }

std::vector<Vector> unit_sphere_points(int dim, int n) {
    std::vector<Vector> pts;
    pts.reserve(static_cast<std::size_t>(n));
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (dim == 1) {
        for (int k = 0; k < n; ++k) pts.push_back(Vector::Constant(1, k % 2 == 0 ? 1.0 : -1.0));
        return pts;
    }
    if (dim == 2) {
        for (int k = 0; k < n; ++k) {
            const double a = two_pi * k / n;
            Vector v(2);
            v << std::cos(a), std::sin(a);
            pts.push_back(v);
        }
        return pts;
    }
    if (dim == 3) {
        const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < n; ++k) {
            const double z = 1.0 - (2.0 * k + 1.0) / n;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double a = golden_angle * k;
            Vector v(3);
            v << r * std::cos(a), r * std::sin(a), z;
            pts.push_back(v);
        }
        return pts;
    }
    // Kronecker sequence with the generalised golden ratio phi_m, the real root of
    // x^(m+1) = x + 1, over an even number m of uniforms feeding Box-Muller pairs.
    const int m = dim + (dim % 2);
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (m + 1));
    std::vector<double> alpha(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) alpha[static_cast<std::size_t>(j)] = std::fmod(std::pow(1.0 / phi, j + 1), 1.0);

    std::vector<double> u(static_cast<std::size_t>(m));
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < m; ++j) {
            const double x = 0.5 + (k + 1) * alpha[static_cast<std::size_t>(j)];
            u[static_cast<std::size_t>(j)] = x - std::floor(x);
        }
        Vector v(dim);
        for (int j = 0; j < dim; j += 2) {
            const double r = std::sqrt(-2.0 * std::log(std::max(u[static_cast<std::size_t>(j)], 1e-300)));
            const double a = two_pi * u[static_cast<std::size_t>(j + 1)];
            v[j] = r * std::cos(a);
            if (j + 1 < dim) v[j + 1] = r * std::sin(a);
        }
        const double norm = v.norm();
        if (norm < 1e-12) {
            v.setZero();
            v[0] = 1.0;
        } else {
            v /= norm;
        }
        pts.push_back(v);
    }
    return pts;
}

std::vector<TangentVector> sphere_directions(const Matrix& g, int n, const Vector& point) {
    const Matrix root = inverse_sqrt_spd(g);
    std::vector<TangentVector> out;
    out.reserve(static_cast<std::size_t>(n));
    for (const Vector& u : unit_sphere_points(static_cast<int>(g.rows()), n)) {
        Vector x = root * u;
        x /= unit_norm(g, x);
        out.push_back({point, x});
    }
    return out;
}

Vector random_unit_direction(const Matrix& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vector u(g.rows());
    do {
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = normal(rng);
    } while (u.norm() < 1e-12);
    const Vector x = inverse_sqrt_spd(g) * u;
    return x / unit_norm(g, x);
}

Matrix orthonormal_frame(const Matrix& g, const Vector& first) {
    const int d = static_cast<int>(g.rows());
    Matrix frame(d, d);
    int filled = 0;
    auto add = [&](Vector v) {
        const double original = unit_norm(g, v);
        for (int i = 0; i < filled; ++i) v -= inner(g, frame.col(i), v) * frame.col(i);
        for (int i = 0; i < filled; ++i) v -= inner(g, frame.col(i), v) * frame.col(i);
        const double nrm = unit_norm(g, v);
        if (!(nrm > 1e-6 * original)) return;
        frame.col(filled++) = v / nrm;
    };
    add(first);
    for (int a = 0; a < d && filled < d; ++a) add(Vector::Unit(d, a));
    return frame;
}

}  // namespace geobound
