#include "geobound/sphere_search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geobound {
namespace {

constexpr double kGradStep = 1e-3;
constexpr double kHessStep = 1e-3;
constexpr double kMaxStep = 0.5;

Matrix tangent_basis(const Vector& u) {
    const int d = static_cast<int>(u.size());
    const Matrix column = u;
    Eigen::HouseholderQR<Matrix> qr(column);
    Matrix q = qr.householderQ();
    return q.rightCols(d - 1);
}

Vector chart(const Vector& u, const Matrix& basis, const Vector& v) {
    Vector x = u + basis * v;
    return x / x.norm();
}

Vector chart_gradient(const SphereObjective& f, const Vector& u, const Matrix& basis) {
    const int m = static_cast<int>(basis.cols());
    Vector grad(m);
    const double h = kGradStep;
    for (int i = 0; i < m; ++i) {
        Vector e = Vector::Zero(m);
        e[i] = h;
        const double f1p = f(chart(u, basis, e)), f1m = f(chart(u, basis, -e));
        const double f2p = f(chart(u, basis, 2.0 * e)), f2m = f(chart(u, basis, -2.0 * e));
        grad[i] = (8.0 * (f1p - f1m) - (f2p - f2m)) / (12.0 * h);
    }
    return grad;
}

Matrix chart_hessian(const SphereObjective& f, const Vector& u, const Matrix& basis, double f0) {
    const int m = static_cast<int>(basis.cols());
    Matrix hess(m, m);
    const double h = kHessStep;
    for (int i = 0; i < m; ++i) {
        Vector ei = Vector::Zero(m);
        ei[i] = h;
        hess(i, i) = (f(chart(u, basis, ei)) - 2.0 * f0 + f(chart(u, basis, -ei))) / (h * h);
        for (int j = i + 1; j < m; ++j) {
            Vector ej = Vector::Zero(m);
            ej[j] = h;
            const double v = (f(chart(u, basis, ei + ej)) - f(chart(u, basis, ei - ej)) -
                              f(chart(u, basis, -ei + ej)) + f(chart(u, basis, -ei - ej))) /
                             (4.0 * h * h);
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

}  // namespace

double sphere_gradient_norm(const SphereObjective& f, const Vector& u) {
    if (u.size() < 2) return 0.0;
    return chart_gradient(f, u, tangent_basis(u)).norm();
}

SphereSearchResult refine_on_sphere(const SphereObjective& f, const Vector& u0, bool maximize,
                                    double tol, int max_iter) {
    const double sign = maximize ? 1.0 : -1.0;
    auto objective = [&](const Vector& u) { return sign * f(u); };

    SphereSearchResult out;
    out.u = u0 / u0.norm();
    double value = objective(out.u);
    if (out.u.size() < 2) {
        out.value = sign * value;
        return out;
    }

    int iter = 0;
    for (; iter < max_iter; ++iter) {
        const Matrix basis = tangent_basis(out.u);
        const Vector grad = chart_gradient(objective, out.u, basis);
        const double scale = std::max(1.0, std::abs(value));
        if (grad.norm() <= 1e-12 * scale) break;

        const Matrix hess = chart_hessian(objective, out.u, basis, value);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(hess);
        const double floor = 1e-6 * scale;
        Vector step = Vector::Zero(grad.size());
        for (int i = 0; i < grad.size(); ++i) {
            const Vector q = eig.eigenvectors().col(i);
            step += q * (q.dot(grad) / std::max(std::abs(eig.eigenvalues()[i]), floor));
        }
        if (step.norm() > kMaxStep) step *= kMaxStep / step.norm();
        // Close to a nondegenerate maximum the gain is below roundoff in f, so
        // the full Newton step is taken without the descent test.
        const bool local_newton = step.norm() < 1e-4 && eig.eigenvalues().maxCoeff() < -floor;

        double alpha = 1.0;
        bool accepted = false;
        Vector trial_u;
        double trial_value = value;
        for (int k = 0; k < 40; ++k, alpha *= 0.5) {
            trial_u = chart(out.u, basis, alpha * step);
            trial_value = objective(trial_u);
            if (trial_value >= value || (k == 0 && local_newton)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const double moved = (trial_u - out.u).norm();
        out.u = trial_u;
        value = trial_value;
        if (moved < tol) {
            ++iter;
            break;
        }
    }
    out.iterations = iter;
    out.value = sign * value;
    out.grad_norm = sphere_gradient_norm(f, out.u);
    return out;
}

std::vector<int> best_indices(const std::vector<double>& values, int k, bool maximize) {
    std::vector<int> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return maximize ? values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)]
                        : values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
    });
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(k, 0))));
    return idx;
}

SphereOptimum optimize_on_sphere(const SphereObjective& f, const std::vector<Vector>& points,
                                 bool maximize, double tol, int seeds) {
    std::vector<double> values;
    values.reserve(points.size());
    for (const Vector& u : points) values.push_back(f(u));

    SphereOptimum result;
    const std::vector<int> seed_idx = best_indices(values, seeds, maximize);
    for (int i : seed_idx) {
        result.refined.push_back(refine_on_sphere(f, points[static_cast<std::size_t>(i)], maximize, tol));
    }
    // seed_idx is ordered by grid value then grid index, so a strict comparison
    // keeps the earliest seed on ties.
    result.best = result.refined.front();
    for (const auto& r : result.refined) {
        const bool better = maximize ? r.value > result.best.value : r.value < result.best.value;
        if (better) result.best = r;
    }
    return result;
}

}  // namespace geobound
