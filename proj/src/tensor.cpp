#include "geobound/tensor.hpp"
#include "geobound/error.hpp"

#include <cmath>

namespace geobound {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonFiniteMetric: return "NonFiniteMetric";
        case ErrorKind::StepTooSmall: return "StepTooSmall";
        case ErrorKind::SingularMetric: return "SingularMetric";
        case ErrorKind::NonUnitDirection: return "NonUnitDirection";
        case ErrorKind::NegativeTime: return "NegativeTime";
        case ErrorKind::DegenerateFlat: return "DegenerateFlat";
        case ErrorKind::NegativeKappa: return "NegativeKappa";
        case ErrorKind::BadWeights: return "BadWeights";
        case ErrorKind::CausticEncountered: return "CausticEncountered";
        case ErrorKind::SeriesTooShort: return "SeriesTooShort";
        case ErrorKind::WindowTooShort: return "WindowTooShort";
        case ErrorKind::UnknownMetric: return "UnknownMetric";
        case ErrorKind::BadParams: return "BadParams";
        case ErrorKind::UnknownQuantity: return "UnknownQuantity";
    }
    return "Unknown";
}

Vector symmetric_eigenvalues(const Matrix& m) {
    // Eigen's self-adjoint solver reduces to tridiagonal form and runs implicit
    // QL; it converges to machine precision on the small (d <= 10) blocks used here.
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

Matrix inverse_sqrt_spd(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (m + m.transpose()));
    const Vector& ev = solver.eigenvalues();
    if (ev.minCoeff() <= 0.0) {
        throw Error(ErrorKind::SingularMetric, "matrix is not positive definite");
    }
    Vector inv_sqrt = ev.array().rsqrt();
    return solver.eigenvectors() * inv_sqrt.asDiagonal() * solver.eigenvectors().transpose();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace geobound
