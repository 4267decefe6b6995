#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace geobound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense rank-3 array over a d-dimensional index range, row-major.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}

    int dim() const noexcept { return dim_; }

    double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
    double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

private:
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dim_ + j) * dim_ + k;
    }

    int dim_ = 0;
    std::vector<double> data_;
};

/// Dense rank-4 array over a d-dimensional index range, row-major.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(int dim)
        : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0) {}

    int dim() const noexcept { return dim_; }

    double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
    double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

private:
    std::size_t index(int i, int j, int k, int l) const {
        return ((static_cast<std::size_t>(i) * dim_ + j) * dim_ + k) * dim_ + l;
    }

    int dim_ = 0;
    std::vector<double> data_;
};

/// Eigenvalues of a symmetric matrix, ascending.
Vector symmetric_eigenvalues(const Matrix& m);

/// Symmetric inverse square root of a positive-definite matrix.
Matrix inverse_sqrt_spd(const Matrix& m);

/// Largest absolute entry of a matrix.
double max_abs(const Matrix& m);

/// g-inner product of two coordinate vectors.
inline double inner(const Matrix& g, const Vector& a, const Vector& b) { return a.dot(g * b); }

}  // namespace geobound
