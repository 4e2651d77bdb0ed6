#pragma once

#include <Eigen/Dense>

namespace widthlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

} // namespace widthlab

#include <vector>

namespace widthlab {

// Dense m x m x m tensor, index (i, j, k) -> (i*m + j)*m + k.
struct Tensor3 {
    int m = 0;
    std::vector<double> data;
    Tensor3() = default;
    explicit Tensor3(int m_) : m(m_), data(std::size_t(m_) * m_ * m_, 0.0) {}
    double& operator()(int i, int j, int k) { return data[(std::size_t(i) * m + j) * m + k]; }
    double operator()(int i, int j, int k) const { return data[(std::size_t(i) * m + j) * m + k]; }
};

struct Tensor4 {
    int m = 0;
    std::vector<double> data;
    Tensor4() = default;
    explicit Tensor4(int m_) : m(m_), data(std::size_t(m_) * m_ * m_ * m_, 0.0) {}
    double& operator()(int i, int j, int k, int l) { return data[((std::size_t(i) * m + j) * m + k) * m + l]; }
    double operator()(int i, int j, int k, int l) const { return data[((std::size_t(i) * m + j) * m + k) * m + l]; }
};

} // namespace widthlab
