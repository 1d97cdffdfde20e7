#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "rvol/jet.hpp"

namespace rvol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Point = std::vector<double>;

// Square matrix of jets, row-major.
class JetMatrix {
 public:
  JetMatrix(int n, const Jet& fill) : n_(n), data_(static_cast<std::size_t>(n * n), fill) {}

  int dim() const { return n_; }
  Jet& operator()(int i, int j) { return data_[static_cast<std::size_t>(i * n_ + j)]; }
  const Jet& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i * n_ + j)]; }
  Matrix values() const;

 private:
  int n_;
  std::vector<Jet> data_;
};

// Dense 4-index tensor with all indices in 0..n-1.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}

  int dim() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return data_[offset(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[offset(i, j, k, l)]; }
  double max_abs() const;

 private:
  std::size_t offset(int i, int j, int k, int l) const {
    return static_cast<std::size_t>(((i * n_ + j) * n_ + k) * n_ + l);
  }
  int n_ = 0;
  std::vector<double> data_;
};

inline Matrix JetMatrix::values() const {
  Matrix m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j).value();
  return m;
}

inline double Tensor4::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace rvol
