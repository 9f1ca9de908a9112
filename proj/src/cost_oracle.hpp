// SPDX-License-Identifier: Apache-2.0
#pragma once

// Internal helpers shared by the transport solvers (not installed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "bip/point_cloud.hpp"

namespace bip::detail {

// Ground cost |x - y|^p between cloud points, materialized as a dense matrix
// when small enough and computed on demand otherwise (large instances would
// not fit in memory, and for low-dimensional points recomputation is cheap).
class CostOracle {
 public:
  CostOracle(const PointCloud& a, const PointCloud& b, int p)
      : a_(a), b_(b), dim_(a.dim), p_(p), n_(a.size()), m_(b.size()) {
    constexpr std::size_t kDenseLimit = 8u << 20;  // 64 MB of doubles
    if (n_ * m_ <= kDenseLimit) {
      dense_.resize(n_ * m_);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < m_; ++j) {
          dense_[i * m_ + j] = compute(i, j);
        }
      }
    }
  }

  double operator()(std::size_t i, std::size_t j) const {
    return dense_.empty() ? compute(i, j) : dense_[i * m_ + j];
  }

  // Pointer to row i when the matrix is materialized, nullptr otherwise.
  const double* row(std::size_t i) const {
    return dense_.empty() ? nullptr : dense_.data() + i * m_;
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return m_; }

 private:
  double compute(std::size_t i, std::size_t j) const {
    const double* x = a_.pts.data() + i * static_cast<std::size_t>(dim_);
    const double* y = b_.pts.data() + j * static_cast<std::size_t>(dim_);
    double s = 0.0;
    for (int d = 0; d < dim_; ++d) {
      const double diff = x[d] - y[d];
      s += diff * diff;
    }
    return p_ == 2 ? s : std::sqrt(s);
  }

  const PointCloud& a_;
  const PointCloud& b_;
  int dim_;
  int p_;
  std::size_t n_, m_;
  std::vector<double> dense_;
};

// Indices of the cloud sorted along a Morton (Z-order) curve of the first
// two coordinates.  Used to seed transport solvers with spatially coherent
// orderings; any permutation is valid, this one merely reduces work.
std::vector<std::size_t> morton_order(const PointCloud& c);

}  // namespace bip::detail
