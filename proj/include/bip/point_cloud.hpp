// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "bip/rng.hpp"

namespace bip {

// Weighted point cloud: n points in R^dim with nonnegative weights that sum
// to one.  Points are stored row-major (point i occupies
// pts[i*dim .. i*dim+dim)).  Weight sums are kept within 1e-12 of one.
struct PointCloud {
  int dim = 0;
  std::vector<double> pts;
  std::vector<double> w;

  std::size_t size() const { return w.size(); }

  std::span<const double> point(std::size_t i) const {
    return {pts.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  std::span<double> point(std::size_t i) {
    return {pts.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }

  // Euclidean norm of point i.
  double norm(std::size_t i) const;
};

// Builds a uniformly weighted cloud from row-major coordinates.
PointCloud make_uniform_cloud(int dim, std::vector<double> pts);

// Throws DomainError unless the cloud satisfies its invariants (dim >= 1,
// coordinates finite, weights nonnegative and summing to one within 1e-12).
void validate_cloud(const PointCloud& cloud);

// Weighted norm moment sum_i w_i * |u_i|^q for q > 0.
double norm_moment(const PointCloud& cloud, double q);

// Moment root chi_q = (sum_i w_i * |u_i|^q)^(1/q) for q > 0.
double moment(const PointCloud& cloud, double q);

// Restriction of the cloud to the centered ball of radius r (|u| <= r),
// with weights renormalized to the retained mass.  r = +infinity returns the
// input unchanged.  Throws DomainError when no point survives or r <= 0.
PointCloud trim_cloud(const PointCloud& cloud, double r);

// Draws m points from `cloud` with replacement according to its weights
// (used for subsampling reference clouds); the result is uniformly weighted.
PointCloud subsample_cloud(const PointCloud& cloud, std::size_t m, Rng& rng);

// CSV round trip.  Columns: x_1, ..., x_d, weight; one header line.
void write_cloud_csv(const std::filesystem::path& path,
                     const PointCloud& cloud);
PointCloud read_cloud_csv(const std::filesystem::path& path);

}  // namespace bip
