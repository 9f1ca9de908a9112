// SPDX-License-Identifier: Apache-2.0
#include "bip/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bip/csv.hpp"
#include "bip/errors.hpp"

namespace bip {

double PointCloud::norm(std::size_t i) const {
  double s = 0.0;
  const auto p = point(i);
  for (double c : p) s += c * c;
  return std::sqrt(s);
}

PointCloud make_uniform_cloud(int dim, std::vector<double> pts) {
  if (dim < 1) throw DomainError("point cloud: dim must be >= 1");
  if (pts.empty() || pts.size() % static_cast<std::size_t>(dim) != 0) {
    throw DomainError("point cloud: coordinate count not a multiple of dim");
  }
  PointCloud cloud;
  cloud.dim = dim;
  const std::size_t n = pts.size() / static_cast<std::size_t>(dim);
  cloud.pts = std::move(pts);
  cloud.w.assign(n, 1.0 / static_cast<double>(n));
  return cloud;
}

void validate_cloud(const PointCloud& cloud) {
  if (cloud.dim < 1) throw DomainError("point cloud: dim must be >= 1");
  if (cloud.w.empty()) throw DomainError("point cloud: empty");
  if (cloud.pts.size() !=
      cloud.w.size() * static_cast<std::size_t>(cloud.dim)) {
    throw DomainError("point cloud: coordinate/weight size mismatch");
  }
  double sum = 0.0;
  for (double wi : cloud.w) {
    if (!(wi >= 0.0)) throw DomainError("point cloud: negative weight");
    sum += wi;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw DomainError("point cloud: weights sum to " + format_double(sum));
  }
  for (double c : cloud.pts) {
    if (!std::isfinite(c)) throw DomainError("point cloud: non-finite value");
  }
}

double norm_moment(const PointCloud& cloud, double q) {
  if (!(q > 0.0)) throw DomainError("moment: q must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    s += cloud.w[i] * std::pow(cloud.norm(i), q);
  }
  return s;
}

double moment(const PointCloud& cloud, double q) {
  return std::pow(norm_moment(cloud, q), 1.0 / q);
}

PointCloud trim_cloud(const PointCloud& cloud, double r) {
  if (!(r > 0.0)) throw DomainError("trim: radius must be positive");
  std::vector<std::size_t> keep;
  keep.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.norm(i) <= r) keep.push_back(i);
  }
  if (keep.empty()) {
    throw DomainError("trim: no point inside radius " + format_double(r));
  }
  if (keep.size() == cloud.size()) return cloud;

  PointCloud out;
  out.dim = cloud.dim;
  out.pts.reserve(keep.size() * static_cast<std::size_t>(cloud.dim));
  out.w.reserve(keep.size());
  double mass = 0.0;
  for (std::size_t i : keep) mass += cloud.w[i];
  if (!(mass > 0.0)) {
    throw DomainError("trim: retained mass is zero");
  }
  for (std::size_t i : keep) {
    const auto p = cloud.point(i);
    out.pts.insert(out.pts.end(), p.begin(), p.end());
    out.w.push_back(cloud.w[i] / mass);
  }
  return out;
}

PointCloud subsample_cloud(const PointCloud& cloud, std::size_t m, Rng& rng) {
  if (m == 0) throw DomainError("subsample: m must be >= 1");
  std::vector<double> cum(cloud.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    acc += cloud.w[i];
    cum[i] = acc;
  }
  PointCloud out;
  out.dim = cloud.dim;
  out.pts.reserve(m * static_cast<std::size_t>(cloud.dim));
  for (std::size_t j = 0; j < m; ++j) {
    const double u = rng.uniform() * acc;
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const std::size_t i =
        std::min(static_cast<std::size_t>(it - cum.begin()), cloud.size() - 1);
    const auto p = cloud.point(i);
    out.pts.insert(out.pts.end(), p.begin(), p.end());
  }
  out.w.assign(m, 1.0 / static_cast<double>(m));
  return out;
}

void write_cloud_csv(const std::filesystem::path& path,
                     const PointCloud& cloud) {
  validate_cloud(cloud);
  std::ostringstream out;
  for (int d = 0; d < cloud.dim; ++d) out << "x_" << (d + 1) << ',';
  out << "weight\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    for (double c : p) out << format_double(c) << ',';
    out << format_double(cloud.w[i]) << '\n';
  }
  write_text_file(path, out.str());
}

PointCloud read_cloud_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw DomainError("cloud csv: no data rows");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header.back() != "weight") {
    throw DomainError("cloud csv: bad header");
  }
  const int dim = static_cast<int>(header.size()) - 1;
  PointCloud cloud;
  cloud.dim = dim;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_csv_line(lines[r]);
    if (fields.size() != header.size()) {
      throw DomainError("cloud csv: ragged row");
    }
    for (int d = 0; d < dim; ++d) {
      cloud.pts.push_back(parse_double(fields[static_cast<std::size_t>(d)]));
    }
    cloud.w.push_back(parse_double(fields.back()));
  }
  validate_cloud(cloud);
  return cloud;
}

}  // namespace bip
