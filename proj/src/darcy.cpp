// SPDX-License-Identifier: Apache-2.0
#include "bip/darcy.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "bip/csv.hpp"
#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

namespace {

// Grids up to this size factor exactly once with sparse Cholesky; larger
// systems switch to CG, whose memory stays linear in the unknown count.
constexpr int kDirectSolveLimit = 64;

constexpr double kResidualTolerance = 1e-10;

// Harmonic mean of two cell permeabilities, the finite-volume face
// coefficient that keeps the flux continuous across the face.
double face_coeff(double k1, double k2) { return 2.0 * k1 * k2 / (k1 + k2); }

}  // namespace

GridField make_grid(int m, double fill) {
  if (m < 3) throw DomainError("grid size must be at least 3");
  GridField field;
  field.m = m;
  field.values.assign(static_cast<std::size_t>(m) * m, fill);
  return field;
}

void validate_grid(const GridField& field) {
  if (field.m < 3) throw DomainError("grid size must be at least 3");
  const auto expected = static_cast<std::size_t>(field.m) * field.m;
  if (field.values.size() != expected) {
    throw DomainError("grid value count does not match its size");
  }
}

GridField solve_darcy(const GridField& u, const GridField& source) {
  validate_grid(u);
  validate_grid(source);
  if (u.m != source.m) {
    throw DomainError("log-permeability and source grids differ in size");
  }
  const int m = u.m;
  const int n = m * m;
  const double h = 1.0 / m;

  // Permeability per cell; a non-finite coefficient would silently poison
  // the factorization, so reject it up front.
  std::vector<double> kappa(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double v = u.values[static_cast<std::size_t>(i)];
    if (!std::isfinite(v)) {
      throw NumericError("darcy solve failure: non-finite log-permeability");
    }
    kappa[static_cast<std::size_t>(i)] = std::exp(v);
    if (!std::isfinite(kappa[static_cast<std::size_t>(i)]) ||
        kappa[static_cast<std::size_t>(i)] <= 0.0) {
      throw NumericError("darcy solve failure: permeability overflow");
    }
  }

  // Five-point scheme: flux balance over each cell, divided faces carrying
  // the harmonic-mean coefficient, boundary faces carrying 2*kappa (the cell
  // center sits half a cell away from the p = 0 wall).  The system is
  // symmetric positive definite with row sums equal to the boundary leakage.
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(5) * n);
  Eigen::VectorXd rhs(n);
  const auto idx = [m](int ix, int iy) { return iy * m + ix; };
  for (int iy = 0; iy < m; ++iy) {
    for (int ix = 0; ix < m; ++ix) {
      const int row = idx(ix, iy);
      const double kc = kappa[static_cast<std::size_t>(row)];
      double diag = 0.0;
      const auto couple = [&](int jx, int jy) {
        const int col = idx(jx, jy);
        const double t = face_coeff(kc, kappa[static_cast<std::size_t>(col)]);
        diag += t;
        triplets.emplace_back(row, col, -t);
      };
      if (ix > 0) couple(ix - 1, iy); else diag += 2.0 * kc;
      if (ix < m - 1) couple(ix + 1, iy); else diag += 2.0 * kc;
      if (iy > 0) couple(ix, iy - 1); else diag += 2.0 * kc;
      if (iy < m - 1) couple(ix, iy + 1); else diag += 2.0 * kc;
      triplets.emplace_back(row, row, diag);
      rhs[row] = h * h * source.values[static_cast<std::size_t>(row)];
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd p(n);
  if (m <= kDirectSolveLimit) {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(a);
    if (solver.info() != Eigen::Success) {
      throw NumericError("darcy solve failure: Cholesky factorization broke down");
    }
    p = solver.solve(rhs);
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                             Eigen::Lower | Eigen::Upper>
        solver;
    solver.setTolerance(1e-12);
    solver.setMaxIterations(static_cast<Eigen::Index>(20) * n);
    solver.compute(a);
    p = solver.solve(rhs);
    if (solver.info() != Eigen::Success) {
      throw NumericError("darcy solve failure: CG did not converge");
    }
  }

  const double rhs_norm = rhs.norm();
  const double residual = (a * p - rhs).norm();
  const double relative = rhs_norm > 0.0 ? residual / rhs_norm : residual;
  if (!std::isfinite(relative) || relative > kResidualTolerance) {
    throw NumericError("darcy solve failure: residual " +
                       format_double(relative) + " exceeds tolerance");
  }

  GridField pressure = make_grid(m);
  for (int i = 0; i < n; ++i) pressure.values[static_cast<std::size_t>(i)] = p[i];
  return pressure;
}

namespace {

// One axis of the bilinear stencil on the cell-centered grid extended by its
// zero boundary: returns the lower cell index (-1 for the boundary ring) and
// the interpolation weight toward the upper neighbor.  Coordinates of the
// extended nodes are 0, (k+0.5)h for k = 0..m-1, and 1.
struct AxisStencil {
  int lower;      // cell index of the left/lower node, -1 if it is the wall
  double weight;  // fraction of the way toward the upper node
};

AxisStencil axis_stencil(double x, int m) {
  const double h = 1.0 / m;
  const double t = x / h - 0.5;  // cell-center coordinate: cell k sits at t = k
  if (t <= 0.0) {
    // Between the wall at 0 and the first cell center.
    return {-1, x / (0.5 * h)};
  }
  if (t >= m - 1) {
    // Between the last cell center and the wall at 1.
    return {m - 1, (x - (m - 0.5) * h) / (0.5 * h)};
  }
  const int k = static_cast<int>(t);
  return {k, t - k};
}

}  // namespace

ObservationSet observe_pressure(const GridField& p,
                                const std::vector<std::array<double, 2>>& points,
                                double sigma, std::uint64_t seed) {
  validate_grid(p);
  if (sigma < 0.0) throw DomainError("observation noise level must be >= 0");
  const int m = p.m;
  // Node lookup on the extended grid: index -1 and m are the p = 0 walls.
  const auto node = [&](int kx, int ky) {
    if (kx < 0 || kx >= m || ky < 0 || ky >= m) return 0.0;
    return p.at(kx, ky);
  };
  ObservationSet obs;
  obs.points = points;
  obs.sigma = sigma;
  obs.values.reserve(points.size());
  Rng rng = Rng::derived(seed, 0x6f62736e6f697365ULL);  // observation noise
  for (const auto& pt : points) {
    if (!(pt[0] > 0.0 && pt[0] < 1.0 && pt[1] > 0.0 && pt[1] < 1.0)) {
      throw DomainError("observation point must lie strictly inside the unit square");
    }
    const AxisStencil sx = axis_stencil(pt[0], m);
    const AxisStencil sy = axis_stencil(pt[1], m);
    const double v00 = node(sx.lower, sy.lower);
    const double v10 = node(sx.lower + 1, sy.lower);
    const double v01 = node(sx.lower, sy.lower + 1);
    const double v11 = node(sx.lower + 1, sy.lower + 1);
    const double vx0 = v00 + sx.weight * (v10 - v00);
    const double vx1 = v01 + sx.weight * (v11 - v01);
    double value = vx0 + sy.weight * (vx1 - vx0);
    if (sigma > 0.0) value += sigma * rng.normal();
    obs.values.push_back(value);
  }
  return obs;
}

std::vector<std::array<double, 2>> observation_points(std::size_t count,
                                                      std::uint64_t seed) {
  Rng rng = Rng::derived(seed, 0x6f62732d706f696eULL);  // observation points
  std::vector<std::array<double, 2>> points;
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = rng.uniform(0.05, 0.95);
    const double y = rng.uniform(0.05, 0.95);
    points.push_back({x, y});
  }
  return points;
}

std::vector<double> darcy_forward(const std::vector<double>& u_flat, int m,
                                  const GridField& source,
                                  const std::vector<std::array<double, 2>>& points) {
  if (u_flat.size() != static_cast<std::size_t>(m) * m) {
    throw DomainError("flat log-permeability length does not match the grid");
  }
  GridField u = make_grid(m);
  u.values = u_flat;
  const GridField p = solve_darcy(u, source);
  return observe_pressure(p, points, 0.0, 0).values;
}

void write_grid_csv(const std::filesystem::path& path, const GridField& field) {
  validate_grid(field);
  std::string text;
  for (int iy = 0; iy < field.m; ++iy) {
    for (int ix = 0; ix < field.m; ++ix) {
      if (ix > 0) text += ',';
      text += format_double(field.at(ix, iy));
    }
    text += '\n';
  }
  write_text_file(path, text);
}

GridField read_grid_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  const int m = static_cast<int>(lines.size());
  GridField field = make_grid(m);
  for (int iy = 0; iy < m; ++iy) {
    const auto cells = split_csv_line(lines[static_cast<std::size_t>(iy)]);
    if (static_cast<int>(cells.size()) != m) {
      throw DomainError("grid csv is not square: " + path.string());
    }
    for (int ix = 0; ix < m; ++ix) {
      field.at(ix, iy) = parse_double(cells[static_cast<std::size_t>(ix)]);
    }
  }
  return field;
}

void write_grid_pgm(const std::filesystem::path& path, const GridField& field) {
  validate_grid(field);
  const auto [lo_it, hi_it] =
      std::minmax_element(field.values.begin(), field.values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  std::string body;
  body += "P5\n" + std::to_string(field.m) + " " + std::to_string(field.m) +
          "\n255\n";
  // Image rows run top to bottom, grid rows bottom to top; flip so that the
  // picture matches the usual orientation of the unit square.
  for (int iy = field.m - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < field.m; ++ix) {
      const double t = span > 0.0 ? (field.at(ix, iy) - lo) / span : 0.0;
      body += static_cast<char>(
          static_cast<unsigned char>(std::lround(255.0 * t)));
    }
  }
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write file: " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw DomainError("short write: " + path.string());
}

void write_observations_csv(const std::filesystem::path& path,
                            const ObservationSet& obs) {
  std::string text = "x,y,value\n";
  for (std::size_t i = 0; i < obs.points.size(); ++i) {
    text += format_double(obs.points[i][0]) + "," +
            format_double(obs.points[i][1]) + "," +
            format_double(obs.values[i]) + "\n";
  }
  write_text_file(path, text);
}

}  // namespace bip
