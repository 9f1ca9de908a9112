// SPDX-License-Identifier: Apache-2.0
//
// Darcy-flow forward problem on the unit square: cell-centered grid fields,
// the elliptic pressure solve, and pointwise pressure observations.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace bip {

// Scalar field on an m-by-m cell-centered grid over (0,1)^2, stored row-major
// (index iy * m + ix); cell (ix, iy) is centered at ((ix+0.5)/m, (iy+0.5)/m).
// Holds either log-permeability u or pressure p; pressure fields extend by
// p = 0 on the domain boundary.
struct GridField {
  int m = 0;
  std::vector<double> values;

  double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * m + ix]; }
  double at(int ix, int iy) const {
    return values[static_cast<std::size_t>(iy) * m + ix];
  }
};

GridField make_grid(int m, double fill = 0.0);
void validate_grid(const GridField& field);

// Pointwise pressure measurements with their noise level.
struct ObservationSet {
  std::vector<std::array<double, 2>> points;  // strictly inside (0,1)^2
  std::vector<double> values;
  double sigma = 0.0;
};

// Pressure p solving -div(exp(u) grad p) = f with p = 0 on the boundary,
// using the 5-point finite-volume scheme with harmonic-mean face
// coefficients.  The linear solve is direct (sparse Cholesky) on small
// grids and preconditioned CG above; the relative residual is verified
// to 1e-10.
GridField solve_darcy(const GridField& u, const GridField& source);

// Bilinear interpolation of the pressure at interior points, plus
// i.i.d. N(0, sigma^2) noise (sigma = 0 gives noiseless values).
ObservationSet observe_pressure(const GridField& p,
                                const std::vector<std::array<double, 2>>& points,
                                double sigma, std::uint64_t seed);

// The fixed observation locations of the inference experiments: `count`
// points uniform in (0.05, 0.95)^2 from the given seed.
std::vector<std::array<double, 2>> observation_points(std::size_t count,
                                                      std::uint64_t seed);

// Parameter-to-observation forward map: reshape the flat log-permeability
// to a grid, solve for pressure, read it at the fixed points (noiseless,
// deterministic).
std::vector<double> darcy_forward(const std::vector<double>& u_flat, int m,
                                  const GridField& source,
                                  const std::vector<std::array<double, 2>>& points);

// Serialization: CSV (row-major values) and binary 8-bit PGM (min/max
// normalized) for quick viewing.
void write_grid_csv(const std::filesystem::path& path, const GridField& field);
GridField read_grid_csv(const std::filesystem::path& path);
void write_grid_pgm(const std::filesystem::path& path, const GridField& field);
void write_observations_csv(const std::filesystem::path& path,
                            const ObservationSet& obs);

}  // namespace bip
