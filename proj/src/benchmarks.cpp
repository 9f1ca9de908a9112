// SPDX-License-Identifier: Apache-2.0
#include "bip/benchmarks.hpp"

#include <cmath>
#include <numbers>

#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

namespace {

constexpr double kPi = std::numbers::pi;

void sample_swissroll(std::size_t n, Rng& rng, std::vector<double>& pts) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = rng.uniform(1.5 * kPi, 4.5 * kPi);
    const double x = t * std::cos(t) / 5.0 + 0.2 * rng.normal();
    const double y = t * std::sin(t) / 5.0 + 0.2 * rng.normal();
    pts.push_back(x);
    pts.push_back(y);
  }
}

void sample_checkerboard(std::size_t n, Rng& rng, std::vector<double>& pts) {
  // The 8 "on" squares of the 4x4 board, as (i, j) cell indices with
  // (i + j) even; cell (i, j) covers [-2+i, -1+i) x [-2+j, -1+j).
  for (std::size_t k = 0; k < n; ++k) {
    const int cell = rng.uniform_int(8);
    const int i = cell / 2;
    const int j = 2 * (cell % 2) + (i % 2 == 0 ? 0 : 1);
    pts.push_back(-2.0 + i + rng.uniform());
    pts.push_back(-2.0 + j + rng.uniform());
  }
}

void sample_pinwheel(std::size_t n, Rng& rng, std::vector<double>& pts) {
  constexpr double kRadialStd = 0.3;
  constexpr double kTangentialStd = 0.1;
  constexpr double kRate = 0.25;
  constexpr int kBlades = 5;
  for (std::size_t k = 0; k < n; ++k) {
    const int c = rng.uniform_int(kBlades);
    const double f1 = 1.0 + kRadialStd * rng.normal();
    const double f2 = kTangentialStd * rng.normal();
    const double a = 2.0 * kPi * c / kBlades + kRate * std::exp(f1);
    const double ca = std::cos(a);
    const double sa = std::sin(a);
    pts.push_back(2.0 * (f1 * ca + f2 * sa));
    pts.push_back(2.0 * (-f1 * sa + f2 * ca));
  }
}

void sample_gaussian(std::size_t n, Rng& rng, std::vector<double>& pts) {
  for (std::size_t i = 0; i < 2 * n; ++i) pts.push_back(rng.normal());
}

void sample_two_moons(std::size_t n, Rng& rng, std::vector<double>& pts) {
  for (std::size_t k = 0; k < n; ++k) {
    const double t = rng.uniform(0.0, kPi);
    const bool upper = rng.uniform() < 0.5;
    double x = upper ? std::cos(t) : 1.0 - std::cos(t);
    double y = upper ? std::sin(t) : 0.5 - std::sin(t);
    x += 0.1 * rng.normal();
    y += 0.1 * rng.normal();
    pts.push_back(x);
    pts.push_back(y);
  }
}

}  // namespace

BenchmarkDist parse_dist(std::string_view name) {
  if (name == "swissroll") return BenchmarkDist::swissroll;
  if (name == "checkerboard") return BenchmarkDist::checkerboard;
  if (name == "pinwheel") return BenchmarkDist::pinwheel;
  if (name == "gaussian") return BenchmarkDist::gaussian;
  if (name == "two-moons" || name == "two_moons") {
    return BenchmarkDist::two_moons;
  }
  throw ConfigError("unknown benchmark distribution: " + std::string(name));
}

std::string dist_name(BenchmarkDist dist) {
  switch (dist) {
    case BenchmarkDist::swissroll: return "swissroll";
    case BenchmarkDist::checkerboard: return "checkerboard";
    case BenchmarkDist::pinwheel: return "pinwheel";
    case BenchmarkDist::gaussian: return "gaussian";
    case BenchmarkDist::two_moons: return "two-moons";
  }
  throw ConfigError("unknown benchmark distribution enum value");
}

PointCloud sample_benchmark(BenchmarkDist dist, std::size_t n,
                            std::uint64_t seed) {
  if (n == 0) throw DomainError("sample_benchmark: n must be >= 1");
  Rng rng(seed);
  std::vector<double> pts;
  pts.reserve(2 * n);
  switch (dist) {
    case BenchmarkDist::swissroll: sample_swissroll(n, rng, pts); break;
    case BenchmarkDist::checkerboard: sample_checkerboard(n, rng, pts); break;
    case BenchmarkDist::pinwheel: sample_pinwheel(n, rng, pts); break;
    case BenchmarkDist::gaussian: sample_gaussian(n, rng, pts); break;
    case BenchmarkDist::two_moons: sample_two_moons(n, rng, pts); break;
  }
  return make_uniform_cloud(2, std::move(pts));
}

bool checkerboard_member(double x, double y) {
  // Half-open cells [-2+i, -1+i) x [-2+j, -1+j), matching the sampler, which
  // never produces the right/top edge of a square.
  if (x < -2.0 || x >= 2.0 || y < -2.0 || y >= 2.0) return false;
  const int i = static_cast<int>(std::floor(x + 2.0));
  const int j = static_cast<int>(std::floor(y + 2.0));
  return (i + j) % 2 == 0;
}

}  // namespace bip
