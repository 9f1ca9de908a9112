// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "bip/point_cloud.hpp"

namespace bip {

// Planar toy distributions used as priors throughout the experiments.
enum class BenchmarkDist {
  swissroll,
  checkerboard,
  pinwheel,
  gaussian,
  two_moons,
};

BenchmarkDist parse_dist(std::string_view name);
std::string dist_name(BenchmarkDist dist);

// Draws n i.i.d. points (uniform weights) from the named distribution.
//
// Sampler definitions (all planar):
//  - swissroll:    t ~ U(1.5*pi, 4.5*pi), point = (t cos t, t sin t)/5
//                  plus N(0, 0.2^2 I) jitter.
//  - checkerboard: uniform over the 8 "on" unit squares of the 4x4 board on
//                  [-2,2]^2; square (i,j) is "on" iff (i+j) is even.
//  - pinwheel:     5 blades; f = (1 + 0.3 Z1, 0.1 Z2), blade c uniform in
//                  {0..4}, angle = 2*pi*c/5 + 0.25*exp(f1); the point is
//                  2 * (f1 cos a + f2 sin a, -f1 sin a + f2 cos a).
//  - gaussian:     standard normal N(0, I2).
//  - two_moons:    t ~ U(0, pi); upper arc (cos t, sin t) or lower arc
//                  (1 - cos t, 0.5 - sin t), each with probability 1/2, plus
//                  N(0, 0.1^2 I) jitter.
PointCloud sample_benchmark(BenchmarkDist dist, std::size_t n,
                            std::uint64_t seed);

// Membership oracle for the checkerboard support (closed squares).
bool checkerboard_member(double x, double y);

// Every point the swissroll sampler can produce in practice lies inside this
// radius: the noiseless spiral reaches 4.5*pi/5 ~ 2.83 and the jitter tail
// beyond ~1.2 is negligible at any sample size used here (frozen after
// sweeping the empirical maximum over 10^7 draws, observed 3.7701).
inline constexpr double kSwissrollRadiusBound = 4.1;

}  // namespace bip
