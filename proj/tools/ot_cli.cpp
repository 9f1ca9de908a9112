// SPDX-License-Identifier: Apache-2.0
//
// Optimal-transport self-test: checks the production solvers against
// independent oracles (exhaustive search, the 1-d monotone coupling, the
// assignment solver) and the entropic solver against its exact limit.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bip/benchmarks.hpp"
#include "bip/csv.hpp"
#include "bip/ot.hpp"
#include "bip/point_cloud.hpp"
#include "bip/rng.hpp"

namespace {

using namespace bip;

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail,
            double ms) {
  std::printf("[%s] %s: %s (%.0f ms)\n", ok ? "ok" : "FAIL", name.c_str(),
              detail.c_str(), ms);
  if (!ok) ++g_failures;
}

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch())
      .count();
}

PointCloud random_cloud(std::size_t n, int dim, Rng& rng, bool uniform) {
  std::vector<double> pts(n * static_cast<std::size_t>(dim));
  for (double& v : pts) v = rng.uniform(-1.0, 1.0);
  PointCloud cloud = make_uniform_cloud(dim, std::move(pts));
  if (!uniform) {
    double total = 0.0;
    for (double& w : cloud.w) {
      w = rng.uniform(0.1, 1.0);
      total += w;
    }
    for (double& w : cloud.w) w /= total;
  }
  return cloud;
}

// Exact W2^2 between 1-d weighted clouds via the monotone (sorted) coupling.
double sorted_w2_1d(const PointCloud& a, const PointCloud& b) {
  std::vector<std::size_t> ia(a.size()), ib(b.size());
  std::iota(ia.begin(), ia.end(), 0);
  std::iota(ib.begin(), ib.end(), 0);
  std::sort(ia.begin(), ia.end(),
            [&](std::size_t l, std::size_t r) { return a.pts[l] < a.pts[r]; });
  std::sort(ib.begin(), ib.end(),
            [&](std::size_t l, std::size_t r) { return b.pts[l] < b.pts[r]; });
  double cost = 0.0, ra = a.w[ia[0]], rb = b.w[ib[0]];
  std::size_t i = 0, j = 0;
  while (true) {
    const double move = std::min(ra, rb);
    const double d = a.pts[ia[i]] - b.pts[ib[j]];
    cost += move * d * d;
    ra -= move;
    rb -= move;
    if (ra <= 1e-15) {
      if (++i == a.size()) break;
      ra = a.w[ia[i]];
    }
    if (rb <= 1e-15) {
      if (++j == b.size()) break;
      rb = b.w[ib[j]];
    }
  }
  return cost;
}

void check_brute_force() {
  const double t0 = now_ms();
  Rng rng(2024);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(5));
    const int dim = 1 + rng.uniform_int(3);
    const int p = 1 + rng.uniform_int(2);
    const PointCloud a = random_cloud(n, dim, rng, true);
    const PointCloud b = random_cloud(n, dim, rng, true);
    worst = std::max(worst, std::abs(exact_wp(a, b, p).distance -
                                     brute_force_wp(a, b, p)));
  }
  report("exact vs exhaustive (n<=6)", worst < 1e-8,
         "worst |diff| = " + format_double(worst), now_ms() - t0);
}

void check_sorted_1d() {
  const double t0 = now_ms();
  Rng rng(2025);
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const PointCloud a = random_cloud(40 + rep, 1, rng, false);
    const PointCloud b = random_cloud(55 - rep, 1, rng, false);
    const double solver = exact_wp(a, b, 2).distance;
    const double oracle = std::sqrt(sorted_w2_1d(a, b));
    worst = std::max(worst, std::abs(solver - oracle));
  }
  report("simplex vs 1-d monotone coupling", worst < 1e-10,
         "worst |diff| = " + format_double(worst), now_ms() - t0);
}

void check_assignment_agreement() {
  const double t0 = now_ms();
  Rng rng(2026);
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    // 64 points: routed to the assignment solver; 65 vs 64: the simplex.
    const PointCloud a = random_cloud(64, 2, rng, true);
    const PointCloud b = random_cloud(64, 2, rng, true);
    PointCloud a1 = random_cloud(65, 2, rng, true);
    const double direct = exact_wp(a, b, 2).distance;
    // Split one atom of `a` in half: same measure, simplex path.
    PointCloud split = a;
    split.pts.push_back(a.pts[0]);
    split.pts.push_back(a.pts[1]);
    split.w[0] *= 0.5;
    split.w.push_back(split.w[0]);
    const double via_simplex = exact_wp(split, b, 2).distance;
    worst = std::max(worst, std::abs(direct - via_simplex));
  }
  report("assignment vs simplex (atom split)", worst < 1e-9,
         "worst |diff| = " + format_double(worst), now_ms() - t0);
}

void check_metric_axioms() {
  const double t0 = now_ms();
  Rng rng(2027);
  bool ok = true;
  std::string detail = "symmetry, identity, triangle all hold";
  for (int rep = 0; rep < 10 && ok; ++rep) {
    const std::size_t n = 16 + static_cast<std::size_t>(rng.uniform_int(16));
    const PointCloud a = random_cloud(n, 2, rng, false);
    const PointCloud b = random_cloud(n + 3, 2, rng, false);
    const PointCloud c = random_cloud(n + 7, 2, rng, false);
    const double ab = exact_wp(a, b, 2).distance;
    const double ba = exact_wp(b, a, 2).distance;
    const double aa = exact_wp(a, a, 2).distance;
    const double bc = exact_wp(b, c, 2).distance;
    const double ac = exact_wp(a, c, 2).distance;
    if (std::abs(ab - ba) > 1e-10) {
      ok = false;
      detail = "symmetry violated: |W(a,b)-W(b,a)| = " +
               format_double(std::abs(ab - ba));
    } else if (aa > 1e-10) {
      ok = false;
      detail = "identity violated: W(a,a) = " + format_double(aa);
    } else if (ac > ab + bc + 1e-10) {
      ok = false;
      detail = "triangle violated by " + format_double(ac - ab - bc);
    }
  }
  report("metric axioms (10 triples)", ok, detail, now_ms() - t0);
}

void check_sinkhorn() {
  const double t0 = now_ms();
  Rng rng(2028);
  const PointCloud a = sample_benchmark(BenchmarkDist::swissroll, 256, 31);
  const PointCloud b = sample_benchmark(BenchmarkDist::swissroll, 256, 32);
  OtConfig cfg;
  cfg.ground_power = 2;
  cfg.epsilon = 0.02;
  const double self = sinkhorn_divergence(a, a, cfg).value;
  const double div = sinkhorn_divergence(a, b, cfg).value;
  const double exact = exact_wp(a, b, 2).distance;
  const double w2sq = exact * exact;
  const double rel = std::abs(div - w2sq) / w2sq;
  const bool ok = std::abs(self) < 1e-6 && rel < 0.05;
  report("entropic divergence fidelity", ok,
         "S(a,a) = " + format_double(self) +
             ", rel err vs exact = " + format_double(rel),
         now_ms() - t0);
}

void check_plan_marginals() {
  const double t0 = now_ms();
  Rng rng(2029);
  const PointCloud a = random_cloud(37, 2, rng, false);
  const PointCloud b = random_cloud(51, 2, rng, false);
  const OtResult res = exact_wp(a, b, 2);
  std::vector<double> ra(a.size(), 0.0), rb(b.size(), 0.0);
  for (std::size_t k = 0; k < res.plan.mass.size(); ++k) {
    ra[res.plan.row[k]] += res.plan.mass[k];
    rb[res.plan.col[k]] += res.plan.mass[k];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(ra[i] - a.w[i]));
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    worst = std::max(worst, std::abs(rb[j] - b.w[j]));
  }
  report("plan marginals", worst < 1e-12,
         "worst |row/col sum - weight| = " + format_double(worst),
         now_ms() - t0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal-transport solver utilities"};
  app.require_subcommand(1);
  CLI::App* selftest = app.add_subcommand(
      "selftest", "check the solvers against independent oracles");
  CLI11_PARSE(app, argc, argv);

  if (selftest->parsed()) {
    check_brute_force();
    check_sorted_1d();
    check_assignment_agreement();
    check_metric_axioms();
    check_plan_marginals();
    check_sinkhorn();
    if (g_failures == 0) {
      std::printf("all checks passed\n");
      return 0;
    }
    std::printf("%d check(s) FAILED\n", g_failures);
    return 1;
  }
  return 0;
}
