// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <vector>

#include "bip/csv.hpp"
#include "bip/errors.hpp"
#include "bip/ot.hpp"
#include "cost_oracle.hpp"

namespace bip {

namespace detail {

namespace {

std::uint64_t interleave_bits(std::uint32_t x, std::uint32_t y) {
  auto spread = [](std::uint64_t v) {
    v &= 0xffffffffULL;
    v = (v | (v << 16)) & 0x0000ffff0000ffffULL;
    v = (v | (v << 8)) & 0x00ff00ff00ff00ffULL;
    v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0fULL;
    v = (v | (v << 2)) & 0x3333333333333333ULL;
    v = (v | (v << 1)) & 0x5555555555555555ULL;
    return v;
  };
  return spread(x) | (spread(y) << 1);
}

}  // namespace

std::vector<std::size_t> morton_order(const PointCloud& c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = c.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (c.dim < 2 || n < 2) return order;

  double lo[2] = {inf, inf};
  double hi[2] = {-inf, -inf};
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = c.point(i);
    for (int d = 0; d < 2; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  std::vector<std::uint64_t> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = c.point(i);
    std::uint32_t q[2];
    for (int d = 0; d < 2; ++d) {
      const double span = hi[d] - lo[d];
      const double t = span > 0.0 ? (p[d] - lo[d]) / span : 0.0;
      q[d] = static_cast<std::uint32_t>(t * 65535.0);
    }
    key[i] = interleave_bits(q[0], q[1]);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return key[x] != key[y] ? key[x] < key[y] : x < y;
  });
  return order;
}

}  // namespace detail

namespace {

using detail::CostOracle;
using detail::morton_order;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Jonker-Volgenant shortest augmenting path solver for the square assignment
// problem (used as the fast path for uniform equal-size clouds).

void solve_assignment(const CostOracle& cost, std::vector<int>& rowsol) {
  const int n = static_cast<int>(cost.rows());
  rowsol.assign(n, -1);
  std::vector<int> colsol(n, -1);
  std::vector<double> v(n, 0.0);
  std::vector<int> matches(n, 0);

  // Column reduction, processed in reverse column order.
  for (int j = n - 1; j >= 0; --j) {
    double minc = cost(0, j);
    int imin = 0;
    for (int i = 1; i < n; ++i) {
      const double c = cost(i, j);
      if (c < minc) {
        minc = c;
        imin = i;
      }
    }
    v[j] = minc;
    if (++matches[imin] == 1) {
      rowsol[imin] = j;
      colsol[j] = imin;
    }
  }

  // Reduction transfer from single-assigned rows.
  std::vector<int> free_rows;
  for (int i = 0; i < n; ++i) {
    if (matches[i] == 0) {
      free_rows.push_back(i);
    } else if (matches[i] == 1 && n > 1) {
      const int j1 = rowsol[i];
      double mn = kInf;
      for (int j = 0; j < n; ++j) {
        if (j != j1) mn = std::min(mn, cost(i, j) - v[j]);
      }
      v[j1] -= mn;
    }
  }

  // Augmenting row reduction, two sweeps.
  for (int sweep = 0; sweep < 2 && !free_rows.empty(); ++sweep) {
    std::vector<int> next_free;
    std::size_t k = 0;
    while (k < free_rows.size()) {
      const int i = free_rows[k++];
      double u1 = cost(i, 0) - v[0];
      int j1 = 0;
      double u2 = kInf;
      int j2 = -1;
      for (int j = 1; j < n; ++j) {
        const double h = cost(i, j) - v[j];
        if (h < u2) {
          if (h >= u1) {
            u2 = h;
            j2 = j;
          } else {
            u2 = u1;
            j2 = j1;
            u1 = h;
            j1 = j;
          }
        }
      }
      int i0 = colsol[j1];
      if (u1 < u2) {
        v[j1] -= u2 - u1;
      } else if (i0 >= 0 && j2 >= 0) {
        j1 = j2;
        i0 = colsol[j1];
      }
      rowsol[i] = j1;
      colsol[j1] = i;
      if (i0 >= 0) {
        if (u1 < u2) {
          free_rows[--k] = i0;  // reconsider the displaced row immediately
        } else {
          next_free.push_back(i0);
        }
      }
    }
    free_rows = std::move(next_free);
  }

  // Shortest augmenting paths for the remaining free rows.
  std::vector<double> d(n);
  std::vector<int> pred(n), collist(n);
  for (const int f : free_rows) {
    for (int j = 0; j < n; ++j) {
      collist[j] = j;
      d[j] = cost(f, j) - v[j];
      pred[j] = f;
    }
    int low = 0, up = 0, last = -1, endofpath = -1;
    double mind = 0.0;
    bool found = false;
    while (!found) {
      if (up == low) {
        // Partition the untouched columns by the new minimum distance.
        last = low - 1;
        mind = d[collist[up++]];
        for (int k2 = up; k2 < n; ++k2) {
          const int j = collist[k2];
          const double h = d[j];
          if (h <= mind) {
            if (h < mind) {
              up = low;
              mind = h;
            }
            collist[k2] = collist[up];
            collist[up++] = j;
          }
        }
        for (int k2 = low; k2 < up; ++k2) {
          if (colsol[collist[k2]] < 0) {
            endofpath = collist[k2];
            found = true;
            break;
          }
        }
      }
      if (!found) {
        const int j1 = collist[low++];
        const int i = colsol[j1];
        const double h = cost(i, j1) - v[j1] - mind;
        for (int k2 = up; k2 < n; ++k2) {
          const int j = collist[k2];
          const double v2 = cost(i, j) - v[j] - h;
          if (v2 < d[j]) {
            d[j] = v2;
            pred[j] = i;
            if (v2 == mind) {
              if (colsol[j] < 0) {
                endofpath = j;
                found = true;
                break;
              }
              collist[k2] = collist[up];
              collist[up++] = j;
            }
          }
        }
      }
    }
    for (int k2 = 0; k2 <= last; ++k2) {
      const int j = collist[k2];
      v[j] += d[j] - mind;
    }
    int j = endofpath;
    while (true) {
      const int i = pred[j];
      colsol[j] = i;
      std::swap(rowsol[i], j);
      if (i == f) break;
    }
  }
}

// ---------------------------------------------------------------------------
// Network simplex for the dense bipartite transportation problem.  Nodes
// 0..n-1 are sources (supplies a), nodes n..n+m-1 sinks (demands b); the
// basis is a spanning tree stored through parent pointers, with the flow of
// the arc (v, parent(v)) kept at the child node v.

class NetworkSimplex {
 public:
  NetworkSimplex(const std::vector<double>& a, const std::vector<double>& b,
                 const CostOracle& cost,
                 const std::vector<std::size_t>& order_a,
                 const std::vector<std::size_t>& order_b)
      : a_(a),
        b_(b),
        cost_(cost),
        n_(static_cast<int>(a.size())),
        m_(static_cast<int>(b.size())),
        nodes_(n_ + m_),
        parent_(nodes_, -1),
        depth_(nodes_, 0),
        flow_(nodes_, 0.0),
        pi_(nodes_, 0.0),
        kids_(nodes_) {
    build_initial_basis(order_a, order_b);
  }

  // Runs pivots to optimality and fills `plan`.  Throws NumericError when
  // the pivot cap is exhausted.
  void solve(TransportPlan& plan) {
    const std::size_t total_arcs =
        static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_);
    pivot_cap_ = 400L * nodes_ + 10000;
    if (total_arcs <= kSparseThreshold) {
      pivots_dense(total_arcs);
    } else {
      // Candidate-arc mode for large instances: pivot within the
      // k-nearest-neighbor arc set, then price every arc; violating arcs
      // join the candidate set and pivoting resumes.  The final clean
      // full-pricing sweep certifies optimality over all arcs, so the
      // result is exact no matter how the candidates were chosen.
      build_candidates();
      flatten_candidates();
      long rounds = 0;
      while (true) {
        pivots_candidates();
        ++rounds;
        if (!add_violations()) break;
      }
      if (std::getenv("BIP_SIMPLEX_STATS") != nullptr) {
        std::fprintf(stderr,
                     "simplex stats: n=%d m=%d pivots=%ld rounds=%ld "
                     "cand=%zu scanned=%.3g\n",
                     n_, m_, pivots_, rounds, flat_i_.size(),
                     static_cast<double>(scanned_arcs_));
      }
    }
    extract(plan);
  }

 private:
  // Beyond this arc count the plain block scan turns quadratic-ish in
  // practice; the candidate mode keeps pricing work proportional to the
  // candidate set plus a handful of full sweeps.
  static constexpr std::size_t kSparseThreshold = std::size_t{1} << 22;
  static constexpr std::size_t kNearest = 16;

  double opt_tol() const { return 1e-11 * (1.0 + cmax_); }

  void bump_pivot_count() {
    if (++pivots_ > pivot_cap_) {
      throw NumericError("transport solver failed to converge after " +
                         std::to_string(pivots_) + " pivots");
    }
  }

  void pivots_dense(const std::size_t total_arcs) {
    const std::size_t m = static_cast<std::size_t>(m_);
    const std::size_t block =
        std::max<std::size_t>(512, static_cast<std::size_t>(std::sqrt(
                                       static_cast<double>(total_arcs))));
    std::size_t cursor = 0;
    while (true) {
      // Entering arc: best reduced cost within scanned blocks; stop the scan
      // early once a block contains a violating arc.
      double best = -opt_tol();
      long best_arc = -1;
      std::size_t scanned = 0;
      std::size_t i = cursor / m;
      std::size_t j = cursor % m;
      double pi_row = pi_[i];
      while (scanned < total_arcs) {
        const std::size_t chunk = std::min(block, total_arcs - scanned);
        for (std::size_t t = 0; t < chunk; ++t) {
          const double c = cost_(i, j);
          cmax_ = std::max(cmax_, c);
          const double rc = c - pi_row - pi_[static_cast<std::size_t>(n_) + j];
          if (rc < best) {
            best = rc;
            best_arc = static_cast<long>(i * m + j);
          }
          if (++j == m) {
            j = 0;
            i = i + 1 == static_cast<std::size_t>(n_) ? 0 : i + 1;
            pi_row = pi_[i];
          }
        }
        scanned += chunk;
        if (best_arc >= 0) break;
      }
      cursor = i * m + j;
      if (best_arc < 0) break;  // optimal
      bump_pivot_count();
      pivot(static_cast<int>(best_arc / static_cast<long>(m)),
            static_cast<int>(best_arc % static_cast<long>(m)));
    }
  }

  void build_candidates() {
    const std::size_t n = static_cast<std::size_t>(n_);
    const std::size_t m = static_cast<std::size_t>(m_);
    // A source must fan out to ~m/n sinks in any feasible plan, so the row
    // side keeps more neighbors when the sink cloud is much larger.
    const std::size_t kr = std::min(std::clamp(2 * m / n, kNearest,
                                               std::size_t{64}),
                                    m);
    const std::size_t kc = std::min(kNearest, n);
    cand_.assign(n, {});
    // Row side: the k cheapest sinks of every source.  The k-smallest SET of
    // (cost, index) pairs is unique, so the construction is deterministic.
    {
      std::vector<std::pair<double, int>> buf(m);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          buf[j] = {cost_(i, j), static_cast<int>(j)};
        }
        std::nth_element(buf.begin(), buf.begin() + (kr - 1), buf.end());
        cand_[i].reserve(kr + kc / 2);
        for (std::size_t t = 0; t < kr; ++t) cand_[i].push_back(buf[t].second);
      }
    }
    // Column side: the k cheapest sources of every sink.
    {
      std::vector<std::pair<double, int>> buf(n);
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          buf[i] = {cost_(i, j), static_cast<int>(i)};
        }
        std::nth_element(buf.begin(), buf.begin() + (kc - 1), buf.end());
        for (std::size_t t = 0; t < kc; ++t) {
          cand_[static_cast<std::size_t>(buf[t].second)].push_back(
              static_cast<int>(j));
        }
      }
    }
    for (auto& row : cand_) {
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
  }

  void flatten_candidates() {
    flat_i_.clear();
    flat_j_.clear();
    for (int i = 0; i < n_; ++i) {
      for (const int j : cand_[static_cast<std::size_t>(i)]) {
        flat_i_.push_back(i);
        flat_j_.push_back(j);
      }
    }
  }

  // Block-search pivoting restricted to the flattened candidate arcs.
  void pivots_candidates() {
    const std::size_t total = flat_i_.size();
    const std::size_t block = std::max<std::size_t>(
        512, static_cast<std::size_t>(std::sqrt(static_cast<double>(total))));
    std::size_t cursor = 0;
    while (true) {
      double best = -opt_tol();
      long best_arc = -1;
      std::size_t scanned = 0;
      std::size_t k = cursor;
      while (scanned < total) {
        const std::size_t chunk = std::min(block, total - scanned);
        for (std::size_t t = 0; t < chunk; ++t) {
          const auto i = static_cast<std::size_t>(flat_i_[k]);
          const auto j = static_cast<std::size_t>(flat_j_[k]);
          const double c = cost_(i, j);
          cmax_ = std::max(cmax_, c);
          const double rc = c - pi_[i] - pi_[static_cast<std::size_t>(n_) + j];
          if (rc < best) {
            best = rc;
            best_arc = static_cast<long>(k);
          }
          if (++k == total) k = 0;
        }
        scanned += chunk;
        scanned_arcs_ += chunk;
        if (best_arc >= 0) break;
      }
      cursor = k;
      if (best_arc < 0) break;  // optimal within the candidate set
      bump_pivot_count();
      pivot(flat_i_[static_cast<std::size_t>(best_arc)],
            flat_j_[static_cast<std::size_t>(best_arc)]);
    }
  }

  // Prices every arc against the current potentials; the worst violator of
  // each row and of each column joins the candidate set.  Returns false when
  // no new arc violates, which certifies optimality (up to opt_tol) over all
  // arcs.
  bool add_violations() {
    const std::size_t n = static_cast<std::size_t>(n_);
    const std::size_t m = static_cast<std::size_t>(m_);
    const double tol = opt_tol();
    bool any = false;
    col_worst_.assign(m, -tol);
    col_worst_i_.assign(m, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const double pi_row = pi_[i];
      double worst = -tol;
      int worst_j = -1;
      for (std::size_t j = 0; j < m; ++j) {
        const double c = cost_(i, j);
        cmax_ = std::max(cmax_, c);
        const double rc = c - pi_row - pi_[n + j];
        if (rc < worst) {
          worst = rc;
          worst_j = static_cast<int>(j);
        }
        if (rc < col_worst_[j]) {
          col_worst_[j] = rc;
          col_worst_i_[j] = static_cast<int>(i);
        }
      }
      if (worst_j >= 0) any |= add_candidate(i, worst_j);
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (col_worst_i_[j] >= 0) {
        any |= add_candidate(static_cast<std::size_t>(col_worst_i_[j]),
                             static_cast<int>(j));
      }
    }
    if (any) flatten_candidates();
    return any;
  }

  bool add_candidate(std::size_t i, int j) {
    auto& row = cand_[i];
    const auto it = std::lower_bound(row.begin(), row.end(), j);
    if (it != row.end() && *it == j) return false;
    row.insert(it, j);
    return true;
  }

  void build_initial_basis(const std::vector<std::size_t>& order_a,
                           const std::vector<std::size_t>& order_b) {
    // Northwest corner rule over the spatially sorted clouds.  It yields
    // exactly n + m - 1 basic arcs forming a spanning tree.
    struct Arc {
      int src, snk;
      double flow;
    };
    std::vector<Arc> arcs;
    arcs.reserve(static_cast<std::size_t>(n_ + m_ - 1));
    int ia = 0, jb = 0;
    double ra = a_[order_a[0]];
    double rb = b_[order_b[0]];
    while (true) {
      const double t = std::min(ra, rb);
      arcs.push_back({static_cast<int>(order_a[static_cast<std::size_t>(ia)]),
                      static_cast<int>(order_b[static_cast<std::size_t>(jb)]),
                      t});
      ra -= t;
      rb -= t;
      if (ia == n_ - 1 && jb == m_ - 1) break;
      // Advance exactly one side per step (ties produce a zero-flow arc on
      // the next step); the index guards also absorb rounding drift in the
      // running remainders near the ends.
      if ((ra <= rb || jb == m_ - 1) && ia < n_ - 1) {
        ra = a_[order_a[static_cast<std::size_t>(++ia)]];
      } else {
        rb = b_[order_b[static_cast<std::size_t>(++jb)]];
      }
    }

    // Turn the arc list into the rooted tree representation.
    std::vector<std::vector<std::pair<int, double>>> adj(
        static_cast<std::size_t>(nodes_));
    for (const Arc& arc : arcs) {
      adj[static_cast<std::size_t>(arc.src)].push_back(
          {n_ + arc.snk, arc.flow});
      adj[static_cast<std::size_t>(n_ + arc.snk)].push_back(
          {arc.src, arc.flow});
    }
    std::vector<int> stack = {0};
    std::vector<char> seen(static_cast<std::size_t>(nodes_), 0);
    seen[0] = 1;
    pi_[0] = 0.0;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& [w, fl] : adj[static_cast<std::size_t>(v)]) {
        if (seen[static_cast<std::size_t>(w)]) continue;
        seen[static_cast<std::size_t>(w)] = 1;
        parent_[static_cast<std::size_t>(w)] = v;
        depth_[static_cast<std::size_t>(w)] =
            depth_[static_cast<std::size_t>(v)] + 1;
        flow_[static_cast<std::size_t>(w)] = fl;
        kids_[static_cast<std::size_t>(v)].push_back(w);
        const double c = arc_cost(v, w);
        cmax_ = std::max(cmax_, c);
        pi_[static_cast<std::size_t>(w)] = c - pi_[static_cast<std::size_t>(v)];
        stack.push_back(w);
      }
    }
  }

  // Ground cost of the basic arc between adjacent tree nodes x and y
  // (one a source, the other a sink).
  double arc_cost(int x, int y) const {
    const int src = x < n_ ? x : y;
    const int snk = x < n_ ? y : x;
    return cost_(static_cast<std::size_t>(src),
                 static_cast<std::size_t>(snk - n_));
  }

  void pivot(int ei, int ej) {
    const int src = ei;
    const int snk = n_ + ej;

    // Walk both endpoints to their lowest common ancestor, recording the
    // flow change direction of every arc on the cycle.  Traversing a tree
    // arc from its source endpoint to its sink endpoint means the arc's flow
    // increases with the entering flow; the opposite traversal decreases it.
    path_snk_.clear();
    path_src_.clear();
    int x = snk, y = src;
    while (x != y) {
      if (depth_[static_cast<std::size_t>(x)] >=
          depth_[static_cast<std::size_t>(y)]) {
        path_snk_.push_back(x);
        x = parent_[static_cast<std::size_t>(x)];
      } else {
        path_src_.push_back(y);
        y = parent_[static_cast<std::size_t>(y)];
      }
    }

    // Flow step: the minimum flow among arcs traversed against their
    // direction.  Ties are broken by walking the cycle from the apex along
    // the entering arc's orientation (apex -> source branch -> entering arc
    // -> sink branch -> apex) and keeping the LAST blocking arc; this
    // anti-stalling rule (Cunningham) curbs the degenerate pivot chains that
    // tied weights otherwise produce.
    double theta = kInf;
    int leave = -1;
    bool leave_on_snk_branch = false;
    for (auto it = path_src_.rbegin(); it != path_src_.rend(); ++it) {
      const int v = *it;
      const bool decreasing = v < n_;  // parent(sink)->source traversal
      if (decreasing && flow_[static_cast<std::size_t>(v)] <= theta) {
        theta = flow_[static_cast<std::size_t>(v)];
        leave = v;
        leave_on_snk_branch = false;
      }
    }
    for (const int v : path_snk_) {
      const bool decreasing = v >= n_;  // sink->source traversal
      if (decreasing && flow_[static_cast<std::size_t>(v)] <= theta) {
        theta = flow_[static_cast<std::size_t>(v)];
        leave = v;
        leave_on_snk_branch = true;
      }
    }

    // Apply the flow change around the cycle.
    for (const int v : path_snk_) {
      flow_[static_cast<std::size_t>(v)] += (v >= n_ ? -theta : theta);
    }
    for (const int v : path_src_) {
      flow_[static_cast<std::size_t>(v)] += (v < n_ ? -theta : theta);
    }

    // Re-root the subtree cut off by the leaving arc at the entering arc's
    // endpoint inside it, then hang it below the other endpoint.
    const int inside = leave_on_snk_branch ? snk : src;
    const int outside = leave_on_snk_branch ? src : snk;

    reroot_path_.clear();
    for (int v = inside; v != leave; v = parent_[static_cast<std::size_t>(v)]) {
      reroot_path_.push_back(v);
    }
    reroot_path_.push_back(leave);

    // Walk from `inside` up to `leave`, reversing parent links; arc flows
    // stay with the arc, i.e. they shift one slot toward the old parent.
    double carried = theta;  // entering arc flow
    int new_parent = outside;
    for (const int v : reroot_path_) {
      const int old_parent = parent_[static_cast<std::size_t>(v)];
      const double old_flow = flow_[static_cast<std::size_t>(v)];
      {
        // Every chain arc (v, old_parent) disappears in its old orientation;
        // dropping v from its old parent's child list covers each exactly
        // once, including the leaving arc itself.
        auto& k = kids_[static_cast<std::size_t>(old_parent)];
        k.erase(std::find(k.begin(), k.end(), v));
      }
      parent_[static_cast<std::size_t>(v)] = new_parent;
      kids_[static_cast<std::size_t>(new_parent)].push_back(v);
      flow_[static_cast<std::size_t>(v)] = carried;
      carried = old_flow;
      new_parent = v;
      if (v == leave) break;
    }

    // Refresh depths and potentials across the re-hung subtree.
    refresh_stack_.clear();
    refresh_stack_.push_back(inside);
    while (!refresh_stack_.empty()) {
      const int v = refresh_stack_.back();
      refresh_stack_.pop_back();
      const int pv = parent_[static_cast<std::size_t>(v)];
      depth_[static_cast<std::size_t>(v)] =
          depth_[static_cast<std::size_t>(pv)] + 1;
      pi_[static_cast<std::size_t>(v)] =
          arc_cost(pv, v) - pi_[static_cast<std::size_t>(pv)];
      for (const int w : kids_[static_cast<std::size_t>(v)]) {
        refresh_stack_.push_back(w);
      }
    }
  }

  void extract(TransportPlan& plan) const {
    plan.n = static_cast<std::size_t>(n_);
    plan.m = static_cast<std::size_t>(m_);
    plan.cost = 0.0;
    for (int v = 1; v < nodes_; ++v) {
      const double f = flow_[static_cast<std::size_t>(v)];
      if (f <= 0.0) continue;
      const int pv = parent_[static_cast<std::size_t>(v)];
      const int i = v < n_ ? v : pv;
      const int j = (v < n_ ? pv : v) - n_;
      plan.row.push_back(static_cast<std::size_t>(i));
      plan.col.push_back(static_cast<std::size_t>(j));
      plan.mass.push_back(f);
      plan.cost += f * cost_(static_cast<std::size_t>(i),
                             static_cast<std::size_t>(j));
    }
  }

  const std::vector<double>& a_;
  const std::vector<double>& b_;
  const CostOracle& cost_;
  int n_, m_, nodes_;
  std::vector<int> parent_, depth_;
  std::vector<double> flow_, pi_;
  std::vector<std::vector<int>> kids_;
  std::vector<int> path_snk_, path_src_, reroot_path_, refresh_stack_;
  double cmax_ = 0.0;
  long pivots_ = 0;
  long pivot_cap_ = 0;
  unsigned long long scanned_arcs_ = 0;
  std::vector<std::vector<int>> cand_;  // candidate sinks per source, sorted
  std::vector<int> flat_i_, flat_j_;    // flattened candidate arcs
  std::vector<double> col_worst_;       // per-column worst reduced cost
  std::vector<int> col_worst_i_;
};

bool uniform_weights(const PointCloud& c) {
  const double expect = 1.0 / static_cast<double>(c.size());
  for (const double wi : c.w) {
    if (std::abs(wi - expect) > 1e-12) return false;
  }
  return true;
}

void check_pair(const PointCloud& a, const PointCloud& b, int p) {
  validate_cloud(a);
  validate_cloud(b);
  if (a.dim != b.dim) {
    throw DomainError("transport: dimension mismatch between clouds");
  }
  if (p != 1 && p != 2) {
    throw ConfigError("transport: ground power must be 1 or 2");
  }
}

}  // namespace

void validate_ot_config(const OtConfig& cfg) {
  if (cfg.ground_power != 1 && cfg.ground_power != 2) {
    throw ConfigError("ot config: ground_power must be 1 or 2");
  }
  if (cfg.solver != "exact" && cfg.solver != "sinkhorn") {
    throw ConfigError("ot config: unknown solver '" + cfg.solver + "'");
  }
  if (!(cfg.epsilon > 0.0)) {
    throw ConfigError("ot config: epsilon must be positive");
  }
  if (cfg.max_iters < 1) {
    throw ConfigError("ot config: max_iters must be >= 1");
  }
  if (!(cfg.tolerance > 0.0)) {
    throw ConfigError("ot config: tolerance must be positive");
  }
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> s(n, 0.0);
  for (std::size_t k = 0; k < mass.size(); ++k) s[row[k]] += mass[k];
  return s;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> s(m, 0.0);
  for (std::size_t k = 0; k < mass.size(); ++k) s[col[k]] += mass[k];
  return s;
}

void validate_plan(const TransportPlan& plan, const PointCloud& a,
                   const PointCloud& b) {
  if (plan.n != a.size() || plan.m != b.size()) {
    throw NumericError("transport plan: size mismatch");
  }
  for (const double f : plan.mass) {
    if (!(f >= 0.0)) throw NumericError("transport plan: negative mass");
  }
  const auto rs = plan.row_sums();
  const auto cs = plan.col_sums();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (std::abs(rs[i] - a.w[i]) > 1e-8) {
      throw NumericError("transport plan: row marginal off by " +
                         format_double(rs[i] - a.w[i]));
    }
  }
  for (std::size_t j = 0; j < cs.size(); ++j) {
    if (std::abs(cs[j] - b.w[j]) > 1e-8) {
      throw NumericError("transport plan: column marginal off by " +
                         format_double(cs[j] - b.w[j]));
    }
  }
}

OtResult exact_wp(const PointCloud& a, const PointCloud& b, int p) {
  check_pair(a, b, p);
  const CostOracle cost(a, b, p);
  OtResult result;
  TransportPlan& plan = result.plan;

  // The assignment solver's cubic worst case overtakes the network simplex
  // beyond a few hundred points (measured crossover near n = 700), so only
  // small uniform equal-size clouds take that route.
  constexpr std::size_t kAssignmentLimit = 512;
  if (a.size() == b.size() && a.size() <= kAssignmentLimit &&
      uniform_weights(a) && uniform_weights(b)) {
    std::vector<int> rowsol;
    solve_assignment(cost, rowsol);
    const std::size_t n = a.size();
    const double mass = 1.0 / static_cast<double>(n);
    plan.n = plan.m = n;
    plan.row.resize(n);
    plan.col.resize(n);
    plan.mass.assign(n, mass);
    for (std::size_t i = 0; i < n; ++i) {
      plan.row[i] = i;
      plan.col[i] = static_cast<std::size_t>(rowsol[i]);
      plan.cost += mass * cost(i, plan.col[i]);
    }
  } else if (a.size() == 1 || b.size() == 1) {
    // Single-point marginals are fully determined.
    plan.n = a.size();
    plan.m = b.size();
    if (a.size() == 1) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        plan.row.push_back(0);
        plan.col.push_back(j);
        plan.mass.push_back(b.w[j]);
        plan.cost += b.w[j] * cost(0, j);
      }
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) {
        plan.row.push_back(i);
        plan.col.push_back(0);
        plan.mass.push_back(a.w[i]);
        plan.cost += a.w[i] * cost(i, 0);
      }
    }
  } else {
    NetworkSimplex simplex(a.w, b.w, cost, morton_order(a), morton_order(b));
    simplex.solve(plan);
  }

  validate_plan(plan, a, b);
  const double total = std::max(plan.cost, 0.0);
  result.distance = p == 2 ? std::sqrt(total) : total;
  return result;
}

double brute_force_wp(const PointCloud& a, const PointCloud& b, int p) {
  check_pair(a, b, p);
  if (a.size() != b.size()) {
    throw DomainError("brute force: clouds must have equal size");
  }
  if (a.size() > 8) {
    throw DomainError("brute force: refusing n > 8");
  }
  if (!uniform_weights(a) || !uniform_weights(b)) {
    throw DomainError("brute force: weights must be uniform");
  }
  const CostOracle cost(a, b, p);
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = kInf;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  best /= static_cast<double>(n);
  return p == 2 ? std::sqrt(best) : best;
}

bool w1_le_w2_check(const PointCloud& a, const PointCloud& b) {
  const double w1 = exact_wp(a, b, 1).distance;
  const double w2 = exact_wp(a, b, 2).distance;
  return w1 <= w2 + 1e-7;
}

}  // namespace bip
