// SPDX-License-Identifier: Apache-2.0
#include "bip/transport_map.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

namespace {

void leaky_relu_inplace(Eigen::MatrixXd& H, double slope) {
  double* data = H.data();
  const Eigen::Index size = H.size();
  for (Eigen::Index k = 0; k < size; ++k) {
    if (data[k] < 0.0) data[k] *= slope;
  }
}

}  // namespace

Eigen::MatrixXd MlpBlock::residual(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd a = X;
  for (std::size_t l = 0; l < W.size(); ++l) {
    Eigen::MatrixXd h = (W[l] * a).colwise() + b[l];
    if (l + 1 < W.size()) leaky_relu_inplace(h, leaky_slope);
    a = std::move(h);
  }
  return a;
}

Eigen::MatrixXd ResidualMapStack::forward_batch(const Eigen::MatrixXd& Z) const {
  if (Z.rows() != latent_dim) {
    throw DomainError("map forward: latent dimension mismatch");
  }
  Eigen::MatrixXd x;
  if (lift.has_value()) {
    x = (lift->first * Z).colwise() + lift->second;
  } else {
    x = Z;
  }
  for (const MlpBlock& stage : stages) {
    x += stage.residual(x);
  }
  return x;
}

std::vector<double> ResidualMapStack::forward(std::span<const double> z) const {
  Eigen::Map<const Eigen::VectorXd> zv(z.data(),
                                       static_cast<Eigen::Index>(z.size()));
  const Eigen::MatrixXd out = forward_batch(zv);
  return {out.data(), out.data() + out.size()};
}

std::size_t ResidualMapStack::parameter_count() const {
  std::size_t count = 0;
  if (lift.has_value()) {
    count += static_cast<std::size_t>(lift->first.size() + lift->second.size());
  }
  for (const MlpBlock& s : stages) {
    for (const auto& w : s.W) count += static_cast<std::size_t>(w.size());
    for (const auto& bb : s.b) count += static_cast<std::size_t>(bb.size());
  }
  return count;
}

ResidualMapStack make_stack(int latent_dim, int output_dim, int stage_count,
                            const std::vector<int>& hidden, double leaky_slope,
                            std::uint64_t seed) {
  if (latent_dim < 1 || output_dim < 1) {
    throw ConfigError("map: dimensions must be >= 1");
  }
  if (stage_count < 1) throw ConfigError("map: stage_count must be >= 1");
  for (const int h : hidden) {
    if (h < 1) throw ConfigError("map: hidden widths must be >= 1");
  }

  Rng rng = Rng::derived(seed, 0x6d61702d696e6974ULL);
  ResidualMapStack map;
  map.latent_dim = latent_dim;
  map.output_dim = output_dim;
  if (latent_dim != output_dim) {
    Eigen::MatrixXd lw(output_dim, latent_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
    for (Eigen::Index k = 0; k < lw.size(); ++k) {
      lw.data()[k] = scale * rng.normal();
    }
    map.lift = {std::move(lw), Eigen::VectorXd::Zero(output_dim)};
  }

  std::vector<int> widths;
  widths.push_back(output_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);

  for (int s = 0; s < stage_count; ++s) {
    MlpBlock block;
    block.leaky_slope = leaky_slope;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const int fan_in = widths[l];
      const int fan_out = widths[l + 1];
      Eigen::MatrixXd w(fan_out, fan_in);
      if (l + 2 == widths.size()) {
        // The output layer starts at zero so the block is initially inert
        // and the whole stack begins at the identity (or the bare lift).
        w.setZero();
      } else {
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (Eigen::Index k = 0; k < w.size(); ++k) {
          w.data()[k] = scale * rng.normal();
        }
      }
      block.W.push_back(std::move(w));
      block.b.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    map.stages.push_back(std::move(block));
  }
  return map;
}

PointCloud pushforward_cloud(const ResidualMapStack& map,
                             const PointCloud& reference) {
  validate_cloud(reference);
  if (reference.dim != map.latent_dim) {
    throw DomainError("pushforward: reference dimension mismatch");
  }
  const Eigen::Map<const Eigen::MatrixXd> Z(
      reference.pts.data(), map.latent_dim,
      static_cast<Eigen::Index>(reference.size()));
  const Eigen::MatrixXd X = map.forward_batch(Z);
  PointCloud out;
  out.dim = map.output_dim;
  out.pts.assign(X.data(), X.data() + X.size());
  out.w = reference.w;
  return out;
}

double map_l2_distance(const ResidualMapStack& a, const ResidualMapStack& b,
                       const PointCloud& reference) {
  if (a.latent_dim != b.latent_dim || a.output_dim != b.output_dim) {
    throw DomainError("map distance: shape mismatch");
  }
  const PointCloud pa = pushforward_cloud(a, reference);
  const PointCloud pb = pushforward_cloud(b, reference);
  double s = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto x = pa.point(i);
    const auto y = pb.point(i);
    double d2 = 0.0;
    for (int d = 0; d < pa.dim; ++d) {
      const double diff = x[d] - y[d];
      d2 += diff * diff;
    }
    s += reference.w[i] * d2;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Serialization: little-endian flat binary.
//
//   bytes 0..7   magic "RMSTACK1"
//   u32          format version (1)
//   u32 x 4      latent_dim, output_dim, stage_count, has_lift
//   f64          leaky slope
//   per stage:   u32 hidden_count, u32 hidden widths...
//   then all parameters as f64 in declaration order: lift W (row-major),
//   lift b, then per stage and per layer W (row-major) followed by b.

namespace {

constexpr char kMagic[8] = {'R', 'M', 'S', 'T', 'A', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>(v >> (8 * k)));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>(bits >> (8 * k)));
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t k) const {
    if (pos + k > data.size()) throw DomainError("map file: truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data[pos + static_cast<std::size_t>(k)]))
           << (8 * k);
    }
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) {
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(data[pos + static_cast<std::size_t>(k)]))
              << (8 * k);
    }
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

void put_matrix(std::string& out, const Eigen::MatrixXd& M) {
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) put_f64(out, M(r, c));
  }
}

void get_matrix(Reader& in, Eigen::MatrixXd& M) {
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) M(r, c) = in.f64();
  }
}

}  // namespace

void save_map(const std::filesystem::path& path, const ResidualMapStack& map) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(map.latent_dim));
  put_u32(out, static_cast<std::uint32_t>(map.output_dim));
  put_u32(out, static_cast<std::uint32_t>(map.stages.size()));
  put_u32(out, map.lift.has_value() ? 1 : 0);
  const double slope =
      map.stages.empty() ? 0.2 : map.stages.front().leaky_slope;
  put_f64(out, slope);
  for (const MlpBlock& s : map.stages) {
    put_u32(out, static_cast<std::uint32_t>(
                     s.W.empty() ? 0 : s.W.size() - 1));
    for (std::size_t l = 0; l + 1 < s.W.size(); ++l) {
      put_u32(out, static_cast<std::uint32_t>(s.W[l].rows()));
    }
  }
  if (map.lift.has_value()) {
    put_matrix(out, map.lift->first);
    for (Eigen::Index k = 0; k < map.lift->second.size(); ++k) {
      put_f64(out, map.lift->second[k]);
    }
  }
  for (const MlpBlock& s : map.stages) {
    for (std::size_t l = 0; l < s.W.size(); ++l) {
      put_matrix(out, s.W[l]);
      for (Eigen::Index k = 0; k < s.b[l].size(); ++k) put_f64(out, s.b[l][k]);
    }
  }

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("map file: cannot open for writing: " +
                            path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DomainError("map file: short write: " + path.string());
}

ResidualMapStack load_map(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("map file: cannot open: " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  if (data.size() < sizeof(kMagic) ||
      std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DomainError("map file: bad magic");
  }
  Reader in{data, sizeof(kMagic)};
  if (in.u32() != kVersion) throw DomainError("map file: unknown version");

  ResidualMapStack map;
  map.latent_dim = static_cast<int>(in.u32());
  map.output_dim = static_cast<int>(in.u32());
  const std::uint32_t stage_count = in.u32();
  const bool has_lift = in.u32() != 0;
  const double slope = in.f64();
  if (map.latent_dim < 1 || map.output_dim < 1 || stage_count < 1 ||
      stage_count > 4096) {
    throw DomainError("map file: implausible header");
  }

  std::vector<std::vector<int>> hidden(stage_count);
  for (std::uint32_t s = 0; s < stage_count; ++s) {
    const std::uint32_t hc = in.u32();
    if (hc > 4096) throw DomainError("map file: implausible hidden count");
    for (std::uint32_t l = 0; l < hc; ++l) {
      const std::uint32_t w = in.u32();
      if (w < 1 || w > 1u << 20) {
        throw DomainError("map file: implausible width");
      }
      hidden[s].push_back(static_cast<int>(w));
    }
  }

  if (has_lift) {
    Eigen::MatrixXd lw(map.output_dim, map.latent_dim);
    get_matrix(in, lw);
    Eigen::VectorXd lb(map.output_dim);
    for (Eigen::Index k = 0; k < lb.size(); ++k) lb[k] = in.f64();
    map.lift = {std::move(lw), std::move(lb)};
  } else if (map.latent_dim != map.output_dim) {
    throw DomainError("map file: missing lift for mismatched dimensions");
  }

  for (std::uint32_t s = 0; s < stage_count; ++s) {
    std::vector<int> widths;
    widths.push_back(map.output_dim);
    widths.insert(widths.end(), hidden[s].begin(), hidden[s].end());
    widths.push_back(map.output_dim);
    MlpBlock block;
    block.leaky_slope = slope;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      Eigen::MatrixXd w(widths[l + 1], widths[l]);
      get_matrix(in, w);
      Eigen::VectorXd bb(widths[l + 1]);
      for (Eigen::Index k = 0; k < bb.size(); ++k) bb[k] = in.f64();
      block.W.push_back(std::move(w));
      block.b.push_back(std::move(bb));
    }
    map.stages.push_back(std::move(block));
  }
  if (in.pos != data.size()) {
    throw DomainError("map file: trailing bytes");
  }
  return map;
}

}  // namespace bip
