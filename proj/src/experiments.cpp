// SPDX-License-Identifier: Apache-2.0
#include "bip/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "bip/csv.hpp"
#include "bip/errors.hpp"
#include "bip/ot.hpp"

namespace bip {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Stream tags for per-purpose RNG derivation (ASCII, reader-decodable).
constexpr std::uint64_t kStreamSweepRef = 0x7377656570726566;   // "sweepref"
constexpr std::uint64_t kStreamLatent = 0x6c6174636c6f7564;     // "latcloud"
constexpr std::uint64_t kStreamTarget = 0x746774636c6f7564;     // "tgtcloud"
constexpr std::uint64_t kStreamTrain = 0x747261696e636667;      // "traincfg"
constexpr std::uint64_t kStreamEval = 0x6576616c6c6174;         // "evallat"
constexpr std::uint64_t kStreamPosterior = 0x706f73747731;      // "postw1"
constexpr std::uint64_t kStreamFloor = 0x666c6f6f727731;        // "floorw1"
constexpr std::uint64_t kStreamRateRef = 0x72617465726566;      // "rateref"

// CSV cells never contain separators or newlines; error strings might.
std::string sanitize_cell(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNan;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

// Standard error of the mean (0 for a single observation).
double se_of(const std::vector<double>& v) {
  if (v.empty()) return kNan;
  if (v.size() == 1) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double var = ss / static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

SweepVariable parse_sweep_variable(const std::string& name) {
  if (name == "sample-size") return SweepVariable::sample_size;
  if (name == "width") return SweepVariable::width;
  if (name == "epochs") return SweepVariable::epochs;
  throw ConfigError("unknown sweep variable: '" + name +
                    "' (expected sample-size, width, or epochs)");
}

std::string sweep_variable_name(SweepVariable var) {
  switch (var) {
    case SweepVariable::sample_size:
      return "sample-size";
    case SweepVariable::width:
      return "width";
    case SweepVariable::epochs:
      return "epochs";
  }
  throw ConfigError("invalid sweep variable enum value");
}

void validate_sweep_spec(const SweepSpec& spec) {
  if (spec.grid.empty()) throw ConfigError("sweep: empty grid");
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    if (spec.grid[i] == 0) throw ConfigError("sweep: grid value must be >= 1");
    if (i > 0 && spec.grid[i] <= spec.grid[i - 1]) {
      throw ConfigError("sweep: grid must be strictly increasing");
    }
  }
  if (spec.variable == SweepVariable::sample_size) {
    for (std::size_t v : spec.grid) {
      if (v < 2) throw ConfigError("sweep: sample sizes must be >= 2");
    }
  }
  if (spec.repeats == 0) throw ConfigError("sweep: repeats must be >= 1");
  if (spec.fixed_sample_size < 2) {
    throw ConfigError("sweep: fixed_sample_size must be >= 2");
  }
  if (spec.n_ref < 2) throw ConfigError("sweep: n_ref must be >= 2");
  if (spec.eval_points < 2) {
    throw ConfigError("sweep: eval_points must be >= 2");
  }
  if (spec.posterior_points < 2) {
    throw ConfigError("sweep: posterior_points must be >= 2");
  }
  validate_likelihood(spec.likelihood);
  validate_train_config(spec.train);
}

namespace {

// Training configuration for one cell: the swept field is overwritten and
// the seed re-derived so cells are independent.
TrainConfig cell_train_config(const SweepSpec& spec, std::size_t value,
                              std::uint64_t cell_seed) {
  TrainConfig cfg = spec.train;
  switch (spec.variable) {
    case SweepVariable::sample_size:
      break;  // the sample budget is handled by the caller
    case SweepVariable::width:
      // Every hidden layer gets the swept width; a config with no hidden
      // layers sweeps a single layer.
      if (cfg.hidden.empty()) cfg.hidden = {0};
      for (int& w : cfg.hidden) w = static_cast<int>(value);
      break;
    case SweepVariable::epochs:
      cfg.epochs = static_cast<int>(value);
      break;
  }
  cfg.seed = Rng::derive_seed(cell_seed, kStreamTrain);
  return cfg;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  validate_sweep_spec(spec);

  const PointCloud reference = sample_benchmark(
      spec.dist, spec.n_ref, Rng::derive_seed(spec.seed0, kStreamSweepRef));

  SweepResult result;
  result.rows.reserve(spec.grid.size() * spec.repeats);

  for (std::size_t vi = 0; vi < spec.grid.size(); ++vi) {
    const std::size_t value = spec.grid[vi];
    std::vector<double> prior_w2s, posterior_w1s;
    std::size_t bound_held = 0;

    for (std::size_t r = 0; r < spec.repeats; ++r) {
      SweepRow row;
      row.sweep_value = value;
      row.repeat = r;
      row.cell_seed = Rng::derive_seed(spec.seed0, vi * spec.repeats + r);
      row.report.prior_w2 = kNan;
      row.report.posterior_w1 = kNan;
      row.report.cstab_estimate = kNan;
      row.report.ratio = kNan;
      row.noise_floor = kNan;

      try {
        const std::size_t n_train = spec.variable == SweepVariable::sample_size
                                        ? value
                                        : spec.fixed_sample_size;
        const TrainConfig cfg = cell_train_config(spec, value, row.cell_seed);

        const PointCloud latent = sample_benchmark(
            BenchmarkDist::gaussian, n_train,
            Rng::derive_seed(row.cell_seed, kStreamLatent));
        const PointCloud target =
            sample_benchmark(spec.dist, n_train,
                             Rng::derive_seed(row.cell_seed, kStreamTarget));

        const TrainResult trained = train(latent, target, cfg);

        const PointCloud eval_latent = sample_benchmark(
            BenchmarkDist::gaussian, spec.eval_points,
            Rng::derive_seed(row.cell_seed, kStreamEval));
        const PointCloud approx = pushforward_cloud(trained.map, eval_latent);

        row.report = stability_report(
            reference, approx, spec.likelihood, spec.posterior_points,
            Rng::derive_seed(row.cell_seed, kStreamPosterior));
        row.noise_floor = resampling_noise_floor(
            reference, spec.likelihood, spec.posterior_points,
            Rng::derive_seed(row.cell_seed, kStreamFloor));
        row.bound_holds =
            row.report.posterior_w1 <=
            row.report.cstab_estimate * row.report.prior_w2 + row.noise_floor;

        prior_w2s.push_back(row.report.prior_w2);
        posterior_w1s.push_back(row.report.posterior_w1);
        if (row.bound_holds) ++bound_held;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      result.rows.push_back(std::move(row));
    }

    SweepSummaryRow s;
    s.sweep_value = value;
    s.n_ok = prior_w2s.size();
    s.mean_prior_w2 = mean_of(prior_w2s);
    s.se_prior_w2 = se_of(prior_w2s);
    s.mean_posterior_w1 = mean_of(posterior_w1s);
    s.se_posterior_w1 = se_of(posterior_w1s);
    s.bound_fraction = s.n_ok == 0 ? kNan
                                   : static_cast<double>(bound_held) /
                                         static_cast<double>(s.n_ok);
    result.summary.push_back(s);
  }
  return result;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows) {
  std::string out =
      "dist,variable,value,repeat,cell_seed,prior_w2,posterior_w1,cstab,"
      "ratio,noise_floor,bound_holds,error\n";
  const std::string dist = dist_name(spec.dist);
  const std::string var = sweep_variable_name(spec.variable);
  for (const SweepRow& row : rows) {
    out += dist;
    out += ',';
    out += var;
    out += ',';
    out += std::to_string(row.sweep_value);
    out += ',';
    out += std::to_string(row.repeat);
    out += ',';
    out += std::to_string(row.cell_seed);
    out += ',';
    out += format_double(row.report.prior_w2);
    out += ',';
    out += format_double(row.report.posterior_w1);
    out += ',';
    out += format_double(row.report.cstab_estimate);
    out += ',';
    out += format_double(row.report.ratio);
    out += ',';
    out += format_double(row.noise_floor);
    out += ',';
    out += row.error.empty() ? (row.bound_holds ? "1" : "0") : "0";
    out += ',';
    out += sanitize_cell(row.error);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_sweep_summary_csv(const std::filesystem::path& path,
                             const std::vector<SweepSummaryRow>& summary) {
  std::string out =
      "value,n_ok,mean_prior_w2,se_prior_w2,mean_posterior_w1,"
      "se_posterior_w1,bound_fraction\n";
  for (const SweepSummaryRow& s : summary) {
    out += std::to_string(s.sweep_value);
    out += ',';
    out += std::to_string(s.n_ok);
    out += ',';
    out += format_double(s.mean_prior_w2);
    out += ',';
    out += format_double(s.se_prior_w2);
    out += ',';
    out += format_double(s.mean_posterior_w1);
    out += ',';
    out += format_double(s.se_posterior_w1);
    out += ',';
    out += format_double(s.bound_fraction);
    out += '\n';
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Empirical rate
// ---------------------------------------------------------------------------

SlopeFit fit_slope(const std::vector<double>& x,
                   const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw DomainError("fit_slope: x and y lengths differ");
  }
  if (x.size() < 2) throw DomainError("fit_slope: need at least two points");
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("fit_slope: non-finite x value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DomainError("fit_slope: non-finite y value");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_slope: x values are all equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0.0) {
    fit.r_squared = 1.0;  // constant y is fit exactly by the zero slope
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += e * e;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  }
  return fit;
}

RateResult run_empirical_rate(BenchmarkDist dist,
                              const std::vector<std::size_t>& grid,
                              std::size_t repeats, std::size_t n_ref,
                              std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("rate: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 2) throw ConfigError("rate: grid values must be >= 2");
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw ConfigError("rate: grid must be strictly increasing");
    }
  }
  if (repeats == 0) throw ConfigError("rate: repeats must be >= 1");
  if (n_ref < 2 * grid.back()) {
    throw ConfigError(
        "rate: n_ref must be at least twice the largest grid value");
  }

  const PointCloud reference =
      sample_benchmark(dist, n_ref, Rng::derive_seed(seed, kStreamRateRef));

  RateResult result;
  result.grid = grid;
  std::vector<double> log_n, log_w2;
  for (std::size_t vi = 0; vi < grid.size(); ++vi) {
    std::vector<double> w2s;
    for (std::size_t r = 0; r < repeats; ++r) {
      RateRow row;
      row.n = grid[vi];
      row.repeat = r;
      row.cell_seed = Rng::derive_seed(seed, vi * repeats + r);
      const PointCloud cloud = sample_benchmark(dist, row.n, row.cell_seed);
      row.w2 = exact_wp(cloud, reference, 2).distance;
      w2s.push_back(row.w2);
      result.rows.push_back(row);
    }
    result.mean_w2.push_back(mean_of(w2s));
    result.se_w2.push_back(se_of(w2s));
    log_n.push_back(std::log(static_cast<double>(grid[vi])));
    log_w2.push_back(std::log(result.mean_w2.back()));
  }
  result.fit = fit_slope(log_n, log_w2);
  return result;
}

void write_rate_csv(const std::filesystem::path& path, BenchmarkDist dist,
                    const std::vector<RateRow>& rows) {
  std::string out = "dist,n,repeat,cell_seed,w2\n";
  const std::string name = dist_name(dist);
  for (const RateRow& row : rows) {
    out += name;
    out += ',';
    out += std::to_string(row.n);
    out += ',';
    out += std::to_string(row.repeat);
    out += ',';
    out += std::to_string(row.cell_seed);
    out += ',';
    out += format_double(row.w2);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_rate_summary_csv(const std::filesystem::path& path,
                            const RateResult& result) {
  std::string out = "n,mean_w2,se_w2\n";
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    out += std::to_string(result.grid[i]);
    out += ',';
    out += format_double(result.mean_w2[i]);
    out += ',';
    out += format_double(result.se_w2[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_rate_fit_csv(const std::filesystem::path& path, BenchmarkDist dist,
                        const RateResult& result) {
  std::string out = "dist,slope,intercept,r_squared\n";
  out += dist_name(dist);
  out += ',';
  out += format_double(result.fit.slope);
  out += ',';
  out += format_double(result.fit.intercept);
  out += ',';
  out += format_double(result.fit.r_squared);
  out += '\n';
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Plotting
// ---------------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// The error-bar column for `name`: mean_foo -> se_foo, otherwise se_name.
std::string se_column_name(const std::string& name) {
  if (name.rfind("mean_", 0) == 0) return "se_" + name.substr(5);
  return "se_" + name;
}

struct PlotSeries {
  std::string label;
  std::vector<double> x, y, se;  // se entries are 0 when absent
  bool has_se = false;
};

// Tick positions for a log axis covering [lo, hi]: 1-2-5 per decade while the
// span is narrow, decades only once it is wide, the endpoints as a fallback.
std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const double span = std::log10(hi) - std::log10(lo);
  const int k0 = static_cast<int>(std::floor(std::log10(lo))) - 1;
  const int k1 = static_cast<int>(std::ceil(std::log10(hi))) + 1;
  static const double kMantissa[] = {1.0, 2.0, 5.0};
  for (int k = k0; k <= k1; ++k) {
    for (double man : kMantissa) {
      if (span > 4.0 && man != 1.0) continue;
      const double v = man * std::pow(10.0, k);
      if (v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12)) {
        ticks.push_back(v);
      }
    }
  }
  if (ticks.empty()) ticks = {lo, hi};
  return ticks;
}

}  // namespace

void emit_plot(const std::filesystem::path& csv_path, const std::string& x_col,
               const std::vector<std::string>& y_cols,
               const std::filesystem::path& out_svg) {
  if (y_cols.empty()) throw ConfigError("plot: no y columns requested");
  const CsvTable table = read_csv_table(csv_path);
  if (table.rows.empty()) {
    throw ConfigError("plot: no data rows in " + csv_path.string());
  }
  const std::size_t xi = table.column(x_col);

  std::vector<PlotSeries> series;
  for (const std::string& name : y_cols) {
    PlotSeries s;
    s.label = name;
    const std::size_t yi = table.column(name);
    std::size_t se_idx = 0;
    try {
      se_idx = table.column(se_column_name(name));
      s.has_se = true;
    } catch (const ConfigError&) {
      s.has_se = false;
    }
    for (const auto& row : table.rows) {
      const double xv = parse_double(row[xi]);
      const double yv = parse_double(row[yi]);
      if (!(xv > 0.0) || !(yv > 0.0)) {
        throw ConfigError("plot: log-log axes need positive values (" +
                          x_col + "=" + row[xi] + ", " + name + "=" +
                          row[yi] + ")");
      }
      s.x.push_back(xv);
      s.y.push_back(yv);
      s.se.push_back(s.has_se ? parse_double(row[se_idx]) : 0.0);
    }
    // Sort by x so polylines are monotone even for unsorted tables.
    std::vector<std::size_t> order(s.x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                     std::size_t b) {
      return s.x[a] < s.x[b];
    });
    PlotSeries sorted;
    sorted.label = s.label;
    sorted.has_se = s.has_se;
    for (std::size_t k : order) {
      sorted.x.push_back(s.x[k]);
      sorted.y.push_back(s.y[k]);
      sorted.se.push_back(s.se[k]);
    }
    series.push_back(std::move(sorted));
  }

  double xmin = std::numeric_limits<double>::infinity(), xmax = 0.0;
  double ymin = std::numeric_limits<double>::infinity(), ymax = 0.0;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double hi = s.y[i] + s.se[i];
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, hi);
    }
  }
  // Degenerate ranges still need a visible span.
  if (xmin == xmax) {
    xmin /= 2.0;
    xmax *= 2.0;
  }
  if (ymin == ymax) {
    ymin /= 2.0;
    ymax *= 2.0;
  }
  const double lx0 = std::log10(xmin), lx1 = std::log10(xmax);
  const double ly0 = std::log10(ymin) - 0.05 * (std::log10(ymax) -
                                                std::log10(ymin) + 1e-12);
  const double ly1 = std::log10(ymax) + 0.05 * (std::log10(ymax) -
                                                std::log10(ymin) + 1e-12);

  const double width = 640.0, height = 440.0;
  const double ml = 78.0, mr = 24.0, mt = 22.0, mb = 56.0;
  const double pw = width - ml - mr, ph = height - mt - mb;
  const auto sx = [&](double v) {
    return ml + (std::log10(v) - lx0) / (lx1 - lx0 + 1e-300) * pw;
  };
  const auto sy_log = [&](double lv) {
    return mt + (ly1 - lv) / (ly1 - ly0 + 1e-300) * ph;
  };
  const auto sy = [&](double v) { return sy_log(std::log10(v)); };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#17becf"};
  constexpr std::size_t kPaletteSize = 6;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
         "height=\"440\" viewBox=\"0 0 640 440\" font-family=\"sans-serif\" "
         "font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"440\" "
         "fill=\"#ffffff\"/>\n";

  // Grid lines and tick labels on both axes (1-2-5 log ticks).
  for (double tick : log_ticks(xmin, xmax)) {
    const double gx = sx(tick);
    svg += "<line x1=\"" + px(gx) + "\" y1=\"" + px(mt) + "\" x2=\"" +
           px(gx) + "\" y2=\"" + px(mt + ph) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + px(gx) + "\" y=\"" + px(mt + ph + 18.0) +
           "\" text-anchor=\"middle\">" + xml_escape(format_double(tick)) +
           "</text>\n";
  }
  for (double tick : log_ticks(std::pow(10.0, ly0), std::pow(10.0, ly1))) {
    const double gy = sy(tick);
    svg += "<line x1=\"" + px(ml) + "\" y1=\"" + px(gy) + "\" x2=\"" +
           px(ml + pw) + "\" y2=\"" + px(gy) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + px(ml - 6.0) + "\" y=\"" + px(gy + 4.0) +
           "\" text-anchor=\"end\">" + xml_escape(format_double(tick)) +
           "</text>\n";
  }

  // Axes frame.
  svg += "<rect x=\"" + px(ml) + "\" y=\"" + px(mt) + "\" width=\"" + px(pw) +
         "\" height=\"" + px(ph) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + px(ml + pw / 2.0) + "\" y=\"" + px(height - 14.0) +
         "\" text-anchor=\"middle\">" + xml_escape(x_col) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + px(mt + ph / 2.0) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         px(mt + ph / 2.0) + ")\">" +
         xml_escape(y_cols.size() == 1 ? y_cols.front() : std::string("value")) +
         "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const std::string color = kPalette[si % kPaletteSize];

    // Error bars first so markers sit on top of them.
    if (s.has_se) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (s.se[i] <= 0.0) continue;
        const double cx = sx(s.x[i]);
        // The lower whisker is clipped above zero to stay on the log axis.
        const double lo = std::max(s.y[i] - s.se[i], ymin * 1e-3);
        const double y_top = sy(s.y[i] + s.se[i]);
        const double y_bot = sy(lo);
        svg += "<line x1=\"" + px(cx) + "\" y1=\"" + px(y_top) + "\" x2=\"" +
               px(cx) + "\" y2=\"" + px(y_bot) + "\" stroke=\"" + color +
               "\" stroke-width=\"1\"/>\n";
        svg += "<line x1=\"" + px(cx - 3.0) + "\" y1=\"" + px(y_top) +
               "\" x2=\"" + px(cx + 3.0) + "\" y2=\"" + px(y_top) +
               "\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
        svg += "<line x1=\"" + px(cx - 3.0) + "\" y1=\"" + px(y_bot) +
               "\" x2=\"" + px(cx + 3.0) + "\" y2=\"" + px(y_bot) +
               "\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
      }
    }

    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!points.empty()) points += ' ';
      points += px(sx(s.x[i])) + "," + px(sy(s.y[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      svg += "<circle cx=\"" + px(sx(s.x[i])) + "\" cy=\"" + px(sy(s.y[i])) +
             "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }

    // Legend entry, stacked top-right.
    const double ly = mt + 14.0 + 16.0 * static_cast<double>(si);
    svg += "<line x1=\"" + px(ml + pw - 120.0) + "\" y1=\"" + px(ly - 4.0) +
           "\" x2=\"" + px(ml + pw - 100.0) + "\" y2=\"" + px(ly - 4.0) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + px(ml + pw - 94.0) + "\" y=\"" + px(ly) + "\">" +
           xml_escape(s.label) + "</text>\n";
  }

  svg += "</svg>\n";
  write_text_file(out_svg, svg);
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open file: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace bip
