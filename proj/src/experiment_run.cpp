#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fvselect/csv.hpp"
#include "fvselect/experiment.hpp"
#include "fvselect/fleming_viot.hpp"
#include "fvselect/killed_process.hpp"
#include "fvselect/nbbm.hpp"
#include "fvselect/parallel.hpp"
#include "fvselect/qsd_analytics.hpp"

#ifndef FVSELECT_VERSION
#define FVSELECT_VERSION "0.0.0"
#endif

namespace fvselect {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Histograms for the plotting layer: fixed bins on [0, 15).
constexpr double kHistWidth = 0.1;
constexpr std::size_t kHistBins = 150;

/// Everything one experiment produces before it is written out.
class RunContext {
 public:
  RunContext(const ExperimentConfig& c, const RunOptions& o)
      : config(c), opts(o), dir(c.output_dir),
        tag(tag_hash(std::string(to_string(c.experiment)))) {
    workers = opts.workers ? opts.workers : default_worker_count();
  }

  CsvWriter open(const std::string& name, std::vector<std::string> header) {
    files_[name] = header;
    written_.push_back(dir / name);
    return CsvWriter(dir / name, std::move(header));
  }

  std::uint64_t seed_for(const std::string& label, std::uint64_t replica,
                         std::uint64_t index) {
    const auto s = derive_seed(config.seed, tag, replica, index);
    seeds_.push_back({{"label", label}, {"replica", replica}, {"index", index},
                      {"seed", s}});
    return s;
  }

  void log(const std::string& msg) const {
    if (!opts.quiet) std::cerr << "[fvselect] " << msg << '\n';
  }

  std::vector<fs::path> finish() {
    json m;
    m["tool"] = "fvselect";
    m["version"] = FVSELECT_VERSION;
    m["csv_schema_version"] = kCsvSchemaVersion;
    m["experiment"] = std::string(to_string(config.experiment));
    m["config"] = config.to_json();
    m["root_seed"] = config.seed;
    m["seed_derivation"] = "derive_seed(root_seed, fnv1a(experiment), replica, index)";
    m["seeds"] = seeds_;
    json files = json::object();
    for (const auto& [name, cols] : files_) files[name] = cols;
    m["files"] = files;
    const auto path = dir / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    out << m.dump(2) << '\n';
    if (!out) throw RunError("cannot write " + path.string());
    auto all = written_;
    all.push_back(path);
    return all;
  }

  const ExperimentConfig& config;
  const RunOptions& opts;
  fs::path dir;
  std::uint64_t tag;
  std::size_t workers = 1;

 private:
  std::map<std::string, std::vector<std::string>> files_;
  std::vector<fs::path> written_;
  json seeds_ = json::array();
};

std::vector<double> histogram(std::span<const double> pts) {
  std::vector<double> counts(kHistBins, 0.0);
  for (double x : pts) {
    const auto b = static_cast<std::size_t>(std::floor(x / kHistWidth));
    if (x >= 0.0 && b < kHistBins) counts[b] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(pts.size()) * kHistWidth);
  for (auto& c : counts) c *= scale;
  return counts;
}

double z_of(double value, double target, double se) {
  if (se > 0.0) return (value - target) / se;
  return value == target ? 0.0 : std::copysign(INFINITY, value - target);
}

InitialCondition initial_for(const InitialSpec& spec, std::size_t n) {
  if (spec.kind == InitialSpec::Kind::list && spec.points.size() == n) {
    return spec.points;
  }
  return spec.sampler();
}

// ---------------------------------------------------------------- FV

struct FvRow {
  std::size_t n = 0;
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  StationarySummary s;
  double w1 = 0.0, ks = 0.0;
  EstimatorResult interjump, g1;
  std::pair<EstimatorResult, EstimatorResult> halves;
  std::vector<std::pair<std::string, GreenCheck>> green;
};

struct GreenFn {
  const char* name;
  double (*f)(double);
};

constexpr GreenFn kGreenFns[] = {
    {"exp_neg_x", [](double x) { return std::exp(-x); }},
    {"indicator_x_le_1", [](double x) { return x <= 1.0 ? 1.0 : 0.0; }},
    {"one", [](double) { return 1.0; }},
};

std::vector<FvRow> run_fv(RunContext& ctx, bool all_green, std::size_t event_log) {
  const auto& c = ctx.config;
  std::vector<FvRow> rows;
  for (auto n : c.n_particles) {
    for (std::size_t r = 0; r < c.replicas; ++r) {
      FvRow row;
      row.n = n;
      row.replica = r;
      row.seed = ctx.seed_for("fv", r, n);
      rows.push_back(std::move(row));
    }
  }
  const auto pimin = qsd_law(minimal_qsd());
  // Largest systems first keeps the tail of the schedule short.
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return rows[a].n > rows[b].n; });
  parallel_for(
      rows.size(),
      [&](std::size_t k) {
        auto& row = rows[order[k]];
        StationaryConfig sc;
        sc.n_particles = row.n;
        sc.dt = c.dt;
        sc.horizon = c.horizon;
        sc.burn_in = c.burn_in;
        sc.initial = initial_for(c.initial, row.n);
        sc.seed = row.seed;
        sc.record_interval = c.record_interval;
        sc.n_batches = c.n_batches;
        sc.event_log_limit = row.replica == 0 ? event_log : 0;
        try {
          row.s = estimate_stationary(sc);
          row.w1 = w1(row.s.xi_hat, pimin);
          row.ks = ks(row.s.xi_hat, pimin);
          row.interjump = interjump_identity(row.s);
          row.g1 = g1_identity(row.s);
          row.halves = split_half_lambda(row.s);
          for (const auto& g : kGreenFns) {
            if (!all_green && std::string_view(g.name) != "exp_neg_x") continue;
            row.green.emplace_back(g.name, green_identity_check(row.s, g.f));
          }
        } catch (const std::exception& e) {
          throw RunError("replica " + std::to_string(row.replica) + " (N=" +
                         std::to_string(row.n) + ", seed=" +
                         std::to_string(row.seed) + "): " + e.what());
        }
        // Analysis is done; the raw varpi points are the bulk of the memory.
        row.s.varpi_hat = EmpiricalMeasure();
        row.s.trace.varpi_points = {};
        row.s.trace.varpi_points.shrink_to_fit();
        ctx.log("N=" + std::to_string(row.n) + " replica " +
                std::to_string(row.replica) + " lambda_hat=" +
                format_double(row.s.lambda_hat.estimate));
      },
      ctx.workers);
  return rows;
}

const std::vector<std::string>& fv_columns() {
  static const std::vector<std::string> cols = {
      "N", "replica", "seed", "dt", "burn_in", "horizon",
      "lambda_hat", "lambda_se", "lambda_ci_low", "lambda_ci_high",
      "finite_rate_guaranteed", "w1_to_pimin", "ks_to_pimin", "xi_mean",
      "iota_N", "lambda_lower_bound",
      "interjump_identity", "interjump_identity_se", "interjump_z",
      "g1_identity", "g1_identity_se", "g1_z",
      "green_lhs", "green_rhs", "green_se", "green_z",
      "lambda_first_half", "lambda_first_half_se", "lambda_second_half",
      "lambda_second_half_se", "split_half_z"};
  return cols;
}

void write_fv(RunContext& ctx, const std::vector<FvRow>& rows,
              const std::string& name) {
  auto w = ctx.open(name, fv_columns());
  const auto& c = ctx.config;
  for (const auto& r : rows) {
    const auto& l = r.s.lambda_hat;
    const auto& g = r.green.front().second;
    const auto& [h1, h2] = r.halves;
    const double split_se = std::hypot(h1.std_error, h2.std_error);
    w.row({static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.replica),
           r.seed, c.dt, r.s.burn_in_used, c.horizon, l.estimate, l.std_error,
           l.ci_low, l.ci_high,
           static_cast<std::int64_t>(r.s.finite_rate_guaranteed ? 1 : 0), r.w1,
           r.ks, r.s.xi_hat.mean(), iota(r.n), lambda_lower_bound(r.n),
           r.interjump.estimate, r.interjump.std_error,
           z_of(r.interjump.estimate, 1.0, r.interjump.std_error), r.g1.estimate,
           r.g1.std_error, z_of(r.g1.estimate, 1.0, r.g1.std_error), g.lhs, g.rhs,
           g.std_error, g.z_score, h1.estimate, h1.std_error, h2.estimate,
           h2.std_error, z_of(h1.estimate, h2.estimate, split_se)});
  }
}

void write_xi_hist(RunContext& ctx, const std::vector<FvRow>& rows) {
  auto w = ctx.open("fv_xi_hist.csv", {"N", "replica", "bin_low", "bin_high",
                                       "density", "pimin_density"});
  const auto q = minimal_qsd();
  for (const auto& r : rows) {
    const auto h = histogram(r.s.trace.xi_points);
    for (std::size_t b = 0; b < kHistBins; ++b) {
      const double lo = static_cast<double>(b) * kHistWidth;
      const double hi = lo + kHistWidth;
      // Bin average of the analytic density.
      const double ref = (qsd_cdf(q, hi) - qsd_cdf(q, lo)) / kHistWidth;
      w.row({static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.replica),
             lo, hi, h[b], ref});
    }
  }
}

void write_events(RunContext& ctx, const std::vector<FvRow>& rows) {
  auto w = ctx.open("fv_events.csv", {"N", "replica", "time", "dying_stream",
                                      "target_stream", "position"});
  for (const auto& r : rows) {
    for (const auto& e : r.s.trace.event_log) {
      w.row({static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.replica),
             e.time, e.dying_stream, e.target_stream, e.position});
    }
  }
}

void run_fv_stationary(RunContext& ctx, bool sweep) {
  const auto rows = run_fv(ctx, false, sweep ? 0 : 10000);
  write_fv(ctx, rows, sweep ? "fv_sweep.csv" : "fv_stationary.csv");
  write_xi_hist(ctx, rows);
  if (!sweep) write_events(ctx, rows);
}

void run_green_check(RunContext& ctx) {
  const auto rows = run_fv(ctx, true, 0);
  auto w = ctx.open("green_check.csv", {"N", "replica", "seed", "test_function",
                                        "lhs", "rhs", "std_error", "z_score"});
  for (const auto& r : rows) {
    for (const auto& [name, g] : r.green) {
      w.row({static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.replica),
             r.seed, name, g.lhs, g.rhs, g.std_error, g.z_score});
    }
  }
}

// ---------------------------------------------------------------- killed

KilledRunOptions killed_opts(const RunContext& ctx, BridgeCorrection b =
                                                        BridgeCorrection::on) {
  KilledRunOptions o;
  o.workers = ctx.workers;
  o.bridge = b;
  return o;
}

/// Analytic P(tau > t) under the initial law, where one is available.
double analytic_survival(const InitialSpec& spec, double t) {
  switch (spec.kind) {
    case InitialSpec::Kind::qsd:
      return std::exp(-spec.value * t);
    case InitialSpec::Kind::point:
      return survival_prob(spec.value, t);
    case InitialSpec::Kind::list: {
      double acc = 0.0;
      for (double x : spec.points) acc += survival_prob(x, t);
      return acc / static_cast<double>(spec.points.size());
    }
  }
  return kNaN;
}

void run_yaglom(RunContext& ctx) {
  const auto& c = ctx.config;
  auto w = ctx.open("yaglom.csv",
                    {"start", "t", "n_paths", "survivors", "log_survival",
                     "w1_to_pimin", "ks_to_pimin", "w1_to_start_qsd", "mean"});
  const auto pimin = qsd_law(minimal_qsd());
  auto one = [&](const InitialSpec& start, std::size_t paths, std::uint64_t replica) {
    Rng rng(ctx.seed_for("yaglom:" + start.to_string(), replica, 0));
    ctx.log("yaglom from " + start.to_string() + " with " + std::to_string(paths) +
            " paths");
    std::vector<ConditionedEnsemble> path;
    try {
      path = flow_theta_path(start.sampler(), c.times, paths, c.dt, rng,
                             killed_opts(ctx));
    } catch (const std::exception& e) {
      throw RunError("replica " + std::to_string(replica) + " (start " +
                     start.to_string() + "): " + e.what());
    }
    std::optional<AnalyticLaw> own;
    if (start.kind == InitialSpec::Kind::qsd) own = qsd_law(make_qsd(start.value));
    for (const auto& e : path) {
      const EmpiricalMeasure m(e.particles);
      w.row({start.to_string(), e.time, static_cast<std::uint64_t>(paths),
             static_cast<std::uint64_t>(e.particles.size()), e.log_survival,
             w1(m, pimin), ks(m, pimin), own ? w1(m, *own) : kNaN, m.mean()});
    }
  };
  one(c.initial, c.paths, 0);
  InitialSpec contrast;
  contrast.kind = InitialSpec::Kind::qsd;
  contrast.value = c.contrast_lambda;
  one(contrast, c.contrast_paths, 1);
}

void run_survival(RunContext& ctx) {
  const auto& c = ctx.config;
  Rng rng(ctx.seed_for("survival", 0, 0));
  const auto path = flow_theta_path(c.initial.sampler(), c.times, c.paths, c.dt,
                                    rng, killed_opts(ctx));
  auto w = ctx.open("survival.csv",
                    {"start", "t", "n_paths", "survivors", "survival_hat",
                     "survival_se", "survival_analytic", "rate_hat", "rate_analytic",
                     "w1_to_pimin"});
  const auto pimin = qsd_law(minimal_qsd());
  const double n = static_cast<double>(c.paths);
  for (const auto& e : path) {
    const double s = static_cast<double>(e.particles.size()) / n;
    const double exact = analytic_survival(c.initial, e.time);
    w.row({c.initial.to_string(), e.time, static_cast<std::uint64_t>(c.paths),
           static_cast<std::uint64_t>(e.particles.size()), s,
           std::sqrt(s * (1.0 - s) / n), exact, -std::log(s) / e.time,
           -std::log(exact) / e.time,
           e.particles.empty() ? kNaN : w1(EmpiricalMeasure(e.particles), pimin)});
  }
}

void run_validate_kernel(RunContext& ctx) {
  const auto& c = ctx.config;
  const double x = c.x0, t = c.horizon;
  const double exact = survival_prob(x, t);
  auto w = ctx.open("kernel.csv", {"x0", "t", "dt", "bridge", "n_paths",
                                   "survival_hat", "survival_se",
                                   "survival_analytic", "z"});
  struct Case {
    double dt;
    BridgeCorrection bridge;
  };
  // Corrected at dt and dt/2; uncorrected at dt and at the coarse 1e-2.
  const Case cases[] = {{c.dt, BridgeCorrection::on},
                        {c.dt / 2.0, BridgeCorrection::on},
                        {c.dt, BridgeCorrection::off},
                        {std::max(c.dt, 1e-2), BridgeCorrection::off}};
  std::uint64_t idx = 0;
  for (const auto& k : cases) {
    Rng rng(ctx.seed_for("kernel", 0, idx++));
    const auto e = flow_theta(point_sampler(x), t, c.paths, k.dt, rng,
                              killed_opts(ctx, k.bridge));
    const double n = static_cast<double>(c.paths);
    const double s = static_cast<double>(e.particles.size()) / n;
    const double se = std::sqrt(s * (1.0 - s) / n);
    w.row({x, t, k.dt, std::string(k.bridge == BridgeCorrection::on ? "on" : "off"),
           static_cast<std::uint64_t>(c.paths), s, se, exact, z_of(s, exact, se)});
  }

  // Exact hitting-time sampler: inverse Gaussian with mean x and variance x.
  const std::size_t chunks = (c.paths + 65535) / 65536;
  std::vector<std::array<double, 3>> acc(chunks);
  const std::uint64_t root = ctx.seed_for("hitting", 0, 0);
  parallel_for(
      chunks,
      [&](std::size_t k) {
        Rng rng(derive_seed(root, tag_hash("hitting-chunk"), 0, k));
        const std::size_t lo = k * 65536, hi = std::min(c.paths, lo + 65536);
        double s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
          const double tau = sample_hitting_time(x, rng);
          s1 += tau;
          s2 += tau * tau;
          s3 += std::exp(-tau);
        }
        acc[k] = {s1, s2, s3};
      },
      ctx.workers);
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (const auto& a : acc) {
    s1 += a[0];
    s2 += a[1];
    s3 += a[2];
  }
  const double n = static_cast<double>(c.paths);
  const double mean = s1 / n;
  const double var = (s2 - n * mean * mean) / (n - 1.0);
  // SE of the sample variance from the IG fourth central moment.
  const double mu = x, shape = x * x;
  const double ig_var = mu * mu * mu / shape;
  const double ig_mu4 = 15.0 * std::pow(mu, 7) / std::pow(shape, 3) +
                        3.0 * ig_var * ig_var;
  auto h = ctx.open("kernel_hitting.csv",
                    {"x0", "n_paths", "mean_hat", "mean_se", "mean_analytic",
                     "var_hat", "var_se", "var_analytic", "mgf_neg1_hat",
                     "mgf_neg1_analytic"});
  h.row({x, static_cast<std::uint64_t>(c.paths), mean, std::sqrt(var / n), mu, var,
         std::sqrt((ig_mu4 - ig_var * ig_var) / n), ig_var, s3 / n,
         hitting_mgf(x, -1.0)});
}

// ---------------------------------------------------------------- QSD table

void run_qsd_table(RunContext& ctx) {
  const auto& c = ctx.config;
  struct Row {
    QsdParams q;
    double normalization = 0.0, sample_mean = 0.0, sample_se = 0.0,
           tail_hat = 0.0, w1s = 0.0, kss = 0.0;
  };
  std::vector<Row> rows(c.lambdas.size());
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < rows.size(); ++i) seeds.push_back(ctx.seed_for("qsd", 0, i));
  parallel_for(
      rows.size(),
      [&](std::size_t i) {
        auto& r = rows[i];
        r.q = make_qsd(c.lambdas[i]);
        const auto q = r.q;
        r.normalization = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double x) { return qsd_density(q, x); }, 0.0,
            std::numeric_limits<double>::infinity(), 15, 1e-14);
        Rng rng(seeds[i]);
        auto xs = qsd_sample(q, c.paths, rng);
        r.sample_mean = sample_mean(xs);
        r.sample_se = std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
        r.tail_hat = tail_rate(xs);
        const EmpiricalMeasure m(std::move(xs));
        const auto law = qsd_law(q);
        r.w1s = w1(m, law);
        r.kss = ks(m, law);
      },
      ctx.workers);
  auto w = ctx.open("qsd_table.csv",
                    {"lambda", "beta", "M_lambda", "mean", "tail_rate",
                     "normalization", "n_samples", "sample_mean", "sample_mean_se",
                     "tail_rate_hat", "w1_sample", "ks_sample"});
  for (const auto& r : rows) {
    w.row({r.q.lambda, r.q.beta, r.q.norm_const, qsd_mean(r.q), -(1.0 - r.q.beta),
           r.normalization, static_cast<std::uint64_t>(c.paths), r.sample_mean,
           r.sample_se, r.tail_hat, r.w1s, r.kss});
  }
}

// ---------------------------------------------------------------- N-BBM

struct NbbmRow {
  std::size_t n = 0, replica = 0;
  std::uint64_t seed = 0;
  FrontTrajectory traj;
  EstimatorResult speed_min, speed_median;
  double branch_rate = 0.0;
  std::vector<double> profile;  // centered points, time-aggregated after burn-in
  std::size_t snapshots = 0;
};

std::vector<NbbmRow> run_nbbm(RunContext& ctx, bool keep_profile) {
  const auto& c = ctx.config;
  std::vector<NbbmRow> rows;
  for (auto n : c.n_particles) {
    for (std::size_t r = 0; r < c.replicas; ++r) {
      NbbmRow row;
      row.n = n;
      row.replica = r;
      row.seed = ctx.seed_for("nbbm", r, n);
      rows.push_back(std::move(row));
    }
  }
  const auto record_every =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c.record_interval / c.dt)));
  parallel_for(
      rows.size(),
      [&](std::size_t k) {
        auto& row = rows[k];
        try {
          auto state = nbbm_init(row.n, row.seed);
          std::uint64_t branches_at_burn = 0;
          bool burned = false;
          row.traj = nbbm_run(state, c.horizon, c.dt, record_every,
                              [&](const NbbmState& s) {
                                if (s.time + 1e-9 < c.burn_in) return;
                                if (!burned) {
                                  burned = true;
                                  branches_at_burn = s.branch_count;
                                }
                                ++row.snapshots;
                                const double lo = s.min();
                                for (double x : s.positions) row.profile.push_back(x - lo);
                              });
          const std::size_t total = row.traj.times.size();
          const std::size_t after = row.snapshots;
          const std::size_t window = std::min(after, total / 2);
          row.speed_min = front_speed(row.traj.times, row.traj.min, window);
          row.speed_median = front_speed(row.traj.times, row.traj.median, window);
          const double span = state.time - c.burn_in;
          row.branch_rate = static_cast<double>(state.branch_count - branches_at_burn) /
                            (static_cast<double>(row.n) * span);
        } catch (const std::exception& e) {
          throw RunError("replica " + std::to_string(row.replica) + " (N=" +
                         std::to_string(row.n) + ", seed=" +
                         std::to_string(row.seed) + "): " + e.what());
        }
        if (!keep_profile) {
          // Keep the final-snapshot block only.
          row.profile.erase(row.profile.begin(),
                            row.profile.end() - static_cast<std::ptrdiff_t>(row.n));
        }
        ctx.log("N-BBM N=" + std::to_string(row.n) + " replica " +
                std::to_string(row.replica) + " speed=" +
                format_double(row.speed_min.estimate));
      },
      ctx.workers);
  return rows;
}

void run_nbbm_speed(RunContext& ctx) {
  const auto rows = run_nbbm(ctx, true);
  const auto wave = wave_law(kMinWaveSpeed);
  std::vector<double> profile_w1(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    profile_w1[k] = w1(EmpiricalMeasure(rows[k].profile, Support::non_negative), wave);
  }
  {
    auto w = ctx.open("nbbm_speed.csv",
                      {"N", "replica", "seed", "speed_min", "speed_min_se",
                       "speed_median", "speed_median_se", "branch_rate",
                       "profile_w1_to_wave"});
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = rows[k];
      w.row({static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.replica),
             r.seed, r.speed_min.estimate, r.speed_min.std_error,
             r.speed_median.estimate, r.speed_median.std_error, r.branch_rate,
             profile_w1[k]});
    }
  }
  {
    // Replica-averaged speeds; SE combines the per-replica errors.
    auto w = ctx.open("nbbm_speed_summary.csv",
                      {"N", "replicas", "speed", "speed_se", "speed_spread_se",
                       "profile_w1_to_wave", "wave_speed"});
    for (auto n : ctx.config.n_particles) {
      std::vector<double> v, se2, pw;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].n != n) continue;
        v.push_back(rows[k].speed_min.estimate);
        se2.push_back(rows[k].speed_min.std_error * rows[k].speed_min.std_error);
        pw.push_back(profile_w1[k]);
      }
      const double r = static_cast<double>(v.size());
      const double se = std::sqrt(std::accumulate(se2.begin(), se2.end(), 0.0)) / r;
      const double spread = v.size() > 1 ? std::sqrt(sample_variance(v) / r) : kNaN;
      w.row({static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(v.size()),
             sample_mean(v), se, spread, sample_mean(pw), kMinWaveSpeed});
    }
  }
  auto w = ctx.open("nbbm_front.csv", {"N", "replica", "t", "min", "median"});
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.traj.times.size(); ++i) {
      w.row({static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.replica),
             r.traj.times[i], r.traj.min[i], r.traj.median[i]});
    }
  }
}

void run_nbbm_profile(RunContext& ctx) {
  const auto rows = run_nbbm(ctx, true);
  const auto wave = wave_law(kMinWaveSpeed);
  auto w = ctx.open("nbbm_profile.csv",
                    {"N", "replica", "seed", "snapshots", "w1_to_wave", "ks_to_wave",
                     "profile_mean", "wave_mean", "speed_min", "speed_min_se"});
  auto h = ctx.open("nbbm_profile_hist.csv",
                    {"N", "replica", "bin_low", "bin_high", "density", "wave_density"});
  for (const auto& r : rows) {
    const EmpiricalMeasure m(r.profile, Support::non_negative);
    w.row({static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.replica),
           r.seed, static_cast<std::uint64_t>(r.snapshots), w1(m, wave), ks(m, wave),
           m.mean(), wave.mean, r.speed_min.estimate, r.speed_min.std_error});
    const auto hist = histogram(r.profile);
    for (std::size_t b = 0; b < kHistBins; ++b) {
      const double lo = static_cast<double>(b) * kHistWidth;
      const double hi = lo + kHistWidth;
      h.row({static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.replica),
             lo, hi, hist[b], (wave.cdf(hi) - wave.cdf(lo)) / kHistWidth});
    }
  }
}

}  // namespace

std::vector<fs::path> run(const ExperimentConfig& config, const RunOptions& opts) {
  validate(config);
  RunContext ctx(config, opts);
  std::error_code ec;
  fs::create_directories(ctx.dir, ec);
  if (ec) throw RunError("cannot create output directory " + ctx.dir.string());
  ctx.log(std::string(to_string(config.experiment)) + " -> " + ctx.dir.string() +
          " (" + std::to_string(ctx.workers) + " workers)");
  switch (config.experiment) {
    case ExperimentKind::fv_stationary:
      run_fv_stationary(ctx, false);
      break;
    case ExperimentKind::fv_sweep:
      run_fv_stationary(ctx, true);
      break;
    case ExperimentKind::green_check:
      run_green_check(ctx);
      break;
    case ExperimentKind::yaglom:
      run_yaglom(ctx);
      break;
    case ExperimentKind::survival:
      run_survival(ctx);
      break;
    case ExperimentKind::validate_kernel:
      run_validate_kernel(ctx);
      break;
    case ExperimentKind::qsd_table:
      run_qsd_table(ctx);
      break;
    case ExperimentKind::nbbm_speed:
      run_nbbm_speed(ctx);
      break;
    case ExperimentKind::nbbm_profile:
      run_nbbm_profile(ctx);
      break;
  }
  return ctx.finish();
}

}  // namespace fvselect
