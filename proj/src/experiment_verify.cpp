#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fvselect/csv.hpp"
#include "fvselect/experiment.hpp"
#include "fvselect/nbbm.hpp"

namespace fvselect {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Checker {
 public:
  explicit Checker(VerifyReport& r) : report_(r) {}

  void add(std::string name, bool ok, std::string detail) {
    report_.predicates.push_back({std::move(name), ok, std::move(detail)});
  }

 private:
  VerifyReport& report_;
};

std::string num(double v) { return format_double(v); }

/// Rows of an fv table grouped by N (ascending), averaged over replicas.
struct PerN {
  double n = 0.0;
  double lambda = 0.0, lambda_se = 0.0;
  double w1 = 0.0;
  double bound = 0.0;
};

std::vector<PerN> fv_per_n(const CsvTable& t) {
  std::map<double, std::vector<std::size_t>> by_n;
  for (std::size_t i = 0; i < t.rows(); ++i) by_n[t.number(i, "N")].push_back(i);
  std::vector<PerN> out;
  for (const auto& [n, idx] : by_n) {
    PerN p;
    p.n = n;
    double se2 = 0.0;
    for (auto i : idx) {
      p.lambda += t.number(i, "lambda_hat");
      se2 += std::pow(t.number(i, "lambda_se"), 2);
      p.w1 += t.number(i, "w1_to_pimin");
      p.bound = t.number(i, "lambda_lower_bound");
    }
    const double k = static_cast<double>(idx.size());
    p.lambda /= k;
    p.w1 /= k;
    p.lambda_se = std::sqrt(se2) / k;
    out.push_back(p);
  }
  return out;
}

void check_fv(const CsvTable& t, Checker& ck, bool sweep) {
  // Lower bound lambda_min / iota_N on the jump rate, row by row.
  {
    bool ok = t.rows() > 0;
    std::ostringstream d;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double l = t.number(i, "lambda_hat"), se = t.number(i, "lambda_se");
      const double b = t.number(i, "lambda_lower_bound");
      const bool row_ok = l >= b - 3.0 * se;
      ok = ok && row_ok;
      d << "N=" << t.cell(i, "N") << ": " << num(l) << (row_ok ? " >= " : " < ")
        << num(b) << " - 3*" << num(se) << "; ";
    }
    ck.add("lambda_lower_bound", ok, d.str());
  }

  // Identities: at N = 100 when present, otherwise every row.
  std::vector<std::size_t> id_rows;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    if (t.number(i, "N") == 100.0) id_rows.push_back(i);
  }
  if (id_rows.empty()) {
    for (std::size_t i = 0; i < t.rows(); ++i) id_rows.push_back(i);
  }
  for (const char* col : {"interjump_z", "g1_z", "green_z", "split_half_z"}) {
    bool ok = !id_rows.empty();
    std::ostringstream d;
    for (auto i : id_rows) {
      const double z = t.number(i, col);
      ok = ok && std::abs(z) <= 3.0;
      d << "N=" << t.cell(i, "N") << " replica " << t.cell(i, "replica") << ": z="
        << num(z) << "; ";
    }
    std::string name = col;
    name = name.substr(0, name.size() - 2) + "_identity";
    if (name == "split_half_identity") name = "split_half_agreement";
    ck.add(name, ok, d.str());
  }
  if (!sweep) return;

  const auto per_n = fv_per_n(t);
  if (per_n.size() < 2) {
    ck.add("selection_monotone_lambda", false, "needs at least two values of N");
    return;
  }
  {
    // Distance to 1/2 may not grow by more than 3 combined SE from one N to the next.
    bool ok = true;
    std::ostringstream d;
    for (std::size_t k = 1; k < per_n.size(); ++k) {
      const auto& a = per_n[k - 1];
      const auto& b = per_n[k];
      const double se = std::hypot(a.lambda_se, b.lambda_se);
      const bool step = std::abs(b.lambda - 0.5) <= std::abs(a.lambda - 0.5) + 3.0 * se;
      ok = ok && step;
      d << "N=" << num(a.n) << "->" << num(b.n) << ": " << num(a.lambda) << "->"
        << num(b.lambda) << (step ? " ok" : " moved away") << "; ";
    }
    ck.add("selection_monotone_lambda", ok, d.str());
  }
  const auto& last = per_n.back();
  ck.add("selection_lambda_near_half",
         std::abs(last.lambda - 0.5) < 0.05,
         "N=" + num(last.n) + ": |" + num(last.lambda) + " - 0.5| < 0.05");
  {
    bool ok = true;
    std::ostringstream d;
    for (std::size_t k = 1; k < per_n.size(); ++k) {
      ok = ok && per_n[k].w1 < per_n[k - 1].w1;
    }
    for (const auto& p : per_n) d << "N=" << num(p.n) << ": " << num(p.w1) << "; ";
    ck.add("selection_w1_decreasing", ok, d.str());
  }
  ck.add("selection_w1_small", last.w1 < 0.1,
         "N=" + num(last.n) + ": W1 " + num(last.w1) + " < 0.1");
}

void check_green(const CsvTable& t, Checker& ck) {
  bool ok = t.rows() > 0;
  std::ostringstream d;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const double z = t.number(i, "z_score");
    ok = ok && std::abs(z) <= 3.0;
    d << "N=" << t.cell(i, "N") << " " << t.cell(i, "test_function") << ": z=" << num(z)
      << "; ";
  }
  ck.add("green_identity", ok, d.str());
}

void check_yaglom(const CsvTable& t, Checker& ck) {
  std::map<std::string, std::vector<std::size_t>> by_start;
  std::vector<std::string> starts;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const auto& s = t.cell(i, "start");
    if (!by_start.count(s)) starts.push_back(s);
    by_start[s].push_back(i);
  }
  if (starts.size() != 2) {
    ck.add("yaglom_rows", false, "expected a main and a contrast start");
    return;
  }
  const auto& main = by_start[starts[0]];
  {
    bool ok = true;
    std::ostringstream d;
    for (std::size_t k = 0; k < main.size(); ++k) {
      const double w = t.number(main[k], "w1_to_pimin");
      if (k) ok = ok && w < t.number(main[k - 1], "w1_to_pimin");
      d << "t=" << t.cell(main[k], "t") << ": " << num(w) << "; ";
    }
    ck.add("yaglom_w1_decreasing", ok, d.str());
  }
  const double w_last = t.number(main.back(), "w1_to_pimin");
  ck.add("yaglom_w1_small", w_last < 0.05,
         "t=" + t.cell(main.back(), "t") + ": W1 " + num(w_last) + " < 0.05");
  bool stays = true, away = true;
  std::ostringstream d;
  for (auto i : by_start[starts[1]]) {
    const double own = t.number(i, "w1_to_start_qsd");
    const double pm = t.number(i, "w1_to_pimin");
    stays = stays && own < 0.02;
    away = away && pm > 0.1;
    d << "t=" << t.cell(i, "t") << ": own " << num(own) << ", pimin " << num(pm) << "; ";
  }
  ck.add("contrast_stays_at_qsd", stays, d.str());
  ck.add("contrast_away_from_pimin", away, d.str());
}

void check_survival(const CsvTable& t, Checker& ck) {
  bool ok = t.rows() > 0;
  std::ostringstream d;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const double s = t.number(i, "survival_hat"), se = t.number(i, "survival_se");
    const double a = t.number(i, "survival_analytic");
    const bool row = std::abs(s - a) <= 3.0 * se;
    ok = ok && row;
    d << "t=" << t.cell(i, "t") << ": " << num(s) << " vs " << num(a) << "; ";
  }
  ck.add("survival_matches_analytic", ok, d.str());
}

void check_kernel(const CsvTable& t, const CsvTable& h, Checker& ck) {
  bool corrected = true, detected = false;
  std::ostringstream d;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const double z = t.number(i, "z");
    d << "dt=" << t.cell(i, "dt") << " bridge " << t.cell(i, "bridge") << ": z=" << num(z)
      << "; ";
    if (t.cell(i, "bridge") == "on") {
      corrected = corrected && std::abs(z) <= 3.0;
    } else if (t.number(i, "dt") >= 1e-2) {
      detected = z > 3.0;
    }
  }
  ck.add("stepped_survival_matches", corrected, d.str());
  ck.add("uncorrected_bias_detected", detected, d.str());
  const double zm = (h.number(0, "mean_hat") - h.number(0, "mean_analytic")) /
                    h.number(0, "mean_se");
  const double zv = (h.number(0, "var_hat") - h.number(0, "var_analytic")) /
                    h.number(0, "var_se");
  ck.add("hitting_time_moments", std::abs(zm) <= 3.0 && std::abs(zv) <= 3.0,
         "mean z=" + num(zm) + ", variance z=" + num(zv));
}

void check_qsd_table(const CsvTable& t, Checker& ck) {
  bool norm = t.rows() > 0, mean = t.rows() > 0;
  std::ostringstream dn, dm;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const double z = t.number(i, "normalization");
    norm = norm && std::abs(z - 1.0) <= 1e-8;
    const double m = t.number(i, "sample_mean"), se = t.number(i, "sample_mean_se");
    const double a = t.number(i, "mean");
    mean = mean && std::abs(m - a) <= 3.0 * se;
    dn << "lambda=" << t.cell(i, "lambda") << ": " << num(z) << "; ";
    dm << "lambda=" << t.cell(i, "lambda") << ": " << num(m) << " vs " << num(a) << "; ";
  }
  ck.add("qsd_normalization", norm, dn.str());
  ck.add("qsd_sample_mean", mean, dm.str());
}

void check_nbbm_speed(const CsvTable& t, Checker& ck) {
  if (t.rows() == 0) {
    ck.add("nbbm_speed_rows", false, "empty summary");
    return;
  }
  bool mono = true, below = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const double v = t.number(i, "speed"), se = t.number(i, "speed_se");
    below = below && v < kMinWaveSpeed + 3.0 * se;
    if (i) {
      const double prev = t.number(i - 1, "speed");
      const double cse = std::hypot(se, t.number(i - 1, "speed_se"));
      mono = mono && v > prev - 3.0 * cse;
    }
    d << "N=" << t.cell(i, "N") << ": " << num(v) << " +- " << num(se) << "; ";
  }
  ck.add("nbbm_speed_monotone", mono, d.str());
  ck.add("nbbm_speed_below_sqrt2", below, d.str());
  const double last = t.number(t.rows() - 1, "speed");
  ck.add("nbbm_speed_large_N", last > 1.0,
         "N=" + t.cell(t.rows() - 1, "N") + ": " + num(last) + " > 1");
}

void check_nbbm_profile(const CsvTable& t, Checker& ck) {
  bool ok = t.rows() > 0;
  std::ostringstream d;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const double w = t.number(i, "w1_to_wave");
    ok = ok && w < 0.15;
    d << "N=" << t.cell(i, "N") << ": W1 " << num(w) << "; ";
  }
  ck.add("nbbm_profile_w1", ok, d.str());
}

std::vector<std::string> expected_files(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::fv_stationary:
      return {"fv_stationary.csv", "fv_xi_hist.csv", "fv_events.csv"};
    case ExperimentKind::fv_sweep:
      return {"fv_sweep.csv", "fv_xi_hist.csv"};
    case ExperimentKind::green_check:
      return {"green_check.csv"};
    case ExperimentKind::yaglom:
      return {"yaglom.csv"};
    case ExperimentKind::survival:
      return {"survival.csv"};
    case ExperimentKind::validate_kernel:
      return {"kernel.csv", "kernel_hitting.csv"};
    case ExperimentKind::qsd_table:
      return {"qsd_table.csv"};
    case ExperimentKind::nbbm_speed:
      return {"nbbm_speed.csv", "nbbm_speed_summary.csv", "nbbm_front.csv"};
    case ExperimentKind::nbbm_profile:
      return {"nbbm_profile.csv", "nbbm_profile_hist.csv"};
  }
  return {};
}

}  // namespace

nlohmann::json VerifyReport::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["passed"] = passed;
  j["missing_files"] = missing_files;
  json preds = json::array();
  for (const auto& p : predicates) {
    preds.push_back({{"name", p.name}, {"passed", p.passed}, {"detail", p.detail}});
  }
  j["predicates"] = preds;
  return j;
}

VerifyReport verify(const fs::path& run_dir) {
  VerifyReport report;
  Checker ck(report);
  const auto manifest_path = run_dir / "manifest.json";
  auto write = [&] {
    if (fs::is_directory(run_dir)) {
      std::ofstream out(run_dir / "verify.json", std::ios::binary);
      out << report.to_json().dump(2) << '\n';
    }
  };
  if (!fs::exists(manifest_path)) {
    report.missing_files.push_back("manifest.json");
    report.passed = false;
    write();
    return report;
  }
  ExperimentKind kind{};
  try {
    std::ifstream in(manifest_path, std::ios::binary);
    const auto m = json::parse(in);
    report.experiment = m.at("experiment").get<std::string>();
    const auto k = parse_experiment(report.experiment);
    if (!k) throw std::runtime_error("unknown experiment '" + report.experiment + "'");
    kind = *k;
  } catch (const std::exception& e) {
    ck.add("manifest_readable", false, e.what());
    report.passed = false;
    write();
    return report;
  }
  for (const auto& f : expected_files(kind)) {
    if (!fs::exists(run_dir / f)) report.missing_files.push_back(f);
  }
  if (!report.missing_files.empty()) {
    report.passed = false;
    write();
    return report;
  }
  auto table = [&](const char* name) { return CsvTable::read(run_dir / name); };
  try {
    switch (kind) {
      case ExperimentKind::fv_stationary:
        check_fv(table("fv_stationary.csv"), ck, false);
        break;
      case ExperimentKind::fv_sweep:
        check_fv(table("fv_sweep.csv"), ck, true);
        break;
      case ExperimentKind::green_check:
        check_green(table("green_check.csv"), ck);
        break;
      case ExperimentKind::yaglom:
        check_yaglom(table("yaglom.csv"), ck);
        break;
      case ExperimentKind::survival:
        check_survival(table("survival.csv"), ck);
        break;
      case ExperimentKind::validate_kernel:
        check_kernel(table("kernel.csv"), table("kernel_hitting.csv"), ck);
        break;
      case ExperimentKind::qsd_table:
        check_qsd_table(table("qsd_table.csv"), ck);
        break;
      case ExperimentKind::nbbm_speed:
        check_nbbm_speed(table("nbbm_speed_summary.csv"), ck);
        break;
      case ExperimentKind::nbbm_profile:
        check_nbbm_profile(table("nbbm_profile.csv"), ck);
        break;
    }
  } catch (const std::exception& e) {
    ck.add("csv_readable", false, e.what());
  }
  report.passed = !report.predicates.empty();
  for (const auto& p : report.predicates) report.passed = report.passed && p.passed;
  write();
  return report;
}

}  // namespace fvselect
