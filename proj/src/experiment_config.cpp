#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fvselect/csv.hpp"
#include "fvselect/experiment.hpp"

namespace fvselect {

namespace {

using nlohmann::json;

struct NamedKind {
  ExperimentKind kind;
  std::string_view name;
};

constexpr NamedKind kKinds[] = {
    {ExperimentKind::fv_stationary, "fv-stationary"},
    {ExperimentKind::fv_sweep, "fv-sweep"},
    {ExperimentKind::yaglom, "yaglom"},
    {ExperimentKind::survival, "survival"},
    {ExperimentKind::nbbm_speed, "nbbm-speed"},
    {ExperimentKind::nbbm_profile, "nbbm-profile"},
    {ExperimentKind::qsd_table, "qsd-table"},
    {ExperimentKind::validate_kernel, "validate-kernel"},
    {ExperimentKind::green_check, "green-check"},
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<json> to_number(std::string_view s) {
  // plain integers stay exact; seeds use the full 64 bits
  std::uint64_t u = 0;
  const auto ures = std::from_chars(s.data(), s.data() + s.size(), u);
  if (ures.ec == std::errc() && ures.ptr == s.data() + s.size()) return json(u);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return json(v);
}

/// One configuration entry with a location for diagnostics.
struct Entry {
  std::string key;
  json value;
  std::string where;
};

json kv_value(const std::string& key, std::string raw) {
  if (raw.size() >= 2 && (raw.front() == '"' || raw.front() == '\'') &&
      raw.back() == raw.front()) {
    return raw.substr(1, raw.size() - 2);
  }
  if (key == "initial" || key == "output_dir" || key == "experiment") return raw;
  if (!raw.empty() && raw.front() == '[' && raw.back() == ']') {
    raw = raw.substr(1, raw.size() - 2);
  } else if (raw.find(',') == std::string::npos) {
    if (auto v = to_number(raw)) return *v;
    return raw;
  }
  json arr = json::array();
  std::istringstream in(raw);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    if (auto v = to_number(tok)) {
      arr.push_back(*v);
    } else {
      arr.push_back(tok);
    }
  }
  return arr;
}

std::vector<Entry> parse_entries(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<Entry> out;
  if (first != std::string_view::npos && text[first] == '{') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top-level JSON must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      out.push_back({it.key(), it.value(), "field '" + it.key() + "'"});
    }
    return out;
  }
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) {
      throw ConfigError("config " + where + ": expected 'key = value', got '" + line + "'");
    }
    auto key = trim(std::string_view(line).substr(0, eq));
    auto raw = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("config " + where + ": missing key");
    out.push_back({key, kv_value(key, raw), where + " ('" + key + "')"});
  }
  return out;
}

[[noreturn]] void bad(const Entry& e, const std::string& what) {
  throw ConfigError("config " + e.where + ": " + what);
}

double as_double(const Entry& e, const json& v) {
  if (!v.is_number()) bad(e, "expected a number");
  return v.get<double>();
}

double as_double(const Entry& e) { return as_double(e, e.value); }

std::uint64_t as_count(const Entry& e, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  if (v.is_string()) {
    std::uint64_t out = 0;
    const auto& s = v.get_ref<const std::string&>();
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return out;
  }
  bad(e, "expected a non-negative integer");
}

std::uint64_t as_count(const Entry& e) { return as_count(e, e.value); }

std::string as_string(const Entry& e) {
  if (!e.value.is_string()) bad(e, "expected a string");
  return e.value.get<std::string>();
}

std::vector<double> as_doubles(const Entry& e) {
  std::vector<double> out;
  if (e.value.is_array()) {
    for (const auto& v : e.value) out.push_back(as_double(e, v));
  } else {
    out.push_back(as_double(e));
  }
  return out;
}

std::vector<std::size_t> as_counts(const Entry& e) {
  std::vector<std::size_t> out;
  if (e.value.is_array()) {
    for (const auto& v : e.value) out.push_back(as_count(e, v));
  } else {
    out.push_back(as_count(e));
  }
  return out;
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto& nk : kKinds) {
    if (nk.kind == k) return nk.name;
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment(std::string_view name) {
  for (const auto& nk : kKinds) {
    if (nk.name == name) return nk.kind;
  }
  return std::nullopt;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& nk : kKinds) v.emplace_back(nk.name);
    return v;
  }();
  return names;
}

InitialSpec InitialSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("initial: expected qsd:<lambda>, point:<x> or list:<x,...>");
  }
  const auto kind = trim(text.substr(0, colon));
  const auto rest = trim(text.substr(colon + 1));
  InitialSpec spec;
  if (kind == "qsd" || kind == "point") {
    const auto v = to_number(rest);
    if (!v) throw ConfigError("initial: '" + rest + "' is not a number");
    spec.kind = kind == "qsd" ? Kind::qsd : Kind::point;
    spec.value = *v;
    if (spec.kind == Kind::qsd && (!(spec.value > 0.0) || spec.value > 0.5)) {
      throw ConfigError("initial: QSD lambda must lie in (0, 1/2]");
    }
    if (spec.kind == Kind::point && !(spec.value > 0.0)) {
      throw ConfigError("initial: point must be > 0");
    }
    return spec;
  }
  if (kind == "list") {
    spec.kind = Kind::list;
    std::istringstream in(rest);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      const auto v = to_number(trim(tok));
      if (!v || !(*v > 0.0)) throw ConfigError("initial: list entries must be positive numbers");
      spec.points.push_back(*v);
    }
    if (spec.points.empty()) throw ConfigError("initial: empty list");
    return spec;
  }
  throw ConfigError("initial: unknown kind '" + kind + "'");
}

std::string InitialSpec::to_string() const {
  switch (kind) {
    case Kind::qsd:
      return "qsd:" + format_double(value);
    case Kind::point:
      return "point:" + format_double(value);
    case Kind::list: {
      std::string s = "list:";
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) s += ',';
        s += format_double(points[i]);
      }
      return s;
    }
  }
  return {};
}

Sampler InitialSpec::sampler() const {
  switch (kind) {
    case Kind::qsd:
      return qsd_sampler(make_qsd(value));
    case Kind::point:
      return point_sampler(value);
    case Kind::list:
      return list_sampler(points);
  }
  return {};
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.output_dir = "run-" + std::string(to_string(kind));
  switch (kind) {
    case ExperimentKind::fv_stationary:
    case ExperimentKind::green_check:
      c.n_particles = {100};
      break;
    case ExperimentKind::fv_sweep:
      c.n_particles = {20, 50, 100, 200};
      c.replicas = 8;  // single realizations of W1 are too noisy to rank N
      break;
    case ExperimentKind::yaglom:
      c.initial = InitialSpec::parse("point:1");
      c.times = {2.0, 5.0, 10.0};
      c.paths = 10'000'000;
      c.contrast_paths = 1'000'000;
      c.dt = 1e-2;
      c.horizon = 10.0;
      c.burn_in = 0.0;
      break;
    case ExperimentKind::survival:
      c.initial = InitialSpec::parse("point:1");
      c.times = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
      c.paths = 1'000'000;
      c.dt = 1e-2;
      c.horizon = 12.0;
      c.burn_in = 0.0;
      break;
    case ExperimentKind::nbbm_speed:
      c.n_particles = {20, 50, 100, 200};
      c.horizon = 200.0;
      c.burn_in = 100.0;
      c.replicas = 8;
      break;
    case ExperimentKind::nbbm_profile:
      c.n_particles = {200};
      c.horizon = 200.0;
      c.burn_in = 50.0;
      break;
    case ExperimentKind::qsd_table:
      c.lambdas = {0.125, 0.25, 0.375, 0.5};
      c.paths = 1'000'000;
      c.horizon = 1.0;
      c.burn_in = 0.0;
      break;
    case ExperimentKind::validate_kernel:
      c.paths = 1'000'000;
      c.horizon = 1.0;
      c.burn_in = 0.0;
      c.x0 = 1.0;
      break;
  }
  return c;
}

ExperimentConfig parse_config(std::string_view text, ExperimentKind kind) {
  auto c = default_config(kind);
  for (const auto& e : parse_entries(text)) {
    const auto& k = e.key;
    if (k == "experiment") {
      const auto name = as_string(e);
      if (parse_experiment(name) != kind) {
        bad(e, "experiment '" + name + "' does not match the requested '" +
                   std::string(to_string(kind)) + "'");
      }
    } else if (k == "n_particles") {
      c.n_particles = as_counts(e);
    } else if (k == "dt") {
      c.dt = as_double(e);
    } else if (k == "horizon") {
      c.horizon = as_double(e);
    } else if (k == "burn_in") {
      c.burn_in = as_double(e);
    } else if (k == "initial") {
      try {
        c.initial = InitialSpec::parse(as_string(e));
      } catch (const ConfigError& err) {
        bad(e, err.what());
      }
    } else if (k == "seed") {
      c.seed = as_count(e);
    } else if (k == "replicas") {
      c.replicas = as_count(e);
    } else if (k == "output_dir") {
      c.output_dir = as_string(e);
    } else if (k == "lambdas") {
      c.lambdas = as_doubles(e);
    } else if (k == "times") {
      c.times = as_doubles(e);
    } else if (k == "paths") {
      c.paths = as_count(e);
    } else if (k == "contrast_paths") {
      c.contrast_paths = as_count(e);
    } else if (k == "contrast_lambda") {
      c.contrast_lambda = as_double(e);
    } else if (k == "record_interval") {
      c.record_interval = as_double(e);
    } else if (k == "n_batches") {
      c.n_batches = as_count(e);
    } else if (k == "x0") {
      c.x0 = as_double(e);
    } else {
      bad(e, "unknown key '" + k + "'");
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file,
                             ExperimentKind kind) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), kind);
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
  };
  if (!(c.dt > 0.0)) fail("dt", "must be > 0");
  if (!(c.burn_in >= 0.0)) fail("burn_in", "must be >= 0");
  if (!(c.horizon > c.burn_in)) fail("horizon", "must exceed burn_in");
  if (c.replicas < 1) fail("replicas", "must be >= 1");
  if (c.output_dir.empty()) fail("output_dir", "must not be empty");
  switch (c.experiment) {
    case ExperimentKind::fv_stationary:
    case ExperimentKind::fv_sweep:
    case ExperimentKind::green_check:
    case ExperimentKind::nbbm_speed:
    case ExperimentKind::nbbm_profile:
      if (c.n_particles.empty()) fail("n_particles", "must list at least one N");
      for (auto n : c.n_particles) {
        if (n < 2) fail("n_particles", "every N must be >= 2");
      }
      if (!(c.record_interval > 0.0)) fail("record_interval", "must be > 0");
      if (c.n_batches < 20) fail("n_batches", "must be >= 20");
      break;
    default:
      break;
  }
  if ((c.experiment == ExperimentKind::nbbm_speed ||
       c.experiment == ExperimentKind::nbbm_profile) &&
      c.dt > 0.01) {
    fail("dt", "N-BBM needs dt <= 0.01");
  }
  if (c.experiment == ExperimentKind::yaglom ||
      c.experiment == ExperimentKind::survival) {
    if (c.times.empty()) fail("times", "must list at least one time");
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      if (!(c.times[i] > 0.0)) fail("times", "must be > 0");
      if (i && !(c.times[i] > c.times[i - 1])) fail("times", "must be increasing");
    }
    if (c.paths < 1000) fail("paths", "must be >= 1000");
  }
  if (c.experiment == ExperimentKind::yaglom) {
    if (c.contrast_paths < 1000) fail("contrast_paths", "must be >= 1000");
    if (!(c.contrast_lambda > 0.0) || c.contrast_lambda > 0.5) {
      fail("contrast_lambda", "must lie in (0, 1/2]");
    }
  }
  if (c.experiment == ExperimentKind::qsd_table) {
    if (c.lambdas.empty()) fail("lambdas", "must list at least one lambda");
    for (double l : c.lambdas) {
      if (!(l > 0.0) || l > 0.5) fail("lambdas", "every lambda must lie in (0, 1/2]");
    }
    if (c.paths < 1000) fail("paths", "must be >= 1000");
  }
  if (c.experiment == ExperimentKind::validate_kernel) {
    if (!(c.x0 > 0.0)) fail("x0", "must be > 0");
    if (c.paths < 1000) fail("paths", "must be >= 1000");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = std::string(fvselect::to_string(experiment));
  j["n_particles"] = n_particles;
  j["dt"] = dt;
  j["horizon"] = horizon;
  j["burn_in"] = burn_in;
  j["initial"] = initial.to_string();
  j["seed"] = seed;
  j["replicas"] = replicas;
  j["output_dir"] = output_dir;
  j["lambdas"] = lambdas;
  j["times"] = times;
  j["paths"] = paths;
  j["contrast_paths"] = contrast_paths;
  j["contrast_lambda"] = contrast_lambda;
  j["record_interval"] = record_interval;
  j["n_batches"] = n_batches;
  j["x0"] = x0;
  return j;
}

}  // namespace fvselect
