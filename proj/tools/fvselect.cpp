#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fvselect/experiment.hpp"

namespace {

int run_experiment(fvselect::ExperimentKind kind, const std::string& config_path,
                   std::optional<std::uint64_t> seed, const std::string& out,
                   std::size_t workers, bool quiet) {
  auto cfg = config_path.empty() ? fvselect::default_config(kind)
                                 : fvselect::load_config(config_path, kind);
  if (seed) cfg.seed = *seed;
  if (!out.empty()) cfg.output_dir = out;
  fvselect::validate(cfg);
  const auto files = fvselect::run(cfg, {workers, quiet});
  for (const auto& f : files) std::cout << f.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fleming-Viot / N-BBM selection experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FVSELECT_VERSION);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  bool quiet = false;
  std::optional<fvselect::ExperimentKind> chosen;

  for (const auto& name : fvselect::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "key = value or JSON config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "root seed (overrides the config)");
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--workers", workers, "worker threads (default FVSELECT_THREADS)");
    sub->add_flag("--quiet", quiet, "no progress on stderr");
    sub->callback([&, name] { chosen = fvselect::parse_experiment(name); });
  }

  std::string run_dir;
  auto* ver = app.add_subcommand("verify", "re-check the predicates of a run directory");
  ver->add_option("run_dir", run_dir, "directory written by a run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ver->parsed()) {
      const auto report = fvselect::verify(run_dir);
      std::cout << report.to_json().dump(2) << '\n';
      return report.passed ? 0 : 1;
    }
    return run_experiment(*chosen, config_path, seed, out, workers, quiet);
  } catch (const fvselect::ConfigError& e) {
    std::cerr << "fvselect: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fvselect: " << e.what() << '\n';
    return 3;
  }
}
