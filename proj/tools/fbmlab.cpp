#include "fbmlab/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace fbmlab;

namespace {

constexpr int kOk = 0, kValidation = 2, kDivergence = 3, kFailure = 1;

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbmlab: fBm-driven SDE experiments"};
  app.require_subcommand(1);

  std::string config_path, run_dir, kind;
  auto* run = app.add_subcommand("run", "run the experiment described by a config");
  run->add_option("config", config_path, "config file")->required();
  auto* list = app.add_subcommand("list", "list registered experiments");
  auto* plot = app.add_subcommand("plot", "emit plot-ready CSV from a run directory");
  plot->add_option("run_dir", run_dir, "run directory")->required();
  plot->add_option("kind", kind, "series or loglog")->required();
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (*list) {
    for (const auto& e : list_experiments()) {
      std::cout << e.name << "  [criterion " << e.criterion << "]  " << e.claim << "\n    params:";
      for (const auto& p : e.params) std::cout << " " << p;
      for (const auto& s : e.field_sections) std::cout << " [" << s << "]";
      std::cout << "\n";
    }
    return kOk;
  }
  if (*validate)
    return guarded([&] {
      validate_config(Config::load(config_path));
      std::cout << "ok\n";
      return kOk;
    });
  if (*plot)
    return guarded([&] {
      std::cout << emit_plot_data(run_dir, kind).string() << "\n";
      return kOk;
    });
  return guarded([&] {
    const RunSummary s = run_experiment(Config::load(config_path));
    std::cout << "experiment " << s.experiment << "\n"
              << "directory  " << s.directory.string() << "\n"
              << "digest     " << s.digest << "\n"
              << "wall       " << s.wall_seconds << " s\n"
              << "headline   " << s.headline.dump() << "\n";
    return s.divergence ? kDivergence : kOk;
  });
}
