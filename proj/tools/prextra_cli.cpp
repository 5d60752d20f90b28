// Command-line driver: run, gen-data, validate, compare.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prextra/prextra.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  const prextra::RunConfig cfg = prextra::load_config(config_path);
  const prextra::RunResult res = prextra::run(cfg);
  std::cout << "algorithm:   " << prextra::algorithm_label(cfg.algorithm) << '\n'
            << "termination: " << prextra::to_string(res.termination) << '\n'
            << "iterations:  " << res.iterations << '\n'
            << "avg degree:  " << res.average_degree << '\n';
  if (!res.records.empty()) {
    const auto& last = res.records.back();
    std::cout << "final kkt:        " << prextra::io::format_double(last.kkt) << '\n'
              << "final consensus:  " << prextra::io::format_double(last.consensus) << '\n'
              << "final objective:  " << prextra::io::format_double(last.objective) << '\n';
  }
  if (!res.trajectory_path.empty()) std::cout << "trajectory:  " << res.trajectory_path << '\n';
  if (!res.summary_path.empty()) std::cout << "summary:     " << res.summary_path << '\n';
  if (res.termination == prextra::Termination::Failed) {
    std::cerr << "error: " << res.error << '\n';
    return 1;
  }
  return 0;
}

int cmd_gen_data(const std::string& recipe_path, const std::string& out_path) {
  std::ifstream in(recipe_path);
  if (!in) throw prextra::ConfigError("cannot open recipe '" + recipe_path + "'");
  const auto recipe = prextra::recipe_from_json(prextra::json::parse(in));
  const prextra::Matrix a = prextra::synthesize(recipe);
  if (std::filesystem::path(out_path).extension() == ".csv")
    prextra::io::write_csv_matrix(out_path, a);
  else
    prextra::io::write_mxa1(out_path, a);
  std::cout << "wrote " << a.rows() << "x" << a.cols() << " matrix to " << out_path << '\n';
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const prextra::RunConfig cfg = config_path.empty() ? prextra::RunConfig{} : prextra::load_config(config_path);
  const auto rep = prextra::validate(cfg);
  for (const auto& g : rep.groups) {
    std::cout << (g.passed ? "PASS " : "FAIL ") << g.name << ' ' << g.measured.dump();
    if (!g.detail.empty()) std::cout << "  (" << g.detail << ')';
    std::cout << '\n';
  }
  return rep.all_passed() ? 0 : 1;
}

int cmd_compare(const std::vector<std::string>& config_paths, std::string out_path) {
  std::vector<prextra::RunConfig> cfgs;
  for (const auto& p : config_paths) cfgs.push_back(prextra::load_config(p));
  const auto res = prextra::compare(cfgs);
  if (out_path.empty()) {
    const auto dir = cfgs.front().output_dir.empty() ? std::string(".") : cfgs.front().output_dir;
    std::filesystem::create_directories(dir);
    out_path = (std::filesystem::path(dir) / "compare.csv").string();
  }
  std::ofstream out(out_path);
  if (!out) throw prextra::FormatError("cannot write '" + out_path + "'");
  out << res.csv;
  int rc = 0;
  for (const auto& r : res.runs) {
    std::cout << prextra::algorithm_label(r.config.algorithm) << ": " << prextra::to_string(r.termination) << " after "
              << r.iterations << " iterations\n";
    if (r.termination == prextra::Termination::Failed) {
      std::cerr << "  error: " << r.error << '\n';
      rc = 1;
    }
  }
  std::cout << "merged trajectories: " << out_path << '\n';
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized proximal Riemannian EXTRA simulator"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run one simulation and write trajectory.csv + summary.json");
  run->add_option("--config", run_config, "JSON run configuration")->required()->check(CLI::ExistingFile);

  std::string recipe, data_out;
  auto* gen = app.add_subcommand("gen-data", "Synthesize a data matrix with a prescribed spectrum");
  gen->add_option("--recipe", recipe, "JSON recipe")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", data_out, "output file (.csv for text, MXA1 binary otherwise)")->required();

  std::string validate_config;
  auto* val = app.add_subcommand("validate", "Run the invariant checks for a configuration");
  val->add_option("--config", validate_config, "JSON run configuration (defaults if omitted)")
      ->check(CLI::ExistingFile);

  std::vector<std::string> compare_configs;
  std::string compare_out;
  auto* cmp = app.add_subcommand("compare", "Run several configurations on one instance and merge trajectories");
  cmp->add_option("--configs", compare_configs, "JSON run configurations")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", compare_out, "merged CSV path (default <output_dir>/compare.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_config);
    if (*gen) return cmd_gen_data(recipe, data_out);
    if (*val) return cmd_validate(validate_config);
    if (*cmp) return cmd_compare(compare_configs, compare_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
