// Command-line front end: run experiments, re-emit figures, build energy tables and
// validate config files.
//
// Exit codes: 0 all asserted verdicts pass, 2 a statistical verdict failed, 1 error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lcross/experiments.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitStatFail = 2;

std::string default_output_dir() {
  if (const char* env = std::getenv(lcross::kOutputDirEnv); env && *env) return env;
  return "lcross-output";
}

void print_verdicts(const lcross::RunRecord& r) {
  for (const auto& v : r.verdicts) {
    const char* tag = v.asserted ? (v.passed ? "PASS" : "FAIL") : (v.passed ? "info" : "note");
    std::cout << tag << "  " << v.name << "  value=" << v.value << "  threshold=" << v.threshold;
    if (!v.detail.empty()) std::cout << "  (" << v.detail << ")";
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level crossings of random matrix pencils"};
  app.require_subcommand(1);

  std::string config_path, output, record_path;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool no_resume = false, allow_large_n = false, quiet = false;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "Config file (key = value per line)")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "Override master_seed");
  auto* threads_opt = run->add_option("--threads", threads, "Worker threads (0 = all cores)");
  auto* output_opt = run->add_option("--output", output, "Output directory");
  run->add_flag("--no-resume", no_resume, "Discard checkpoints of an interrupted run");
  run->add_flag("--allow-large-n", allow_large_n, "Lift the n <= 25 cap for crossing experiments");
  run->add_flag("--quiet", quiet, "Do not print progress");

  auto* figures = app.add_subcommand("figures", "Re-emit SVG figures from a record.json");
  figures->add_option("--record", record_path, "Path to record.json")->required()->check(CLI::ExistingFile);
  auto* fig_output = figures->add_option("--output", output, "Directory for figures (default: next to the record)");

  double q_eps = 0.05, tol = 1e-5;
  int points = 20;
  auto* table = app.add_subcommand("energy-table", "Tabulate the elliptic-law log energy G(q)");
  table->add_option("--q-eps", q_eps, "Bulk cutoff: grid covers q in [0, 1 - eps]");
  table->add_option("--points", points, "Grid points");
  table->add_option("--tol", tol, "Quadrature tolerance");
  auto* table_threads = table->add_option("--threads", threads, "Worker threads");
  auto* table_output = table->add_option("--output", output, "Output directory");

  auto* check = app.add_subcommand("validate-config", "Parse and validate a config file without sampling");
  check->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = lcross::load_config(config_path);
      if (*seed_opt) cfg.master_seed = seed;
      if (*threads_opt) cfg.threads = threads;
      if (allow_large_n) cfg.allow_large_n = true;
      if (*output_opt)
        cfg.output_dir = output;
      else if (cfg.output_dir.empty())
        cfg.output_dir = default_output_dir();
      lcross::RunOptions opts;
      opts.resume = !no_resume;
      if (!quiet)
        opts.progress = [](std::size_t done, std::size_t total) {
          std::cerr << "\r" << done << "/" << total << " trials" << std::flush;
          if (done == total) std::cerr << '\n';
        };
      const auto rec = lcross::run(cfg, opts);
      std::cout << "experiment " << lcross::to_string(cfg.experiment) << "  config " << rec.config_hash << "  "
                << rec.wall_seconds << " s";
      if (rec.resumed_items) std::cout << "  (resumed " << rec.resumed_items << " trials)";
      std::cout << '\n';
      print_verdicts(rec);
      std::cout << "outputs in " << cfg.output_dir << '\n';
      return rec.all_passed() ? kExitPass : kExitStatFail;
    }
    if (*figures) {
      const auto record = lcross::load_record(record_path);
      const std::string dir =
          *fig_output ? output : std::filesystem::path(record_path).parent_path().string();
      for (const auto& f : lcross::emit_figures(record, dir.empty() ? "." : dir)) std::cout << f << '\n';
      return kExitPass;
    }
    if (*table) {
      const auto t = lcross::build_energy_table(lcross::default_q_grid(q_eps, points), tol,
                                                *table_threads ? threads : 0);
      const std::string dir = *table_output ? output : default_output_dir();
      std::filesystem::create_directories(dir);
      const auto path = std::filesystem::path(dir) / "energy_table.csv";
      std::ofstream f(path);
      if (!f) throw lcross::IoError("cannot open " + path.string());
      lcross::write_energy_table_csv(t, f);
      lcross::write_energy_table_csv(t, std::cout);
      std::cerr << "wrote " << path.string() << '\n';
      return kExitPass;
    }
    if (*check) {
      const auto cfg = lcross::load_config(config_path);
      lcross::validate_config(cfg);
      std::cout << lcross::canonical_config_text(cfg) << "# config hash " << lcross::config_hash(cfg) << '\n';
      return kExitPass;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
