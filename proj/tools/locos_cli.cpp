#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "locos/experiment.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw locos::Error("cannot write '" + p.string() + "'");
  out << body;
}

locos::Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw locos::Error("cannot read report '" + path + "'");
  try {
    return locos::Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw locos::Error(path + ": " + e.what());
  }
}

void emit(const locos::Json& report, const std::vector<std::pair<std::string, std::string>>& csv,
          const std::string& out_dir, const std::string& name) {
  std::string body = report.dump(2) + "\n";
  if (out_dir.empty()) {
    std::cout << body;
    return;
  }
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / (name + ".json"), body);
  for (const auto& [file, text] : csv) write_file(fs::path(out_dir) / file, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"locos: local orthonormal systems over filtrations"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool timing = false;
  app.add_option("--config", config_path, "flat key = value config file");
  auto* seed_opt = app.add_option("--seed", seed, "seed (overrides the config)");
  app.add_option("--jobs", jobs, "worker threads for independent trials")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "directory for the JSON report and CSV logs (stdout if omitted)");
  app.add_flag("--timing", timing, "add wall-clock seconds to the report");

  for (const auto& op : locos::operation_names()) app.add_subcommand(op, "run the " + op + " experiment");
  std::vector<std::string> merge_inputs;
  auto* merge = app.add_subcommand("report-merge", "max-merge reports of one configuration");
  merge->add_option("reports", merge_inputs, "JSON reports")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (merge->parsed()) {
      std::vector<locos::Json> reps;
      for (const auto& p : merge_inputs) reps.push_back(read_json(p));
      emit(locos::merge_reports(reps), {}, out_dir, "merged");
      return 0;
    }
    auto op = app.get_subcommands().front()->get_name();
    locos::Config cfg = config_path.empty() ? locos::Config{} : locos::Config::load(config_path);
    if (!*seed_opt) seed = static_cast<std::uint64_t>(cfg.field("seed", [&] {
      auto v = cfg.integer("seed", 0);
      if (v < 0) throw locos::Error("must be non-negative");
      return v;
    }));
    locos::RunOptions ro;
    ro.jobs = jobs;
    ro.timing = timing;
    auto res = locos::run_experiment(op, cfg, seed, ro);
    emit(res.report, res.csv, out_dir, op);
    return 0;
  } catch (const locos::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const locos::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
