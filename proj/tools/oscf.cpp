// oscf: run falsification experiments, seed sweeps and matrix exports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "oscf/experiment.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw oscf::ConfigError("--seeds: not a seed: " + item);
    }
  }
  if (out.empty()) throw oscf::ConfigError("--seeds: at least one seed is required");
  return out;
}

// Leaves error_<seed>.json (message, config, partial trace when available)
// next to where the run outputs would have gone.
void write_failure(const oscf::ExperimentConfig& cfg, const std::exception& e) {
  try {
    nlohmann::json j = {{"error", e.what()}, {"seed", cfg.seed}, {"config", cfg.to_json()}};
    if (const auto* sim = dynamic_cast<const oscf::SimulationError*>(&e)) {
      j["partial_trace_rows"] = sim->partial().size();
      const oscf::Experiment exp = oscf::build_experiment(cfg);
      j["partial_trace_csv"] = oscf::trace_to_csv(exp, sim->partial());
    }
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream(std::filesystem::path(cfg.out_dir) / ("error_" + std::to_string(cfg.seed) + ".json")) << j.dump(2)
                                                                                                      << "\n";
  } catch (const std::exception&) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oscillation-property falsification"};
  app.require_subcommand(1);

  std::string target;
  std::int64_t seed = -1;
  std::int64_t points = -1;
  std::string out;
  std::string seeds;
  unsigned threads = 0;

  CLI::App* run = app.add_subcommand("run", "Run one exploration");
  run->add_option("config", target, "Preset (exp1, exp2, exp3) or JSON config path")->required();
  run->add_option("--seed", seed, "RNG seed");
  run->add_option("--points", points, "Tree size budget");
  run->add_option("--out", out, "Output directory");

  CLI::App* matrix = app.add_subcommand("matrix", "Write the abstraction and its transition matrix");
  matrix->add_option("config", target, "Preset or JSON config path")->required();
  matrix->add_option("--out", out, "Output directory");

  CLI::App* bat = app.add_subcommand("batch", "Run several seeds");
  bat->add_option("config", target, "Preset or JSON config path")->required();
  bat->add_option("--seeds", seeds, "Comma-separated seeds")->required();
  bat->add_option("--points", points, "Tree size budget");
  bat->add_option("--out", out, "Output directory");
  bat->add_option("--threads", threads, "Parallel runs (0: hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    oscf::ExperimentConfig cfg = oscf::load_config(target);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (points > 0) cfg.points = static_cast<std::size_t>(points);
    if (!out.empty()) cfg.out_dir = out;

    if (*run) {
      const oscf::Experiment exp = oscf::build_experiment(cfg);
      oscf::RunResult r;
      try {
        r = oscf::run_experiment(exp);
      } catch (const oscf::ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        write_failure(cfg, e);
        return 2;
      }
      oscf::write_run(cfg.out_dir, r);
      const oscf::Verdict& v = r.report.verdict;
      std::printf("seed %llu: %s", static_cast<unsigned long long>(r.report.seed),
                  oscf::verdict_name(v.kind).c_str());
      if (v.kind == oscf::Verdict::Kind::Falsified) std::printf(" at t=%.2f z=%.4f", v.witness_time, v.exit_value);
      std::printf(" (tree %zu, %.2f s) -> %s\n", r.report.tree_size, r.report.wall_seconds, cfg.out_dir.c_str());
      return 0;
    }
    if (*matrix) {
      const oscf::Experiment exp = oscf::build_experiment(cfg);
      const std::string csv = oscf::matrix_csv(exp.system, exp.matrix);
      if (out.empty()) {
        std::cout << exp.system.edge_list() << "\n" << csv;
      } else {
        std::filesystem::create_directories(out);
        std::ofstream(std::filesystem::path(out) / "matrix.csv", std::ios::binary) << csv;
        std::ofstream(std::filesystem::path(out) / "edges.txt", std::ios::binary) << exp.system.edge_list();
        std::printf("wrote %s/matrix.csv and %s/edges.txt\n", out.c_str(), out.c_str());
      }
      return 0;
    }
    if (*bat) {
      const std::vector<std::uint64_t> list = parse_seeds(seeds);
      oscf::build_experiment(cfg);
      const oscf::BatchSummary s = oscf::batch(cfg, list, threads);
      for (const oscf::BatchEntry& e : s.runs) {
        if (e.ok) oscf::write_run(cfg.out_dir, e.result);
      }
      std::filesystem::create_directories(cfg.out_dir);
      std::ofstream(std::filesystem::path(cfg.out_dir) / "batch.json", std::ios::binary) << s.to_json().dump(2) << "\n";
      std::cout << s.to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const oscf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
