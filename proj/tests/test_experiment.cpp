#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oscf/experiment.hpp"

using namespace oscf;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string error_of(const nlohmann::json& j) {
  try {
    ExperimentConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("presets carry the experiment numbers") {
  const double amp[] = {0.01, 0.1, 1.0};
  int i = 0;
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    CHECK(c.T_i == 7.3781);
    CHECK(c.delta == 0.05);
    CHECK(c.epsilon == 0.2);
    CHECK(c.h == 0.05);
    CHECK(c.points == 30000);
    REQUIRE(c.varied.size() == 1);
    CHECK(c.varied[0].name == "k1");
    CHECK(c.varied[0].box.lo == 1.8);
    CHECK(c.varied[0].box.hi == 2.2);
    CHECK(c.varied[0].input.hi == amp[i]);
    CHECK(c.varied[0].input.lo == -amp[i]);
    ++i;
  }
  CHECK(i == 3);
  CHECK_THROWS_AS(preset("exp4"), ConfigError);
}

TEST_CASE("config round-trips through JSON") {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    CHECK(ExperimentConfig::from_json(c.to_json()) == c);
  }
}

TEST_CASE("config errors name the offending field") {
  nlohmann::json j = preset("exp2").to_json();
  j["colour"] = 1;
  CHECK(error_of(j).find("config.colour") != std::string::npos);
  j = preset("exp2").to_json();
  j["property"]["epsilon"] = "wide";
  CHECK(error_of(j).find("config.property.epsilon") != std::string::npos);
  j = preset("exp2").to_json();
  j["varied"][0]["box"] = {1.0};
  CHECK(error_of(j).find("config.varied[0].box") != std::string::npos);
}

TEST_CASE("build rejects inconsistent configurations") {
  ExperimentConfig c = preset("exp2");
  c.varied[0].name = "k99";
  CHECK_THROWS_AS(build_experiment(c), ConfigError);
  c = preset("exp2");
  c.monitored = {"x9"};
  CHECK_THROWS_AS(build_experiment(c), ConfigError);
  c = preset("exp2");
  c.distance["nope"] = 1.0;
  CHECK_THROWS_AS(build_experiment(c), ConfigError);
  c = preset("exp2");
  c.target["s_NOWHERE"] = 1.0;
  CHECK_THROWS_AS(build_experiment(c), ConfigError);
  c = preset("exp2");
  c.plant = "pendulum";
  CHECK_THROWS_AS(build_experiment(c), ConfigError);
}

TEST_CASE("load_config reads presets and files") {
  CHECK(load_config("exp1") == preset("exp1"));
  const auto dir = std::filesystem::temp_directory_path() / "oscf_cfg_test";
  std::filesystem::create_directories(dir);
  ExperimentConfig c = preset("exp3");
  c.seed = 42;
  std::ofstream(dir / "c.json") << c.to_json().dump();
  CHECK(load_config((dir / "c.json").string()) == c);
  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trace CSV header is fixed") {
  const Experiment e = build_experiment(preset("exp2"));
  CHECK(trace_csv_header(e) == "seq,t,location,event,x1,x2,x3,x4,x5,x6,x7,z1,k1,c,p,u1\n");
}

TEST_CASE("report and trace agree on the falsification time") {
  const RunResult r = run_experiment(preset("exp2"));
  REQUIRE(r.report.verdict.kind == Verdict::Kind::Falsified);
  std::istringstream in(r.trace_csv);
  std::string line;
  std::getline(in, line);
  std::size_t row = 0;
  double t_jump = -1.0;
  while (std::getline(in, line)) {
    if (line.find("jump:OSC->INIT") != std::string::npos || line.find("jump:STD->INIT") != std::string::npos) {
      std::stringstream ls(line);
      std::string seq, t;
      std::getline(ls, seq, ',');
      std::getline(ls, t, ',');
      t_jump = std::stod(t);
      row = std::stoul(seq);
      break;
    }
  }
  CHECK(t_jump == r.report.verdict.witness_time);
  CHECK(row == r.report.verdict.exit_entry);
  CHECK(r.report_json["verdict"]["witness_time"] == r.report.verdict.witness_time);
}

TEST_CASE("identical config and seed give identical files") {
  ExperimentConfig c = preset("exp1");
  c.points = 2000;
  const auto root = std::filesystem::temp_directory_path() / "oscf_det_test";
  write_run((root / "a").string(), run_experiment(c));
  write_run((root / "b").string(), run_experiment(c));
  for (const char* f : {"trace_0.csv", "report_0.json"}) {
    const std::string a = slurp(root / "a" / f);
    CHECK(!a.empty());
    CHECK(a == slurp(root / "b" / f));
  }
  CHECK(std::filesystem::exists(root / "a" / "timing_0.json"));
  std::filesystem::remove_all(root);
}

TEST_CASE("batch over three exp2 seeds") {
  const BatchSummary s = batch(preset("exp2"), {0, 1, 2});
  CHECK(s.runs.size() == 3);
  CHECK(s.falsified >= 2);
  CHECK(s.falsification_rate == doctest::Approx(static_cast<double>(s.falsified) / 3.0));
  CHECK(s.to_json()["runs"].size() == 3);
  CHECK_THROWS_AS(batch(preset("exp2"), {}), ConfigError);
}

TEST_CASE("single-seed batch equals the single run") {
  ExperimentConfig c = preset("exp2");
  c.seed = 7;
  const RunResult r = run_experiment(c);
  const BatchSummary s = batch(preset("exp2"), {7});
  REQUIRE(s.runs.size() == 1);
  CHECK(s.runs[0].result.report_json == r.report_json);
  CHECK(s.runs[0].result.trace_csv == r.trace_csv);
  CHECK(s.falsified == (r.report.verdict.kind == Verdict::Kind::Falsified ? 1u : 0u));
}

TEST_CASE("batch with one worker thread") {
  ExperimentConfig c = preset("exp2");
  c.points = 300;
  c.abstraction_budget = 10;
  const BatchSummary s = batch(c, {3, 4}, 1);
  for (const BatchEntry& e : s.runs) CHECK(e.ok);
}

TEST_CASE("emitted matrix for the exp2 abstraction") {
  const std::string csv = emit_matrix(preset("exp2"));
  CHECK(csv.rfind("block,state,s_INIT,s_LRN,s_STD,s_STD^L,s_OSC[1010],s_OSC[0110],s_OSC[0110]^L,s_OSC[0101],row_sum\n",
                  0) == 0);
}
