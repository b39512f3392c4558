#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "locos/experiment.hpp"

using namespace locos;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("locos_exp_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& body) const {
    std::ofstream(path / name) << body;
    return path / name;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(path / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

int run_cli(const std::string& args, const TempDir& t, const std::string& out = "stdout.txt") {
  std::string cmd = std::string(LOCOS_CLI_PATH) + " " + args + " > " + (t.path / out).string() + " 2> " +
                    (t.path / "stderr.txt").string();
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Config small(const std::string& extra = "") { return Config::parse("depth = 4\ntrials = 2\n" + extra); }

}  // namespace

TEST_CASE("config files", "[config]") {
  auto c = Config::parse("# header\n  p = 3   # trailing\n\nlocal = polynomial:2\neps = 0.1, 0.01\n");
  CHECK(c.num("p", 0) == 3.0);
  CHECK(c.str("local", "") == "polynomial:2");
  CHECK(c.list("eps", {}) == std::vector<double>{0.1, 0.01});
  CHECK(c.integer("depth", 7) == 7);
  CHECK(Config::parse("p = inf").num("p", 0) == INFINITY);

  CHECK(message_of([] { Config::parse("p = 3\nwidth = 2"); }).find("line 2") != std::string::npos);
  CHECK(message_of([] { Config::parse("p = 3\n\nfoo"); }).find("line 3") != std::string::npos);
  CHECK(message_of([] { Config::parse("p = 3\np = 4"); }).find("given twice") != std::string::npos);
  CHECK(message_of([] { Config::parse("p ="); }).find("no value") != std::string::npos);
  auto bad = Config::parse("local = indicator\np = three");
  CHECK(message_of([&] { bad.num("p", 0); }).find("field 'p' (line 2)") != std::string::npos);

  // the hash sees values, not layout
  CHECK(Config::parse("p=3\ndepth=2").hash() == Config::parse("# x\ndepth = 2\n p = 3").hash());
  CHECK(Config::parse("p=3").hash() != Config::parse("p=4").hash());
  CHECK(Config::parse("p=3").hash().size() == 16);
}

TEST_CASE("every operation emits a valid report", "[experiment]") {
  std::map<std::string, std::string> extra = {
      {"build", ""},
      {"remez", "atoms = 5\n"},
      {"uncond", "local = indicator\n"},
      {"weaktype", "local = indicator\n"},
      {"democracy", "set = chain\n"},
      {"gundy", "local = indicator\nlambda = 0.5, 2\n"},
      {"greedy", "local = indicator\n"},
      {"density", "levels = 4\n"},
      {"counterexample", "eps = 0.1, 0.01\n"},
      {"op-condition", "eps = 0.1, 0.01\n"},
      {"tensor", "local = polynomial:1\n"},
  };
  REQUIRE(extra.size() == operation_names().size());
  for (const auto& op : operation_names()) {
    INFO(op);
    auto r = run_experiment(op, small(extra.at(op)), 5).report;
    CHECK(validate_report(r).empty());
    CHECK(r["op"] == op);
    CHECK(r["seed"] == 5u);
    CHECK(r["config"]["seed"] == "5");
    CHECK(std::isfinite(r["constant"].get<double>()));
    CHECK_FALSE(r.contains("wall_clock_seconds"));
  }
  CHECK_THROWS_AS(run_experiment("fly", small(), 1), Error);
  CHECK_THROWS_AS(run_experiment("uncond", small("op = gundy\n"), 1), Error);
  CHECK_THROWS_AS(run_experiment("uncond", small("p = 1\n"), 1), Error);
  CHECK_THROWS_AS(run_experiment("density", small("target = at:0.5\n"), 1), Error);
  RunOptions timed;
  timed.timing = true;
  CHECK(run_experiment("build", small(), 1, timed).report.contains("wall_clock_seconds"));
}

TEST_CASE("runs are reproducible and independent of the thread count", "[experiment][determinism]") {
  for (const char* op : {"uncond", "weaktype", "gundy", "greedy"}) {
    INFO(op);
    auto cfg = small("local = indicator\n");
    RunOptions one, many;
    many.jobs = 3;
    auto a = run_experiment(op, cfg, 11, one);
    auto b = run_experiment(op, cfg, 11, one);
    auto c = run_experiment(op, cfg, 11, many);
    CHECK(a.report.dump() == b.report.dump());
    CHECK(a.report.dump() == c.report.dump());
    CHECK(a.csv == c.csv);
  }
  auto x = run_experiment("uncond", small(), 1).report;
  auto y = run_experiment("uncond", small(), 2).report;
  CHECK(x["config_hash"] != y["config_hash"]);
}

TEST_CASE("gundy preset reconstructs f", "[experiment][gundy]") {
  auto r = run_experiment("gundy", Config::parse("local = indicator\ndepth = 7\ntrials = 10\nlambda = 0.25, 1, 4"), 3);
  CHECK(r.report["results"]["residual"].get<double>() < 1e-10);
  CHECK(r.report["results"]["difference_defect"].get<double>() < 1e-10);
  CHECK(r.report["results"]["by_lambda"].size() == 3);
  CHECK(r.report["system"]["space"] == "points:0@1,1@2,2@1,3@3,4@1,5@2,6@1,7@4");
  REQUIRE(r.csv.size() == 1);
  CHECK(r.csv[0].first == "gundy_trials.csv");
}

TEST_CASE("report schema and merging", "[experiment][schema]") {
  auto a = run_experiment("uncond", small(), 1).report;
  auto b = run_experiment("uncond", small(), 2).report;
  CHECK(validate_report(a).empty());
  auto broken = a;
  broken.erase("constant");
  broken["seed"] = -1;
  broken["config"]["depth"] = 4;
  auto bad = validate_report(broken);
  CHECK(bad.size() == 3);
  CHECK(validate_report(Json::object()).size() == 8);

  auto m = merge_reports({a, b});
  CHECK(validate_report(m).empty());
  CHECK(m["constant"].get<double>() == std::max(a["constant"].get<double>(), b["constant"].get<double>()));
  CHECK(m["results"]["merged"] == 2);
  auto other = run_experiment("uncond", small("p = 4\n"), 1).report;
  CHECK_THROWS_AS(merge_reports({a, other}), Error);
  CHECK_THROWS_AS(merge_reports({a, run_experiment("weaktype", small(), 1).report}), Error);
  CHECK_THROWS_AS(merge_reports({}), Error);
}

TEST_CASE("command line", "[cli]") {
  TempDir t;
  auto good = t.write("good.cfg", "local = indicator\ndepth = 4\ntrials = 2\n");
  REQUIRE(run_cli("uncond --config " + good.string() + " --seed 4", t, "a.json") == 0);
  REQUIRE(run_cli("uncond --config " + good.string() + " --seed 4 --jobs 2", t, "b.json") == 0);
  CHECK(t.read("a.json") == t.read("b.json"));
  auto rep = Json::parse(t.read("a.json"));
  CHECK(validate_report(rep).empty());
  CHECK(rep["seed"] == 4u);

  // the seed may come from the config
  auto seeded = t.write("seeded.cfg", "local = indicator\ndepth = 4\ntrials = 2\nseed = 4\n");
  REQUIRE(run_cli("uncond --config " + seeded.string(), t, "c.json") == 0);
  CHECK(Json::parse(t.read("c.json"))["constant"] == rep["constant"]);

  auto out = t.path / "run";
  REQUIRE(run_cli("gundy --config " + good.string() + " --out " + out.string(), t) == 0);
  CHECK(fs::exists(out / "gundy.json"));
  CHECK(fs::exists(out / "gundy_trials.csv"));

  REQUIRE(run_cli("uncond --config " + good.string() + " --seed 5", t, "d.json") == 0);
  REQUIRE(run_cli("report-merge " + (t.path / "a.json").string() + " " + (t.path / "d.json").string(), t, "m.json") == 0);
  CHECK(Json::parse(t.read("m.json"))["results"]["merged"] == 2);

  auto malformed = t.write("bad.cfg", "depth = 4\n\nlocal polynomial:2\n");
  CHECK(run_cli("build --config " + malformed.string(), t) == 1);
  CHECK(t.read("stderr.txt").find("line 3") != std::string::npos);
  auto badval = t.write("badval.cfg", "depth = 4\np = 0.5\n");
  CHECK(run_cli("uncond --config " + badval.string(), t) == 1);
  CHECK(t.read("stderr.txt").find("field 'p' (line 2)") != std::string::npos);
  CHECK(run_cli("build --config " + (t.path / "missing.cfg").string(), t) == 1);
  CHECK(run_cli("teleport", t) == 1);
  CHECK(run_cli("build --jobs 0", t) == 1);

  // two nearly equal exponentials lose orthogonality in floating point
  auto degenerate = t.write("degenerate.cfg", "local = exponential:0,1e-7\nfiltration = dyadic\ndepth = 3\n");
  CHECK(run_cli("build --config " + degenerate.string(), t) == 2);
  CHECK(t.read("stderr.txt").find("invariant violation") != std::string::npos);
}
