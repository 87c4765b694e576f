#include <doctest.h>

#include <sys/wait.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "support.hpp"
#include "thermo/cli.hpp"
#include "thermo/dataset.hpp"
#include "thermo/error_chain.hpp"
#include "thermo/node_select.hpp"
#include "thermo/text.hpp"

using namespace thermo;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kConfig = std::string(THERMO_SOURCE_DIR) + "/configs/machine_tool.cfg";
const std::string kChain = std::string(THERMO_SOURCE_DIR) + "/configs/chain.cfg";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int invoke(std::vector<std::string> args) { return cli::run(args); }

int shell(const std::string& command) {
  const int status = std::system((command + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Data files of a simulate output, keyed by relative path.
std::map<std::string, std::string> data_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "config_resolved.json") continue;
    out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

struct SimulatedData {
  testing::TempDir dir{"cli"};
  fs::path data = dir / "data";
  SimulatedData() { REQUIRE(invoke({"simulate", "--config", kConfig, "--runs", "3", "--seed", "5", "--out", data}) == 0); }
};

std::vector<std::string> quick_train(const fs::path& data, const fs::path& out, const std::string& arch) {
  return {"train", "--data", data, "--arch", arch, "--runs", "RUN1", "--search", "trials=0", "--repeats", "1",
          "--epochs", "1", "--hidden", "4", "--out", out};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("seed precedence") {
  ::unsetenv(cli::kSeedEnv);
  CHECK(cli::resolve_seed(std::nullopt).value == cli::kDefaultSeed);
  CHECK(cli::resolve_seed(std::nullopt).source == "default");
  ::setenv(cli::kSeedEnv, "7", 1);
  CHECK(cli::resolve_seed(std::nullopt).value == 7);
  CHECK(cli::resolve_seed(std::nullopt).source == "env");
  CHECK(cli::resolve_seed(9).value == 9);
  CHECK(cli::resolve_seed(9).source == "flag");
  ::unsetenv(cli::kSeedEnv);
}

TEST_CASE("usage errors") {
  testing::TempDir dir("cli");
  CHECK(invoke({}) == cli::kUsage);
  CHECK(invoke({"simulate", "--config", kConfig, "--runs", "0", "--out", dir / "x"}) == cli::kUsage);
  CHECK(invoke({"simulate", "--config", (dir / "missing.cfg").string(), "--out", dir / "x"}) == cli::kUsage);
  CHECK(invoke({"frobnicate"}) == cli::kUsage);
}

TEST_CASE("simulate writes paired runs and is deterministic") {
  testing::TempDir dir("cli");
  REQUIRE(invoke({"simulate", "--config", kConfig, "--runs", "2", "--seed", "3", "--out", dir / "a"}) == 0);
  REQUIRE(invoke({"simulate", "--config", kConfig, "--runs", "2", "--seed", "3", "--out", dir / "b"}) == 0);
  REQUIRE(invoke({"simulate", "--config", kConfig, "--runs", "2", "--seed", "4", "--out", dir / "c"}) == 0);
  const auto a = data_tree(dir / "a");
  CHECK(a.size() == 2 * 2 + 1);
  CHECK(a.count("temperature/RUN2.csv") == 1);
  CHECK(a.count("heatflux/RUN1.csv") == 1);
  CHECK(a.count("manifest.csv") == 1);
  CHECK(a == data_tree(dir / "b"));
  CHECK(a != data_tree(dir / "c"));

  const auto side = json::parse(slurp(dir / "a" / "config_resolved.json"));
  CHECK(side["seed"] == 3);
  CHECK(side["seed_source"] == "flag");
}

TEST_CASE("THERMO_SEED reaches a subprocess") {
  testing::TempDir dir("cli");
  const std::string exe = THERMO_CLI_PATH;
  CHECK(shell("THERMO_SEED=7 " + exe + " simulate --config " + kConfig + " --runs 1 --out " + (dir / "s").string()) == 0);
  const auto side = json::parse(slurp(dir / "s" / "config_resolved.json"));
  CHECK(side["seed"] == 7);
  CHECK(side["seed_source"] == "env");
  CHECK(shell(exe + " simulate --config " + kConfig + " --runs 0 --out " + (dir / "z").string()) == 2);
}

TEST_CASE("replay reproduces a simulate run") {
  testing::TempDir dir("cli");
  REQUIRE(invoke({"simulate", "--config", kConfig, "--runs", "1", "--out", dir / "a"}) == 0);
  const auto before = data_tree(dir / "a");
  fs::remove_all(dir / "a" / "temperature");
  REQUIRE(invoke({"replay", (dir / "a" / "config_resolved.json").string()}) == 0);
  CHECK(data_tree(dir / "a") == before);
}

TEST_CASE("select validates tau and writes a loadable plan") {
  SimulatedData sim;
  const auto plan_path = sim.dir / "plan.json";
  CHECK(invoke({"select", "--data", sim.data, "--tau", "1", "--out", plan_path}) == cli::kUsage);
  CHECK(invoke({"select", "--data", sim.data, "--tau", "0", "--out", plan_path}) == cli::kUsage);
  REQUIRE(invoke({"select", "--data", sim.data, "--out", plan_path}) == 0);
  const auto plan = select::load_plan(plan_path);
  CHECK(plan.tau == 0.95);
  CHECK(plan.node_count == 29);
  CHECK(plan.retained.size() + plan.discarded.size() == 29);
  CHECK(plan.fitted_on.at("segment") == "train");
  CHECK(fs::exists(sim.dir / "plan.config_resolved.json"));
  select::save_plan(plan, sim.dir / "again.json");
  CHECK(slurp(sim.dir / "again.json") == slurp(plan_path));
}

TEST_CASE("train rejects unknown architectures") {
  SimulatedData sim;
  CHECK(invoke(quick_train(sim.data, sim.dir / "t", "mlp")) == cli::kUsage);
  CHECK(invoke(quick_train(sim.data, sim.dir / "t", "gru,nope")) == cli::kUsage);
}

TEST_CASE("train, benchmark and compensate end to end") {
  SimulatedData sim;
  auto args = quick_train(sim.data, sim.dir / "t", "gru");
  args[std::find(args.begin(), args.end(), "trials=0") - args.begin()] = "trials=1";
  REQUIRE(invoke(args) == 0);
  const auto t = sim.dir / "t";
  for (const char* f : {"metrics.csv", "trials.csv", "best_configs.csv", "config_resolved.json"}) {
    CHECK(fs::exists(t / f));
  }
  const auto trials = slurp(t / "trials.csv");
  CHECK(std::count(trials.begin(), trials.end(), '\n') == 2);

  CHECK(invoke({"benchmark", "--data", t, "--out", sim.dir / "r1"}) == 0);
  CHECK(invoke({"benchmark", "--data", t, "--out", sim.dir / "r2"}) == 0);
  CHECK(slurp(sim.dir / "r1" / "report.txt") == slurp(sim.dir / "r2" / "report.txt"));
  CHECK(slurp(sim.dir / "r1" / "report.csv") == slurp(sim.dir / "r2" / "report.csv"));
  CHECK(slurp(sim.dir / "r1" / "report.txt").find("RUN1") != std::string::npos);

  // Predictions feed compensation directly.
  fs::path pred;
  for (const auto& e : fs::recursive_directory_iterator(t)) {
    if (e.path().parent_path().filename() == "predictions") pred = e.path();
  }
  REQUIRE(!pred.empty());
  CHECK(invoke({"compensate", "--predictions", pred, "--chain", kChain, "--out", sim.dir / "off.csv"}) == 0);
  const auto side = json::parse(slurp(sim.dir / "off.config_resolved.json"));
  CHECK(side["parameters"]["offset_policy"] == "negate");
}

TEST_CASE("train with every architecture") {
  SimulatedData sim;
  auto args = quick_train(sim.data, sim.dir / "all", "all");
  REQUIRE(invoke(args) == 0);
  const auto text = slurp(sim.dir / "all" / "metrics.csv");
  for (const char* m : {"RNN", "GRU", "LSTM", "BiLSTM", "Transformer", "TCN"}) {
    CHECK(text.find(std::string(",") + m + ",") != std::string::npos);
  }
}

TEST_CASE("benchmark without metrics fails") {
  testing::TempDir dir("cli");
  fs::create_directories(dir / "empty");
  CHECK(invoke({"benchmark", "--data", dir / "empty", "--out", dir / "r"}) == cli::kFailure);
}

TEST_CASE("compensate offsets") {
  testing::TempDir dir("cli");
  const auto chain = chain::load_chain(kChain);
  std::vector<std::string> ids;
  for (const auto& e : chain.elements) ids.insert(ids.end(), e.nodes.begin(), e.nodes.end());
  std::vector<double> ts(12);
  for (std::size_t i = 0; i < 12; ++i) ts[i] = 60.0 * static_cast<double>(i);

  Matrix at_ref(12, ids.size(), chain::kReferenceTemp);
  dataset::save_csv(dataset::NodeTimeSeries("RUN1", dataset::Quantity::Temperature, ts, at_ref, ids), dir / "ref.csv");
  REQUIRE(invoke({"compensate", "--predictions", dir / "ref.csv", "--chain", kChain, "--out", dir / "ref_off.csv"}) == 0);
  std::istringstream in(slurp(dir / "ref_off.csv"));
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto f = text::split(line, ',');
    for (std::size_t c = 1; c < f.size(); ++c) CHECK(std::stod(std::string(f[c])) == 0.0);
    ++rows;
  }
  CHECK(rows == 12);

  Rng rng(1);
  const auto warm = testing::random_matrix(rng, 12, ids.size(), 295.0, 305.0);
  const dataset::NodeTimeSeries series("RUN1", dataset::Quantity::Temperature, ts, warm, ids);
  dataset::save_csv(series, dir / "warm.csv");
  REQUIRE(invoke({"compensate", "--predictions", dir / "warm.csv", "--chain", kChain, "--out", dir / "warm_off.csv"}) == 0);
  std::istringstream w(slurp(dir / "warm_off.csv"));
  std::getline(w, line);
  for (std::size_t r = 0; r < 12; ++r) {
    std::getline(w, line);
    const auto f = text::split(line, ',');
    const auto drift = chain::tcp_drift(chain, ids, warm.row(r)).drift;
    for (std::size_t ax = 0; ax < 3; ++ax) {
      CHECK(std::stod(std::string(f[1 + ax])) == doctest::Approx(drift[ax]).epsilon(1e-12));
      CHECK(std::stod(std::string(f[4 + ax])) == doctest::Approx(-drift[ax]).epsilon(1e-12));
    }
  }

  Matrix partial(12, 2, 300.0);
  dataset::save_csv(dataset::NodeTimeSeries("RUN1", dataset::Quantity::Temperature, ts, partial, {"bed_fl", "x"}),
                    dir / "partial.csv");
  CHECK(invoke({"compensate", "--predictions", dir / "partial.csv", "--chain", kChain, "--out", dir / "p.csv"}) ==
        cli::kFailure);
}

}  // TEST_SUITE
