#include "thermo/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "thermo/dataset.hpp"
#include "thermo/error_chain.hpp"
#include "thermo/errors.hpp"
#include "thermo/models.hpp"
#include "thermo/node_select.hpp"
#include "thermo/report.hpp"
#include "thermo/text.hpp"
#include "thermo/thermal_sim.hpp"
#include "thermo/train.hpp"

namespace thermo::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

SeedChoice resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return {*flag, "flag"};
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    auto v = text::parse_int(env);
    if (!v || *v < 0) fail(ErrorKind::UsageError, std::string(kSeedEnv) + " must be a non-negative integer, got '" + env + "'");
    return {static_cast<std::uint64_t>(*v), "env"};
  }
  return {kDefaultSeed, "default"};
}

namespace {

constexpr const char* kVersion = "0.1.0";

void log(const std::string& msg) { std::cerr << "thermo: " << msg << '\n'; }

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Written next to every output; its argv replays the invocation.
void write_resolved(const fs::path& path, const std::string& command, const std::vector<std::string>& argv,
                    const SeedChoice* seed, json parameters) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["argv"] = argv;
  if (seed) {
    j["seed"] = seed->value;
    j["seed_source"] = seed->source;
  }
  j["parameters"] = std::move(parameters);
  write_text(path, j.dump(2) + "\n");
}

fs::path sidecar_for_file(const fs::path& out) {
  return out.parent_path() / (out.stem().string() + ".config_resolved.json");
}

std::vector<std::string> parse_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto part : text::split(s, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<dataset::Quantity> parse_quantities(const std::string& s) {
  if (s == "both") return {dataset::Quantity::Temperature, dataset::Quantity::HeatFlux};
  try {
    return {dataset::parse_quantity(s)};
  } catch (const Error&) {
    fail(ErrorKind::UsageError, "--quantity must be temperature, heatflux or both, got '" + s + "'");
  }
}

std::vector<models::Architecture> parse_archs(const std::string& s) {
  if (s == "all") return {models::kAllArchitectures.begin(), models::kAllArchitectures.end()};
  std::vector<models::Architecture> out;
  for (const auto& name : parse_list(s)) out.push_back(models::parse_architecture(name));
  if (out.empty()) fail(ErrorKind::UsageError, "--arch is empty");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : parse_list(s)) {
    auto v = text::parse_int(item);
    if (!v || *v < 0) fail(ErrorKind::UsageError, "bad repeat seed '" + item + "'");
    out.push_back(static_cast<std::uint64_t>(*v));
  }
  if (out.empty()) fail(ErrorKind::UsageError, "--repeats needs at least one seed");
  return out;
}

/// "trials=N" (a bare N is accepted too).
std::size_t parse_search(const std::string& s) {
  std::string_view v = s;
  if (v.rfind("trials=", 0) == 0) v.remove_prefix(7);
  auto n = text::parse_int(v);
  if (!n || *n < 0) fail(ErrorKind::UsageError, "--search expects trials=<N>, got '" + s + "'");
  return static_cast<std::size_t>(*n);
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    fail(ErrorKind::UsageError, "--tau must lie in (0, 1), got " + text::format_double(tau));
  }
}

/// Runs stored as <data>/<quantity>/<run_id>.csv, naturally ordered.
std::vector<dataset::NodeTimeSeries> load_runs(const fs::path& data, dataset::Quantity q,
                                               const std::vector<std::string>& only) {
  const fs::path dir = data / std::string(dataset::to_string(q));
  if (!fs::is_directory(dir)) fail(ErrorKind::IoError, "no '" + dir.string() + "' directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return report::natural_less(a.stem().string(), b.stem().string());
  });
  std::vector<dataset::NodeTimeSeries> runs;
  for (const auto& f : files) {
    if (!only.empty() && std::find(only.begin(), only.end(), f.stem().string()) == only.end()) continue;
    runs.push_back(dataset::load_csv(f, q));
  }
  for (const auto& id : only) {
    const bool found = std::any_of(runs.begin(), runs.end(), [&](const auto& r) { return r.run_id() == id; });
    if (!found) fail(ErrorKind::UsageError, "run '" + id + "' not found in " + dir.string());
  }
  if (runs.empty()) fail(ErrorKind::IoError, "no runs in " + dir.string());
  return runs;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::size_t runs = 12;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void write_manifest(const std::vector<sim::RunPair>& runs, const sim::NetworkLayout& layout, const fs::path& path) {
  std::string s = "run_id,ambient_temp,ground_temp,initial_system_temp,film_coefficient";
  for (const auto& src : layout.sources) s += ",flux_" + src.name;
  s += ",steps,nodes\n";
  for (const auto& r : runs) {
    const auto& ic = r.temperature.initial_conditions();
    s += r.temperature.run_id() + ',' + text::format_double(ic.ambient_temp) + ',' +
         text::format_double(ic.ground_temp) + ',' + text::format_double(ic.initial_system_temp) + ',' +
         text::format_double(ic.film_coefficient);
    for (double f : ic.heat_flux_magnitudes) s += ',' + text::format_double(f);
    s += ',' + std::to_string(r.temperature.steps()) + ',' + std::to_string(r.temperature.nodes()) + '\n';
  }
  write_text(path, s);
}

void simulate(const SimulateArgs& a) {
  if (a.runs == 0) fail(ErrorKind::UsageError, "--runs must be at least 1");
  const auto seed = resolve_seed(a.seed);
  const auto layout = sim::load_layout(a.config);
  const fs::path out = a.out;
  log("simulating " + std::to_string(a.runs) + " runs (seed " + std::to_string(seed.value) + ")");
  const auto runs = sim::make_run_suite(a.runs, layout, seed.value);
  for (auto q : {dataset::Quantity::Temperature, dataset::Quantity::HeatFlux}) {
    fs::create_directories(out / std::string(dataset::to_string(q)));
  }
  for (const auto& r : runs) {
    dataset::save_csv(r.temperature, out / "temperature" / (r.temperature.run_id() + ".csv"));
    dataset::save_csv(r.heat_flux, out / "heatflux" / (r.heat_flux.run_id() + ".csv"));
  }
  write_manifest(runs, layout, out / "manifest.csv");
  write_resolved(out / "config_resolved.json", "simulate",
                 {"simulate", "--config", a.config, "--runs", std::to_string(a.runs), "--seed",
                  std::to_string(seed.value), "--out", a.out},
                 &seed,
                 json{{"config", a.config},
                      {"runs", a.runs},
                      {"dt", layout.sim.dt},
                      {"steps", layout.sim.steps},
                      {"sample_every", layout.sim.sample_every},
                      {"sensor_noise", layout.sim.sensor_noise}});
}

// ------------------------------------------------------------------ select

struct SelectArgs {
  std::string data;
  std::string quantity = "temperature";
  std::string runs;
  double tau = select::kDefaultTau;
  std::string out = "plan.json";
};

void select_nodes(const SelectArgs& a) {
  check_tau(a.tau);
  const auto qs = parse_quantities(a.quantity);
  if (qs.size() != 1) fail(ErrorKind::UsageError, "select works on one quantity at a time");
  const auto runs = load_runs(a.data, qs[0], parse_list(a.runs));
  // Plans are fitted on the training segment of each run, as in training.
  std::vector<Matrix> parts;
  std::string fitted;
  for (const auto& r : runs) {
    const auto [n_train, n_val, n_test] = dataset::split_lengths(r.steps(), dataset::SplitSpec{});
    (void)n_val;
    (void)n_test;
    parts.push_back(r.values().row_range(0, n_train));
    fitted += (fitted.empty() ? "" : ",") + r.run_id();
  }
  auto plan = select::build_plan(select::pearson_matrix(vstack(parts)), a.tau);
  plan.node_ids = runs.front().node_ids();
  plan.fitted_on = {{"runs", fitted}, {"segment", "train"}, {"quantity", std::string(dataset::to_string(qs[0]))}};
  const fs::path out = a.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  select::save_plan(plan, out);
  log("kept " + std::to_string(plan.retained.size()) + " of " + std::to_string(plan.node_count) + " nodes");
  std::vector<std::string> argv{"select", "--data", a.data, "--quantity", a.quantity, "--tau",
                                text::format_double(a.tau), "--out", a.out};
  if (!a.runs.empty()) argv.insert(argv.end(), {"--runs", a.runs});
  write_resolved(sidecar_for_file(out), "select", argv, nullptr,
                 json{{"data", a.data}, {"quantity", a.quantity}, {"runs", fitted}, {"tau", a.tau},
                      {"train_frac", dataset::SplitSpec{}.train_frac}});
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string arch = "gru";
  std::string protocol = "specialised";
  std::string search = "trials=20";
  std::string quantity = "temperature";
  std::string runs;
  std::string repeats = "1,2,3";
  double tau = select::kDefaultTau;
  std::size_t epochs = 30;
  std::size_t batch = 32;
  std::size_t seq_len = 10;
  double lr = 1e-3;
  double wd = 1e-4;
  double dropout = 0.1;
  std::size_t hidden = 32;
  std::size_t layers = 1;
  std::size_t heads = 2;
  std::size_t kernel = 3;
  std::optional<std::uint64_t> seed;
  std::string out;
};

json spec_json(const models::ModelSpec& s) {
  return json{{"arch", models::to_string(s.kind)}, {"d_in", s.d_in},       {"d_out", s.d_out},
              {"hidden", s.hidden},                {"layers", s.layers},   {"dropout", s.dropout},
              {"heads", s.heads},                  {"kernel_size", s.kernel_size}, {"seed", s.seed}};
}

report::BestConfig best_config(const std::string& dataset, dataset::Quantity q, const models::ModelSpec& s,
                               const train::OptimConfig& o) {
  report::BestConfig c{dataset, q, std::string(models::to_string(s.kind)), o.learning_rate, o.weight_decay,
                       s.dropout, s.hidden, s.layers, std::nullopt};
  if (s.kind == models::Architecture::Transformer) c.heads = s.heads;
  return c;
}

class Trainer {
 public:
  Trainer(const TrainArgs& a, SeedChoice seed)
      : a_(a), seed_(seed), out_(a.out), trials_(parse_search(a.search)), repeats_(parse_seeds(a.repeats)) {
    check_tau(a.tau);
    protocol_ = report::parse_protocol(a.protocol);
    archs_ = parse_archs(a.arch);
    quantities_ = parse_quantities(a.quantity);
    optim_.learning_rate = a.lr;
    optim_.weight_decay = a.wd;
    optim_.epochs = a.epochs;
    optim_.batch_size = a.batch;
    optim_.seq_len = a.seq_len;
    try {
      optim_.validate();
    } catch (const Error& e) {
      fail(ErrorKind::UsageError, e.what());
    }
    fs::create_directories(out_);
    for (const char* sub : {"predictions", "checkpoints", "plans"}) fs::create_directories(out_ / sub);
    const fs::path trials = out_ / "trials.csv";
    if (fs::exists(trials)) fs::remove(trials);
  }

  void run() {
    for (auto q : quantities_) {
      const auto runs = load_runs(a_.data, q, parse_list(a_.runs));
      if (protocol_ == report::Protocol::Specialised) {
        for (const auto& r : runs) {
          for (auto arch : archs_) specialised(r, arch);
        }
      } else {
        for (auto arch : archs_) generalised(runs, arch);
      }
    }
    report::write_metrics_csv(records_, out_ / "metrics.csv");
    report::write_best_configs(best_, out_ / "best_configs.csv");
    if (trials_ == 0) write_text(out_ / "trials.csv", "dataset,target,model,trial,lr,wd,dropout,hidden,layers,heads,val_mse,status\n");
  }

  std::vector<std::string> argv() const {
    std::vector<std::string> v{"train", "--data", a_.data, "--arch", a_.arch, "--protocol",
                               std::string(report::to_string(protocol_)), "--search",
                               "trials=" + std::to_string(trials_), "--quantity", a_.quantity};
    if (!a_.runs.empty()) v.insert(v.end(), {"--runs", a_.runs});
    v.insert(v.end(), {"--repeats", a_.repeats, "--tau", text::format_double(a_.tau), "--epochs",
                       std::to_string(a_.epochs), "--batch", std::to_string(a_.batch), "--seq-len",
                       std::to_string(a_.seq_len), "--lr", text::format_double(a_.lr), "--wd",
                       text::format_double(a_.wd), "--dropout", text::format_double(a_.dropout), "--hidden",
                       std::to_string(a_.hidden), "--layers", std::to_string(a_.layers), "--heads",
                       std::to_string(a_.heads), "--kernel", std::to_string(a_.kernel), "--seed",
                       std::to_string(seed_.value), "--out", a_.out});
    return v;
  }

  json parameters() const {
    json archs = json::array();
    for (auto k : archs_) archs.push_back(models::to_string(k));
    json p{{"data", a_.data},
           {"protocol", report::to_string(protocol_)},
           {"architectures", archs},
           {"quantity", a_.quantity},
           {"runs", a_.runs},
           {"trials", trials_},
           {"repeat_seeds", repeats_},
           {"tau", a_.tau},
           {"optimizer",
            {{"name", "AdamW"},
             {"learning_rate", optim_.learning_rate},
             {"weight_decay", optim_.weight_decay},
             {"beta1", optim_.beta1},
             {"beta2", optim_.beta2},
             {"eps", optim_.eps},
             {"epochs", optim_.epochs},
             {"batch_size", optim_.batch_size},
             {"seq_len", optim_.seq_len}}},
           {"model_defaults",
            {{"hidden", a_.hidden}, {"layers", a_.layers}, {"dropout", a_.dropout}, {"heads", a_.heads},
             {"kernel_size", a_.kernel}}}};
    if (protocol_ == report::Protocol::Generalised) p["generalised_train_frac"] = train::kGeneralisedTrainFrac;
    return p;
  }

 private:
  models::ModelSpec base_spec(models::Architecture arch) const {
    models::ModelSpec s;
    s.kind = arch;
    s.hidden = a_.hidden;
    s.layers = a_.layers;
    s.dropout = a_.dropout;
    s.heads = a_.heads;
    s.kernel_size = a_.kernel;
    return s;
  }

  std::pair<models::ModelSpec, train::OptimConfig> tune(const std::string& dataset, dataset::Quantity q,
                                                        models::Architecture arch,
                                                        const train::Objective& objective) {
    auto spec = base_spec(arch);
    if (trials_ == 0) return {spec, optim_};
    const auto result = train::random_search(space_, objective, trials_, seed_.value);
    train::write_trial_log(result.log, dataset, std::string(dataset::to_string(q)),
                           std::string(models::to_string(arch)), out_ / "trials.csv", true);
    log("  best trial " + std::to_string(result.best_index) + " val_mse " +
        text::format_double(result.log[result.best_index].objective));
    return {train::apply_trial(spec, result.best), train::apply_trial(optim_, result.best)};
  }

  std::string stem(dataset::Quantity q, const std::string& run, models::Architecture arch) const {
    return std::string(dataset::to_string(q)) + "_" + run + "_" + std::string(models::to_string(arch));
  }

  void save_model(const std::string& name, const models::ModelSpec& spec, const models::Parameters& params,
                  const train::OptimConfig& optim) {
    models::save_checkpoint(params, out_ / "checkpoints" / (name + ".ckpt"));
    json j{{"model", spec_json(spec)},
           {"learning_rate", optim.learning_rate},
           {"weight_decay", optim.weight_decay},
           {"parameters", models::parameter_count(params)}};
    write_text(out_ / "checkpoints" / (name + ".json"), j.dump(2) + "\n");
  }

  void save_predictions(const std::string& name, const dataset::NodeTimeSeries& run, const Matrix& pred,
                        const std::vector<double>& timestamps) {
    dataset::NodeTimeSeries series(run.run_id(), run.quantity(), timestamps, pred, run.node_ids(),
                                   run.initial_conditions());
    dataset::save_csv(series, out_ / "predictions" / (name + ".csv"));
  }

  void record(dataset::Quantity q, const std::string& run_id, models::Architecture arch, const train::RunMetrics& m) {
    report::MetricRecord rec{protocol_, q, run_id, std::string(models::to_string(arch)), m.mse_mean, m.mse_std,
                             m.retained_mse_mean, m.retained_mse_std, m.n_repeats, m.wall_time, ""};
    for (auto s : repeats_) rec.seeds += (rec.seeds.empty() ? "" : ";") + std::to_string(s);
    records_.push_back(std::move(rec));
    // Written after every result so an interrupted sweep keeps what finished.
    report::write_metrics_csv(records_, out_ / "metrics.csv");
    log("  test mse " + report::format_cell(m.mse_mean, m.mse_std) + " (x1e-5), " +
        text::format_double(m.wall_time) + " s");
  }

  void specialised(const dataset::NodeTimeSeries& run, models::Architecture arch) {
    const auto q = run.quantity();
    log(std::string(dataset::to_string(q)) + " " + run.run_id() + " " + std::string(models::to_string(arch)));
    const train::SpecialisedData data(run, dataset::SplitSpec{}, optim_.seq_len, a_.tau);
    auto [spec, optim] = tune(run.run_id(), q, arch, [&](const train::TrialConfig& t) {
      return train::specialised_validation(data, train::apply_trial(base_spec(arch), t),
                                           train::apply_trial(optim_, t), repeats_.front());
    });
    const auto result = train::specialised_protocol(run, spec, optim, a_.tau, repeats_);
    const auto name = stem(q, run.run_id(), arch);
    select::save_plan(result.plan, out_ / "plans" / (std::string(dataset::to_string(q)) + "_" + run.run_id() + ".json"));
    save_model(name, result.spec, result.params, optim);
    save_predictions(name, run, result.predictions, result.timestamps);
    best_.push_back(best_config(run.run_id(), q, spec, optim));
    record(q, run.run_id(), arch, result.metrics);
  }

  void generalised(const std::vector<dataset::NodeTimeSeries>& runs, models::Architecture arch) {
    const auto q = runs.front().quantity();
    log(std::string(dataset::to_string(q)) + " leave-one-out " + std::string(models::to_string(arch)));
    auto [spec, optim] = tune("generalised", q, arch, [&](const train::TrialConfig& t) {
      return train::generalised_validation(runs, train::apply_trial(base_spec(arch), t),
                                           train::apply_trial(optim_, t), a_.tau, repeats_.front());
    });
    const auto folds = train::generalised_protocol(runs, spec, optim, a_.tau, repeats_);
    for (std::size_t k = 0; k < folds.size(); ++k) {
      const auto& f = folds[k];
      const auto name = stem(q, "loo_" + f.held_out, arch);
      select::save_plan(f.plan, out_ / "plans" / (std::string(dataset::to_string(q)) + "_loo_" + f.held_out + ".json"));
      save_model(name, f.spec, f.params, optim);
      save_predictions(name, runs[k], f.predictions, f.timestamps);
      log(" fold " + f.held_out);
      record(q, f.held_out, arch, f.held_out_metrics);
    }
    best_.push_back(best_config("generalised", q, spec, optim));
  }

  const TrainArgs& a_;
  SeedChoice seed_;
  fs::path out_;
  std::size_t trials_;
  std::vector<std::uint64_t> repeats_;
  report::Protocol protocol_ = report::Protocol::Specialised;
  std::vector<models::Architecture> archs_;
  std::vector<dataset::Quantity> quantities_;
  train::OptimConfig optim_;
  train::SearchSpace space_;
  std::vector<report::MetricRecord> records_;
  std::vector<report::BestConfig> best_;
};

void train_models(const TrainArgs& a) {
  const auto seed = resolve_seed(a.seed);
  Trainer trainer(a, seed);
  trainer.run();
  write_resolved(fs::path(a.out) / "config_resolved.json", "train", trainer.argv(), &seed, trainer.parameters());
}

// --------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  std::string data;
  std::string out;
};

/// <data>/metrics.csv and <data>/*/metrics.csv, in path order.
std::vector<fs::path> metric_dirs(const fs::path& data) {
  if (!fs::is_directory(data)) fail(ErrorKind::IoError, "no directory '" + data.string() + "'");
  std::vector<fs::path> dirs;
  if (fs::exists(data / "metrics.csv")) dirs.push_back(data);
  std::vector<fs::path> subs;
  for (const auto& entry : fs::directory_iterator(data)) {
    if (entry.is_directory() && fs::exists(entry.path() / "metrics.csv")) subs.push_back(entry.path());
  }
  std::sort(subs.begin(), subs.end());
  dirs.insert(dirs.end(), subs.begin(), subs.end());
  return dirs;
}

void benchmark(const BenchmarkArgs& a) {
  std::vector<report::MetricRecord> records;
  std::vector<report::BestConfig> best;
  for (const auto& dir : metric_dirs(a.data)) {
    auto recs = report::read_metrics_csv(dir / "metrics.csv");
    records.insert(records.end(), recs.begin(), recs.end());
    if (fs::exists(dir / "best_configs.csv")) {
      auto b = report::read_best_configs(dir / "best_configs.csv");
      best.insert(best.end(), b.begin(), b.end());
    }
  }
  if (records.empty()) fail(ErrorKind::EmptyReport, "no metrics found under '" + a.data + "'");
  const auto reports = report::build_reports(records);
  const fs::path out = a.out;
  fs::create_directories(out);
  write_text(out / "report.txt", report::render_text(reports));
  write_text(out / "report.csv", report::render_csv(reports));
  report::write_best_configs(best, out / "best_configs.csv");
  log("aggregated " + std::to_string(records.size()) + " results into " + std::to_string(reports.size()) + " tables");
  write_resolved(out / "config_resolved.json", "benchmark", {"benchmark", "--data", a.data, "--out", a.out}, nullptr,
                 json{{"data", a.data}, {"records", records.size()}, {"scale", report::kScale}});
}

// -------------------------------------------------------------- compensate

struct CompensateArgs {
  std::string predictions;
  std::string chain;
  std::string out = "offsets.csv";
};

void compensate(const CompensateArgs& a) {
  const auto chain = chain::load_chain(a.chain);
  const auto temps = dataset::load_csv(a.predictions, dataset::Quantity::Temperature);
  const fs::path out = a.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  chain::write_compensation_csv(chain, temps, out);
  log("wrote " + std::to_string(temps.steps()) + " offset rows");
  write_resolved(sidecar_for_file(out), "compensate",
                 {"compensate", "--predictions", a.predictions, "--chain", a.chain, "--out", a.out}, nullptr,
                 json{{"predictions", a.predictions},
                      {"chain", a.chain},
                      {"offset_policy", "negate"},
                      {"reference_temp", chain::kReferenceTemp}});
}

// ------------------------------------------------------------------ replay

std::vector<std::string> replay_argv(const std::string& sidecar) {
  json j;
  try {
    j = json::parse(read_text(sidecar));
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, sidecar + ": " + e.what());
  }
  if (!j.contains("argv") || !j["argv"].is_array() || j["argv"].empty()) {
    fail(ErrorKind::ConfigError, sidecar + ": missing argv");
  }
  auto argv = j["argv"].get<std::vector<std::string>>();
  if (argv.front() == "replay") fail(ErrorKind::ConfigError, sidecar + ": refuses to replay a replay");
  return argv;
}

template <typename T>
void add_seed_option(CLI::App* cmd, std::optional<T>& target) {
  cmd->add_option("--seed", target, "RNG seed (default: $THERMO_SEED, else 42)");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Thermal surrogate toolkit for machine tools", "thermo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate paired temperature/heat-flux runs");
  sim_cmd->add_option("--config", sa.config, "Thermal network layout")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--runs", sa.runs, "Number of runs")->capture_default_str();
  add_seed_option(sim_cmd, sa.seed);
  sim_cmd->add_option("--out", sa.out, "Output directory")->required();

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "Fit a node-selection plan");
  sel_cmd->add_option("--data", sel.data, "Directory written by simulate")->required();
  sel_cmd->add_option("--quantity", sel.quantity, "temperature or heatflux")->capture_default_str();
  sel_cmd->add_option("--runs", sel.runs, "Comma-separated run ids (default: all)");
  sel_cmd->add_option("--tau", sel.tau, "Correlation threshold in (0, 1)")->capture_default_str();
  sel_cmd->add_option("--out", sel.out, "Plan JSON path")->capture_default_str();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train surrogates under a benchmark protocol");
  train_cmd->add_option("--data", ta.data, "Directory written by simulate")->required();
  train_cmd->add_option("--arch", ta.arch, "rnn,gru,lstm,bilstm,transformer,tcn or all")->capture_default_str();
  train_cmd->add_option("--protocol", ta.protocol, "specialised or generalised")->capture_default_str();
  train_cmd->add_option("--search", ta.search, "trials=N random-search trials (0 uses the flags below)")
      ->capture_default_str();
  train_cmd->add_option("--quantity", ta.quantity, "temperature, heatflux or both")->capture_default_str();
  train_cmd->add_option("--runs", ta.runs, "Comma-separated run ids (default: all)");
  train_cmd->add_option("--repeats", ta.repeats, "Comma-separated repeat seeds")->capture_default_str();
  train_cmd->add_option("--tau", ta.tau, "Correlation threshold in (0, 1)")->capture_default_str();
  train_cmd->add_option("--epochs", ta.epochs)->capture_default_str();
  train_cmd->add_option("--batch", ta.batch)->capture_default_str();
  train_cmd->add_option("--seq-len", ta.seq_len)->capture_default_str();
  train_cmd->add_option("--lr", ta.lr)->capture_default_str();
  train_cmd->add_option("--wd", ta.wd)->capture_default_str();
  train_cmd->add_option("--dropout", ta.dropout)->capture_default_str();
  train_cmd->add_option("--hidden", ta.hidden)->capture_default_str();
  train_cmd->add_option("--layers", ta.layers)->capture_default_str();
  train_cmd->add_option("--heads", ta.heads)->capture_default_str();
  train_cmd->add_option("--kernel", ta.kernel, "TCN kernel size")->capture_default_str();
  add_seed_option(train_cmd, ta.seed);
  train_cmd->add_option("--out", ta.out, "Output directory")->required();

  BenchmarkArgs ba;
  auto* bench_cmd = app.add_subcommand("benchmark", "Aggregate trained results into report tables");
  bench_cmd->add_option("--data", ba.data, "Train output directory (or a directory of them)")->required();
  bench_cmd->add_option("--out", ba.out, "Report directory")->required();

  CompensateArgs ca;
  auto* comp_cmd = app.add_subcommand("compensate", "Turn predicted temperatures into TCP offsets");
  comp_cmd->add_option("--predictions", ca.predictions, "Temperature CSV")->required();
  comp_cmd->add_option("--chain", ca.chain, "Kinematic chain config")->required();
  comp_cmd->add_option("--out", ca.out, "Offsets CSV")->capture_default_str();

  std::string sidecar;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the invocation recorded in a config_resolved sidecar");
  replay_cmd->add_option("sidecar", sidecar)->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim_cmd) simulate(sa);
    else if (*sel_cmd) select_nodes(sel);
    else if (*train_cmd) train_models(ta);
    else if (*bench_cmd) benchmark(ba);
    else if (*comp_cmd) compensate(ca);
    else if (*replay_cmd) return run(replay_argv(sidecar));
  } catch (const Error& e) {
    std::cerr << "thermo: error: " << e.what() << '\n';
    return e.kind() == ErrorKind::UsageError ? kUsage : kFailure;
  } catch (const std::exception& e) {
    std::cerr << "thermo: error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace thermo::cli
