// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "op_cases.hpp"
#include "support.hpp"
#include "thermo/error_chain.hpp"
#include "thermo/models.hpp"
#include "thermo/node_select.hpp"
#include "thermo/report.hpp"
#include "thermo/thermal_sim.hpp"
#include "thermo/train.hpp"

using namespace thermo;

namespace {

// Tolerances and budgets.
constexpr double kGradEps = 1e-5, kGradAbs = 1e-5, kGradRel = 1e-3;
constexpr int kGradSeeds = 20;
constexpr double kGradBudget = 60.0;  // s
constexpr double kPearsonTol = 1e-12;
constexpr double kReconstructRel = 1e-9;
constexpr double kEnergyRel = 1e-9;
constexpr double kRelaxationRel = 0.005;
constexpr double kAdamTol = 1e-12;
constexpr double kEndToEndMse = 1e-3;
constexpr double kEndToEndBudget = 300.0;  // s
constexpr double kDuplicateRatio = 2.0;
constexpr double kHeldOutRatio = 50.0;
constexpr double kChainTol = 1e-12;
constexpr int kCausalPerturbations = 100;

const std::string kLayout = std::string(THERMO_SOURCE_DIR) + "/configs/machine_tool.cfg";
const std::string kChainFile = std::string(THERMO_SOURCE_DIR) + "/configs/chain.cfg";

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok) {
      if (pass) detail << "first failure: " << why << "; ";
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------

void gradients(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    for (auto& c : testing::op_cases(rng)) {
      const auto probe_seed = rng.next();
      const auto r = testing::gradient_check(
          c.inputs,
          [&](ad::Tape& tape, const testing::Leaves& l) {
            const auto out = c.op(tape, l);
            return out.shape().empty() ? out : testing::probe(tape, out, probe_seed);
          },
          kGradEps, kGradAbs, kGradRel);
      worst = std::max(worst, r.worst);
      checks += r.checked;
      o.require(r.ok(), std::string(c.name) + " at " + r.where);
    }
    for (auto kind : models::kAllArchitectures) {
      models::ModelSpec spec;
      spec.kind = kind;
      spec.d_in = spec.d_out = 3;
      spec.hidden = 4;
      spec.layers = 1;
      spec.heads = 2;
      spec.seed = static_cast<std::uint64_t>(seed) + 1;
      const auto window = testing::random_tensor(rng, {2, 5, 3});
      const auto target = testing::random_tensor(rng, {2, 3});
      const auto r = testing::gradient_check(
          models::init_parameters(spec),
          [&](ad::Tape& tape, const testing::Leaves& l) {
            models::ForwardContext ctx;
            return ad::mse_loss(models::forward(spec, l, tape.constant(window), ctx), tape.constant(target));
          },
          kGradEps, kGradAbs, kGradRel);
      worst = std::max(worst, r.worst);
      checks += r.checked;
      o.require(r.ok(), std::string(models::to_string(kind)) + " at " + r.where);
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < kGradBudget, "runtime " + fmt(secs) + " s");
  o.detail << checks << " entries, worst normalized error " << fmt(worst) << ", " << fmt(secs) << " s";
}

// ---------------------------------------------------------------------------

double brute_pearson(const Matrix& m, std::size_t k, std::size_t l) {
  const double n = static_cast<double>(m.rows());
  double mk = 0, ml = 0;
  for (std::size_t t = 0; t < m.rows(); ++t) {
    mk += m(t, k);
    ml += m(t, l);
  }
  mk /= n;
  ml /= n;
  double ckl = 0, ckk = 0, cll = 0;
  for (std::size_t t = 0; t < m.rows(); ++t) {
    ckl += (m(t, k) - mk) * (m(t, l) - ml);
    ckk += (m(t, k) - mk) * (m(t, k) - mk);
    cll += (m(t, l) - ml) * (m(t, l) - ml);
  }
  return ckl / std::sqrt(ckk * cll);
}

void node_selection(Outcome& o) {
  Rng rng(202);
  double worst_rho = 0.0, worst_rec = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = testing::random_matrix(rng, 120, 8, 280.0, 320.0);
    const auto c = select::pearson_matrix(m);
    for (std::size_t k = 0; k < 8; ++k) {
      for (std::size_t l = 0; l < 8; ++l) worst_rho = std::max(worst_rho, std::abs(c(k, l) - brute_pearson(m, k, l)));
    }

    // Independent bases first, then affine dependents of random bases.
    const std::size_t bases = 3 + static_cast<std::size_t>(rng.integer(0, 3));
    auto data = testing::random_matrix(rng, 120, 8, 280.0, 320.0);
    std::vector<std::size_t> dependents;
    for (std::size_t j = bases; j < 8; ++j) {
      const auto parent = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(bases) - 1));
      const double a = rng.uniform(0.2, 3.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
      const double b = rng.uniform(-100.0, 100.0);
      for (std::size_t t = 0; t < 120; ++t) data(t, j) = a * data(t, parent) + b;
      dependents.push_back(j);
    }
    const auto plan = select::build_plan(select::pearson_matrix(data), 0.95);
    std::vector<std::size_t> discarded;
    for (const auto& d : plan.discarded) discarded.push_back(d.node);
    o.require(discarded == dependents, "trial " + std::to_string(trial) + " discarded the wrong nodes");
    const auto full = select::reconstruct(plan, data.select_columns(plan.retained));
    for (std::size_t i = 0; i < data.data().size(); ++i) {
      worst_rec = std::max(worst_rec, std::abs(full.data()[i] - data.data()[i]) / std::abs(data.data()[i]));
    }
  }
  o.require(worst_rho <= kPearsonTol, "pearson error " + fmt(worst_rho));
  o.require(worst_rec <= kReconstructRel, "reconstruction error " + fmt(worst_rec));
  o.detail << "pearson max error " << fmt(worst_rho) << ", reconstruction max rel error " << fmt(worst_rec);
}

// ---------------------------------------------------------------------------

void physics(Outcome& o) {
  const auto layout = sim::load_layout(kLayout);
  auto net = layout.instantiate(layout.nominal_conditions());
  for (auto& n : net.nodes) {
    n.film_coefficient = n.emissivity = n.ground_conductance = n.source_power = 0.0;
  }
  Rng rng(303);
  std::vector<double> s(net.size());
  for (auto& t : s) t = rng.uniform(285.0, 330.0);
  auto energy = [&](const std::vector<double>& x) {
    double e = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) e += net.nodes[i].capacitance * x[i];
    return e;
  };
  const double e0 = energy(s);
  const double dt = 0.9 * net.stability_limit(330.0);
  for (int k = 0; k < 10000; ++k) s = sim::step(net, s, dt);
  const double drift = std::abs(energy(s) - e0) / e0;
  o.require(net.sensor_nodes.size() == 29, "layout has " + std::to_string(net.sensor_nodes.size()) + " sensors");
  o.require(drift <= kEnergyRel, "energy drift " + fmt(drift));

  const double c = 4.0, g = 0.5, tau = c / (2.0 * g);
  sim::ThermalNetwork pair;
  pair.nodes = {sim::ThermalNode{"a", c}, sim::ThermalNode{"b", c}};
  pair.conductances = {{0, 1, g}};
  std::vector<double> p{300.0, 320.0};
  const double d0 = 20.0;
  double worst = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    p = sim::step(pair, p, tau / 100.0);
    worst = std::max(worst, std::abs((p[1] - p[0]) - d0 * std::exp(-k / 100.0)) / d0);
  }
  o.require(worst < kRelaxationRel, "relaxation error " + fmt(worst));
  o.detail << net.size() << "-node insulated energy drift " << fmt(drift) << " over 1e4 steps, relaxation max error "
           << fmt(100.0 * worst) << "% of dT0";
}

// ---------------------------------------------------------------------------

void optimizer(Outcome& o) {
  Rng rng(404);
  train::OptimConfig c;
  c.learning_rate = rng.log_uniform(1e-4, 1e-1);
  c.weight_decay = rng.log_uniform(1e-6, 1e-2);
  double theta = rng.uniform(-2, 2), m = 0.0, v = 0.0;
  models::Parameters p{{"w", ad::Tensor::scalar(theta)}};
  train::AdamState st;
  double worst = 0.0;
  for (int step = 1; step <= 100; ++step) {
    const double g = rng.uniform(-1, 1);
    train::adamw_step(p, {{"w", ad::Tensor::scalar(g)}}, st, c);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, step));
    const double vh = v / (1.0 - std::pow(0.999, step));
    theta -= c.learning_rate * (mh / (std::sqrt(vh) + 1e-8) + c.weight_decay * theta);
    worst = std::max(worst, std::abs(p.at("w").item() - theta));
  }
  o.require(worst <= kAdamTol, "deviation " + fmt(worst));
  o.detail << "100 steps, max deviation " << fmt(worst);
}

// ---------------------------------------------------------------------------

void end_to_end(Outcome& o) {
  const auto layout = sim::load_layout(kLayout);
  const auto suite = sim::make_run_suite(1, layout, 42);
  const auto& run = suite[0].temperature;
  o.require(run.steps() == 600 && run.nodes() == 29, "unexpected run shape");

  models::ModelSpec spec;
  spec.kind = models::Architecture::GRU;
  spec.hidden = 32;
  spec.layers = 1;
  train::OptimConfig opt;
  opt.learning_rate = 1e-2;
  opt.weight_decay = 1e-4;
  opt.epochs = 30;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = train::specialised_protocol(run, spec, opt, 0.95);
  const double secs = seconds_since(t0);
  bool finite = true;
  for (const auto& c : r.curves) {
    for (double x : c.train_loss) finite = finite && std::isfinite(x);
    for (double x : c.val_loss) finite = finite && std::isfinite(x);
  }
  o.require(finite, "non-finite loss curve");
  o.require(r.metrics.mse_mean < kEndToEndMse, "mse " + fmt(r.metrics.mse_mean));
  o.require(r.metrics.mse_std < r.metrics.mse_mean, "std " + fmt(r.metrics.mse_std) + " >= mean");
  o.require(secs < kEndToEndBudget, "runtime " + fmt(secs) + " s");
  o.detail << "kept " << r.plan.retained.size() << "/29 nodes, full-node test MSE " << fmt(r.metrics.mse_mean) << "±"
           << fmt(r.metrics.mse_std) << " over 3 seeds, " << fmt(secs) << " s";
}

// ---------------------------------------------------------------------------

void generalised(Outcome& o) {
  const auto layout = sim::load_layout(kLayout);
  const auto suite = sim::make_run_suite(3, layout, 42);
  std::vector<dataset::NodeTimeSeries> runs;
  for (const auto& r : suite) runs.push_back(r.temperature);
  const auto& src = runs[0];
  runs.emplace_back("RUN1_COPY", src.quantity(), src.timestamps(), src.values(), src.node_ids());

  for (auto kind : {models::Architecture::GRU, models::Architecture::TCN}) {
    models::ModelSpec spec;
    spec.kind = kind;
    spec.hidden = 32;
    spec.layers = kind == models::Architecture::TCN ? 2 : 1;
    train::OptimConfig opt;
    opt.learning_rate = 1e-2;
    opt.weight_decay = 1e-4;
    const auto folds = train::generalised_protocol(runs, spec, opt, 0.95, {1});
    const std::string name(models::to_string(kind));
    o.require(folds.size() == 4, name + " produced " + std::to_string(folds.size()) + " folds");
    o.detail << name << " ratios";
    for (const auto& f : folds) {
      bool finite = std::isfinite(f.held_out_metrics.mse_mean) && std::isfinite(f.in_distribution.mse_mean);
      for (const auto& curve : f.train_loss) {
        for (double x : curve) finite = finite && std::isfinite(x);
      }
      for (const auto& curve : f.val_loss) {
        for (double x : curve) finite = finite && std::isfinite(x);
      }
      o.require(finite, name + " fold " + f.held_out + " has a non-finite loss");
      const double ratio = f.held_out_metrics.mse_mean / f.in_distribution.mse_mean;
      o.detail << ' ' << f.held_out << '=' << fmt(ratio);
      if (f.held_out == "RUN1_COPY") {
        o.require(ratio <= kDuplicateRatio, name + " duplicate-run ratio " + fmt(ratio));
        o.require(ratio <= kHeldOutRatio, name + " duplicate-run ratio " + fmt(ratio));
      }
    }
    o.detail << "; ";
  }
  o.detail << "bounds apply to the RUN1_COPY control fold";
}

// ---------------------------------------------------------------------------

void report_fidelity(Outcome& o) {
  o.require(report::format_cell(4.90e-5, 0.10e-5) == "4.90±0.10", "cell text");
  // Transcribed first data row of the specialised temperature table.
  const std::vector<std::pair<const char*, std::pair<double, double>>> row{
      {"RNN", {11.57, 5.80}},  {"GRU", {4.90, 0.10}},          {"LSTM", {8.67, 3.70}},
      {"BiLSTM", {5.13, 0.78}}, {"Transformer", {39.03, 23.32}}, {"TCN", {5.70, 1.39}}};
  std::vector<report::MetricRecord> recs;
  for (const auto& [model, ms] : row) {
    report::MetricRecord r;
    r.run_id = "RUN1";
    r.model = model;
    r.mse_mean = ms.first * report::kScale;
    r.mse_std = ms.second * report::kScale;
    r.n_repeats = 3;
    recs.push_back(r);
  }
  const auto rep = report::build_reports(recs)[0];
  std::string bold;
  for (std::size_t i = 0; i < rep.models.size(); ++i) {
    const auto& cell = rep.rows[0].cells[i];
    o.require(cell.has_value(), "missing cell");
    if (cell && cell->best) bold += (bold.empty() ? "" : ",") + rep.models[i];
    if (cell) {
      o.require(report::format_cell(cell->mean, cell->std) ==
                    [&] {
                      char buf[32];
                      std::snprintf(buf, sizeof buf, "%.2f±%.2f", row[i].second.first, row[i].second.second);
                      return std::string(buf);
                    }(),
                "cell " + rep.models[i]);
    }
  }
  o.require(bold == "GRU", "best marked " + bold);
  o.detail << "cell \"4.90±0.10\", RUN1 best = " << bold;
}

// ---------------------------------------------------------------------------

bool close(double a, double b) { return std::abs(a - b) <= kChainTol * std::max(1.0, std::abs(b)); }

void error_chain(Outcome& o) {
  o.require(close(chain::thermal_strain(12e-6, 10.0), 1.2e-4), "strain");
  o.require(close(chain::thermal_stress(200e9, 12e-6, 10.0), 24e6), "stress");
  chain::StructuralElement e;
  e.name = "x";
  e.length = 1.0;
  e.alpha = 10e-6;
  e.nodes = {"a"};
  o.require(close(chain::axis_position(e, chain::kReferenceTemp + 5.0), -1.00005), "axis position");
  chain::Chain single;
  e.length = 0.5;
  e.alpha = 11e-6;
  e.axis = chain::Axis::Z;
  single.elements = {e};
  const std::vector<double> warm{chain::kReferenceTemp + 4.0};
  o.require(close(chain::tcp_drift(single, {"a"}, warm).drift[2], 22e-6), "drift");

  const auto c = chain::load_chain(kChainFile);
  std::vector<std::string> ids;
  for (const auto& el : c.elements) ids.insert(ids.end(), el.nodes.begin(), el.nodes.end());
  Rng rng(808);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> t(ids.size());
    for (auto& x : t) x = rng.uniform(285.0, 320.0);
    const auto d = chain::tcp_drift(c, ids, t);
    for (double r : chain::residual(d, chain::compensation_offset(d))) worst = std::max(worst, std::abs(r));
  }
  o.require(worst <= kChainTol, "round trip residual " + fmt(worst));
  o.detail << "worked examples exact, offset round trip max residual " << fmt(worst) << " m";
}

// ---------------------------------------------------------------------------

void causality(Outcome& o) {
  Rng rng(909);
  std::size_t compared = 0;
  for (auto kind : {models::Architecture::TCN, models::Architecture::RNN, models::Architecture::GRU,
                    models::Architecture::LSTM}) {
    models::ModelSpec spec;
    spec.kind = kind;
    spec.d_in = spec.d_out = 3;
    spec.hidden = 8;
    spec.layers = 2;
    spec.kernel_size = 3;
    spec.seed = 5;
    const auto params = models::init_parameters(spec);
    auto outputs = [&](const ad::Tensor& w) {
      ad::Tape tape;
      models::Bound b;
      for (const auto& [n, t] : params) b.emplace(n, tape.constant(t));
      models::ForwardContext ctx;
      return models::forward_sequence(spec, b, tape.constant(w), ctx).value();
    };
    const std::size_t steps = 16;
    for (int trial = 0; trial < kCausalPerturbations; ++trial) {
      const auto base = testing::random_tensor(rng, {2, steps, 3});
      const auto ref = outputs(base);
      const auto cut = static_cast<std::size_t>(rng.integer(1, steps - 1));
      auto perturbed = base;
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t t = cut; t < steps; ++t) {
          for (std::size_t ch = 0; ch < 3; ++ch) perturbed[(b * steps + t) * 3 + ch] += rng.uniform(-5.0, 5.0);
        }
      }
      const auto out = outputs(perturbed);
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t t = 0; t < cut; ++t) {
          for (std::size_t ch = 0; ch < 3; ++ch) {
            const std::size_t i = (b * steps + t) * 3 + ch;
            o.require(out[i] == ref[i], std::string(models::to_string(kind)) + " output moved at t=" + std::to_string(t));
            ++compared;
          }
        }
      }
    }
  }
  o.detail << compared << " past outputs bit-identical across " << 4 * kCausalPerturbations << " perturbations";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    void (*run)(Outcome&);
  };
  const Criterion criteria[] = {
      {1, "autodiff gradient suite", gradients},
      {2, "node-selection oracle equivalence", node_selection},
      {3, "physics conservation", physics},
      {4, "optimizer oracle", optimizer},
      {5, "end-to-end specialised protocol", end_to_end},
      {6, "generalised protocol smoke", generalised},
      {7, "report fidelity", report_fidelity},
      {8, "error-chain exactness", error_chain},
      {9, "causality", causality},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << "  " << c.name << ": " << o.detail.str()
              << std::endl;
  }
  std::cout << (9 - failed) << "/9 criteria passed" << std::endl;
  return failed;
}
