#include "thermo/thermal_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "thermo/config.hpp"
#include "thermo/errors.hpp"
#include "thermo/rng.hpp"

namespace thermo::sim {

namespace {

double pow4(double t) {
  const double t2 = t * t;
  return t2 * t2;
}

}  // namespace

void ThermalNetwork::validate() const {
  if (nodes.empty()) fail(ErrorKind::InvalidArgument, "thermal network has no nodes");
  for (const auto& n : nodes) {
    if (!(n.capacitance > 0.0)) fail(ErrorKind::InvalidArgument, "node '" + n.id + "' needs C > 0");
    if (!(n.emissivity >= 0.0 && n.emissivity <= 1.0)) {
      fail(ErrorKind::InvalidArgument, "node '" + n.id + "' emissivity outside [0,1]");
    }
    if (n.film_coefficient < 0.0 || n.area < 0.0 || n.ground_conductance < 0.0) {
      fail(ErrorKind::InvalidArgument, "node '" + n.id + "' has a negative boundary term");
    }
    if (n.duty_period < 0.0 || !(n.duty_fraction > 0.0 && n.duty_fraction <= 1.0)) {
      fail(ErrorKind::InvalidArgument, "node '" + n.id + "' has an invalid duty cycle");
    }
  }
  for (const auto& g : conductances) {
    if (g.a >= nodes.size() || g.b >= nodes.size()) {
      fail(ErrorKind::InvalidArgument, "conductance references a missing node");
    }
    if (g.a == g.b) fail(ErrorKind::InvalidArgument, "self-conductance on node " + nodes[g.a].id);
    if (!(g.value >= 0.0)) fail(ErrorKind::InvalidArgument, "negative conductance");
  }
  for (auto s : sensor_nodes) {
    if (s >= nodes.size()) fail(ErrorKind::InvalidArgument, "sensor index out of range");
  }
  for (double t : {ambient_temp, surroundings_temp, ground_temp}) {
    if (!(t > 0.0)) fail(ErrorKind::InvalidArgument, "boundary temperatures must be positive");
  }
}

double ThermalNetwork::stability_limit(double reference_temp) const {
  std::vector<double> total(nodes.size(), 0.0);
  for (const auto& g : conductances) {
    total[g.a] += g.value;
    total[g.b] += g.value;
  }
  double limit = std::numeric_limits<double>::infinity();
  const double t3 = reference_temp * reference_temp * reference_temp;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const double g = total[i] + n.film_coefficient * n.area +
                     4.0 * n.emissivity * kStefanBoltzmann * n.area * t3 + n.ground_conductance;
    if (g > 0.0) limit = std::min(limit, n.capacitance / g);
  }
  return limit;
}

double source_power_at(const ThermalNode& node, double t) {
  if (node.duty_period <= 0.0) return node.source_power;
  const double phase = std::fmod(t, node.duty_period);
  return phase < node.duty_fraction * node.duty_period ? node.source_power : 0.0;
}

std::vector<double> net_power(const ThermalNetwork& network, const std::vector<double>& state,
                              double time) {
  if (state.size() != network.size()) {
    fail(ErrorKind::DimensionMismatch, "state length does not match the network");
  }
  std::vector<double> power(state.size(), 0.0);
  for (const auto& g : network.conductances) {
    const double q = g.value * (state[g.b] - state[g.a]);
    power[g.a] += q;
    power[g.b] -= q;
  }
  const double surr4 = pow4(network.surroundings_temp);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& n = network.nodes[i];
    const double t = state[i];
    power[i] += -n.film_coefficient * n.area * (t - network.ambient_temp) -
                n.emissivity * kStefanBoltzmann * n.area * (pow4(t) - surr4) +
                n.ground_conductance * (network.ground_temp - t) + source_power_at(n, time);
  }
  return power;
}

std::vector<double> step(const ThermalNetwork& network, const std::vector<double>& state,
                         double dt, double time) {
  for (double t : state) {
    if (!std::isfinite(t)) fail(ErrorKind::NonFinite, "thermal state is not finite");
  }
  const auto power = net_power(network, state, time);
  std::vector<double> next(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    next[i] = state[i] + dt * power[i] / network.nodes[i].capacitance;
    if (!std::isfinite(next[i])) fail(ErrorKind::NonFinite, "thermal update produced NaN/Inf");
    if (std::abs(next[i]) > kSanityBoundKelvin) {
      fail(ErrorKind::Unstable, "node '" + network.nodes[i].id + "' left the sanity bound");
    }
  }
  return next;
}

double heat_balance(const ThermalNetwork& network, const std::vector<double>& state, double time) {
  if (state.size() != network.size()) {
    fail(ErrorKind::DimensionMismatch, "state length does not match the network");
  }
  const double surr4 = pow4(network.surroundings_temp);
  double generated = 0.0;
  double dissipated = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& n = network.nodes[i];
    const double t = state[i];
    generated += source_power_at(n, time);
    dissipated += n.film_coefficient * n.area * (t - network.ambient_temp) +
                  n.emissivity * kStefanBoltzmann * n.area * (pow4(t) - surr4) +
                  n.ground_conductance * (t - network.ground_temp);
  }
  return generated - dissipated;
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) fail(ErrorKind::InvalidArgument, "dt must be positive");
  if (sample_every == 0) fail(ErrorKind::InvalidArgument, "sample_every must be positive");
  if (steps % sample_every != 0) {
    fail(ErrorKind::InvalidArgument, "steps must be a multiple of sample_every");
  }
  if (sensor_noise < 0.0) fail(ErrorKind::InvalidArgument, "sensor_noise must be non-negative");
  initial_conditions.validate();
}

RunPair simulate_run(const ThermalNetwork& network, const SimConfig& config) {
  network.validate();
  config.validate();
  if (network.sensor_nodes.size() < 2) {
    fail(ErrorKind::InvalidArgument, "a run needs at least two sensor nodes");
  }
  const auto& ic = config.initial_conditions;
  const double reference =
      1.25 * std::max({ic.initial_system_temp, network.ambient_temp, network.surroundings_temp,
                       network.ground_temp});
  const double limit = network.stability_limit(reference);
  if (!(config.dt < limit)) {
    fail(ErrorKind::Unstable, "dt = " + std::to_string(config.dt) +
                                  " s exceeds the explicit stability bound " +
                                  std::to_string(limit) + " s");
  }

  const std::size_t d = network.sensor_nodes.size();
  const std::size_t rows = config.steps / config.sample_every + 1;
  Matrix temps(rows, d);
  Matrix fluxes(rows, d);
  std::vector<double> times(rows);
  Rng noise(config.rng_seed);

  auto record = [&](std::size_t row, const std::vector<double>& state, double t) {
    times[row] = t;
    const auto power = net_power(network, state, t);
    for (std::size_t j = 0; j < d; ++j) {
      const auto idx = network.sensor_nodes[j];
      const double area = network.nodes[idx].area;
      temps(row, j) = state[idx];
      fluxes(row, j) = area > 0.0 ? power[idx] / area : power[idx];
      if (config.sensor_noise > 0.0) {
        temps(row, j) += config.sensor_noise * noise.normal();
        fluxes(row, j) += config.sensor_noise * noise.normal();
      }
    }
  };

  std::vector<double> state(network.size(), ic.initial_system_temp);
  record(0, state, 0.0);
  for (std::size_t k = 1; k <= config.steps; ++k) {
    state = step(network, state, config.dt, static_cast<double>(k - 1) * config.dt);
    if (k % config.sample_every == 0) {
      record(k / config.sample_every, state, static_cast<double>(k) * config.dt);
    }
  }

  std::vector<std::string> ids;
  ids.reserve(d);
  for (auto idx : network.sensor_nodes) ids.push_back(network.nodes[idx].id);
  using dataset::NodeTimeSeries;
  using dataset::Quantity;
  return {NodeTimeSeries::segment(config.run_id, Quantity::Temperature, times, std::move(temps),
                                  ids, ic),
          NodeTimeSeries::segment(config.run_id, Quantity::HeatFlux, times, std::move(fluxes), ids,
                                  ic)};
}

dataset::InitialConditions NetworkLayout::nominal_conditions() const {
  auto mid = [](std::pair<double, double> r) { return 0.5 * (r.first + r.second); };
  dataset::InitialConditions ic;
  ic.ambient_temp = mid(ranges.ambient_temp);
  ic.ground_temp = mid(ranges.ground_temp);
  ic.initial_system_temp = mid(ranges.initial_system_temp);
  ic.film_coefficient = mid(ranges.film_coefficient);
  for (const auto& s : sources) ic.heat_flux_magnitudes.push_back(s.base_flux * mid(ranges.flux_scale));
  return ic;
}

ThermalNetwork NetworkLayout::instantiate(const dataset::InitialConditions& ic) const {
  ic.validate();
  if (ic.heat_flux_magnitudes.size() != sources.size()) {
    fail(ErrorKind::InvalidArgument, "expected " + std::to_string(sources.size()) +
                                         " heat-flux magnitudes, got " +
                                         std::to_string(ic.heat_flux_magnitudes.size()));
  }
  ThermalNetwork net;
  net.ambient_temp = ic.ambient_temp;
  net.surroundings_temp = ic.ambient_temp;
  net.ground_temp = ic.ground_temp;
  net.conductances = conductances;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    ThermalNode tn;
    tn.id = n.id;
    tn.capacitance = n.capacitance;
    tn.area = n.area;
    tn.film_coefficient = n.exposure * ic.film_coefficient;
    tn.emissivity = n.emissivity;
    tn.ground_conductance = n.ground_conductance;
    if (n.source >= 0) {
      const auto& src = sources[static_cast<std::size_t>(n.source)];
      tn.source_power = ic.heat_flux_magnitudes[static_cast<std::size_t>(n.source)] * n.source_area;
      tn.duty_period = src.period;
      tn.duty_fraction = src.duty;
    }
    net.nodes.push_back(tn);
    if (n.sensor) net.sensor_nodes.push_back(i);
  }
  net.validate();
  return net;
}

NetworkLayout parse_layout(const std::string& text, const std::string& label) {
  const auto doc = config::parse(text, label);
  NetworkLayout layout;

  layout.sim.dt = doc.number_or("dt", layout.sim.dt);
  layout.sim.steps = static_cast<std::size_t>(doc.number_or("steps", 100));
  layout.sim.sample_every = static_cast<std::size_t>(doc.number_or("sample_every", 1));
  layout.sim.sensor_noise = doc.number_or("sensor_noise", 0.0);
  layout.ranges.ambient_temp = doc.range_or("ambient_range", layout.ranges.ambient_temp);
  layout.ranges.ground_temp = doc.range_or("ground_range", layout.ranges.ground_temp);
  layout.ranges.initial_system_temp =
      doc.range_or("initial_range", layout.ranges.initial_system_temp);
  layout.ranges.film_coefficient = doc.range_or("film_range", layout.ranges.film_coefficient);
  layout.ranges.flux_scale = doc.range_or("flux_scale_range", layout.ranges.flux_scale);

  std::map<std::string, int> source_index;
  for (const auto* rec : doc.of_kind("source")) {
    if (rec->positional.size() != 1) {
      rec->error("expected 'source <name> flux=<W/m^2> [period=<s>] [duty=<0..1>]'");
    }
    const auto& name = rec->positional[0];
    if (source_index.count(name)) rec->error("duplicate source '" + name + "'");
    source_index[name] = static_cast<int>(layout.sources.size());
    NetworkLayout::Source src{name, rec->number("flux"), rec->number_or("period", 0.0),
                              rec->number_or("duty", 1.0)};
    if (src.period < 0.0) rec->error("period must be non-negative");
    if (!(src.duty > 0.0 && src.duty <= 1.0)) rec->error("duty must lie in (0, 1]");
    layout.sources.push_back(std::move(src));
  }

  std::map<std::string, std::size_t> node_index;
  for (const auto* rec : doc.of_kind("node")) {
    if (rec->positional.size() != 1) rec->error("expected 'node <id> key=value ...'");
    NetworkLayout::Node n;
    n.id = rec->positional[0];
    if (node_index.count(n.id)) rec->error("duplicate node '" + n.id + "'");
    n.capacitance = rec->number("C");
    if (!(n.capacitance > 0.0)) rec->error("C must be positive");
    n.area = rec->number_or("area", 0.0);
    n.exposure = rec->number_or("exposure", 1.0);
    n.emissivity = rec->number_or("eps", 0.0);
    if (n.emissivity < 0.0 || n.emissivity > 1.0) rec->error("eps must lie in [0,1]");
    n.ground_conductance = rec->number_or("ground", 0.0);
    n.sensor = rec->number_or("sensor", 1.0) != 0.0;
    if (rec->has("source")) {
      auto it = source_index.find(rec->fields.at("source"));
      if (it == source_index.end()) rec->error("unknown source '" + rec->fields.at("source") + "'");
      n.source = it->second;
      n.source_area = rec->number("source_area");
    }
    node_index[n.id] = layout.nodes.size();
    layout.nodes.push_back(n);
  }

  for (const auto* rec : doc.of_kind("edge")) {
    if (rec->positional.size() != 2) rec->error("expected 'edge <a> <b> G=<W/K>'");
    auto a = node_index.find(rec->positional[0]);
    auto b = node_index.find(rec->positional[1]);
    if (a == node_index.end()) rec->error("unknown node '" + rec->positional[0] + "'");
    if (b == node_index.end()) rec->error("unknown node '" + rec->positional[1] + "'");
    if (a->second == b->second) rec->error("edge connects a node to itself");
    const double g = rec->number("G");
    if (g < 0.0) rec->error("G must be non-negative");
    layout.conductances.push_back({a->second, b->second, g});
  }

  for (const auto& r : doc.records) {
    if (r.kind != "node" && r.kind != "edge" && r.kind != "source") {
      r.error("unknown record kind '" + r.kind + "'");
    }
  }
  if (layout.nodes.empty()) fail(ErrorKind::ConfigError, label + ": no nodes defined");
  try {
    layout.sim.validate();
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, label + ": " + e.what());
  }
  return layout;
}

NetworkLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot open network config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_layout(buf.str(), path.string());
}

std::vector<dataset::InitialConditions> sample_conditions(std::size_t n_runs,
                                                          const NetworkLayout& layout,
                                                          std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  const auto& r = layout.ranges;
  std::vector<dataset::InitialConditions> out;
  out.reserve(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) {
    dataset::InitialConditions ic;
    ic.ambient_temp = rng.uniform(r.ambient_temp.first, r.ambient_temp.second);
    ic.ground_temp = rng.uniform(r.ground_temp.first, r.ground_temp.second);
    ic.initial_system_temp = rng.uniform(r.initial_system_temp.first, r.initial_system_temp.second);
    ic.film_coefficient = rng.uniform(r.film_coefficient.first, r.film_coefficient.second);
    for (const auto& s : layout.sources) {
      ic.heat_flux_magnitudes.push_back(s.base_flux *
                                        rng.uniform(r.flux_scale.first, r.flux_scale.second));
    }
    out.push_back(std::move(ic));
  }
  return out;
}

std::vector<RunPair> make_run_suite(std::size_t n_runs, const NetworkLayout& layout,
                                    std::uint64_t rng_seed) {
  if (n_runs == 0) fail(ErrorKind::InvalidArgument, "n_runs must be at least 1");
  const auto conditions = sample_conditions(n_runs, layout, rng_seed);
  std::vector<RunPair> runs;
  runs.reserve(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) {
    SimConfig cfg = layout.sim;
    cfg.initial_conditions = conditions[i];
    cfg.run_id = "RUN" + std::to_string(i + 1);
    cfg.rng_seed = rng_seed * 1000003ULL + i + 1;
    runs.push_back(simulate_run(layout.instantiate(conditions[i]), cfg));
  }
  return runs;
}

}  // namespace thermo::sim
