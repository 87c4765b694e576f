#include <doctest.h>

#include <numeric>

#include "support.hpp"
#include "thermo/thermal_sim.hpp"

using namespace thermo;
using namespace thermo::sim;

namespace {

ThermalNetwork pair_network(double c, double g) {
  ThermalNetwork net;
  net.nodes = {ThermalNode{"a", c}, ThermalNode{"b", c}};
  net.conductances = {{0, 1, g}};
  net.sensor_nodes = {0, 1};
  return net;
}

ThermalNetwork random_network(Rng& rng, std::size_t n, bool insulated) {
  ThermalNetwork net;
  for (std::size_t i = 0; i < n; ++i) {
    ThermalNode node{"n" + std::to_string(i), rng.uniform(1.0, 10.0)};
    if (!insulated) {
      node.film_coefficient = rng.uniform(0.0, 15.0);
      node.area = rng.uniform(0.0, 0.5);
      node.emissivity = rng.uniform(0.0, 1.0);
      node.ground_conductance = rng.bernoulli(0.3) ? rng.uniform(0.0, 2.0) : 0.0;
      node.source_power = rng.bernoulli(0.3) ? rng.uniform(0.0, 50.0) : 0.0;
    }
    net.nodes.push_back(node);
    net.sensor_nodes.push_back(i);
  }
  for (std::size_t i = 1; i < n; ++i) {
    net.conductances.push_back({static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i) - 1)), i,
                                rng.uniform(0.1, 3.0)});
  }
  for (int extra = 0; extra < static_cast<int>(n); ++extra) {
    const auto a = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(n) - 1));
    const auto b = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(n) - 1));
    if (a != b) net.conductances.push_back({a, b, rng.uniform(0.1, 3.0)});
  }
  net.ambient_temp = rng.uniform(285.0, 300.0);
  net.surroundings_temp = net.ambient_temp;
  net.ground_temp = rng.uniform(285.0, 295.0);
  return net;
}

std::vector<double> random_state(Rng& rng, std::size_t n) {
  std::vector<double> s(n);
  for (auto& t : s) t = rng.uniform(280.0, 330.0);
  return s;
}

double energy(const ThermalNetwork& net, const std::vector<double>& state) {
  double e = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) e += net.nodes[i].capacitance * state[i];
  return e;
}

}  // namespace

TEST_SUITE("thermal_sim") {

TEST_CASE("isolated node does not change") {
  ThermalNetwork net;
  net.nodes = {ThermalNode{"x", 3.0}};
  CHECK(step(net, {301.0}, 0.5) == std::vector<double>{301.0});
}

TEST_CASE("two-node conduction step by hand") {
  const auto net = pair_network(1.0, 1.0);
  // C dT/dt = G (T_other - T): 300 + 0.1 * 10 and 310 - 0.1 * 10.
  const auto next = step(net, {300.0, 310.0}, 0.1);
  CHECK(next[0] == doctest::Approx(301.0).epsilon(1e-14));
  CHECK(next[1] == doctest::Approx(309.0).epsilon(1e-14));
}

TEST_CASE("radiation vanishes at the surroundings temperature") {
  ThermalNetwork net;
  net.nodes = {ThermalNode{"r", 2.0, 0.0, 1.5, 0.9}};
  net.surroundings_temp = 310.0;
  CHECK(step(net, {310.0}, 1.0)[0] == 310.0);
  // Outward (negative net power) exactly when the surface is hotter.
  CHECK(net_power(net, {320.0})[0] < 0.0);
  CHECK(net_power(net, {300.0})[0] > 0.0);
}

TEST_CASE("heat balance at equilibrium and with a bare source") {
  Rng rng(1);
  auto net = random_network(rng, 6, false);
  for (auto& n : net.nodes) n.source_power = 0.0;
  net.ground_temp = net.ambient_temp;
  CHECK(heat_balance(net, std::vector<double>(6, net.ambient_temp)) == 0.0);

  ThermalNetwork bare;
  bare.nodes = {ThermalNode{"s", 1.0}};
  bare.nodes[0].source_power = 5.0;
  CHECK(heat_balance(bare, {400.0}) == 5.0);
}

TEST_CASE("heat balance equals the stored-energy rate of one step") {
  Rng rng(2);
  for (int trial = 0; trial < 25; ++trial) {
    const auto net = random_network(rng, 2 + static_cast<std::size_t>(rng.integer(0, 10)), false);
    const auto s = random_state(rng, net.size());
    const double dt = 0.5 * net.stability_limit(330.0);
    const auto next = step(net, s, dt);
    const double rate = (energy(net, next) - energy(net, s)) / dt;
    CHECK(std::abs(rate - heat_balance(net, s)) <= 1e-8 * std::max(1.0, std::abs(rate)) + 1e-8);
  }
}

TEST_CASE("insulated networks conserve energy") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto net = random_network(rng, 12, true);
    auto s = random_state(rng, net.size());
    const double e0 = energy(net, s);
    const double dt = 0.5 * net.stability_limit(330.0);
    for (int k = 0; k < 2000; ++k) s = step(net, s, dt);
    CHECK(std::abs(energy(net, s) - e0) <= 1e-9 * e0);
  }
}

TEST_CASE("relaxation toward a common boundary temperature is monotone") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto net = random_network(rng, 8, false);
    for (auto& n : net.nodes) n.source_power = 0.0;
    net.ground_temp = net.surroundings_temp = net.ambient_temp;
    auto s = random_state(rng, net.size());
    const double dt = 0.9 * net.stability_limit(330.0);
    auto spread = [&] {
      double m = 0.0;
      for (double t : s) m = std::max(m, std::abs(t - net.ambient_temp));
      return m;
    };
    double prev = spread();
    for (int k = 0; k < 300; ++k) {
      s = step(net, s, dt);
      const double now = spread();
      CHECK(now <= prev + 1e-12);
      prev = now;
    }
  }
}

TEST_CASE("two-node relaxation follows the closed form") {
  const double c = 4.0, g = 0.5;
  const double tau = c / (2.0 * g);
  const auto net = pair_network(c, g);
  const double dt = tau / 100.0;
  std::vector<double> s{300.0, 320.0};
  const double d0 = s[1] - s[0];
  double worst = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    s = step(net, s, dt);
    const double exact = d0 * std::exp(-k * dt / tau);
    worst = std::max(worst, std::abs((s[1] - s[0]) - exact) / d0);
    CHECK(s[1] - s[0] > 0.0);
  }
  CHECK(worst < 0.005);
  CHECK(std::abs(s[1] - s[0]) < 0.01 * d0);
}

TEST_CASE("blow-ups are reported") {
  auto net = pair_network(1.0, 1.0);
  CHECK(testing::error_kind([&] { step(net, {300.0, 310.0}, 1e6); }) == ErrorKind::Unstable);
  CHECK(testing::error_kind([&] { step(net, {std::nan(""), 310.0}, 0.1); }) == ErrorKind::NonFinite);

  SimConfig cfg;
  cfg.dt = 10.0;  // limit is C / G = 1 s
  cfg.steps = 10;
  CHECK(testing::error_kind([&] { simulate_run(net, cfg); }) == ErrorKind::Unstable);
}

TEST_CASE("duty cycle switches the source") {
  ThermalNode n{"s", 1.0};
  n.source_power = 7.0;
  n.duty_period = 10.0;
  n.duty_fraction = 0.3;
  CHECK(source_power_at(n, 0.0) == 7.0);
  CHECK(source_power_at(n, 2.9) == 7.0);
  CHECK(source_power_at(n, 3.0) == 0.0);
  CHECK(source_power_at(n, 12.0) == 7.0);
  n.duty_period = 0.0;
  CHECK(source_power_at(n, 3.0) == 7.0);
}

TEST_CASE("insulated uniform run is constant") {
  Rng rng(5);
  const auto net = random_network(rng, 5, true);
  SimConfig cfg;
  cfg.dt = 0.5 * net.stability_limit(300.0);
  cfg.steps = 120;
  cfg.sample_every = 10;
  cfg.initial_conditions.initial_system_temp = 296.0;
  const auto run = simulate_run(net, cfg);
  CHECK(run.temperature.steps() == 13);
  for (double v : run.temperature.values().data()) CHECK(v == 296.0);
  for (double v : run.heat_flux.values().data()) CHECK(v == 0.0);
}

TEST_CASE("shipped layout simulates deterministically") {
  const auto layout = load_layout(std::string(THERMO_SOURCE_DIR) + "/configs/machine_tool.cfg");
  const auto a = make_run_suite(12, layout, 9);
  REQUIRE(a.size() == 12);
  const auto b = make_run_suite(12, layout, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].temperature.nodes() == 29);
    CHECK(a[i].temperature.steps() == 600);
    CHECK(a[i].heat_flux.quantity() == dataset::Quantity::HeatFlux);
    CHECK(a[i].temperature.values() == b[i].temperature.values());
    CHECK(a[i].heat_flux.values() == b[i].heat_flux.values());
    CHECK(a[i].temperature.run_id() == "RUN" + std::to_string(i + 1));
  }
  const auto c = sample_conditions(12, layout, 10);
  const auto d = sample_conditions(12, layout, 9);
  bool differs = false;
  for (std::size_t i = 0; i < c.size(); ++i) differs = differs || !(c[i] == d[i]);
  CHECK(differs);
  for (const auto& ic : d) {
    CHECK(ic.ambient_temp >= layout.ranges.ambient_temp.first);
    CHECK(ic.ambient_temp <= layout.ranges.ambient_temp.second);
    CHECK(ic.film_coefficient >= layout.ranges.film_coefficient.first);
    CHECK(ic.film_coefficient <= layout.ranges.film_coefficient.second);
  }
}

TEST_CASE("layout errors name the file and line") {
  try {
    parse_layout("dt = 1\nsteps = 10\nnode a C=1\nnode b C=-2\n", "bad.cfg");
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    CHECK(std::string(e.what()).find("bad.cfg:4") != std::string::npos);
  }
  CHECK(testing::error_kind([] { parse_layout("node a C=1\nedge a zz G=1\n", "x.cfg"); }) == ErrorKind::ConfigError);
}

}  // TEST_SUITE
