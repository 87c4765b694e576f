#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "thermo/dataset.hpp"

namespace thermo::sim {

inline constexpr double kStefanBoltzmann = 5.67e-8;  // W/(m^2 K^4)
/// States beyond this magnitude are treated as a blown-up integration.
inline constexpr double kSanityBoundKelvin = 1e4;

struct ThermalNode {
  std::string id;
  double capacitance = 1.0;         // J/K, rho * c_p * V
  double film_coefficient = 0.0;    // W/(m^2 K)
  double area = 0.0;                // m^2, convective/radiative surface
  double emissivity = 0.0;          // [0, 1]
  double ground_conductance = 0.0;  // W/K to the foundation
  double source_power = 0.0;        // W, internal generation while the source is on
  double duty_period = 0.0;         // s, 0 keeps the source permanently on
  double duty_fraction = 1.0;       // on-share of each period, starting at t = 0
};

/// Generation of `node` at time `t` under its duty cycle.
double source_power_at(const ThermalNode& node, double t);

struct Conductance {
  std::size_t a = 0;
  std::size_t b = 0;
  double value = 0.0;  // W/K, k * A / L
};

/// Lumped network: capacitances joined by symmetric conductances, with
/// convection and radiation to the surroundings and optional ground coupling.
struct ThermalNetwork {
  std::vector<ThermalNode> nodes;
  std::vector<Conductance> conductances;
  std::vector<std::size_t> sensor_nodes;
  double ambient_temp = 293.15;       // T_inf for convection
  double surroundings_temp = 293.15;  // T_surr for radiation
  double ground_temp = 293.15;

  std::size_t size() const noexcept { return nodes.size(); }
  void validate() const;
  /// Largest explicit-Euler step keeping every update a convex combination,
  /// with radiation linearised at `reference_temp`.
  double stability_limit(double reference_temp) const;
};

/// Per-node power balance C_i dT_i/dt (W) at time `t`.
std::vector<double> net_power(const ThermalNetwork& network, const std::vector<double>& state,
                              double t = 0.0);

/// One explicit Euler step from time `t`.
std::vector<double> step(const ThermalNetwork& network, const std::vector<double>& state, double dt,
                         double t = 0.0);

/// Total generation minus total dissipation (convection, radiation and ground
/// outflow) at time `t`, in W.
double heat_balance(const ThermalNetwork& network, const std::vector<double>& state, double t = 0.0);

struct SimConfig {
  double dt = 1.0;                // s, internal step
  std::size_t steps = 100;        // internal steps
  std::size_t sample_every = 1;   // export cadence in internal steps
  dataset::InitialConditions initial_conditions;
  std::uint64_t rng_seed = 0;
  double sensor_noise = 0.0;      // K (or W/m^2) standard deviation added on export
  std::string run_id = "RUN1";

  void validate() const;
};

struct RunPair {
  dataset::NodeTimeSeries temperature;
  dataset::NodeTimeSeries heat_flux;
};

/// Sensor temperatures and the net heat flux into each sensor node (W/m^2 of
/// the node's surface area), sampled every `sample_every` steps including t=0.
RunPair simulate_run(const ThermalNetwork& network, const SimConfig& config);

/// Geometry and material description of a machine, independent of any
/// particular run's boundary conditions.
struct NetworkLayout {
  struct Node {
    std::string id;
    double capacitance = 1.0;
    double area = 0.0;
    double exposure = 1.0;  // multiplier on the run's film coefficient
    double emissivity = 0.0;
    double ground_conductance = 0.0;
    int source = -1;        // index into sources, -1 when unheated
    double source_area = 0.0;
    bool sensor = true;
  };
  struct Source {
    std::string name;
    double base_flux = 0.0;  // W/m^2
    double period = 0.0;     // s, 0 = always on
    double duty = 1.0;       // on-share of each period
  };
  struct Ranges {
    std::pair<double, double> ambient_temp{288.15, 298.15};
    std::pair<double, double> ground_temp{286.15, 294.15};
    std::pair<double, double> initial_system_temp{288.15, 298.15};
    std::pair<double, double> film_coefficient{6.0, 14.0};
    std::pair<double, double> flux_scale{0.6, 1.4};
  };

  std::vector<Node> nodes;
  std::vector<Conductance> conductances;
  std::vector<Source> sources;
  Ranges ranges;
  SimConfig sim;  // dt, steps, sample_every, noise; initial conditions ignored

  /// Boundary conditions at the centre of every sampling range.
  dataset::InitialConditions nominal_conditions() const;
  ThermalNetwork instantiate(const dataset::InitialConditions& ic) const;
};

/// Reads a layout from the declarative config format:
///   dt = 20                       sample_every = 4        steps = 2396
///   ambient_range = 288.15 298.15 (also ground_, initial_, film_, flux_scale_range)
///   source <name> flux=<W/m^2> period=<s> duty=<0..1>
///   node <id> C=<J/K> area=<m^2> exposure=<0..1> eps=<0..1> ground=<W/K>
///             source=<name> source_area=<m^2> sensor=<0|1>
///   edge <id_a> <id_b> G=<W/K>
NetworkLayout load_layout(const std::filesystem::path& path);
NetworkLayout parse_layout(const std::string& text, const std::string& label);

/// Draws each run's initial conditions uniformly from the layout's ranges and
/// simulates it. Run ids are RUN1..RUNn.
std::vector<RunPair> make_run_suite(std::size_t n_runs, const NetworkLayout& layout,
                                    std::uint64_t rng_seed);

/// The conditions make_run_suite would draw, without simulating.
std::vector<dataset::InitialConditions> sample_conditions(std::size_t n_runs,
                                                          const NetworkLayout& layout,
                                                          std::uint64_t rng_seed);

}  // namespace thermo::sim
