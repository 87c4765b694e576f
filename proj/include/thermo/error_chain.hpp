#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermo/dataset.hpp"

namespace thermo::chain {

enum class Axis { X = 0, Y = 1, Z = 2 };
std::string_view to_string(Axis a);
Axis parse_axis(std::string_view text);

inline constexpr double kReferenceTemp = 293.15;  // K, 20 degC

using AxisVector = std::array<double, 3>;  // metres, indexed by Axis

/// One link of the kinematic chain from the machine base to the TCP. Its
/// temperature is the arithmetic mean of the nodes assigned to it.
struct StructuralElement {
  std::string name;
  Axis axis = Axis::X;
  double length = 1.0;              // m
  double alpha = 11.5e-6;           // 1/K
  double alpha_uncertainty = 0.0;   // 1/K
  double youngs_modulus = 210e9;    // Pa
  double reference_temp = kReferenceTemp;
  double geometric_error = 0.0;     // m, delta(x) at this length
  std::vector<std::string> nodes;
  bool in_chain = true;  // false: only feeds orientation pairs

  void validate() const;
};

/// Two elements whose differential expansion tilts the structure between them.
struct OrientationPair {
  std::string name;
  std::string top;
  std::string bottom;
  double separation = 1.0;  // m
};

struct Chain {
  std::vector<StructuralElement> elements;
  std::vector<OrientationPair> pairs;

  void validate() const;
  const StructuralElement& element(const std::string& name) const;
};

double thermal_strain(double alpha, double delta_t);
double thermal_stress(double youngs_modulus, double alpha, double delta_t);

/// -[x (1 + (alpha + u(alpha)) (T - T_ref))] + delta(x), taken literally: the
/// nominal position sits at -x in the element's frame.
double axis_position(const StructuralElement& element, double temperature);

struct DriftEstimate {
  AxisVector drift{};                // m
  std::vector<double> element_delta_t;
  std::vector<double> thermal_strain;  // per element
  std::vector<double> thermal_stress;  // per element, Pa
  std::vector<double> orientation;     // rad, per pair
};

/// Sum over in-chain elements of length * alpha * (mean node T - T_ref), per axis.
/// Throws UnmappedNode when an element names a node absent from `node_ids`.
DriftEstimate tcp_drift(const Chain& chain, const std::vector<std::string>& node_ids,
                        std::span<const double> temperatures);

/// Pure negation of the drift.
AxisVector compensation_offset(const DriftEstimate& drift);
/// Drift remaining after the offset is applied.
AxisVector residual(const DriftEstimate& drift, const AxisVector& offset);

/// Sum of length * alpha per axis: the drift changes by at most this much per
/// kelvin of uniform temperature change.
AxisVector lipschitz_bound(const Chain& chain);

/// Drift and offset at every row of a temperature series, written as
/// time, drift_x..z, offset_x..z, then one orientation column per pair.
void write_compensation_csv(const Chain& chain, const dataset::NodeTimeSeries& temperatures,
                            const std::filesystem::path& path);

/// Declarative chain file:
///   element <name> axis=X length=<m> alpha=<1/K> u_alpha=<1/K> E=<Pa>
///           delta=<m> t_ref=<K> chain=<0|1> nodes=<id>,<id>,...
///   pair <name> top=<element> bottom=<element> separation=<m>
Chain parse_chain(const std::string& text, const std::string& label);
Chain load_chain(const std::filesystem::path& path);

}  // namespace thermo::chain
