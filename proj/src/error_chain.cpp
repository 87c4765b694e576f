#include "thermo/error_chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "thermo/config.hpp"
#include "thermo/errors.hpp"
#include "thermo/text.hpp"

namespace thermo::chain {

std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::X: return "X";
    case Axis::Y: return "Y";
    case Axis::Z: return "Z";
  }
  return "?";
}

Axis parse_axis(std::string_view text) {
  if (text == "X" || text == "x") return Axis::X;
  if (text == "Y" || text == "y") return Axis::Y;
  if (text == "Z" || text == "z") return Axis::Z;
  fail(ErrorKind::ConfigError, "axis must be X, Y or Z, got '" + std::string(text) + "'");
}

void StructuralElement::validate() const {
  if (!(length > 0.0)) fail(ErrorKind::InvalidArgument, "element '" + name + "' needs length > 0");
  if (!(alpha > 0.0)) fail(ErrorKind::InvalidArgument, "element '" + name + "' needs alpha > 0");
  if (!(alpha_uncertainty >= 0.0)) fail(ErrorKind::InvalidArgument, "element '" + name + "' needs u(alpha) >= 0");
  if (!(reference_temp > 0.0)) fail(ErrorKind::InvalidArgument, "element '" + name + "' needs t_ref > 0 K");
  if (!std::isfinite(youngs_modulus) || !std::isfinite(geometric_error)) {
    fail(ErrorKind::InvalidArgument, "element '" + name + "' has a non-finite parameter");
  }
  if (nodes.empty()) fail(ErrorKind::InvalidArgument, "element '" + name + "' has no nodes");
}

void Chain::validate() const {
  if (elements.empty()) fail(ErrorKind::InvalidArgument, "chain has no elements");
  std::set<std::string> names;
  for (const auto& e : elements) {
    e.validate();
    if (!names.insert(e.name).second) fail(ErrorKind::InvalidArgument, "duplicate element '" + e.name + "'");
  }
  for (const auto& p : pairs) {
    element(p.top);
    element(p.bottom);
    if (!(p.separation > 0.0)) fail(ErrorKind::InvalidArgument, "pair '" + p.name + "' needs separation > 0");
  }
}

const StructuralElement& Chain::element(const std::string& name) const {
  for (const auto& e : elements) {
    if (e.name == name) return e;
  }
  fail(ErrorKind::InvalidArgument, "no element named '" + name + "'");
}

double thermal_strain(double alpha, double delta_t) { return alpha * delta_t; }

double thermal_stress(double youngs_modulus, double alpha, double delta_t) {
  return youngs_modulus * alpha * delta_t;
}

double axis_position(const StructuralElement& e, double temperature) {
  return -(e.length * (1.0 + (e.alpha + e.alpha_uncertainty) * (temperature - e.reference_temp))) +
         e.geometric_error;
}

DriftEstimate tcp_drift(const Chain& chain, const std::vector<std::string>& node_ids,
                        std::span<const double> temperatures) {
  if (temperatures.size() != node_ids.size()) {
    fail(ErrorKind::DimensionMismatch, "temperature vector does not match the node labels");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < node_ids.size(); ++i) index.emplace(node_ids[i], i);

  DriftEstimate out;
  std::map<std::string, double> elongation;
  for (const auto& e : chain.elements) {
    double sum = 0.0;
    for (const auto& n : e.nodes) {
      auto it = index.find(n);
      if (it == index.end()) fail(ErrorKind::UnmappedNode, "element '" + e.name + "' uses unknown node '" + n + "'");
      sum += temperatures[it->second];
    }
    const double delta_t = sum / static_cast<double>(e.nodes.size()) - e.reference_temp;
    const double dl = e.length * e.alpha * delta_t;
    if (e.in_chain) out.drift[static_cast<std::size_t>(e.axis)] += dl;
    elongation[e.name] = dl;
    out.element_delta_t.push_back(delta_t);
    out.thermal_strain.push_back(thermal_strain(e.alpha, delta_t));
    out.thermal_stress.push_back(thermal_stress(e.youngs_modulus, e.alpha, delta_t));
  }
  for (const auto& p : chain.pairs) {
    auto top = elongation.find(p.top);
    auto bottom = elongation.find(p.bottom);
    if (top == elongation.end() || bottom == elongation.end()) {
      fail(ErrorKind::InvalidArgument, "pair '" + p.name + "' references a missing element");
    }
    out.orientation.push_back((top->second - bottom->second) / p.separation);
  }
  return out;
}

AxisVector compensation_offset(const DriftEstimate& drift) {
  return {-drift.drift[0], -drift.drift[1], -drift.drift[2]};
}

AxisVector residual(const DriftEstimate& drift, const AxisVector& offset) {
  return {drift.drift[0] + offset[0], drift.drift[1] + offset[1], drift.drift[2] + offset[2]};
}

AxisVector lipschitz_bound(const Chain& chain) {
  AxisVector bound{};
  for (const auto& e : chain.elements) {
    if (e.in_chain) bound[static_cast<std::size_t>(e.axis)] += e.length * e.alpha;
  }
  return bound;
}

void write_compensation_csv(const Chain& chain, const dataset::NodeTimeSeries& temperatures,
                            const std::filesystem::path& path) {
  chain.validate();
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << "time,drift_x,drift_y,drift_z,offset_x,offset_y,offset_z";
  for (const auto& p : chain.pairs) out << ",tilt_" << p.name;
  out << '\n';
  const auto& values = temperatures.values();
  for (std::size_t r = 0; r < values.rows(); ++r) {
    const auto drift = tcp_drift(chain, temperatures.node_ids(), values.row(r));
    const auto offset = compensation_offset(drift);
    out << text::format_double(temperatures.timestamps()[r]);
    for (double v : drift.drift) out << ',' << text::format_double(v);
    for (double v : offset) out << ',' << text::format_double(v);
    for (double v : drift.orientation) out << ',' << text::format_double(v);
    out << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

Chain parse_chain(const std::string& text, const std::string& label) {
  const auto doc = config::parse(text, label);
  Chain chain;
  for (const auto& rec : doc.records) {
    if (rec.kind == "element") {
      if (rec.positional.size() != 1) rec.error("expected 'element <name> axis=... length=... alpha=... nodes=...'");
      StructuralElement e;
      e.name = rec.positional[0];
      try {
        e.axis = parse_axis(rec.string_or("axis", ""));
      } catch (const Error& err) {
        rec.error(err.what());
      }
      e.length = rec.number("length");
      e.alpha = rec.number("alpha");
      e.alpha_uncertainty = rec.number_or("u_alpha", 0.0);
      e.youngs_modulus = rec.number_or("E", e.youngs_modulus);
      e.geometric_error = rec.number_or("delta", 0.0);
      e.reference_temp = rec.number_or("t_ref", kReferenceTemp);
      e.nodes = rec.list("nodes");
      e.in_chain = rec.number_or("chain", 1.0) != 0.0;
      try {
        e.validate();
      } catch (const Error& err) {
        rec.error(err.what());
      }
      for (const auto& other : chain.elements) {
        if (other.name == e.name) rec.error("duplicate element '" + e.name + "'");
      }
      chain.elements.push_back(std::move(e));
    } else if (rec.kind == "pair") {
      if (rec.positional.size() != 1) rec.error("expected 'pair <name> top=... bottom=... separation=...'");
      OrientationPair p{rec.positional[0], rec.string_or("top", ""), rec.string_or("bottom", ""),
                        rec.number("separation")};
      if (!(p.separation > 0.0)) rec.error("separation must be positive");
      chain.pairs.push_back(std::move(p));
    } else {
      rec.error("unknown record kind '" + rec.kind + "'");
    }
  }
  const auto pair_records = doc.of_kind("pair");
  for (std::size_t i = 0; i < chain.pairs.size(); ++i) {
    const auto& p = chain.pairs[i];
    for (const auto& ref : {p.top, p.bottom}) {
      const bool found = std::any_of(chain.elements.begin(), chain.elements.end(),
                                     [&](const StructuralElement& e) { return e.name == ref; });
      if (!found) pair_records[i]->error("pair '" + p.name + "' references unknown element '" + ref + "'");
    }
  }
  if (chain.elements.empty()) fail(ErrorKind::ConfigError, label + ": chain defines no elements");
  return chain;
}

Chain load_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_chain(text, path.string());
}

}  // namespace thermo::chain
