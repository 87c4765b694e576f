#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "thermo/matrix.hpp"

namespace thermo::select {

/// Pearson correlations with population (1/T) moments.
struct CorrelationMatrix {
  std::size_t size = 0;
  std::vector<double> rho;     // size x size, row-major
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> degenerate;  // sigma == 0

  double operator()(std::size_t k, std::size_t l) const { return rho[k * size + l]; }
};

/// Columns are nodes, rows are samples. Constant columns are flagged and get
/// zero off-diagonal correlation.
CorrelationMatrix pearson_matrix(const Matrix& values);

struct ParentLink {
  std::size_t node = 0;
  std::size_t parent = 0;
  double rho = 0.0;
  double slope = 0.0;
  double intercept = 0.0;

  bool operator==(const ParentLink&) const = default;
};

/// Retained node set, parent mapping for the discarded nodes and the affine
/// maps that rebuild them.
struct SelectionPlan {
  double tau = 0.95;
  std::size_t node_count = 0;
  std::vector<std::size_t> retained;     // ascending
  std::vector<ParentLink> discarded;     // ascending by node
  std::vector<std::size_t> degenerate;   // always retained
  std::vector<std::string> node_ids;     // optional labels, size node_count when set
  std::map<std::string, std::string> fitted_on;

  bool operator==(const SelectionPlan&) const = default;
};

inline constexpr double kDefaultTau = 0.95;

/// Greedy ascending sweep: node k is kept unless an already kept node j has
/// |rho_kj| > tau; then psi(k) = argmax_j |rho_kj| over kept nodes, ties to the
/// lower index.
SelectionPlan build_plan(const CorrelationMatrix& corr, double tau = kDefaultTau);

/// Expands a T x |S| matrix of retained-node values to T x d.
Matrix reconstruct(const SelectionPlan& plan, const Matrix& retained_values);
std::vector<double> reconstruct(const SelectionPlan& plan, const std::vector<double>& retained);

/// JSON sidecar. Numbers are written with round-trip precision.
std::string to_json(const SelectionPlan& plan);
SelectionPlan plan_from_json(const std::string& json);
void save_plan(const SelectionPlan& plan, const std::filesystem::path& path);
SelectionPlan load_plan(const std::filesystem::path& path);

}  // namespace thermo::select
