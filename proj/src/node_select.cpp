#include "thermo/node_select.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "thermo/errors.hpp"

namespace thermo::select {

CorrelationMatrix pearson_matrix(const Matrix& values) {
  const std::size_t n = values.rows();
  const std::size_t d = values.cols();
  if (n < 2) fail(ErrorKind::TooShort, "Pearson correlation needs at least two samples");

  CorrelationMatrix c;
  c.size = d;
  c.rho.assign(d * d, 0.0);
  c.mean.assign(d, 0.0);
  c.stddev.assign(d, 0.0);
  c.degenerate.assign(d, false);

  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < d; ++k) c.mean[k] += values(r, k);
  }
  for (auto& m : c.mean) m *= inv_n;

  // Centered copy keeps the covariance sums well conditioned.
  Matrix centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < d; ++k) centered(r, k) = values(r, k) - c.mean[k];
  }
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = centered.row(r);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t l = k; l < d; ++l) cov[k * d + l] += row[k] * row[l];
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    c.stddev[k] = std::sqrt(cov[k * d + k] * inv_n);
    c.degenerate[k] = !(c.stddev[k] > 0.0);
  }
  for (std::size_t k = 0; k < d; ++k) {
    c.rho[k * d + k] = c.degenerate[k] ? 0.0 : 1.0;
    for (std::size_t l = k + 1; l < d; ++l) {
      double r = 0.0;
      if (!c.degenerate[k] && !c.degenerate[l]) {
        r = cov[k * d + l] * inv_n / (c.stddev[k] * c.stddev[l]);
        r = std::clamp(r, -1.0, 1.0);
      }
      c.rho[k * d + l] = r;
      c.rho[l * d + k] = r;
    }
  }
  return c;
}

SelectionPlan build_plan(const CorrelationMatrix& corr, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorKind::InvalidArgument, "tau must lie in (0,1)");
  const std::size_t d = corr.size;
  SelectionPlan plan;
  plan.tau = tau;
  plan.node_count = d;

  std::size_t informative = 0;
  for (std::size_t k = 0; k < d; ++k) {
    if (corr.degenerate[k]) {
      plan.retained.push_back(k);
      plan.degenerate.push_back(k);
      continue;
    }
    std::size_t best = d;
    double best_abs = -1.0;
    for (auto j : plan.retained) {
      if (corr.degenerate[j]) continue;
      const double a = std::abs(corr(k, j));
      if (a > best_abs) {  // strict: ties keep the lower index
        best_abs = a;
        best = j;
      }
    }
    if (best < d && best_abs > tau) {
      ParentLink link;
      link.node = k;
      link.parent = best;
      link.rho = corr(k, best);
      link.slope = link.rho * corr.stddev[k] / corr.stddev[best];
      link.intercept = corr.mean[k] - link.slope * corr.mean[best];
      plan.discarded.push_back(link);
    } else {
      plan.retained.push_back(k);
      ++informative;
    }
  }
  if (informative == 0) fail(ErrorKind::AllDegenerate, "every node is constant");
  return plan;
}

Matrix reconstruct(const SelectionPlan& plan, const Matrix& retained_values) {
  if (retained_values.cols() != plan.retained.size()) {
    fail(ErrorKind::DimensionMismatch, "expected " + std::to_string(plan.retained.size()) +
                                           " retained columns, got " +
                                           std::to_string(retained_values.cols()));
  }
  std::vector<std::size_t> slot(plan.node_count, plan.node_count);
  for (std::size_t j = 0; j < plan.retained.size(); ++j) slot[plan.retained[j]] = j;

  Matrix full(retained_values.rows(), plan.node_count);
  for (std::size_t r = 0; r < retained_values.rows(); ++r) {
    for (std::size_t j = 0; j < plan.retained.size(); ++j) {
      full(r, plan.retained[j]) = retained_values(r, j);
    }
    for (const auto& link : plan.discarded) {
      full(r, link.node) = link.slope * retained_values(r, slot[link.parent]) + link.intercept;
    }
  }
  return full;
}

std::vector<double> reconstruct(const SelectionPlan& plan, const std::vector<double>& retained) {
  return reconstruct(plan, Matrix(1, retained.size(), retained)).data();
}

std::string to_json(const SelectionPlan& plan) {
  nlohmann::ordered_json j;
  j["tau"] = plan.tau;
  j["node_count"] = plan.node_count;
  j["node_ids"] = plan.node_ids;
  j["retained"] = plan.retained;
  j["degenerate"] = plan.degenerate;
  auto links = nlohmann::ordered_json::array();
  for (const auto& l : plan.discarded) {
    links.push_back({{"node", l.node},
                     {"parent", l.parent},
                     {"rho", l.rho},
                     {"slope", l.slope},
                     {"intercept", l.intercept}});
  }
  j["discarded"] = links;
  j["fitted_on"] = plan.fitted_on;
  return j.dump(2) + "\n";
}

SelectionPlan plan_from_json(const std::string& text) {
  SelectionPlan plan;
  try {
    const auto j = nlohmann::json::parse(text);
    plan.tau = j.at("tau").get<double>();
    plan.node_count = j.at("node_count").get<std::size_t>();
    plan.node_ids = j.value("node_ids", std::vector<std::string>{});
    plan.retained = j.at("retained").get<std::vector<std::size_t>>();
    plan.degenerate = j.value("degenerate", std::vector<std::size_t>{});
    for (const auto& l : j.at("discarded")) {
      plan.discarded.push_back({l.at("node").get<std::size_t>(), l.at("parent").get<std::size_t>(),
                                l.at("rho").get<double>(), l.at("slope").get<double>(),
                                l.at("intercept").get<double>()});
    }
    plan.fitted_on = j.value("fitted_on", std::map<std::string, std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("invalid selection plan: ") + e.what());
  }
  for (auto r : plan.retained) {
    if (r >= plan.node_count) fail(ErrorKind::ConfigError, "retained index out of range");
  }
  for (const auto& l : plan.discarded) {
    if (l.node >= plan.node_count || l.parent >= plan.node_count) {
      fail(ErrorKind::ConfigError, "parent link out of range");
    }
  }
  return plan;
}

void save_plan(const SelectionPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << to_json(plan);
}

SelectionPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return plan_from_json(buf.str());
}

}  // namespace thermo::select
