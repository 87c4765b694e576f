#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermo/dataset.hpp"

namespace thermo::report {

enum class Protocol { Specialised, Generalised };
std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

/// Reported values are MSE / 1e-5.
inline constexpr double kScale = 1e-5;

/// "%.2f±%.2f" of mean and std expressed in units of 1e-5.
std::string format_cell(double mse_mean, double mse_std);

/// One trained (run, model) result as handed from `train` to `benchmark`.
struct MetricRecord {
  Protocol protocol = Protocol::Specialised;
  dataset::Quantity quantity = dataset::Quantity::Temperature;
  std::string run_id;
  std::string model;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  double retained_mse_mean = 0.0;
  double retained_mse_std = 0.0;
  std::size_t n_repeats = 0;
  double wall_time = 0.0;
  std::string seeds;  // e.g. "1;2;3"
};

void write_metrics_csv(const std::vector<MetricRecord>& records, const std::filesystem::path& path);
std::vector<MetricRecord> read_metrics_csv(const std::filesystem::path& path);

struct Cell {
  double mean = 0.0;
  double std = 0.0;
  bool best = false;
};

struct Row {
  std::string run_id;
  std::vector<std::optional<Cell>> cells;  // aligned with BenchmarkReport::models
};

struct BenchmarkReport {
  Protocol protocol = Protocol::Specialised;
  dataset::Quantity quantity = dataset::Quantity::Temperature;
  std::vector<std::string> models;
  std::vector<Row> rows;
  Row average;  // run_id "Average"
  std::vector<std::string> notes;
};

/// Groups records by (protocol, quantity). Models follow the canonical
/// architecture order, runs are sorted naturally (RUN2 before RUN10).
/// Averages are computed and best cells marked. Throws EmptyReport on no input.
std::vector<BenchmarkReport> build_reports(const std::vector<MetricRecord>& records);

/// Per model: mean of the row means and mean of the row stds.
void compute_averages(BenchmarkReport& report);
/// Marks the minimal mean in every row (and the average row); exact ties are
/// all marked and noted.
void mark_best(BenchmarkReport& report);

std::string render_text(const BenchmarkReport& report);
std::string render_text(const std::vector<BenchmarkReport>& reports);
/// Long format: protocol,quantity,run_id,model,mse_mean,mse_std,cell,best.
std::string render_csv(const std::vector<BenchmarkReport>& reports);

/// One row of the best-hyperparameter sidecar.
struct BestConfig {
  std::string dataset;
  dataset::Quantity quantity = dataset::Quantity::Temperature;
  std::string model;
  double learning_rate = 0.0;
  double weight_decay = 0.0;
  double dropout = 0.0;
  std::size_t hidden = 0;
  std::size_t layers = 0;
  std::optional<std::size_t> heads;  // Transformer only
};

void write_best_configs(const std::vector<BestConfig>& configs, const std::filesystem::path& path);
std::vector<BestConfig> read_best_configs(const std::filesystem::path& path);

/// Run ids compare by their text prefix, then by the trailing integer.
bool natural_less(const std::string& a, const std::string& b);

}  // namespace thermo::report
