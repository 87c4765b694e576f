#include "thermo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "thermo/errors.hpp"
#include "thermo/text.hpp"

namespace thermo::dataset {

std::string_view to_string(Quantity q) {
  return q == Quantity::Temperature ? "temperature" : "heatflux";
}

Quantity parse_quantity(std::string_view text) {
  if (text == "temperature" || text == "Temperature") return Quantity::Temperature;
  if (text == "heatflux" || text == "HeatFlux" || text == "heat_flux") return Quantity::HeatFlux;
  fail(ErrorKind::InvalidArgument, "unknown quantity '" + std::string(text) + "'");
}

std::string_view to_string(NormalizerMode mode) {
  return mode == NormalizerMode::MinMax ? "minmax" : "zscore";
}

void InitialConditions::validate() const {
  if (!(ambient_temp > 0.0) || !(ground_temp > 0.0) || !(initial_system_temp > 0.0)) {
    fail(ErrorKind::InvalidArgument, "initial-condition temperatures must be positive kelvin");
  }
  if (!(film_coefficient >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "film coefficient must be non-negative");
  }
}

NodeTimeSeries::NodeTimeSeries(std::string run_id, Quantity quantity,
                               std::vector<double> timestamps, Matrix values,
                               std::vector<std::string> node_ids,
                               InitialConditions initial_conditions)
    : NodeTimeSeries(Unchecked{}, std::move(run_id), quantity, std::move(timestamps),
                     std::move(values), std::move(node_ids), std::move(initial_conditions)) {
  validate(kMinSteps);
}

NodeTimeSeries::NodeTimeSeries(Unchecked, std::string run_id, Quantity quantity,
                               std::vector<double> timestamps, Matrix values,
                               std::vector<std::string> node_ids,
                               InitialConditions initial_conditions)
    : run_id_(std::move(run_id)),
      quantity_(quantity),
      timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      node_ids_(std::move(node_ids)),
      initial_conditions_(std::move(initial_conditions)) {}

NodeTimeSeries NodeTimeSeries::segment(std::string run_id, Quantity quantity,
                                       std::vector<double> timestamps, Matrix values,
                                       std::vector<std::string> node_ids,
                                       InitialConditions initial_conditions) {
  NodeTimeSeries s(Unchecked{}, std::move(run_id), quantity, std::move(timestamps),
                   std::move(values), std::move(node_ids), std::move(initial_conditions));
  s.validate(1);
  return s;
}

void NodeTimeSeries::validate(std::size_t min_steps) const {
  if (timestamps_.size() != values_.rows()) {
    fail(ErrorKind::DimensionMismatch, "timestamps and value rows differ in length");
  }
  if (node_ids_.size() != values_.cols()) {
    fail(ErrorKind::DimensionMismatch, "node id count does not match value columns");
  }
  if (values_.cols() < 2) fail(ErrorKind::TooShort, "a run needs at least two nodes");
  if (values_.rows() < min_steps) {
    fail(ErrorKind::TooShort, "run '" + run_id_ + "' has " + std::to_string(values_.rows()) +
                                  " steps, needs " + std::to_string(min_steps));
  }
  for (std::size_t i = 1; i < timestamps_.size(); ++i) {
    if (!(timestamps_[i] > timestamps_[i - 1])) {
      fail(ErrorKind::NonMonotonicTime,
           "time does not increase at row " + std::to_string(i) + " of run '" + run_id_ + "'");
    }
  }
  if (timestamps_.size() > 2) {
    const double mean_dt =
        (timestamps_.back() - timestamps_.front()) / static_cast<double>(timestamps_.size() - 1);
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
      if (std::abs((timestamps_[i] - timestamps_[i - 1]) - mean_dt) > 1e-6 * mean_dt) {
        fail(ErrorKind::NonMonotonicTime,
             "non-uniform time spacing at row " + std::to_string(i) + " of run '" + run_id_ + "'");
      }
    }
  }
  for (double v : values_.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "run '" + run_id_ + "' contains NaN/Inf");
  }
  initial_conditions_.validate();
}

NodeTimeSeries NodeTimeSeries::rows(std::size_t begin, std::size_t end) const {
  std::vector<double> ts(timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
                         timestamps_.begin() + static_cast<std::ptrdiff_t>(end));
  return segment(run_id_, quantity_, std::move(ts), values_.row_range(begin, end), node_ids_,
                 initial_conditions_);
}

NodeTimeSeries NodeTimeSeries::with_columns(const std::vector<std::size_t>& columns) const {
  std::vector<std::string> ids;
  ids.reserve(columns.size());
  for (auto c : columns) {
    if (c >= node_ids_.size()) fail(ErrorKind::DimensionMismatch, "column index out of range");
    ids.push_back(node_ids_[c]);
  }
  NodeTimeSeries s(Unchecked{}, run_id_, quantity_, timestamps_, values_.select_columns(columns),
                   std::move(ids), initial_conditions_);
  if (s.nodes() == 0) fail(ErrorKind::DimensionMismatch, "no columns selected");
  return s;
}

NodeTimeSeries load_csv(const std::filesystem::path& path, Quantity quantity) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return path.string() + ":" + std::to_string(line_no); };

  if (!std::getline(in, line)) fail(ErrorKind::MalformedCsv, path.string() + ": empty file");
  ++line_no;
  auto header = text::split(text::trim(line), ',');
  if (header.size() < 2) fail(ErrorKind::MalformedCsv, where() + ": header needs time + nodes");
  std::vector<std::string> node_ids;
  for (std::size_t i = 1; i < header.size(); ++i) node_ids.emplace_back(text::trim(header[i]));

  std::vector<double> timestamps;
  std::vector<double> data;
  while (std::getline(in, line)) {
    ++line_no;
    auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    auto cells = text::split(trimmed, ',');
    if (cells.size() != header.size()) {
      fail(ErrorKind::MalformedCsv, where() + ": expected " + std::to_string(header.size()) +
                                        " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      auto value = text::parse_double(text::trim(cells[i]));
      if (!value) {
        fail(ErrorKind::MalformedCsv,
             where() + ": non-numeric cell '" + std::string(cells[i]) + "'");
      }
      if (i == 0) {
        timestamps.push_back(*value);
      } else {
        data.push_back(*value);
      }
    }
  }
  const std::size_t rows = timestamps.size();
  for (std::size_t i = 1; i < rows; ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      fail(ErrorKind::NonMonotonicTime,
           path.string() + ": time does not increase at data row " + std::to_string(i));
    }
  }
  Matrix values(rows, node_ids.size(), std::move(data));
  // Files may carry short runs; length requirements are enforced where windows are built.
  return NodeTimeSeries::segment(path.stem().string(), quantity, std::move(timestamps),
                                 std::move(values), std::move(node_ids), {});
}

void save_csv(const NodeTimeSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << "time";
  for (const auto& id : series.node_ids()) out << ',' << id;
  out << '\n';
  const auto& v = series.values();
  for (std::size_t r = 0; r < series.steps(); ++r) {
    out << text::format_double(series.timestamps()[r]);
    for (std::size_t c = 0; c < series.nodes(); ++c) out << ',' << text::format_double(v(r, c));
    out << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f > 0.0 && f < 1.0)) fail(ErrorKind::InvalidArgument, "split fractions must be in (0,1)");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    fail(ErrorKind::InvalidArgument, "split fractions must sum to 1");
  }
}

std::tuple<std::size_t, std::size_t, std::size_t> split_lengths(std::size_t steps,
                                                                const SplitSpec& spec) {
  spec.validate();
  const auto n = static_cast<double>(steps);
  // The epsilon absorbs representation error such as 0.2 * 10 = 1.9999999999999998.
  auto floor_of = [n](double frac) {
    return static_cast<std::size_t>(std::floor(frac * n + 1e-9));
  };
  const std::size_t val = floor_of(spec.val_frac);
  const std::size_t test = floor_of(spec.test_frac);
  return {steps - val - test, val, test};
}

Split split(const NodeTimeSeries& series, const SplitSpec& spec, std::size_t min_segment) {
  auto [n_train, n_val, n_test] = split_lengths(series.steps(), spec);
  if (n_train < min_segment || n_val < min_segment || n_test < min_segment) {
    fail(ErrorKind::TooShort, "run '" + series.run_id() + "' with " +
                                  std::to_string(series.steps()) +
                                  " steps is too short to split into segments of at least " +
                                  std::to_string(min_segment) + " rows");
  }
  return {series.rows(0, n_train), series.rows(n_train, n_train + n_val),
          series.rows(n_train + n_val, series.steps())};
}

std::vector<Window> make_windows(const Matrix& values, std::size_t seq_len) {
  if (seq_len == 0) fail(ErrorKind::InvalidArgument, "seq_len must be positive");
  if (values.rows() < seq_len + 1) {
    fail(ErrorKind::TooShort, std::to_string(values.rows()) + " rows cannot form a window of " +
                                  std::to_string(seq_len) + " plus a target");
  }
  std::vector<Window> windows;
  windows.reserve(values.rows() - seq_len);
  for (std::size_t i = 0; i + seq_len < values.rows(); ++i) {
    auto target = values.row(i + seq_len);
    windows.push_back({values.row_range(i, i + seq_len), {target.begin(), target.end()}});
  }
  return windows;
}

std::vector<Window> make_windows(const NodeTimeSeries& series, std::size_t seq_len) {
  return make_windows(series.values(), seq_len);
}

Normalizer::Normalizer(NormalizerMode mode, std::vector<double> first, std::vector<double> second)
    : mode_(mode) {
  if (first.size() != second.size()) {
    fail(ErrorKind::DimensionMismatch, "normalizer statistics differ in length");
  }
  offset_ = std::move(first);
  scale_.resize(offset_.size());
  for (std::size_t i = 0; i < offset_.size(); ++i) {
    scale_[i] = mode == NormalizerMode::MinMax ? second[i] - offset_[i] : second[i];
    if (!(scale_[i] > 0.0) || !std::isfinite(scale_[i])) {
      fail(ErrorKind::DegenerateNode, "node " + std::to_string(i) + " has zero spread");
    }
  }
}

Normalizer Normalizer::fit(const Matrix& train, NormalizerMode mode) {
  if (train.rows() == 0) fail(ErrorKind::TooShort, "cannot fit a normalizer on zero rows");
  const std::size_t d = train.cols();
  std::vector<double> first(d), second(d);
  for (std::size_t c = 0; c < d; ++c) {
    auto col = train.column(c);
    if (mode == NormalizerMode::MinMax) {
      auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      first[c] = *lo;
      second[c] = *hi;
      if (!(*hi > *lo)) {
        fail(ErrorKind::DegenerateNode, "node " + std::to_string(c) + " is constant at " +
                                            text::format_double(*lo));
      }
    } else {
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(col.size());
      double var = 0.0;
      for (double v : col) var += (v - mean) * (v - mean);
      var /= static_cast<double>(col.size());
      first[c] = mean;
      second[c] = std::sqrt(var);
      if (!(second[c] > 0.0)) {
        fail(ErrorKind::DegenerateNode, "node " + std::to_string(c) + " is constant at " +
                                            text::format_double(mean));
      }
    }
  }
  return Normalizer(mode, std::move(first), std::move(second));
}

Matrix Normalizer::apply(const Matrix& raw) const {
  if (raw.cols() != nodes()) fail(ErrorKind::DimensionMismatch, "normalizer width mismatch");
  Matrix out(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) out(r, c) = (raw(r, c) - offset_[c]) / scale_[c];
  }
  return out;
}

Matrix Normalizer::invert(const Matrix& normalized) const {
  if (normalized.cols() != nodes()) fail(ErrorKind::DimensionMismatch, "normalizer width mismatch");
  Matrix out(normalized.rows(), normalized.cols());
  for (std::size_t r = 0; r < normalized.rows(); ++r) {
    for (std::size_t c = 0; c < normalized.cols(); ++c) {
      out(r, c) = normalized(r, c) * scale_[c] + offset_[c];
    }
  }
  return out;
}

std::vector<double> Normalizer::apply(std::span<const double> raw) const {
  if (raw.size() != nodes()) fail(ErrorKind::DimensionMismatch, "normalizer width mismatch");
  std::vector<double> out(raw.size());
  for (std::size_t c = 0; c < raw.size(); ++c) out[c] = (raw[c] - offset_[c]) / scale_[c];
  return out;
}

std::vector<double> Normalizer::invert(std::span<const double> normalized) const {
  if (normalized.size() != nodes()) fail(ErrorKind::DimensionMismatch, "normalizer width mismatch");
  std::vector<double> out(normalized.size());
  for (std::size_t c = 0; c < normalized.size(); ++c) {
    out[c] = normalized[c] * scale_[c] + offset_[c];
  }
  return out;
}

Normalizer Normalizer::select(const std::vector<std::size_t>& columns) const {
  Normalizer out = *this;
  out.offset_.clear();
  out.scale_.clear();
  for (auto c : columns) {
    if (c >= nodes()) fail(ErrorKind::DimensionMismatch, "column index out of range");
    out.offset_.push_back(offset_[c]);
    out.scale_.push_back(scale_[c]);
  }
  return out;
}

}  // namespace thermo::dataset
