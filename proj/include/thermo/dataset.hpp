#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "thermo/matrix.hpp"

namespace thermo::dataset {

enum class Quantity { Temperature, HeatFlux };

std::string_view to_string(Quantity q);
Quantity parse_quantity(std::string_view text);

/// Boundary and initial conditions a run was generated under.
struct InitialConditions {
  double ambient_temp = 293.15;         // K, also used as radiative surroundings
  double ground_temp = 291.15;          // K
  double initial_system_temp = 293.15;  // K
  std::vector<double> heat_flux_magnitudes;  // W/m^2, one per source
  double film_coefficient = 10.0;            // W/(m^2 K)

  void validate() const;
  bool operator==(const InitialConditions&) const = default;
};

/// One run: T time steps over d nodes. Immutable once constructed; the
/// constructor enforces the invariants.
class NodeTimeSeries {
 public:
  /// Minimum number of steps a stored run must carry.
  static constexpr std::size_t kMinSteps = 12;

  NodeTimeSeries(std::string run_id, Quantity quantity, std::vector<double> timestamps,
                 Matrix values, std::vector<std::string> node_ids,
                 InitialConditions initial_conditions = {});

  /// Same invariants minus the length floor. Used for split segments, which
  /// can legitimately be shorter than a full run.
  static NodeTimeSeries segment(std::string run_id, Quantity quantity,
                                std::vector<double> timestamps, Matrix values,
                                std::vector<std::string> node_ids,
                                InitialConditions initial_conditions);

  const std::string& run_id() const noexcept { return run_id_; }
  Quantity quantity() const noexcept { return quantity_; }
  const std::vector<double>& timestamps() const noexcept { return timestamps_; }
  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& node_ids() const noexcept { return node_ids_; }
  const InitialConditions& initial_conditions() const noexcept { return initial_conditions_; }

  std::size_t steps() const noexcept { return values_.rows(); }
  std::size_t nodes() const noexcept { return values_.cols(); }

  NodeTimeSeries rows(std::size_t begin, std::size_t end) const;
  NodeTimeSeries with_columns(const std::vector<std::size_t>& columns) const;

 private:
  struct Unchecked {};
  NodeTimeSeries(Unchecked, std::string run_id, Quantity quantity, std::vector<double> timestamps,
                 Matrix values, std::vector<std::string> node_ids,
                 InitialConditions initial_conditions);
  void validate(std::size_t min_steps) const;

  std::string run_id_;
  Quantity quantity_;
  std::vector<double> timestamps_;
  Matrix values_;
  std::vector<std::string> node_ids_;
  InitialConditions initial_conditions_;
};

/// Reads `time,<node_1>,...,<node_d>` CSV. The run id defaults to the file stem.
NodeTimeSeries load_csv(const std::filesystem::path& path,
                        Quantity quantity = Quantity::Temperature);
/// Writes with shortest round-trip decimal formatting, so reloads are bit-exact.
void save_csv(const NodeTimeSeries& series, const std::filesystem::path& path);

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;

  void validate() const;
};

struct Split {
  NodeTimeSeries train;
  NodeTimeSeries val;
  NodeTimeSeries test;
};

/// Row counts per segment: floor of each fraction, remainder to train.
std::tuple<std::size_t, std::size_t, std::size_t> split_lengths(std::size_t steps,
                                                                const SplitSpec& spec);

/// Contiguous split in time order. `min_segment` is the minimum row count every
/// segment must reach (callers pass seq_len + 1 when they intend to window).
Split split(const NodeTimeSeries& series, const SplitSpec& spec, std::size_t min_segment = 1);

struct Window {
  Matrix input;                // seq_len x d
  std::vector<double> target;  // d
};

/// Stride-1 one-step-ahead windows: rows [i, i+seq_len) predict row i+seq_len.
std::vector<Window> make_windows(const Matrix& values, std::size_t seq_len);
std::vector<Window> make_windows(const NodeTimeSeries& series, std::size_t seq_len);

enum class NormalizerMode { MinMax, ZScore };

std::string_view to_string(NormalizerMode mode);

/// Per-node affine scaling fitted on a training segment.
class Normalizer {
 public:
  static Normalizer fit(const Matrix& train, NormalizerMode mode = NormalizerMode::MinMax);

  /// Restores a normalizer from stored statistics (offset/scale semantics per mode:
  /// MinMax uses min/max, ZScore uses mean/std).
  Normalizer(NormalizerMode mode, std::vector<double> first, std::vector<double> second);

  NormalizerMode mode() const noexcept { return mode_; }
  std::size_t nodes() const noexcept { return offset_.size(); }

  /// (x - offset) / scale per node.
  Matrix apply(const Matrix& raw) const;
  Matrix invert(const Matrix& normalized) const;
  std::vector<double> apply(std::span<const double> raw) const;
  std::vector<double> invert(std::span<const double> normalized) const;

  /// min (MinMax) or mean (ZScore).
  const std::vector<double>& offset() const noexcept { return offset_; }
  /// max - min (MinMax) or std (ZScore).
  const std::vector<double>& scale() const noexcept { return scale_; }

  Normalizer select(const std::vector<std::size_t>& columns) const;

 private:
  NormalizerMode mode_;
  std::vector<double> offset_;
  std::vector<double> scale_;
};

}  // namespace thermo::dataset
