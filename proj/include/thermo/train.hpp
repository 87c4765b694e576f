#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "thermo/dataset.hpp"
#include "thermo/models.hpp"
#include "thermo/node_select.hpp"

namespace thermo::train {

struct OptimConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t seq_len = 10;

  void validate() const;
};

struct AdamState {
  std::uint64_t step = 0;
  std::map<std::string, ad::Tensor> m;
  std::map<std::string, ad::Tensor> v;
};

using Gradients = std::map<std::string, ad::Tensor>;

/// One bias-corrected AdamW update with decoupled decay:
/// theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
/// A missing or empty gradient entry counts as zero.
void adamw_step(models::Parameters& params, const Gradients& grads, AdamState& state,
                const OptimConfig& config);

struct TrainResult {
  models::Parameters params;
  std::vector<double> train_loss;  // per epoch, mean over training windows
  std::vector<double> val_loss;    // per epoch, eval mode
};

/// Trains from init_parameters(spec) with seeded batch shuffling and dropout.
/// Throws Diverged when a loss or gradient becomes non-finite.
TrainResult train_model(const models::ModelSpec& spec, const OptimConfig& optim,
                        const std::vector<dataset::Window>& train_windows,
                        const std::vector<dataset::Window>& val_windows, std::uint64_t seed);

/// Eval-mode predictions, one row per window.
Matrix predict_windows(const models::ModelSpec& spec, const models::Parameters& params,
                       const std::vector<dataset::Window>& windows, std::size_t batch_size = 256);
double window_mse(const models::ModelSpec& spec, const models::Parameters& params,
                  const std::vector<dataset::Window>& windows);
double mse(const Matrix& a, const Matrix& b);

struct SearchSpace {
  double lr_min = 1e-5, lr_max = 1e-2;
  double wd_min = 1e-6, wd_max = 1e-3;
  double dropout_min = 0.1, dropout_max = 0.5;
  std::size_t layers_min = 1, layers_max = 12;
  std::vector<std::size_t> hidden_choices = {32, 64, 128, 256};
  std::size_t heads_min = 2, heads_max = 4;
  std::size_t trials = 20;

  void validate() const;
};

struct TrialConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double dropout = 0.1;
  std::size_t layers = 1;
  std::size_t hidden = 32;
  std::size_t heads = 2;
};

/// Draws one configuration. Heads are drawn among the values in range that
/// divide the sampled hidden size.
TrialConfig sample_trial(const SearchSpace& space, Rng& rng);
bool within(const SearchSpace& space, const TrialConfig& trial);

models::ModelSpec apply_trial(models::ModelSpec base, const TrialConfig& trial);
OptimConfig apply_trial(OptimConfig base, const TrialConfig& trial);

struct TrialRecord {
  std::size_t index = 0;
  TrialConfig config;
  double objective = 0.0;  // +inf when the trial diverged
  std::string status;      // "ok" or the error text
};

struct SearchResult {
  TrialConfig best;
  std::size_t best_index = 0;
  std::vector<TrialRecord> log;
};

using Objective = std::function<double(const TrialConfig&)>;

/// Seeded random search; lower objective wins, ties keep the earlier trial.
/// Diverged and NonFiniteGradient errors score +inf.
SearchResult random_search(const SearchSpace& space, const Objective& objective, std::size_t trials,
                           std::uint64_t seed);
/// Appending skips the header when the file already has content.
void write_trial_log(const std::vector<TrialRecord>& log, const std::string& dataset,
                     const std::string& target, const std::string& model,
                     const std::filesystem::path& path, bool append = false);

inline const std::vector<std::uint64_t> kRepeatSeeds = {1, 2, 3};

/// Sample statistics over repeats (std uses n - 1, 0 for a single repeat).
struct RunMetrics {
  double mse_mean = 0.0;
  double mse_std = 0.0;
  double retained_mse_mean = 0.0;
  double retained_mse_std = 0.0;
  std::size_t n_repeats = 0;
  double wall_time = 0.0;
  std::vector<double> per_seed;
};

double mean(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs);

enum class Segment { Train, Val, Test };
std::string_view to_string(Segment s);
/// Invoked every time protocol code reads a segment's windows.
using AccessHook = std::function<void(Segment)>;

/// One run prepared for the specialised protocol: contiguous split, plan and
/// normalizers fitted on the training segment, windows built inside each
/// segment on the retained nodes.
class SpecialisedData {
 public:
  SpecialisedData(const dataset::NodeTimeSeries& run, const dataset::SplitSpec& split,
                  std::size_t seq_len, double tau, AccessHook hook = {});

  const select::SelectionPlan& plan() const noexcept { return plan_; }
  std::size_t retained_width() const noexcept { return plan_.retained.size(); }
  const std::vector<dataset::Window>& windows(Segment s) const;
  /// Full-node targets of the test windows, normalized with the full-node
  /// training normalizer.
  const Matrix& test_targets_full() const;
  const std::vector<double>& test_timestamps() const { return test_timestamps_; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }

  /// Retained-node normalized predictions -> full-node values in kelvin (or W/m^2).
  Matrix to_physical(const Matrix& retained_normalized) const;
  /// Physical full-node values -> full-node normalized values.
  Matrix normalize_full(const Matrix& physical) const;

 private:
  select::SelectionPlan plan_;
  dataset::Normalizer retained_norm_;
  dataset::Normalizer full_norm_;
  std::vector<dataset::Window> train_, val_, test_;
  Matrix test_full_;
  std::vector<double> test_timestamps_;
  std::vector<std::string> node_ids_;
  AccessHook hook_;
};

struct SpecialisedResult {
  RunMetrics metrics;
  select::SelectionPlan plan;
  /// First seed's test-segment predictions in physical units, full nodes.
  Matrix predictions;
  std::vector<double> timestamps;
  std::vector<TrainResult> curves;  // one per seed, parameters dropped
  models::ModelSpec spec;           // as trained, seed of the first repeat
  models::Parameters params;        // first seed's trained parameters
};

/// 60/20/20 protocol. `spec.d_in`/`d_out` are overwritten with the retained
/// width; `spec.seed` is replaced by each repeat seed.
SpecialisedResult specialised_protocol(const dataset::NodeTimeSeries& run, models::ModelSpec spec,
                                       const OptimConfig& optim, double tau,
                                       const std::vector<std::uint64_t>& seeds = kRepeatSeeds,
                                       AccessHook hook = {});

/// Search objective for one run: train on the training segment, score the
/// final-epoch validation MSE. Never reads the test segment.
double specialised_validation(const SpecialisedData& data, models::ModelSpec spec,
                              const OptimConfig& optim, std::uint64_t seed);

struct FoldResult {
  std::string held_out;
  RunMetrics held_out_metrics;
  RunMetrics in_distribution;  // same models scored on their training windows
  select::SelectionPlan plan;
  std::vector<std::vector<double>> train_loss;  // per seed
  std::vector<std::vector<double>> val_loss;
  std::size_t train_windows = 0;
  /// First seed's held-out predictions in physical units, full nodes.
  Matrix predictions;
  std::vector<double> timestamps;
  models::ModelSpec spec;
  models::Parameters params;  // first seed
};

/// Fraction of each training run used for training; the rest is validation.
inline constexpr double kGeneralisedTrainFrac = 0.8;

/// Leave-one-out across runs. Each training run contributes windows from its
/// own rows only; plan and normalizer are pooled over the training runs.
std::vector<FoldResult> generalised_protocol(const std::vector<dataset::NodeTimeSeries>& runs,
                                             models::ModelSpec spec, const OptimConfig& optim,
                                             double tau,
                                             const std::vector<std::uint64_t>& seeds = kRepeatSeeds);

/// Search objective for the generalised protocol: final-epoch validation MSE
/// of fold `fold` (its held-out run is never read).
double generalised_validation(const std::vector<dataset::NodeTimeSeries>& runs, models::ModelSpec spec,
                              const OptimConfig& optim, double tau, std::uint64_t seed,
                              std::size_t fold = 0);

}  // namespace thermo::train
