#include "thermo/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "thermo/errors.hpp"
#include "thermo/text.hpp"

namespace thermo::train {

using ad::Tensor;
using dataset::Window;

void OptimConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::InvalidArgument, "learning rate must be finite and >= 0");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    fail(ErrorKind::InvalidArgument, "weight decay must be finite and >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::InvalidArgument, "Adam betas must lie in [0,1)");
  }
  if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, "eps must be positive");
  if (epochs == 0 || batch_size == 0 || seq_len == 0) {
    fail(ErrorKind::InvalidArgument, "epochs, batch size and sequence length must be positive");
  }
}

void adamw_step(models::Parameters& params, const Gradients& grads, AdamState& state,
                const OptimConfig& c) {
  for (const auto& [name, g] : grads) {
    if (g.size() == 0) continue;
    auto it = params.find(name);
    if (it == params.end()) fail(ErrorKind::ShapeMismatch, "gradient for unknown parameter '" + name + "'");
    if (g.shape() != it->second.shape()) fail(ErrorKind::ShapeMismatch, "gradient shape differs for '" + name + "'");
    for (double x : g.data()) {
      if (!std::isfinite(x)) fail(ErrorKind::NonFiniteGradient, "non-finite gradient in '" + name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (auto& [name, theta] : params) {
    auto& m = state.m.try_emplace(name, Tensor(theta.shape(), 0.0)).first->second;
    auto& v = state.v.try_emplace(name, Tensor(theta.shape(), 0.0)).first->second;
    if (m.shape() != theta.shape() || v.shape() != theta.shape()) {
      fail(ErrorKind::ShapeMismatch, "optimizer state shape differs for '" + name + "'");
    }
    auto git = grads.find(name);
    const Tensor* g = (git != grads.end() && git->second.size() > 0) ? &git->second : nullptr;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= c.learning_rate * (m_hat / (std::sqrt(v_hat) + c.eps) + c.weight_decay * theta[i]);
    }
  }
}

namespace {

struct Batch {
  Tensor inputs;
  Tensor targets;
};

Batch gather(const std::vector<Window>& windows, const std::size_t* idx, std::size_t count) {
  const auto& first = windows[idx[0]];
  const std::size_t steps = first.input.rows(), width = first.input.cols(), d_out = first.target.size();
  Batch b{Tensor({count, steps, width}), Tensor({count, d_out})};
  auto in = b.inputs.data().begin();
  auto out = b.targets.data().begin();
  for (std::size_t i = 0; i < count; ++i) {
    const auto& w = windows[idx[i]];
    if (w.input.rows() != steps || w.input.cols() != width || w.target.size() != d_out) {
      fail(ErrorKind::ShapeMismatch, "windows in one batch must share a shape");
    }
    in = std::copy(w.input.data().begin(), w.input.data().end(), in);
    out = std::copy(w.target.begin(), w.target.end(), out);
  }
  return b;
}

void check_windows(const models::ModelSpec& spec, const std::vector<Window>& windows, const char* what) {
  if (windows.empty()) fail(ErrorKind::InvalidArgument, std::string(what) + " windows are empty");
  const auto& w = windows.front();
  if (w.input.cols() != spec.d_in || w.target.size() != spec.d_out) {
    fail(ErrorKind::ShapeMismatch, std::string(what) + " windows do not match the model dimensions");
  }
}

}  // namespace

TrainResult train_model(const models::ModelSpec& spec, const OptimConfig& optim,
                        const std::vector<Window>& train_windows, const std::vector<Window>& val_windows,
                        std::uint64_t seed) {
  optim.validate();
  check_windows(spec, train_windows, "training");
  check_windows(spec, val_windows, "validation");
  TrainResult result{models::init_parameters(spec), {}, {}};
  AdamState state;
  Rng rng(seed);
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < optim.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += optim.batch_size) {
      const std::size_t count = std::min(optim.batch_size, order.size() - start);
      auto batch = gather(train_windows, order.data() + start, count);
      ad::Tape tape;
      auto bound = models::bind(tape, result.params);
      models::ForwardContext ctx{true, &rng};
      auto pred = models::forward(spec, bound, tape.constant(std::move(batch.inputs)), ctx);
      auto loss = ad::mse_loss(pred, tape.constant(std::move(batch.targets)));
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        fail(ErrorKind::Diverged, "training loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      loss_sum += value * static_cast<double>(count);
      tape.backward(loss);
      Gradients grads;
      for (const auto& [name, var] : bound) grads.emplace(name, var.grad());
      try {
        adamw_step(result.params, grads, state, optim);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NonFiniteGradient) throw;
        fail(ErrorKind::Diverged, std::string(e.what()) + " in epoch " + std::to_string(epoch + 1));
      }
    }
    result.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
    const double val = window_mse(spec, result.params, val_windows);
    if (!std::isfinite(val)) {
      fail(ErrorKind::Diverged, "validation MSE became non-finite in epoch " + std::to_string(epoch + 1));
    }
    result.val_loss.push_back(val);
  }
  return result;
}

Matrix predict_windows(const models::ModelSpec& spec, const models::Parameters& params,
                       const std::vector<Window>& windows, std::size_t batch_size) {
  Matrix out(windows.size(), spec.d_out);
  if (windows.empty()) return out;
  std::vector<std::size_t> idx(windows.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, windows.size() - start);
    auto batch = gather(windows, idx.data() + start, count);
    auto pred = models::predict(spec, params, batch.inputs);
    std::copy(pred.data().begin(), pred.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(start * spec.d_out));
  }
  return out;
}

namespace {

Matrix targets_of(const std::vector<Window>& windows) {
  Matrix out(windows.size(), windows.empty() ? 0 : windows.front().target.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    std::copy(windows[i].target.begin(), windows[i].target.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

double mse(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorKind::ShapeMismatch, "mse operands differ in shape");
  if (a.data().empty()) fail(ErrorKind::InvalidArgument, "mse of an empty matrix");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double e = a.data()[i] - b.data()[i];
    s += e * e;
  }
  return s / static_cast<double>(a.data().size());
}

double window_mse(const models::ModelSpec& spec, const models::Parameters& params,
                  const std::vector<Window>& windows) {
  return mse(predict_windows(spec, params, windows), targets_of(windows));
}

void SearchSpace::validate() const {
  if (!(lr_min > 0.0 && lr_min <= lr_max) || !(wd_min > 0.0 && wd_min <= wd_max)) {
    fail(ErrorKind::InvalidArgument, "log-uniform ranges need 0 < min <= max");
  }
  if (!(dropout_min >= 0.0 && dropout_min <= dropout_max && dropout_max < 1.0)) {
    fail(ErrorKind::InvalidArgument, "dropout range must lie in [0,1)");
  }
  if (layers_min == 0 || layers_min > layers_max) fail(ErrorKind::InvalidArgument, "bad layer range");
  if (hidden_choices.empty()) fail(ErrorKind::InvalidArgument, "no hidden sizes to choose from");
  if (heads_min == 0 || heads_min > heads_max) fail(ErrorKind::InvalidArgument, "bad heads range");
  if (trials == 0) fail(ErrorKind::InvalidArgument, "a search needs at least one trial");
}

TrialConfig sample_trial(const SearchSpace& s, Rng& rng) {
  TrialConfig t;
  t.learning_rate = rng.log_uniform(s.lr_min, s.lr_max);
  t.weight_decay = rng.log_uniform(s.wd_min, s.wd_max);
  t.dropout = rng.uniform(s.dropout_min, s.dropout_max);
  t.layers = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(s.layers_min),
                                                  static_cast<std::int64_t>(s.layers_max)));
  t.hidden = s.hidden_choices[static_cast<std::size_t>(
      rng.integer(0, static_cast<std::int64_t>(s.hidden_choices.size()) - 1))];
  std::vector<std::size_t> heads;
  for (std::size_t h = s.heads_min; h <= s.heads_max; ++h) {
    if (t.hidden % h == 0) heads.push_back(h);
  }
  if (heads.empty()) heads.push_back(s.heads_min);
  t.heads = heads[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(heads.size()) - 1))];
  return t;
}

bool within(const SearchSpace& s, const TrialConfig& t) {
  return t.learning_rate >= s.lr_min && t.learning_rate <= s.lr_max && t.weight_decay >= s.wd_min &&
         t.weight_decay <= s.wd_max && t.dropout >= s.dropout_min && t.dropout <= s.dropout_max &&
         t.layers >= s.layers_min && t.layers <= s.layers_max &&
         std::find(s.hidden_choices.begin(), s.hidden_choices.end(), t.hidden) != s.hidden_choices.end() &&
         t.heads >= s.heads_min && t.heads <= s.heads_max;
}

models::ModelSpec apply_trial(models::ModelSpec base, const TrialConfig& t) {
  base.hidden = t.hidden;
  base.layers = t.layers;
  base.dropout = t.dropout;
  base.heads = t.heads;
  return base;
}

OptimConfig apply_trial(OptimConfig base, const TrialConfig& t) {
  base.learning_rate = t.learning_rate;
  base.weight_decay = t.weight_decay;
  return base;
}

SearchResult random_search(const SearchSpace& space, const Objective& objective, std::size_t trials,
                           std::uint64_t seed) {
  space.validate();
  if (trials == 0) fail(ErrorKind::InvalidArgument, "a search needs at least one trial");
  Rng rng(seed);
  SearchResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trials; ++i) {
    TrialRecord rec{i, sample_trial(space, rng), 0.0, "ok"};
    try {
      rec.objective = objective(rec.config);
      if (std::isnan(rec.objective)) rec.objective = std::numeric_limits<double>::infinity();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Diverged && e.kind() != ErrorKind::NonFiniteGradient) throw;
      rec.objective = std::numeric_limits<double>::infinity();
      rec.status = e.what();
    }
    if (i == 0 || rec.objective < best) {
      best = rec.objective;
      result.best = rec.config;
      result.best_index = i;
    }
    result.log.push_back(std::move(rec));
  }
  return result;
}

void write_trial_log(const std::vector<TrialRecord>& log, const std::string& dataset, const std::string& target,
                     const std::string& model, const std::filesystem::path& path, bool append) {
  const bool header = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  if (header) out << "dataset,target,model,trial,lr,wd,dropout,hidden,layers,heads,val_mse,status\n";
  for (const auto& r : log) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << dataset << ',' << target << ',' << model << ',' << r.index << ',' << text::format_double(r.config.learning_rate) << ','
        << text::format_double(r.config.weight_decay) << ',' << text::format_double(r.config.dropout) << ','
        << r.config.hidden << ',' << r.config.layers << ',' << r.config.heads << ','
        << text::format_double(r.objective) << ',' << status << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::string_view to_string(Segment s) {
  switch (s) {
    case Segment::Train: return "train";
    case Segment::Val: return "val";
    case Segment::Test: return "test";
  }
  return "?";
}

namespace {

// Retained-node model space <-> full-node physical and normalized spaces.
Matrix retained_to_physical(const select::SelectionPlan& plan, const dataset::Normalizer& retained_norm,
                            const Matrix& retained_normalized) {
  return select::reconstruct(plan, retained_norm.invert(retained_normalized));
}

std::vector<Window> windows_in(const Matrix& normalized, std::size_t seq_len) {
  return dataset::make_windows(normalized, seq_len);
}

RunMetrics summarize(const std::vector<double>& full, const std::vector<double>& retained, double seconds) {
  RunMetrics m;
  m.mse_mean = mean(full);
  m.mse_std = sample_std(full);
  m.retained_mse_mean = mean(retained);
  m.retained_mse_std = sample_std(retained);
  m.n_repeats = full.size();
  m.wall_time = seconds;
  m.per_seed = full;
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

SpecialisedData::SpecialisedData(const dataset::NodeTimeSeries& run, const dataset::SplitSpec& split_spec,
                                 std::size_t seq_len, double tau, AccessHook hook)
    : retained_norm_(dataset::NormalizerMode::MinMax, {}, {}),
      full_norm_(dataset::NormalizerMode::MinMax, {}, {}),
      node_ids_(run.node_ids()),
      hook_(std::move(hook)) {
  auto parts = dataset::split(run, split_spec, seq_len + 1);
  plan_ = select::build_plan(select::pearson_matrix(parts.train.values()), tau);
  plan_.node_ids = run.node_ids();
  plan_.fitted_on = {{"run", run.run_id()}, {"segment", "train"}};

  full_norm_ = dataset::Normalizer::fit(parts.train.values());
  const auto& keep = plan_.retained;
  retained_norm_ = dataset::Normalizer::fit(parts.train.values().select_columns(keep));

  auto prepare = [&](const dataset::NodeTimeSeries& seg) {
    return windows_in(retained_norm_.apply(seg.values().select_columns(keep)), seq_len);
  };
  train_ = prepare(parts.train);
  val_ = prepare(parts.val);
  test_ = prepare(parts.test);

  const auto& test_values = parts.test.values();
  test_full_ = full_norm_.apply(test_values.row_range(seq_len, test_values.rows()));
  const auto& ts = parts.test.timestamps();
  test_timestamps_.assign(ts.begin() + static_cast<std::ptrdiff_t>(seq_len), ts.end());
}

const std::vector<Window>& SpecialisedData::windows(Segment s) const {
  if (hook_) hook_(s);
  switch (s) {
    case Segment::Train: return train_;
    case Segment::Val: return val_;
    case Segment::Test: return test_;
  }
  fail(ErrorKind::InvalidArgument, "unknown segment");
}

const Matrix& SpecialisedData::test_targets_full() const {
  if (hook_) hook_(Segment::Test);
  return test_full_;
}

Matrix SpecialisedData::to_physical(const Matrix& retained_normalized) const {
  return retained_to_physical(plan_, retained_norm_, retained_normalized);
}

Matrix SpecialisedData::normalize_full(const Matrix& physical) const { return full_norm_.apply(physical); }

double specialised_validation(const SpecialisedData& data, models::ModelSpec spec, const OptimConfig& optim,
                              std::uint64_t seed) {
  spec.d_in = spec.d_out = data.retained_width();
  spec.seed = seed;
  auto trained = train_model(spec, optim, data.windows(Segment::Train), data.windows(Segment::Val), seed);
  return trained.val_loss.back();
}

SpecialisedResult specialised_protocol(const dataset::NodeTimeSeries& run, models::ModelSpec spec,
                                       const OptimConfig& optim, double tau,
                                       const std::vector<std::uint64_t>& seeds, AccessHook hook) {
  if (seeds.empty()) fail(ErrorKind::InvalidArgument, "at least one repeat seed is required");
  const auto start = std::chrono::steady_clock::now();
  SpecialisedData data(run, dataset::SplitSpec{}, optim.seq_len, tau, std::move(hook));
  spec.d_in = spec.d_out = data.retained_width();

  SpecialisedResult result;
  result.plan = data.plan();
  result.timestamps = data.test_timestamps();
  std::vector<double> full, retained;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    spec.seed = seeds[i];
    auto trained = train_model(spec, optim, data.windows(Segment::Train), data.windows(Segment::Val), seeds[i]);
    const auto& test = data.windows(Segment::Test);
    Matrix pred = predict_windows(spec, trained.params, test);
    retained.push_back(mse(pred, targets_of(test)));
    Matrix physical = data.to_physical(pred);
    full.push_back(mse(data.normalize_full(physical), data.test_targets_full()));
    if (i == 0) {
      result.predictions = std::move(physical);
      result.spec = spec;
      result.params = std::move(trained.params);
    }
    trained.params.clear();
    result.curves.push_back(std::move(trained));
  }
  result.metrics = summarize(full, retained, seconds_since(start));
  return result;
}

namespace {

struct FoldData {
  select::SelectionPlan plan;
  dataset::Normalizer full_norm;
  dataset::Normalizer retained_norm;
  std::vector<Window> train, val, held;
  Matrix train_targets, held_targets;  // full-node normalized
  std::vector<double> held_timestamps;
};

void check_runs(const std::vector<dataset::NodeTimeSeries>& runs) {
  if (runs.size() < 2) fail(ErrorKind::InvalidArgument, "leave-one-out needs at least two runs");
  for (const auto& r : runs) {
    if (r.node_ids() != runs.front().node_ids()) {
      fail(ErrorKind::DimensionMismatch, "run '" + r.run_id() + "' has a different node set");
    }
  }
}

FoldData prepare_fold(const std::vector<dataset::NodeTimeSeries>& runs, std::size_t k, std::size_t seq_len,
                      double tau) {
  std::vector<Matrix> train_parts, val_parts;
  std::string fitted;
  for (std::size_t j = 0; j < runs.size(); ++j) {
    if (j == k) continue;
    const auto& values = runs[j].values();
    const auto cut = static_cast<std::size_t>(std::floor(kGeneralisedTrainFrac * static_cast<double>(values.rows())));
    if (cut < seq_len + 1 || values.rows() - cut < seq_len + 1) {
      fail(ErrorKind::TooShort, "run '" + runs[j].run_id() + "' is too short to window both segments");
    }
    train_parts.push_back(values.row_range(0, cut));
    val_parts.push_back(values.row_range(cut, values.rows()));
    fitted += (fitted.empty() ? "" : ",") + runs[j].run_id();
  }
  if (runs[k].steps() < seq_len + 1) fail(ErrorKind::TooShort, "run '" + runs[k].run_id() + "' is too short to window");
  const Matrix pooled = vstack(train_parts);

  auto plan = select::build_plan(select::pearson_matrix(pooled), tau);
  plan.node_ids = runs.front().node_ids();
  plan.fitted_on = {{"runs", fitted}, {"segment", "train"}};
  const auto& keep = plan.retained;
  FoldData f{plan, dataset::Normalizer::fit(pooled), dataset::Normalizer::fit(pooled.select_columns(keep)),
             {}, {}, {}, {}, {}, {}};

  // Windows are built per run so none spans a run boundary.
  auto windows_of = [&](const std::vector<Matrix>& parts, std::vector<Matrix>* full_targets) {
    std::vector<Window> out;
    for (const auto& part : parts) {
      auto w = windows_in(f.retained_norm.apply(part.select_columns(keep)), seq_len);
      out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
      if (full_targets) full_targets->push_back(f.full_norm.apply(part.row_range(seq_len, part.rows())));
    }
    return out;
  };
  std::vector<Matrix> train_full_targets, held_full_targets;
  f.train = windows_of(train_parts, &train_full_targets);
  f.val = windows_of(val_parts, nullptr);
  f.held = windows_of({runs[k].values()}, &held_full_targets);
  f.train_targets = vstack(train_full_targets);
  f.held_targets = vstack(held_full_targets);
  const auto& ts = runs[k].timestamps();
  f.held_timestamps.assign(ts.begin() + static_cast<std::ptrdiff_t>(seq_len), ts.end());
  return f;
}

}  // namespace

std::vector<FoldResult> generalised_protocol(const std::vector<dataset::NodeTimeSeries>& runs,
                                             models::ModelSpec spec, const OptimConfig& optim, double tau,
                                             const std::vector<std::uint64_t>& seeds) {
  check_runs(runs);
  if (seeds.empty()) fail(ErrorKind::InvalidArgument, "at least one repeat seed is required");

  std::vector<FoldResult> folds;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    const FoldData data = prepare_fold(runs, k, optim.seq_len, tau);

    FoldResult fold;
    fold.held_out = runs[k].run_id();
    fold.plan = data.plan;
    fold.train_windows = data.train.size();
    fold.timestamps = data.held_timestamps;

    spec.d_in = spec.d_out = data.plan.retained.size();
    std::vector<double> held_full, held_retained, in_full, in_retained;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      spec.seed = seeds[i];
      auto trained = train_model(spec, optim, data.train, data.val, seeds[i]);
      auto score = [&](const std::vector<Window>& windows, const Matrix& full_targets,
                       std::vector<double>& full_out, std::vector<double>& retained_out) {
        Matrix pred = predict_windows(spec, trained.params, windows);
        retained_out.push_back(mse(pred, targets_of(windows)));
        Matrix physical = retained_to_physical(data.plan, data.retained_norm, pred);
        full_out.push_back(mse(data.full_norm.apply(physical), full_targets));
        return physical;
      };
      Matrix held_physical = score(data.held, data.held_targets, held_full, held_retained);
      score(data.train, data.train_targets, in_full, in_retained);
      if (i == 0) {
        fold.predictions = std::move(held_physical);
        fold.spec = spec;
        fold.params = trained.params;
      }
      fold.train_loss.push_back(std::move(trained.train_loss));
      fold.val_loss.push_back(std::move(trained.val_loss));
    }
    const double seconds = seconds_since(start);
    fold.held_out_metrics = summarize(held_full, held_retained, seconds);
    fold.in_distribution = summarize(in_full, in_retained, seconds);
    folds.push_back(std::move(fold));
  }
  return folds;
}

double generalised_validation(const std::vector<dataset::NodeTimeSeries>& runs, models::ModelSpec spec,
                              const OptimConfig& optim, double tau, std::uint64_t seed, std::size_t fold) {
  check_runs(runs);
  if (fold >= runs.size()) fail(ErrorKind::InvalidArgument, "fold index out of range");
  const FoldData data = prepare_fold(runs, fold, optim.seq_len, tau);
  spec.d_in = spec.d_out = data.plan.retained.size();
  spec.seed = seed;
  return train_model(spec, optim, data.train, data.val, seed).val_loss.back();
}

}  // namespace thermo::train
