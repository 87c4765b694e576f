#include "thermo/models.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "thermo/errors.hpp"

namespace thermo::models {

using ad::Tensor;
using ad::Var;
using namespace thermo::ad;

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::RNN: return "RNN";
    case Architecture::GRU: return "GRU";
    case Architecture::LSTM: return "LSTM";
    case Architecture::BiLSTM: return "BiLSTM";
    case Architecture::Transformer: return "Transformer";
    case Architecture::TCN: return "TCN";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  const auto wanted = lower(name);
  std::string valid;
  for (auto a : kAllArchitectures) {
    if (lower(to_string(a)) == wanted) return a;
    valid += (valid.empty() ? "" : ", ") + lower(to_string(a));
  }
  fail(ErrorKind::UsageError, "unknown architecture '" + std::string(name) + "'; valid kinds: " + valid);
}

void ModelSpec::validate() const {
  if (d_in == 0 || d_out == 0 || hidden == 0) fail(ErrorKind::InvalidArgument, "model dimensions must be positive");
  if (layers == 0) fail(ErrorKind::InvalidArgument, "a model needs at least one layer");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorKind::InvalidArgument, "dropout must lie in [0,1)");
  if (kind == Architecture::Transformer) {
    if (heads == 0 || hidden % heads != 0) {
      fail(ErrorKind::HeadsDivisibility, "hidden " + std::to_string(hidden) +
                                             " is not divisible by " + std::to_string(heads) + " heads");
    }
  }
  if (kind == Architecture::TCN && kernel_size == 0) fail(ErrorKind::InvalidArgument, "kernel_size must be positive");
  if (kind == Architecture::TCN && layers > 30) fail(ErrorKind::InvalidArgument, "too many TCN blocks");
}

namespace {

std::string layer_prefix(const std::string& family, std::size_t layer) {
  return family + "." + std::to_string(layer) + ".";
}

std::size_t recurrent_input(const ModelSpec& s, std::size_t layer) {
  if (layer == 0) return s.d_in;
  return s.kind == Architecture::BiLSTM ? 2 * s.hidden : s.hidden;
}

std::size_t head_width(const ModelSpec& s) {
  return s.kind == Architecture::BiLSTM ? 2 * s.hidden : s.hidden;
}

// Records every tensor the architecture owns, in a fixed order, so the random
// stream (and therefore the initial values) is a pure function of the spec.
struct Builder {
  Parameters params;
  Rng rng;

  explicit Builder(std::uint64_t seed) : rng(seed) {}

  void weight(const std::string& name, ad::Shape shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.data()) v = rng.uniform(-bound, bound);
    params.emplace(name, std::move(t));
  }
  void bias(const std::string& name, std::size_t n) { params.emplace(name, Tensor({n}, 0.0)); }
  void gain(const std::string& name, std::size_t n) { params.emplace(name, Tensor({n}, 1.0)); }
  void gate(const std::string& prefix, const std::string& g, std::size_t in, std::size_t n) {
    weight(prefix + "W_x" + g, {in, n}, in);
    weight(prefix + "W_h" + g, {n, n}, n);
    bias(prefix + "b_" + g, n);
  }
};

void build_lstm(Builder& b, const std::string& prefix, std::size_t in, std::size_t n) {
  for (const char* g : {"i", "f", "o", "c"}) b.gate(prefix, g, in, n);
}

Var linear(const Bound& p, const std::string& prefix, const Var& x) {
  return add(matmul(x, p.at(prefix + "W")), p.at(prefix + "b"));
}

Var gate(const Bound& p, const std::string& prefix, const std::string& g, const Var& x, const Var& h) {
  return add(add(matmul(x, p.at(prefix + "W_x" + g)), matmul(h, p.at(prefix + "W_h" + g))),
             p.at(prefix + "b_" + g));
}

Var zeros_like_batch(const Var& x, std::size_t n) {
  return x.tape()->constant(Tensor({x.shape().front(), n}, 0.0));
}

void check_window(const ModelSpec& s, const Var& window) {
  const auto& sh = window.shape();
  if (sh.size() != 3 || sh[2] != s.d_in || sh[1] == 0 || sh[0] == 0) {
    fail(ErrorKind::ShapeMismatch, "expected window [B, T, " + std::to_string(s.d_in) + "], got " +
                                       ad::shape_string(sh));
  }
}

std::vector<Var> dropout_all(const std::vector<Var>& xs, double p, ForwardContext& ctx) {
  if (!ctx.training || p == 0.0) return xs;
  if (!ctx.rng) fail(ErrorKind::InvalidArgument, "training with dropout needs an rng");
  std::vector<Var> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(ad::dropout(x, p, true, *ctx.rng));
  return out;
}

Var apply_dropout(const Var& x, double p, ForwardContext& ctx) {
  if (!ctx.training || p == 0.0) return x;
  if (!ctx.rng) fail(ErrorKind::InvalidArgument, "training with dropout needs an rng");
  return ad::dropout(x, p, true, *ctx.rng);
}

// Stacks [B, n] steps into [B, T, n].
Var stack_steps(const std::vector<Var>& steps) {
  std::vector<Var> parts;
  parts.reserve(steps.size());
  for (const auto& s : steps) parts.push_back(reshape(s, {s.shape()[0], 1, s.shape()[1]}));
  return concat(parts, 1);
}

Var last_step(const Var& seq) {
  const auto& sh = seq.shape();
  return reshape(slice(seq, 1, sh[1] - 1, sh[1]), {sh[0], sh[2]});
}

// Final-layer hidden sequence of a unidirectional recurrent stack.
std::vector<Var> recurrent_stack(const ModelSpec& s, const Bound& p, const Var& window,
                                 ForwardContext& ctx) {
  check_window(s, window);
  auto seq = split_steps(window);
  for (std::size_t l = 0; l < s.layers; ++l) {
    if (l > 0) seq = dropout_all(seq, s.dropout, ctx);
    switch (s.kind) {
      case Architecture::RNN: seq = rnn_layer(p, layer_prefix("rnn", l), seq, s.hidden); break;
      case Architecture::GRU: seq = gru_layer(p, layer_prefix("gru", l), seq, s.hidden); break;
      case Architecture::LSTM: seq = lstm_layer(p, layer_prefix("lstm", l), seq, s.hidden).h; break;
      default: fail(ErrorKind::InvalidArgument, "not a unidirectional recurrent model");
    }
  }
  return seq;
}

struct BiOutputs {
  std::vector<Var> forward;   // aligned to time
  std::vector<Var> backward;  // aligned to time; backward[0] is its final state
};

BiOutputs bilstm_stack(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  check_window(s, window);
  auto seq = split_steps(window);
  BiOutputs out;
  for (std::size_t l = 0; l < s.layers; ++l) {
    if (l > 0) seq = dropout_all(seq, s.dropout, ctx);
    out.forward = lstm_layer(p, layer_prefix("fwd", l), seq, s.hidden).h;
    std::vector<Var> reversed(seq.rbegin(), seq.rend());
    auto back = lstm_layer(p, layer_prefix("bwd", l), reversed, s.hidden).h;
    out.backward.assign(back.rbegin(), back.rend());
    if (l + 1 < s.layers) {
      for (std::size_t t = 0; t < seq.size(); ++t) seq[t] = concat({out.forward[t], out.backward[t]}, 1);
    }
  }
  return out;
}

Var transformer_stack(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  check_window(s, window);
  const std::size_t steps = window.shape()[1];
  auto& tape = *window.tape();
  Var x = add(linear(p, "tf.embed.", window), tape.constant(positional_encoding(steps, s.hidden)));
  for (std::size_t l = 0; l < s.layers; ++l) {
    const auto pre = layer_prefix("tf", l);
    Var attn = multi_head_attention(p, pre, x, s.heads);
    x = layer_norm(add(x, apply_dropout(attn, s.dropout, ctx)));
    x = add(mul(x, p.at(pre + "ln1.gain")), p.at(pre + "ln1.bias"));
    Var ff = linear(p, pre + "ff2.", relu(linear(p, pre + "ff1.", x)));
    x = layer_norm(add(x, apply_dropout(ff, s.dropout, ctx)));
    x = add(mul(x, p.at(pre + "ln2.gain")), p.at(pre + "ln2.bias"));
  }
  return x;
}

Var tcn_stack(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  check_window(s, window);
  Var h = window;
  for (std::size_t l = 0; l < s.layers; ++l) {
    h = tcn_block(p, layer_prefix("tcn", l), h, std::size_t{1} << l, s.dropout, ctx);
  }
  return h;
}

}  // namespace

Parameters init_parameters(const ModelSpec& spec) {
  spec.validate();
  Builder b(spec.seed);
  const std::size_t n = spec.hidden;
  switch (spec.kind) {
    case Architecture::RNN:
      for (std::size_t l = 0; l < spec.layers; ++l) {
        const auto pre = layer_prefix("rnn", l);
        const auto in = recurrent_input(spec, l);
        b.weight(pre + "W_input", {in, n}, in);
        b.weight(pre + "W_feedback", {n, n}, n);
        b.bias(pre + "b", n);
      }
      break;
    case Architecture::GRU:
      for (std::size_t l = 0; l < spec.layers; ++l) {
        const auto pre = layer_prefix("gru", l);
        const auto in = recurrent_input(spec, l);
        for (const char* g : {"r", "z", "h"}) b.gate(pre, g, in, n);
      }
      break;
    case Architecture::LSTM:
      for (std::size_t l = 0; l < spec.layers; ++l) {
        build_lstm(b, layer_prefix("lstm", l), recurrent_input(spec, l), n);
      }
      break;
    case Architecture::BiLSTM:
      for (std::size_t l = 0; l < spec.layers; ++l) {
        build_lstm(b, layer_prefix("fwd", l), recurrent_input(spec, l), n);
        build_lstm(b, layer_prefix("bwd", l), recurrent_input(spec, l), n);
      }
      break;
    case Architecture::Transformer:
      b.weight("tf.embed.W", {spec.d_in, n}, spec.d_in);
      b.bias("tf.embed.b", n);
      for (std::size_t l = 0; l < spec.layers; ++l) {
        const auto pre = layer_prefix("tf", l);
        for (const char* m : {"W_q", "W_k", "W_v", "W_o"}) b.weight(pre + m, {n, n}, n);
        b.bias(pre + "b_o", n);
        b.gain(pre + "ln1.gain", n);
        b.bias(pre + "ln1.bias", n);
        b.weight(pre + "ff1.W", {n, 2 * n}, n);
        b.bias(pre + "ff1.b", 2 * n);
        b.weight(pre + "ff2.W", {2 * n, n}, 2 * n);
        b.bias(pre + "ff2.b", n);
        b.gain(pre + "ln2.gain", n);
        b.bias(pre + "ln2.bias", n);
      }
      break;
    case Architecture::TCN:
      for (std::size_t l = 0; l < spec.layers; ++l) {
        const auto pre = layer_prefix("tcn", l);
        const std::size_t in = l == 0 ? spec.d_in : n;
        const std::size_t k = spec.kernel_size;
        b.weight(pre + "conv1.W", {k, in, n}, k * in);
        b.bias(pre + "conv1.b", n);
        b.weight(pre + "conv2.W", {k, n, n}, k * n);
        b.bias(pre + "conv2.b", n);
        if (in != n) {
          b.weight(pre + "skip.W", {in, n}, in);
          b.bias(pre + "skip.b", n);
        }
      }
      break;
  }
  const std::size_t w = head_width(spec);
  b.weight("head.W", {w, spec.d_out}, w);
  b.bias("head.b", spec.d_out);
  return std::move(b.params);
}

std::size_t parameter_count(const ModelSpec& s) {
  s.validate();
  const std::size_t n = s.hidden;
  std::size_t total = 0;
  auto cell = [&](std::size_t gates, std::size_t in) { return gates * (n * in + n * n + n); };
  switch (s.kind) {
    case Architecture::RNN:
      for (std::size_t l = 0; l < s.layers; ++l) total += cell(1, recurrent_input(s, l));
      break;
    case Architecture::GRU:
      for (std::size_t l = 0; l < s.layers; ++l) total += cell(3, recurrent_input(s, l));
      break;
    case Architecture::LSTM:
      for (std::size_t l = 0; l < s.layers; ++l) total += cell(4, recurrent_input(s, l));
      break;
    case Architecture::BiLSTM:
      for (std::size_t l = 0; l < s.layers; ++l) total += 2 * cell(4, recurrent_input(s, l));
      break;
    case Architecture::Transformer:
      total = s.d_in * n + n + s.layers * (8 * n * n + 8 * n);
      break;
    case Architecture::TCN:
      for (std::size_t l = 0; l < s.layers; ++l) {
        const std::size_t in = l == 0 ? s.d_in : n;
        total += s.kernel_size * in * n + n + s.kernel_size * n * n + n;
        if (in != n) total += in * n + n;
      }
      break;
  }
  return total + head_width(s) * s.d_out + s.d_out;
}

std::size_t parameter_count(const Parameters& params) {
  std::size_t total = 0;
  for (const auto& [_, t] : params) total += t.size();
  return total;
}

Bound bind(ad::Tape& tape, const Parameters& params) {
  Bound out;
  for (const auto& [name, t] : params) out.emplace(name, tape.parameter(t));
  return out;
}

std::vector<Var> split_steps(const Var& sequence) {
  const auto& sh = sequence.shape();
  if (sh.size() != 3) fail(ErrorKind::ShapeMismatch, "split_steps expects [B, T, d]");
  std::vector<Var> steps;
  steps.reserve(sh[1]);
  for (std::size_t t = 0; t < sh[1]; ++t) {
    steps.push_back(reshape(slice(sequence, 1, t, t + 1), {sh[0], sh[2]}));
  }
  return steps;
}

std::vector<Var> rnn_layer(const Bound& p, const std::string& prefix, const std::vector<Var>& inputs,
                           std::size_t hidden) {
  std::vector<Var> hs;
  if (inputs.empty()) return hs;
  Var h = zeros_like_batch(inputs.front(), hidden);
  const Var& w_in = p.at(prefix + "W_input");
  const Var& w_fb = p.at(prefix + "W_feedback");
  const Var& b = p.at(prefix + "b");
  for (const auto& x : inputs) {
    h = tanh(add(add(matmul(h, w_fb), matmul(x, w_in)), b));
    hs.push_back(h);
  }
  return hs;
}

std::vector<Var> gru_layer(const Bound& p, const std::string& prefix, const std::vector<Var>& inputs,
                           std::size_t hidden) {
  std::vector<Var> hs;
  if (inputs.empty()) return hs;
  Var h = zeros_like_batch(inputs.front(), hidden);
  for (const auto& x : inputs) {
    Var r = sigmoid(gate(p, prefix, "r", x, h));
    Var z = sigmoid(gate(p, prefix, "z", x, h));
    Var candidate = tanh(add(add(matmul(x, p.at(prefix + "W_xh")), matmul(mul(r, h), p.at(prefix + "W_hh"))),
                             p.at(prefix + "b_h")));
    // (1 - z) * h + z * candidate
    h = add(mul(affine(z, -1.0, 1.0), h), mul(z, candidate));
    hs.push_back(h);
  }
  return hs;
}

LstmTrace lstm_layer(const Bound& p, const std::string& prefix, const std::vector<Var>& inputs,
                     std::size_t hidden) {
  LstmTrace trace;
  if (inputs.empty()) return trace;
  Var h = zeros_like_batch(inputs.front(), hidden);
  Var c = zeros_like_batch(inputs.front(), hidden);
  for (const auto& x : inputs) {
    Var in = sigmoid(gate(p, prefix, "i", x, h));
    Var forget = sigmoid(gate(p, prefix, "f", x, h));
    Var out = sigmoid(gate(p, prefix, "o", x, h));
    Var candidate = tanh(gate(p, prefix, "c", x, h));
    c = add(mul(forget, c), mul(in, candidate));
    h = mul(out, tanh(c));
    trace.h.push_back(h);
    trace.c.push_back(c);
  }
  return trace;
}

Var scaled_dot_product_attention(const Var& q, const Var& k, const Var& v, Tensor* weights) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.shape().back()));
  Var scores = affine(bmm(q, transpose(k)), scale);
  Var attn = softmax(scores, 2);
  if (weights) *weights = attn.value();
  return bmm(attn, v);
}

Var multi_head_attention(const Bound& p, const std::string& prefix, const Var& x, std::size_t heads,
                         std::vector<Tensor>* weights) {
  const std::size_t width = x.shape().back();
  if (heads == 0 || width % heads != 0) {
    fail(ErrorKind::HeadsDivisibility, std::to_string(width) + " not divisible by " + std::to_string(heads));
  }
  const std::size_t dh = width / heads;
  Var q = matmul(x, p.at(prefix + "W_q"));
  Var k = matmul(x, p.at(prefix + "W_k"));
  Var v = matmul(x, p.at(prefix + "W_v"));
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor w;
    outs.push_back(scaled_dot_product_attention(slice(q, 2, h * dh, (h + 1) * dh), slice(k, 2, h * dh, (h + 1) * dh),
                                                slice(v, 2, h * dh, (h + 1) * dh), weights ? &w : nullptr));
    if (weights) weights->push_back(std::move(w));
  }
  Var merged = heads == 1 ? outs.front() : concat(outs, 2);
  return add(matmul(merged, p.at(prefix + "W_o")), p.at(prefix + "b_o"));
}

Tensor positional_encoding(std::size_t steps, std::size_t width) {
  Tensor pe({steps, width});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      const double angle = static_cast<double>(t) * freq;
      pe[t * width + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Var tcn_block(const Bound& p, const std::string& prefix, const Var& x, std::size_t dilation, double dropout,
              ForwardContext& ctx) {
  Var y = relu(add(conv1d_causal(x, p.at(prefix + "conv1.W"), dilation), p.at(prefix + "conv1.b")));
  y = apply_dropout(y, dropout, ctx);
  y = relu(add(conv1d_causal(y, p.at(prefix + "conv2.W"), dilation), p.at(prefix + "conv2.b")));
  y = apply_dropout(y, dropout, ctx);
  Var skip = p.count(prefix + "skip.W") ? linear(p, prefix + "skip.", x) : x;
  return add(y, skip);
}

std::size_t tcn_receptive_field(const ModelSpec& spec) {
  return 1 + 2 * (spec.kernel_size - 1) * ((std::size_t{1} << spec.layers) - 1);
}

Var rnn_forward(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  if (s.kind != Architecture::RNN) fail(ErrorKind::InvalidArgument, "spec is not an RNN");
  return linear(p, "head.", recurrent_stack(s, p, window, ctx).back());
}

Var gru_forward(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  if (s.kind != Architecture::GRU) fail(ErrorKind::InvalidArgument, "spec is not a GRU");
  return linear(p, "head.", recurrent_stack(s, p, window, ctx).back());
}

Var lstm_forward(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  if (s.kind != Architecture::LSTM) fail(ErrorKind::InvalidArgument, "spec is not an LSTM");
  return linear(p, "head.", recurrent_stack(s, p, window, ctx).back());
}

Var bilstm_forward(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  if (s.kind != Architecture::BiLSTM) fail(ErrorKind::InvalidArgument, "spec is not a BiLSTM");
  auto bi = bilstm_stack(s, p, window, ctx);
  return linear(p, "head.", concat({bi.forward.back(), bi.backward.front()}, 1));
}

Var transformer_forward(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  if (s.kind != Architecture::Transformer) fail(ErrorKind::InvalidArgument, "spec is not a Transformer");
  return linear(p, "head.", last_step(transformer_stack(s, p, window, ctx)));
}

Var tcn_forward(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  if (s.kind != Architecture::TCN) fail(ErrorKind::InvalidArgument, "spec is not a TCN");
  return linear(p, "head.", last_step(tcn_stack(s, p, window, ctx)));
}

Var forward(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  switch (s.kind) {
    case Architecture::RNN: return rnn_forward(s, p, window, ctx);
    case Architecture::GRU: return gru_forward(s, p, window, ctx);
    case Architecture::LSTM: return lstm_forward(s, p, window, ctx);
    case Architecture::BiLSTM: return bilstm_forward(s, p, window, ctx);
    case Architecture::Transformer: return transformer_forward(s, p, window, ctx);
    case Architecture::TCN: return tcn_forward(s, p, window, ctx);
  }
  fail(ErrorKind::InvalidArgument, "unknown architecture");
}

Var forward_sequence(const ModelSpec& s, const Bound& p, const Var& window, ForwardContext& ctx) {
  Var features;
  switch (s.kind) {
    case Architecture::RNN:
    case Architecture::GRU:
    case Architecture::LSTM: features = stack_steps(recurrent_stack(s, p, window, ctx)); break;
    case Architecture::BiLSTM: {
      auto bi = bilstm_stack(s, p, window, ctx);
      std::vector<Var> steps;
      for (std::size_t t = 0; t < bi.forward.size(); ++t) steps.push_back(concat({bi.forward[t], bi.backward[t]}, 1));
      features = stack_steps(steps);
      break;
    }
    case Architecture::Transformer: features = transformer_stack(s, p, window, ctx); break;
    case Architecture::TCN: features = tcn_stack(s, p, window, ctx); break;
  }
  return linear(p, "head.", features);
}

Tensor predict(const ModelSpec& spec, const Parameters& params, const Tensor& batch) {
  ad::Tape tape;
  Bound bound;
  for (const auto& [name, t] : params) bound.emplace(name, tape.constant(t));
  ForwardContext ctx;
  return forward(spec, bound, tape.constant(batch), ctx).value();
}

Matrix rollout(const ModelSpec& spec, const Parameters& params, const Matrix& seed_window, std::size_t steps) {
  if (spec.d_in != spec.d_out) fail(ErrorKind::ShapeMismatch, "rollout needs d_in == d_out");
  if (seed_window.cols() != spec.d_in || seed_window.rows() == 0) {
    fail(ErrorKind::ShapeMismatch, "seed window width does not match the model");
  }
  const std::size_t len = seed_window.rows(), d = spec.d_in;
  std::vector<double> window = seed_window.data();
  Matrix out(steps, d);
  for (std::size_t s = 0; s < steps; ++s) {
    auto pred = predict(spec, params, Tensor({1, len, d}, window));
    std::copy(pred.data().begin(), pred.data().end(), out.row(s).begin());
    window.erase(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(d));
    window.insert(window.end(), pred.data().begin(), pred.data().end());
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'T', 'H', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    fail(ErrorKind::IoError, "truncated checkpoint '" + path + "'");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const Parameters& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint64_t>(out, params.size());
  for (const auto& [name, t] : params) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) write_le<std::uint64_t>(out, d);
    for (double v : t.data()) write_le<double>(out, v);
  }
  if (!out) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

Parameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const auto p = path.string();
  if (!in) fail(ErrorKind::IoError, "cannot open '" + p + "'");
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorKind::IoError, "'" + p + "' is not a checkpoint");
  }
  Parameters params;
  const auto count = read_le<std::uint64_t>(in, p);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_le<std::uint32_t>(in, p);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) fail(ErrorKind::IoError, "truncated checkpoint '" + p + "'");
    const auto rank = read_le<std::uint32_t>(in, p);
    ad::Shape shape(rank);
    for (auto& d : shape) d = read_le<std::uint64_t>(in, p);
    std::vector<double> data(ad::shape_size(shape));
    for (auto& v : data) v = read_le<double>(in, p);
    params.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return params;
}

}  // namespace thermo::models
