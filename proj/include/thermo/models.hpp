#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "thermo/autodiff.hpp"
#include "thermo/matrix.hpp"
#include "thermo/rng.hpp"

namespace thermo::models {

enum class Architecture { RNN, GRU, LSTM, BiLSTM, Transformer, TCN };

inline constexpr std::array<Architecture, 6> kAllArchitectures = {
    Architecture::RNN,    Architecture::GRU,         Architecture::LSTM,
    Architecture::BiLSTM, Architecture::Transformer, Architecture::TCN};

std::string_view to_string(Architecture a);
/// Case-insensitive; throws UsageError listing the valid kinds.
Architecture parse_architecture(std::string_view name);

struct ModelSpec {
  Architecture kind = Architecture::GRU;
  std::size_t d_in = 1;
  std::size_t d_out = 1;
  std::size_t hidden = 32;
  std::size_t layers = 1;
  double dropout = 0.0;
  std::size_t heads = 2;        // Transformer only
  std::size_t kernel_size = 3;  // TCN only; dilation of block l is 2^l
  std::uint64_t seed = 0;

  void validate() const;
};

using Parameters = std::map<std::string, ad::Tensor>;
using Bound = std::map<std::string, ad::Var>;

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0, layer-norm gains 1.
Parameters init_parameters(const ModelSpec& spec);
/// Closed-form count, independent of init_parameters.
std::size_t parameter_count(const ModelSpec& spec);
std::size_t parameter_count(const Parameters& params);

/// Registers every tensor as a trainable leaf on `tape`.
Bound bind(ad::Tape& tape, const Parameters& params);

struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;  // required when training with dropout > 0
};

/// Splits [B, T, d] into T tensors of [B, d].
std::vector<ad::Var> split_steps(const ad::Var& sequence);

// Single recurrent layers over a list of [B, d] step inputs. Hidden (and cell)
// states start at zero.
std::vector<ad::Var> rnn_layer(const Bound& p, const std::string& prefix,
                               const std::vector<ad::Var>& inputs, std::size_t hidden);
std::vector<ad::Var> gru_layer(const Bound& p, const std::string& prefix,
                               const std::vector<ad::Var>& inputs, std::size_t hidden);
struct LstmTrace {
  std::vector<ad::Var> h;
  std::vector<ad::Var> c;
};
LstmTrace lstm_layer(const Bound& p, const std::string& prefix, const std::vector<ad::Var>& inputs,
                     std::size_t hidden);

/// softmax(q k^T / sqrt(d_k)) v on [B, T, d_k] operands; optionally exposes
/// the attention weights [B, T, T].
ad::Var scaled_dot_product_attention(const ad::Var& q, const ad::Var& k, const ad::Var& v,
                                     ad::Tensor* weights = nullptr);
/// H heads of width hidden/H over x [B, T, hidden], then the W_O projection.
ad::Var multi_head_attention(const Bound& p, const std::string& prefix, const ad::Var& x,
                             std::size_t heads, std::vector<ad::Tensor>* weights = nullptr);
/// Sinusoidal encoding [T, n].
ad::Tensor positional_encoding(std::size_t steps, std::size_t width);

/// Two dilated causal convolutions with ReLU and dropout plus the residual
/// path (1x1 projection when `prefix + "skip.W"` is present).
ad::Var tcn_block(const Bound& p, const std::string& prefix, const ad::Var& x,
                  std::size_t dilation, double dropout, ForwardContext& ctx);
/// 1 + 2 * (kernel_size - 1) * (2^layers - 1): two convolutions per block.
std::size_t tcn_receptive_field(const ModelSpec& spec);

// Whole-model forward passes: window [B, T, d_in] -> prediction [B, d_out]
// from the last step's representation through a linear head.
ad::Var rnn_forward(const ModelSpec& s, const Bound& p, const ad::Var& window, ForwardContext& ctx);
ad::Var gru_forward(const ModelSpec& s, const Bound& p, const ad::Var& window, ForwardContext& ctx);
ad::Var lstm_forward(const ModelSpec& s, const Bound& p, const ad::Var& window, ForwardContext& ctx);
ad::Var bilstm_forward(const ModelSpec& s, const Bound& p, const ad::Var& window, ForwardContext& ctx);
ad::Var transformer_forward(const ModelSpec& s, const Bound& p, const ad::Var& window,
                            ForwardContext& ctx);
ad::Var tcn_forward(const ModelSpec& s, const Bound& p, const ad::Var& window, ForwardContext& ctx);

ad::Var forward(const ModelSpec& s, const Bound& p, const ad::Var& window, ForwardContext& ctx);

/// Per-step output [B, T, d_out] of the head applied at every position. Only
/// meaningful for causality checks and for inspecting sequence features.
ad::Var forward_sequence(const ModelSpec& s, const Bound& p, const ad::Var& window,
                         ForwardContext& ctx);

/// Eval-mode prediction on a fresh tape.
ad::Tensor predict(const ModelSpec& spec, const Parameters& params, const ad::Tensor& batch);

/// Feeds each prediction back as the newest input row. Requires d_in == d_out.
Matrix rollout(const ModelSpec& spec, const Parameters& params, const Matrix& seed_window,
               std::size_t steps);

/// Flat named-tensor file: magic, count, then per tensor name, shape and raw
/// little-endian float64 data.
void save_checkpoint(const Parameters& params, const std::filesystem::path& path);
Parameters load_checkpoint(const std::filesystem::path& path);

}  // namespace thermo::models
