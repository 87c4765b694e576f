#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "thermo/rng.hpp"

namespace thermo::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major tensor of doubles. A rank-0 tensor holds one value.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double item() const;

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Tensor reshaped(Shape shape) const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  /// Empty until backward reaches this node.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so reverse insertion order is a valid reverse topological order.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient tracking (inputs, masks, targets).
  Var constant(Tensor value);
  /// Leaf whose gradient accumulates across backward calls.
  Var parameter(Tensor value);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Leaf gradients accumulate;
  /// interior gradients are rebuilt on every call.
  void backward(const Var& loss);
  void zero_grad();

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor& grad(std::size_t id) const { return nodes_.at(id).grad; }
  const std::string& op(std::size_t id) const { return nodes_.at(id).op; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Records an op result. `backward` is dropped when no parent needs gradients.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward,
             std::string op);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn backward, std::string op);

  /// Gradient slot for accumulation inside backward closures; allocated on demand.
  Tensor& grad_slot(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    std::string op;
    bool requires_grad = false;
    bool leaf = true;
  };

  std::deque<Node> nodes_;  // stable references while recording
};

// Elementwise ops broadcast the smaller operand when its shape is a suffix of
// the larger one (or it holds a single value).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// scale * a + shift
Var affine(const Var& a, double scale, double shift = 0.0);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);

/// [..., k] x [k, n] -> [..., n]
Var matmul(const Var& a, const Var& b);
/// [B, m, k] x [B, k, n] -> [B, m, n]
Var bmm(const Var& a, const Var& b);
/// Swaps the last two axes.
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var softmax(const Var& a, std::size_t axis);

Var concat(const std::vector<Var>& parts, std::size_t axis);
/// Keeps [begin, end) along `axis`.
Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end);

Var sum(const Var& a);
Var mean(const Var& a);

/// Inverted dropout: kept entries are scaled by 1/(1-p). Identity when not
/// training or p == 0.
Var dropout(const Var& a, double p, bool training, Rng& rng);

/// Causal dilated convolution. x: [B, T, C_in] or [T, C_in]; kernel:
/// [K, C_in, C_out]. out[t] = sum_j kernel[j] . x[t - dilation*j], with zeros
/// before the sequence start.
Var conv1d_causal(const Var& x, const Var& kernel, std::size_t dilation);

/// Normalises over the last axis to zero mean and unit variance.
Var layer_norm(const Var& a, double eps = 1e-5);

Var mse_loss(const Var& prediction, const Var& target);

}  // namespace thermo::ad
