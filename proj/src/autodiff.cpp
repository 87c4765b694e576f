#include "thermo/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "thermo/errors.hpp"

namespace thermo::ad {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    fail(ErrorKind::ShapeMismatch, "buffer of " + std::to_string(data_.size()) +
                                       " values cannot have shape " + shape_string(shape_));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) fail(ErrorKind::ShapeMismatch, "item() on a tensor of " + shape_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    fail(ErrorKind::ShapeMismatch, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "parameter";
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward,
                 std::string op) {
  return record(std::move(value), std::vector<Var>(parents), std::move(backward), std::move(op));
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn backward,
                 std::string op) {
  Node n;
  n.value = std::move(value);
  n.op = std::move(op);
  n.leaf = false;
  for (const auto& p : parents) {
    if (p.tape() != this) fail(ErrorKind::InvalidArgument, "op '" + n.op + "' mixes tapes");
    n.parents.push_back(p.id());
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_slot(std::size_t id) {
  auto& n = nodes_.at(id);
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) fail(ErrorKind::InvalidArgument, "loss belongs to another tape");
  if (value(loss.id()).size() != 1) {
    fail(ErrorKind::NonScalarLoss, "backward needs a scalar loss, got " +
                                       shape_string(value(loss.id()).shape()));
  }
  for (auto& n : nodes_) {
    if (!n.leaf) n.grad = Tensor();
  }
  auto& seed = grad_slot(loss.id());
  seed[0] += 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (n.leaf || !n.backward || n.grad.empty()) continue;
    n.backward(*this, id);
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad = Tensor();
}

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) fail(ErrorKind::InvalidArgument, "uninitialised Var");
  return *a.tape();
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

struct Broadcast {
  Shape out;
  bool a_full = true;
  bool b_full = true;
};

Broadcast broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return {a.shape(), true, true};
  if (b.size() == 1 || is_suffix(b.shape(), a.shape())) return {a.shape(), true, false};
  if (a.size() == 1 || is_suffix(a.shape(), b.shape())) return {b.shape(), false, true};
  fail(ErrorKind::ShapeMismatch, std::string(op) + ": cannot broadcast " + shape_string(a.shape()) +
                                     " with " + shape_string(b.shape()));
}

// out[i] = f(a[i % na], b[i % nb]); suffix broadcasting in row-major layout
// reduces to modular indexing.
template <typename F>
Tensor elementwise(const Tensor& a, const Tensor& b, const Shape& out_shape, F f) {
  Tensor out(out_shape);
  const std::size_t na = a.size(), nb = b.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i % na], b[i % nb]);
  return out;
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

void accumulate_reduced(Tensor& slot, const Tensor& g, std::size_t stride_size) {
  // g has the broadcast (larger) shape; slot has stride_size entries.
  for (std::size_t i = 0; i < g.size(); ++i) slot[i % stride_size] += g[i];
}

struct Axis {
  std::size_t outer = 1, len = 1, inner = 1;
};

Axis split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    fail(ErrorKind::ShapeMismatch, "axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  Axis ax;
  for (std::size_t i = 0; i < axis; ++i) ax.outer *= shape[i];
  ax.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) ax.inner *= shape[i];
  return ax;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  const auto& bv = b.value();
  auto bc = broadcast(av, bv, "add");
  auto out = elementwise(av, bv, bc.out, [](double x, double y) { return x + y; });
  const auto ia = a.id(), ib = b.id();
  const auto na = av.size(), nb = bv.size();
  return t.record(std::move(out), {a, b},
                  [ia, ib, na, nb](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    if (tp.requires_grad(ia)) accumulate_reduced(tp.grad_slot(ia), g, na);
                    if (tp.requires_grad(ib)) accumulate_reduced(tp.grad_slot(ib), g, nb);
                  },
                  "add");
}

Var sub(const Var& a, const Var& b) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  const auto& bv = b.value();
  auto bc = broadcast(av, bv, "sub");
  auto out = elementwise(av, bv, bc.out, [](double x, double y) { return x - y; });
  const auto ia = a.id(), ib = b.id();
  const auto na = av.size(), nb = bv.size();
  return t.record(std::move(out), {a, b},
                  [ia, ib, na, nb](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    if (tp.requires_grad(ia)) accumulate_reduced(tp.grad_slot(ia), g, na);
                    if (tp.requires_grad(ib)) {
                      auto& slot = tp.grad_slot(ib);
                      for (std::size_t i = 0; i < g.size(); ++i) slot[i % nb] -= g[i];
                    }
                  },
                  "sub");
}

Var mul(const Var& a, const Var& b) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  const auto& bv = b.value();
  auto bc = broadcast(av, bv, "mul");
  auto out = elementwise(av, bv, bc.out, [](double x, double y) { return x * y; });
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b},
                  [ia, ib](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& x = tp.value(ia);
                    const Tensor& y = tp.value(ib);
                    const auto nx = x.size(), ny = y.size();
                    if (tp.requires_grad(ia)) {
                      auto& slot = tp.grad_slot(ia);
                      for (std::size_t i = 0; i < g.size(); ++i) slot[i % nx] += g[i] * y[i % ny];
                    }
                    if (tp.requires_grad(ib)) {
                      auto& slot = tp.grad_slot(ib);
                      for (std::size_t i = 0; i < g.size(); ++i) slot[i % ny] += g[i] * x[i % nx];
                    }
                  },
                  "mul");
}

Var affine(const Var& a, double scale, double shift) {
  auto& t = tape_of(a);
  auto out = map(a.value(), [=](double x) { return scale * x + shift; });
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia, scale](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    auto& slot = tp.grad_slot(ia);
                    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += scale * g[i];
                  },
                  "affine");
}

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator-(const Var& a, const Var& b) { return sub(a, b); }
Var operator*(const Var& a, const Var& b) { return mul(a, b); }

Var matmul(const Var& a, const Var& b) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() < 2 || bv.rank() != 2 || av.shape().back() != bv.dim(0)) {
    fail(ErrorKind::ShapeMismatch, "matmul " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  const std::size_t k = bv.dim(0), n = bv.dim(1), m = av.size() / k;
  Shape out_shape = av.shape();
  out_shape.back() = n;
  Tensor out(out_shape);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = av.data().data() + i * k;
    double* orow = out.data().data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = arow[p];
      if (s == 0.0) continue;
      const double* brow = bv.data().data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b},
                  [ia, ib, m, k, n](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& x = tp.value(ia);
                    const Tensor& y = tp.value(ib);
                    if (tp.requires_grad(ia)) {
                      auto& dx = tp.grad_slot(ia);  // g [m,n] * y^T [n,k]
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          double acc = 0.0;
                          const double* grow = g.data().data() + i * n;
                          const double* yrow = y.data().data() + p * n;
                          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * yrow[j];
                          dx[i * k + p] += acc;
                        }
                      }
                    }
                    if (tp.requires_grad(ib)) {
                      auto& dy = tp.grad_slot(ib);  // x^T [k,m] * g [m,n]
                      for (std::size_t i = 0; i < m; ++i) {
                        const double* grow = g.data().data() + i * n;
                        for (std::size_t p = 0; p < k; ++p) {
                          const double s = x[i * k + p];
                          if (s == 0.0) continue;
                          double* drow = dy.data().data() + p * n;
                          for (std::size_t j = 0; j < n; ++j) drow[j] += s * grow[j];
                        }
                      }
                    }
                  },
                  "matmul");
}

Var bmm(const Var& a, const Var& b) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(1)) {
    fail(ErrorKind::ShapeMismatch, "bmm " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  const std::size_t batch = av.dim(0), m = av.dim(1), k = av.dim(2), n = bv.dim(2);
  Tensor out({batch, m, n});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double s = av[(bi * m + i) * k + p];
        for (std::size_t j = 0; j < n; ++j) out[(bi * m + i) * n + j] += s * bv[(bi * k + p) * n + j];
      }
    }
  }
  const auto ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b},
                  [ia, ib, batch, m, k, n](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& x = tp.value(ia);
                    const Tensor& y = tp.value(ib);
                    const bool gx = tp.requires_grad(ia), gy = tp.requires_grad(ib);
                    Tensor* dx = gx ? &tp.grad_slot(ia) : nullptr;
                    Tensor* dy = gy ? &tp.grad_slot(ib) : nullptr;
                    for (std::size_t bi = 0; bi < batch; ++bi) {
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          double acc = 0.0;
                          const double xv = x[(bi * m + i) * k + p];
                          for (std::size_t j = 0; j < n; ++j) {
                            const double gv = g[(bi * m + i) * n + j];
                            acc += gv * y[(bi * k + p) * n + j];
                            if (dy) (*dy)[(bi * k + p) * n + j] += xv * gv;
                          }
                          if (dx) (*dx)[(bi * m + i) * k + p] += acc;
                        }
                      }
                    }
                  },
                  "bmm");
}

Var transpose(const Var& a) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  if (av.rank() < 2) fail(ErrorKind::ShapeMismatch, "transpose needs rank >= 2");
  Shape s = av.shape();
  const std::size_t r = s[s.size() - 2], c = s[s.size() - 1], outer = av.size() / (r * c);
  std::swap(s[s.size() - 2], s[s.size() - 1]);
  Tensor out(s);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) out[o * r * c + j * r + i] = av[o * r * c + i * c + j];
    }
  }
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia, r, c, outer](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    auto& dx = tp.grad_slot(ia);
                    for (std::size_t o = 0; o < outer; ++o) {
                      for (std::size_t i = 0; i < r; ++i) {
                        for (std::size_t j = 0; j < c; ++j) {
                          dx[o * r * c + i * c + j] += g[o * r * c + j * r + i];
                        }
                      }
                    }
                  },
                  "transpose");
}

Var reshape(const Var& a, Shape shape) {
  auto& t = tape_of(a);
  auto out = a.value().reshaped(std::move(shape));
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    auto& dx = tp.grad_slot(ia);
                    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
                  },
                  "reshape");
}

Var sigmoid(const Var& a) {
  auto& t = tape_of(a);
  auto out = map(a.value(), [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& y = tp.value(self);
                    auto& dx = tp.grad_slot(ia);
                    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
                  },
                  "sigmoid");
}

Var tanh(const Var& a) {
  auto& t = tape_of(a);
  auto out = map(a.value(), [](double x) { return std::tanh(x); });
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& y = tp.value(self);
                    auto& dx = tp.grad_slot(ia);
                    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
                  },
                  "tanh");
}

Var relu(const Var& a) {
  auto& t = tape_of(a);
  auto out = map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& x = tp.value(ia);
                    auto& dx = tp.grad_slot(ia);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      if (x[i] > 0.0) dx[i] += g[i];
                    }
                  },
                  "relu");
}

Var softmax(const Var& a, std::size_t axis) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  const auto ax = split_axis(av.shape(), axis);
  Tensor out(av.shape());
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t in = 0; in < ax.inner; ++in) {
      auto idx = [&](std::size_t l) { return (o * ax.len + l) * ax.inner + in; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < ax.len; ++l) mx = std::max(mx, av[idx(l)]);
      double z = 0.0;
      for (std::size_t l = 0; l < ax.len; ++l) {
        out[idx(l)] = std::exp(av[idx(l)] - mx);
        z += out[idx(l)];
      }
      for (std::size_t l = 0; l < ax.len; ++l) out[idx(l)] /= z;
    }
  }
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia, ax](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& y = tp.value(self);
                    auto& dx = tp.grad_slot(ia);
                    for (std::size_t o = 0; o < ax.outer; ++o) {
                      for (std::size_t in = 0; in < ax.inner; ++in) {
                        auto idx = [&](std::size_t l) { return (o * ax.len + l) * ax.inner + in; };
                        double dot = 0.0;
                        for (std::size_t l = 0; l < ax.len; ++l) dot += g[idx(l)] * y[idx(l)];
                        for (std::size_t l = 0; l < ax.len; ++l) dx[idx(l)] += y[idx(l)] * (g[idx(l)] - dot);
                      }
                    }
                  },
                  "softmax");
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) fail(ErrorKind::ShapeMismatch, "concat of nothing");
  auto& t = tape_of(parts.front());
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) fail(ErrorKind::ShapeMismatch, "concat axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> lens;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) fail(ErrorKind::ShapeMismatch, "concat " + shape_string(s) + " with " + shape_string(first));
    lens.push_back(s[axis]);
    out_shape[axis] += s[axis];
  }
  const auto ax = split_axis(out_shape, axis);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const auto& pv = parts[pi].value();
    for (std::size_t o = 0; o < ax.outer; ++o) {
      for (std::size_t l = 0; l < lens[pi]; ++l) {
        for (std::size_t in = 0; in < ax.inner; ++in) {
          out[(o * ax.len + offset + l) * ax.inner + in] = pv[(o * lens[pi] + l) * ax.inner + in];
        }
      }
    }
    offset += lens[pi];
  }
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return t.record(std::move(out), parts,
                  [ids, lens, ax](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    std::size_t offset = 0;
                    for (std::size_t pi = 0; pi < ids.size(); ++pi) {
                      if (tp.requires_grad(ids[pi])) {
                        auto& dx = tp.grad_slot(ids[pi]);
                        for (std::size_t o = 0; o < ax.outer; ++o) {
                          for (std::size_t l = 0; l < lens[pi]; ++l) {
                            for (std::size_t in = 0; in < ax.inner; ++in) {
                              dx[(o * lens[pi] + l) * ax.inner + in] +=
                                  g[(o * ax.len + offset + l) * ax.inner + in];
                            }
                          }
                        }
                      }
                      offset += lens[pi];
                    }
                  },
                  "concat");
}

Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  const auto ax = split_axis(av.shape(), axis);
  if (begin >= end || end > ax.len) {
    fail(ErrorKind::ShapeMismatch, "slice [" + std::to_string(begin) + "," + std::to_string(end) +
                                       ") of axis with length " + std::to_string(ax.len));
  }
  Shape s = av.shape();
  const std::size_t len = end - begin;
  s[axis] = len;
  Tensor out(s);
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t l = 0; l < len; ++l) {
      for (std::size_t in = 0; in < ax.inner; ++in) {
        out[(o * len + l) * ax.inner + in] = av[(o * ax.len + begin + l) * ax.inner + in];
      }
    }
  }
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia, ax, begin, len](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    auto& dx = tp.grad_slot(ia);
                    for (std::size_t o = 0; o < ax.outer; ++o) {
                      for (std::size_t l = 0; l < len; ++l) {
                        for (std::size_t in = 0; in < ax.inner; ++in) {
                          dx[(o * ax.len + begin + l) * ax.inner + in] += g[(o * len + l) * ax.inner + in];
                        }
                      }
                    }
                  },
                  "slice");
}

Var sum(const Var& a) {
  auto& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const auto ia = a.id();
  return t.record(Tensor::scalar(s), {a},
                  [ia](Tape& tp, std::size_t self) {
                    const double g = tp.grad(self)[0];
                    auto& dx = tp.grad_slot(ia);
                    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
                  },
                  "sum");
}

Var mean(const Var& a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0.0) fail(ErrorKind::ShapeMismatch, "mean of an empty tensor");
  return affine(sum(a), 1.0 / n);
}

Var dropout(const Var& a, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) fail(ErrorKind::InvalidArgument, "dropout p must lie in [0,1)");
  if (!training || p == 0.0) return a;
  auto& t = tape_of(a);
  Tensor mask(a.shape());
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.bernoulli(p) ? 0.0 : keep;
  return mul(a, t.constant(std::move(mask)));
}

Var conv1d_causal(const Var& x, const Var& kernel, std::size_t dilation) {
  auto& t = tape_of(x);
  const auto& xv = x.value();
  const auto& wv = kernel.value();
  if (dilation == 0) fail(ErrorKind::InvalidArgument, "dilation must be positive");
  if ((xv.rank() != 2 && xv.rank() != 3) || wv.rank() != 3 || xv.shape().back() != wv.dim(1)) {
    fail(ErrorKind::ShapeMismatch, "conv1d_causal input " + shape_string(xv.shape()) + " kernel " +
                                       shape_string(wv.shape()));
  }
  const std::size_t batch = xv.rank() == 3 ? xv.dim(0) : 1;
  const std::size_t steps = xv.dim(xv.rank() - 2);
  const std::size_t cin = wv.dim(1), cout = wv.dim(2), taps = wv.dim(0);
  Shape s = xv.shape();
  s.back() = cout;
  Tensor out(s);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t ts = 0; ts < steps; ++ts) {
      double* orow = out.data().data() + (b * steps + ts) * cout;
      for (std::size_t j = 0; j < taps && dilation * j <= ts; ++j) {
        const double* xrow = xv.data().data() + (b * steps + ts - dilation * j) * cin;
        for (std::size_t c = 0; c < cin; ++c) {
          const double xc = xrow[c];
          const double* wrow = wv.data().data() + (j * cin + c) * cout;
          for (std::size_t o = 0; o < cout; ++o) orow[o] += wrow[o] * xc;
        }
      }
    }
  }
  const auto ix = x.id(), iw = kernel.id();
  return t.record(std::move(out), {x, kernel},
                  [ix, iw, batch, steps, cin, cout, taps, dilation](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& xv = tp.value(ix);
                    const Tensor& wv = tp.value(iw);
                    Tensor* dx = tp.requires_grad(ix) ? &tp.grad_slot(ix) : nullptr;
                    Tensor* dw = tp.requires_grad(iw) ? &tp.grad_slot(iw) : nullptr;
                    for (std::size_t b = 0; b < batch; ++b) {
                      for (std::size_t ts = 0; ts < steps; ++ts) {
                        const double* grow = g.data().data() + (b * steps + ts) * cout;
                        for (std::size_t j = 0; j < taps && dilation * j <= ts; ++j) {
                          const std::size_t src = (b * steps + ts - dilation * j) * cin;
                          for (std::size_t c = 0; c < cin; ++c) {
                            const std::size_t wbase = (j * cin + c) * cout;
                            double acc = 0.0;
                            for (std::size_t o = 0; o < cout; ++o) {
                              acc += wv[wbase + o] * grow[o];
                              if (dw) (*dw)[wbase + o] += xv[src + c] * grow[o];
                            }
                            if (dx) (*dx)[src + c] += acc;
                          }
                        }
                      }
                    }
                  },
                  "conv1d_causal");
}

Var layer_norm(const Var& a, double eps) {
  auto& t = tape_of(a);
  const auto& av = a.value();
  if (av.rank() == 0) fail(ErrorKind::ShapeMismatch, "layer_norm needs rank >= 1");
  const std::size_t n = av.shape().back(), rows = av.size() / n;
  Tensor out(av.shape());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data().data() + r * n;
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += x[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x[i] - mu) * (x[i] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) out[r * n + i] = (x[i] - mu) * inv_std[r];
  }
  const auto ia = a.id();
  return t.record(std::move(out), {a},
                  [ia, n, rows, inv_std](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& y = tp.value(self);
                    auto& dx = tp.grad_slot(ia);
                    const double inv_n = 1.0 / static_cast<double>(n);
                    for (std::size_t r = 0; r < rows; ++r) {
                      double mg = 0.0, mgy = 0.0;
                      for (std::size_t i = 0; i < n; ++i) {
                        mg += g[r * n + i];
                        mgy += g[r * n + i] * y[r * n + i];
                      }
                      mg *= inv_n;
                      mgy *= inv_n;
                      for (std::size_t i = 0; i < n; ++i) {
                        dx[r * n + i] += inv_std[r] * (g[r * n + i] - mg - y[r * n + i] * mgy);
                      }
                    }
                  },
                  "layer_norm");
}

Var mse_loss(const Var& prediction, const Var& target) {
  if (prediction.shape() != target.shape()) {
    fail(ErrorKind::ShapeMismatch, "mse_loss " + shape_string(prediction.shape()) + " vs " +
                                       shape_string(target.shape()));
  }
  auto diff = sub(prediction, target);
  return mean(mul(diff, diff));
}

}  // namespace thermo::ad
