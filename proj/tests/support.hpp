#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermo/autodiff.hpp"
#include "thermo/errors.hpp"
#include "thermo/matrix.hpp"
#include "thermo/rng.hpp"

namespace thermo::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline ad::Tensor random_tensor(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  ad::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Kind of the thermo::Error thrown by `f`, nullopt when it returns normally.
inline std::optional<ErrorKind> error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("thermo_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

using Leaves = std::map<std::string, ad::Var>;
using LossFn = std::function<ad::Var(ad::Tape&, const Leaves&)>;

struct GradCheck {
  double worst = 0.0;  // largest |ad - fd| / max(abs_tol, rel_tol * |fd|); passing means <= 1
  std::string where;
  std::size_t checked = 0;

  bool ok() const { return worst <= 1.0; }
};

/// Central finite differences on every entry of every tensor in `params`
/// against one reverse pass.
inline GradCheck gradient_check(std::map<std::string, ad::Tensor> params, const LossFn& loss, double eps = 1e-5,
                                double abs_tol = 1e-5, double rel_tol = 1e-3) {
  auto evaluate = [&](const std::map<std::string, ad::Tensor>& p, std::map<std::string, ad::Tensor>* grads) {
    ad::Tape tape;
    Leaves leaves;
    for (const auto& [name, t] : p) leaves.emplace(name, tape.parameter(t));
    const ad::Var out = loss(tape, leaves);
    if (grads) {
      tape.backward(out);
      for (const auto& [name, v] : leaves) {
        (*grads)[name] = v.grad().empty() ? ad::Tensor(v.shape()) : v.grad();
      }
    }
    return out.value().item();
  };

  std::map<std::string, ad::Tensor> analytic;
  evaluate(params, &analytic);
  GradCheck report;
  for (auto& [name, tensor] : params) {
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + eps;
      const double up = evaluate(params, nullptr);
      tensor[i] = saved - eps;
      const double down = evaluate(params, nullptr);
      tensor[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double excess = std::abs(analytic[name][i] - fd) / std::max(abs_tol, rel_tol * std::abs(fd));
      ++report.checked;
      if (excess > report.worst) {
        report.worst = excess;
        report.where = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace thermo::testing
