// Copyright 2026 The cohdet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// A tape records every operation of one forward pass as a node holding its
// value, its parents and a closure computing the vector-Jacobian product.
// Nodes are appended after their parents, so the recording order is already a
// topological order and backward() is a single reverse sweep.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cohdet/random.hpp"

namespace cohdet::ad {

class ShapeMismatch : public std::invalid_argument {
 public:
  ShapeMismatch(std::string_view op, const std::string& got, const std::string& want)
      : std::invalid_argument(std::string(op) + ": shape mismatch, got " + got + ", want " +
                              want) {}
};

class NotScalarRoot : public std::invalid_argument {
 public:
  explicit NotScalarRoot(const std::string& got)
      : std::invalid_argument("backward: root must be 1x1, got " + got) {}
};

template <typename Scalar>
class BasicTape;

/// Handle to a node of a tape. Cheap to copy; valid while the tape lives and
/// has not been cleared.
template <typename Scalar>
class BasicVar {
 public:
  BasicVar() = default;

  BasicTape<Scalar>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const auto& value() const { return tape_->value(*this); }
  const auto& grad() const { return tape_->grad(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class BasicTape<Scalar>;
  BasicVar(BasicTape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  BasicTape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class BasicTape {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Var = BasicVar<Scalar>;

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  /// Trainable input; receives a gradient on backward().
  Var leaf(Matrix value) { return push(std::move(value), "leaf", {}, true, nullptr); }
  /// Input that never receives a gradient.
  Var constant(Matrix value) { return push(std::move(value), "const", {}, false, nullptr); }

  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  /// Gradient after backward(); zeros when no path reached the node.
  const Matrix& grad(Var v) const {
    const auto& n = nodes_[v.id()];
    if (n.grad.size() == 0) {
      n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    }
    return n.grad;
  }
  std::string_view op(Var v) const { return nodes_[v.id()].op; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse recording order.
  void backward(Var root) {
    const auto& r = nodes_[root.id()];
    if (r.value.rows() != 1 || r.value.cols() != 1) throw NotScalarRoot(shape(r.value));
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[root.id()].grad = Matrix::Ones(1, 1);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
      n.backward(*this, n);
    }
  }

  // -- operations ----------------------------------------------------------

  Var matmul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.rows()) {
      throw ShapeMismatch("matmul", shape(A) + " * " + shape(B),
                          "inner dimensions equal");
    }
    return push(A * B, "matmul", {a.id(), b.id()}, any_grad(a, b), [](BasicTape& t, const Node& n) {
      t.accumulate(n.parents[0], n.grad * t.nodes_[n.parents[1]].value.transpose());
      t.accumulate(n.parents[1], t.nodes_[n.parents[0]].value.transpose() * n.grad);
    });
  }

  /// Elementwise sum; b may also be a 1 x cols row added to every row of a.
  Var add(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (same_shape(A, B)) {
      return push(A + B, "add", {a.id(), b.id()}, any_grad(a, b), [](BasicTape& t, const Node& n) {
        t.accumulate(n.parents[0], n.grad);
        t.accumulate(n.parents[1], n.grad);
      });
    }
    if (B.rows() == 1 && B.cols() == A.cols()) {
      Matrix out = A.rowwise() + B.row(0);
      return push(std::move(out), "add_row", {a.id(), b.id()}, any_grad(a, b),
                  [](BasicTape& t, const Node& n) {
                    t.accumulate(n.parents[0], n.grad);
                    t.accumulate(n.parents[1], n.grad.colwise().sum());
                  });
    }
    throw ShapeMismatch("add", shape(B), shape(A) + " or 1x" + std::to_string(A.cols()));
  }

  Var sub(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require_same("sub", A, B);
    return push(A - B, "sub", {a.id(), b.id()}, any_grad(a, b), [](BasicTape& t, const Node& n) {
      t.accumulate(n.parents[0], n.grad);
      t.accumulate(n.parents[1], -n.grad);
    });
  }

  /// Hadamard product.
  Var mul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require_same("mul", A, B);
    return push(A.cwiseProduct(B), "mul", {a.id(), b.id()}, any_grad(a, b),
                [](BasicTape& t, const Node& n) {
                  t.accumulate(n.parents[0], n.grad.cwiseProduct(t.nodes_[n.parents[1]].value));
                  t.accumulate(n.parents[1], n.grad.cwiseProduct(t.nodes_[n.parents[0]].value));
                });
  }

  Var scale(Var a, Scalar s) {
    return push(value(a) * s, "scale", {a.id()}, any_grad(a), [s](BasicTape& t, const Node& n) {
      t.accumulate(n.parents[0], n.grad * s);
    });
  }

  Var add_scalar(Var a, Scalar c) {
    Matrix out = value(a).array() + c;
    return push(std::move(out), "add_scalar", {a.id()}, any_grad(a),
                [](BasicTape& t, const Node& n) { t.accumulate(n.parents[0], n.grad); });
  }

  /// s * a for a 1x1 variable s.
  Var scale_by(Var s, Var a) {
    const Matrix& S = value(s);
    if (S.rows() != 1 || S.cols() != 1) throw ShapeMismatch("scale_by", shape(S), "1x1");
    return push(value(a) * S(0, 0), "scale_by", {s.id(), a.id()}, any_grad(s, a),
                [](BasicTape& t, const Node& n) {
                  const Matrix& A = t.nodes_[n.parents[1]].value;
                  const Scalar sv = t.nodes_[n.parents[0]].value(0, 0);
                  t.accumulate(n.parents[0], Matrix::Constant(1, 1, n.grad.cwiseProduct(A).sum()));
                  t.accumulate(n.parents[1], n.grad * sv);
                });
  }

  Var transpose(Var a) {
    return push(value(a).transpose(), "transpose", {a.id()}, any_grad(a),
                [](BasicTape& t, const Node& n) {
                  t.accumulate(n.parents[0], n.grad.transpose());
                });
  }

  /// Stacks parts vertically; all parts need the same column count.
  Var concat_rows(std::span<const Var> parts) { return concat(parts, true); }
  /// Joins parts horizontally; all parts need the same row count.
  Var concat_cols(std::span<const Var> parts) { return concat(parts, false); }

  Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
    const Matrix& A = value(a);
    if (start < 0 || count < 0 || start + count > A.rows()) {
      throw ShapeMismatch("slice_rows", "rows [" + std::to_string(start) + "," +
                                            std::to_string(start + count) + ")",
                          "within " + shape(A));
    }
    return push(A.middleRows(start, count), "slice_rows", {a.id()}, any_grad(a),
                [start](BasicTape& t, const Node& n) {
                  const Matrix& P = t.nodes_[n.parents[0]].value;
                  Matrix g = Matrix::Zero(P.rows(), P.cols());
                  g.middleRows(start, n.grad.rows()) = n.grad;
                  t.accumulate(n.parents[0], g);
                });
  }

  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    const Matrix& A = value(a);
    if (start < 0 || count < 0 || start + count > A.cols()) {
      throw ShapeMismatch("slice_cols", "cols [" + std::to_string(start) + "," +
                                            std::to_string(start + count) + ")",
                          "within " + shape(A));
    }
    return push(A.middleCols(start, count), "slice_cols", {a.id()}, any_grad(a),
                [start](BasicTape& t, const Node& n) {
                  const Matrix& P = t.nodes_[n.parents[0]].value;
                  Matrix g = Matrix::Zero(P.rows(), P.cols());
                  g.middleCols(start, n.grad.cols()) = n.grad;
                  t.accumulate(n.parents[0], g);
                });
  }

  /// Column means as a 1 x cols row.
  Var mean_rows(Var a) {
    const Matrix& A = value(a);
    if (A.rows() == 0) throw ShapeMismatch("mean_rows", shape(A), "at least one row");
    return push(A.colwise().mean(), "mean_rows", {a.id()}, any_grad(a),
                [](BasicTape& t, const Node& n) {
                  const auto rows = t.nodes_[n.parents[0]].value.rows();
                  Matrix g = n.grad.replicate(rows, 1) / static_cast<Scalar>(rows);
                  t.accumulate(n.parents[0], g);
                });
  }

  Var sum(Var a) {
    return push(Matrix::Constant(1, 1, value(a).sum()), "sum", {a.id()}, any_grad(a),
                [](BasicTape& t, const Node& n) {
                  const Matrix& P = t.nodes_[n.parents[0]].value;
                  t.accumulate(n.parents[0], Matrix::Constant(P.rows(), P.cols(), n.grad(0, 0)));
                });
  }

  /// Sum of the elementwise product, as 1x1.
  Var dot(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require_same("dot", A, B);
    return push(Matrix::Constant(1, 1, A.cwiseProduct(B).sum()), "dot", {a.id(), b.id()},
                any_grad(a, b), [](BasicTape& t, const Node& n) {
                  const Scalar g = n.grad(0, 0);
                  t.accumulate(n.parents[0], t.nodes_[n.parents[1]].value * g);
                  t.accumulate(n.parents[1], t.nodes_[n.parents[0]].value * g);
                });
  }

  /// Subgradient 0 at exactly 0.
  Var relu(Var a) {
    Matrix out = value(a).cwiseMax(Scalar(0));
    return push(std::move(out), "relu", {a.id()}, any_grad(a), [](BasicTape& t, const Node& n) {
      const Matrix& X = t.nodes_[n.parents[0]].value;
      t.accumulate(n.parents[0], (X.array() > Scalar(0)).select(n.grad, Scalar(0)));
    });
  }

  Var sigmoid(Var a) {
    Matrix out = value(a).unaryExpr([](Scalar x) { return logistic(x); });
    return push(std::move(out), "sigmoid", {a.id()}, any_grad(a), [](BasicTape& t, const Node& n) {
      const auto& y = n.value.array();
      t.accumulate(n.parents[0], (n.grad.array() * y * (Scalar(1) - y)).matrix());
    });
  }

  Var tanh(Var a) {
    Matrix out = value(a).array().tanh();
    return push(std::move(out), "tanh", {a.id()}, any_grad(a), [](BasicTape& t, const Node& n) {
      const auto& y = n.value.array();
      t.accumulate(n.parents[0], (n.grad.array() * (Scalar(1) - y * y)).matrix());
    });
  }

  Var exp(Var a) {
    Matrix out = value(a).array().exp();
    return push(std::move(out), "exp", {a.id()}, any_grad(a), [](BasicTape& t, const Node& n) {
      t.accumulate(n.parents[0], n.grad.cwiseProduct(n.value));
    });
  }

  Var log(Var a) {
    Matrix out = value(a).array().log();
    return push(std::move(out), "log", {a.id()}, any_grad(a), [](BasicTape& t, const Node& n) {
      t.accumulate(n.parents[0], n.grad.cwiseQuotient(t.nodes_[n.parents[0]].value));
    });
  }

  Var reciprocal(Var a) {
    Matrix out = value(a).cwiseInverse();
    return push(std::move(out), "reciprocal", {a.id()}, any_grad(a),
                [](BasicTape& t, const Node& n) {
                  t.accumulate(n.parents[0], -n.grad.cwiseProduct(n.value.cwiseAbs2()));
                });
  }

  /// Clamps into [lo, hi]; the gradient is zero where clamping was active.
  Var clamp(Var a, Scalar lo, Scalar hi) {
    Matrix out = value(a).cwiseMax(lo).cwiseMin(hi);
    return push(std::move(out), "clamp", {a.id()}, any_grad(a),
                [lo, hi](BasicTape& t, const Node& n) {
                  const auto& X = t.nodes_[n.parents[0]].value.array();
                  t.accumulate(n.parents[0], ((X > lo) && (X < hi)).select(n.grad, Scalar(0)));
                });
  }

  /// Row-wise softmax, shifted by the row maximum before exponentiating.
  Var softmax_rows(Var a) {
    const Matrix& A = value(a);
    Matrix out = (A.colwise() - A.rowwise().maxCoeff()).array().exp();
    out = out.array().colwise() / out.rowwise().sum().array();
    return push(std::move(out), "softmax_rows", {a.id()}, any_grad(a),
                [](BasicTape& t, const Node& n) {
                  const Matrix& Y = n.value;
                  const auto inner = n.grad.cwiseProduct(Y).rowwise().sum();
                  Matrix g = Y.cwiseProduct(n.grad - inner.replicate(1, Y.cols()));
                  t.accumulate(n.parents[0], g);
                });
  }

  /// x / sqrt(|x|^2 + eps) per row; eps keeps zero rows at zero.
  Var l2_normalize_rows(Var a, Scalar eps = Scalar(1e-12)) {
    const Matrix& X = value(a);
    Matrix norms = (X.rowwise().squaredNorm().array() + eps).sqrt();
    Matrix out = X.array().colwise() / norms.col(0).array();
    return push(std::move(out), "l2_normalize_rows", {a.id()}, any_grad(a),
                [norms = std::move(norms)](BasicTape& t, const Node& n) {
                  const Matrix& Xp = t.nodes_[n.parents[0]].value;
                  const auto gx = n.grad.cwiseProduct(Xp).rowwise().sum();
                  Matrix g = n.grad.array().colwise() / norms.col(0).array();
                  g -= (Xp.array().colwise() *
                        (gx.array() / norms.col(0).array().cube()))
                           .matrix();
                  t.accumulate(n.parents[0], g);
                });
  }

  static std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Node;
  using Backward = std::function<void(BasicTape&, const Node&)>;

  struct Node {
    Matrix value;
    mutable Matrix grad;
    std::string_view op;
    std::array<std::size_t, 2> parents{kNone, kNone};
    std::vector<std::size_t> extra_parents;  // concat inputs
    bool requires_grad = false;
    Backward backward;
  };

  static Scalar logistic(Scalar x) {
    if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  }

  static bool same_shape(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
  }

  static void require_same(std::string_view op, const Matrix& a, const Matrix& b) {
    if (!same_shape(a, b)) throw ShapeMismatch(op, shape(b), shape(a));
  }

  bool any_grad(Var a) const { return nodes_[a.id()].requires_grad; }
  bool any_grad(Var a, Var b) const { return any_grad(a) || any_grad(b); }

  Var push(Matrix value, std::string_view op, std::initializer_list<std::size_t> parents,
           bool requires_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.op = op;
    std::size_t i = 0;
    for (auto p : parents) n.parents[i++] = p;
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  void accumulate(std::size_t id, const Matrix& g) {
    auto& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  Var concat(std::span<const Var> parts, bool vertical) {
    const std::string_view op = vertical ? "concat_rows" : "concat_cols";
    if (parts.empty()) throw ShapeMismatch(op, "no parts", "at least one part");
    const Matrix& first = value(parts[0]);
    Eigen::Index total = 0;
    bool grad = false;
    for (const auto& p : parts) {
      const Matrix& m = value(p);
      if (vertical ? m.cols() != first.cols() : m.rows() != first.rows()) {
        throw ShapeMismatch(op, shape(m), vertical ? "?x" + std::to_string(first.cols())
                                                   : std::to_string(first.rows()) + "x?");
      }
      total += vertical ? m.rows() : m.cols();
      grad = grad || any_grad(p);
    }
    Matrix out = vertical ? Matrix(total, first.cols()) : Matrix(first.rows(), total);
    Eigen::Index offset = 0;
    std::vector<std::size_t> ids;
    for (const auto& p : parts) {
      const Matrix& m = value(p);
      if (vertical) {
        out.middleRows(offset, m.rows()) = m;
        offset += m.rows();
      } else {
        out.middleCols(offset, m.cols()) = m;
        offset += m.cols();
      }
      ids.push_back(p.id());
    }
    Var v = push(std::move(out), op, {}, grad, [vertical](BasicTape& t, const Node& n) {
      Eigen::Index off = 0;
      for (auto id : n.extra_parents) {
        const Matrix& m = t.nodes_[id].value;
        if (vertical) {
          t.accumulate(id, n.grad.middleRows(off, m.rows()));
          off += m.rows();
        } else {
          t.accumulate(id, n.grad.middleCols(off, m.cols()));
          off += m.cols();
        }
      }
    });
    nodes_[v.id()].extra_parents = std::move(ids);
    return v;
  }

  std::vector<Node> nodes_;
};

using Tape = BasicTape<double>;
using Var = BasicVar<double>;

// Expression-style free functions forwarding to the owning tape.

template <typename S> BasicVar<S> matmul(BasicVar<S> a, BasicVar<S> b) { return a.tape()->matmul(a, b); }
template <typename S> BasicVar<S> operator+(BasicVar<S> a, BasicVar<S> b) { return a.tape()->add(a, b); }
template <typename S> BasicVar<S> operator-(BasicVar<S> a, BasicVar<S> b) { return a.tape()->sub(a, b); }
template <typename S> BasicVar<S> operator*(S s, BasicVar<S> a) { return a.tape()->scale(a, s); }
template <typename S> BasicVar<S> operator*(BasicVar<S> a, S s) { return a.tape()->scale(a, s); }
template <typename S> BasicVar<S> cwise_product(BasicVar<S> a, BasicVar<S> b) { return a.tape()->mul(a, b); }
template <typename S> BasicVar<S> transpose(BasicVar<S> a) { return a.tape()->transpose(a); }
template <typename S> BasicVar<S> relu(BasicVar<S> a) { return a.tape()->relu(a); }
template <typename S> BasicVar<S> sigmoid(BasicVar<S> a) { return a.tape()->sigmoid(a); }
template <typename S> BasicVar<S> tanh(BasicVar<S> a) { return a.tape()->tanh(a); }
template <typename S> BasicVar<S> exp(BasicVar<S> a) { return a.tape()->exp(a); }
template <typename S> BasicVar<S> log(BasicVar<S> a) { return a.tape()->log(a); }
template <typename S> BasicVar<S> sum(BasicVar<S> a) { return a.tape()->sum(a); }
template <typename S> BasicVar<S> softmax_rows(BasicVar<S> a) { return a.tape()->softmax_rows(a); }
template <typename S> BasicVar<S> l2_normalize_rows(BasicVar<S> a) { return a.tape()->l2_normalize_rows(a); }

// -- finite differences -----------------------------------------------------

struct FdOptions {
  double epsilon = 1e-5;
  std::size_t coords_per_tensor = 32;  // every coordinate when the tensor is smaller
  std::uint64_t seed = 0;
  // Denominator floor of the relative error, so that gradients that are zero
  // up to rounding do not blow up the ratio.
  double abs_floor = 1e-6;
  // A coordinate is a kink when the second difference exceeds
  // kink_ratio * epsilon * (1 + |central difference|).
  double kink_ratio = 1e-2;
};

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t probed = 0;
  std::size_t skipped = 0;  // kinks
  std::size_t worst_tensor = 0;
  Eigen::Index worst_index = 0;
};

/// Compares analytic gradients with central differences of `f`, which must
/// read the current contents of `params`. Each probed coordinate is restored
/// before the next probe.
template <typename Scalar>
FdReport finite_difference_check(
    const std::function<Scalar()>& f,
    std::span<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>* const> params,
    std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> analytic,
    const FdOptions& options = {}) {
  if (params.size() != analytic.size()) {
    throw std::invalid_argument("finite_difference_check: params/gradient count differ");
  }
  Rng rng = make_rng(options.seed);
  FdReport report;
  const Scalar eps = static_cast<Scalar>(options.epsilon);
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = *params[t];
    const auto& g = analytic[t];
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw ShapeMismatch("finite_difference_check", BasicTape<Scalar>::shape(g),
                          BasicTape<Scalar>::shape(p));
    }
    const auto n = static_cast<std::size_t>(p.size());
    const auto coords = n <= options.coords_per_tensor
                            ? sample_without_replacement(rng, n, n)
                            : sample_without_replacement(rng, n, options.coords_per_tensor);
    const Scalar f0 = f();
    for (std::size_t c : coords) {
      const auto idx = static_cast<Eigen::Index>(c);
      Scalar& x = p.data()[idx];
      const Scalar saved = x;
      x = saved + eps;
      const Scalar f_plus = f();
      x = saved - eps;
      const Scalar f_minus = f();
      x = saved;
      const double numeric = static_cast<double>((f_plus - f_minus) / (2 * eps));
      const double second = std::abs(static_cast<double>(f_plus - 2 * f0 + f_minus));
      if (second > options.kink_ratio * options.epsilon * (1.0 + std::abs(numeric))) {
        ++report.skipped;
        continue;
      }
      const double a = static_cast<double>(g.data()[idx]);
      const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.probed;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = t;
        report.worst_index = idx;
      }
    }
  }
  return report;
}

}  // namespace cohdet::ad
