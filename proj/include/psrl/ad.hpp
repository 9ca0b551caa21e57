#pragma once

// Reverse-mode differentiation on a tape of dense Eigen matrices.
// Values are computed eagerly; each op pushes a node holding its result and
// a closure that routes gradients to its parents. backward() does one
// reverse sweep and accumulates into bound ParamT buffers.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "psrl/check.hpp"

namespace psrl::ad {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

// Trainable dense array plus its accumulated gradient.
template <typename S>
struct ParamT {
  std::string name;
  MatX<S> value;
  MatX<S> grad;

  ParamT() = default;
  ParamT(std::string n, MatX<S> v) : name(std::move(n)), value(std::move(v)) {
    grad = MatX<S>::Zero(value.rows(), value.cols());
  }

  void zero_grad() { grad.setZero(); }
  Index size() const { return value.size(); }
};

template <typename S>
class TapeT;

// Handle to a tape node.
template <typename S>
struct VarT {
  TapeT<S>* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const MatX<S>& val() const;
  Index rows() const { return val().rows(); }
  Index cols() const { return val().cols(); }
  S scalar() const;
};

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

template <typename S>
class TapeT {
 public:
  using Backprop = std::function<void(TapeT&, int)>;

  struct Node {
    MatX<S> value;
    MatX<S> grad;  // empty until the backward sweep reaches this node
    bool needs_grad = false;
    ParamT<S>* bound = nullptr;
    Backprop backprop;  // null for leaves
  };

  VarT<S> constant(MatX<S> v) { return push(std::move(v), false, nullptr, nullptr); }

  VarT<S> param(ParamT<S>& p) { return push(p.value, true, &p, nullptr); }

  VarT<S> make(MatX<S> v, bool needs_grad, Backprop fn) {
    return push(std::move(v), needs_grad, nullptr, std::move(fn));
  }

  const MatX<S>& val(int id) const { return nodes_[id].value; }
  const MatX<S>& grad(int id) const { return nodes_[id].grad; }
  bool needs(int id) const { return nodes_[id].needs_grad; }

  // Gradient accumulation helpers; no-ops when the target cannot affect
  // any parameter.
  template <typename Expr>
  void accum(int id, const Expr& e) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    ensure_grad(n);
    if constexpr (std::is_base_of_v<Eigen::ArrayBase<Expr>, Expr>) {
      n.grad.array() += e;
    } else {
      n.grad += e;
    }
  }

  template <typename Expr>
  void accum_block(int id, Index r0, Index c0, Index nr, Index nc, const Expr& e) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    ensure_grad(n);
    n.grad.block(r0, c0, nr, nc) += e;
  }

  void backward(VarT<S> loss) {
    PSRL_CHECK(loss.valid() && loss.tape == this, "backward: loss not on this tape");
    PSRL_CHECK(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be scalar");
    if (!std::isfinite(static_cast<double>(loss.scalar()))) {
      throw NonFiniteLoss("backward: loss is not finite");
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[loss.id].grad = MatX<S>::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.grad.size() == 0 || !n.backprop) continue;
      n.backprop(*this, i);
    }
    for (int i = 0; i <= loss.id; ++i) {
      Node& n = nodes_[i];
      if (n.bound != nullptr && n.grad.size() != 0) n.bound->grad += n.grad;
    }
  }

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

 private:
  void ensure_grad(Node& n) {
    if (n.grad.size() == 0) n.grad = MatX<S>::Zero(n.value.rows(), n.value.cols());
  }

  VarT<S> push(MatX<S> v, bool needs_grad, ParamT<S>* bound, Backprop fn) {
    Node n;
    n.value = std::move(v);
    n.needs_grad = needs_grad;
    n.bound = bound;
    n.backprop = std::move(fn);
    nodes_.push_back(std::move(n));
    return VarT<S>{this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
};

template <typename S>
const MatX<S>& VarT<S>::val() const {
  return tape->val(id);
}

template <typename S>
S VarT<S>::scalar() const {
  const MatX<S>& v = val();
  PSRL_CHECK(v.size() == 1, "scalar() on non-scalar var");
  return v(0, 0);
}

namespace detail {
template <typename S>
TapeT<S>& same_tape(VarT<S> a, VarT<S> b) {
  PSRL_CHECK(a.valid() && b.valid() && a.tape == b.tape, "vars on different tapes");
  return *a.tape;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise / linear ops

template <typename S>
VarT<S> matmul(VarT<S> a, VarT<S> b) {
  auto& t = detail::same_tape(a, b);
  PSRL_CHECK(a.cols() == b.rows(), "matmul: inner dims " << a.cols() << " vs " << b.rows());
  MatX<S> v = a.val() * b.val();
  int pa = a.id, pb = b.id;
  return t.make(std::move(v), t.needs(pa) || t.needs(pb), [pa, pb](TapeT<S>& t, int self) {
    const MatX<S>& g = t.grad(self);
    if (t.needs(pa)) t.accum(pa, g * t.val(pb).transpose());
    if (t.needs(pb)) t.accum(pb, t.val(pa).transpose() * g);
  });
}

template <typename S>
VarT<S> add(VarT<S> a, VarT<S> b) {
  auto& t = detail::same_tape(a, b);
  PSRL_CHECK(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  MatX<S> v = a.val() + b.val();
  int pa = a.id, pb = b.id;
  return t.make(std::move(v), t.needs(pa) || t.needs(pb), [pa, pb](TapeT<S>& t, int self) {
    t.accum(pa, t.grad(self));
    t.accum(pb, t.grad(self));
  });
}

template <typename S>
VarT<S> sub(VarT<S> a, VarT<S> b) {
  auto& t = detail::same_tape(a, b);
  PSRL_CHECK(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  MatX<S> v = a.val() - b.val();
  int pa = a.id, pb = b.id;
  return t.make(std::move(v), t.needs(pa) || t.needs(pb), [pa, pb](TapeT<S>& t, int self) {
    t.accum(pa, t.grad(self));
    t.accum(pb, -t.grad(self));
  });
}

template <typename S>
VarT<S> cwise_mul(VarT<S> a, VarT<S> b) {
  auto& t = detail::same_tape(a, b);
  PSRL_CHECK(a.rows() == b.rows() && a.cols() == b.cols(), "cwise_mul: shape mismatch");
  MatX<S> v = a.val().cwiseProduct(b.val());
  int pa = a.id, pb = b.id;
  return t.make(std::move(v), t.needs(pa) || t.needs(pb), [pa, pb](TapeT<S>& t, int self) {
    const MatX<S>& g = t.grad(self);
    if (t.needs(pa)) t.accum(pa, g.cwiseProduct(t.val(pb)));
    if (t.needs(pb)) t.accum(pb, g.cwiseProduct(t.val(pa)));
  });
}

template <typename S>
VarT<S> scale(VarT<S> a, S s) {
  auto& t = *a.tape;
  MatX<S> v = a.val() * s;
  int pa = a.id;
  return t.make(std::move(v), t.needs(pa), [pa, s](TapeT<S>& t, int self) {
    t.accum(pa, t.grad(self) * s);
  });
}

template <typename S>
VarT<S> sub_const(VarT<S> a, const MatX<S>& c) {
  auto& t = *a.tape;
  PSRL_CHECK(a.rows() == c.rows() && a.cols() == c.cols(), "sub_const: shape mismatch");
  MatX<S> v = a.val() - c;
  int pa = a.id;
  return t.make(std::move(v), t.needs(pa), [pa](TapeT<S>& t, int self) {
    t.accum(pa, t.grad(self));
  });
}

// Adds a column vector to every column.
template <typename S>
VarT<S> add_bias(VarT<S> a, VarT<S> bias) {
  auto& t = detail::same_tape(a, bias);
  PSRL_CHECK(bias.cols() == 1 && bias.rows() == a.rows(), "add_bias: bad bias shape");
  MatX<S> v = a.val().colwise() + Eigen::Matrix<S, Eigen::Dynamic, 1>(bias.val().col(0));
  int pa = a.id, pb = bias.id;
  return t.make(std::move(v), t.needs(pa) || t.needs(pb), [pa, pb](TapeT<S>& t, int self) {
    const MatX<S>& g = t.grad(self);
    t.accum(pa, g);
    if (t.needs(pb)) t.accum(pb, g.rowwise().sum());
  });
}

template <typename S>
VarT<S> tanh(VarT<S> a) {
  auto& t = *a.tape;
  MatX<S> v = a.val().array().tanh().matrix();
  int pa = a.id;
  return t.make(std::move(v), t.needs(pa), [pa](TapeT<S>& t, int self) {
    const MatX<S>& y = t.val(self);
    t.accum(pa, t.grad(self).array() * (S(1) - y.array().square()));
  });
}

template <typename S>
VarT<S> sigmoid(VarT<S> a) {
  auto& t = *a.tape;
  MatX<S> v = ((a.val().array() * S(0.5)).tanh() * S(0.5) + S(0.5)).matrix();
  int pa = a.id;
  return t.make(std::move(v), t.needs(pa), [pa](TapeT<S>& t, int self) {
    const MatX<S>& y = t.val(self);
    t.accum(pa, t.grad(self).array() * y.array() * (S(1) - y.array()));
  });
}

template <typename S>
VarT<S> gelu(VarT<S> a) {
  auto& t = *a.tape;
  const S c = S(std::sqrt(2.0 / M_PI));
  auto x = a.val().array();
  MatX<S> v = (S(0.5) * x * (S(1) + (c * (x + S(0.044715) * x.cube())).tanh())).matrix();
  int pa = a.id;
  return t.make(std::move(v), t.needs(pa), [pa, c](TapeT<S>& t, int self) {
    auto x = t.val(pa).array();
    auto u = c * (x + S(0.044715) * x.cube());
    auto th = u.tanh();
    auto sech2 = S(1) - th.square();
    auto dydx = S(0.5) * (S(1) + th) + S(0.5) * x * sech2 * c * (S(1) + S(0.134145) * x.square());
    t.accum(pa, t.grad(self).array() * dydx);
  });
}

// Softmax over each column.
template <typename S>
VarT<S> softmax_cols(VarT<S> a) {
  auto& t = *a.tape;
  MatX<S> v = a.val();
  for (Index j = 0; j < v.cols(); ++j) {
    auto col = v.col(j).array();
    col -= col.maxCoeff();
    col = col.exp();
    col /= col.sum();
  }
  int pa = a.id;
  return t.make(std::move(v), t.needs(pa), [pa](TapeT<S>& t, int self) {
    const MatX<S>& p = t.val(self);
    const MatX<S>& g = t.grad(self);
    Eigen::Array<S, 1, Eigen::Dynamic> dots = (p.array() * g.array()).colwise().sum();
    t.accum(pa, (p.array() * (g.array().rowwise() - dots)).matrix());
  });
}

template <typename S>
VarT<S> log_softmax_cols(VarT<S> a) {
  auto& t = *a.tape;
  MatX<S> v = a.val();
  for (Index j = 0; j < v.cols(); ++j) {
    auto col = v.col(j).array();
    S m = col.maxCoeff();
    S lse = std::log((col - m).exp().sum()) + m;
    col -= lse;
  }
  int pa = a.id;
  return t.make(std::move(v), t.needs(pa), [pa](TapeT<S>& t, int self) {
    const MatX<S>& lp = t.val(self);
    const MatX<S>& g = t.grad(self);
    Eigen::Array<S, 1, Eigen::Dynamic> gsum = g.array().colwise().sum();
    t.accum(pa, (g.array() - lp.array().exp().rowwise() * gsum).matrix());
  });
}

// Per-column cross entropy against integer targets; result is 1 x N.
template <typename S>
VarT<S> cross_entropy_cols(VarT<S> logits, std::vector<int> targets) {
  auto& t = *logits.tape;
  const MatX<S>& x = logits.val();
  PSRL_CHECK(static_cast<Index>(targets.size()) == x.cols(), "cross_entropy: target count");
  auto probs = std::make_shared<MatX<S>>(x);
  MatX<S> loss(1, x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    PSRL_CHECK(targets[j] >= 0 && targets[j] < x.rows(), "cross_entropy: target out of range");
    auto col = probs->col(j).array();
    S m = col.maxCoeff();
    S lse = std::log((col - m).exp().sum()) + m;
    loss(0, j) = lse - x(targets[j], j);
    col = (col - lse).exp();
  }
  int pa = logits.id;
  return t.make(std::move(loss), t.needs(pa),
                [pa, probs, targets = std::move(targets)](TapeT<S>& t, int self) {
                  if (!t.needs(pa)) return;
                  const MatX<S>& g = t.grad(self);
                  MatX<S> dx = *probs;
                  for (Index j = 0; j < dx.cols(); ++j) {
                    dx(targets[j], j) -= S(1);
                    dx.col(j) *= g(0, j);
                  }
                  t.accum(pa, dx);
                });
}

// ---------------------------------------------------------------------------
// Shape / gather ops

template <typename S>
VarT<S> rows(VarT<S> a, Index r0, Index n) {
  auto& t = *a.tape;
  PSRL_CHECK(r0 >= 0 && r0 + n <= a.rows(), "rows: out of range");
  MatX<S> v = a.val().middleRows(r0, n);
  int pa = a.id;
  Index cols = a.cols();
  return t.make(std::move(v), t.needs(pa), [pa, r0, n, cols](TapeT<S>& t, int self) {
    t.accum_block(pa, r0, 0, n, cols, t.grad(self));
  });
}

template <typename S>
VarT<S> vconcat(const std::vector<VarT<S>>& parts) {
  PSRL_CHECK(!parts.empty(), "vconcat: empty");
  auto& t = *parts[0].tape;
  Index cols = parts[0].cols();
  Index total = 0;
  bool needs = false;
  for (auto& p : parts) {
    PSRL_CHECK(p.cols() == cols, "vconcat: column mismatch");
    total += p.rows();
    needs = needs || t.needs(p.id);
  }
  MatX<S> v(total, cols);
  std::vector<int> ids;
  std::vector<Index> sizes;
  Index r = 0;
  for (auto& p : parts) {
    v.middleRows(r, p.rows()) = p.val();
    ids.push_back(p.id);
    sizes.push_back(p.rows());
    r += p.rows();
  }
  return t.make(std::move(v), needs,
                [ids = std::move(ids), sizes = std::move(sizes), cols](TapeT<S>& t, int self) {
                  const MatX<S>& g = t.grad(self);
                  Index r = 0;
                  for (size_t i = 0; i < ids.size(); ++i) {
                    t.accum(ids[i], g.middleRows(r, sizes[i]));
                    r += sizes[i];
                  }
                  (void)cols;
                });
}

// Gathers columns (also serves as embedding lookup on a (dim x vocab) table).
template <typename S>
VarT<S> select_cols(VarT<S> a, std::vector<int> idx) {
  auto& t = *a.tape;
  const MatX<S>& src = a.val();
  MatX<S> v(src.rows(), static_cast<Index>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) {
    PSRL_CHECK(idx[j] >= 0 && idx[j] < src.cols(), "select_cols: index out of range");
    v.col(static_cast<Index>(j)) = src.col(idx[j]);
  }
  int pa = a.id;
  Index rows_n = src.rows(), cols_n = src.cols();
  return t.make(std::move(v), t.needs(pa),
                [pa, idx = std::move(idx), rows_n, cols_n](TapeT<S>& t, int self) {
                  if (!t.needs(pa)) return;
                  const MatX<S>& g = t.grad(self);
                  MatX<S> dx = MatX<S>::Zero(rows_n, cols_n);
                  for (size_t j = 0; j < idx.size(); ++j) {
                    dx.col(idx[j]) += g.col(static_cast<Index>(j));
                  }
                  t.accum(pa, dx);
                });
}

// Picks a( rows[j], j ) per column; result is 1 x N.
template <typename S>
VarT<S> gather_rows_per_col(VarT<S> a, std::vector<int> row_idx) {
  auto& t = *a.tape;
  const MatX<S>& src = a.val();
  PSRL_CHECK(static_cast<Index>(row_idx.size()) == src.cols(), "gather_rows_per_col: count");
  MatX<S> v(1, src.cols());
  for (Index j = 0; j < src.cols(); ++j) {
    PSRL_CHECK(row_idx[j] >= 0 && row_idx[j] < src.rows(), "gather_rows_per_col: row index");
    v(0, j) = src(row_idx[j], j);
  }
  int pa = a.id;
  Index rows_n = src.rows(), cols_n = src.cols();
  return t.make(std::move(v), t.needs(pa),
                [pa, row_idx = std::move(row_idx), rows_n, cols_n](TapeT<S>& t, int self) {
                  if (!t.needs(pa)) return;
                  const MatX<S>& g = t.grad(self);
                  MatX<S> dx = MatX<S>::Zero(rows_n, cols_n);
                  for (Index j = 0; j < cols_n; ++j) dx(row_idx[j], j) = g(0, j);
                  t.accum(pa, dx);
                });
}

template <typename S>
VarT<S> colsum(VarT<S> a) {
  auto& t = *a.tape;
  MatX<S> v = a.val().colwise().sum();
  int pa = a.id;
  Index rows_n = a.rows();
  return t.make(std::move(v), t.needs(pa), [pa, rows_n](TapeT<S>& t, int self) {
    t.accum(pa, t.grad(self).replicate(rows_n, 1));
  });
}

template <typename S>
VarT<S> sum_all(VarT<S> a) {
  auto& t = *a.tape;
  MatX<S> v(1, 1);
  v(0, 0) = a.val().sum();
  int pa = a.id;
  Index rows_n = a.rows(), cols_n = a.cols();
  return t.make(std::move(v), t.needs(pa), [pa, rows_n, cols_n](TapeT<S>& t, int self) {
    t.accum(pa, MatX<S>::Constant(rows_n, cols_n, t.grad(self)(0, 0)));
  });
}

// sum(W .* a) for a constant weight matrix; the workhorse for masked means.
template <typename S>
VarT<S> dot_const(VarT<S> a, const MatX<S>& w) {
  auto& t = *a.tape;
  PSRL_CHECK(a.rows() == w.rows() && a.cols() == w.cols(), "dot_const: shape mismatch");
  MatX<S> v(1, 1);
  v(0, 0) = a.val().cwiseProduct(w).sum();
  int pa = a.id;
  auto wp = std::make_shared<MatX<S>>(w);
  return t.make(std::move(v), t.needs(pa), [pa, wp](TapeT<S>& t, int self) {
    t.accum(pa, *wp * t.grad(self)(0, 0));
  });
}

template <typename S>
VarT<S> mean_all(VarT<S> a) {
  return scale(sum_all(a), S(1) / S(a.rows() * a.cols()));
}

template <typename S>
VarT<S> squared_diff_const(VarT<S> a, const MatX<S>& target) {
  auto& t = *a.tape;
  PSRL_CHECK(a.rows() == target.rows() && a.cols() == target.cols(), "squared_diff: shape");
  MatX<S> v = (a.val() - target).array().square().matrix();
  int pa = a.id;
  auto tp = std::make_shared<MatX<S>>(target);
  return t.make(std::move(v), t.needs(pa), [pa, tp](TapeT<S>& t, int self) {
    t.accum(pa, (S(2) * (t.val(pa) - *tp)).cwiseProduct(t.grad(self)));
  });
}

// Value passes through; nothing propagates upstream.
template <typename S>
VarT<S> stop_gradient(VarT<S> a) {
  return a.tape->constant(a.val());
}

// ---------------------------------------------------------------------------
// Sequence ops. Token matrices are laid out episode-major: column b*T + t.

// Adds pos.col(t) to every token at in-episode offset t.
template <typename S>
VarT<S> add_positional(VarT<S> x, VarT<S> pos, Index B, Index T) {
  auto& t = detail::same_tape(x, pos);
  PSRL_CHECK(x.cols() == B * T, "add_positional: layout mismatch");
  PSRL_CHECK(pos.rows() == x.rows() && pos.cols() >= T, "add_positional: pos too short");
  MatX<S> v = x.val();
  for (Index b = 0; b < B; ++b) v.middleCols(b * T, T) += pos.val().leftCols(T);
  int px = x.id, pp = pos.id;
  Index E = x.rows();
  return t.make(std::move(v), t.needs(px) || t.needs(pp),
                [px, pp, B, T, E](TapeT<S>& t, int self) {
                  const MatX<S>& g = t.grad(self);
                  t.accum(px, g);
                  if (t.needs(pp)) {
                    MatX<S> dp = MatX<S>::Zero(E, T);
                    for (Index b = 0; b < B; ++b) dp += g.middleCols(b * T, T);
                    t.accum_block(pp, 0, 0, E, T, dp);
                  }
                });
}

// Per-column layer norm with learned gain/bias (both dim x 1).
template <typename S>
VarT<S> layer_norm_cols(VarT<S> x, VarT<S> gain, VarT<S> bias) {
  auto& t = detail::same_tape(x, gain);
  PSRL_CHECK(gain.rows() == x.rows() && gain.cols() == 1, "layer_norm: gain shape");
  PSRL_CHECK(bias.rows() == x.rows() && bias.cols() == 1, "layer_norm: bias shape");
  const S eps = S(1e-5);
  const MatX<S>& xv = x.val();
  Index E = xv.rows(), N = xv.cols();
  auto xhat = std::make_shared<MatX<S>>(E, N);
  auto rstd = std::make_shared<MatX<S>>(1, N);
  MatX<S> v(E, N);
  for (Index j = 0; j < N; ++j) {
    S mu = xv.col(j).mean();
    S var = (xv.col(j).array() - mu).square().mean();
    S r = S(1) / std::sqrt(var + eps);
    (*rstd)(0, j) = r;
    xhat->col(j) = (xv.col(j).array() - mu) * r;
    v.col(j) = xhat->col(j).cwiseProduct(gain.val().col(0)) + bias.val().col(0);
  }
  int px = x.id, pg = gain.id, pb = bias.id;
  return t.make(std::move(v), t.needs(px) || t.needs(pg) || t.needs(pb),
                [px, pg, pb, xhat, rstd](TapeT<S>& t, int self) {
                  const MatX<S>& g = t.grad(self);
                  if (t.needs(pg)) t.accum(pg, g.cwiseProduct(*xhat).rowwise().sum());
                  if (t.needs(pb)) t.accum(pb, g.rowwise().sum());
                  if (t.needs(px)) {
                    const auto& gainv = t.val(pg);
                    MatX<S> dx(g.rows(), g.cols());
                    for (Index j = 0; j < g.cols(); ++j) {
                      Eigen::Array<S, Eigen::Dynamic, 1> dxh =
                          g.col(j).cwiseProduct(gainv.col(0)).array();
                      S m1 = dxh.mean();
                      S m2 = (dxh * xhat->col(j).array()).mean();
                      dx.col(j) =
                          ((dxh - m1 - xhat->col(j).array() * m2) * (*rstd)(0, j)).matrix();
                    }
                    t.accum(px, dx);
                  }
                });
}

// Single-layer GRU over a batch of sequences; gate order in the stacked
// weights is [reset; update; candidate]. The candidate path applies the
// reset gate to the hidden contribution: n = tanh(Wn x + b_n + r .* (Un h)).
template <typename S>
struct GruSaved {
  MatX<S> r, z, n, hn, hprev;  // each hid x (B*T)
};

template <typename S>
VarT<S> gru_sequence(VarT<S> x, VarT<S> h0, VarT<S> w_ih, VarT<S> w_hh, VarT<S> b, Index B,
                     Index T) {
  auto& t = detail::same_tape(x, w_ih);
  Index E = x.rows();
  Index hid = w_hh.cols();
  PSRL_CHECK(x.cols() == B * T, "gru: layout mismatch");
  PSRL_CHECK(w_ih.rows() == 3 * hid && w_ih.cols() == E, "gru: w_ih shape");
  PSRL_CHECK(w_hh.rows() == 3 * hid, "gru: w_hh shape");
  PSRL_CHECK(b.rows() == 3 * hid && b.cols() == 1, "gru: bias shape");
  bool has_h0 = h0.valid();
  if (has_h0) {
    PSRL_CHECK(h0.rows() == hid && h0.cols() == B, "gru: h0 shape");
  }

  // Input contributions for all timesteps in one product.
  MatX<S> xg = (w_ih.val() * x.val()).colwise() +
               Eigen::Matrix<S, Eigen::Dynamic, 1>(b.val().col(0));
  auto saved = std::make_shared<GruSaved<S>>();
  saved->r.resize(hid, B * T);
  saved->z.resize(hid, B * T);
  saved->n.resize(hid, B * T);
  saved->hn.resize(hid, B * T);
  saved->hprev.resize(hid, B * T);

  MatX<S> out(hid, B * T);
  MatX<S> hp(hid, B);
  if (has_h0) {
    hp = h0.val();
  } else {
    hp.setZero();
  }
  MatX<S> hp0 = hp;  // initial hidden per episode
  for (Index bi = 0; bi < B; ++bi) hp.col(bi) = hp0.col(bi);
  for (Index ti = 0; ti < T; ++ti) {
    // gather per-episode columns for this step
    MatX<S> xg_t(3 * hid, B);
    for (Index bi = 0; bi < B; ++bi) xg_t.col(bi) = xg.col(bi * T + ti);
    if (ti > 0) {
      for (Index bi = 0; bi < B; ++bi) hp.col(bi) = out.col(bi * T + ti - 1);
    }
    MatX<S> hg = w_hh.val() * hp;  // 3h x B
    MatX<S> r = ((xg_t.topRows(hid) + hg.topRows(hid)).array() * S(0.5)).tanh() * S(0.5) + S(0.5);
    MatX<S> z =
        ((xg_t.middleRows(hid, hid) + hg.middleRows(hid, hid)).array() * S(0.5)).tanh() * S(0.5) +
        S(0.5);
    MatX<S> hn = hg.bottomRows(hid);
    MatX<S> n = (xg_t.bottomRows(hid) + r.cwiseProduct(hn)).array().tanh().matrix();
    for (Index bi = 0; bi < B; ++bi) {
      Index c = bi * T + ti;
      saved->r.col(c) = r.col(bi);
      saved->z.col(c) = z.col(bi);
      saved->n.col(c) = n.col(bi);
      saved->hn.col(c) = hn.col(bi);
      saved->hprev.col(c) = hp.col(bi);
      out.col(c) = (S(1) - z.col(bi).array()).matrix().cwiseProduct(n.col(bi)) +
                   z.col(bi).cwiseProduct(hp.col(bi));
    }
  }

  int px = x.id, ph = has_h0 ? h0.id : -1, pwi = w_ih.id, pwh = w_hh.id, pb = b.id;
  bool needs = t.needs(px) || t.needs(pwi) || t.needs(pwh) || t.needs(pb) ||
               (has_h0 && t.needs(ph));
  return t.make(std::move(out), needs,
                [px, ph, pwi, pwh, pb, saved, B, T, hid](TapeT<S>& t, int self) {
                  const MatX<S>& g = t.grad(self);
                  const MatX<S>& whh = t.val(pwh);
                  MatX<S> dg_in = MatX<S>::Zero(3 * hid, B * T);   // [drp; dzp; dnp]
                  MatX<S> dg_h = MatX<S>::Zero(3 * hid, B * T);    // [drp; dzp; dhn]
                  MatX<S> carry = MatX<S>::Zero(hid, B);
                  for (Index ti = T - 1; ti >= 0; --ti) {
                    for (Index bi = 0; bi < B; ++bi) {
                      Index c = bi * T + ti;
                      auto r = saved->r.col(c).array();
                      auto z = saved->z.col(c).array();
                      auto n = saved->n.col(c).array();
                      auto hn = saved->hn.col(c).array();
                      auto hp = saved->hprev.col(c).array();
                      Eigen::Array<S, Eigen::Dynamic, 1> dh =
                          g.col(c).array() + carry.col(bi).array();
                      Eigen::Array<S, Eigen::Dynamic, 1> dzp = dh * (hp - n) * z * (S(1) - z);
                      Eigen::Array<S, Eigen::Dynamic, 1> dnp =
                          dh * (S(1) - z) * (S(1) - n.square());
                      Eigen::Array<S, Eigen::Dynamic, 1> drp = dnp * hn * r * (S(1) - r);
                      Eigen::Array<S, Eigen::Dynamic, 1> dhn = dnp * r;
                      dg_in.col(c).segment(0, hid) = drp;
                      dg_in.col(c).segment(hid, hid) = dzp;
                      dg_in.col(c).segment(2 * hid, hid) = dnp;
                      dg_h.col(c).segment(0, hid) = drp;
                      dg_h.col(c).segment(hid, hid) = dzp;
                      dg_h.col(c).segment(2 * hid, hid) = dhn;
                      carry.col(bi) = (dh * z).matrix() + whh.transpose() * dg_h.col(c);
                    }
                  }
                  if (t.needs(px)) t.accum(px, t.val(pwi).transpose() * dg_in);
                  if (t.needs(pwi)) t.accum(pwi, dg_in * t.val(px).transpose());
                  if (t.needs(pb)) t.accum(pb, dg_in.rowwise().sum());
                  if (t.needs(pwh)) t.accum(pwh, dg_h * saved->hprev.transpose());
                  if (ph >= 0 && t.needs(ph)) t.accum(ph, carry);
                });
}

// Multi-head causal self-attention with output projection, NanoGPT style.
template <typename S>
struct AttnSaved {
  MatX<S> qkv;                // 3E x (B*T)
  MatX<S> attn_out;           // E x (B*T), pre-projection
  std::vector<MatX<S>> probs; // per (episode, head), each T x T
};

template <typename S>
VarT<S> causal_self_attention(VarT<S> x, VarT<S> w_qkv, VarT<S> b_qkv, VarT<S> w_o, VarT<S> b_o,
                              Index B, Index T, Index n_heads) {
  auto& t = detail::same_tape(x, w_qkv);
  Index E = x.rows();
  PSRL_CHECK(x.cols() == B * T, "attention: layout mismatch");
  PSRL_CHECK(E % n_heads == 0, "attention: heads must divide embed dim");
  PSRL_CHECK(w_qkv.rows() == 3 * E && w_qkv.cols() == E, "attention: w_qkv shape");
  PSRL_CHECK(w_o.rows() == E && w_o.cols() == E, "attention: w_o shape");
  Index hs = E / n_heads;
  const S alpha = S(1) / S(std::sqrt(static_cast<double>(hs)));

  auto saved = std::make_shared<AttnSaved<S>>();
  saved->qkv = (w_qkv.val() * x.val()).colwise() +
               Eigen::Matrix<S, Eigen::Dynamic, 1>(b_qkv.val().col(0));
  saved->attn_out.resize(E, B * T);
  saved->probs.reserve(B * n_heads);

  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < n_heads; ++h) {
      auto q = saved->qkv.block(h * hs, b * T, hs, T);
      auto k = saved->qkv.block(E + h * hs, b * T, hs, T);
      auto v = saved->qkv.block(2 * E + h * hs, b * T, hs, T);
      MatX<S> s = (q.transpose() * k) * alpha;  // row i: query at position i
      MatX<S> p = MatX<S>::Zero(T, T);
      for (Index i = 0; i < T; ++i) {
        auto row = s.row(i).head(i + 1).array();
        S m = row.maxCoeff();
        Eigen::Array<S, 1, Eigen::Dynamic> e = (row - m).exp();
        p.row(i).head(i + 1) = (e / e.sum()).matrix();
      }
      saved->attn_out.block(h * hs, b * T, hs, T) = v * p.transpose();
      saved->probs.push_back(std::move(p));
    }
  }
  MatX<S> y = (w_o.val() * saved->attn_out).colwise() +
              Eigen::Matrix<S, Eigen::Dynamic, 1>(b_o.val().col(0));

  int px = x.id, pw = w_qkv.id, pbq = b_qkv.id, pwo = w_o.id, pbo = b_o.id;
  bool needs = t.needs(px) || t.needs(pw) || t.needs(pbq) || t.needs(pwo) || t.needs(pbo);
  return t.make(std::move(y), needs,
                [px, pw, pbq, pwo, pbo, saved, B, T, n_heads, hs, E, alpha](TapeT<S>& t,
                                                                            int self) {
                  const MatX<S>& g = t.grad(self);
                  if (t.needs(pwo)) t.accum(pwo, g * saved->attn_out.transpose());
                  if (t.needs(pbo)) t.accum(pbo, g.rowwise().sum());
                  MatX<S> dao = t.val(pwo).transpose() * g;  // E x (B*T)
                  MatX<S> dqkv = MatX<S>::Zero(3 * E, B * T);
                  for (Index b = 0; b < B; ++b) {
                    for (Index h = 0; h < n_heads; ++h) {
                      const MatX<S>& p = saved->probs[b * n_heads + h];
                      auto q = saved->qkv.block(h * hs, b * T, hs, T);
                      auto k = saved->qkv.block(E + h * hs, b * T, hs, T);
                      auto v = saved->qkv.block(2 * E + h * hs, b * T, hs, T);
                      auto dout = dao.block(h * hs, b * T, hs, T);
                      MatX<S> dp = dout.transpose() * v;  // T x T
                      // masked softmax backward per row; masked entries have p == 0
                      MatX<S> ds(T, T);
                      for (Index i = 0; i < T; ++i) {
                        S dot = p.row(i).cwiseProduct(dp.row(i)).sum();
                        ds.row(i) = (p.row(i).array() * (dp.row(i).array() - dot)).matrix();
                      }
                      ds *= alpha;
                      dqkv.block(h * hs, b * T, hs, T) += k * ds.transpose();
                      dqkv.block(E + h * hs, b * T, hs, T) += q * ds;
                      dqkv.block(2 * E + h * hs, b * T, hs, T) += dout * p;
                    }
                  }
                  if (t.needs(px)) t.accum(px, t.val(pw).transpose() * dqkv);
                  if (t.needs(pw)) t.accum(pw, dqkv * t.val(px).transpose());
                  if (t.needs(pbq)) t.accum(pbq, dqkv.rowwise().sum());
                });
}

}  // namespace psrl::ad
