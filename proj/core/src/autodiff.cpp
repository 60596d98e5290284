#include "medrep/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "medrep/errors.hpp"
#include "medrep/rng.hpp"

namespace medrep {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

ConstMatrixMap as_matrix(const Tensor& t) {
  return {t.values().data(), static_cast<Eigen::Index>(t.rows()),
          static_cast<Eigen::Index>(t.cols())};
}

ConstMatrixMap as_matrix(std::span<const double> data, std::size_t rows,
                         std::size_t cols) {
  return {data.data(), static_cast<Eigen::Index>(rows),
          static_cast<Eigen::Index>(cols)};
}

MatrixMap as_matrix(std::span<double> data, std::size_t rows,
                    std::size_t cols) {
  return {data.data(), static_cast<Eigen::Index>(rows),
          static_cast<Eigen::Index>(cols)};
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return {rows, cols}; }

void require_same_layout(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

void require_same_tape(ad::Var a, ad::Var b, const char* op) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw ContractError(std::string(op) + ": operands on different tapes");
  }
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<double> log_softmax(std::span<const double> logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (const double z : logits) total += std::exp(z - max);
  const double lse = max + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

namespace ad {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::parameter(const Tensor& param) {
  if (const auto it = bound_.find(&param); it != bound_.end()) {
    return {this, it->second};
  }
  Node node;
  node.external = &param;
  node.requires_grad = recording();
  nodes_.push_back(std::move(node));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  bound_.emplace(&param, id);
  return {this, id};
}

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& node = nodes_[id];
  return node.external ? *node.external : node.owned;
}

std::span<double> Tape::adjoint(std::uint32_t id) {
  Node& node = nodes_[id];
  if (node.adjoint.empty()) node.adjoint.assign(value(id).size(), 0.0);
  return node.adjoint;
}

Var Tape::record(Tensor value, std::span<const Var> inputs,
                 Backprop backprop) {
  Node node;
  node.owned = std::move(value);
  if (recording()) {
    for (const Var& in : inputs) {
      if (&in.tape() != this) {
        throw ContractError("operation mixes tensors from different tapes");
      }
      if (nodes_[in.id()].requires_grad) node.requires_grad = true;
    }
    if (node.requires_grad) node.backprop = std::move(backprop);
  }
  nodes_.push_back(std::move(node));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
  if (!loss.valid() || &loss.tape() != this) {
    throw ContractError("backward: loss is not recorded on this tape");
  }
  if (value(loss.id()).size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        to_string(value(loss.id()).shape()));
  }
  for (Node& node : nodes_) node.adjoint.clear();
  if (!nodes_[loss.id()].requires_grad) return;
  adjoint(loss.id())[0] = 1.0;
  for (std::uint32_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.backprop && !node.adjoint.empty()) node.backprop(*this, id);
  }
}

std::span<const double> Tape::gradient(const Tensor& param) const {
  const auto it = bound_.find(&param);
  if (it == bound_.end()) return {};
  return nodes_[it->second].adjoint;
}

void Tape::accumulate_gradients(std::span<Tensor* const> params) const {
  for (Tensor* p : params) {
    if (!p->tracked()) continue;
    const auto g = gradient(*p);
    auto dst = p->grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
}

void backward(Var loss, std::span<Tensor* const> params) {
  loss.tape().backward(loss);
  loss.tape().accumulate_gradients(params);
}

Var elementwise(ElementwiseOp op, Var a, Var b) {
  switch (op) {
    case ElementwiseOp::kAdd:
      return add(a, b);
    case ElementwiseOp::kMul:
      return mul(a, b);
    case ElementwiseOp::kSigmoid:
      return sigmoid(a);
    case ElementwiseOp::kTanh:
      return tanh(a);
  }
  throw ContractError("elementwise: unknown op");
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_layout(av, bv, "add");
  Tensor out = av;
  auto o = out.values();
  const auto bs = bv.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bs[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b},
                         [ia, ib](Tape& t, std::uint32_t self) {
                           const auto g = t.adjoint(self);
                           for (const auto id : {ia, ib}) {
                             if (!t.requires_grad(id)) continue;
                             auto d = t.adjoint(id);
                             for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
                           }
                         });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_layout(av, bv, "mul");
  Tensor out = av;
  auto o = out.values();
  const auto bs = bv.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bs[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(
      std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
        const auto g = t.adjoint(self);
        const auto x = t.value(ia).values();
        const auto y = t.value(ib).values();
        if (t.requires_grad(ia)) {
          auto d = t.adjoint(ia);
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i];
        }
        if (t.requires_grad(ib)) {
          auto d = t.adjoint(ib);
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * x[i];
        }
      });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = sigmoid_value(v);
  const auto ia = a.id();
  Tape& tape = a.tape();
  return tape.record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    const auto g = t.adjoint(self);
    const auto s = t.value(self).values();
    auto d = t.adjoint(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  const auto ia = a.id();
  Tape& tape = a.tape();
  return tape.record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    const auto g = t.adjoint(self);
    const auto y = t.value(self).values();
    auto d = t.adjoint(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  const auto ia = a.id();
  Tape& tape = a.tape();
  return tape.record(std::move(out), {a},
                     [ia, factor](Tape& t, std::uint32_t self) {
                       const auto g = t.adjoint(self);
                       auto d = t.adjoint(ia);
                       for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * factor;
                     });
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions differ: " + to_string(av.shape()) +
                     " * " + to_string(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out(matrix_shape(m, n));
  as_matrix(out.values(), m, n).noalias() = as_matrix(av) * as_matrix(bv);
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(
      std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
        const auto g = as_matrix(std::span<const double>(t.adjoint(self)), m, n);
        if (t.requires_grad(ia)) {
          as_matrix(t.adjoint(ia), m, k).noalias() +=
              g * as_matrix(t.value(ib)).transpose();
        }
        if (t.requires_grad(ib)) {
          as_matrix(t.adjoint(ib), k, n).noalias() +=
              as_matrix(t.value(ia)).transpose() * g;
        }
      });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b, "matmul_nt");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw ShapeError("matmul_nt: inner dimensions differ: " +
                     to_string(av.shape()) + " * " + to_string(bv.shape()) +
                     "^T");
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor out(matrix_shape(m, n));
  as_matrix(out.values(), m, n).noalias() =
      as_matrix(av) * as_matrix(bv).transpose();
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(
      std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
        const auto g = as_matrix(std::span<const double>(t.adjoint(self)), m, n);
        if (t.requires_grad(ia)) {
          as_matrix(t.adjoint(ia), m, k).noalias() += g * as_matrix(t.value(ib));
        }
        if (t.requires_grad(ib)) {
          as_matrix(t.adjoint(ib), n, k).noalias() +=
              g.transpose() * as_matrix(t.value(ia));
        }
      });
}

Var add_bias(Var a, Var bias) {
  require_same_tape(a, bias, "add_bias");
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.size() != av.cols()) {
    throw ShapeError("add_bias: bias " + to_string(bv.shape()) +
                     " does not match rows of " + to_string(av.shape()));
  }
  const std::size_t rows = av.rows(), cols = av.cols();
  Tensor out(matrix_shape(rows, cols), std::vector<double>(av.values().begin(),
                                                          av.values().end()));
  auto o = out.values();
  const auto b = bv.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) o[r * cols + c] += b[c];
  }
  const auto ia = a.id(), ib = bias.id();
  return a.tape().record(std::move(out), {a, bias},
                         [ia, ib, rows, cols](Tape& t, std::uint32_t self) {
                           const auto g = t.adjoint(self);
                           if (t.requires_grad(ia)) {
                             auto d = t.adjoint(ia);
                             for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
                           }
                           if (t.requires_grad(ib)) {
                             auto d = t.adjoint(ib);
                             for (std::size_t r = 0; r < rows; ++r) {
                               for (std::size_t c = 0; c < cols; ++c) {
                                 d[c] += g[r * cols + c];
                               }
                             }
                           }
                         });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape& tape = parts.front().tape();
  const std::size_t rows = parts.front().value().rows();
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (&p.tape() != &tape) throw ContractError("concat_cols: mixed tapes");
    const Tensor& v = p.value();
    if (v.rows() != rows) {
      throw ShapeError("concat_cols: row count mismatch " +
                       to_string(parts.front().value().shape()) + " vs " +
                       to_string(v.shape()));
    }
    ids.push_back(p.id());
    widths.push_back(v.cols());
    total += v.cols();
  }
  Tensor out(matrix_shape(rows, total));
  auto o = out.values();
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto src = parts[p].value().values();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * widths[p]),
                  widths[p],
                  o.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    }
    offset += widths[p];
  }

  return tape.record(
      std::move(out), parts,
      [ids = std::move(ids), widths = std::move(widths), rows, total](
          Tape& t, std::uint32_t self) {
        const auto g = t.adjoint(self);
        std::size_t off = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          if (t.requires_grad(ids[p])) {
            auto d = t.adjoint(ids[p]);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t c = 0; c < widths[p]; ++c) {
                d[r * widths[p] + c] += g[r * total + off + c];
              }
            }
          }
          off += widths[p];
        }
      });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  if (count == 0 || begin + count > av.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " +
                     to_string(av.shape()));
  }
  const std::size_t rows = av.rows(), cols = av.cols();
  Tensor out(matrix_shape(rows, count));
  auto o = out.values();
  const auto src = av.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * cols + begin),
                count, o.begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a},
                         [ia, rows, cols, begin, count](Tape& t, std::uint32_t self) {
                           const auto g = t.adjoint(self);
                           auto d = t.adjoint(ia);
                           for (std::size_t r = 0; r < rows; ++r) {
                             for (std::size_t c = 0; c < count; ++c) {
                               d[r * cols + begin + c] += g[r * count + c];
                             }
                           }
                         });
}

Var gather_cols(Var table, std::span<const std::int32_t> ids) {
  const Tensor& tv = table.value();
  const std::size_t width = tv.rows(), vocab = tv.cols();
  if (ids.empty()) throw ShapeError("gather_cols: no ids");
  for (const auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw IndexError("gather_cols: id " + std::to_string(id) +
                       " outside table " + to_string(tv.shape()));
    }
  }
  Tensor out(matrix_shape(ids.size(), width));
  auto o = out.values();
  const auto src = tv.values();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    for (std::size_t e = 0; e < width; ++e) {
      o[r * width + e] = src[e * vocab + static_cast<std::size_t>(ids[r])];
    }
  }
  const auto it = table.id();
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  return table.tape().record(
      std::move(out), {table},
      [it, idx = std::move(idx), width, vocab](Tape& t, std::uint32_t self) {
        const auto g = t.adjoint(self);
        auto d = t.adjoint(it);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          for (std::size_t e = 0; e < width; ++e) {
            d[e * vocab + static_cast<std::size_t>(idx[r])] += g[r * width + e];
          }
        }
      });
}

Var select_rows(std::span<const char> take_a, Var a, Var b) {
  require_same_tape(a, b, "select_rows");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_layout(av, bv, "select_rows");
  const std::size_t rows = av.rows(), cols = av.cols();
  if (take_a.size() != rows) {
    throw ShapeError("select_rows: mask has " + std::to_string(take_a.size()) +
                     " entries for " + std::to_string(rows) + " rows");
  }
  Tensor out(matrix_shape(rows, cols));
  auto o = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const auto src = (take_a[r] ? av : bv).values();
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * cols), cols,
                o.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  const auto ia = a.id(), ib = b.id();
  std::vector<char> mask(take_a.begin(), take_a.end());
  return a.tape().record(
      std::move(out), {a, b},
      [ia, ib, mask = std::move(mask), cols](Tape& t, std::uint32_t self) {
        const auto g = t.adjoint(self);
        for (std::size_t r = 0; r < mask.size(); ++r) {
          const auto target = mask[r] ? ia : ib;
          if (!t.requires_grad(target)) continue;
          auto d = t.adjoint(target);
          for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += g[r * cols + c];
        }
      });
}

Var scale_rows(Var a, std::span<const double> factors) {
  const Tensor& av = a.value();
  const std::size_t rows = av.rows(), cols = av.cols();
  if (factors.size() != rows) {
    throw ShapeError("scale_rows: " + std::to_string(factors.size()) +
                     " factors for " + std::to_string(rows) + " rows");
  }
  Tensor out(matrix_shape(rows, cols),
             std::vector<double>(av.values().begin(), av.values().end()));
  auto o = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) o[r * cols + c] *= factors[r];
  }
  const auto ia = a.id();
  std::vector<double> f(factors.begin(), factors.end());
  return a.tape().record(std::move(out), {a},
                         [ia, f = std::move(f), cols](Tape& t, std::uint32_t self) {
                           const auto g = t.adjoint(self);
                           auto d = t.adjoint(ia);
                           for (std::size_t r = 0; r < f.size(); ++r) {
                             for (std::size_t c = 0; c < cols; ++c) {
                               d[r * cols + c] += g[r * cols + c] * f[r];
                             }
                           }
                         });
}

Var dropout(Var a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout: rate must be in [0, 1), got " +
                        std::to_string(rate));
  }
  if (rate == 0.0) return a;
  const Tensor& av = a.value();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(av.size());
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor out = av;
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= mask[i];
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a},
                         [ia, mask = std::move(mask)](Tape& t, std::uint32_t self) {
                           const auto g = t.adjoint(self);
                           auto d = t.adjoint(ia);
                           for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * mask[i];
                         });
}

Var sum(Var a) {
  double total = 0.0;
  for (const double v : a.value().values()) total += v;
  const auto ia = a.id();
  return a.tape().record(Tensor::scalar(total), {a},
                         [ia](Tape& t, std::uint32_t self) {
                           const double g = t.adjoint(self)[0];
                           for (double& d : t.adjoint(ia)) d += g;
                         });
}

Var softmax_nll(Var logits, std::span<const std::int32_t> targets) {
  const Tensor& lv = logits.value();
  const std::size_t rows = lv.rows(), vocab = lv.cols();
  if (targets.size() != rows) {
    throw ShapeError("softmax_nll: " + std::to_string(targets.size()) +
                     " targets for logits " + to_string(lv.shape()));
  }
  // Cache the softmax rows for the backward pass.
  std::vector<double> probs(lv.size(), 0.0);
  std::vector<std::int32_t> tgt(targets.begin(), targets.end());
  double total = 0.0;
  const auto z = lv.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const auto target = tgt[r];
    if (target == kIgnoreTarget) continue;
    if (target < 0 || static_cast<std::size_t>(target) >= vocab) {
      throw IndexError("softmax_nll: target " + std::to_string(target) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
    const auto row = z.subspan(r * vocab, vocab);
    const double max = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) {
      const double e = std::exp(row[c] - max);
      probs[r * vocab + c] = e;
      denom += e;
    }
    for (std::size_t c = 0; c < vocab; ++c) probs[r * vocab + c] /= denom;
    total += max + std::log(denom) - row[static_cast<std::size_t>(target)];
  }
  const auto il = logits.id();
  return logits.tape().record(
      Tensor::scalar(total), {logits},
      [il, probs = std::move(probs), tgt = std::move(tgt), vocab](
          Tape& t, std::uint32_t self) {
        const double g = t.adjoint(self)[0];
        auto d = t.adjoint(il);
        for (std::size_t r = 0; r < tgt.size(); ++r) {
          if (tgt[r] == kIgnoreTarget) continue;
          for (std::size_t c = 0; c < vocab; ++c) {
            d[r * vocab + c] += g * probs[r * vocab + c];
          }
          d[r * vocab + static_cast<std::size_t>(tgt[r])] -= g;
        }
      });
}

Var softmax_nll(Var logits, std::int32_t target) {
  if (logits.value().rows() != 1) {
    throw ShapeError("softmax_nll: single-target form needs one row, got " +
                     to_string(logits.value().shape()));
  }
  return softmax_nll(logits, std::span<const std::int32_t>(&target, 1));
}

}  // namespace ad
}  // namespace medrep
