#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "medrep/tensor.hpp"

namespace medrep {

class Rng;

namespace ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while
/// the owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  const Tensor& value() const;
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

enum class GradMode { kRecord, kInference };

/// Linear record of executed operations.
///
/// Node ids increase in execution order, so walking ids backwards from the
/// loss is a reverse topological order and every recorded operation is
/// replayed exactly once per backward(). Parameters are bound by reference
/// (no copy); their adjoints stay on the tape until accumulate_gradients()
/// adds them into the tensors' own gradient buffers.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(GradMode mode = GradMode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return mode_ == GradMode::kRecord; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var constant(Tensor value);
  // Binding the same tensor twice yields the same node.
  Var parameter(const Tensor& param);

  const Tensor& value(std::uint32_t id) const;
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  std::span<double> adjoint(std::uint32_t id);

  // The node requires grad when recording and any input does; otherwise the
  // backprop closure is dropped.
  Var record(Tensor value, std::span<const Var> inputs, Backprop backprop);
  Var record(Tensor value, std::initializer_list<Var> inputs, Backprop backprop) {
    return record(std::move(value),
                  std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backprop));
  }

  // Loss must be a scalar recorded on this tape.
  void backward(Var loss);

  // Adjoint of a bound parameter after backward(); empty if the parameter
  // was never bound or received no gradient.
  std::span<const double> gradient(const Tensor& param) const;
  void accumulate_gradients(std::span<Tensor* const> params) const;

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<double> adjoint;
    bool requires_grad = false;
    Backprop backprop;
  };

  std::deque<Node> nodes_;  // stable references across record()
  std::unordered_map<const Tensor*, std::uint32_t> bound_;
  GradMode mode_;
};

/// tape.backward(loss) followed by accumulating into every tracked tensor in
/// `params`. Repeated calls accumulate.
void backward(Var loss, std::span<Tensor* const> params);

inline constexpr std::int32_t kIgnoreTarget = -1;

enum class ElementwiseOp { kAdd, kMul, kSigmoid, kTanh };

Var elementwise(ElementwiseOp op, Var a, Var b = {});
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var scale(Var a, double factor);

Var matmul(Var a, Var b);     // a[m x k] * b[k x n]
Var matmul_nt(Var a, Var b);  // a[m x k] * b[n x k]^T
Var add_bias(Var a, Var bias);  // a[m x n] + bias[n] on every row

Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
// Row r of the result is column ids[r] of table[E x V].
Var gather_cols(Var table, std::span<const std::int32_t> ids);
// Row r comes from a where take_a[r], else from b.
Var select_rows(std::span<const char> take_a, Var a, Var b);
Var scale_rows(Var a, std::span<const double> factors);

// Inverted dropout: zero with probability `rate`, survivors scaled by
// 1 / (1 - rate). rate == 0 returns `a` itself.
Var dropout(Var a, double rate, Rng& rng);

Var sum(Var a);

/// Sum over rows of -log softmax(logits[r])[targets[r]]; rows whose target is
/// kIgnoreTarget contribute nothing. Max-subtracted for stability.
Var softmax_nll(Var logits, std::span<const std::int32_t> targets);
Var softmax_nll(Var logits, std::int32_t target);

}  // namespace ad

/// Stable log-softmax of one row of logits (no tape).
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace medrep
