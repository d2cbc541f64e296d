#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace socgen {

/// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1, scalars 1 x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double item() const;  // DimensionError unless 1 x 1

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

/// Static reverse-mode tape. Operations are recorded with their shapes (shape
/// errors surface at record time), leaves are bound to values, forward()
/// evaluates every node in record order and backward() accumulates exact
/// gradients in reverse order. A tape can be re-run after rebinding leaves,
/// which is how finite-difference checks perturb inputs.
class Tape {
 public:
  Tape() = default;

  /// Unbound placeholder; must be bound before forward().
  Var leaf(std::size_t rows, std::size_t cols);
  /// Placeholder bound to value.
  Var leaf(Tensor value);
  void bind(Var leaf, Tensor value);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  /// a (r x c) plus row vector b (1 x c) on every row.
  Var add_row(Var a, Var b);
  Var scale(Var a, double factor);
  Var add_const(Var a, double shift);
  /// Elementwise product with a fixed tensor.
  Var mul_const(Var a, Tensor mask);
  /// a times the 1 x 1 value s.
  Var mul_scalar(Var a, Var s);
  /// a plus the 1 x 1 value s.
  Var add_scalar(Var a, Var s);
  /// a divided by the 1 x 1 value s.
  Var div_scalar(Var a, Var s);

  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var log(Var a);
  Var exp(Var a);
  /// ln sigmoid(a), stable for large |a|.
  Var log_sigmoid(Var a);
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);

  /// out[i] = a[index[i]].
  Var gather_rows(Var a, std::vector<std::uint32_t> index);
  /// out[s] = sum of a[i] over rows with segment[i] == s.
  Var segment_sum(Var a, std::vector<std::uint32_t> segment, std::size_t num_segments);
  /// Row i multiplied by weights[i].
  Var scale_rows(Var a, std::vector<double> weights);
  /// out[i] = self_weight[i] * a[i] + sum_p weight[p] * a[neighbor[p]] for p in
  /// [offsets[i], offsets[i+1]). Fused gather + segment-sum for neighborhood
  /// aggregation; summation order per row is fixed by the neighbor list.
  Var aggregate(Var a, std::vector<std::size_t> offsets, std::vector<std::uint32_t> neighbor,
                std::vector<double> weight, std::vector<double> self_weight);
  /// Per-row dot product of a and b, r x 1.
  Var row_dot(Var a, Var b);
  Var row_sum(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var slice_cols(Var a, std::size_t begin, std::size_t end);
  /// Same row-major values viewed as rows x cols.
  Var reshape(Var a, std::size_t rows, std::size_t cols);
  Var concat_cols(std::span<const Var> parts);

  void forward();
  /// Seeds d(out) = 1; out must be 1 x 1.
  void backward(Var out);
  void backward(Var out, const Tensor& seed);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  std::size_t rows(Var v) const { return nodes_.at(v.id).rows; }
  std::size_t cols(Var v) const { return nodes_.at(v.id).cols; }
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kMatmul, kTranspose, kAdd, kSub, kMul, kAddRow, kScale, kAddConst, kMulConst,
    kMulScalar, kAddScalar, kDivScalar, kSigmoid, kTanh, kRelu, kLog, kExp, kLogSigmoid,
    kSoftmaxRows, kLogSoftmaxRows, kGatherRows, kSegmentSum, kScaleRows, kAggregate,
    kRowDot, kRowSum, kSum, kMean, kSliceCols, kConcatCols, kReshape,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint32_t> inputs;
    double scalar = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::vector<std::uint32_t> index;
    std::vector<std::size_t> offsets;
    std::vector<double> weights;
    std::vector<double> self_weights;
    Tensor constant;
    bool bound = false;
  };

  Var record(Node node);
  Var unary(Op op, Var a);
  const Node& node(Var v) const;
  void eval(std::size_t i);
  void grad_step(std::size_t i);

  std::vector<Node> nodes_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  bool forwarded_ = false;
  bool backwarded_ = false;
};

// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers and step count for a fixed parameter set.
class AdamState {
 public:
  AdamState(AdamConfig config, std::span<const Tensor> params);

  const AdamConfig& config() const { return config_; }
  std::size_t step_count() const { return t_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

  /// One bias-corrected Adam update; DimensionError on shape mismatch.
  void step(std::span<Tensor> params, std::span<const Tensor> grads);

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

inline void adam_step(AdamState& state, std::span<Tensor> params, std::span<const Tensor> grads) {
  state.step(params, grads);
}

double sigmoid(double x);
double log_sigmoid(double x);

}  // namespace socgen
