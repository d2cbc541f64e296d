#include "socgen/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "socgen/error.hpp"

namespace socgen {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

MapC view(const Tensor& t) {
  return MapC(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}
Map view(Tensor& t) {
  return Map(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

std::string shape_str(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return x < 0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x)); }

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols)
    fail(Errc::kDimensionError, "tensor value count " + std::to_string(data_.size()) + " does not match shape " +
                                    shape_str(rows, cols));
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) fail(Errc::kDimensionError, "item() on a non-scalar tensor");
  return data_[0];
}

// ---------------------------------------------------------------------------
// recording

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) fail(Errc::kIndexError, "unknown tape variable");
  return nodes_[v.id];
}

Var Tape::record(Node n) {
  nodes_.push_back(std::move(n));
  values_.emplace_back();
  forwarded_ = backwarded_ = false;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(std::size_t rows, std::size_t cols) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  return record(std::move(n));
}

Var Tape::leaf(Tensor value) {
  Var v = leaf(value.rows(), value.cols());
  bind(v, std::move(value));
  return v;
}

void Tape::bind(Var v, Tensor value) {
  auto& n = nodes_.at(v.id);
  if (n.op != Op::kLeaf) fail(Errc::kValueError, "bind() on a non-leaf variable");
  if (value.rows() != n.rows || value.cols() != n.cols)
    fail(Errc::kDimensionError, "leaf declared " + shape_str(n.rows, n.cols) + " bound to " +
                                    shape_str(value.rows(), value.cols()));
  values_[v.id] = std::move(value);
  n.bound = true;
  forwarded_ = backwarded_ = false;
}

Var Tape::unary(Op op, Var a) {
  const auto& na = node(a);
  Node n;
  n.op = op;
  n.rows = na.rows;
  n.cols = na.cols;
  n.inputs = {a.id};
  return record(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const auto &na = node(a), &nb = node(b);
  if (na.cols != nb.rows)
    fail(Errc::kDimensionError, "matmul " + shape_str(na.rows, na.cols) + " by " + shape_str(nb.rows, nb.cols));
  Node n;
  n.op = Op::kMatmul;
  n.rows = na.rows;
  n.cols = nb.cols;
  n.inputs = {a.id, b.id};
  return record(std::move(n));
}

Var Tape::transpose(Var a) {
  const auto& na = node(a);
  Node n;
  n.op = Op::kTranspose;
  n.rows = na.cols;
  n.cols = na.rows;
  n.inputs = {a.id};
  return record(std::move(n));
}

namespace {
void same_shape_or_throw(std::size_t r1, std::size_t c1, std::size_t r2, std::size_t c2, const char* what) {
  if (r1 != r2 || c1 != c2)
    fail(Errc::kDimensionError, std::string(what) + " shape mismatch " + shape_str(r1, c1) + " vs " + shape_str(r2, c2));
}
}  // namespace

Var Tape::add(Var a, Var b) {
  same_shape_or_throw(node(a).rows, node(a).cols, node(b).rows, node(b).cols, "add");
  Var v = unary(Op::kAdd, a);
  nodes_[v.id].inputs.push_back(b.id);
  return v;
}

Var Tape::sub(Var a, Var b) {
  same_shape_or_throw(node(a).rows, node(a).cols, node(b).rows, node(b).cols, "sub");
  Var v = unary(Op::kSub, a);
  nodes_[v.id].inputs.push_back(b.id);
  return v;
}

Var Tape::mul(Var a, Var b) {
  same_shape_or_throw(node(a).rows, node(a).cols, node(b).rows, node(b).cols, "mul");
  Var v = unary(Op::kMul, a);
  nodes_[v.id].inputs.push_back(b.id);
  return v;
}

Var Tape::add_row(Var a, Var b) {
  if (node(b).rows != 1 || node(b).cols != node(a).cols)
    fail(Errc::kDimensionError, "add_row needs a 1x" + std::to_string(node(a).cols) + " row");
  Var v = unary(Op::kAddRow, a);
  nodes_[v.id].inputs.push_back(b.id);
  return v;
}

Var Tape::scale(Var a, double factor) {
  Var v = unary(Op::kScale, a);
  nodes_[v.id].scalar = factor;
  return v;
}

Var Tape::add_const(Var a, double shift) {
  Var v = unary(Op::kAddConst, a);
  nodes_[v.id].scalar = shift;
  return v;
}

Var Tape::mul_const(Var a, Tensor mask) {
  same_shape_or_throw(node(a).rows, node(a).cols, mask.rows(), mask.cols(), "mul_const");
  Var v = unary(Op::kMulConst, a);
  nodes_[v.id].constant = std::move(mask);
  return v;
}

namespace {
void require_scalar(std::size_t r, std::size_t c) {
  if (r != 1 || c != 1) fail(Errc::kDimensionError, "expected a 1x1 scalar, got " + shape_str(r, c));
}
}  // namespace

Var Tape::mul_scalar(Var a, Var s) {
  require_scalar(node(s).rows, node(s).cols);
  Var v = unary(Op::kMulScalar, a);
  nodes_[v.id].inputs.push_back(s.id);
  return v;
}

Var Tape::add_scalar(Var a, Var s) {
  require_scalar(node(s).rows, node(s).cols);
  Var v = unary(Op::kAddScalar, a);
  nodes_[v.id].inputs.push_back(s.id);
  return v;
}

Var Tape::div_scalar(Var a, Var s) {
  require_scalar(node(s).rows, node(s).cols);
  Var v = unary(Op::kDivScalar, a);
  nodes_[v.id].inputs.push_back(s.id);
  return v;
}

Var Tape::sigmoid(Var a) { return unary(Op::kSigmoid, a); }
Var Tape::tanh(Var a) { return unary(Op::kTanh, a); }
Var Tape::relu(Var a) { return unary(Op::kRelu, a); }
Var Tape::log(Var a) { return unary(Op::kLog, a); }
Var Tape::exp(Var a) { return unary(Op::kExp, a); }
Var Tape::log_sigmoid(Var a) { return unary(Op::kLogSigmoid, a); }
Var Tape::softmax_rows(Var a) { return unary(Op::kSoftmaxRows, a); }
Var Tape::log_softmax_rows(Var a) { return unary(Op::kLogSoftmaxRows, a); }

Var Tape::gather_rows(Var a, std::vector<std::uint32_t> index) {
  const auto& na = node(a);
  for (auto i : index)
    if (i >= na.rows) fail(Errc::kIndexError, "gather index out of range");
  Node n;
  n.op = Op::kGatherRows;
  n.rows = index.size();
  n.cols = na.cols;
  n.inputs = {a.id};
  n.index = std::move(index);
  return record(std::move(n));
}

Var Tape::segment_sum(Var a, std::vector<std::uint32_t> segment, std::size_t num_segments) {
  const auto& na = node(a);
  if (segment.size() != na.rows) fail(Errc::kDimensionError, "segment ids must match row count");
  for (auto s : segment)
    if (s >= num_segments) fail(Errc::kIndexError, "segment id out of range");
  Node n;
  n.op = Op::kSegmentSum;
  n.rows = num_segments;
  n.cols = na.cols;
  n.inputs = {a.id};
  n.index = std::move(segment);
  return record(std::move(n));
}

Var Tape::scale_rows(Var a, std::vector<double> weights) {
  if (weights.size() != node(a).rows) fail(Errc::kDimensionError, "row weights must match row count");
  Var v = unary(Op::kScaleRows, a);
  nodes_[v.id].weights = std::move(weights);
  return v;
}

Var Tape::aggregate(Var a, std::vector<std::size_t> offsets, std::vector<std::uint32_t> neighbor,
                    std::vector<double> weight, std::vector<double> self_weight) {
  const auto& na = node(a);
  if (offsets.size() != na.rows + 1 || self_weight.size() != na.rows || neighbor.size() != weight.size() ||
      offsets.back() != neighbor.size())
    fail(Errc::kDimensionError, "aggregate structure does not match input rows");
  for (auto u : neighbor)
    if (u >= na.rows) fail(Errc::kIndexError, "aggregate neighbor out of range");
  Var v = unary(Op::kAggregate, a);
  auto& n = nodes_[v.id];
  n.offsets = std::move(offsets);
  n.index = std::move(neighbor);
  n.weights = std::move(weight);
  n.self_weights = std::move(self_weight);
  return v;
}

Var Tape::row_dot(Var a, Var b) {
  same_shape_or_throw(node(a).rows, node(a).cols, node(b).rows, node(b).cols, "row_dot");
  Var v = unary(Op::kRowDot, a);
  auto& n = nodes_[v.id];
  n.inputs.push_back(b.id);
  n.cols = 1;
  return v;
}

Var Tape::row_sum(Var a) {
  Var v = unary(Op::kRowSum, a);
  nodes_[v.id].cols = 1;
  return v;
}

Var Tape::sum(Var a) {
  Var v = unary(Op::kSum, a);
  nodes_[v.id].rows = nodes_[v.id].cols = 1;
  return v;
}

Var Tape::mean(Var a) {
  if (node(a).rows * node(a).cols == 0) fail(Errc::kDimensionError, "mean of an empty tensor");
  Var v = unary(Op::kMean, a);
  nodes_[v.id].rows = nodes_[v.id].cols = 1;
  return v;
}

Var Tape::slice_cols(Var a, std::size_t begin, std::size_t end) {
  if (begin > end || end > node(a).cols) fail(Errc::kDimensionError, "column slice out of range");
  Var v = unary(Op::kSliceCols, a);
  auto& n = nodes_[v.id];
  n.cols = end - begin;
  n.begin = begin;
  n.end = end;
  return v;
}

Var Tape::reshape(Var a, std::size_t rows, std::size_t cols) {
  if (rows * cols != node(a).rows * node(a).cols) fail(Errc::kDimensionError, "reshape changes the element count");
  Var v = unary(Op::kReshape, a);
  nodes_[v.id].rows = rows;
  nodes_[v.id].cols = cols;
  return v;
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail(Errc::kDimensionError, "concat of nothing");
  Node n;
  n.op = Op::kConcatCols;
  n.rows = node(parts[0]).rows;
  for (Var p : parts) {
    if (node(p).rows != n.rows) fail(Errc::kDimensionError, "concat row mismatch");
    n.cols += node(p).cols;
    n.inputs.push_back(p.id);
  }
  return record(std::move(n));
}

// ---------------------------------------------------------------------------
// evaluation

void Tape::forward() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::kLeaf) {
      if (!nodes_[i].bound) fail(Errc::kStateError, "leaf " + std::to_string(i) + " is unbound");
      continue;
    }
    eval(i);
  }
  forwarded_ = true;
  backwarded_ = false;
}

const Tensor& Tape::value(Var v) const {
  const auto& n = node(v);
  if (!forwarded_ && !(n.op == Op::kLeaf && n.bound)) fail(Errc::kStateError, "value() before forward()");
  return values_[v.id];
}

const Tensor& Tape::grad(Var v) const {
  node(v);
  if (!backwarded_) fail(Errc::kStateError, "grad() before backward()");
  return grads_[v.id];
}

void Tape::eval(std::size_t i) {
  const Node& n = nodes_[i];
  Tensor out(n.rows, n.cols);
  auto in = [&](std::size_t k) -> const Tensor& { return values_[n.inputs[k]]; };
  const std::size_t sz = out.size();
  switch (n.op) {
    case Op::kLeaf:
      return;
    case Op::kMatmul:
      view(out).noalias() = view(in(0)) * view(in(1));
      break;
    case Op::kTranspose:
      view(out) = view(in(0)).transpose();
      break;
    case Op::kAdd:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] + in(1)[j];
      break;
    case Op::kSub:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] - in(1)[j];
      break;
    case Op::kMul:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] * in(1)[j];
      break;
    case Op::kAddRow:
      for (std::size_t r = 0; r < n.rows; ++r)
        for (std::size_t c = 0; c < n.cols; ++c) out(r, c) = in(0)(r, c) + in(1)[c];
      break;
    case Op::kScale:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] * n.scalar;
      break;
    case Op::kAddConst:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] + n.scalar;
      break;
    case Op::kMulConst:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] * n.constant[j];
      break;
    case Op::kMulScalar:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] * in(1)[0];
      break;
    case Op::kAddScalar:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] + in(1)[0];
      break;
    case Op::kDivScalar:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] / in(1)[0];
      break;
    case Op::kSigmoid:
      for (std::size_t j = 0; j < sz; ++j) out[j] = socgen::sigmoid(in(0)[j]);
      break;
    case Op::kTanh:
      for (std::size_t j = 0; j < sz; ++j) out[j] = std::tanh(in(0)[j]);
      break;
    case Op::kRelu:
      for (std::size_t j = 0; j < sz; ++j) out[j] = in(0)[j] > 0.0 ? in(0)[j] : 0.0;
      break;
    case Op::kLog:
      for (std::size_t j = 0; j < sz; ++j) out[j] = std::log(in(0)[j]);
      break;
    case Op::kExp:
      for (std::size_t j = 0; j < sz; ++j) out[j] = std::exp(in(0)[j]);
      break;
    case Op::kLogSigmoid:
      for (std::size_t j = 0; j < sz; ++j) out[j] = socgen::log_sigmoid(in(0)[j]);
      break;
    case Op::kSoftmaxRows:
    case Op::kLogSoftmaxRows:
      for (std::size_t r = 0; r < n.rows; ++r) {
        const auto x = in(0).row(r);
        const double top = *std::max_element(x.begin(), x.end());
        double z = 0.0;
        for (double v : x) z += std::exp(v - top);
        const double log_z = std::log(z) + top;
        for (std::size_t c = 0; c < n.cols; ++c)
          out(r, c) = n.op == Op::kSoftmaxRows ? std::exp(x[c] - log_z) : x[c] - log_z;
      }
      break;
    case Op::kGatherRows:
      for (std::size_t r = 0; r < n.rows; ++r) {
        const auto src = in(0).row(n.index[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
      }
      break;
    case Op::kSegmentSum:
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        auto dst = out.row(n.index[r]);
        const auto src = in(0).row(r);
        for (std::size_t c = 0; c < n.cols; ++c) dst[c] += src[c];
      }
      break;
    case Op::kScaleRows:
      for (std::size_t r = 0; r < n.rows; ++r)
        for (std::size_t c = 0; c < n.cols; ++c) out(r, c) = in(0)(r, c) * n.weights[r];
      break;
    case Op::kAggregate:
      for (std::size_t r = 0; r < n.rows; ++r) {
        auto dst = out.row(r);
        const auto self = in(0).row(r);
        for (std::size_t c = 0; c < n.cols; ++c) dst[c] = n.self_weights[r] * self[c];
        for (std::size_t p = n.offsets[r]; p < n.offsets[r + 1]; ++p) {
          const auto src = in(0).row(n.index[p]);
          const double w = n.weights[p];
          for (std::size_t c = 0; c < n.cols; ++c) dst[c] += w * src[c];
        }
      }
      break;
    case Op::kRowDot:
      for (std::size_t r = 0; r < n.rows; ++r) {
        const auto a = in(0).row(r), b = in(1).row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
        out[r] = s;
      }
      break;
    case Op::kRowSum:
      for (std::size_t r = 0; r < n.rows; ++r) {
        double s = 0.0;
        for (double v : in(0).row(r)) s += v;
        out[r] = s;
      }
      break;
    case Op::kSum:
    case Op::kMean: {
      double s = 0.0;
      for (double v : in(0).data()) s += v;
      out[0] = n.op == Op::kSum ? s : s / static_cast<double>(in(0).size());
      break;
    }
    case Op::kSliceCols:
      for (std::size_t r = 0; r < n.rows; ++r)
        for (std::size_t c = 0; c < n.cols; ++c) out(r, c) = in(0)(r, n.begin + c);
      break;
    case Op::kReshape:
      out.data() = in(0).data();
      break;
    case Op::kConcatCols: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor& part = in(k);
        for (std::size_t r = 0; r < n.rows; ++r)
          for (std::size_t c = 0; c < part.cols(); ++c) out(r, offset + c) = part(r, c);
        offset += part.cols();
      }
      break;
    }
  }
  values_[i] = std::move(out);
}

void Tape::backward(Var out) {
  const auto& n = node(out);
  if (n.rows != 1 || n.cols != 1) fail(Errc::kDimensionError, "backward(out) needs a scalar output");
  backward(out, Tensor::scalar(1.0));
}

void Tape::backward(Var out, const Tensor& seed) {
  if (!forwarded_) fail(Errc::kStateError, "backward() before forward()");
  const auto& n = node(out);
  if (seed.rows() != n.rows || seed.cols() != n.cols) fail(Errc::kDimensionError, "seed shape mismatch");
  grads_.assign(nodes_.size(), Tensor());
  for (std::size_t i = 0; i < nodes_.size(); ++i) grads_[i] = Tensor(nodes_[i].rows, nodes_[i].cols);
  grads_[out.id] = seed;
  for (std::size_t i = out.id + 1; i-- > 0;) grad_step(i);
  backwarded_ = true;
}

void Tape::grad_step(std::size_t i) {
  const Node& n = nodes_[i];
  if (n.op == Op::kLeaf) return;
  const Tensor& g = grads_[i];
  const Tensor& y = values_[i];
  auto in = [&](std::size_t k) -> const Tensor& { return values_[n.inputs[k]]; };
  auto gin = [&](std::size_t k) -> Tensor& { return grads_[n.inputs[k]]; };
  const std::size_t sz = g.size();
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kMatmul:
      view(gin(0)).noalias() += view(g) * view(in(1)).transpose();
      view(gin(1)).noalias() += view(in(0)).transpose() * view(g);
      break;
    case Op::kTranspose:
      view(gin(0)) += view(g).transpose();
      break;
    case Op::kAdd:
      for (std::size_t j = 0; j < sz; ++j) {
        gin(0)[j] += g[j];
        gin(1)[j] += g[j];
      }
      break;
    case Op::kSub:
      for (std::size_t j = 0; j < sz; ++j) {
        gin(0)[j] += g[j];
        gin(1)[j] -= g[j];
      }
      break;
    case Op::kMul:
      for (std::size_t j = 0; j < sz; ++j) {
        gin(0)[j] += g[j] * in(1)[j];
        gin(1)[j] += g[j] * in(0)[j];
      }
      break;
    case Op::kAddRow:
      for (std::size_t r = 0; r < n.rows; ++r)
        for (std::size_t c = 0; c < n.cols; ++c) {
          gin(0)(r, c) += g(r, c);
          gin(1)[c] += g(r, c);
        }
      break;
    case Op::kScale:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j] * n.scalar;
      break;
    case Op::kAddConst:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j];
      break;
    case Op::kMulConst:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j] * n.constant[j];
      break;
    case Op::kMulScalar: {
      const double s = in(1)[0];
      double gs = 0.0;
      for (std::size_t j = 0; j < sz; ++j) {
        gin(0)[j] += g[j] * s;
        gs += g[j] * in(0)[j];
      }
      gin(1)[0] += gs;
      break;
    }
    case Op::kAddScalar: {
      double gs = 0.0;
      for (std::size_t j = 0; j < sz; ++j) {
        gin(0)[j] += g[j];
        gs += g[j];
      }
      gin(1)[0] += gs;
      break;
    }
    case Op::kDivScalar: {
      const double s = in(1)[0];
      double gs = 0.0;
      for (std::size_t j = 0; j < sz; ++j) {
        gin(0)[j] += g[j] / s;
        gs -= g[j] * in(0)[j] / (s * s);
      }
      gin(1)[0] += gs;
      break;
    }
    case Op::kSigmoid:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j] * y[j] * (1.0 - y[j]);
      break;
    case Op::kTanh:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j] * (1.0 - y[j] * y[j]);
      break;
    case Op::kRelu:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += in(0)[j] > 0.0 ? g[j] : 0.0;
      break;
    case Op::kLog:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j] / in(0)[j];
      break;
    case Op::kExp:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j] * y[j];
      break;
    case Op::kLogSigmoid:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j] * socgen::sigmoid(-in(0)[j]);
      break;
    case Op::kSoftmaxRows:
      for (std::size_t r = 0; r < n.rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < n.cols; ++c) dot += g(r, c) * y(r, c);
        for (std::size_t c = 0; c < n.cols; ++c) gin(0)(r, c) += y(r, c) * (g(r, c) - dot);
      }
      break;
    case Op::kLogSoftmaxRows:
      for (std::size_t r = 0; r < n.rows; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < n.cols; ++c) total += g(r, c);
        for (std::size_t c = 0; c < n.cols; ++c) gin(0)(r, c) += g(r, c) - std::exp(y(r, c)) * total;
      }
      break;
    case Op::kGatherRows:
      for (std::size_t r = 0; r < n.rows; ++r) {
        auto dst = gin(0).row(n.index[r]);
        const auto src = g.row(r);
        for (std::size_t c = 0; c < n.cols; ++c) dst[c] += src[c];
      }
      break;
    case Op::kSegmentSum:
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        auto dst = gin(0).row(r);
        const auto src = g.row(n.index[r]);
        for (std::size_t c = 0; c < n.cols; ++c) dst[c] += src[c];
      }
      break;
    case Op::kScaleRows:
      for (std::size_t r = 0; r < n.rows; ++r)
        for (std::size_t c = 0; c < n.cols; ++c) gin(0)(r, c) += g(r, c) * n.weights[r];
      break;
    case Op::kAggregate:
      for (std::size_t r = 0; r < n.rows; ++r) {
        const auto src = g.row(r);
        auto self = gin(0).row(r);
        for (std::size_t c = 0; c < n.cols; ++c) self[c] += n.self_weights[r] * src[c];
        for (std::size_t p = n.offsets[r]; p < n.offsets[r + 1]; ++p) {
          auto dst = gin(0).row(n.index[p]);
          const double w = n.weights[p];
          for (std::size_t c = 0; c < n.cols; ++c) dst[c] += w * src[c];
        }
      }
      break;
    case Op::kRowDot:
      for (std::size_t r = 0; r < n.rows; ++r) {
        const auto a = in(0).row(r), b = in(1).row(r);
        auto ga = gin(0).row(r), gb = gin(1).row(r);
        for (std::size_t c = 0; c < a.size(); ++c) {
          ga[c] += g[r] * b[c];
          gb[c] += g[r] * a[c];
        }
      }
      break;
    case Op::kRowSum:
      for (std::size_t r = 0; r < n.rows; ++r)
        for (auto& v : gin(0).row(r)) v += g[r];
      break;
    case Op::kSum:
      for (auto& v : gin(0).data()) v += g[0];
      break;
    case Op::kMean: {
      const double share = g[0] / static_cast<double>(in(0).size());
      for (auto& v : gin(0).data()) v += share;
      break;
    }
    case Op::kSliceCols:
      for (std::size_t r = 0; r < n.rows; ++r)
        for (std::size_t c = 0; c < n.cols; ++c) gin(0)(r, n.begin + c) += g(r, c);
      break;
    case Op::kReshape:
      for (std::size_t j = 0; j < sz; ++j) gin(0)[j] += g[j];
      break;
    case Op::kConcatCols: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        Tensor& part = gin(k);
        for (std::size_t r = 0; r < n.rows; ++r)
          for (std::size_t c = 0; c < part.cols(); ++c) part(r, c) += g(r, offset + c);
        offset += part.cols();
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------

AdamState::AdamState(AdamConfig config, std::span<const Tensor> params) : config_(config) {
  if (!(config.beta1 > 0 && config.beta1 < 1 && config.beta2 > 0 && config.beta2 < 1))
    fail(Errc::kValueError, "Adam betas must lie in (0, 1)");
  if (!(config.learning_rate > 0) || !(config.epsilon > 0))
    fail(Errc::kValueError, "Adam learning rate and epsilon must be positive");
  for (const auto& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void AdamState::step(std::span<Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    fail(Errc::kDimensionError, "Adam parameter count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k)
    if (!params[k].same_shape(m_[k]) || !grads[k].same_shape(m_[k]))
      fail(Errc::kDimensionError, "Adam parameter " + std::to_string(k) + " shape mismatch");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    const auto& g = grads[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace socgen
