#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "liquidbeam/complex_matrix.hpp"
#include "liquidbeam/errors.hpp"

namespace lb {

/// Operation kinds supported by the tape. Every kind has a forward rule and
/// an adjoint rule under the paired-real gradient convention
/// G = dL/dRe(node) + i * dL/dIm(node).
enum class OpKind : std::uint8_t {
  kLeaf,
  kAdd,
  kSubtract,
  kScalarScale,      // by a constant attribute, or by a 1x1 node input
  kHadamard,
  kMatmul,
  kHermitianTranspose,
  kTraceReal,
  kFrobeniusNormSquared,
  kInverseHpd,
  kLogdetHpd,
  kLog2Scalar,
  kReluScalar,
  kSigmoidElementwise,
  kTanhElementwise,
  kVarianceOfVector,
  kSqrtScalar,
  kConcatColumns,
  kSplitRealImag,
  kJoinRealImag,
  kAffine,           // inputs (weight DxF, input batchxF, bias 1xD)
};

/// Handle to a node of an AutodiffGraph.
struct VarId {
  std::uint32_t index = UINT32_MAX;
  bool valid() const noexcept { return index != UINT32_MAX; }
  friend bool operator==(VarId a, VarId b) noexcept { return a.index == b.index; }
};

/// Per-leaf gradients produced by a reverse sweep.
class GradientMap {
 public:
  void insert(VarId id, ComplexMatrix g) { grads_.emplace(id.index, std::move(g)); }

  bool contains(VarId id) const { return grads_.count(id.index) != 0; }

  const ComplexMatrix& at(VarId id) const {
    auto it = grads_.find(id.index);
    if (it == grads_.end())
      throw GraphIntegrityError("GradientMap: VarId " + std::to_string(id.index) +
                                " is not a leaf of the swept graph");
    return it->second;
  }

  std::size_t size() const noexcept { return grads_.size(); }

 private:
  std::unordered_map<std::uint32_t, ComplexMatrix> grads_;
};

/// Recorded computation over complex-matrix and real-scalar nodes. Nodes are
/// appended in topological order and forward values are cached at record
/// time; the tape is rebuilt per optimization step rather than reused.
/// A graph is confined to one thread of execution.
class Graph {
 public:
  /// New leaf holding `value`. `trainable` marks parameters (as opposed to
  /// constant inputs); both kinds receive gradients from backward().
  /// `real_valued` pins the imaginary part to zero for gradient purposes.
  VarId leaf(ComplexMatrix value, bool trainable, bool real_valued = false) {
    Node n;
    n.kind = OpKind::kLeaf;
    n.value = std::move(value);
    n.trainable = trainable;
    n.real_valued = real_valued;
    return push(std::move(n));
  }

  /// Constant (non-trainable) complex input.
  VarId constant(ComplexMatrix value) { return leaf(std::move(value), false, false); }

  /// Constant real-valued input (imaginary part pinned to zero).
  VarId real_constant(ComplexMatrix value) { return leaf(std::move(value), false, true); }

  std::size_t node_count() const noexcept { return nodes_.size(); }

  const ComplexMatrix& value(VarId id) const { return node(id).value; }

  bool is_real_valued(VarId id) const { return node(id).real_valued; }

  bool is_leaf(VarId id) const { return node(id).kind == OpKind::kLeaf; }

  /// Generic recorder: validates shapes, computes the forward value, appends
  /// the node. `scalar_attr` is only read by kScalarScale's constant form.
  VarId record(OpKind kind, const std::vector<VarId>& inputs,
               std::complex<double> scalar_attr = {0.0, 0.0}) {
    switch (kind) {
      case OpKind::kAdd:          return binary_elementwise(kind, inputs);
      case OpKind::kSubtract:     return binary_elementwise(kind, inputs);
      case OpKind::kScalarScale:  return record_scalar_scale(inputs, scalar_attr);
      case OpKind::kHadamard:     return binary_elementwise(kind, inputs);
      case OpKind::kMatmul:       return record_matmul(inputs);
      case OpKind::kHermitianTranspose: return record_hermitian(inputs);
      case OpKind::kTraceReal:    return record_trace_real(inputs);
      case OpKind::kFrobeniusNormSquared: return record_frobenius(inputs);
      case OpKind::kInverseHpd:   return record_inverse_hpd(inputs);
      case OpKind::kLogdetHpd:    return record_logdet_hpd(inputs);
      case OpKind::kLog2Scalar:   return record_real_scalar_fn(kind, inputs);
      case OpKind::kReluScalar:   return record_real_scalar_fn(kind, inputs);
      case OpKind::kSigmoidElementwise: return record_real_elementwise(kind, inputs);
      case OpKind::kTanhElementwise:    return record_real_elementwise(kind, inputs);
      case OpKind::kVarianceOfVector:   return record_variance(inputs);
      case OpKind::kSqrtScalar:   return record_real_scalar_fn(kind, inputs);
      case OpKind::kConcatColumns:      return record_concat_columns(inputs);
      case OpKind::kSplitRealImag:      return record_split_real_imag(inputs);
      case OpKind::kJoinRealImag:       return record_join_real_imag(inputs);
      case OpKind::kAffine:       return record_affine(inputs);
      case OpKind::kLeaf:
        throw GraphIntegrityError("record: leaves are created with leaf(), not record()");
    }
    throw GraphIntegrityError("record: unknown op kind");
  }

  // Typed helpers.
  VarId add(VarId a, VarId b) { return record(OpKind::kAdd, {a, b}); }
  VarId subtract(VarId a, VarId b) { return record(OpKind::kSubtract, {a, b}); }
  VarId scalar_scale(VarId a, std::complex<double> s) {
    return record(OpKind::kScalarScale, {a}, s);
  }
  VarId scalar_scale(VarId a, VarId scalar_node) {
    return record(OpKind::kScalarScale, {a, scalar_node});
  }
  VarId hadamard(VarId a, VarId b) { return record(OpKind::kHadamard, {a, b}); }
  VarId matmul(VarId a, VarId b) { return record(OpKind::kMatmul, {a, b}); }
  VarId hermitian_transpose(VarId a) { return record(OpKind::kHermitianTranspose, {a}); }
  VarId trace_real(VarId a) { return record(OpKind::kTraceReal, {a}); }
  VarId frobenius_norm_squared(VarId a) { return record(OpKind::kFrobeniusNormSquared, {a}); }
  VarId inverse_hpd(VarId a) { return record(OpKind::kInverseHpd, {a}); }
  VarId logdet_hpd(VarId a) { return record(OpKind::kLogdetHpd, {a}); }
  VarId log2_scalar(VarId a) { return record(OpKind::kLog2Scalar, {a}); }
  VarId relu_scalar(VarId a) { return record(OpKind::kReluScalar, {a}); }
  VarId sigmoid(VarId a) { return record(OpKind::kSigmoidElementwise, {a}); }
  VarId tanh(VarId a) { return record(OpKind::kTanhElementwise, {a}); }
  VarId variance_of_vector(VarId a) { return record(OpKind::kVarianceOfVector, {a}); }
  VarId sqrt_scalar(VarId a) { return record(OpKind::kSqrtScalar, {a}); }
  VarId concat_columns(VarId a, VarId b) { return record(OpKind::kConcatColumns, {a, b}); }
  VarId split_real_imag(VarId a) { return record(OpKind::kSplitRealImag, {a}); }
  VarId join_real_imag(VarId a) { return record(OpKind::kJoinRealImag, {a}); }
  VarId affine(VarId weight, VarId input, VarId bias) {
    return record(OpKind::kAffine, {weight, input, bias});
  }

  /// Reverse sweep from a real scalar root. Returns the paired-real gradient
  /// for every leaf (trainable and constant alike); non-leaf adjoints are
  /// discarded.
  GradientMap backward(VarId root) const {
    const Node& r = node(root);
    if (r.value.rows() != 1 || r.value.cols() != 1 || !r.real_valued)
      throw ContractViolation("backward: root must be a real scalar node, got " +
                              r.value.shape_str() + (r.real_valued ? "" : " (complex)"));

    std::vector<ComplexMatrix> adj(root.index + 1);
    std::vector<bool> touched(root.index + 1, false);
    adj[root.index] = ComplexMatrix::real_scalar(1.0);
    touched[root.index] = true;

    for (std::uint32_t i = root.index + 1; i-- > 0;) {
      if (!touched[i]) continue;
      const Node& n = nodes_[i];
      // The imaginary part of a real-valued node is identically zero, so
      // adjoint contributions through it must not propagate.
      if (n.real_valued)
        for (auto& y : adj[i].im_data()) y = 0.0;
      if (n.kind != OpKind::kLeaf) propagate(n, adj[i], adj, touched);
    }

    GradientMap grads;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (n.kind != OpKind::kLeaf) continue;
      if (i <= root.index && touched[i])
        grads.insert(VarId{i}, std::move(adj[i]));
      else
        grads.insert(VarId{i}, ComplexMatrix::zeros(n.value.rows(), n.value.cols()));
    }
    return grads;
  }

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::array<std::uint32_t, 3> in{};
    std::uint8_t n_in = 0;
    ComplexMatrix value;
    std::complex<double> scalar_attr{0.0, 0.0};
    bool scale_by_node = false;
    bool real_valued = false;
    bool trainable = false;
  };

  const Node& node(VarId id) const {
    if (id.index >= nodes_.size())
      throw GraphIntegrityError("unknown VarId " + std::to_string(id.index));
    return nodes_[id.index];
  }

  VarId push(Node n) {
    nodes_.push_back(std::move(n));
    return VarId{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Node make_node(OpKind kind, const std::vector<VarId>& inputs) const {
    Node n;
    n.kind = kind;
    if (inputs.size() > 3) throw GraphIntegrityError("record: too many inputs");
    n.n_in = static_cast<std::uint8_t>(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      node(inputs[i]);  // validates the id
      n.in[i] = inputs[i].index;
    }
    return n;
  }

  const ComplexMatrix& in_value(const Node& n, int i) const { return nodes_[n.in[i]].value; }
  bool in_real(const Node& n, int i) const { return nodes_[n.in[i]].real_valued; }

  static void require_arity(const std::vector<VarId>& inputs, std::size_t k, const char* op) {
    if (inputs.size() != k)
      throw GraphIntegrityError(std::string(op) + ": expects " + std::to_string(k) +
                                " inputs, got " + std::to_string(inputs.size()));
  }

  void require_real_input(const Node& n, int i, const char* op) const {
    if (!in_real(n, i))
      throw ContractViolation(std::string(op) + ": input must be a real-valued node");
  }

  VarId binary_elementwise(OpKind kind, const std::vector<VarId>& inputs) {
    require_arity(inputs, 2, "add/subtract/hadamard");
    Node n = make_node(kind, inputs);
    const ComplexMatrix& a = in_value(n, 0);
    const ComplexMatrix& b = in_value(n, 1);
    switch (kind) {
      case OpKind::kAdd:      n.value = lb::add(a, b); break;
      case OpKind::kSubtract: n.value = lb::subtract(a, b); break;
      default:                n.value = lb::hadamard(a, b); break;
    }
    n.real_valued = in_real(n, 0) && in_real(n, 1);
    return push(std::move(n));
  }

  VarId record_scalar_scale(const std::vector<VarId>& inputs, std::complex<double> s) {
    if (inputs.size() != 1 && inputs.size() != 2)
      throw GraphIntegrityError("scalar-scale: expects 1 input (constant form) or 2 (node form)");
    Node n = make_node(OpKind::kScalarScale, inputs);
    if (inputs.size() == 2) {
      const ComplexMatrix& sv = in_value(n, 1);
      if (sv.rows() != 1 || sv.cols() != 1)
        throw DimensionError("scalar-scale: scale node must be 1x1, got " + sv.shape_str());
      n.scale_by_node = true;
      s = sv.at(0, 0);
    } else {
      n.scalar_attr = s;
    }
    n.value = lb::scale(in_value(n, 0), s);
    n.real_valued = in_real(n, 0) && s.imag() == 0.0 &&
                    (!n.scale_by_node || in_real(n, 1));
    return push(std::move(n));
  }

  VarId record_matmul(const std::vector<VarId>& inputs) {
    require_arity(inputs, 2, "matmul");
    Node n = make_node(OpKind::kMatmul, inputs);
    n.value = lb::matmul(in_value(n, 0), in_value(n, 1));
    n.real_valued = in_real(n, 0) && in_real(n, 1);
    return push(std::move(n));
  }

  VarId record_hermitian(const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "hermitian-transpose");
    Node n = make_node(OpKind::kHermitianTranspose, inputs);
    n.value = lb::hermitian(in_value(n, 0));
    n.real_valued = in_real(n, 0);
    return push(std::move(n));
  }

  VarId record_trace_real(const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "trace-real");
    Node n = make_node(OpKind::kTraceReal, inputs);
    n.value = ComplexMatrix::real_scalar(lb::trace_real(in_value(n, 0)));
    n.real_valued = true;
    return push(std::move(n));
  }

  VarId record_frobenius(const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "frobenius-norm-squared");
    Node n = make_node(OpKind::kFrobeniusNormSquared, inputs);
    n.value = ComplexMatrix::real_scalar(lb::frobenius_norm_squared(in_value(n, 0)));
    n.real_valued = true;
    return push(std::move(n));
  }

  VarId record_inverse_hpd(const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "inverse_hpd");
    Node n = make_node(OpKind::kInverseHpd, inputs);
    n.value = lb::inverse_hpd(in_value(n, 0));
    n.real_valued = in_real(n, 0);
    return push(std::move(n));
  }

  VarId record_logdet_hpd(const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "logdet_hpd");
    Node n = make_node(OpKind::kLogdetHpd, inputs);
    n.value = ComplexMatrix::real_scalar(lb::logdet_hpd(in_value(n, 0)));
    n.real_valued = true;
    return push(std::move(n));
  }

  VarId record_real_scalar_fn(OpKind kind, const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "real scalar function");
    Node n = make_node(kind, inputs);
    const ComplexMatrix& a = in_value(n, 0);
    if (a.rows() != 1 || a.cols() != 1)
      throw DimensionError("real scalar op: input must be 1x1, got " + a.shape_str());
    require_real_input(n, 0, "real scalar op");
    const double x = a.re(0, 0);
    double y = 0.0;
    switch (kind) {
      case OpKind::kLog2Scalar:
        if (!(x > 0.0)) throw ContractViolation("log2-scalar: input must be positive");
        y = std::log2(x);
        break;
      case OpKind::kReluScalar:
        y = x > 0.0 ? x : 0.0;
        break;
      case OpKind::kSqrtScalar:
        if (!(x > 0.0)) throw ContractViolation("sqrt-scalar: input must be positive");
        y = std::sqrt(x);
        break;
      default:
        throw GraphIntegrityError("record_real_scalar_fn: bad kind");
    }
    n.value = ComplexMatrix::real_scalar(y);
    n.real_valued = true;
    return push(std::move(n));
  }

  VarId record_real_elementwise(OpKind kind, const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "elementwise nonlinearity");
    Node n = make_node(kind, inputs);
    require_real_input(n, 0, "elementwise nonlinearity");
    const ComplexMatrix& a = in_value(n, 0);
    ComplexMatrix y(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double x = a.re_data()[i];
      y.re_data()[i] = (kind == OpKind::kSigmoidElementwise) ? 1.0 / (1.0 + std::exp(-x))
                                                             : std::tanh(x);
    }
    n.value = std::move(y);
    n.real_valued = true;
    return push(std::move(n));
  }

  VarId record_variance(const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "variance-of-vector");
    Node n = make_node(OpKind::kVarianceOfVector, inputs);
    require_real_input(n, 0, "variance-of-vector");
    const ComplexMatrix& a = in_value(n, 0);
    if (a.rows() != 1 && a.cols() != 1)
      throw DimensionError("variance-of-vector: input must be a vector, got " + a.shape_str());
    const std::size_t k = a.size();
    double mean = 0.0;
    for (double x : a.re_data()) mean += x;
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (double x : a.re_data()) var += (x - mean) * (x - mean);
    var /= static_cast<double>(k);
    n.value = ComplexMatrix::real_scalar(var);
    n.real_valued = true;
    return push(std::move(n));
  }

  VarId record_concat_columns(const std::vector<VarId>& inputs) {
    require_arity(inputs, 2, "concat-columns");
    Node n = make_node(OpKind::kConcatColumns, inputs);
    const ComplexMatrix& a = in_value(n, 0);
    const ComplexMatrix& b = in_value(n, 1);
    if (a.rows() != b.rows())
      throw DimensionError("concat-columns: row counts differ, " + a.shape_str() + " vs " +
                           b.shape_str());
    ComplexMatrix c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) {
        c.re(i, j) = a.re(i, j);
        c.im(i, j) = a.im(i, j);
      }
      for (std::size_t j = 0; j < b.cols(); ++j) {
        c.re(i, a.cols() + j) = b.re(i, j);
        c.im(i, a.cols() + j) = b.im(i, j);
      }
    }
    n.value = std::move(c);
    n.real_valued = in_real(n, 0) && in_real(n, 1);
    return push(std::move(n));
  }

  VarId record_split_real_imag(const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "split-real-imag");
    Node n = make_node(OpKind::kSplitRealImag, inputs);
    const ComplexMatrix& a = in_value(n, 0);
    ComplexMatrix c(a.rows(), 2 * a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) {
        c.re(i, j) = a.re(i, j);
        c.re(i, a.cols() + j) = a.im(i, j);
      }
    n.value = std::move(c);
    n.real_valued = true;
    return push(std::move(n));
  }

  VarId record_join_real_imag(const std::vector<VarId>& inputs) {
    require_arity(inputs, 1, "join-real-imag");
    Node n = make_node(OpKind::kJoinRealImag, inputs);
    require_real_input(n, 0, "join-real-imag");
    const ComplexMatrix& a = in_value(n, 0);
    if (a.cols() % 2 != 0)
      throw DimensionError("join-real-imag: column count must be even, got " + a.shape_str());
    const std::size_t half = a.cols() / 2;
    ComplexMatrix c(a.rows(), half);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < half; ++j) {
        c.re(i, j) = a.re(i, j);
        c.im(i, j) = a.re(i, half + j);
      }
    n.value = std::move(c);
    n.real_valued = false;
    return push(std::move(n));
  }

  VarId record_affine(const std::vector<VarId>& inputs) {
    require_arity(inputs, 3, "affine");
    Node n = make_node(OpKind::kAffine, inputs);
    const ComplexMatrix& w = in_value(n, 0);  // D x F
    const ComplexMatrix& z = in_value(n, 1);  // batch x F
    const ComplexMatrix& b = in_value(n, 2);  // 1 x D
    if (z.cols() != w.cols())
      throw DimensionError("affine: input features " + z.shape_str() + " vs weight " +
                           w.shape_str());
    if (b.rows() != 1 || b.cols() != w.rows())
      throw DimensionError("affine: bias must be 1x" + std::to_string(w.rows()) + ", got " +
                           b.shape_str());
    ComplexMatrix c = lb::matmul(z, lb::transpose(w));
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t j = 0; j < c.cols(); ++j) {
        c.re(i, j) += b.re(0, j);
        c.im(i, j) += b.im(0, j);
      }
    n.value = std::move(c);
    n.real_valued = in_real(n, 0) && in_real(n, 1) && in_real(n, 2);
    return push(std::move(n));
  }

  // ---- adjoint rules ----

  static void accumulate(std::vector<ComplexMatrix>& adj, std::vector<bool>& touched,
                         std::uint32_t idx, const ComplexMatrix& shape_like,
                         const ComplexMatrix& contribution) {
    if (!touched[idx]) {
      adj[idx] = ComplexMatrix::zeros(shape_like.rows(), shape_like.cols());
      touched[idx] = true;
    }
    ComplexMatrix& g = adj[idx];
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.re_data()[i] += contribution.re_data()[i];
      g.im_data()[i] += contribution.im_data()[i];
    }
  }

  void propagate(const Node& n, const ComplexMatrix& g,
                 std::vector<ComplexMatrix>& adj, std::vector<bool>& touched) const {
    auto acc = [&](int i, const ComplexMatrix& contribution) {
      accumulate(adj, touched, n.in[i], in_value(n, i), contribution);
    };
    switch (n.kind) {
      case OpKind::kAdd:
        acc(0, g);
        acc(1, g);
        break;
      case OpKind::kSubtract:
        acc(0, g);
        acc(1, lb::scale(g, -1.0));
        break;
      case OpKind::kScalarScale: {
        const std::complex<double> s =
            n.scale_by_node ? in_value(n, 1).at(0, 0) : n.scalar_attr;
        acc(0, lb::scale(g, std::conj(s)));
        if (n.scale_by_node) {
          // dL/ds = sum conj(A) .* G
          const ComplexMatrix& a = in_value(n, 0);
          std::complex<double> gs{0.0, 0.0};
          for (std::size_t i = 0; i < a.size(); ++i) {
            const std::complex<double> av{a.re_data()[i], -a.im_data()[i]};
            const std::complex<double> gv{g.re_data()[i], g.im_data()[i]};
            gs += av * gv;
          }
          ComplexMatrix gm(1, 1);
          gm.set(0, 0, gs);
          acc(1, gm);
        }
        break;
      }
      case OpKind::kHadamard:
        acc(0, lb::hadamard(lb::conjugate(in_value(n, 1)), g));
        acc(1, lb::hadamard(lb::conjugate(in_value(n, 0)), g));
        break;
      case OpKind::kMatmul:
        acc(0, lb::matmul(g, lb::hermitian(in_value(n, 1))));
        acc(1, lb::matmul(lb::hermitian(in_value(n, 0)), g));
        break;
      case OpKind::kHermitianTranspose:
        acc(0, lb::hermitian(g));
        break;
      case OpKind::kTraceReal: {
        const ComplexMatrix& a = in_value(n, 0);
        ComplexMatrix c = ComplexMatrix::scaled_identity(a.rows(), g.re(0, 0));
        acc(0, c);
        break;
      }
      case OpKind::kFrobeniusNormSquared:
        acc(0, lb::scale(in_value(n, 0), 2.0 * g.re(0, 0)));
        break;
      case OpKind::kInverseHpd: {
        // dA = -C^H G C^H with C = A^{-1} (Hermitian here).
        const ComplexMatrix ch = lb::hermitian(n.value);
        acc(0, lb::scale(lb::matmul(lb::matmul(ch, g), ch), -1.0));
        break;
      }
      case OpKind::kLogdetHpd: {
        ComplexMatrix inv = lb::inverse_hpd(in_value(n, 0));
        acc(0, lb::scale(inv, g.re(0, 0)));
        break;
      }
      case OpKind::kLog2Scalar: {
        const double x = in_value(n, 0).re(0, 0);
        acc(0, ComplexMatrix::real_scalar(g.re(0, 0) / (x * std::log(2.0))));
        break;
      }
      case OpKind::kReluScalar: {
        const double x = in_value(n, 0).re(0, 0);
        acc(0, ComplexMatrix::real_scalar(x > 0.0 ? g.re(0, 0) : 0.0));
        break;
      }
      case OpKind::kSigmoidElementwise: {
        const ComplexMatrix& y = n.value;
        ComplexMatrix c(y.rows(), y.cols());
        for (std::size_t i = 0; i < y.size(); ++i) {
          const double v = y.re_data()[i];
          c.re_data()[i] = g.re_data()[i] * v * (1.0 - v);
        }
        acc(0, c);
        break;
      }
      case OpKind::kTanhElementwise: {
        const ComplexMatrix& y = n.value;
        ComplexMatrix c(y.rows(), y.cols());
        for (std::size_t i = 0; i < y.size(); ++i) {
          const double v = y.re_data()[i];
          c.re_data()[i] = g.re_data()[i] * (1.0 - v * v);
        }
        acc(0, c);
        break;
      }
      case OpKind::kVarianceOfVector: {
        const ComplexMatrix& a = in_value(n, 0);
        const std::size_t k = a.size();
        double mean = 0.0;
        for (double x : a.re_data()) mean += x;
        mean /= static_cast<double>(k);
        ComplexMatrix c(a.rows(), a.cols());
        const double s = 2.0 * g.re(0, 0) / static_cast<double>(k);
        for (std::size_t i = 0; i < k; ++i)
          c.re_data()[i] = s * (a.re_data()[i] - mean);
        acc(0, c);
        break;
      }
      case OpKind::kSqrtScalar:
        acc(0, ComplexMatrix::real_scalar(g.re(0, 0) / (2.0 * n.value.re(0, 0))));
        break;
      case OpKind::kConcatColumns: {
        const ComplexMatrix& a = in_value(n, 0);
        const ComplexMatrix& b = in_value(n, 1);
        ComplexMatrix ga(a.rows(), a.cols());
        ComplexMatrix gb(b.rows(), b.cols());
        for (std::size_t i = 0; i < a.rows(); ++i) {
          for (std::size_t j = 0; j < a.cols(); ++j) {
            ga.re(i, j) = g.re(i, j);
            ga.im(i, j) = g.im(i, j);
          }
          for (std::size_t j = 0; j < b.cols(); ++j) {
            gb.re(i, j) = g.re(i, a.cols() + j);
            gb.im(i, j) = g.im(i, a.cols() + j);
          }
        }
        acc(0, ga);
        acc(1, gb);
        break;
      }
      case OpKind::kSplitRealImag: {
        const ComplexMatrix& a = in_value(n, 0);
        ComplexMatrix ga(a.rows(), a.cols());
        for (std::size_t i = 0; i < a.rows(); ++i)
          for (std::size_t j = 0; j < a.cols(); ++j) {
            ga.re(i, j) = g.re(i, j);
            ga.im(i, j) = g.re(i, a.cols() + j);
          }
        acc(0, ga);
        break;
      }
      case OpKind::kJoinRealImag: {
        const ComplexMatrix& a = in_value(n, 0);
        const std::size_t half = a.cols() / 2;
        ComplexMatrix ga(a.rows(), a.cols());
        for (std::size_t i = 0; i < a.rows(); ++i)
          for (std::size_t j = 0; j < half; ++j) {
            ga.re(i, j) = g.re(i, j);
            ga.re(i, half + j) = g.im(i, j);
          }
        acc(0, ga);
        break;
      }
      case OpKind::kAffine: {
        const ComplexMatrix& w = in_value(n, 0);
        const ComplexMatrix& z = in_value(n, 1);
        acc(1, lb::matmul(g, lb::conjugate(w)));
        acc(0, lb::matmul(lb::transpose(g), lb::conjugate(z)));
        ComplexMatrix gb(1, w.rows());
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) {
            gb.re(0, j) += g.re(i, j);
            gb.im(0, j) += g.im(i, j);
          }
        acc(2, gb);
        break;
      }
      case OpKind::kLeaf:
        break;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace lb
