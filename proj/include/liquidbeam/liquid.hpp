#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "liquidbeam/autodiff.hpp"
#include "liquidbeam/complex_matrix.hpp"
#include "liquidbeam/errors.hpp"
#include "liquidbeam/rng.hpp"

namespace lb {

/// Trainable parameters of one liquid layer: three affine heads f, g, h over
/// the concatenated (previous hidden state, input) features. All real.
struct LiquidLayerParams {
  std::size_t neurons = 0;      // D
  std::size_t in_features = 0;  // C
  ComplexMatrix w_f, b_f;       // D x (D+C), 1 x D
  ComplexMatrix w_g, b_g;
  ComplexMatrix w_h, b_h;
};

/// Glorot-style uniform init over fan-in D+C and fan-out D; biases zero
/// except the f head, whose +1 bias starts gates near sigma(-1) so both
/// branches mix at step 0.
inline LiquidLayerParams init_layer_params(std::size_t neurons, std::size_t in_features,
                                           CounterRng& rng) {
  LiquidLayerParams p;
  p.neurons = neurons;
  p.in_features = in_features;
  const std::size_t fan = neurons + in_features + neurons;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan));
  auto init_weight = [&] {
    ComplexMatrix w(neurons, neurons + in_features);
    for (auto& x : w.re_data()) x = rng.uniform(-bound, bound);
    return w;
  };
  p.w_f = init_weight();
  p.w_g = init_weight();
  p.w_h = init_weight();
  p.b_f = ComplexMatrix::constant(1, neurons, 1.0);
  p.b_g = ComplexMatrix(1, neurons);
  p.b_h = ComplexMatrix(1, neurons);
  return p;
}

namespace detail {

inline ComplexMatrix affine_forward(const ComplexMatrix& w, const ComplexMatrix& z,
                                    const ComplexMatrix& b) {
  ComplexMatrix out = matmul(z, transpose(w));
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) {
      out.re(i, j) += b.re(0, j);
      out.im(i, j) += b.im(0, j);
    }
  return out;
}

inline ComplexMatrix tanh_elementwise(const ComplexMatrix& a) {
  ComplexMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.re_data()[i] = std::tanh(a.re_data()[i]);
  return out;
}

inline ComplexMatrix concat_cols(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) c.re(i, j) = a.re(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) c.re(i, a.cols() + j) = b.re(i, j);
  }
  return c;
}

}  // namespace detail

/// One closed-form continuous-time cell update. The new hidden state is
/// sigma(-f(z) t) .* g(z) + (1 - sigma(-f(z) t)) .* h(z) with z the row-wise
/// concatenation (p_prev | input); f is a raw affine head, g and h are
/// tanh-squashed. Evaluated as h + gate .* (g - h), the same association the
/// graph twin records.
inline ComplexMatrix cell_forward(const LiquidLayerParams& params, const ComplexMatrix& p_prev,
                                  const ComplexMatrix& input, double t_elapsed) {
  if (!(t_elapsed > 0.0)) throw ContractViolation("cell_forward: t_elapsed must be > 0");
  if (p_prev.cols() != params.neurons)
    throw DimensionError("cell_forward: hidden state is " + p_prev.shape_str() + ", layer has " +
                         std::to_string(params.neurons) + " neurons");
  if (input.cols() != params.in_features)
    throw DimensionError("cell_forward: input is " + input.shape_str() + ", layer expects " +
                         std::to_string(params.in_features) + " features");
  if (input.rows() != p_prev.rows())
    throw DimensionError("cell_forward: batch mismatch, state " + p_prev.shape_str() +
                         " vs input " + input.shape_str());

  const ComplexMatrix z = detail::concat_cols(p_prev, input);
  const ComplexMatrix f = detail::affine_forward(params.w_f, z, params.b_f);
  const ComplexMatrix g = detail::tanh_elementwise(detail::affine_forward(params.w_g, z, params.b_g));
  const ComplexMatrix h = detail::tanh_elementwise(detail::affine_forward(params.w_h, z, params.b_h));

  ComplexMatrix out(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double gate = 1.0 / (1.0 + std::exp(-(-t_elapsed * f.re_data()[i])));
    out.re_data()[i] = h.re_data()[i] + gate * (g.re_data()[i] - h.re_data()[i]);
  }
  return out;
}

/// Three liquid layers (interneurons -> command -> motor) with persistent
/// row-wise hidden states. Input and output are batch x 2K real matrices.
struct LiquidStack {
  std::array<LiquidLayerParams, 3> layers;
  std::array<ComplexMatrix, 3> state;
  double t_elapsed = 1.0;

  static constexpr std::array<const char*, 3> kLayerNames{"interneurons", "command", "motor"};

  std::size_t batch() const { return state[0].rows(); }

  void reset_state(std::size_t batch_rows) {
    for (std::size_t i = 0; i < 3; ++i)
      state[i] = ComplexMatrix(batch_rows, layers[i].neurons);
  }
};

/// Fresh stack for gradients of size batch x 2K.
inline LiquidStack init_stack(std::size_t num_users, std::size_t command_neurons,
                              std::size_t batch_rows, CounterRng& rng, double t_elapsed = 1.0) {
  const std::size_t io = 2 * num_users;
  LiquidStack s;
  s.layers[0] = init_layer_params(io, io, rng);
  s.layers[1] = init_layer_params(command_neurons, io, rng);
  s.layers[2] = init_layer_params(io, command_neurons, rng);
  s.t_elapsed = t_elapsed;
  s.reset_state(batch_rows);
  return s;
}

/// Run the stack on one gradient batch. With update_state the hidden state of
/// every layer is replaced by its output (the live recurrence); without it
/// the call is pure (for testing).
inline ComplexMatrix stack_forward(LiquidStack& stack, const ComplexMatrix& input,
                                   bool update_state = true) {
  if (stack.state[0].rows() != input.rows())
    throw StateShapeError("stack_forward: state batch " +
                          std::to_string(stack.state[0].rows()) + " vs input batch " +
                          std::to_string(input.rows()) + "; reset_state on batch change");
  ComplexMatrix x = input;
  for (std::size_t i = 0; i < 3; ++i) {
    ComplexMatrix out = cell_forward(stack.layers[i], stack.state[i], x, stack.t_elapsed);
    if (update_state) stack.state[i] = out;
    x = std::move(out);
  }
  return x;
}

/// Named views over the 18 trainable tensors, in a fixed order shared by the
/// Adam state, the graph builder and the checkpoint format.
struct ParamRef {
  std::string name;
  ComplexMatrix* tensor;
};

inline std::vector<ParamRef> param_refs(LiquidStack& stack) {
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string base = LiquidStack::kLayerNames[i];
    LiquidLayerParams& l = stack.layers[i];
    refs.push_back({base + ".f.weight", &l.w_f});
    refs.push_back({base + ".f.bias", &l.b_f});
    refs.push_back({base + ".g.weight", &l.w_g});
    refs.push_back({base + ".g.bias", &l.b_g});
    refs.push_back({base + ".h.weight", &l.w_h});
    refs.push_back({base + ".h.bias", &l.b_h});
  }
  return refs;
}

/// Graph twin of stack_forward over given previous states. Parameters become
/// trainable real leaves; returns the motor output node and the leaf ids
/// aligned with param_refs order.
inline VarId build_stack_graph(Graph& g, const LiquidStack& stack,
                               const std::array<ComplexMatrix, 3>& prev_state, VarId input,
                               std::vector<std::pair<std::string, VarId>>& param_leaves) {
  VarId x = input;
  for (std::size_t i = 0; i < 3; ++i) {
    const LiquidLayerParams& l = stack.layers[i];
    const std::string base = LiquidStack::kLayerNames[i];
    VarId wf = g.leaf(l.w_f, true, true);
    VarId bf = g.leaf(l.b_f, true, true);
    VarId wg = g.leaf(l.w_g, true, true);
    VarId bg = g.leaf(l.b_g, true, true);
    VarId wh = g.leaf(l.w_h, true, true);
    VarId bh = g.leaf(l.b_h, true, true);
    param_leaves.emplace_back(base + ".f.weight", wf);
    param_leaves.emplace_back(base + ".f.bias", bf);
    param_leaves.emplace_back(base + ".g.weight", wg);
    param_leaves.emplace_back(base + ".g.bias", bg);
    param_leaves.emplace_back(base + ".h.weight", wh);
    param_leaves.emplace_back(base + ".h.bias", bh);

    VarId p_prev = g.real_constant(prev_state[i]);
    VarId z = g.concat_columns(p_prev, x);
    VarId f = g.affine(wf, z, bf);
    VarId gate = g.sigmoid(g.scalar_scale(f, std::complex<double>{-stack.t_elapsed, 0.0}));
    VarId g_out = g.tanh(g.affine(wg, z, bg));
    VarId h_out = g.tanh(g.affine(wh, z, bh));
    x = g.add(h_out, g.hadamard(gate, g.subtract(g_out, h_out)));
  }
  return x;
}

}  // namespace lb
