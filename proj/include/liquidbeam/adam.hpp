#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "liquidbeam/complex_matrix.hpp"
#include "liquidbeam/errors.hpp"
#include "liquidbeam/liquid.hpp"

namespace lb {

/// Standard Adam over the paired-real view of the parameter tensors: the
/// real and imaginary planes are updated as independent coordinates.
struct AdamState {
  double alpha = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<ComplexMatrix> m;
  std::vector<ComplexMatrix> v;

  void init(const std::vector<ParamRef>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.tensor->rows(), p.tensor->cols());
      v.emplace_back(p.tensor->rows(), p.tensor->cols());
    }
  }
};

/// One minimization step. Gradients must align with `params`; non-finite
/// entries raise GradientExplosionError naming the offending tensor.
inline void adam_step(AdamState& state, const std::vector<ParamRef>& params,
                      const std::vector<ComplexMatrix>& grads) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw ContractViolation("adam_step: parameter/gradient/moment count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!grads[i].all_finite()) throw GradientExplosionError(params[i].name);

  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto update_plane = [&](std::vector<double>& theta, std::vector<double>& m,
                            std::vector<double>& v, const std::vector<double>& g) {
      for (std::size_t e = 0; e < theta.size(); ++e) {
        m[e] = state.beta1 * m[e] + (1.0 - state.beta1) * g[e];
        v[e] = state.beta2 * v[e] + (1.0 - state.beta2) * g[e] * g[e];
        const double m_hat = m[e] / c1;
        const double v_hat = v[e] / c2;
        theta[e] -= state.alpha * m_hat / (std::sqrt(v_hat) + state.epsilon);
      }
    };
    update_plane(params[i].tensor->re_data(), state.m[i].re_data(), state.v[i].re_data(),
                 grads[i].re_data());
    update_plane(params[i].tensor->im_data(), state.m[i].im_data(), state.v[i].im_data(),
                 grads[i].im_data());
  }
}

}  // namespace lb
