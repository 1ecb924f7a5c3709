#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liquidbeam/adam.hpp"
#include "liquidbeam/autodiff.hpp"
#include "liquidbeam/channel.hpp"
#include "liquidbeam/complex_matrix.hpp"
#include "liquidbeam/errors.hpp"
#include "liquidbeam/liquid.hpp"
#include "liquidbeam/metrics.hpp"
#include "liquidbeam/rng.hpp"

namespace lb {

/// W = sqrt(P / Tr(H^H X (H^H X)^H)) * H^H X: the base matrix pushed through
/// the channel manifold and scaled to exact sum power.
inline ComplexMatrix power_normalize(const ComplexMatrix& h, const ComplexMatrix& x,
                                     double power_mw) {
  ComplexMatrix a = matmul(hermitian(h), x);
  const double t = frobenius_norm_squared(a);
  if (!(t > 0.0))
    throw DegenerateInputError("power_normalize: H^H X is zero or non-finite");
  return scale(a, std::sqrt(power_mw / t));
}

/// Graph twin of power_normalize. The 1/sqrt(trace) factor is built from
/// inverse_hpd on the positive 1x1 trace node followed by sqrt.
inline VarId build_power_normalize_graph(Graph& g, const ComplexMatrix& h, VarId x,
                                         double power_mw) {
  VarId hh = g.constant(hermitian(h));
  VarId a = g.matmul(hh, x);
  VarId t = g.frobenius_norm_squared(a);
  VarId s = g.sqrt_scalar(g.inverse_hpd(t));
  VarId unit = g.scalar_scale(a, s);
  return g.scalar_scale(unit, std::complex<double>{std::sqrt(power_mw), 0.0});
}

struct GlnnConfig {
  double learning_rate = 0.01;   // Adam alpha
  double beta = 0.3;             // fairness penalty rate
  double gamma = 0.7;            // incentive rate
  double lambda = 2.5;           // incentive threshold per user
  std::size_t inner_iterations = 3;   // N_e
  std::size_t warmup_samples = 500;   // N_r
  double sum_power_mw = 10.0;
  double noise_power_mw = 1.0;
  std::size_t command_neurons = 30;
  double cell_time_constant = 1.0;
  // Gradient features at the pinned base-matrix scale land around 1e-3 to
  // 1e-2, inside the liquid heads' linear dead zone; a constant lift keeps
  // the cells responsive. Exposed for experimentation.
  double gradient_input_scale = 10.0;

  void validate() const {
    if (inner_iterations < 1) throw ConfigError("glnn: inner_iterations must be >= 1");
    if (!(sum_power_mw > 0.0)) throw ConfigError("glnn: sum power must be > 0");
    if (!(noise_power_mw > 0.0)) throw ConfigError("glnn: noise power must be > 0");
    if (!(lambda > 0.0)) throw ConfigError("glnn: lambda must be > 0");
    if (beta < 0.0 || gamma < 0.0) throw ConfigError("glnn: beta/gamma must be >= 0");
    if (command_neurons < 1) throw ConfigError("glnn: command layer needs neurons");
    if (!(cell_time_constant > 0.0)) throw ConfigError("glnn: time constant must be > 0");
  }
};

struct StepResult {
  ComplexMatrix precoder;   // M x K, exact power
  RateReport report_true;   // rates on the true channel
  RateReport report_est;    // rates on the estimated channel
  double loss_est = 0.0;    // loss on the estimated channel
};

struct SlotRecord {
  std::size_t slot = 0;
  bool warmup = false;
  double rate_true = 0.0;
  double rate_est = 0.0;
  double loss = 0.0;
  std::vector<double> per_user;
  double wall_time_us = 0.0;
  std::uint64_t divergence_events = 0;
};

/// The online optimizer: base matrix X on the H^H manifold, a liquid stack
/// fed with loss gradients, and Adam over the stack parameters. X, hidden
/// states and Adam moments persist across samples; reset is explicit.
class GlnnRunner {
 public:
  GlnnRunner(GlnnConfig cfg, std::size_t n_rx, std::size_t num_users, std::uint64_t seed,
             std::vector<double> weights = {})
      : cfg_(cfg),
        n_rx_(n_rx),
        num_users_(num_users),
        weights_(std::move(weights)),
        reinit_rng_(CounterRng::keyed(seed, 0x6c62, 0)) {
    cfg_.validate();
    if (n_rx_ % num_users_ != 0)
      throw DimensionError("glnn: receive antennas do not split into user blocks");
    if (weights_.empty()) weights_.assign(num_users_, 1.0);
    if (weights_.size() != num_users_)
      throw DimensionError("glnn: weight count does not match user count");

    CounterRng init_rng = CounterRng::keyed(seed, 0x676c, 0);
    stack_ = init_stack(num_users_, cfg_.command_neurons, n_rx_, init_rng,
                        cfg_.cell_time_constant);
    adam_.alpha = cfg_.learning_rate;
    auto refs = param_refs(stack_);
    adam_.init(refs);
    draw_base_matrix(init_rng);
  }

  const GlnnConfig& config() const { return cfg_; }
  const ComplexMatrix& base_matrix() const { return x_; }
  std::uint64_t divergence_events() const { return divergence_events_; }
  std::uint64_t samples_seen() const { return samples_seen_; }

  /// Re-randomize X and zero the hidden states (parameters and Adam moments
  /// are kept). Used on divergence and exposed for scenario resets.
  void reset_base_matrix() {
    draw_base_matrix(reinit_rng_);
    stack_.reset_state(n_rx_);
  }

  /// One channel sample: N_e inner refinements of X, each feeding the loss
  /// gradient through the stack and one Adam update of the stack parameters,
  /// then the emitted precoder at exact power.
  StepResult step_sample(const ChannelSample& sample) {
    if (sample.h_est.rows() != n_rx_)
      throw DimensionError("glnn: sample has " + std::to_string(sample.h_est.rows()) +
                           " receive rows, runner expects " + std::to_string(n_rx_));

    for (std::size_t it = 0; it < cfg_.inner_iterations; ++it) {
      try {
        inner_iteration(sample.h_est);
      } catch (const DegenerateInputError&) {
        note_divergence();
      } catch (const ContractViolation&) {
        note_divergence();
      } catch (const SingularityError&) {
        note_divergence();
      } catch (const GradientExplosionError&) {
        note_divergence();
      }
    }

    StepResult result;
    try {
      result.precoder = power_normalize(sample.h_est, x_, cfg_.sum_power_mw);
    } catch (const DegenerateInputError&) {
      note_divergence();
      result.precoder = power_normalize(sample.h_est, x_, cfg_.sum_power_mw);
    }
    result.report_true = sum_se(sample.h_true, result.precoder, weights_, cfg_.noise_power_mw);
    result.report_est = sum_se(sample.h_est, result.precoder, weights_, cfg_.noise_power_mw);
    result.loss_est = loss(result.report_est, loss_params());
    ++samples_seen_;
    return result;
  }

  LossParams loss_params() const {
    LossParams p;
    p.beta = cfg_.beta;
    p.gamma = cfg_.gamma;
    p.lambda = cfg_.lambda;
    p.noise_power_mw = cfg_.noise_power_mw;
    p.num_users = num_users_;
    return p;
  }

  LiquidStack& stack() { return stack_; }
  AdamState& adam() { return adam_; }
  void set_base_matrix(ComplexMatrix x) { x_ = std::move(x); }
  void set_samples_seen(std::uint64_t n) { samples_seen_ = n; }

 private:
  void draw_base_matrix(CounterRng& rng) {
    x_ = rng.complex_gaussian_matrix(n_rx_, num_users_,
                                     1.0 / static_cast<double>(n_rx_));
  }

  void note_divergence() {
    ++divergence_events_;
    reset_base_matrix();
  }

  ComplexMatrix gradient_features(const ComplexMatrix& grad) const {
    ComplexMatrix feats(grad.rows(), 2 * grad.cols());
    const double s = cfg_.gradient_input_scale;
    for (std::size_t i = 0; i < grad.rows(); ++i)
      for (std::size_t j = 0; j < grad.cols(); ++j) {
        feats.re(i, j) = s * grad.re(i, j);
        feats.re(i, grad.cols() + j) = s * grad.im(i, j);
      }
    return feats;
  }

  static ComplexMatrix features_to_complex(const ComplexMatrix& feats) {
    const std::size_t half = feats.cols() / 2;
    ComplexMatrix x(feats.rows(), half);
    for (std::size_t i = 0; i < feats.rows(); ++i)
      for (std::size_t j = 0; j < half; ++j) {
        x.re(i, j) = feats.re(i, j);
        x.im(i, j) = feats.re(i, half + j);
      }
    return x;
  }

  void inner_iteration(const ComplexMatrix& h_est) {
    // The loss is scale-invariant in X (the power normalization divides it
    // out), so |X| is a neutral direction along which residual updates can
    // drift while the gradient signal decays as 1/|X|. Re-pinning X to its
    // initialization scale keeps the liquid network's input statistics
    // stationary and leaves every emitted precoder unchanged.
    const double x_norm = frobenius_norm(x_);
    if (x_norm > 0.0)
      x_ = scale(x_, std::sqrt(static_cast<double>(num_users_)) / x_norm);

    // Loss gradient at the current base matrix; the liquid input is detached
    // from this tape (first-order treatment, no second derivatives).
    Graph g1;
    VarId x1 = g1.leaf(x_, true);
    VarId w1 = build_power_normalize_graph(g1, h_est, x1, cfg_.sum_power_mw);
    RateGraphNodes rates1 = build_sum_se_graph(g1, h_est, w1, weights_, cfg_.noise_power_mw);
    VarId loss1 = build_loss_graph(g1, rates1, loss_params());
    ComplexMatrix grad_x = g1.backward(loss1).at(x1);
    if (!grad_x.all_finite())
      throw GradientExplosionError("glnn.base_matrix");

    const ComplexMatrix feats = gradient_features(grad_x);
    const std::array<ComplexMatrix, 3> prev_state = stack_.state;
    const ComplexMatrix delta_feats = stack_forward(stack_, feats, /*update_state=*/true);
    const ComplexMatrix x_old = x_;
    x_ = add(x_, features_to_complex(delta_feats));
    if (!x_.all_finite()) throw GradientExplosionError("glnn.base_matrix");

    // Rebuild from the new X down to the loss with the stack parameters as
    // leaves, then one Adam step on their gradients.
    Graph g2;
    std::vector<std::pair<std::string, VarId>> leaves;
    VarId fin = g2.real_constant(feats);
    VarId out = build_stack_graph(g2, stack_, prev_state, fin, leaves);
    VarId dx = g2.join_real_imag(out);
    VarId x2 = g2.add(g2.constant(x_old), dx);
    VarId w2 = build_power_normalize_graph(g2, h_est, x2, cfg_.sum_power_mw);
    RateGraphNodes rates2 = build_sum_se_graph(g2, h_est, w2, weights_, cfg_.noise_power_mw);
    VarId loss2 = build_loss_graph(g2, rates2, loss_params());
    GradientMap grads = g2.backward(loss2);

    auto refs = param_refs(stack_);
    std::vector<ComplexMatrix> grad_list;
    grad_list.reserve(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i)
      grad_list.push_back(grads.at(leaves[i].second));
    adam_step(adam_, refs, grad_list);
  }

  GlnnConfig cfg_;
  std::size_t n_rx_;
  std::size_t num_users_;
  std::vector<double> weights_;
  ComplexMatrix x_;
  LiquidStack stack_;
  AdamState adam_;
  CounterRng reinit_rng_;
  std::uint64_t samples_seen_ = 0;
  std::uint64_t divergence_events_ = 0;
};

/// Drive a runner across a sample stream, carrying all state slot to slot.
/// The first `runner.config().warmup_samples` records are flagged as warm-up
/// so downstream averaging can exclude them.
inline std::vector<SlotRecord> run_online(GlnnRunner& runner,
                                          std::span<const ChannelSample> samples) {
  std::vector<SlotRecord> records;
  records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    StepResult step = runner.step_sample(samples[i]);
    const auto t1 = std::chrono::steady_clock::now();

    SlotRecord rec;
    rec.slot = samples[i].slot;
    rec.warmup = i < runner.config().warmup_samples;
    rec.rate_true = step.report_true.total;
    rec.rate_est = step.report_est.total;
    rec.loss = step.loss_est;
    rec.per_user = step.report_true.per_user;
    rec.wall_time_us =
        std::chrono::duration<double, std::micro>(t1 - t0).count();
    rec.divergence_events = runner.divergence_events();
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace lb
