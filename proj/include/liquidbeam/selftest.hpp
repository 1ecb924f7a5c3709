#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "liquidbeam/channel.hpp"
#include "liquidbeam/glnn.hpp"
#include "liquidbeam/liquid.hpp"
#include "liquidbeam/metrics.hpp"
#include "liquidbeam/wmmse.hpp"

namespace lb::selftest {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double runtime_ms = 0.0;
};

/// Test hook: mutates an autodiff gradient before it is compared against
/// finite differences, so a corrupted adjoint rule is provably caught.
using GradientCorruptor = std::function<void(ComplexMatrix&)>;

namespace detail {

template <typename Fn>
SuiteResult timed_suite(const std::string& name, Fn&& body) {
  SuiteResult r;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
    if (r.detail.empty()) r.passed = true;
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Central finite differences against the reverse sweep for the full X -> L
// chain. Independent of backward(): only forward graph values are used for
// the numerator.
inline double full_chain_fd_error(std::uint64_t seed, const GradientCorruptor& corrupt) {
  const std::size_t m = 8, n = 4, k = 2;
  CounterRng rng = CounterRng::keyed(seed, 0, 0);
  const ComplexMatrix h = rng.complex_gaussian_matrix(n, m);
  const ComplexMatrix x0 = rng.complex_gaussian_matrix(n, k, 1.0 / n);
  const std::vector<double> weights(k, 1.0);
  LossParams lp;
  lp.num_users = k;

  auto eval = [&](const ComplexMatrix& x) {
    Graph g;
    VarId xid = g.leaf(x, true);
    VarId w = build_power_normalize_graph(g, h, xid, 10.0);
    RateGraphNodes rates = build_sum_se_graph(g, h, w, weights, 1.0);
    return g.value(build_loss_graph(g, rates, lp)).re(0, 0);
  };

  Graph g;
  VarId xid = g.leaf(x0, true);
  VarId w = build_power_normalize_graph(g, h, xid, 10.0);
  RateGraphNodes rates = build_sum_se_graph(g, h, w, weights, 1.0);
  ComplexMatrix grad = g.backward(build_loss_graph(g, rates, lp)).at(xid);
  if (corrupt) corrupt(grad);

  const double step = 1e-5;
  double num = 0.0, den = 0.0;
  ComplexMatrix work = x0;
  for (int part = 0; part < 2; ++part) {
    auto& data = part == 0 ? work.re_data() : work.im_data();
    const auto& gdata = part == 0 ? grad.re_data() : grad.im_data();
    for (std::size_t e = 0; e < data.size(); ++e) {
      const double saved = data[e];
      data[e] = saved + step;
      const double up = eval(work);
      data[e] = saved - step;
      const double down = eval(work);
      data[e] = saved;
      const double fd = (up - down) / (2.0 * step);
      num += (gdata[e] - fd) * (gdata[e] - fd);
      den += fd * fd;
    }
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace detail

/// Gradient checks: X -> loss chain on toy dimensions over several seeds.
inline SuiteResult run_gradient_checks(const GradientCorruptor& corrupt = nullptr) {
  return detail::timed_suite("gradient-check", [&](SuiteResult& r) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const double err = detail::full_chain_fd_error(seed, corrupt);
      if (!(err < 1e-4)) {
        r.detail = "X->L gradient mismatch, rel error " + std::to_string(err) + " at seed " +
                   std::to_string(seed);
        return;
      }
    }
  });
}

/// Liquid cell identities: equal-gate mix, g == h collapse, h saturation.
inline SuiteResult run_cell_identities() {
  return detail::timed_suite("liquid-cell-identities", [&](SuiteResult& r) {
    CounterRng rng(77);
    auto params = init_layer_params(3, 2, rng);
    ComplexMatrix prev(2, 3), in(2, 2);
    for (auto& x : prev.re_data()) x = rng.uniform(-1, 1);
    for (auto& x : in.re_data()) x = rng.uniform(-1, 1);

    auto zero_f = params;
    zero_f.w_f = ComplexMatrix(3, 5);
    zero_f.b_f = ComplexMatrix(1, 3);
    const ComplexMatrix z = lb::detail::concat_cols(prev, in);
    const ComplexMatrix g =
        lb::detail::tanh_elementwise(lb::detail::affine_forward(params.w_g, z, params.b_g));
    const ComplexMatrix h =
        lb::detail::tanh_elementwise(lb::detail::affine_forward(params.w_h, z, params.b_h));
    ComplexMatrix mix = cell_forward(zero_f, prev, in, 1.0);
    for (std::size_t i = 0; i < mix.size(); ++i)
      if (std::abs(mix.re_data()[i] - 0.5 * (g.re_data()[i] + h.re_data()[i])) > 1e-12) {
        r.detail = "zero-f gate is not an equal mix";
        return;
      }

    auto collapsed = params;
    collapsed.w_h = params.w_g;
    collapsed.b_h = params.b_g;
    if (max_abs_diff(cell_forward(collapsed, prev, in, 1.0), g) > 1e-12) {
      r.detail = "g == h does not collapse the gate";
      return;
    }

    auto saturating = params;
    saturating.b_f = ComplexMatrix::constant(1, 3, 1e4);
    if (max_abs_diff(cell_forward(saturating, prev, in, 1.0), h) > 1e-12)
      r.detail = "huge f bias does not saturate to h";
  });
}

/// WMMSE monotone ascent and feasibility on random instances.
inline SuiteResult run_wmmse_monotonicity() {
  return detail::timed_suite("wmmse-monotone-ascent", [&](SuiteResult& r) {
    WmmseConfig cfg;
    cfg.convergence_tol = 1e-9;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CounterRng rng = CounterRng::keyed(seed, 3, 1);
      ComplexMatrix h = rng.complex_gaussian_matrix(8, 16);
      auto result = wmmse_solve(h, 10.0, 1.0, std::vector<double>(4, 1.0), cfg);
      for (std::size_t i = 1; i < result.rate_trajectory.size(); ++i)
        if (result.rate_trajectory[i] < result.rate_trajectory[i - 1] - 1e-6) {
          r.detail = "rate decreased at seed " + std::to_string(seed) + " iteration " +
                     std::to_string(i);
          return;
        }
      if (frobenius_norm_squared(result.precoder) > 10.0 * (1.0 + 1e-9)) {
        r.detail = "power budget violated at seed " + std::to_string(seed);
        return;
      }
    }
  });
}

/// power_normalize lands on the budget exactly across random draws.
inline SuiteResult run_power_exactness() {
  return detail::timed_suite("power-exactness", [&](SuiteResult& r) {
    CounterRng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
      const double p = 0.05 + 20.0 * rng.next_double();
      ComplexMatrix h = rng.complex_gaussian_matrix(4, 8);
      ComplexMatrix x = rng.complex_gaussian_matrix(4, 2);
      const double got = frobenius_norm_squared(power_normalize(h, x, p));
      if (std::abs(got - p) > 1e-9 * p) {
        r.detail = "power off budget by " + std::to_string(std::abs(got - p));
        return;
      }
    }
  });
}

/// inject_cee measured back at the requested level.
inline SuiteResult run_cee_exactness() {
  return detail::timed_suite("cee-exactness", [&](SuiteResult& r) {
    CounterRng src(21);
    ComplexMatrix h = src.complex_gaussian_matrix(8, 16);
    for (double target : {-20.0, -10.0, 0.0}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng = CounterRng::keyed(seed, 9, 9);
        const double got = measure_cee(h, inject_cee(h, target, rng));
        if (std::abs(got - target) > 1e-9) {
          r.detail = "CEE " + std::to_string(target) + " dB measured as " + std::to_string(got);
          return;
        }
      }
    }
  });
}

/// Plain metric evaluations equal the graph forward pass.
inline SuiteResult run_metric_consistency() {
  return detail::timed_suite("metric-graph-consistency", [&](SuiteResult& r) {
    CounterRng rng(31);
    ComplexMatrix h = rng.complex_gaussian_matrix(6, 12);
    ComplexMatrix w = rng.complex_gaussian_matrix(12, 3);
    const std::vector<double> weights{1.0, 1.0, 1.0};
    LossParams lp;
    lp.num_users = 3;

    auto report = sum_se(h, w, weights, 1.0);
    Graph g;
    auto rates = build_sum_se_graph(g, h, g.constant(w), weights, 1.0);
    auto loss_id = build_loss_graph(g, rates, lp);
    if (std::abs(g.value(rates.total).re(0, 0) - report.total) > 1e-12 ||
        std::abs(g.value(loss_id).re(0, 0) - loss(report, lp)) > 1e-12)
      r.detail = "graph forward diverges from plain evaluation";
  });
}

inline std::vector<SuiteResult> run_all(const GradientCorruptor& corrupt = nullptr) {
  return {run_gradient_checks(corrupt), run_cell_identities(),    run_wmmse_monotonicity(),
          run_power_exactness(),        run_cee_exactness(),      run_metric_consistency()};
}

inline bool all_passed(const std::vector<SuiteResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

inline std::string format_report(const std::vector<SuiteResult>& results) {
  std::string out = "suite                        status  runtime_ms\n";
  for (const auto& r : results) {
    std::string line = r.name;
    line.resize(29, ' ');
    line += r.passed ? "PASS " : "FAIL ";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%10.1f", r.runtime_ms);
    line += buf;
    if (!r.passed) line += "  " + r.detail;
    out += line + "\n";
  }
  return out;
}

}  // namespace lb::selftest
