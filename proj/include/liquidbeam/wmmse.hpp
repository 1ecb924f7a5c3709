#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "liquidbeam/complex_matrix.hpp"
#include "liquidbeam/errors.hpp"
#include "liquidbeam/metrics.hpp"

namespace lb {

struct WmmseConfig {
  std::size_t max_outer_iters = 100;     // three-step update loops
  std::size_t max_bisection_iters = 60;  // bisection steps per precoder update
  double convergence_tol = 1e-5;         // relative sum-rate change
  double bisection_tol = 1e-8;           // relative power residual

  void validate() const {
    if (max_outer_iters < 1 || max_bisection_iters < 1)
      throw ConfigError("wmmse: iteration caps must be >= 1");
    if (!(convergence_tol > 0.0) || !(bisection_tol > 0.0))
      throw ConfigError("wmmse: tolerances must be > 0");
  }
};

struct WmmseResult {
  ComplexMatrix precoder;               // M x K
  std::vector<double> rate_trajectory;  // sum rate after each outer iteration
  std::size_t outer_iterations = 0;
  std::size_t bisection_evals = 0;      // power evaluations across the solve
  bool bisection_warning = false;
};

/// Power multiplier search. power_at must be continuous and strictly
/// decreasing on [0, inf); +inf at 0 signals a singular unregularized system.
/// Returns 0 when the unconstrained solution is already feasible, otherwise
/// the multiplier meeting |power - budget| <= bisection_tol * budget, found
/// by doubling to a bracket and then bisecting at most max_bisection_iters
/// times. Failure to meet tolerance sets *warning instead of throwing.
inline double bisect_mu(const std::function<double(double)>& power_at, double budget,
                        const WmmseConfig& cfg, bool* warning = nullptr) {
  const double p0 = power_at(0.0);
  if (p0 <= budget) return 0.0;

  double lo = 0.0, hi = 1.0;
  double p_hi = power_at(hi);
  for (int i = 0; i < 200 && p_hi > budget; ++i) {
    lo = hi;
    hi *= 2.0;
    p_hi = power_at(hi);
  }
  if (p_hi > budget) {
    if (warning) *warning = true;
    return hi;
  }

  // Converge from the feasible side: the returned multiplier always has
  // power <= budget, within bisection_tol of it when the cap allows.
  for (std::size_t i = 0; i < cfg.max_bisection_iters; ++i) {
    const double mu = 0.5 * (lo + hi);
    const double p = power_at(mu);
    if (p > budget) {
      lo = mu;
    } else {
      hi = mu;
      if (budget - p <= cfg.bisection_tol * budget) return mu;
    }
  }
  if (warning) *warning = true;
  return hi;
}

namespace detail {

// Matched-filter start: w_k is the row-summed conjugate of user k's block,
// with the whole precoder scaled to the power budget. Deterministic in H.
inline ComplexMatrix matched_filter_init(const ComplexMatrix& h, std::size_t num_users,
                                         double power_mw) {
  const std::size_t n_k = h.rows() / num_users;
  const std::size_t m = h.cols();
  ComplexMatrix w(m, num_users);
  for (std::size_t k = 0; k < num_users; ++k) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      std::complex<double> s{0.0, 0.0};
      for (std::size_t r = 0; r < n_k; ++r) s += std::conj(h.at(k * n_k + r, j));
      w.set(j, k, s);
      norm2 += std::norm(s);
    }
    if (norm2 < 1e-24) {
      // Row sum cancelled out; fall back to the first receive antenna.
      for (std::size_t j = 0; j < m; ++j) w.set(j, k, std::conj(h.at(k * n_k, j)));
    }
  }
  const double total = frobenius_norm_squared(w);
  if (total == 0.0) throw DegenerateInputError("wmmse: zero channel");
  return scale(w, std::sqrt(power_mw / total));
}

}  // namespace detail

/// Iterative WMMSE for weighted sum-rate maximization under the sum power
/// constraint, single data stream per user. Alternates MMSE receive filters,
/// MSE-inverse weights and regularized precoders with a bisection search on
/// the power multiplier.
inline WmmseResult wmmse_solve(const ComplexMatrix& h, double power_mw, double sigma2_mw,
                               std::span<const double> weights, const WmmseConfig& cfg) {
  cfg.validate();
  if (!(sigma2_mw > 0.0)) throw ContractViolation("wmmse_solve: noise power must be positive");
  const std::size_t num_users = weights.size();
  if (num_users == 0 || h.rows() % num_users != 0)
    throw DimensionError("wmmse_solve: channel rows do not split into user blocks");
  const std::size_t n_k = h.rows() / num_users;
  const std::size_t m = h.cols();

  std::vector<ComplexMatrix> h_blocks;
  for (std::size_t k = 0; k < num_users; ++k)
    h_blocks.push_back(detail::row_block(h, k * n_k, n_k));

  WmmseResult result;
  ComplexMatrix w = detail::matched_filter_init(h, num_users, power_mw);

  double prev_rate = -std::numeric_limits<double>::infinity();
  for (std::size_t outer = 0; outer < cfg.max_outer_iters; ++outer) {
    // (1) MMSE receive filters and (2) MSE-inverse weights.
    std::vector<ComplexMatrix> u(num_users);
    std::vector<double> v(num_users);
    for (std::size_t k = 0; k < num_users; ++k) {
      ComplexMatrix cov = ComplexMatrix::scaled_identity(n_k, sigma2_mw);
      for (std::size_t j = 0; j < num_users; ++j) {
        ComplexMatrix t = matmul(h_blocks[k], detail::column(w, j));
        cov = add(cov, matmul(t, hermitian(t)));
      }
      ComplexMatrix hw_k = matmul(h_blocks[k], detail::column(w, k));
      u[k] = solve_hpd(cov, hw_k);

      double uhw = 0.0;  // Re(u^H H w), imaginary part vanishes at the MMSE u
      for (std::size_t r = 0; r < n_k; ++r)
        uhw += u[k].re(r, 0) * hw_k.re(r, 0) + u[k].im(r, 0) * hw_k.im(r, 0);
      const double mse = std::max(1.0 - uhw, 1e-14);
      v[k] = 1.0 / mse;
    }

    // (3) Regularized precoders with the power multiplier from bisection.
    ComplexMatrix b(m, m);          // sum_j a_j v_j (H_j^H u_j)(H_j^H u_j)^H
    ComplexMatrix rhs(m, num_users);  // a_k v_k H_k^H u_k
    for (std::size_t j = 0; j < num_users; ++j) {
      ComplexMatrix hu = matmul(hermitian(h_blocks[j]), u[j]);
      b = add(b, scale(matmul(hu, hermitian(hu)), weights[j] * v[j]));
      for (std::size_t r = 0; r < m; ++r)
        rhs.set(r, j, weights[j] * v[j] * hu.at(r, 0));
    }

    std::size_t evals = 0;
    auto precoder_at = [&](double mu) {
      ++evals;
      return solve_hpd(add(b, ComplexMatrix::scaled_identity(m, mu)), rhs);
    };
    auto power_at = [&](double mu) {
      try {
        return frobenius_norm_squared(precoder_at(mu));
      } catch (const SingularityError&) {
        // Rank-deficient B at mu = 0: treat the unregularized solution as
        // unbounded and force the bisection branch.
        return std::numeric_limits<double>::infinity();
      }
    };

    const double mu = bisect_mu(power_at, power_mw, cfg, &result.bisection_warning);
    w = precoder_at(mu);
    result.bisection_evals += evals;

    const double rate = sum_se(h, w, weights, sigma2_mw).total;
    result.rate_trajectory.push_back(rate);
    result.outer_iterations = outer + 1;
    if (std::isfinite(prev_rate) &&
        std::abs(rate - prev_rate) <= cfg.convergence_tol * std::max(1.0, std::abs(prev_rate)))
      break;
    prev_rate = rate;
  }

  result.precoder = std::move(w);
  return result;
}

}  // namespace lb
