#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "liquidbeam/autodiff.hpp"
#include "liquidbeam/complex_matrix.hpp"
#include "liquidbeam/errors.hpp"

namespace lb {

/// Multiplication by this constant is used instead of division by ln(2) so
/// the plain and graph evaluation paths round identically.
inline constexpr double kInvLn2 = 1.4426950408889634074;

/// Per-user achievable rates and their weighted sum, bits/s/Hz.
struct RateReport {
  std::vector<double> per_user;
  double total = 0.0;
  std::vector<double> weights;
};

/// Loss shaping parameters: penalty rate, incentive rate and threshold.
struct LossParams {
  double beta = 0.3;
  double gamma = 0.7;
  double lambda = 2.5;
  double noise_power_mw = 1.0;
  std::size_t num_users = 1;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

namespace detail {

inline ComplexMatrix column(const ComplexMatrix& w, std::size_t j) {
  ComplexMatrix c(w.rows(), 1);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    c.re(i, 0) = w.re(i, j);
    c.im(i, 0) = w.im(i, j);
  }
  return c;
}

inline ComplexMatrix row_block(const ComplexMatrix& h, std::size_t first_row,
                               std::size_t n_rows) {
  ComplexMatrix b(n_rows, h.cols());
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < h.cols(); ++j) {
      b.re(i, j) = h.re(first_row + i, j);
      b.im(i, j) = h.im(first_row + i, j);
    }
  return b;
}

}  // namespace detail

/// Achievable rate of user k given its channel block H_k (N_k x M) and the
/// full precoder W (M x K). Evaluated as the difference of two log-dets, both
/// arguments Hermitian PD after the sigma^2 shift.
inline double user_rate(const ComplexMatrix& h_k, const ComplexMatrix& w, std::size_t k,
                        double sigma2_mw) {
  if (!(sigma2_mw > 0.0))
    throw ContractViolation("user_rate: noise power must be positive");
  if (h_k.cols() != w.rows())
    throw DimensionError("user_rate: H_k is " + h_k.shape_str() + ", W is " + w.shape_str());
  if (k >= w.cols()) throw ContractViolation("user_rate: user index out of range");

  const std::size_t n_k = h_k.rows();
  const std::size_t num_users = w.cols();

  ComplexMatrix s_all = ComplexMatrix::scaled_identity(n_k, sigma2_mw);
  for (std::size_t j = 0; j < num_users; ++j) {
    ComplexMatrix t = matmul(h_k, detail::column(w, j));
    s_all = add(s_all, matmul(t, hermitian(t)));
  }
  ComplexMatrix s_int = ComplexMatrix::scaled_identity(n_k, sigma2_mw);
  for (std::size_t j = 0; j < num_users; ++j) {
    if (j == k) continue;
    ComplexMatrix t = matmul(h_k, detail::column(w, j));
    s_int = add(s_int, matmul(t, hermitian(t)));
  }
  return (logdet_hpd(s_all) - logdet_hpd(s_int)) * kInvLn2;
}

/// Weighted spectral efficiency over all users. H is the stacked N x M
/// channel with contiguous per-user row blocks of N/K rows each.
inline RateReport sum_se(const ComplexMatrix& h, const ComplexMatrix& w,
                         std::span<const double> weights, double sigma2_mw) {
  const std::size_t num_users = w.cols();
  if (weights.size() != num_users)
    throw DimensionError("sum_se: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(num_users) + " users");
  if (h.rows() % num_users != 0)
    throw DimensionError("sum_se: " + std::to_string(h.rows()) +
                         " rows not divisible into " + std::to_string(num_users) + " blocks");
  const std::size_t n_k = h.rows() / num_users;

  RateReport report;
  report.weights.assign(weights.begin(), weights.end());
  report.per_user.resize(num_users);
  for (std::size_t k = 0; k < num_users; ++k) {
    ComplexMatrix h_k = detail::row_block(h, k * n_k, n_k);
    report.per_user[k] = user_rate(h_k, w, k, sigma2_mw);
  }
  report.total = 0.0;
  for (std::size_t k = 0; k < num_users; ++k)
    report.total += weights[k] * report.per_user[k];
  return report;
}

/// L = -R + beta * Var(R) + gamma * ReLU(lambda * K - R), with Var the
/// population variance of the per-user rates.
inline double loss(const RateReport& report, const LossParams& p) {
  const std::size_t k = report.per_user.size();
  if (k != p.num_users)
    throw ContractViolation("loss: report has " + std::to_string(k) + " users, params say " +
                            std::to_string(p.num_users));
  double mean = 0.0;
  for (double r : report.per_user) mean += r;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double r : report.per_user) var += (r - mean) * (r - mean);
  var /= static_cast<double>(k);

  const double shortfall = p.lambda * static_cast<double>(k) - report.total;
  const double relu = shortfall > 0.0 ? shortfall : 0.0;
  return (-1.0 * report.total + p.beta * var) + p.gamma * relu;
}

/// Channel estimation error in dB: 10 log10(||H_est - H_true||_F^2 /
/// ||H_true||_F^2). Exact equality returns -infinity (perfect CSI).
inline double measure_cee(const ComplexMatrix& h_true, const ComplexMatrix& h_est) {
  detail::require_same_shape(h_true, h_est, "measure_cee");
  const double denom = frobenius_norm_squared(h_true);
  if (denom == 0.0) throw DegenerateInputError("measure_cee: true channel is zero");
  const double err = frobenius_norm_squared(subtract(h_est, h_true));
  if (err == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(err / denom);
}

// ---- graph-building twins -------------------------------------------------
//
// These construct the same arithmetic on an autodiff tape, folding terms in
// the same order as the plain evaluations above so forward values agree to
// the last bit.

struct RateGraphNodes {
  std::vector<VarId> per_user;
  VarId total;
};

inline RateGraphNodes build_sum_se_graph(Graph& g, const ComplexMatrix& h, VarId w,
                                         std::span<const double> weights, double sigma2_mw) {
  if (!(sigma2_mw > 0.0))
    throw ContractViolation("build_sum_se_graph: noise power must be positive");
  const std::size_t num_users = g.value(w).cols();
  if (weights.size() != num_users)
    throw DimensionError("build_sum_se_graph: weight count mismatch");
  if (h.rows() % num_users != 0)
    throw DimensionError("build_sum_se_graph: rows not divisible into user blocks");
  const std::size_t n_k = h.rows() / num_users;

  RateGraphNodes nodes;
  std::vector<VarId> selectors(num_users);
  for (std::size_t j = 0; j < num_users; ++j) {
    ComplexMatrix e(num_users, 1);
    e.re(j, 0) = 1.0;
    selectors[j] = g.real_constant(std::move(e));
  }

  for (std::size_t k = 0; k < num_users; ++k) {
    VarId h_k = g.constant(detail::row_block(h, k * n_k, n_k));
    auto interference = [&](bool include_own) {
      VarId s = g.real_constant(ComplexMatrix::scaled_identity(n_k, sigma2_mw));
      for (std::size_t j = 0; j < num_users; ++j) {
        if (!include_own && j == k) continue;
        VarId w_j = g.matmul(w, selectors[j]);
        VarId t = g.matmul(h_k, w_j);
        s = g.add(s, g.matmul(t, g.hermitian_transpose(t)));
      }
      return s;
    };
    VarId s_all = interference(true);
    VarId s_int = interference(false);
    VarId rate = g.scalar_scale(g.subtract(g.logdet_hpd(s_all), g.logdet_hpd(s_int)),
                                std::complex<double>{kInvLn2, 0.0});
    nodes.per_user.push_back(rate);
  }

  VarId total = g.scalar_scale(nodes.per_user[0], std::complex<double>{weights[0], 0.0});
  for (std::size_t k = 1; k < num_users; ++k)
    total = g.add(total, g.scalar_scale(nodes.per_user[k],
                                        std::complex<double>{weights[k], 0.0}));
  nodes.total = total;
  return nodes;
}

inline VarId build_loss_graph(Graph& g, const RateGraphNodes& rates, const LossParams& p) {
  const std::size_t k = rates.per_user.size();
  if (k != p.num_users)
    throw ContractViolation("build_loss_graph: user count mismatch");
  VarId vec = rates.per_user[0];
  for (std::size_t i = 1; i < k; ++i) vec = g.concat_columns(vec, rates.per_user[i]);
  VarId var = g.variance_of_vector(vec);

  VarId threshold = g.real_constant(
      ComplexMatrix::real_scalar(p.lambda * static_cast<double>(k)));
  VarId relu = g.relu_scalar(g.subtract(threshold, rates.total));

  VarId acc = g.add(g.scalar_scale(rates.total, std::complex<double>{-1.0, 0.0}),
                    g.scalar_scale(var, std::complex<double>{p.beta, 0.0}));
  return g.add(acc, g.scalar_scale(relu, std::complex<double>{p.gamma, 0.0}));
}

}  // namespace lb
