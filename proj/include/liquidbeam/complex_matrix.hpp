#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "liquidbeam/errors.hpp"

namespace lb {

/// Dense complex matrix stored as paired real/imaginary row-major arrays.
/// This is the universal value type: channels, precoders, base matrices and
/// gradients all live here. Values are treated as immutable once built, so
/// copies may be shared across threads freely.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), re_(rows * cols, 0.0), im_(rows * cols, 0.0) {}

  static ComplexMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) a.re_[i * n + i] = 1.0;
    return a;
  }

  /// n x n multiple of the identity, c real.
  static ComplexMatrix scaled_identity(std::size_t n, double c) {
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) a.re_[i * n + i] = c;
    return a;
  }

  static ComplexMatrix constant(std::size_t rows, std::size_t cols, double value) {
    ComplexMatrix a(rows, cols);
    for (auto& x : a.re_) x = value;
    return a;
  }

  static ComplexMatrix real_scalar(double value) {
    ComplexMatrix a(1, 1);
    a.re_[0] = value;
    return a;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return rows_ * cols_; }
  bool empty() const noexcept { return size() == 0; }

  double& re(std::size_t r, std::size_t c) { return re_[r * cols_ + c]; }
  double re(std::size_t r, std::size_t c) const { return re_[r * cols_ + c]; }
  double& im(std::size_t r, std::size_t c) { return im_[r * cols_ + c]; }
  double im(std::size_t r, std::size_t c) const { return im_[r * cols_ + c]; }

  std::vector<double>& re_data() { return re_; }
  const std::vector<double>& re_data() const { return re_; }
  std::vector<double>& im_data() { return im_; }
  const std::vector<double>& im_data() const { return im_; }

  std::complex<double> at(std::size_t r, std::size_t c) const {
    return {re_[r * cols_ + c], im_[r * cols_ + c]};
  }

  void set(std::size_t r, std::size_t c, std::complex<double> z) {
    re_[r * cols_ + c] = z.real();
    im_[r * cols_ + c] = z.imag();
  }

  bool same_shape(const ComplexMatrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const noexcept {
    for (double x : re_)
      if (!std::isfinite(x)) return false;
    for (double x : im_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  double max_abs_imag() const noexcept {
    double m = 0.0;
    for (double x : im_) m = std::max(m, std::abs(x));
    return m;
  }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> re_;
  std::vector<double> im_;
};

namespace detail {
inline void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}
}  // namespace detail

inline ComplexMatrix add(const ComplexMatrix& a, const ComplexMatrix& b) {
  detail::require_same_shape(a, b, "add");
  ComplexMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.re_data()[i] = a.re_data()[i] + b.re_data()[i];
    c.im_data()[i] = a.im_data()[i] + b.im_data()[i];
  }
  return c;
}

inline ComplexMatrix subtract(const ComplexMatrix& a, const ComplexMatrix& b) {
  detail::require_same_shape(a, b, "subtract");
  ComplexMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.re_data()[i] = a.re_data()[i] - b.re_data()[i];
    c.im_data()[i] = a.im_data()[i] - b.im_data()[i];
  }
  return c;
}

inline ComplexMatrix scale(const ComplexMatrix& a, std::complex<double> s) {
  ComplexMatrix c(a.rows(), a.cols());
  const double sr = s.real(), si = s.imag();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.re_data()[i], y = a.im_data()[i];
    c.re_data()[i] = sr * x - si * y;
    c.im_data()[i] = sr * y + si * x;
  }
  return c;
}

inline ComplexMatrix hadamard(const ComplexMatrix& a, const ComplexMatrix& b) {
  detail::require_same_shape(a, b, "hadamard");
  ComplexMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a.re_data()[i], ai = a.im_data()[i];
    const double br = b.re_data()[i], bi = b.im_data()[i];
    c.re_data()[i] = ar * br - ai * bi;
    c.im_data()[i] = ar * bi + ai * br;
  }
  return c;
}

inline ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions " + a.shape_str() + " * " + b.shape_str());
  ComplexMatrix c(a.rows(), b.cols());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double ar = a.re(i, p), ai = a.im(i, p);
      if (ar == 0.0 && ai == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double br = b.re(p, j), bi = b.im(p, j);
        c.re(i, j) += ar * br - ai * bi;
        c.im(i, j) += ar * bi + ai * br;
      }
    }
  }
  return c;
}

/// Conjugate transpose.
inline ComplexMatrix hermitian(const ComplexMatrix& a) {
  ComplexMatrix c(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      c.re(j, i) = a.re(i, j);
      c.im(j, i) = -a.im(i, j);
    }
  return c;
}

inline ComplexMatrix conjugate(const ComplexMatrix& a) {
  ComplexMatrix c = a;
  for (auto& y : c.im_data()) y = -y;
  return c;
}

inline ComplexMatrix transpose(const ComplexMatrix& a) {
  ComplexMatrix c(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      c.re(j, i) = a.re(i, j);
      c.im(j, i) = a.im(i, j);
    }
  return c;
}

inline double frobenius_norm_squared(const ComplexMatrix& a) {
  double s = 0.0;
  for (double x : a.re_data()) s += x * x;
  for (double x : a.im_data()) s += x * x;
  return s;
}

inline double frobenius_norm(const ComplexMatrix& a) {
  return std::sqrt(frobenius_norm_squared(a));
}

/// Re(Tr(A)) of a square matrix.
inline double trace_real(const ComplexMatrix& a) {
  if (a.rows() != a.cols())
    throw DimensionError("trace_real: matrix is " + a.shape_str() + ", need square");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a.re(i, i);
  return s;
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  detail::require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.re_data()[i] - b.re_data()[i]));
    m = std::max(m, std::abs(a.im_data()[i] - b.im_data()[i]));
  }
  return m;
}

inline double hermitian_defect(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("hermitian_defect: need square matrix");
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      m = std::max(m, std::abs(a.re(i, j) - a.re(j, i)));
      m = std::max(m, std::abs(a.im(i, j) + a.im(j, i)));
    }
  return m;
}

/// Max |A - A^H| tolerance accepted by the HPD factorizations; inputs within
/// it are symmetrized as (A + A^H)/2 before use.
inline constexpr double kHermitianTolerance = 1e-9;

namespace detail {

inline ComplexMatrix symmetrized_hpd_input(const ComplexMatrix& a, const char* op) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(op) + ": matrix is " + a.shape_str() + ", need square");
  const double defect = hermitian_defect(a);
  if (defect > kHermitianTolerance)
    throw SingularityError(std::string(op) + ": matrix is not Hermitian (defect " +
                               std::to_string(defect) + ")",
                           -1);
  ComplexMatrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      s.re(i, j) = 0.5 * (a.re(i, j) + a.re(j, i));
      s.im(i, j) = 0.5 * (a.im(i, j) - a.im(j, i));
    }
  return s;
}

}  // namespace detail

/// Lower-triangular Cholesky factor L with A = L L^H and real positive
/// diagonal. Throws SingularityError carrying the failing pivot index when A
/// is not positive definite.
inline ComplexMatrix cholesky_hpd(const ComplexMatrix& a_in) {
  ComplexMatrix a = detail::symmetrized_hpd_input(a_in, "cholesky_hpd");
  const std::size_t n = a.rows();
  ComplexMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a.re(j, j);
    for (std::size_t k = 0; k < j; ++k) {
      const double lr = l.re(j, k), li = l.im(j, k);
      d -= lr * lr + li * li;
    }
    if (!(d > 0.0) || !std::isfinite(d))
      throw SingularityError("cholesky_hpd: matrix is not positive definite",
                             static_cast<int>(j));
    const double ljj = std::sqrt(d);
    l.re(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double sr = a.re(i, j), si = a.im(i, j);
      for (std::size_t k = 0; k < j; ++k) {
        // s -= L(i,k) * conj(L(j,k))
        const double xr = l.re(i, k), xi = l.im(i, k);
        const double yr = l.re(j, k), yi = l.im(j, k);
        sr -= xr * yr + xi * yi;
        si -= xi * yr - xr * yi;
      }
      l.re(i, j) = sr / ljj;
      l.im(i, j) = si / ljj;
    }
  }
  return l;
}

/// ln det(A) for Hermitian positive definite A, via Cholesky: 2 sum ln L_ii.
inline double logdet_hpd(const ComplexMatrix& a) {
  ComplexMatrix l = cholesky_hpd(a);
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l.re(i, i));
  return 2.0 * s;
}

namespace detail {

// Solve L y = b in place (L lower triangular with real diagonal from Cholesky).
inline void forward_subst(const ComplexMatrix& l, ComplexMatrix& b) {
  const std::size_t n = l.rows(), m = b.cols();
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      double sr = b.re(i, j), si = b.im(i, j);
      for (std::size_t k = 0; k < i; ++k) {
        const double lr = l.re(i, k), li = l.im(i, k);
        const double xr = b.re(k, j), xi = b.im(k, j);
        sr -= lr * xr - li * xi;
        si -= lr * xi + li * xr;
      }
      b.re(i, j) = sr / l.re(i, i);
      b.im(i, j) = si / l.re(i, i);
    }
  }
}

// Solve L^H x = y in place.
inline void backward_subst(const ComplexMatrix& l, ComplexMatrix& b) {
  const std::size_t n = l.rows(), m = b.cols();
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t ii = n; ii-- > 0;) {
      double sr = b.re(ii, j), si = b.im(ii, j);
      for (std::size_t k = ii + 1; k < n; ++k) {
        // conj(L(k,ii)) * x(k)
        const double lr = l.re(k, ii), li = -l.im(k, ii);
        const double xr = b.re(k, j), xi = b.im(k, j);
        sr -= lr * xr - li * xi;
        si -= lr * xi + li * xr;
      }
      b.re(ii, j) = sr / l.re(ii, ii);
      b.im(ii, j) = si / l.re(ii, ii);
    }
  }
}

}  // namespace detail

/// Solve A X = B for Hermitian positive definite A.
inline ComplexMatrix solve_hpd(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows())
    throw DimensionError("solve_hpd: A is " + a.shape_str() + ", B is " + b.shape_str());
  ComplexMatrix l = cholesky_hpd(a);
  ComplexMatrix x = b;
  detail::forward_subst(l, x);
  detail::backward_subst(l, x);
  return x;
}

/// Inverse of a Hermitian positive definite matrix.
inline ComplexMatrix inverse_hpd(const ComplexMatrix& a) {
  return solve_hpd(a, ComplexMatrix::identity(a.rows()));
}

}  // namespace lb
