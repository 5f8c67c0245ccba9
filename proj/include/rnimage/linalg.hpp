#pragma once

// Cholesky factorization, SPD solves, and the generalized symmetric-definite
// eigenproblem F ψ = λ G ψ (Cholesky reduction + cyclic Jacobi).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "rnimage/error.hpp"
#include "rnimage/matrix.hpp"

namespace rnimage {

/// G = L Lᵀ with L lower triangular.
struct SpdFactor {
  Matrix L;
  std::size_t dim() const noexcept { return L.rows(); }
};

/// Reads the lower triangle of G. A pivot at or below n·eps·max|G_ii| is
/// reported as loss of definiteness.
inline SpdFactor cholesky(const Matrix& G) {
  const std::size_t n = G.rows();
  if (n == 0 || G.cols() != n) throw InvalidArgument("cholesky: matrix must be square and nonempty");
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(G(i, i)));
  const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;
  Matrix L(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto lj = L.row(j);
    double d = G(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
    if (!(d > tiny)) throw NotPositiveDefinite(j);
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const auto li = L.row(i);
      double s = G(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      L(i, j) = s / ljj;
    }
  }
  return {std::move(L)};
}

/// In place: b <- L⁻¹ b.
inline void forward_substitute(const SpdFactor& fac, std::span<double> b) {
  const Matrix& L = fac.L;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto li = L.row(i);
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * b[k];
    b[i] = s / li[i];
  }
}

/// In place: b <- L⁻ᵀ b.
inline void back_substitute(const SpdFactor& fac, std::span<double> b) {
  const Matrix& L = fac.L;
  for (std::size_t i = b.size(); i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < b.size(); ++k) s -= L(k, i) * b[k];
    b[i] = s / L(i, i);
  }
}

inline std::vector<double> spd_solve(const SpdFactor& fac, std::span<const double> b) {
  if (b.size() != fac.dim()) throw InvalidArgument("spd_solve: shape mismatch");
  std::vector<double> x(b.begin(), b.end());
  forward_substitute(fac, x);
  back_substitute(fac, x);
  return x;
}

/// G⁻¹ B, column by column.
inline Matrix spd_solve(const SpdFactor& fac, const Matrix& B) {
  if (B.rows() != fac.dim()) throw InvalidArgument("spd_solve: shape mismatch");
  const Matrix Bt = B.transposed();
  Matrix Xt(Bt.rows(), Bt.cols());
  for (std::size_t c = 0; c < Bt.rows(); ++c) {
    auto x = Xt.row(c);
    const auto b = Bt.row(c);
    std::copy(b.begin(), b.end(), x.begin());
    forward_substitute(fac, x);
    back_substitute(fac, x);
  }
  return Xt.transposed();
}

/// Eigenpairs of F ψ = λ G ψ: ascending eigenvalues, ψ⁽ˢ⁾ stored as column s
/// of `psi`, G-orthonormal, largest-magnitude coefficient positive.
struct GeneralizedEig {
  std::vector<double> lambda;
  Matrix psi;

  std::size_t dim() const noexcept { return lambda.size(); }
  std::vector<double> vector(std::size_t s) const {
    std::vector<double> v(psi.rows());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = psi(i, s);
    return v;
  }
};

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// On return `a` is (nearly) diagonal and `v` holds the eigenvectors as columns.
inline void jacobi_eigen(Matrix& a, Matrix& v, double rel_tol = 1e-12, int max_sweeps = 30) {
  const std::size_t n = a.rows();
  v = Matrix::identity(n);
  const double scale = a.frobenius_norm();
  if (scale == 0.0) return;
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  for (int sweep = 0;; ++sweep) {
    if (off_norm() <= rel_tol * scale) return;
    if (sweep == max_sweeps) throw NumericError("Jacobi eigensolver did not converge in " + std::to_string(max_sweeps) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
}

inline GeneralizedEig generalized_sym_eig(const Matrix& F, const SpdFactor& G_fac) {
  const std::size_t n = G_fac.dim();
  if (F.rows() != n || F.cols() != n) throw InvalidArgument("generalized_sym_eig: dimension mismatch");
  // Rows of Fᵀ are columns of F; solving them gives (L⁻¹F)ᵀ = F L⁻ᵀ.
  Matrix W = F.transposed();
  for (std::size_t c = 0; c < n; ++c) forward_substitute(G_fac, W.row(c));
  // Rows of Wᵀ are columns of F L⁻ᵀ; solving them gives (L⁻¹ F L⁻ᵀ)ᵀ.
  Matrix A = W.transposed();
  for (std::size_t c = 0; c < n; ++c) forward_substitute(G_fac, A.row(c));
  A.symmetrize();

  Matrix U;
  jacobi_eigen(A, U);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return A(i, i) < A(j, j); });

  GeneralizedEig out;
  out.lambda.resize(n);
  out.psi = Matrix(n, n);
  std::vector<double> u(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t src = order[s];
    out.lambda[s] = A(src, src);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = U(i, src);
      norm += u[i] * u[i];
    }
    norm = std::sqrt(norm);
    for (double& x : u) x /= norm;  // ψᵀGψ = uᵀu
    back_substitute(G_fac, u);
    std::size_t big = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(u[i]) > std::abs(u[big])) big = i;
    const double sign = u[big] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.psi(i, s) = sign * u[i];
  }
  return out;
}

}  // namespace rnimage
