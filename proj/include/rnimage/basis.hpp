#pragma once

// Orthogonal polynomial families used as moment bases.
//
// Products of basis polynomials are expanded back into the same basis
// (linearization) instead of going through monomials, which keeps the
// arithmetic stable at high order. Chebyshev products have two terms with
// weight 1/2 each; Legendre products use the Adams-Neumann formula.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rnimage/error.hpp"

namespace rnimage {

enum class Family { Chebyshev, Legendre };

/// Native polynomials live on [-1,1]; shifted ones are Q_k(x) = P_k(2x-1) on [0,1].
enum class Domain { Native, Shifted };

struct BasisKind {
  Family family = Family::Chebyshev;
  Domain domain = Domain::Native;

  /// Argument of the underlying native polynomial.
  constexpr double native_argument(double x) const noexcept {
    return domain == Domain::Shifted ? 2.0 * x - 1.0 : x;
  }

  friend constexpr bool operator==(BasisKind, BasisKind) = default;
};

inline std::string to_string(BasisKind kind) {
  std::string s = kind.family == Family::Chebyshev ? "chebyshev" : "legendre";
  if (kind.domain == Domain::Shifted) s += "_shifted";
  return s;
}

inline BasisKind basis_from_string(std::string_view s) {
  BasisKind k;
  if (s.ends_with("_shifted")) {
    k.domain = Domain::Shifted;
    s.remove_suffix(std::string_view("_shifted").size());
  }
  if (s == "chebyshev") {
    k.family = Family::Chebyshev;
  } else if (s == "legendre") {
    k.family = Family::Legendre;
  } else {
    throw InvalidArgument("unknown basis '" + std::string(s) + "'");
  }
  return k;
}

namespace detail {

// Three-term recurrence Q_{k+1}(t) = alpha_k(t) Q_k(t) + beta_k Q_{k-1}(t), k >= 1.
inline double recurrence_alpha(Family f, std::size_t k, double t) noexcept {
  if (f == Family::Chebyshev) return 2.0 * t;
  return static_cast<double>(2 * k + 1) * t / static_cast<double>(k + 1);
}

inline double recurrence_beta(Family f, std::size_t k) noexcept {
  if (f == Family::Chebyshev) return -1.0;
  return -static_cast<double>(k) / static_cast<double>(k + 1);
}

}  // namespace detail

/// Writes [Q_0(x), ..., Q_{out.size()-1}(x)] into `out`.
inline void evaluate_all_into(BasisKind kind, double x, std::span<double> out) {
  const std::size_t n = out.size();
  if (n == 0) return;
  const double t = kind.native_argument(x);
  out[0] = 1.0;
  if (n == 1) return;
  out[1] = t;
  for (std::size_t k = 1; k + 1 < n; ++k)
    out[k + 1] = detail::recurrence_alpha(kind.family, k, t) * out[k] +
                 detail::recurrence_beta(kind.family, k) * out[k - 1];
}

/// [Q_0(x), ..., Q_{n-1}(x)]. Valid for any real x, including outside the
/// orthogonality interval.
inline std::vector<double> evaluate_all(BasisKind kind, std::size_t n, double x) {
  if (n == 0) throw InvalidArgument("evaluate_all: empty request (n = 0)");
  std::vector<double> q(n);
  evaluate_all_into(kind, x, q);
  return q;
}

/// A polynomial Σ c_k Q_k(x) stored by its coefficients.
struct CoeffVector {
  BasisKind basis;
  std::vector<double> coeffs;

  std::size_t size() const noexcept { return coeffs.size(); }

  /// Clenshaw summation using the family recurrence.
  double operator()(double x) const {
    const std::size_t n = coeffs.size();
    if (n == 0) return 0.0;
    const double t = basis.native_argument(x);
    if (n == 1) return coeffs[0];
    const Family f = basis.family;
    double b1 = 0.0;  // y_{k+1}
    double b2 = 0.0;  // y_{k+2}
    for (std::size_t k = n - 1; k >= 1; --k) {
      const double b0 = coeffs[k] + detail::recurrence_alpha(f, k, t) * b1 +
                        detail::recurrence_beta(f, k + 1) * b2;
      b2 = b1;
      b1 = b0;
    }
    // S = c0 Q0 + y1 Q1 + beta_1 Q0 y2
    return coeffs[0] + t * b1 + detail::recurrence_beta(f, 1) * b2;
  }
};

inline double evaluate_coeffvector(const CoeffVector& v, double x) { return v(x); }

/// One nonzero term a_m Q_m of a linearized product.
struct ProductTerm {
  std::size_t index;
  double coeff;
};

/// Nonzero terms of Q_j Q_k = Σ a_m Q_m, ordered by ascending m.
inline std::vector<ProductTerm> product_terms(Family family, std::size_t j, std::size_t k) {
  if (j > k) std::swap(j, k);
  std::vector<ProductTerm> terms;
  if (family == Family::Chebyshev) {
    if (j == 0) {
      terms.push_back({k, 1.0});
    } else {
      terms.push_back({k - j, 0.5});
      terms.push_back({k + j, 0.5});
    }
    return terms;
  }
  // Adams-Neumann:
  //   P_j P_k = Σ_{r=0}^{j} [A_r A_{j-r} A_{k-r} / A_{j+k-r}] (2(j+k-2r)+1)/(2(j+k-r)+1) P_{j+k-2r},
  //   A_n = (2n-1)!! / n!.
  // A_n grows like 2^n/sqrt(n); fine in double for indices up to several hundred.
  std::vector<double> a(j + k + 1);
  a[0] = 1.0;
  for (std::size_t n = 1; n < a.size(); ++n)
    a[n] = a[n - 1] * static_cast<double>(2 * n - 1) / static_cast<double>(n);
  terms.reserve(j + 1);
  for (std::size_t r = j + 1; r-- > 0;) {
    const std::size_t m = j + k - 2 * r;
    const double c = a[r] * a[j - r] * a[k - r] / a[j + k - r] * static_cast<double>(2 * m + 1) /
                     static_cast<double>(2 * (j + k - r) + 1);
    terms.push_back({m, c});
  }
  return terms;
}

/// Coefficients of Q_j·Q_k in the same basis; length j+k+1.
inline CoeffVector linearize_product(BasisKind kind, std::size_t j, std::size_t k) {
  CoeffVector v{kind, std::vector<double>(j + k + 1, 0.0)};
  for (const auto& t : product_terms(kind.family, j, k)) v.coeffs[t.index] += t.coeff;
  return v;
}

/// Precomputed product_terms for all j, k < n.
class LinearizationTable {
 public:
  LinearizationTable(Family family, std::size_t n) : n_(n), terms_(n * n) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = j; k < n; ++k) {
        terms_[j * n + k] = product_terms(family, j, k);
        terms_[k * n + j] = terms_[j * n + k];
      }
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<ProductTerm>& operator()(std::size_t j, std::size_t k) const { return terms_[j * n_ + k]; }

 private:
  std::size_t n_;
  std::vector<std::vector<ProductTerm>> terms_;
};

}  // namespace rnimage
