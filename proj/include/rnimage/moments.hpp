#pragma once

// Measures, vector moments <f Q_m>, and the passage from vector moments to
// matrix moments <f Q_j Q_k> through product linearization.
//
// Per axis, N basis functions need 2N-1 vector moments (m = 0..2N-2): that is
// the highest index produced by linearizing Q_j Q_k with j, k < N.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rnimage/basis.hpp"
#include "rnimage/error.hpp"
#include "rnimage/image.hpp"
#include "rnimage/matrix.hpp"

namespace rnimage {

/// Discrete measure Σ w_i δ(x - x_i) on the interval [lo, hi].
struct Measure1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  double lo = -1.0;
  double hi = 1.0;

  Measure1D() = default;
  Measure1D(std::vector<double> x, std::vector<double> w, double a, double b)
      : nodes(std::move(x)), weights(std::move(w)), lo(a), hi(b) {
    if (nodes.empty()) throw InvalidArgument("Measure1D: no nodes");
    if (nodes.size() != weights.size()) throw InvalidArgument("Measure1D: node/weight count mismatch");
    for (double wi : weights)
      if (!(wi > 0.0)) throw InvalidArgument("Measure1D: weights must be strictly positive");
  }

  std::size_t size() const noexcept { return nodes.size(); }
};

/// Gauss-Legendre rule on [-1,1]; exact for polynomials of degree <= 2n-1.
inline Measure1D gauss_legendre_measure(std::size_t node_count) {
  if (node_count == 0) throw InvalidArgument("gauss_legendre_measure: node_count must be >= 1");
  const std::size_t n = node_count;
  std::vector<double> x(n), w(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (std::size_t k = 1; k < n; ++k) {
        const double p2 = (static_cast<double>(2 * k + 1) * z * p1 - static_cast<double>(k) * p0) / static_cast<double>(k + 1);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      // P_n'(z) = n (z P_n - P_{n-1}) / (z^2 - 1)
      dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    if (n == 1) {
      z = 0.0;
      dp = 1.0;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return Measure1D(std::move(x), std::move(w), -1.0, 1.0);
}

/// Unit-weight pixel grid with coordinates t/(d-1) in [0,1].
struct PixelMeasure2D {
  std::size_t dx = 2;
  std::size_t dy = 2;

  PixelMeasure2D(std::size_t w, std::size_t h) : dx(w), dy(h) {
    if (dx < 2 || dy < 2) throw InvalidArgument("PixelMeasure2D: each axis needs at least 2 pixels");
  }

  static double coordinate(std::size_t t, std::size_t d) noexcept {
    return static_cast<double>(t) / static_cast<double>(d - 1);
  }
  double x(std::size_t tx) const noexcept { return coordinate(tx, dx); }
  double y(std::size_t ty) const noexcept { return coordinate(ty, dy); }
};

/// Scalar function of one real variable.
template <class F>
concept FunctionOracle = std::regular_invocable<F, double> && std::convertible_to<std::invoke_result_t<F, double>, double>;

/// [<f Q_0>, ..., <f Q_{count-1}>] = Σ_i w_i f(x_i) Q_m(x_i).
template <FunctionOracle F>
std::vector<double> vector_moments_1d(F&& f, const Measure1D& mu, BasisKind basis, std::size_t count) {
  if (count == 0) throw InvalidArgument("vector_moments_1d: count must be >= 1");
  std::vector<double> out(count, 0.0);
  std::vector<double> q(count);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double wf = mu.weights[i] * static_cast<double>(f(mu.nodes[i]));
    evaluate_all_into(basis, mu.nodes[i], q);
    for (std::size_t m = 0; m < count; ++m) out[m] += wf * q[m];
  }
  return out;
}

/// Moments <Q_m df/dx>; `df` is the derivative oracle, not f.
template <FunctionOracle F>
std::vector<double> derivative_moments_1d(F&& df, const Measure1D& mu, BasisKind basis, std::size_t count) {
  return vector_moments_1d(std::forward<F>(df), mu, basis, count);
}

namespace detail {

// table(t, m) = Q_m(t/(d-1))
inline Matrix axis_table(BasisKind basis, std::size_t d, std::size_t count) {
  Matrix t(d, count);
  for (std::size_t i = 0; i < d; ++i) evaluate_all_into(basis, PixelMeasure2D::coordinate(i, d), t.row(i));
  return t;
}

}  // namespace detail

/// Entry (mx, my) = Σ_{tx,ty} f(tx,ty) Q_mx(x) Q_my(y), computed separably.
inline Matrix vector_moments_2d(const GrayImage& img, BasisKind basis, std::size_t mx_max, std::size_t my_max) {
  if (img.empty()) throw InvalidArgument("vector_moments_2d: empty image");
  if (mx_max == 0 || my_max == 0) throw InvalidArgument("vector_moments_2d: counts must be >= 1");
  const PixelMeasure2D grid(img.width, img.height);
  const Matrix qx = detail::axis_table(basis, grid.dx, mx_max);
  const Matrix qy = detail::axis_table(basis, grid.dy, my_max);
  Matrix out(mx_max, my_max);
  std::vector<double> row_sum(mx_max);
  for (std::size_t ty = 0; ty < grid.dy; ++ty) {
    std::fill(row_sum.begin(), row_sum.end(), 0.0);
    for (std::size_t tx = 0; tx < grid.dx; ++tx) {
      const double f = img.at(tx, ty);
      if (f == 0.0) continue;
      const auto q = qx.row(tx);
      for (std::size_t m = 0; m < mx_max; ++m) row_sum[m] += f * q[m];
    }
    const auto q = qy.row(ty);
    for (std::size_t mx = 0; mx < mx_max; ++mx)
      for (std::size_t my = 0; my < my_max; ++my) out(mx, my) += row_sum[mx] * q[my];
  }
  return out;
}

/// Matrix moments from a (mx × my) table of vector moments; the result has
/// dimension nx·ny with tensor index j = jx·ny + jy. A 1D table is a column
/// (my = 1, ny = 1).
inline Matrix matrix_moments_from_vector(const Matrix& vec, BasisKind basis, std::size_t nx, std::size_t ny) {
  if (nx == 0 || ny == 0) throw InvalidArgument("matrix_moments_from_vector: basis size must be >= 1");
  if (vec.rows() < 2 * nx - 1 || vec.cols() < 2 * ny - 1)
    throw InvalidArgument("matrix_moments_from_vector: insufficient vector moments (need " +
                          std::to_string(2 * nx - 1) + "x" + std::to_string(2 * ny - 1) + ")");
  const LinearizationTable lx(basis.family, nx);
  const LinearizationTable ly(basis.family, ny);
  const std::size_t my_count = 2 * ny - 1;
  // Contract x first: T[(jx,kx)][my] = Σ_mx a^{jx kx}_mx vec[mx][my]
  Matrix partial(nx * nx, my_count);
  for (std::size_t jx = 0; jx < nx; ++jx)
    for (std::size_t kx = jx; kx < nx; ++kx) {
      auto dst = partial.row(jx * nx + kx);
      for (const auto& term : lx(jx, kx)) {
        const auto src = vec.row(term.index);
        for (std::size_t my = 0; my < my_count; ++my) dst[my] += term.coeff * src[my];
      }
    }
  const std::size_t dim = nx * ny;
  Matrix out(dim, dim);
  for (std::size_t jx = 0; jx < nx; ++jx)
    for (std::size_t kx = jx; kx < nx; ++kx) {
      const auto t = partial.row(jx * nx + kx);
      for (std::size_t jy = 0; jy < ny; ++jy)
        for (std::size_t ky = 0; ky < ny; ++ky) {
          double s = 0.0;
          for (const auto& term : ly(jy, ky)) s += term.coeff * t[term.index];
          const std::size_t a = jx * ny + jy;
          const std::size_t b = kx * ny + ky;
          out(a, b) = s;
          out(b, a) = s;
        }
    }
  return out;
}

inline Matrix column(std::span<const double> v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

inline Matrix matrix_moments_from_vector(std::span<const double> vec, BasisKind basis, std::size_t n) {
  return matrix_moments_from_vector(column(vec), basis, n, 1);
}

/// Gramm matrix <Q_j Q_k>: the f ≡ 1 case of matrix_moments_from_vector.
inline Matrix gramm_from_vector(const Matrix& vec1, BasisKind basis, std::size_t nx, std::size_t ny) {
  return matrix_moments_from_vector(vec1, basis, nx, ny);
}

inline Matrix gramm_from_vector(std::span<const double> vec1, BasisKind basis, std::size_t n) {
  return matrix_moments_from_vector(vec1, basis, n);
}

/// Everything the estimators need: vector moments of f and of 1 (each
/// (2nx-1)×(2ny-1)), the matrix moments F, and the Gramm matrix G.
/// One-dimensional sets have ny = 1 and dimensionality 1.
struct MomentSet {
  BasisKind basis;
  std::size_t nx = 0;
  std::size_t ny = 1;
  int dimensionality = 1;
  Matrix vec;
  Matrix vec1;
  Matrix F;
  Matrix G;

  std::size_t dim() const noexcept { return nx * ny; }

  static MomentSet from_vectors(BasisKind basis, std::size_t nx, std::size_t ny, int dimensionality, Matrix vec,
                                Matrix vec1) {
    MomentSet ms;
    ms.basis = basis;
    ms.nx = nx;
    ms.ny = ny;
    ms.dimensionality = dimensionality;
    ms.F = matrix_moments_from_vector(vec, basis, nx, ny);
    ms.G = gramm_from_vector(vec1, basis, nx, ny);
    ms.vec = std::move(vec);
    ms.vec1 = std::move(vec1);
    return ms;
  }
};

/// 1D moment set for f over `mu` with n basis functions.
template <FunctionOracle Fn>
MomentSet moment_set_1d(Fn&& f, const Measure1D& mu, BasisKind basis, std::size_t n) {
  if (n == 0) throw InvalidArgument("moment_set_1d: n must be >= 1");
  const std::size_t count = 2 * n - 1;
  auto vec = vector_moments_1d(std::forward<Fn>(f), mu, basis, count);
  auto vec1 = vector_moments_1d([](double) { return 1.0; }, mu, basis, count);
  return MomentSet::from_vectors(basis, n, 1, 1, column(vec), column(vec1));
}

/// 2D moment set of an image under the unit-weight pixel measure.
inline MomentSet moment_set_2d(const GrayImage& img, BasisKind basis, std::size_t nx, std::size_t ny) {
  if (nx == 0 || ny == 0) throw InvalidArgument("moment_set_2d: basis sizes must be >= 1");
  if (img.empty()) throw InvalidArgument("moment_set_2d: empty image");
  const std::size_t mx = 2 * nx - 1;
  const std::size_t my = 2 * ny - 1;
  Matrix vec = vector_moments_2d(img, basis, mx, my);
  // Full grid is a product measure: <Q_mx Q_my> = <Q_mx>_x <Q_my>_y.
  const PixelMeasure2D grid(img.width, img.height);
  const Matrix qx = detail::axis_table(basis, grid.dx, mx);
  const Matrix qy = detail::axis_table(basis, grid.dy, my);
  std::vector<double> sx(mx, 0.0), sy(my, 0.0);
  for (std::size_t t = 0; t < grid.dx; ++t)
    for (std::size_t m = 0; m < mx; ++m) sx[m] += qx(t, m);
  for (std::size_t t = 0; t < grid.dy; ++t)
    for (std::size_t m = 0; m < my; ++m) sy[m] += qy(t, m);
  Matrix vec1(mx, my);
  for (std::size_t a = 0; a < mx; ++a)
    for (std::size_t b = 0; b < my; ++b) vec1(a, b) = sx[a] * sy[b];
  return MomentSet::from_vectors(basis, nx, ny, 2, std::move(vec), std::move(vec1));
}

// JSON: {basis, n or [nx,ny], vec, vec1, F, G}; matrices as arrays of rows.

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidArgument("matrix JSON must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.at(0).size() : 0;
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw InvalidArgument("matrix JSON rows are ragged");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

inline nlohmann::json to_json(const MomentSet& ms) {
  nlohmann::json j;
  j["basis"] = to_string(ms.basis);
  if (ms.dimensionality == 1) {
    j["n"] = ms.nx;
    j["vec"] = std::vector<double>(ms.vec.data().begin(), ms.vec.data().end());
    j["vec1"] = std::vector<double>(ms.vec1.data().begin(), ms.vec1.data().end());
  } else {
    j["n"] = {ms.nx, ms.ny};
    j["vec"] = matrix_to_json(ms.vec);
    j["vec1"] = matrix_to_json(ms.vec1);
  }
  j["F"] = matrix_to_json(ms.F);
  j["G"] = matrix_to_json(ms.G);
  return j;
}

inline MomentSet moment_set_from_json(const nlohmann::json& j) {
  MomentSet ms;
  ms.basis = basis_from_string(j.at("basis").get<std::string>());
  const auto& n = j.at("n");
  if (n.is_array()) {
    ms.dimensionality = 2;
    ms.nx = n.at(0).get<std::size_t>();
    ms.ny = n.at(1).get<std::size_t>();
    ms.vec = matrix_from_json(j.at("vec"));
    ms.vec1 = matrix_from_json(j.at("vec1"));
  } else {
    ms.dimensionality = 1;
    ms.nx = n.get<std::size_t>();
    ms.ny = 1;
    ms.vec = column(j.at("vec").get<std::vector<double>>());
    ms.vec1 = column(j.at("vec1").get<std::vector<double>>());
  }
  ms.F = matrix_from_json(j.at("F"));
  ms.G = matrix_from_json(j.at("G"));
  return ms;
}

}  // namespace rnimage
