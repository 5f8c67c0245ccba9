#pragma once

// Estimators built from a MomentSet:
//   least squares     A_LS(x) = q(x)ᵀ G⁻¹ <fQ>
//   Radon-Nikodym     A_RN(x) = q(x)ᵀ G⁻¹FG⁻¹ q(x) / q(x)ᵀ G⁻¹ q(x)
// plus trace averages, the natural basis of F ψ = λ G ψ and eigenvalue-count
// Lebesgue integration.
//
// In 2D the basis vector is q = q_x ⊗ q_y with index jx·ny + jy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rnimage/basis.hpp"
#include "rnimage/error.hpp"
#include "rnimage/image.hpp"
#include "rnimage/linalg.hpp"
#include "rnimage/matrix.hpp"
#include "rnimage/moments.hpp"

namespace rnimage {

enum class Method { LeastSquares, RadonNikodym };

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

class Reconstructor {
 public:
  explicit Reconstructor(const MomentSet& ms)
      : basis_(ms.basis), nx_(ms.nx), ny_(ms.ny), dimensionality_(ms.dimensionality), factor_(cholesky(ms.G)) {
    std::vector<double> restricted(dim());
    for (std::size_t jx = 0; jx < nx_; ++jx)
      for (std::size_t jy = 0; jy < ny_; ++jy) restricted[jx * ny_ + jy] = ms.vec(jx, jy);
    ls_coeffs_ = spd_solve(factor_, restricted);
    const Matrix ginv_f = spd_solve(factor_, ms.F);
    rn_core_ = spd_solve(factor_, ginv_f.transposed());
    rn_core_.symmetrize();
  }

  BasisKind basis() const noexcept { return basis_; }
  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  int dimensionality() const noexcept { return dimensionality_; }
  std::size_t dim() const noexcept { return nx_ * ny_; }

  /// G⁻¹<fQ>; tensor-indexed in 2D.
  const std::vector<double>& ls_coeffs() const noexcept { return ls_coeffs_; }
  /// M = G⁻¹ F G⁻¹.
  const Matrix& rn_core() const noexcept { return rn_core_; }
  const SpdFactor& gramm_factor() const noexcept { return factor_; }

  /// 1D LS coefficients as a polynomial.
  CoeffVector ls_polynomial() const { return {basis_, ls_coeffs_}; }

  std::vector<double> basis_vector(double x) const {
    require_dimensionality(1);
    return evaluate_all(basis_, nx_, x);
  }

  std::vector<double> basis_vector(Point2 p) const {
    require_dimensionality(2);
    const auto qx = evaluate_all(basis_, nx_, p.x);
    const auto qy = evaluate_all(basis_, ny_, p.y);
    std::vector<double> q(dim());
    for (std::size_t jx = 0; jx < nx_; ++jx)
      for (std::size_t jy = 0; jy < ny_; ++jy) q[jx * ny_ + jy] = qx[jx] * qy[jy];
    return q;
  }

  double ls_from_basis(std::span<const double> q) const { return dot(q, ls_coeffs_); }

  /// Ratio of quadratic forms; `scratch` must have dim() elements.
  double rn_from_basis(std::span<const double> q, std::span<double> scratch) const {
    const double num = quadratic_form(rn_core_, q);
    std::copy(q.begin(), q.end(), scratch.begin());
    forward_substitute(factor_, scratch);
    return num / dot(scratch, scratch);
  }

  double rn_from_basis(std::span<const double> q) const {
    std::vector<double> scratch(q.size());
    return rn_from_basis(q, scratch);
  }

  /// qᵀ G⁻¹ q (inverse Christoffel function).
  double kernel_diagonal(std::span<const double> q) const {
    std::vector<double> z(q.begin(), q.end());
    forward_substitute(factor_, z);
    return dot(z, z);
  }

 private:
  void require_dimensionality(int d) const {
    if (dimensionality_ != d)
      throw InvalidArgument("reconstructor is " + std::to_string(dimensionality_) + "D, point is " + std::to_string(d) + "D");
  }

  BasisKind basis_;
  std::size_t nx_;
  std::size_t ny_;
  int dimensionality_;
  SpdFactor factor_;
  std::vector<double> ls_coeffs_;
  Matrix rn_core_;
};

inline Reconstructor build_reconstructor(const MomentSet& ms) { return Reconstructor(ms); }

template <class P>
double eval_ls(const Reconstructor& r, P x) {
  return r.ls_from_basis(r.basis_vector(x));
}

template <class P>
double eval_rn(const Reconstructor& r, P x) {
  return r.rn_from_basis(r.basis_vector(x));
}

template <class P>
double evaluate(const Reconstructor& r, Method method, P x) {
  return method == Method::LeastSquares ? eval_ls(r, x) : eval_rn(r, x);
}

/// Normalized reproducing kernel ψ_{x0}(x) = q_xᵀ G⁻¹ q_x0 / sqrt(q_x0ᵀ G⁻¹ q_x0).
template <class P>
double eval_psi_x0(const Reconstructor& r, P x0, P x) {
  const auto q0 = r.basis_vector(x0);
  const auto g0 = spd_solve(r.gramm_factor(), q0);
  return dot(r.basis_vector(x), g0) / std::sqrt(dot(q0, g0));
}

/// Derivative estimate from a MomentSet whose vector moments are <Q_m df/dx>.
/// RN here estimates df/dx itself, so its range bounds are those of df/dx.
inline double reconstruct_derivative_1d(const Reconstructor& derivative_reconstructor, Method method, double x) {
  return evaluate(derivative_reconstructor, method, x);
}

inline double reconstruct_derivative_1d(const MomentSet& dms, Method method, double x) {
  return reconstruct_derivative_1d(build_reconstructor(dms), method, x);
}

/// Central difference of an f-estimator. Kept only to show why differentiating
/// the RN approximant is the wrong way to estimate df/dx.
inline double differentiate_reconstruction(const Reconstructor& r, Method method, double x, double step) {
  if (!(step > 0.0)) throw InvalidArgument("differentiate_reconstruction: step must be > 0");
  return (evaluate(r, method, x + step) - evaluate(r, method, x - step)) / (2.0 * step);
}

/// Estimator values at every pixel, before clamping.
struct Reconstruction {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // row-major, unclamped
  double pre_clamp_min = 0.0;
  double pre_clamp_max = 0.0;

  /// Clamped to [0,1] and snapped to the byte grid.
  GrayImage quantized() const {
    GrayImage img(width, height);
    for (std::size_t i = 0; i < values.size(); ++i) img.pixels[i] = quantize(values[i]) / 255.0;
    return img;
  }
};

/// Evaluates the estimator at every pixel coordinate (tx/(w-1), ty/(h-1)).
/// Rows are split across `threads` workers (0 = hardware concurrency); the
/// result does not depend on the split.
inline Reconstruction reconstruct_image(const Reconstructor& r, std::size_t width, std::size_t height, Method method,
                                        unsigned threads = 0) {
  if (r.dimensionality() != 2) throw InvalidArgument("reconstruct_image: reconstructor must be 2D");
  const PixelMeasure2D grid(width, height);
  const std::size_t nx = r.nx();
  const std::size_t ny = r.ny();
  const Matrix qx = detail::axis_table(r.basis(), grid.dx, nx);
  const Matrix qy = detail::axis_table(r.basis(), grid.dy, ny);

  Reconstruction out;
  out.width = width;
  out.height = height;
  out.values.assign(width * height, 0.0);

  auto do_rows = [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<double> q(r.dim());
    std::vector<double> scratch(r.dim());
    std::vector<double> ls_partial(nx);
    const auto& c = r.ls_coeffs();
    for (std::size_t ty = row_begin; ty < row_end; ++ty) {
      const auto yrow = qy.row(ty);
      if (method == Method::LeastSquares) {
        // Σ_jx qx[jx] (Σ_jy c[jx,jy] qy[jy])
        for (std::size_t jx = 0; jx < nx; ++jx) {
          double s = 0.0;
          for (std::size_t jy = 0; jy < ny; ++jy) s += c[jx * ny + jy] * yrow[jy];
          ls_partial[jx] = s;
        }
      }
      for (std::size_t tx = 0; tx < grid.dx; ++tx) {
        const auto xrow = qx.row(tx);
        double v;
        if (method == Method::LeastSquares) {
          v = dot(xrow, ls_partial);
        } else {
          for (std::size_t jx = 0; jx < nx; ++jx)
            for (std::size_t jy = 0; jy < ny; ++jy) q[jx * ny + jy] = xrow[jx] * yrow[jy];
          v = r.rn_from_basis(q, scratch);
        }
        out.values[ty * width + tx] = v;
      }
    }
  };

  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, height));
  if (workers <= 1) {
    do_rows(0, height);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (height + workers - 1) / workers;
    for (std::size_t begin = 0; begin < height; begin += chunk)
      pool.emplace_back(do_rows, begin, std::min(height, begin + chunk));
  }

  const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
  out.pre_clamp_min = *lo;
  out.pre_clamp_max = *hi;
  return out;
}

/// Spur(G⁻¹F) / dim G.
inline double spur_average(const MomentSet& ms) {
  const auto fac = cholesky(ms.G);
  return spd_solve(fac, ms.F).trace() / static_cast<double>(ms.dim());
}

/// Spur(G⁻¹F G⁻¹H) / dim G for two features over the same measure and basis.
inline double spur_product_average(const MomentSet& f, const MomentSet& g) {
  if (f.basis != g.basis || f.nx != g.nx || f.ny != g.ny || f.G.rows() != g.G.rows())
    throw InvalidArgument("spur_product_average: moment sets use different bases");
  const double tol = 1e-14 * std::max(f.G.max_abs(), 1.0);
  if ((f.G - g.G).max_abs() > tol) throw InvalidArgument("spur_product_average: moment sets use different measures");
  const auto fac = cholesky(f.G);
  const Matrix a = spd_solve(fac, f.F);
  const Matrix b = spd_solve(fac, g.F);
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * b(j, i);
  return s / static_cast<double>(f.dim());
}

/// Eigenbasis of F ψ = λ G ψ together with the basis it is expanded in.
struct NaturalBasis {
  BasisKind basis;
  std::size_t nx = 0;
  std::size_t ny = 1;
  int dimensionality = 1;
  GeneralizedEig eig;

  std::size_t dim() const noexcept { return eig.dim(); }

  /// ψ⁽ˢ⁾ as a polynomial (1D only).
  CoeffVector psi(std::size_t s) const {
    if (dimensionality != 1) throw InvalidArgument("NaturalBasis::psi: polynomial form is 1D only");
    return {basis, eig.vector(s)};
  }

  double psi_at(std::size_t s, double x) const { return psi(s)(x); }

  double psi_at(std::size_t s, Point2 p) const {
    if (dimensionality != 2) throw InvalidArgument("NaturalBasis::psi_at: expected 1D point");
    const auto qx = evaluate_all(basis, nx, p.x);
    const auto qy = evaluate_all(basis, ny, p.y);
    double v = 0.0;
    for (std::size_t jx = 0; jx < nx; ++jx)
      for (std::size_t jy = 0; jy < ny; ++jy) v += eig.psi(jx * ny + jy, s) * qx[jx] * qy[jy];
    return v;
  }
};

inline NaturalBasis natural_basis(const MomentSet& ms) {
  return {ms.basis, ms.nx, ms.ny, ms.dimensionality, generalized_sym_eig(ms.F, cholesky(ms.G))};
}

/// max |ΨᵀGΨ - I| and max |ΨᵀFΨ - diag λ|.
struct EigenResiduals {
  double gramm = 0.0;
  double feature = 0.0;
};

inline EigenResiduals eigen_residuals(const GeneralizedEig& eig, const Matrix& F, const Matrix& G) {
  const Matrix pt = eig.psi.transposed();
  EigenResiduals r;
  r.gramm = (pt * G * eig.psi - Matrix::identity(eig.dim())).max_abs();
  r.feature = (pt * F * eig.psi - Matrix::diagonal(eig.lambda)).max_abs();
  return r;
}

/// Eigenvalue counts per value-space bin; edges.size() == mu.size() + 1.
struct LebesgueHistogram {
  std::vector<double> edges;
  std::vector<double> mu;

  std::size_t bins() const noexcept { return mu.size(); }
  double total() const {
    double s = 0.0;
    for (double m : mu) s += m;
    return s;
  }
};

/// Counts eigenvalues with edges[i] <= λ < edges[i+1]; the last bin is closed.
/// Eigenvalues outside [edges.front(), edges.back()] are not counted.
inline LebesgueHistogram lebesgue_measure(std::span<const double> lambda, std::vector<double> edges) {
  if (lambda.empty()) throw InvalidArgument("lebesgue_measure: empty spectrum");
  if (edges.size() < 2) throw InvalidArgument("lebesgue_measure: need at least one bin");
  if (!std::is_sorted(edges.begin(), edges.end()) || std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw InvalidArgument("lebesgue_measure: edges must be strictly increasing");
  LebesgueHistogram h{std::move(edges), {}};
  h.mu.assign(h.edges.size() - 1, 0.0);
  for (double l : lambda) {
    if (l < h.edges.front() || l > h.edges.back()) continue;
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), l);
    std::size_t bin = static_cast<std::size_t>(it - h.edges.begin());
    bin = bin == 0 ? 0 : bin - 1;
    bin = std::min(bin, h.mu.size() - 1);
    h.mu[bin] += 1.0;
  }
  return h;
}

/// Uniform bins over [min λ, max λ + 1e-12].
inline LebesgueHistogram lebesgue_measure(std::span<const double> lambda, std::size_t bin_count) {
  if (lambda.empty()) throw InvalidArgument("lebesgue_measure: empty spectrum");
  if (bin_count == 0) throw InvalidArgument("lebesgue_measure: bin_count must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(lambda.begin(), lambda.end());
  const double lo = *lo_it;
  const double hi = *hi_it + 1e-12;
  std::vector<double> edges(bin_count + 1);
  for (std::size_t i = 0; i <= bin_count; ++i)
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bin_count);
  edges.back() = hi;
  return lebesgue_measure(lambda, std::move(edges));
}

inline LebesgueHistogram lebesgue_measure(const GeneralizedEig& eig, std::size_t bin_count) {
  return lebesgue_measure(eig.lambda, bin_count);
}

/// Σ g(f_i) μ_i with f_i the lower edge of bin i.
template <FunctionOracle G>
double lebesgue_integral(const LebesgueHistogram& h, G&& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.mu.size(); ++i)
    if (h.mu[i] != 0.0) s += static_cast<double>(g(h.edges[i])) * h.mu[i];
  return s;
}

/// {lambda, psi (rows of Ψ), bins, mu}; bins/mu omitted without a histogram.
inline nlohmann::json to_json(const GeneralizedEig& eig, const LebesgueHistogram* hist = nullptr) {
  nlohmann::json j;
  j["lambda"] = eig.lambda;
  j["psi"] = matrix_to_json(eig.psi);
  if (hist) {
    j["bins"] = hist->edges;
    j["mu"] = hist->mu;
  }
  return j;
}

}  // namespace rnimage
