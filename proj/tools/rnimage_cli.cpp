// rnimage: reconstruct functions and images from polynomial moments.
//
//   rnimage runge   [--basis B] [--n N] [--quad-nodes K] [--grid P] [--out file.csv]
//   rnimage image   input.pgm [--basis B] [--n N | --nx NX --ny NY] [--method ls|rn|both] [--out stem]
//   rnimage natural input.pgm [--basis B] [--n N | --nx NX --ny NY] [--bins K] [--out file.json]
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 numeric.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rnimage/rnimage.hpp"

namespace {

using namespace rnimage;
using json = nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
  std::string basis = "chebyshev";
  std::size_t n = 0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t quad_nodes = 1000;
  std::size_t grid = 1001;
  double x_min = -1.5;
  double x_max = 1.5;
  std::vector<double> extra_x;
  double step = 1e-5;
  std::string method = "both";
  std::size_t bins = 0;
  std::string input;
  std::string out;
};

double runge(double x) { return 1.0 / (1.0 + 25.0 * x * x); }
double runge_derivative(double x) {
  const double d = 1.0 + 25.0 * x * x;
  return -50.0 * x / (d * d);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Resolves --n / --nx / --ny into per-axis sizes; 1D callers ignore ny.
std::pair<std::size_t, std::size_t> axis_sizes(const RunConfig& cfg, std::size_t fallback) {
  std::size_t nx = cfg.nx ? cfg.nx : (cfg.n ? cfg.n : fallback);
  std::size_t ny = cfg.ny ? cfg.ny : (cfg.n ? cfg.n : fallback);
  if (nx == 0 || ny == 0) throw InvalidArgument("basis size must be >= 1");
  return {nx, ny};
}

BasisKind family_for(const RunConfig& cfg, Domain domain) {
  BasisKind kind = basis_from_string(cfg.basis);
  kind.domain = domain;
  return kind;
}

int cmd_runge(const RunConfig& cfg) {
  const std::size_t n = cfg.n ? cfg.n : 7;
  if (cfg.grid < 2) throw InvalidArgument("--grid must be >= 2");
  const BasisKind basis = family_for(cfg, Domain::Native);
  const Measure1D mu = gauss_legendre_measure(cfg.quad_nodes);
  const Reconstructor rf(moment_set_1d(runge, mu, basis, n));
  const Reconstructor rdf(moment_set_1d(runge_derivative, mu, basis, n));

  std::vector<double> xs(cfg.grid);
  for (std::size_t i = 0; i < cfg.grid; ++i)
    xs[i] = cfg.x_min + (cfg.x_max - cfg.x_min) * static_cast<double>(i) / static_cast<double>(cfg.grid - 1);
  xs.insert(xs.end(), cfg.extra_x.begin(), cfg.extra_x.end());

  std::string csv = "x,f,A_LS,A_RN,df,ADf_LS,ADf_RN,DAf_LS,DAf_RN\n";
  for (double x : xs) {
    const double row[] = {x,
                          runge(x),
                          eval_ls(rf, x),
                          eval_rn(rf, x),
                          runge_derivative(x),
                          reconstruct_derivative_1d(rdf, Method::LeastSquares, x),
                          reconstruct_derivative_1d(rdf, Method::RadonNikodym, x),
                          differentiate_reconstruction(rf, Method::LeastSquares, x, cfg.step),
                          differentiate_reconstruction(rf, Method::RadonNikodym, x, cfg.step)};
    for (std::size_t k = 0; k < std::size(row); ++k) {
      if (k) csv += ',';
      csv += fmt17(row[k]);
    }
    csv += '\n';
  }
  if (cfg.out.empty() || cfg.out == "-") {
    std::cout << csv;
  } else {
    write_text(cfg.out, csv);
  }
  return 0;
}

std::string default_stem(const std::string& input) {
  std::filesystem::path p(input);
  if (p.extension() == ".pgm") p.replace_extension();
  return p.string();
}

int cmd_image(const RunConfig& cfg) {
  if (cfg.method != "ls" && cfg.method != "rn" && cfg.method != "both")
    throw InvalidArgument("--method must be ls, rn or both");
  const GrayImage img = read_pgm_file(cfg.input);
  const auto [nx, ny] = axis_sizes(cfg, 8);
  const BasisKind basis = family_for(cfg, Domain::Shifted);
  const std::string stem = cfg.out.empty() ? default_stem(cfg.input) : cfg.out;

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const MomentSet ms = moment_set_2d(img, basis, nx, ny);
  const Reconstructor r(ms);
  const auto t1 = clock::now();

  json metrics;
  metrics["input"] = std::filesystem::path(cfg.input).filename().string();
  metrics["width"] = img.width;
  metrics["height"] = img.height;
  metrics["basis"] = to_string(basis);
  metrics["n"] = {nx, ny};
  json timing;
  timing["moments_and_factorization_seconds"] = std::chrono::duration<double>(t1 - t0).count();

  std::vector<std::pair<std::string, Method>> methods;
  if (cfg.method != "rn") methods.emplace_back("ls", Method::LeastSquares);
  if (cfg.method != "ls") methods.emplace_back("rn", Method::RadonNikodym);
  for (const auto& [name, method] : methods) {
    const auto s0 = clock::now();
    const Reconstruction rec = reconstruct_image(r, img.width, img.height, method);
    const auto s1 = clock::now();
    const GrayImage out = rec.quantized();
    write_pgm_file(stem + "." + name + ".pgm", out);
    const ImageMetrics m = image_metrics(img, out);
    metrics[name] = {{"pre_clamp_min", rec.pre_clamp_min},
                     {"pre_clamp_max", rec.pre_clamp_max},
                     {"max_abs", m.max_abs},
                     {"rmse", m.rmse},
                     {"psnr", finite_or_null(m.psnr)}};
    timing[name + "_seconds"] = std::chrono::duration<double>(s1 - s0).count();
  }
  write_text(stem + ".metrics.json", metrics.dump(2) + "\n");
  write_text(stem + ".timing.json", timing.dump(2) + "\n");
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

int cmd_natural(const RunConfig& cfg) {
  const GrayImage img = read_pgm_file(cfg.input);
  const auto [nx, ny] = axis_sizes(cfg, 4);
  const BasisKind basis = family_for(cfg, Domain::Shifted);
  const MomentSet ms = moment_set_2d(img, basis, nx, ny);
  const NaturalBasis nb = natural_basis(ms);
  const EigenResiduals res = eigen_residuals(nb.eig, ms.F, ms.G);

  LebesgueHistogram hist;
  if (cfg.bins) hist = lebesgue_measure(nb.eig, cfg.bins);
  json j = to_json(nb.eig, cfg.bins ? &hist : nullptr);
  j["basis"] = to_string(basis);
  j["n"] = {nx, ny};
  j["dim"] = nb.dim();
  j["spur_average"] = spur_average(ms);
  j["residuals"] = {{"gramm", res.gramm}, {"feature", res.feature}};

  const std::string text = j.dump(2) + "\n";
  if (cfg.out.empty() || cfg.out == "-") {
    std::cout << text;
  } else {
    write_text(cfg.out, text);
  }
  return 0;
}

void add_basis_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--basis", cfg.basis, "Polynomial family")->check(CLI::IsMember({"chebyshev", "legendre"}));
  sub->add_option("--n", cfg.n, "Basis size per axis")->check(CLI::PositiveNumber);
}

void add_2d_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("input", cfg.input, "Binary PGM (P5) image")->required();
  sub->add_option("--nx", cfg.nx, "Basis size along x")->check(CLI::PositiveNumber);
  sub->add_option("--ny", cfg.ny, "Basis size along y")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Least-squares and Radon-Nikodym reconstruction from polynomial moments"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* runge_cmd = app.add_subcommand("runge", "Runge function curves (CSV)");
  add_basis_options(runge_cmd, cfg);
  runge_cmd->add_option("--quad-nodes", cfg.quad_nodes, "Gauss-Legendre nodes")->check(CLI::PositiveNumber);
  runge_cmd->add_option("--grid", cfg.grid, "Number of x samples");
  runge_cmd->add_option("--x-min", cfg.x_min, "Left end of the x grid");
  runge_cmd->add_option("--x-max", cfg.x_max, "Right end of the x grid");
  runge_cmd->add_option("--extra-x", cfg.extra_x, "Extra x values appended after the grid");
  runge_cmd->add_option("--step", cfg.step, "Finite-difference step for DAf columns")->check(CLI::PositiveNumber);
  runge_cmd->add_option("--out", cfg.out, "Output CSV (default stdout)");

  auto* image_cmd = app.add_subcommand("image", "Reconstruct a PGM image");
  add_basis_options(image_cmd, cfg);
  add_2d_options(image_cmd, cfg);
  image_cmd->add_option("--method", cfg.method, "ls, rn or both")->check(CLI::IsMember({"ls", "rn", "both"}));
  image_cmd->add_option("--out", cfg.out, "Output stem (default: input without .pgm)");

  auto* natural_cmd = app.add_subcommand("natural", "Natural basis, spur average and Lebesgue histogram (JSON)");
  add_basis_options(natural_cmd, cfg);
  add_2d_options(natural_cmd, cfg);
  natural_cmd->add_option("--bins", cfg.bins, "Lebesgue histogram bins (0 = none)");
  natural_cmd->add_option("--out", cfg.out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (runge_cmd->parsed()) return cmd_runge(cfg);
    if (image_cmd->parsed()) return cmd_image(cfg);
    if (natural_cmd->parsed()) return cmd_natural(cfg);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
