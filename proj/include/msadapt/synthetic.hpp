#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "msadapt/problem.hpp"

namespace msadapt {

struct LinearFit {
  std::array<double, 2> a{0.0, 0.0};
  double b = 0.0;

  double operator()(const std::array<double, 2>& x) const { return a[0] * x[0] + a[1] * x[1] + b; }
};

/// Ordinary least squares with intercept on 2-d inputs, via the normal
/// equations (3x3 Gaussian elimination with partial pivoting).
inline LinearFit fit_linear(const std::vector<std::array<double, 2>>& xs,
                            const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_linear: size mismatch");
  if (xs.size() < 3) throw std::invalid_argument("fit_linear: need at least 3 points");

  // normal matrix A^T A and right side A^T y for rows (x1, x2, 1)
  double g[3][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double row[3] = {xs[i][0], xs[i][1], 1.0};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) g[r][c] += row[r] * row[c];
      g[r][3] += row[r] * ys[i];
    }
  }

  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(g[r][col]) > std::abs(g[pivot][col])) pivot = r;
    if (std::abs(g[pivot][col]) < 1e-12)
      throw std::runtime_error("fit_linear: singular normal matrix (collinear samples)");
    if (pivot != col)
      for (int c = 0; c < 4; ++c) std::swap(g[pivot][c], g[col][c]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double factor = g[r][col] / g[col][col];
      for (int c = col; c < 4; ++c) g[r][c] -= factor * g[col][c];
    }
  }
  return {{g[0][3] / g[0][0], g[1][3] / g[1][1]}, g[2][3] / g[2][2]};
}

struct GaussianBenchConfig {
  enum class Variant { two_domain, four_domain };
  std::size_t n_train = 200;
  std::size_t n_support = 500;
  std::uint64_t seed = 0;
  Variant variant = Variant::two_domain;
};

namespace detail {

inline double gaussian2_pdf(const std::array<double, 2>& x, const std::array<double, 2>& mean) {
  const double dx = x[0] - mean[0];
  const double dy = x[1] - mean[1];
  return std::exp(-0.5 * (dx * dx + dy * dy)) / (2.0 * M_PI);
}

}  // namespace detail

/// Two-dimensional Gaussian-mixture benchmark: four unit-variance Gaussians
/// centered on the corners (+-1, +-1); each domain is a uniform mixture of a
/// subset of them and labels follow f(x1, x2) = x1^2 + x2^2. Per-domain linear
/// regressors are fit on fresh draws, support points are sampled from the
/// balanced union of the domain mixtures, and densities are the exact mixture
/// pdf values renormalized over the support.
inline ProblemInstance make_gaussian_problem(const GaussianBenchConfig& config,
                                             std::vector<std::array<double, 2>>* support_out =
                                                 nullptr) {
  if (config.n_train < 3) throw std::invalid_argument("n_train must be at least 3");
  if (config.n_support < 1) throw std::invalid_argument("n_support must be at least 1");

  const std::array<std::array<double, 2>, 4> centers = {
      {{1.0, 1.0}, {-1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}}};
  std::vector<std::vector<std::size_t>> domain_members;
  if (config.variant == GaussianBenchConfig::Variant::two_domain) {
    domain_members = {{0, 1, 2}, {1, 2, 3}};
  } else {
    domain_members = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  }
  const std::size_t p = domain_members.size();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw_from_mixture = [&](const std::vector<std::size_t>& members) {
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    const auto& c = centers[members[pick(rng)]];
    return std::array<double, 2>{c[0] + gauss(rng), c[1] + gauss(rng)};
  };
  auto label = [](const std::array<double, 2>& x) { return x[0] * x[0] + x[1] * x[1]; };

  std::vector<LinearFit> fits(p);
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<std::array<double, 2>> xs(config.n_train);
    std::vector<double> ys(config.n_train);
    for (std::size_t i = 0; i < config.n_train; ++i) {
      xs[i] = draw_from_mixture(domain_members[k]);
      ys[i] = label(xs[i]);
    }
    try {
      fits[k] = fit_linear(xs, ys);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " (seed " + std::to_string(config.seed) +
                               ")");
    }
  }

  std::vector<std::array<double, 2>> support(config.n_support);
  std::uniform_int_distribution<std::size_t> pick_domain(0, p - 1);
  for (auto& x : support) x = draw_from_mixture(domain_members[pick_domain(rng)]);

  ProblemInstance inst;
  for (std::size_t k = 0; k < p; ++k) inst.domain_names.push_back("domain" + std::to_string(k + 1));
  inst.points.resize(config.n_support);
  std::vector<double> col_sums(p, 0.0);
  for (std::size_t i = 0; i < config.n_support; ++i) {
    SupportPoint& pt = inst.points[i];
    pt.densities.resize(p);
    pt.predictions.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
      double pdf = 0.0;
      for (std::size_t m : domain_members[k]) pdf += detail::gaussian2_pdf(support[i], centers[m]);
      pdf /= static_cast<double>(domain_members[k].size());
      pt.densities[k] = pdf;
      col_sums[k] += pdf;
      pt.predictions[k] = fits[k](support[i]);
    }
    const double y = label(support[i]);
    pt.y_mean = y;
    pt.y_sq_mean = y * y;  // deterministic labels
  }
  for (std::size_t i = 0; i < config.n_support; ++i)
    for (std::size_t k = 0; k < p; ++k) inst.points[i].densities[k] /= col_sums[k];

  validate_instance(inst);
  if (support_out) *support_out = std::move(support);
  return inst;
}

/// Mixture pdf of one benchmark domain at a raw 2-d point; matches the
/// densities of make_gaussian_problem before renormalization.
inline double benchmark_domain_pdf(const GaussianBenchConfig& config, std::size_t domain,
                                   const std::array<double, 2>& x) {
  const std::array<std::array<double, 2>, 4> centers = {
      {{1.0, 1.0}, {-1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}}};
  std::vector<std::vector<std::size_t>> domain_members;
  if (config.variant == GaussianBenchConfig::Variant::two_domain) {
    domain_members = {{0, 1, 2}, {1, 2, 3}};
  } else {
    domain_members = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  }
  const auto& members = domain_members.at(domain);
  double pdf = 0.0;
  for (std::size_t m : members) pdf += detail::gaussian2_pdf(x, centers[m]);
  return pdf / static_cast<double>(members.size());
}

}  // namespace msadapt
