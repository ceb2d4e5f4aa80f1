#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace msadapt {

inline constexpr double kSimplexSumTol = 1e-9;

/// A point in the probability simplex. Shared between solver iterates z and
/// target mixture weights lambda.
struct SimplexWeights {
  std::vector<double> w;

  std::size_t dim() const { return w.size(); }
  double operator[](std::size_t k) const { return w[k]; }

  static SimplexWeights uniform(std::size_t p) {
    assert(p >= 1);
    return {std::vector<double>(p, 1.0 / static_cast<double>(p))};
  }

  static SimplexWeights vertex(std::size_t p, std::size_t k) {
    assert(k < p);
    std::vector<double> w(p, 0.0);
    w[k] = 1.0;
    return {std::move(w)};
  }

  /// Checked constructor: rejects negative entries and mass away from 1.
  static SimplexWeights validated(std::vector<double> w) {
    if (w.empty()) throw std::invalid_argument("simplex point must have dimension >= 1");
    double sum = 0.0;
    for (double v : w) {
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument("simplex point has a negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexSumTol)
      throw std::invalid_argument("simplex point mass differs from 1 beyond tolerance");
    return {std::move(w)};
  }
};

/// Euclidean projection onto the probability simplex (sort-based, O(p log p)).
inline std::vector<double> project_to_simplex(std::vector<double> v) {
  const std::size_t p = v.size();
  assert(p >= 1);
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t i = 0; i < p; ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = i;
      tau = t;
    }
  }
  (void)rho;
  for (double& x : v) x = std::max(0.0, x - tau);
  return v;
}

/// All points of the regular simplex grid with `steps` subdivisions per edge,
/// i.e. every lambda with lambda_k = m_k/steps, m_k nonnegative integers
/// summing to steps. For p=2 this is steps+1 points.
inline std::vector<SimplexWeights> simplex_grid(std::size_t p, std::size_t steps) {
  assert(p >= 1 && steps >= 1);
  std::vector<SimplexWeights> out;
  const double inv = 1.0 / static_cast<double>(steps);
  std::vector<double> w(p);
  auto rec = [&](auto&& self, std::size_t k, std::size_t rem) -> void {
    if (k + 1 == p) {
      w[k] = static_cast<double>(rem) * inv;
      out.push_back({w});
      return;
    }
    for (std::size_t m = 0; m <= rem; ++m) {
      w[k] = static_cast<double>(m) * inv;
      self(self, k + 1, rem - m);
    }
  };
  rec(rec, 0, steps);
  return out;
}

/// Uniform sample from the simplex (normalized exponentials).
template <typename Rng>
SimplexWeights sample_simplex(Rng& rng, std::size_t p) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> w(p);
  double sum = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    w[k] = -std::log(u);
    sum += w[k];
  }
  for (double& x : w) x /= sum;
  return {std::move(w)};
}

}  // namespace msadapt
