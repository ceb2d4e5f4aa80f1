#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "msadapt/problem.hpp"
#include "msadapt/simplex.hpp"

namespace msadapt {

/// Expected squared loss of the constant prediction h at one support point,
/// using the label moments: E[(h - y)^2 | x] = h^2 - 2 h E[y|x] + E[y^2|x].
inline double pointwise_sq_loss(double h, double y_mean, double y_sq_mean) {
  return h * h - 2.0 * h * y_mean + y_sq_mean;
}

/// Per-point caches of the two affine functions of z behind the
/// distribution-weighted predictor, h_z(x) = J_z(x) / K_z(x) with
///   J_z(x) = sum_k z_k D_k(x) h_k(x) + eta U(x) H(x),
///   K_z(x) = sum_k z_k D_k(x) + eta U(x),
/// H(x) the plain average of the base predictions. K_z > 0 whenever eta > 0.
struct CombinerContext {
  const ProblemInstance* instance = nullptr;
  double eta = 0.0;
  std::vector<double> h_avg;  // H(x), fixed across z
  std::vector<double> jz;     // J_z(x)
  std::vector<double> kz;     // K_z(x)
  std::vector<double> hz;     // h_z(x) = J_z/K_z

  CombinerContext(const ProblemInstance& inst, double eta_in) : instance(&inst), eta(eta_in) {
    assert(eta > 0.0);
    const std::size_t n = inst.num_points();
    const std::size_t p = inst.num_domains();
    h_avg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += inst.prediction(k, i);
      h_avg[i] = s / static_cast<double>(p);
    }
    jz.resize(n);
    kz.resize(n);
    hz.resize(n);
  }

  void set_z(const std::vector<double>& z) {
    const ProblemInstance& inst = *instance;
    const std::size_t n = inst.num_points();
    const std::size_t p = inst.num_domains();
    assert(z.size() == p);
    const double eu = eta * inst.uniform_mass();
    for (std::size_t i = 0; i < n; ++i) {
      double j = eu * h_avg[i];
      double k = eu;
      for (std::size_t q = 0; q < p; ++q) {
        const double zd = z[q] * inst.density(q, i);
        j += zd * inst.prediction(q, i);
        k += zd;
      }
      jz[i] = j;
      kz[i] = k;
      hz[i] = j / k;
    }
  }
};

/// Per-domain weights of the combination at one point:
/// w_k(x) = (z_k D_k(x) + eta U(x)/p) / (sum_j z_j D_j(x) + eta U(x)).
/// Nonnegative and summing to 1; the denominator cannot vanish for eta > 0.
inline std::vector<double> combine_weights(const ProblemInstance& inst,
                                           const SimplexWeights& z, double eta,
                                           std::size_t point_index) {
  assert(eta > 0.0);
  assert(point_index < inst.num_points());
  const std::size_t p = inst.num_domains();
  const double eu = eta * inst.uniform_mass();
  std::vector<double> w(p);
  double denom = eu;
  for (std::size_t k = 0; k < p; ++k) {
    w[k] = z[k] * inst.density(k, point_index) + eu / static_cast<double>(p);
    denom += z[k] * inst.density(k, point_index);
  }
  for (double& x : w) x /= denom;
  return w;
}

inline double predict(const ProblemInstance& inst, const SimplexWeights& z, double eta,
                      std::size_t point_index) {
  const std::vector<double> w = combine_weights(inst, z, eta, point_index);
  double h = 0.0;
  for (std::size_t k = 0; k < inst.num_domains(); ++k)
    h += w[k] * inst.prediction(k, point_index);
  return h;
}

namespace detail {

// Losses of h_z under every domain marginal, reusing a populated context.
inline std::vector<double> domain_losses_from_context(const CombinerContext& ctx) {
  const ProblemInstance& inst = *ctx.instance;
  const std::size_t n = inst.num_points();
  const std::size_t p = inst.num_domains();
  std::vector<double> losses(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const SupportPoint& pt = inst.points[i];
    const double ell = pointwise_sq_loss(ctx.hz[i], pt.y_mean, pt.y_sq_mean);
    for (std::size_t k = 0; k < p; ++k) losses[k] += pt.densities[k] * ell;
  }
  return losses;
}

}  // namespace detail

/// Expected squared losses L(D_k, h_z^eta) for every domain k.
inline std::vector<double> per_domain_losses(const ProblemInstance& inst,
                                             const SimplexWeights& z, double eta) {
  CombinerContext ctx(inst, eta);
  ctx.set_z(z.w);
  return detail::domain_losses_from_context(ctx);
}

inline double domain_loss(const ProblemInstance& inst, std::size_t k,
                          const SimplexWeights& z, double eta) {
  assert(k < inst.num_domains());
  return per_domain_losses(inst, z, eta)[k];
}

/// Loss under the mixture D_lambda: linear in lambda by construction.
inline double mixture_loss(const ProblemInstance& inst, const SimplexWeights& z, double eta,
                           const SimplexWeights& lambda) {
  const std::vector<double> losses = per_domain_losses(inst, z, eta);
  double out = 0.0;
  for (std::size_t k = 0; k < losses.size(); ++k) out += lambda[k] * losses[k];
  return out;
}

struct SlackParams {
  double eta;
  double eta_prime;
};

/// Converts a target robustness slack delta into the smoothing parameters the
/// guarantee construction uses: eta = delta / (2M), eta' = delta / 2.
inline SlackParams slack_to_params(double delta, double m_bound) {
  assert(delta > 0.0 && m_bound > 0.0);
  return {delta / (2.0 * m_bound), delta / 2.0};
}

}  // namespace msadapt
