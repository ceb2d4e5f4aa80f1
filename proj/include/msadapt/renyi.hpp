#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "msadapt/problem.hpp"
#include "msadapt/simplex.hpp"

namespace msadapt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Nonnegative normalized mass vector over an indexed support.
struct DiscreteDistribution {
  std::vector<double> mass;

  std::size_t size() const { return mass.size(); }
  double operator[](std::size_t i) const { return mass[i]; }

  static DiscreteDistribution validated(std::vector<double> mass) {
    if (mass.empty()) throw std::invalid_argument("distribution must have support");
    double sum = 0.0;
    for (double m : mass) {
      if (!std::isfinite(m) || m < 0.0)
        throw std::invalid_argument("distribution mass must be finite and nonnegative");
      sum += m;
    }
    if (std::abs(sum - 1.0) > kSimplexSumTol)
      throw std::invalid_argument("distribution mass must sum to 1");
    return {std::move(mass)};
  }
};

namespace detail {

// D_alpha over raw mass spans. Conventions: summands with P(x)=0 contribute 0;
// P(x)>0 with Q(x)=0 makes the divergence infinite for alpha >= 1. Summation
// runs in the log domain to survive large alpha.
inline double renyi_divergence_raw(const std::vector<double>& pm, const std::vector<double>& qm,
                                   double alpha) {
  if (pm.size() != qm.size()) throw std::invalid_argument("distribution size mismatch");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const std::size_t n = pm.size();

  if (std::isinf(alpha)) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pm[i] <= 0.0) continue;
      if (qm[i] <= 0.0) return kInf;
      worst = std::max(worst, pm[i] / qm[i]);
    }
    return std::log(worst);
  }
  if (alpha == 1.0) {
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pm[i] <= 0.0) continue;
      if (qm[i] <= 0.0) return kInf;
      kl += pm[i] * std::log(pm[i] / qm[i]);
    }
    return kl;
  }

  // log sum_x exp(alpha log P - (alpha-1) log Q), stabilized by the max term
  std::vector<double> exponents;
  exponents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (pm[i] <= 0.0) continue;
    if (qm[i] <= 0.0) {
      if (alpha > 1.0) return kInf;
      continue;  // alpha < 1: the summand P^alpha Q^(1-alpha) vanishes
    }
    exponents.push_back(alpha * std::log(pm[i]) - (alpha - 1.0) * std::log(qm[i]));
  }
  if (exponents.empty()) return kInf;
  double m = exponents[0];
  for (double e : exponents) m = std::max(m, e);
  double s = 0.0;
  for (double e : exponents) s += std::exp(e - m);
  const double log_sum = m + std::log(s);
  return log_sum / (alpha - 1.0);
}

}  // namespace detail

/// alpha-Renyi divergence D_alpha(P || Q). alpha = 1 is the KL limit,
/// alpha = infinity the log sup-ratio.
inline double renyi_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q,
                               double alpha) {
  return detail::renyi_divergence_raw(p.mass, q.mass, alpha);
}

/// Exponentiated divergence d_alpha = exp(D_alpha); always >= 1 and
/// nondecreasing in alpha.
inline double d_alpha(const DiscreteDistribution& p, const DiscreteDistribution& q,
                      double alpha) {
  return std::exp(renyi_divergence(p, q, alpha));
}

struct FamilyDivergence {
  SimplexWeights lambda;  // minimizing mixture weight
  double value = kInf;    // inf over lambda of d_alpha(P || D_lambda)
  bool feasible = true;   // false when P has mass outside every domain support
};

namespace detail {

inline std::vector<double> mixture_density(const ProblemInstance& inst,
                                           const std::vector<double>& lambda) {
  const std::size_t n = inst.num_points();
  const std::size_t p = inst.num_domains();
  std::vector<double> mix(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k) mix[i] += lambda[k] * inst.density(k, i);
  return mix;
}

}  // namespace detail

/// Infimum of d_alpha(P || D_lambda) over the mixture family of the
/// instance's domain marginals. The inner sum S(lambda) =
/// sum_x P^alpha / D_lambda^(alpha-1) is convex in lambda for alpha > 1, so a
/// projected gradient descent (seeded by a coarse simplex grid scan when p is
/// small) reaches the optimum; for alpha = infinity the max-ratio objective is
/// minimized by projected subgradient steps.
inline FamilyDivergence d_alpha_to_family(const DiscreteDistribution& p_dist,
                                          const ProblemInstance& inst, double alpha,
                                          std::size_t grid_resolution = 101) {
  if (!(alpha > 1.0)) throw std::invalid_argument("family divergence requires alpha > 1");
  const std::size_t n = inst.num_points();
  const std::size_t p = inst.num_domains();
  if (p_dist.size() != n) throw std::invalid_argument("distribution support must match instance");

  FamilyDivergence out;
  for (std::size_t i = 0; i < n; ++i) {
    if (p_dist[i] <= 0.0) continue;
    bool covered = false;
    for (std::size_t k = 0; k < p; ++k) covered = covered || inst.density(k, i) > 0.0;
    if (!covered) {
      out.feasible = false;
      out.lambda = SimplexWeights::uniform(p);
      out.value = kInf;
      return out;
    }
  }

  const bool sup_ratio = std::isinf(alpha);

  // Inner objective: S(lambda) for finite alpha, max_x P/D_lambda for alpha=inf.
  auto objective = [&](const std::vector<double>& lambda) {
    const std::vector<double> mix = detail::mixture_density(inst, lambda);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p_dist[i] <= 0.0) continue;
      if (mix[i] <= 0.0) return kInf;
      if (sup_ratio)
        acc = std::max(acc, p_dist[i] / mix[i]);
      else
        acc += std::exp(alpha * std::log(p_dist[i]) - (alpha - 1.0) * std::log(mix[i]));
    }
    return acc;
  };
  auto gradient = [&](const std::vector<double>& lambda) {
    const std::vector<double> mix = detail::mixture_density(inst, lambda);
    std::vector<double> g(p, 0.0);
    if (sup_ratio) {
      std::size_t worst = 0;
      double ratio = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (p_dist[i] <= 0.0 || mix[i] <= 0.0) continue;
        if (p_dist[i] / mix[i] > ratio) {
          ratio = p_dist[i] / mix[i];
          worst = i;
        }
      }
      for (std::size_t k = 0; k < p; ++k)
        g[k] = -p_dist[worst] * inst.density(k, worst) / (mix[worst] * mix[worst]);
      return g;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (p_dist[i] <= 0.0 || mix[i] <= 0.0) continue;
      const double common =
          -(alpha - 1.0) * std::exp(alpha * std::log(p_dist[i]) - alpha * std::log(mix[i]));
      for (std::size_t k = 0; k < p; ++k) g[k] += common * inst.density(k, i);
    }
    return g;
  };

  std::vector<double> best = SimplexWeights::uniform(p).w;
  double best_val = objective(best);
  if (p <= 3 && grid_resolution >= 2) {
    for (const SimplexWeights& cand : simplex_grid(p, grid_resolution - 1)) {
      const double v = objective(cand.w);
      if (v < best_val) {
        best_val = v;
        best = cand.w;
      }
    }
  }

  std::vector<double> cur = best;
  double cur_val = best_val;
  for (int iter = 0; iter < 2000; ++iter) {
    if (!std::isfinite(cur_val)) break;
    const std::vector<double> g = gradient(cur);
    double gnorm = 0.0;
    for (double x : g) gnorm += x * x;
    gnorm = std::sqrt(gnorm);
    if (gnorm < 1e-16) break;

    double step = 1.0 / gnorm;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      std::vector<double> cand(p);
      for (std::size_t k = 0; k < p; ++k) cand[k] = cur[k] - step * g[k];
      cand = project_to_simplex(std::move(cand));
      const double v = objective(cand);
      if (v < cur_val) {
        cur = std::move(cand);
        cur_val = v;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    if (cur_val < best_val) {
      best_val = cur_val;
      best = cur;
    }
  }
  if (cur_val < best_val) {
    best_val = cur_val;
    best = cur;
  }

  out.lambda = {std::move(best)};
  out.value = sup_ratio ? best_val
                        : (best_val <= 0.0 ? kInf : std::exp(std::log(best_val) / (alpha - 1.0)));
  return out;
}

/// Divergence-weighted loss guarantee: [(epsilon_term) * d_alpha]^((alpha-1)/alpha) * M^(1/alpha).
/// As alpha -> infinity with d_alpha = 1 this recovers epsilon_term itself.
inline double guarantee_bound(double epsilon_term, double d_alpha_value, double m_bound,
                              double alpha) {
  if (epsilon_term < 0.0 || d_alpha_value < 0.0 || m_bound < 0.0)
    throw std::invalid_argument("guarantee_bound requires nonnegative inputs");
  if (!(alpha > 1.0)) throw std::invalid_argument("guarantee_bound requires alpha > 1");
  if (epsilon_term == 0.0) return 0.0;
  if (std::isinf(alpha)) return epsilon_term * d_alpha_value;
  return std::pow(epsilon_term * d_alpha_value, (alpha - 1.0) / alpha) *
         std::pow(m_bound, 1.0 / alpha);
}

struct EpsilonBound {
  double value = 0.0;
  int violating_domain = -1;  // index of the first support violation, -1 if none
};

/// Estimate-distributions loss term: max_k of the guarantee applied to
/// d_alpha(Dhat_k || D_k). Requires supp(Dhat_k) inside supp(D_k); a violation
/// makes the term infinite and names the offending domain.
inline EpsilonBound epsilon_hat(const ProblemInstance& true_instance,
                                const ProblemInstance& estimated_instance, double epsilon,
                                double m_bound, double alpha) {
  if (true_instance.num_points() != estimated_instance.num_points() ||
      true_instance.num_domains() != estimated_instance.num_domains())
    throw std::invalid_argument("instances must share support and domain count");
  if (epsilon < 0.0 || m_bound < 0.0)
    throw std::invalid_argument("epsilon and M must be nonnegative");
  if (!(alpha > 1.0)) throw std::invalid_argument("epsilon_hat requires alpha > 1");

  const std::size_t n = true_instance.num_points();
  const std::size_t p = true_instance.num_domains();
  EpsilonBound out;
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<double> est(n), tru(n);
    for (std::size_t i = 0; i < n; ++i) {
      est[i] = estimated_instance.density(k, i);
      tru[i] = true_instance.density(k, i);
    }
    const double d = std::exp(detail::renyi_divergence_raw(est, tru, alpha));
    if (std::isinf(d)) {
      out.value = kInf;
      out.violating_domain = static_cast<int>(k);
      return out;
    }
    out.value = std::max(out.value, guarantee_bound(epsilon, d, m_bound, alpha));
  }
  return out;
}

/// Distinct-conditionals loss term:
/// max_k [E_{D_k(x)} d_alpha(T(.|x) || D_k(.|x))^(alpha-1)]^(1/alpha)
///        * epsilon^((alpha-1)/alpha) * M^(1/alpha),
/// with the expectation summed directly over the support. `target_cond` holds
/// one row per support point over the instance's shared label set.
inline EpsilonBound epsilon_T(const ProblemInstance& inst,
                              const std::vector<std::vector<double>>& target_cond,
                              double epsilon, double m_bound, double alpha) {
  const std::size_t n = inst.num_points();
  const std::size_t p = inst.num_domains();
  if (target_cond.size() != n)
    throw ValidationError("target conditional must cover every support point");
  if (epsilon < 0.0 || m_bound < 0.0)
    throw std::invalid_argument("epsilon and M must be nonnegative");
  if (!(alpha > 1.0)) throw std::invalid_argument("epsilon_T requires alpha > 1");

  for (std::size_t i = 0; i < n; ++i) {
    if (!inst.points[i].label_dist)
      throw ValidationError("point " + std::to_string(i) + " lacks label_dist");
    const std::size_t m = inst.points[i].label_dist->labels.size();
    if (target_cond[i].size() != m)
      throw ValidationError("target conditional row " + std::to_string(i) +
                            " does not match the label set");
    double s = 0.0;
    for (double q : target_cond[i]) {
      if (!std::isfinite(q) || q < 0.0)
        throw ValidationError("invalid target conditional mass at point " + std::to_string(i));
      s += q;
    }
    if (std::abs(s - 1.0) > kConditionalSumTol)
      throw ValidationError("target conditional row " + std::to_string(i) + " does not sum to 1");
  }

  const bool at_infinity = std::isinf(alpha);
  EpsilonBound out;
  if (epsilon == 0.0) {
    // zero epsilon wipes the whole product unless a support violation occurs
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        if (inst.density(k, i) <= 0.0) continue;
        if (std::isinf(detail::renyi_divergence_raw(target_cond[i],
                                                    inst.points[i].label_dist->cond[k], alpha))) {
          out.value = kInf;
          out.violating_domain = static_cast<int>(k);
          return out;
        }
      }
    out.value = 0.0;
    return out;
  }

  for (std::size_t k = 0; k < p; ++k) {
    double expectation = 0.0;  // E_{D_k} d_alpha(x)^(alpha-1), or max d_inf for alpha=inf
    for (std::size_t i = 0; i < n; ++i) {
      const double mass = inst.density(k, i);
      if (mass <= 0.0) continue;
      const double div =
          detail::renyi_divergence_raw(target_cond[i], inst.points[i].label_dist->cond[k], alpha);
      if (std::isinf(div)) {
        out.value = kInf;
        out.violating_domain = static_cast<int>(k);
        return out;
      }
      if (at_infinity)
        expectation = std::max(expectation, std::exp(div));
      else
        expectation += mass * std::exp((alpha - 1.0) * div);
    }
    const double val = at_infinity
                           ? expectation * epsilon
                           : std::pow(expectation, 1.0 / alpha) *
                                 std::pow(epsilon, (alpha - 1.0) / alpha) *
                                 std::pow(m_bound, 1.0 / alpha);
    out.value = std::max(out.value, val);
  }
  return out;
}

}  // namespace msadapt
