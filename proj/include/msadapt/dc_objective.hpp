#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "msadapt/combiner.hpp"
#include "msadapt/problem.hpp"
#include "msadapt/simplex.hpp"

namespace msadapt {

struct ValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

/// Max over points and domains of the pointwise expected loss of the base
/// predictors; the smallest loss bound the DC decomposition tolerates.
inline double max_pointwise_loss(const ProblemInstance& inst) {
  double worst = 0.0;
  for (const SupportPoint& pt : inst.points)
    for (double h : pt.predictions)
      worst = std::max(worst, pointwise_sq_loss(h, pt.y_mean, pt.y_sq_mean));
  return worst;
}

/// Default loss bound: the max pointwise loss padded by 1%.
inline double auto_m_bound(const ProblemInstance& inst) {
  return 1.01 * max_pointwise_loss(inst);
}

/// Evaluates the min-max objective and the convex split u_k - v_k behind it.
/// Caches the per-point affine quantities J_z, K_z for the current z so that
/// the inner solver can sweep k cheaply. Single-threaded; hold one per solver.
class DcEvaluator {
 public:
  DcEvaluator(const ProblemInstance& inst, double eta, double m_bound)
      : ctx_(inst, eta), m_bound_(m_bound) {
    assert(m_bound > 0.0);
    const std::size_t n = inst.num_points();
    log_k_.resize(n);
    ell_.resize(n);
  }

  const ProblemInstance& instance() const { return *ctx_.instance; }
  double eta() const { return ctx_.eta; }
  double m_bound() const { return m_bound_; }

  void set_z(const std::vector<double>& z) {
    ctx_.set_z(z);
    const ProblemInstance& inst = instance();
    for (std::size_t i = 0; i < inst.num_points(); ++i) {
      log_k_[i] = std::log(ctx_.kz[i]);
      ell_[i] = pointwise_sq_loss(ctx_.hz[i], inst.points[i].y_mean, inst.points[i].y_sq_mean);
    }
  }

  /// L(D_k, h_z) for every k at the cached z.
  std::vector<double> domain_losses() const { return detail::domain_losses_from_context(ctx_); }

  /// f(z) = max_k L(D_k, h_z) - sum_j z_j L(D_j, h_z); nonnegative everywhere.
  double objective(const std::vector<double>& z, std::vector<double>* losses_out = nullptr) {
    set_z(z);
    const std::vector<double> losses = domain_losses();
    double worst = losses[0];
    double avg = 0.0;
    for (std::size_t k = 0; k < losses.size(); ++k) {
      worst = std::max(worst, losses[k]);
      avg += z[k] * losses[k];
    }
    if (losses_out) *losses_out = losses;
    return worst - avg;
  }

  // u_k(z) = sum_x (D_k + eta U)(x) [h_z^2 - 2 h_z ybar + ybar2]
  //          - 2M sum_x (D_k + eta U)(x) log K_z(x)
  double uk_value(std::size_t k) const {
    const ProblemInstance& inst = instance();
    const double eu = ctx_.eta * inst.uniform_mass();
    double acc = 0.0;
    for (std::size_t i = 0; i < inst.num_points(); ++i) {
      const double a = inst.density(k, i) + eu;
      acc += a * (ell_[i] - 2.0 * m_bound_ * log_k_[i]);
    }
    return acc;
  }

  std::vector<double> uk_grad(std::size_t k) const {
    const ProblemInstance& inst = instance();
    const std::size_t n = inst.num_points();
    const std::size_t p = inst.num_domains();
    const double eu = ctx_.eta * inst.uniform_mass();
    std::vector<double> g(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const SupportPoint& pt = inst.points[i];
      const double a = pt.densities[k] + eu;
      const double resid = 2.0 * (ctx_.hz[i] - pt.y_mean);
      const double inv_k = 1.0 / ctx_.kz[i];
      for (std::size_t j = 0; j < p; ++j) {
        const double dj = pt.densities[j];
        g[j] += a * inv_k * dj * (resid * (pt.predictions[j] - ctx_.hz[i]) - 2.0 * m_bound_);
      }
    }
    return g;
  }

  // v_k(z) = sum_x [J_z^2/K_z - 2 ybar J_z + ybar2 K_z]
  //          - 2M sum_x (D_k + eta U)(x) log K_z(x)
  double vk_value(std::size_t k) const {
    const ProblemInstance& inst = instance();
    const double eu = ctx_.eta * inst.uniform_mass();
    double acc = 0.0;
    for (std::size_t i = 0; i < inst.num_points(); ++i) {
      const SupportPoint& pt = inst.points[i];
      const double a = pt.densities[k] + eu;
      acc += ctx_.jz[i] * ctx_.jz[i] / ctx_.kz[i] - 2.0 * pt.y_mean * ctx_.jz[i] +
             pt.y_sq_mean * ctx_.kz[i] - 2.0 * m_bound_ * a * log_k_[i];
    }
    return acc;
  }

  std::vector<double> vk_grad(std::size_t k) const {
    const ProblemInstance& inst = instance();
    const std::size_t n = inst.num_points();
    const std::size_t p = inst.num_domains();
    const double eu = ctx_.eta * inst.uniform_mass();
    std::vector<double> g(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const SupportPoint& pt = inst.points[i];
      const double a = pt.densities[k] + eu;
      const double hz = ctx_.hz[i];
      const double inv_k = 1.0 / ctx_.kz[i];
      for (std::size_t j = 0; j < p; ++j) {
        const double dj = pt.densities[j];
        const double hj = pt.predictions[j];
        g[j] += dj * (2.0 * hz * hj - hz * hz - 2.0 * pt.y_mean * hj + pt.y_sq_mean -
                      2.0 * m_bound_ * a * inv_k);
      }
    }
    return g;
  }

  const CombinerContext& context() const { return ctx_; }

 private:
  CombinerContext ctx_;
  double m_bound_;
  std::vector<double> log_k_;  // log K_z(x)
  std::vector<double> ell_;    // pointwise expected squared loss of h_z
};

/// f(z) together with the per-domain losses, one-shot form.
inline std::pair<double, std::vector<double>> objective(const ProblemInstance& inst,
                                                        const SimplexWeights& z, double eta) {
  DcEvaluator eval(inst, eta, 1.0);  // M plays no role in f itself
  std::vector<double> losses;
  const double f = eval.objective(z.w, &losses);
  return {f, losses};
}

inline ValueGrad uk_value_grad(const ProblemInstance& inst, std::size_t k,
                               const SimplexWeights& z, double eta, double m_bound) {
  DcEvaluator eval(inst, eta, m_bound);
  eval.set_z(z.w);
  return {eval.uk_value(k), eval.uk_grad(k)};
}

inline ValueGrad vk_value_grad(const ProblemInstance& inst, std::size_t k,
                               const SimplexWeights& z, double eta, double m_bound) {
  DcEvaluator eval(inst, eta, m_bound);
  eval.set_z(z.w);
  return {eval.vk_value(k), eval.vk_grad(k)};
}

struct FzGz {
  double fz = 0.0;
  double gz = 0.0;
};

/// Pointwise convex split of the squared residual:
/// f_z(x,y) = (h_z(x) - y)^2 - 2M log K_z(x), g_z(x) = -2M log K_z(x);
/// valid whenever M >= (y - h_z(x))^2.
inline FzGz fz_gz_decomposition(const ProblemInstance& inst, const SimplexWeights& z, double eta,
                                double m_bound, std::size_t point_index, double y) {
  CombinerContext ctx(inst, eta);
  ctx.set_z(z.w);
  const double resid = ctx.hz[point_index] - y;
  const double gz = -2.0 * m_bound * std::log(ctx.kz[point_index]);
  return {resid * resid + gz, gz};
}

}  // namespace msadapt
