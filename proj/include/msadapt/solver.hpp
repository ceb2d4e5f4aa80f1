#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msadapt/dc_objective.hpp"
#include "msadapt/problem.hpp"
#include "msadapt/simplex.hpp"

namespace msadapt {

struct SolverConfig {
  double eta = 1e-3;        // smoothing weight of the combination rule
  double eta_prime = 1e-4;  // slack of the combining-rule property check
  std::optional<double> m_bound;       // loss bound; auto-computed when absent
  std::optional<SimplexWeights> z0;    // start point; uniform when absent
  std::size_t max_outer = 200;
  std::size_t max_inner = 500;
  double inner_tol = 1e-10;
  double outer_tol = 1e-8;
  double global_tol = 1e-2;
  std::uint64_t seed = 0;
};

enum class SolveStatus { converged, budget_exhausted };

inline const char* to_string(SolveStatus s) {
  return s == SolveStatus::converged ? "converged" : "budget_exhausted";
}

struct TracePoint {
  std::vector<double> z;
  double gamma = 0.0;
};

struct Solution {
  SimplexWeights z_star;
  double gamma_star = 0.0;
  std::vector<double> per_domain_losses;
  std::vector<TracePoint> trace;
  SolveStatus status = SolveStatus::budget_exhausted;
};

struct Certificate {
  double gamma_value = 0.0;
  bool is_near_global = false;
  double combining_rule_residual = 0.0;  // f(z) - eta'; <= 0 means the property holds
  double kkt_residual = 0.0;
};

struct InnerResult {
  SimplexWeights z;
  double surrogate_value = 0.0;  // F_t at the returned point
  bool budget_exhausted = false;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Golden-section minimization of a 1-d convex function on [lo, hi].
template <typename Fn>
std::pair<double, double> golden_section(Fn&& fn, double lo, double hi, int iters = 64) {
  constexpr double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = fn(x1), f2 = fn(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = fn(x2);
    }
  }
  const double mid = 0.5 * (a + b);
  return {mid, fn(mid)};
}

// One DCA subproblem: minimize over the simplex
//   F_t(z) = max_k [u_k(z) - v_k(z_t) - (z - z_t) . grad v_k(z_t)].
// Projected subgradient sweeps over a ladder of step scales, then pairwise
// mass-exchange line searches polish the incumbent; descent from z_t is
// guaranteed because the incumbent starts there.
class InnerSolver {
 public:
  InnerSolver(DcEvaluator& eval, const std::vector<double>& z_t)
      : eval_(eval), z_t_(z_t), p_(z_t.size()) {
    eval_.set_z(z_t_);
    vk_t_.resize(p_);
    gvk_t_.resize(p_);
    for (std::size_t k = 0; k < p_; ++k) {
      vk_t_[k] = eval_.vk_value(k);
      gvk_t_[k] = eval_.vk_grad(k);
    }
  }

  double surrogate(const std::vector<double>& z, std::size_t* argmax = nullptr) {
    eval_.set_z(z);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < p_; ++k) {
      double lin = vk_t_[k];
      for (std::size_t j = 0; j < p_; ++j) lin += (z[j] - z_t_[j]) * gvk_t_[k][j];
      const double val = eval_.uk_value(k) - lin;
      if (val > best) {
        best = val;
        best_k = k;
      }
    }
    if (argmax) *argmax = best_k;
    return best;
  }

  // Subgradient of F_t at the point most recently passed to surrogate().
  std::vector<double> subgradient(const std::vector<double>& z, std::size_t argmax) {
    eval_.set_z(z);
    std::vector<double> g = eval_.uk_grad(argmax);
    for (std::size_t j = 0; j < p_; ++j) g[j] -= gvk_t_[argmax][j];
    return g;
  }

  InnerResult solve(std::size_t max_inner, double inner_tol) {
    std::vector<double> best = z_t_;
    double best_val = surrogate(best);
    if (p_ == 1) return {{best}, best_val, false};

    const double ladder[] = {0.5, 0.05, 0.005};
    const std::size_t per_phase = std::max<std::size_t>(1, max_inner / 3);
    for (double scale : ladder) {
      std::vector<double> z = best;
      for (std::size_t i = 1; i <= per_phase; ++i) {
        std::size_t kstar = 0;
        const double val = surrogate(z, &kstar);
        if (val < best_val) {
          best_val = val;
          best = z;
        }
        std::vector<double> g = subgradient(z, kstar);
        double norm = std::sqrt(dot(g, g));
        if (norm < 1e-15) break;
        const double step = scale / (norm * std::sqrt(static_cast<double>(i)));
        for (std::size_t j = 0; j < p_; ++j) z[j] -= step * g[j];
        z = project_to_simplex(std::move(z));
      }
    }

    // pairwise mass exchanges; each segment restriction of F_t is convex
    bool budget_hit = false;
    const int max_rounds = 60;
    for (int round = 0; round < max_rounds; ++round) {
      const double before = best_val;
      for (std::size_t u = 0; u < p_; ++u) {
        for (std::size_t v = u + 1; v < p_; ++v) {
          const double lo = -best[u];
          const double hi = best[v];
          if (hi - lo < 1e-15) continue;
          auto phi = [&](double s) {
            std::vector<double> cand = best;
            cand[u] += s;
            cand[v] -= s;
            return surrogate(cand);
          };
          const auto [s, val] = golden_section(phi, lo, hi);
          if (val < best_val) {
            best[u] += s;
            best[v] -= s;
            best[u] = std::max(0.0, best[u]);
            best[v] = std::max(0.0, best[v]);
            best_val = val;
          }
        }
      }
      const double improvement = before - best_val;
      if (improvement <= inner_tol * std::max(1.0, std::abs(before))) break;
      if (round + 1 == max_rounds) budget_hit = true;
    }
    return {{std::move(best)}, best_val, budget_hit};
  }

 private:
  DcEvaluator& eval_;
  std::vector<double> z_t_;
  std::size_t p_;
  std::vector<double> vk_t_;
  std::vector<std::vector<double>> gvk_t_;
};

// Extends a DCA step along its own direction while the true objective keeps
// improving. The curvature the decomposition adds through the -2M log K_z
// term shrinks each raw subproblem step, while the true objective usually
// keeps descending far beyond it; an incumbent-protected search over the
// segment to the simplex boundary recovers the lost ground. Never returns a
// point worse than the raw step.
inline std::vector<double> extend_step(DcEvaluator& eval, const std::vector<double>& from,
                                       std::vector<double> to) {
  const std::size_t p = from.size();
  std::vector<double> dir(p);
  double dnorm = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    dir[j] = to[j] - from[j];
    dnorm = std::max(dnorm, std::abs(dir[j]));
  }
  if (dnorm < 1e-15) return to;

  double smax = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p; ++j)
    if (dir[j] < 0.0) smax = std::min(smax, from[j] / -dir[j]);
  if (!std::isfinite(smax)) return to;
  smax = std::max(smax, 1.0);

  auto point_at = [&](double s) {
    std::vector<double> z(p);
    double sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      z[j] = std::max(0.0, from[j] + s * dir[j]);
      sum += z[j];
    }
    for (double& x : z) x /= sum;
    return z;
  };

  double best_s = 1.0;
  double best_gamma = eval.objective(to);
  for (double s = 2.0; s < smax; s *= 2.0) {
    const double g = eval.objective(point_at(s));
    if (g < best_gamma) {
      best_gamma = g;
      best_s = s;
    }
  }
  {
    const double g = eval.objective(point_at(smax));
    if (g < best_gamma) {
      best_gamma = g;
      best_s = smax;
    }
  }
  const double lo = best_s / 2.0;
  const double hi = std::min(best_s * 2.0, smax);
  const auto [s_ref, g_ref] =
      golden_section([&](double s) { return eval.objective(point_at(s)); }, lo, hi, 48);
  if (g_ref < best_gamma) {
    best_gamma = g_ref;
    best_s = s_ref;
  }
  return best_s == 1.0 ? to : point_at(best_s);
}

}  // namespace detail

/// One convex DCA subproblem from iterate z_t; returns a feasible point no
/// worse than z_t under the linearized objective.
inline InnerResult solve_inner(const ProblemInstance& inst, const SimplexWeights& z_t, double eta,
                               double m_bound, const SolverConfig& config = {}) {
  DcEvaluator eval(inst, eta, m_bound);
  detail::InnerSolver inner(eval, z_t.w);
  return inner.solve(config.max_inner, config.inner_tol);
}

/// DCA iteration on the robust-weight objective. Each outer step solves the
/// convex subproblem, then extends the step along its direction on the true
/// objective, so the trace of objective values is nonincreasing. A run stops
/// once gamma falls under global_tol or progress falls under outer_tol; a run
/// that stalls above global_tol has hit a non-global stationary point (the
/// combining-rule fixed point guarantees feasible points with arbitrarily
/// small gamma), so remaining outer budget is spent on restarts from vertex
/// and seeded-random starts, keeping the best run.
inline Solution dca_solve(const ProblemInstance& inst, const SolverConfig& config = {}) {
  const std::size_t p = inst.num_domains();
  const double m_bound = config.m_bound ? *config.m_bound : auto_m_bound(inst);
  if (m_bound < max_pointwise_loss(inst))
    throw std::invalid_argument("m_bound is below the max pointwise loss of the base predictors");
  const std::vector<double> z_init = config.z0 ? config.z0->w : SimplexWeights::uniform(p).w;
  if (z_init.size() != p) throw std::invalid_argument("z0 dimension does not match the instance");

  DcEvaluator eval(inst, config.eta, m_bound);

  if (p == 1) {
    Solution sol;
    std::vector<double> losses;
    eval.objective(z_init, &losses);
    sol.trace.push_back({z_init, 0.0});
    sol.z_star = {z_init};
    sol.gamma_star = 0.0;
    sol.per_domain_losses = losses;
    sol.status = SolveStatus::converged;
    return sol;
  }

  struct Run {
    std::vector<TracePoint> trace;
    std::vector<double> z;
    std::vector<double> losses;
    double gamma = std::numeric_limits<double>::infinity();
  };

  std::size_t outer_used = 0;
  auto run_from = [&](std::vector<double> z) {
    Run run;
    double gamma = eval.objective(z, &run.losses);
    run.trace.push_back({z, gamma});
    while (outer_used < config.max_outer && gamma >= config.global_tol) {
      ++outer_used;
      detail::InnerSolver inner(eval, z);
      const InnerResult step = inner.solve(config.max_inner, config.inner_tol);
      const std::vector<double> next = detail::extend_step(eval, z, step.z.w);
      std::vector<double> next_losses;
      const double gamma_next = eval.objective(next, &next_losses);
      if (gamma_next > gamma) break;  // numerically stuck
      const double drop = gamma - gamma_next;
      z = next;
      gamma = gamma_next;
      run.losses = std::move(next_losses);
      run.trace.push_back({z, gamma});
      if (drop < config.outer_tol) break;
    }
    run.z = std::move(z);
    run.gamma = gamma;
    return run;
  };

  Run best = run_from(z_init);
  std::mt19937_64 restart_rng(config.seed);
  std::size_t next_vertex = 0;
  while (best.gamma >= config.global_tol && outer_used < config.max_outer) {
    std::vector<double> z0 = next_vertex < p ? SimplexWeights::vertex(p, next_vertex).w
                                             : sample_simplex(restart_rng, p).w;
    ++next_vertex;
    Run attempt = run_from(std::move(z0));
    if (attempt.gamma < best.gamma) best = std::move(attempt);
  }

  Solution sol;
  sol.z_star = {best.z};
  sol.gamma_star = best.gamma;
  sol.per_domain_losses = best.losses;
  sol.trace = std::move(best.trace);
  sol.status =
      best.gamma < config.global_tol ? SolveStatus::converged : SolveStatus::budget_exhausted;
  return sol;
}

/// Stationarity residual of the min-max objective at z: the distance of the
/// reduced KKT inclusion from zero, minimized over hull weights mu on the
/// active constraints, a free multiplier beta for the mass constraint, and
/// nonnegative multipliers alpha on the inactive coordinates.
inline double kkt_residual(const ProblemInstance& inst, const SimplexWeights& z, double eta) {
  const std::size_t p = inst.num_domains();
  if (p == 1) return 0.0;

  DcEvaluator eval(inst, eta, 1.0);  // M cancels in grad(u_k - v_k)
  eval.set_z(z.w);
  const std::vector<double> losses = eval.domain_losses();
  double max_loss = losses[0];
  for (double l : losses) max_loss = std::max(max_loss, l);
  const double act_tol = 1e-7 * std::max(1.0, std::abs(max_loss));

  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < p; ++k)
    if (losses[k] >= max_loss - act_tol) active.push_back(k);

  std::vector<std::vector<double>> d(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    d[a] = eval.uk_grad(active[a]);
    const std::vector<double> gv = eval.vk_grad(active[a]);
    for (std::size_t j = 0; j < p; ++j) d[a][j] -= gv[j];
  }

  std::vector<bool> clamped(p, false);
  for (std::size_t j = 0; j < p; ++j) clamped[j] = z[j] <= 1e-12;

  // residual for fixed hull weights mu: exact beta by bisection on the
  // piecewise-linear optimality condition, then alpha by clipping
  auto residual_for = [&](const std::vector<double>& mu) {
    std::vector<double> r(p, 0.0);
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t j = 0; j < p; ++j) r[j] += mu[a] * d[a][j];
    double span = 1.0;
    for (double v : r) span = std::max(span, std::abs(v));
    double lo = -span - 1.0, hi = span + 1.0;
    auto deriv = [&](double beta) {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double e = r[j] + beta;
        s += clamped[j] ? std::min(e, 0.0) : e;
      }
      return s;
    };
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (deriv(mid) > 0.0)
        hi = mid;
      else
        lo = mid;
    }
    const double beta = 0.5 * (lo + hi);
    double sq = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double e = r[j] + beta;
      if (clamped[j]) e = std::min(e, 0.0);
      sq += e * e;
    }
    return std::sqrt(sq);
  };

  const std::size_t m = active.size();
  std::vector<double> mu(m, 1.0 / static_cast<double>(m));
  double best = residual_for(mu);
  if (m == 1) return best;

  for (int it = 1; it <= 1000; ++it) {
    // numeric gradient of the residual in mu (m is tiny)
    std::vector<double> g(m, 0.0);
    const double h = 1e-7;
    for (std::size_t a = 0; a < m; ++a) {
      std::vector<double> mu_p = mu;
      mu_p[a] += h;
      std::vector<double> mu_m = mu;
      mu_m[a] -= h;
      g[a] = (residual_for(mu_p) - residual_for(mu_m)) / (2.0 * h);
    }
    double norm = std::sqrt(detail::dot(g, g));
    if (norm < 1e-14) break;
    const double step = 0.5 / (norm * std::sqrt(static_cast<double>(it)));
    for (std::size_t a = 0; a < m; ++a) mu[a] -= step * g[a];
    mu = project_to_simplex(std::move(mu));
    best = std::min(best, residual_for(mu));
  }
  return best;
}

/// Global-optimality and stationarity diagnostics for a candidate z.
inline Certificate certify(const ProblemInstance& inst, const SimplexWeights& z, double eta,
                           double eta_prime, double global_tol) {
  Certificate cert;
  const auto [gamma, losses] = objective(inst, z, eta);
  (void)losses;
  cert.gamma_value = gamma;
  cert.is_near_global = gamma <= global_tol;
  cert.combining_rule_residual = gamma - eta_prime;
  cert.kkt_residual = kkt_residual(inst, z, eta);
  return cert;
}

inline Certificate certify(const ProblemInstance& inst, const Solution& sol,
                           const SolverConfig& config = {}) {
  return certify(inst, sol.z_star, config.eta, config.eta_prime, config.global_tol);
}

}  // namespace msadapt
