#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "msadapt/combiner.hpp"
#include "msadapt/dc_objective.hpp"
#include "msadapt/problem.hpp"
#include "msadapt/simplex.hpp"

namespace msadapt {

struct EvalRow {
  std::string predictor;
  std::vector<double> lambda;
  double mse = 0.0;
};

struct EvalReport {
  std::size_t num_domains = 0;
  std::vector<EvalRow> rows;

  /// CSV with header predictor,lambda_1..lambda_p,mse; values at 12
  /// significant digits.
  std::string to_csv() const {
    std::string out = "predictor";
    for (std::size_t k = 1; k <= num_domains; ++k) out += ",lambda_" + std::to_string(k);
    out += ",mse\n";
    char buf[32];
    for (const EvalRow& row : rows) {
      out += row.predictor;
      for (double l : row.lambda) {
        std::snprintf(buf, sizeof(buf), "%.12g", l);
        out += ",";
        out += buf;
      }
      std::snprintf(buf, sizeof(buf), "%.12g", row.mse);
      out += ",";
      out += buf;
      out += "\n";
    }
    return out;
  }
};

/// Default target-mixture sweep: all vertices, all pairwise 0.1-step edges,
/// and the uniform center.
inline std::vector<SimplexWeights> default_lambda_grid(std::size_t p) {
  std::vector<SimplexWeights> grid;
  for (std::size_t k = 0; k < p; ++k) grid.push_back(SimplexWeights::vertex(p, k));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      for (int step = 1; step <= 9; ++step) {
        std::vector<double> w(p, 0.0);
        w[i] = static_cast<double>(step) / 10.0;
        w[j] = 1.0 - w[i];
        grid.push_back({std::move(w)});
      }
    }
  }
  if (p > 1) grid.push_back(SimplexWeights::uniform(p));
  return grid;
}

namespace detail {

inline std::vector<double> losses_of_predictions(const ProblemInstance& inst,
                                                 const std::vector<double>& preds) {
  const std::size_t n = inst.num_points();
  const std::size_t p = inst.num_domains();
  std::vector<double> losses(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const SupportPoint& pt = inst.points[i];
    const double ell = pointwise_sq_loss(preds[i], pt.y_mean, pt.y_sq_mean);
    for (std::size_t k = 0; k < p; ++k) losses[k] += pt.densities[k] * ell;
  }
  return losses;
}

}  // namespace detail

/// Sweeps the lambda grid and reports the mixture MSE of every predictor:
/// each source h_k, the uniform average, the lambda-comb oracle (rebuilt per
/// lambda), and the distribution-weighted predictor at the single shared z.
inline EvalReport evaluate_predictors(const ProblemInstance& inst, const SimplexWeights& z_star,
                                      double eta, const std::vector<SimplexWeights>& lambda_grid) {
  const std::size_t n = inst.num_points();
  const std::size_t p = inst.num_domains();

  std::vector<std::vector<double>> source_losses(p);
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<double> preds(n);
    for (std::size_t i = 0; i < n; ++i) preds[i] = inst.prediction(k, i);
    source_losses[k] = detail::losses_of_predictions(inst, preds);
  }

  std::vector<double> uniform_preds(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < p; ++k) s += inst.prediction(k, i);
    uniform_preds[i] = s / static_cast<double>(p);
  }
  const std::vector<double> uniform_losses = detail::losses_of_predictions(inst, uniform_preds);

  const std::vector<double> dw_losses = per_domain_losses(inst, z_star, eta);

  EvalReport report;
  report.num_domains = p;
  auto mixture = [&](const std::vector<double>& losses, const SimplexWeights& lambda) {
    double s = 0.0;
    for (std::size_t k = 0; k < p; ++k) s += lambda[k] * losses[k];
    return s;
  };

  for (const SimplexWeights& lambda : lambda_grid) {
    if (lambda.dim() != p) throw std::invalid_argument("lambda grid dimension mismatch");
    for (std::size_t k = 0; k < p; ++k)
      report.rows.push_back(
          {"source:" + inst.domain_names[k], lambda.w, mixture(source_losses[k], lambda)});
    report.rows.push_back({"uniform", lambda.w, mixture(uniform_losses, lambda)});

    std::vector<double> comb_preds(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < p; ++k) comb_preds[i] += lambda[k] * inst.prediction(k, i);
    report.rows.push_back(
        {"lambda_comb", lambda.w, mixture(detail::losses_of_predictions(inst, comb_preds), lambda)});

    report.rows.push_back({"dw", lambda.w, mixture(dw_losses, lambda)});
  }
  return report;
}

struct GridMin {
  SimplexWeights z;
  double gamma = 0.0;
};

/// Exhaustive evaluation of the min-max objective over a simplex grid with
/// `grid_resolution` points per edge (so 2001 points for p=2 at resolution
/// 2001). Oracle only; guarded to p <= 3.
inline GridMin brute_force_min(const ProblemInstance& inst, double eta,
                               std::size_t grid_resolution) {
  const std::size_t p = inst.num_domains();
  if (p > 3) throw std::invalid_argument("brute_force_min supports p <= 3 only");
  if (grid_resolution < 2) throw std::invalid_argument("grid resolution must be >= 2");

  DcEvaluator eval(inst, eta, 1.0);
  GridMin best;
  best.gamma = std::numeric_limits<double>::infinity();
  for (const SimplexWeights& z : simplex_grid(p, grid_resolution - 1)) {
    const double gamma = eval.objective(z.w);
    if (gamma < best.gamma) {
      best.gamma = gamma;
      best.z = z;
    }
  }
  return best;
}

}  // namespace msadapt
