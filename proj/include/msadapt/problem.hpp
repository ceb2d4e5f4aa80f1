#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msadapt {

// Tolerances of the instance data model.
inline constexpr double kDensitySumTol = 1e-6;       // per-domain mass must sum to 1
inline constexpr double kDensityRenormTol = 1e-3;    // loader renormalizes up to here
inline constexpr double kMomentSlack = 1e-9;         // y_sq_mean >= y_mean^2 - slack
inline constexpr double kConditionalSumTol = 1e-6;   // label_dist rows sum to 1

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Discrete conditional label distributions at one support point: one row per
/// domain over a shared finite label set. Only needed by the
/// distinct-conditionals bound calculator.
struct LabelConditional {
  std::vector<double> labels;              // the finite label set
  std::vector<std::vector<double>> cond;   // p rows, each over labels
};

struct SupportPoint {
  std::vector<double> densities;    // D_k(x), one entry per domain
  std::vector<double> predictions;  // h_k(x), one entry per domain
  double y_mean = 0.0;              // E[y | x]
  double y_sq_mean = 0.0;           // E[y^2 | x]
  std::optional<LabelConditional> label_dist;
};

/// The discrete world everything operates on: a finite shared support with
/// per-domain marginals, base-predictor values, and label moments. Immutable
/// after construction; safe to share across concurrent readers.
struct ProblemInstance {
  std::vector<std::string> domain_names;
  std::vector<SupportPoint> points;

  std::size_t num_domains() const { return domain_names.size(); }
  std::size_t num_points() const { return points.size(); }
  double uniform_mass() const { return 1.0 / static_cast<double>(points.size()); }

  double density(std::size_t k, std::size_t i) const { return points[i].densities[k]; }
  double prediction(std::size_t k, std::size_t i) const { return points[i].predictions[k]; }
};

/// Enforces the data-model invariants; throws SchemaError for shape problems
/// and ValidationError for numeric violations.
inline void validate_instance(const ProblemInstance& inst) {
  const std::size_t p = inst.num_domains();
  const std::size_t n = inst.num_points();
  if (p < 1) throw SchemaError("instance must have at least one domain");
  if (n < 1) throw SchemaError("instance must have at least one support point");

  for (std::size_t i = 0; i < n; ++i) {
    const SupportPoint& pt = inst.points[i];
    if (pt.densities.size() != p || pt.predictions.size() != p)
      throw SchemaError("point " + std::to_string(i) + " has ragged densities/predictions");
    for (double d : pt.densities) {
      if (!std::isfinite(d)) throw ValidationError("non-finite density at point " + std::to_string(i));
      if (d < 0.0) throw ValidationError("negative density at point " + std::to_string(i));
    }
    for (double h : pt.predictions)
      if (!std::isfinite(h)) throw ValidationError("non-finite prediction at point " + std::to_string(i));
    if (!std::isfinite(pt.y_mean) || !std::isfinite(pt.y_sq_mean))
      throw ValidationError("non-finite label moment at point " + std::to_string(i));
    if (pt.y_sq_mean < pt.y_mean * pt.y_mean - kMomentSlack)
      throw ValidationError("y_sq_mean below y_mean^2 at point " + std::to_string(i));
    if (pt.label_dist) {
      const LabelConditional& lc = *pt.label_dist;
      if (lc.cond.size() != p)
        throw SchemaError("label_dist at point " + std::to_string(i) + " must have one row per domain");
      for (const auto& row : lc.cond) {
        if (row.size() != lc.labels.size())
          throw SchemaError("ragged label_dist row at point " + std::to_string(i));
        double s = 0.0;
        for (double q : row) {
          if (!std::isfinite(q) || q < 0.0)
            throw ValidationError("invalid conditional mass at point " + std::to_string(i));
          s += q;
        }
        if (std::abs(s - 1.0) > kConditionalSumTol)
          throw ValidationError("label_dist row does not sum to 1 at point " + std::to_string(i));
      }
    }
  }

  for (std::size_t k = 0; k < p; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += inst.density(k, i);
    if (std::abs(sum - 1.0) > kDensitySumTol)
      throw ValidationError("domain " + inst.domain_names[k] + " density mass is " +
                            std::to_string(sum));
  }
}

/// Renormalizes each domain's density column to unit mass. Columns already
/// within 1e-12 of 1 are left untouched so that a serialize/load round trip
/// is bit-exact; deviations beyond kDensityRenormTol are data errors.
inline void renormalize_densities(ProblemInstance& inst) {
  const std::size_t p = inst.num_domains();
  const std::size_t n = inst.num_points();
  for (std::size_t k = 0; k < p; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = inst.density(k, i);
      if (!std::isfinite(d) || d < 0.0)
        throw ValidationError("negative or non-finite density in domain " + inst.domain_names[k]);
      sum += d;
    }
    const double dev = std::abs(sum - 1.0);
    if (dev > kDensityRenormTol)
      throw ValidationError("domain " + inst.domain_names[k] + " density mass " +
                            std::to_string(sum) + " deviates from 1 by more than 1e-3");
    if (dev <= 1e-12) continue;
    for (std::size_t i = 0; i < n; ++i) inst.points[i].densities[k] /= sum;
  }
}

/// Builds an empirical instance from per-domain sample multisets over a shared
/// finite point set: density_k(x) = count_k(x) / total_k. Points unsampled in
/// every domain are retained with zero density; the eta-smoothing downstream
/// keeps them well-defined.
inline ProblemInstance empirical_instance_from_samples(
    std::vector<std::string> domain_names,
    const std::vector<std::vector<std::size_t>>& samples_per_domain,
    const std::vector<std::vector<double>>& predictions,  // n rows of p values
    const std::vector<double>& y_mean, const std::vector<double>& y_sq_mean) {
  const std::size_t p = domain_names.size();
  const std::size_t n = predictions.size();
  if (samples_per_domain.size() != p)
    throw SchemaError("one sample multiset required per domain");
  if (y_mean.size() != n || y_sq_mean.size() != n)
    throw SchemaError("label moments must cover every support point");

  ProblemInstance inst;
  inst.domain_names = std::move(domain_names);
  inst.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inst.points[i].densities.assign(p, 0.0);
    inst.points[i].predictions = predictions[i];
    inst.points[i].y_mean = y_mean[i];
    inst.points[i].y_sq_mean = y_sq_mean[i];
  }
  for (std::size_t k = 0; k < p; ++k) {
    const auto& samples = samples_per_domain[k];
    if (samples.empty())
      throw ValidationError("domain " + inst.domain_names[k] + " has no samples");
    for (std::size_t idx : samples) {
      if (idx >= n) throw SchemaError("sample index outside the shared point set");
      inst.points[idx].densities[k] += 1.0;
    }
    const double total = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < n; ++i) inst.points[i].densities[k] /= total;
  }
  validate_instance(inst);
  return inst;
}

}  // namespace msadapt
