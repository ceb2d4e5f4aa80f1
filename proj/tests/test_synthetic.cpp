#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>

#include "msadapt/synthetic.hpp"
#include "support/test_instances.hpp"

using namespace msadapt;

TEST_CASE("least squares interpolates an exact plane") {
  std::vector<std::array<double, 2>> xs = {{0, 0}, {1, 0}, {0, 1}, {2, 3}, {-1, 4}};
  std::vector<double> ys;
  for (const auto& x : xs) ys.push_back(2.0 * x[0] - x[1] + 3.0);
  const LinearFit fit = fit_linear(xs, ys);
  CHECK(fit.a[0] == Catch::Approx(2.0).margin(1e-10));
  CHECK(fit.a[1] == Catch::Approx(-1.0).margin(1e-10));
  CHECK(fit.b == Catch::Approx(3.0).margin(1e-10));
}

TEST_CASE("constant targets give a flat fit") {
  std::vector<std::array<double, 2>> xs = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  std::vector<double> ys(4, 2.5);
  const LinearFit fit = fit_linear(xs, ys);
  CHECK(fit.a[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(fit.a[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(fit.b == Catch::Approx(2.5).margin(1e-12));
}

TEST_CASE("least squares matches a gradient-descent oracle") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::vector<std::array<double, 2>> xs(40);
  std::vector<double> ys(40);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = {unif(rng), unif(rng)};
    ys[i] = 1.3 * xs[i][0] - 0.4 * xs[i][1] + 0.9 + 0.3 * unif(rng);
  }
  const LinearFit fit = fit_linear(xs, ys);

  // plain gradient descent on the mean squared error, run to convergence
  double a0 = 0.0, a1 = 0.0, b = 0.0;
  const double rate = 0.05;
  for (int iter = 0; iter < 200000; ++iter) {
    double g0 = 0.0, g1 = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = a0 * xs[i][0] + a1 * xs[i][1] + b - ys[i];
      g0 += r * xs[i][0];
      g1 += r * xs[i][1];
      gb += r;
    }
    const double scale = 2.0 / static_cast<double>(xs.size());
    a0 -= rate * scale * g0;
    a1 -= rate * scale * g1;
    b -= rate * scale * gb;
  }
  CHECK(fit.a[0] == Catch::Approx(a0).margin(1e-6));
  CHECK(fit.a[1] == Catch::Approx(a1).margin(1e-6));
  CHECK(fit.b == Catch::Approx(b).margin(1e-6));
}

TEST_CASE("the residual gradient at the fit is zero") {
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::vector<std::array<double, 2>> xs(25);
  std::vector<double> ys(25);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = {unif(rng), unif(rng)};
    ys[i] = unif(rng);
  }
  const LinearFit fit = fit_linear(xs, ys);
  double g0 = 0.0, g1 = 0.0, gb = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = fit(xs[i]) - ys[i];
    g0 += r * xs[i][0];
    g1 += r * xs[i][1];
    gb += r;
  }
  CHECK(std::abs(g0) < 1e-8);
  CHECK(std::abs(g1) < 1e-8);
  CHECK(std::abs(gb) < 1e-8);
}

TEST_CASE("collinear samples are a singular fit") {
  std::vector<std::array<double, 2>> xs = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  std::vector<double> ys = {0, 1, 2, 3};
  CHECK_THROWS_AS(fit_linear(xs, ys), std::runtime_error);
}

TEST_CASE("gaussian benchmark construction invariants") {
  GaussianBenchConfig cfg;
  cfg.seed = 5;
  const ProblemInstance inst = make_gaussian_problem(cfg);
  REQUIRE(inst.num_domains() == 2);
  REQUIRE(inst.num_points() == 500);

  SECTION("density columns are normalized") {
    for (std::size_t k = 0; k < 2; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < inst.num_points(); ++i) sum += inst.density(k, i);
      CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
  }

  SECTION("labels are deterministic") {
    for (const SupportPoint& pt : inst.points)
      CHECK(pt.y_sq_mean == Catch::Approx(pt.y_mean * pt.y_mean).margin(1e-12));
  }

  SECTION("same seed regenerates bit-identically") {
    const ProblemInstance again = make_gaussian_problem(cfg);
    for (std::size_t i = 0; i < inst.num_points(); ++i)
      for (std::size_t k = 0; k < 2; ++k) {
        CHECK(again.density(k, i) == inst.density(k, i));
        CHECK(again.prediction(k, i) == inst.prediction(k, i));
      }
  }

  SECTION("renormalization preserves density ratios") {
    std::vector<std::array<double, 2>> support;
    const ProblemInstance again = make_gaussian_problem(cfg, &support);
    REQUIRE(support.size() == again.num_points());
    for (std::size_t k = 0; k < 2; ++k) {
      const double ref = benchmark_domain_pdf(cfg, k, support[0]);
      for (std::size_t i = 1; i < 50; ++i) {
        const double pdf_ratio = benchmark_domain_pdf(cfg, k, support[i]) / ref;
        const double density_ratio = again.density(k, i) / again.density(k, 0);
        CHECK(density_ratio == Catch::Approx(pdf_ratio).margin(1e-9));
      }
    }
  }
}

TEST_CASE("four-domain variant") {
  GaussianBenchConfig cfg;
  cfg.variant = GaussianBenchConfig::Variant::four_domain;
  cfg.seed = 9;
  cfg.n_support = 200;
  const ProblemInstance inst = make_gaussian_problem(cfg);
  REQUIRE(inst.num_domains() == 4);
  REQUIRE(inst.num_points() == 200);
  for (std::size_t k = 0; k < 4; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < inst.num_points(); ++i) sum += inst.density(k, i);
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("the labeling moment matches the gaussian identity") {
  // E[x1^2 + x2^2] under a unit-variance gaussian at (1, 1) is 4
  std::mt19937_64 rng(73);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double mean = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const double x1 = 1.0 + gauss(rng);
    const double x2 = 1.0 + gauss(rng);
    mean += x1 * x1 + x2 * x2;
  }
  mean /= draws;
  CHECK(mean == Catch::Approx(4.0).margin(0.15));
}
