#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <sstream>

#include "msadapt/instance_io.hpp"
#include "msadapt/problem.hpp"
#include "support/test_instances.hpp"

using namespace msadapt;

namespace {

const char* kT1Json = R"({
  "domains": ["d1", "d2"],
  "points": [
    {"densities": [1.0, 0.0], "predictions": [1.0, 0.0], "y_mean": 1.0, "y_sq_mean": 1.0},
    {"densities": [0.0, 1.0], "predictions": [1.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
  ]
})";

ProblemInstance parse_json_text(const std::string& text) {
  std::istringstream in(text);
  return load_instance(in, InstanceFormat::json);
}

}  // namespace

TEST_CASE("JSON instance loads with the documented schema") {
  const ProblemInstance inst = parse_json_text(kT1Json);
  REQUIRE(inst.num_domains() == 2);
  REQUIRE(inst.num_points() == 2);
  CHECK(inst.density(0, 0) == 1.0);
  CHECK(inst.density(1, 1) == 1.0);
  CHECK(inst.prediction(0, 1) == 1.0);
  CHECK(inst.uniform_mass() == 0.5);
}

TEST_CASE("negative density is rejected") {
  const std::string bad = R"({
    "domains": ["d1"],
    "points": [
      {"densities": [-0.1], "predictions": [0.0], "y_mean": 0.0, "y_sq_mean": 0.0},
      {"densities": [1.1], "predictions": [0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
    ]})";
  CHECK_THROWS_AS(parse_json_text(bad), ValidationError);
}

TEST_CASE("density column far from unit mass is rejected") {
  // domain-1 mass is 0.9: deviation beyond the 1e-3 renormalization band
  const std::string bad = R"({
    "domains": ["d1", "d2"],
    "points": [
      {"densities": [0.6, 0.5], "predictions": [0.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0},
      {"densities": [0.3, 0.5], "predictions": [0.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
    ]})";
  CHECK_THROWS_AS(parse_json_text(bad), ValidationError);
}

TEST_CASE("small column deviation is renormalized") {
  const std::string doc = R"({
    "domains": ["d1"],
    "points": [
      {"densities": [0.5], "predictions": [0.0], "y_mean": 0.0, "y_sq_mean": 0.0},
      {"densities": [0.4995], "predictions": [0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
    ]})";
  const ProblemInstance inst = parse_json_text(doc);
  double sum = 0.0;
  for (std::size_t i = 0; i < inst.num_points(); ++i) sum += inst.density(0, i);
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("malformed JSON raises a parse error") {
  CHECK_THROWS_AS(parse_json_text("{ not json"), ParseError);
}

TEST_CASE("ragged vectors raise a schema error") {
  const std::string bad = R"({
    "domains": ["d1", "d2"],
    "points": [
      {"densities": [1.0], "predictions": [0.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
    ]})";
  CHECK_THROWS_AS(parse_json_text(bad), SchemaError);
}

TEST_CASE("second moment must dominate the squared mean") {
  const std::string bad = R"({
    "domains": ["d1"],
    "points": [
      {"densities": [1.0], "predictions": [0.0], "y_mean": 1.0, "y_sq_mean": 0.5}
    ]})";
  CHECK_THROWS_AS(parse_json_text(bad), ValidationError);
}

TEST_CASE("label_dist rows must sum to one") {
  const std::string bad = R"({
    "domains": ["d1"],
    "points": [
      {"densities": [1.0], "predictions": [0.0], "y_mean": 0.5, "y_sq_mean": 0.5,
       "label_dist": {"labels": [0.0, 1.0], "cond": [[0.3, 0.3]]}}
    ]})";
  CHECK_THROWS_AS(parse_json_text(bad), ValidationError);
}

TEST_CASE("JSON round trip is bit-exact") {
  std::mt19937_64 rng(31);
  const ProblemInstance inst = testsupport::random_instance(rng, 3, 17);
  const ProblemInstance back = parse_json_text(instance_to_json(inst).dump());
  REQUIRE(back.num_points() == inst.num_points());
  for (std::size_t i = 0; i < inst.num_points(); ++i) {
    for (std::size_t k = 0; k < inst.num_domains(); ++k) {
      CHECK(std::memcmp(&back.points[i].densities[k], &inst.points[i].densities[k],
                        sizeof(double)) == 0);
      CHECK(std::memcmp(&back.points[i].predictions[k], &inst.points[i].predictions[k],
                        sizeof(double)) == 0);
    }
    CHECK(back.points[i].y_mean == inst.points[i].y_mean);
    CHECK(back.points[i].y_sq_mean == inst.points[i].y_sq_mean);
  }
}

TEST_CASE("CSV round trip is bit-exact") {
  std::mt19937_64 rng(32);
  const ProblemInstance inst = testsupport::random_instance(rng, 2, 9);
  std::istringstream in(instance_to_csv(inst));
  const ProblemInstance back = load_instance(in, InstanceFormat::csv);
  REQUIRE(back.num_points() == inst.num_points());
  for (std::size_t i = 0; i < inst.num_points(); ++i)
    for (std::size_t k = 0; k < inst.num_domains(); ++k) {
      CHECK(back.density(k, i) == inst.density(k, i));
      CHECK(back.prediction(k, i) == inst.prediction(k, i));
    }
}

TEST_CASE("CSV header is validated") {
  std::istringstream in("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(load_instance(in, InstanceFormat::csv), SchemaError);
}

TEST_CASE("empirical instance counts samples") {
  // domain 1 samples {x1, x1, x2}, domain 2 samples {x2}
  const ProblemInstance inst = empirical_instance_from_samples(
      {"d1", "d2"}, {{0, 0, 1}, {1}}, {{1.0, 0.0}, {0.5, 0.5}}, {0.0, 1.0}, {0.0, 1.0});
  CHECK(inst.density(0, 0) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(inst.density(0, 1) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(inst.density(1, 0) == 0.0);
  CHECK(inst.density(1, 1) == 1.0);
}

TEST_CASE("single-atom empirical measure") {
  const ProblemInstance inst = empirical_instance_from_samples(
      {"d1"}, {{0}}, {{0.0}, {0.0}}, {0.0, 0.0}, {0.0, 0.0});
  CHECK(inst.density(0, 0) == 1.0);
  CHECK(inst.density(0, 1) == 0.0);
}

TEST_CASE("identical sample multisets give identical empirical marginals") {
  const ProblemInstance inst = empirical_instance_from_samples(
      {"d1", "d2"}, {{0, 1, 1, 2}, {0, 1, 1, 2}}, {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}},
      {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < inst.num_points(); ++i)
    CHECK(inst.density(0, i) == inst.density(1, i));
}

TEST_CASE("empty sample multiset is an error") {
  CHECK_THROWS_AS(empirical_instance_from_samples({"d1", "d2"}, {{0}, {}}, {{0.0, 0.0}}, {0.0},
                                                  {0.0}),
                  ValidationError);
}

TEST_CASE("empirical marginals live on the simplex") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> point(0, 5);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<std::size_t>> samples(2);
    for (auto& s : samples)
      for (int i = 0; i < 30; ++i) s.push_back(point(rng));
    const ProblemInstance inst = empirical_instance_from_samples(
        {"d1", "d2"}, samples, std::vector<std::vector<double>>(6, {0.0, 0.0}),
        std::vector<double>(6, 0.0), std::vector<double>(6, 0.0));
    for (std::size_t k = 0; k < 2; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(inst.density(k, i) >= 0.0);
        sum += inst.density(k, i);
      }
      CHECK(sum == Catch::Approx(1.0).margin(1e-12));
    }
  }
}
