#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef MSADAPT_CLI_PATH
#error "MSADAPT_CLI_PATH must point at the built CLI binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "msadapt_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out_file = scratch_dir() / ("stdout_" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string(MSADAPT_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  res.out = slurp(out_file);
  return res;
}

const char* kIdenticalDomains = R"({
  "domains": ["a", "b"],
  "points": [
    {"densities": [0.5, 0.5], "predictions": [1.0, 2.0], "y_mean": 1.0, "y_sq_mean": 1.5},
    {"densities": [0.5, 0.5], "predictions": [0.5, 0.25], "y_mean": 0.5, "y_sq_mean": 0.5}
  ]
})";

const char* kAsymmetric = R"({
  "domains": ["a", "b"],
  "points": [
    {"densities": [0.7, 0.2], "predictions": [1.0, 0.0], "y_mean": 1.0, "y_sq_mean": 1.0},
    {"densities": [0.3, 0.8], "predictions": [1.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
  ]
})";

}  // namespace

TEST_CASE("divergence subcommand prints the worked value") {
  const fs::path p = scratch_dir() / "p.json";
  const fs::path q = scratch_dir() / "q.json";
  spit(p, "[0.5, 0.5]");
  spit(q, "[0.25, 0.75]");
  const CliResult res = run_cli("divergence " + p.string() + " " + q.string() + " --alpha 2");
  CHECK(res.exit_code == 0);
  CHECK(res.out == "0.287682\n");
}

TEST_CASE("bound guarantee recovers the loss term at alpha = inf") {
  const CliResult res =
      run_cli("bound guarantee --epsilon-term 0.1 --d-alpha 1 --m 4 --alpha inf");
  CHECK(res.exit_code == 0);
  CHECK(res.out == "0.1\n");
}

TEST_CASE("solve on an identical-domain instance certifies immediately") {
  const fs::path inst = scratch_dir() / "identical.json";
  spit(inst, kIdenticalDomains);
  const fs::path sol_path = scratch_dir() / "sol.json";
  const CliResult res = run_cli("solve " + inst.string() + " -o " + sol_path.string());
  REQUIRE(res.exit_code == 0);
  const json sol = json::parse(slurp(sol_path));
  CHECK(sol.at("gamma_star").get<double>() <= 1e-12);
  CHECK(sol.at("certificate").at("is_near_global").get<bool>());
  CHECK(sol.at("status").get<std::string>() == "converged");
}

TEST_CASE("bench-synthetic converges and emits a trace") {
  const fs::path trace = scratch_dir() / "trace.csv";
  const CliResult res = run_cli("bench-synthetic --seed 7 --trace " + trace.string());
  REQUIRE(res.exit_code == 0);

  std::istringstream in(slurp(trace));
  std::string line, last;
  std::getline(in, line);
  CHECK(line.rfind("iteration,gamma", 0) == 0);
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  // final row: iteration,gamma,z_1,z_2
  const std::size_t c1 = last.find(',');
  const std::size_t c2 = last.find(',', c1 + 1);
  const double gamma = std::stod(last.substr(c1 + 1, c2 - c1 - 1));
  CHECK(gamma < 1e-2);
}

TEST_CASE("identical invocations produce byte-identical outputs") {
  const fs::path a = scratch_dir() / "gen_a.json";
  const fs::path b = scratch_dir() / "gen_b.json";
  REQUIRE(run_cli("synth-gen --seed 42 --n-support 50 -o " + a.string()).exit_code == 0);
  REQUIRE(run_cli("synth-gen --seed 42 --n-support 50 -o " + b.string()).exit_code == 0);
  CHECK(slurp(a) == slurp(b));

  const fs::path sa = scratch_dir() / "sol_a.json";
  const fs::path sb = scratch_dir() / "sol_b.json";
  REQUIRE(run_cli("solve " + a.string() + " -o " + sa.string()).exit_code == 0);
  REQUIRE(run_cli("solve " + a.string() + " -o " + sb.string()).exit_code == 0);
  CHECK(slurp(sa) == slurp(sb));
}

TEST_CASE("end-to-end generate, solve, evaluate") {
  const fs::path inst = scratch_dir() / "bench.json";
  REQUIRE(run_cli("synth-gen --seed 1 --n-support 80 -o " + inst.string()).exit_code == 0);
  const fs::path sol = scratch_dir() / "bench_sol.json";
  REQUIRE(run_cli("solve " + inst.string() + " -o " + sol.string()).exit_code == 0);
  const fs::path report = scratch_dir() / "report.csv";
  REQUIRE(run_cli("eval " + inst.string() + " --solution " + sol.string() + " -o " +
                  report.string())
              .exit_code == 0);
  std::istringstream in(slurp(report));
  std::string header;
  std::getline(in, header);
  CHECK(header == "predictor,lambda_1,lambda_2,mse");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows > 0);
}

TEST_CASE("certify reports the balanced point of a symmetric instance") {
  const fs::path inst = scratch_dir() / "t1.json";
  spit(inst, R"({
    "domains": ["d1", "d2"],
    "points": [
      {"densities": [1.0, 0.0], "predictions": [1.0, 0.0], "y_mean": 1.0, "y_sq_mean": 1.0},
      {"densities": [0.0, 1.0], "predictions": [1.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
    ]})");
  const CliResult res = run_cli("certify " + inst.string() + " --z 0.5,0.5 --eta 0.2");
  REQUIRE(res.exit_code == 0);
  const json cert = json::parse(res.out);
  CHECK(cert.at("is_near_global").get<bool>());
  CHECK(cert.at("kkt_residual").get<double>() <= 1e-6);
}

TEST_CASE("unknown flags exit with the validation code") {
  CHECK(run_cli("solve --no-such-flag whatever").exit_code == 1);
}

TEST_CASE("missing input files exit with the io code") {
  CHECK(run_cli("solve /nonexistent/instance.json").exit_code == 2);
}

TEST_CASE("invalid instance data exits with the validation code") {
  const fs::path inst = scratch_dir() / "bad.json";
  spit(inst, R"({"domains": ["a"], "points": [
    {"densities": [-0.1], "predictions": [0.0], "y_mean": 0.0, "y_sq_mean": 0.0},
    {"densities": [1.1], "predictions": [0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
  ]})");
  CHECK(run_cli("solve " + inst.string()).exit_code == 1);
}

TEST_CASE("z0 can be seeded from a file") {
  const fs::path inst = scratch_dir() / "ident2.json";
  spit(inst, kIdenticalDomains);
  const fs::path z0 = scratch_dir() / "z0.json";
  spit(z0, "[0.25, 0.75]");
  const fs::path sol_path = scratch_dir() / "sol_z0.json";
  const CliResult res = run_cli("solve " + inst.string() + " --z0 file:" + z0.string() + " -o " +
                                sol_path.string());
  REQUIRE(res.exit_code == 0);
  const json sol = json::parse(slurp(sol_path));
  CHECK(sol.at("z_star")[0].get<double>() == 0.25);
}

TEST_CASE("bound epsilon-hat over instance files") {
  const fs::path tru = scratch_dir() / "true.json";
  const fs::path est = scratch_dir() / "est.json";
  spit(tru, R"({"domains": ["a", "b"], "points": [
    {"densities": [0.25, 0.5], "predictions": [0.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0},
    {"densities": [0.75, 0.5], "predictions": [0.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
  ]})");
  spit(est, R"({"domains": ["a", "b"], "points": [
    {"densities": [0.5, 0.5], "predictions": [0.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0},
    {"densities": [0.5, 0.5], "predictions": [0.0, 0.0], "y_mean": 0.0, "y_sq_mean": 0.0}
  ]})");
  const CliResult res = run_cli("bound epsilon-hat --true-instance " + tru.string() +
                                " --estimated-instance " + est.string() +
                                " --epsilon 0.1 --m 4 --alpha 2");
  REQUIRE(res.exit_code == 0);
  CHECK(std::abs(std::stod(res.out) - std::sqrt(0.1 * 4.0 / 3.0) * 2.0) < 1e-9);
}

TEST_CASE("bound epsilon-t over a conditional file") {
  const fs::path inst = scratch_dir() / "cond.json";
  spit(inst, R"({"domains": ["a", "b"], "points": [
    {"densities": [0.6, 0.3], "predictions": [0.0, 0.0], "y_mean": 0.5, "y_sq_mean": 0.5,
     "label_dist": {"labels": [0.0, 1.0], "cond": [[0.25, 0.75], [0.25, 0.75]]}},
    {"densities": [0.4, 0.7], "predictions": [0.0, 0.0], "y_mean": 0.5, "y_sq_mean": 0.5,
     "label_dist": {"labels": [0.0, 1.0], "cond": [[0.25, 0.75], [0.25, 0.75]]}}
  ]})");
  const fs::path cond = scratch_dir() / "target_cond.json";
  spit(cond, R"({"cond": [[0.5, 0.5], [0.5, 0.5]]})");
  const CliResult res = run_cli("bound epsilon-t --instance " + inst.string() + " --target-cond " +
                                cond.string() + " --epsilon 0.1 --m 4 --alpha 2");
  REQUIRE(res.exit_code == 0);
  CHECK(std::abs(std::stod(res.out) - std::sqrt(4.0 / 3.0 * 0.1 * 4.0)) < 1e-9);
}

TEST_CASE("divergence --exp prints the exponentiated value") {
  const fs::path p = scratch_dir() / "pe.json";
  const fs::path q = scratch_dir() / "qe.json";
  spit(p, R"({"mass": [0.5, 0.5]})");
  spit(q, R"({"mass": [0.25, 0.75]})");
  const CliResult res =
      run_cli("divergence " + p.string() + " " + q.string() + " --alpha 2 --exp");
  REQUIRE(res.exit_code == 0);
  CHECK(res.out == "1.333333\n");
}

TEST_CASE("budget exhaustion without a certificate exits with code 3") {
  const fs::path inst = scratch_dir() / "asym.json";
  spit(inst, kAsymmetric);
  const CliResult res = run_cli("solve " + inst.string() + " -o " +
                                (scratch_dir() / "asym_sol.json").string() +
                                " --z0 vertex:0 --max-outer 1 --tol-global 1e-300 "
                                "--tol-outer 1e-300");
  CHECK(res.exit_code == 3);
}
