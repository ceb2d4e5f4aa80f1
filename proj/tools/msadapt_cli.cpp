// Command-line surface over the msadapt library: robust-weight solving,
// mixture sweeps, synthetic benchmark generation, and divergence/bound
// calculators. All outputs are deterministic given the seed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msadapt/combiner.hpp"
#include "msadapt/dc_objective.hpp"
#include "msadapt/eval.hpp"
#include "msadapt/instance_io.hpp"
#include "msadapt/problem.hpp"
#include "msadapt/renyi.hpp"
#include "msadapt/simplex.hpp"
#include "msadapt/solver.hpp"
#include "msadapt/synthetic.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitBudget = 3;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw msadapt::ParseError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  out << text;
  if (!out) throw std::ios_base::failure("write failed: " + path);
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string cell = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
    std::size_t used = 0;
    out.push_back(std::stod(cell, &used));
    if (used != cell.size()) throw std::invalid_argument("bad number in list: " + cell);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

msadapt::DiscreteDistribution load_distribution(const std::string& path) {
  const json doc = load_json_file(path);
  const json& mass = doc.is_array() ? doc : doc.at("mass");
  std::vector<double> v;
  for (const auto& x : mass) v.push_back(x.get<double>());
  return msadapt::DiscreteDistribution::validated(std::move(v));
}

msadapt::SimplexWeights parse_z0(const std::string& text, std::size_t p) {
  if (text == "uniform") return msadapt::SimplexWeights::uniform(p);
  if (text.rfind("vertex:", 0) == 0) {
    const std::size_t k = std::stoul(text.substr(7));
    if (k >= p) throw std::invalid_argument("vertex index out of range");
    return msadapt::SimplexWeights::vertex(p, k);
  }
  if (text.rfind("file:", 0) == 0) {
    const json doc = load_json_file(text.substr(5));
    const json& arr = doc.is_array() ? doc : (doc.contains("z_star") ? doc.at("z_star") : doc.at("z"));
    std::vector<double> v;
    for (const auto& x : arr) v.push_back(x.get<double>());
    return msadapt::SimplexWeights::validated(std::move(v));
  }
  throw std::invalid_argument("--z0 must be uniform, vertex:<k>, or file:<path>");
}

json certificate_to_json(const msadapt::Certificate& cert) {
  return json{{"gamma_value", cert.gamma_value},
              {"is_near_global", cert.is_near_global},
              {"combining_rule_residual", cert.combining_rule_residual},
              {"kkt_residual", cert.kkt_residual}};
}

json solution_to_json(const msadapt::Solution& sol, const msadapt::SolverConfig& cfg,
                      double m_bound, const msadapt::Certificate& cert) {
  json trace = json::array();
  for (const auto& tp : sol.trace) trace.push_back({{"z", tp.z}, {"gamma", tp.gamma}});
  return json{{"z_star", sol.z_star.w},
              {"gamma_star", sol.gamma_star},
              {"per_domain_losses", sol.per_domain_losses},
              {"status", msadapt::to_string(sol.status)},
              {"trace", trace},
              {"eta", cfg.eta},
              {"eta_prime", cfg.eta_prime},
              {"m_bound", m_bound},
              {"certificate", certificate_to_json(cert)}};
}

std::string trace_to_csv(const msadapt::Solution& sol) {
  const std::size_t p = sol.trace.empty() ? 0 : sol.trace.front().z.size();
  std::string out = "iteration,gamma";
  for (std::size_t k = 1; k <= p; ++k) out += ",z_" + std::to_string(k);
  out += "\n";
  char buf[32];
  for (std::size_t t = 0; t < sol.trace.size(); ++t) {
    out += std::to_string(t);
    std::snprintf(buf, sizeof(buf), "%.12g", sol.trace[t].gamma);
    out += ",";
    out += buf;
    for (double z : sol.trace[t].z) {
      std::snprintf(buf, sizeof(buf), "%.12g", z);
      out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

struct SolverFlags {
  double eta = 1e-3;
  double eta_prime = 1e-4;
  double m_bound = 0.0;  // 0 = auto
  double tol_global = 1e-2;
  double tol_outer = 1e-8;
  double tol_inner = 1e-10;
  std::size_t max_outer = 200;
  std::size_t max_inner = 500;
  std::uint64_t seed = 0;
  std::string z0 = "uniform";

  void attach(CLI::App* cmd) {
    cmd->add_option("--eta", eta, "Smoothing weight of the combination rule")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--eta-prime", eta_prime, "Slack of the combining-rule property")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--m-bound", m_bound, "Loss bound M (0 = auto-compute from the instance)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--tol-global", tol_global, "Near-global certificate threshold on gamma")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol-outer", tol_outer, "Outer-loop progress tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol-inner", tol_inner, "Inner-solver convergence tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-outer", max_outer, "Outer iteration budget")->check(CLI::PositiveNumber);
    cmd->add_option("--max-inner", max_inner, "Inner iteration budget")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--z0", z0, "Start point: uniform, vertex:<k>, or file:<path>");
  }

  msadapt::SolverConfig to_config(const msadapt::ProblemInstance& inst) const {
    msadapt::SolverConfig cfg;
    cfg.eta = eta;
    cfg.eta_prime = eta_prime;
    if (m_bound > 0.0) {
      const double required = msadapt::max_pointwise_loss(inst);
      if (m_bound < required)
        throw std::invalid_argument("--m-bound must be at least the max pointwise loss " +
                                    std::to_string(required));
      cfg.m_bound = m_bound;
    }
    cfg.global_tol = tol_global;
    cfg.outer_tol = tol_outer;
    cfg.inner_tol = tol_inner;
    cfg.max_outer = max_outer;
    cfg.max_inner = max_inner;
    cfg.seed = seed;
    cfg.z0 = parse_z0(z0, inst.num_domains());
    return cfg;
  }
};

double parse_alpha(const std::string& text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double a = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("bad alpha: " + text);
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-weighted combination toolkit for multiple-source regression"};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Find the robust weight z for an instance");
  std::string solve_instance, solve_output = "solution.json";
  SolverFlags solve_flags;
  solve_cmd->add_option("instance", solve_instance, "Instance JSON/CSV path")->required();
  solve_cmd->add_option("-o,--output", solve_output, "Solution JSON path");
  solve_flags.attach(solve_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Sweep target mixtures and compare predictors");
  std::string eval_instance, eval_solution, eval_output = "report.csv";
  eval_cmd->add_option("instance", eval_instance, "Instance JSON/CSV path")->required();
  eval_cmd->add_option("--solution", eval_solution, "Solution JSON from `solve`")->required();
  eval_cmd->add_option("-o,--output", eval_output, "Report CSV path");

  // synth-gen
  auto* synth_cmd = app.add_subcommand("synth-gen", "Generate a Gaussian benchmark instance");
  std::string synth_variant = "two_domain", synth_output = "instance.json";
  std::size_t synth_n_train = 200, synth_n_support = 500;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--variant", synth_variant, "two_domain or four_domain")
      ->check(CLI::IsMember({"two_domain", "four_domain"}));
  synth_cmd->add_option("--n-train", synth_n_train, "Training samples per domain")
      ->check(CLI::Range(std::size_t{3}, std::size_t{10000000}));
  synth_cmd->add_option("--n-support", synth_n_support, "Support points")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth_seed, "RNG seed");
  synth_cmd->add_option("-o,--output", synth_output, "Instance JSON path");

  // bench-synthetic
  auto* bench_cmd =
      app.add_subcommand("bench-synthetic", "End-to-end Gaussian benchmark; emits a gamma trace");
  std::string bench_trace = "trace.csv", bench_variant = "two_domain";
  std::size_t bench_n_train = 200, bench_n_support = 500;
  SolverFlags bench_flags;
  bench_cmd->add_option("--variant", bench_variant, "two_domain or four_domain")
      ->check(CLI::IsMember({"two_domain", "four_domain"}));
  bench_cmd->add_option("--n-train", bench_n_train, "Training samples per domain")
      ->check(CLI::Range(std::size_t{3}, std::size_t{10000000}));
  bench_cmd->add_option("--n-support", bench_n_support, "Support points")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--trace", bench_trace, "Trace CSV path");
  bench_flags.attach(bench_cmd);

  // divergence
  auto* div_cmd = app.add_subcommand("divergence", "Renyi divergence of two distribution files");
  std::string div_p, div_q, div_alpha = "2";
  bool div_exp = false;
  div_cmd->add_option("P", div_p, "Left distribution JSON")->required();
  div_cmd->add_option("Q", div_q, "Right distribution JSON")->required();
  div_cmd->add_option("--alpha", div_alpha, "Order alpha (> 0, 'inf' allowed)");
  div_cmd->add_flag("--exp", div_exp, "Print d_alpha = exp(D_alpha) instead");

  // bound
  auto* bound_cmd = app.add_subcommand("bound", "Guarantee-bound calculators");
  bound_cmd->require_subcommand(1);
  auto* guar_cmd = bound_cmd->add_subcommand("guarantee", "[(eps) d_alpha]^((a-1)/a) M^(1/a)");
  double guar_eps = 0.0, guar_d = 1.0, guar_m = 1.0;
  std::string guar_alpha = "2";
  guar_cmd->add_option("--epsilon-term", guar_eps, "Loss term (epsilon + delta)")
      ->required()
      ->check(CLI::NonNegativeNumber);
  guar_cmd->add_option("--d-alpha", guar_d, "Divergence factor d_alpha")
      ->check(CLI::NonNegativeNumber);
  guar_cmd->add_option("--m", guar_m, "Loss bound M")->check(CLI::NonNegativeNumber);
  guar_cmd->add_option("--alpha", guar_alpha, "Order alpha (> 1, 'inf' allowed)");

  auto* ehat_cmd = bound_cmd->add_subcommand("epsilon-hat", "Estimate-distributions loss term");
  std::string ehat_true, ehat_est, ehat_alpha = "2";
  double ehat_eps = 0.0, ehat_m = 1.0;
  ehat_cmd->add_option("--true-instance", ehat_true, "Instance with the true densities")
      ->required();
  ehat_cmd->add_option("--estimated-instance", ehat_est, "Instance with the estimated densities")
      ->required();
  ehat_cmd->add_option("--epsilon", ehat_eps, "Per-source loss bound")
      ->required()
      ->check(CLI::NonNegativeNumber);
  ehat_cmd->add_option("--m", ehat_m, "Loss bound M")->check(CLI::NonNegativeNumber);
  ehat_cmd->add_option("--alpha", ehat_alpha, "Order alpha (> 1, 'inf' allowed)");

  auto* et_cmd = bound_cmd->add_subcommand("epsilon-t", "Distinct-conditionals loss term");
  std::string et_instance, et_cond, et_alpha = "2";
  double et_eps = 0.0, et_m = 1.0;
  et_cmd->add_option("--instance", et_instance, "Instance with per-domain label_dist")->required();
  et_cmd->add_option("--target-cond", et_cond,
                     "JSON with 'cond': one target conditional row per point")
      ->required();
  et_cmd->add_option("--epsilon", et_eps, "Per-source loss bound")
      ->required()
      ->check(CLI::NonNegativeNumber);
  et_cmd->add_option("--m", et_m, "Loss bound M")->check(CLI::NonNegativeNumber);
  et_cmd->add_option("--alpha", et_alpha, "Order alpha (> 1, 'inf' allowed)");

  // certify
  auto* cert_cmd = app.add_subcommand("certify", "Optimality diagnostics for a candidate z");
  std::string cert_instance, cert_z, cert_output;
  double cert_eta = 1e-3, cert_eta_prime = 1e-4, cert_tol_global = 1e-2;
  cert_cmd->add_option("instance", cert_instance, "Instance JSON/CSV path")->required();
  cert_cmd->add_option("--z", cert_z, "Candidate weights, comma separated")->required();
  cert_cmd->add_option("--eta", cert_eta, "Smoothing weight")->check(CLI::PositiveNumber);
  cert_cmd->add_option("--eta-prime", cert_eta_prime, "Combining-rule slack")
      ->check(CLI::PositiveNumber);
  cert_cmd->add_option("--tol-global", cert_tol_global, "Near-global threshold")
      ->check(CLI::PositiveNumber);
  cert_cmd->add_option("-o,--output", cert_output, "Certificate JSON path (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*solve_cmd) {
      const msadapt::ProblemInstance inst = msadapt::load_instance(solve_instance);
      const msadapt::SolverConfig cfg = solve_flags.to_config(inst);
      const double m_bound = cfg.m_bound ? *cfg.m_bound : msadapt::auto_m_bound(inst);
      const msadapt::Solution sol = msadapt::dca_solve(inst, cfg);
      const msadapt::Certificate cert = msadapt::certify(inst, sol, cfg);
      write_text_file(solve_output, solution_to_json(sol, cfg, m_bound, cert).dump(2) + "\n");
      std::cout << "gamma_star=" << sol.gamma_star << " status=" << msadapt::to_string(sol.status)
                << " near_global=" << (cert.is_near_global ? "true" : "false") << "\n";
      if (sol.status == msadapt::SolveStatus::budget_exhausted && !cert.is_near_global)
        return kExitBudget;
      return kExitOk;
    }

    if (*eval_cmd) {
      const msadapt::ProblemInstance inst = msadapt::load_instance(eval_instance);
      const json sol = load_json_file(eval_solution);
      std::vector<double> z;
      for (const auto& x : sol.at("z_star")) z.push_back(x.get<double>());
      const double eta = sol.value("eta", 1e-3);
      const msadapt::EvalReport report = msadapt::evaluate_predictors(
          inst, msadapt::SimplexWeights::validated(std::move(z)), eta,
          msadapt::default_lambda_grid(inst.num_domains()));
      write_text_file(eval_output, report.to_csv());
      std::cout << "rows=" << report.rows.size() << "\n";
      return kExitOk;
    }

    if (*synth_cmd) {
      msadapt::GaussianBenchConfig cfg;
      cfg.n_train = synth_n_train;
      cfg.n_support = synth_n_support;
      cfg.seed = synth_seed;
      cfg.variant = synth_variant == "two_domain"
                        ? msadapt::GaussianBenchConfig::Variant::two_domain
                        : msadapt::GaussianBenchConfig::Variant::four_domain;
      const msadapt::ProblemInstance inst = msadapt::make_gaussian_problem(cfg);
      write_text_file(synth_output, msadapt::instance_to_json(inst).dump(2) + "\n");
      std::cout << "p=" << inst.num_domains() << " n=" << inst.num_points() << "\n";
      return kExitOk;
    }

    if (*bench_cmd) {
      msadapt::GaussianBenchConfig gen;
      gen.n_train = bench_n_train;
      gen.n_support = bench_n_support;
      gen.seed = bench_flags.seed;
      gen.variant = bench_variant == "two_domain"
                        ? msadapt::GaussianBenchConfig::Variant::two_domain
                        : msadapt::GaussianBenchConfig::Variant::four_domain;
      const msadapt::ProblemInstance inst = msadapt::make_gaussian_problem(gen);
      const msadapt::SolverConfig cfg = bench_flags.to_config(inst);
      const msadapt::Solution sol = msadapt::dca_solve(inst, cfg);
      const msadapt::Certificate cert = msadapt::certify(inst, sol, cfg);
      write_text_file(bench_trace, trace_to_csv(sol));
      std::cout << "iterations=" << sol.trace.size() - 1 << " gamma_star=" << sol.gamma_star
                << " near_global=" << (cert.is_near_global ? "true" : "false") << "\n";
      if (sol.status == msadapt::SolveStatus::budget_exhausted && !cert.is_near_global)
        return kExitBudget;
      return kExitOk;
    }

    if (*div_cmd) {
      const msadapt::DiscreteDistribution p = load_distribution(div_p);
      const msadapt::DiscreteDistribution q = load_distribution(div_q);
      const double alpha = parse_alpha(div_alpha);
      const double value = div_exp ? msadapt::d_alpha(p, q, alpha)
                                   : msadapt::renyi_divergence(p, q, alpha);
      std::printf("%.6f\n", value);
      return kExitOk;
    }

    if (*guar_cmd) {
      std::printf("%.12g\n",
                  msadapt::guarantee_bound(guar_eps, guar_d, guar_m, parse_alpha(guar_alpha)));
      return kExitOk;
    }

    if (*ehat_cmd) {
      const msadapt::ProblemInstance tru = msadapt::load_instance(ehat_true);
      const msadapt::ProblemInstance est = msadapt::load_instance(ehat_est);
      const msadapt::EpsilonBound b =
          msadapt::epsilon_hat(tru, est, ehat_eps, ehat_m, parse_alpha(ehat_alpha));
      if (b.violating_domain >= 0)
        std::cerr << "support violation: domain "
                  << tru.domain_names[static_cast<std::size_t>(b.violating_domain)] << "\n";
      std::printf("%.12g\n", b.value);
      return kExitOk;
    }

    if (*et_cmd) {
      const msadapt::ProblemInstance inst = msadapt::load_instance(et_instance);
      const json doc = load_json_file(et_cond);
      const json& rows = doc.is_array() ? doc : doc.at("cond");
      std::vector<std::vector<double>> cond;
      for (const auto& row : rows) {
        std::vector<double> r;
        for (const auto& x : row) r.push_back(x.get<double>());
        cond.push_back(std::move(r));
      }
      const msadapt::EpsilonBound b =
          msadapt::epsilon_T(inst, cond, et_eps, et_m, parse_alpha(et_alpha));
      if (b.violating_domain >= 0)
        std::cerr << "support violation: domain "
                  << inst.domain_names[static_cast<std::size_t>(b.violating_domain)] << "\n";
      std::printf("%.12g\n", b.value);
      return kExitOk;
    }

    if (*cert_cmd) {
      const msadapt::ProblemInstance inst = msadapt::load_instance(cert_instance);
      const msadapt::SimplexWeights z =
          msadapt::SimplexWeights::validated(parse_double_list(cert_z));
      if (z.dim() != inst.num_domains())
        throw std::invalid_argument("--z dimension does not match the instance");
      const msadapt::Certificate cert =
          msadapt::certify(inst, z, cert_eta, cert_eta_prime, cert_tol_global);
      const std::string text = certificate_to_json(cert).dump(2) + "\n";
      if (cert_output.empty())
        std::cout << text;
      else
        write_text_file(cert_output, text);
      return kExitOk;
    }
  } catch (const msadapt::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const msadapt::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const msadapt::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
