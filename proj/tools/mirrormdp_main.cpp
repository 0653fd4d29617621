// Command-line driver: preprocessing, sequential/parallel solves, exact
// evaluation oracles, mixing-time estimation, and reproducible CSV/JSON run
// artifacts. Exit codes: 0 ok, 1 solver/runtime failure, 2 configuration
// error.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mirrormdp/amdp.hpp"
#include "mirrormdp/environments.hpp"
#include "mirrormdp/io.hpp"
#include "mirrormdp/parallel.hpp"

namespace {

using namespace mirrormdp;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stream indices for the per-phase masters derived from --seed.
constexpr std::uint64_t kMixingPhase = 1;
constexpr std::uint64_t kModelPhase = 2;
constexpr std::uint64_t kSolvePhase = 3;

Mdp make_env(const std::string& env) {
  if (env == "riverswim") return river_swim();
  if (env == "access-control") return access_control();
  if (env.rfind("json:", 0) == 0) return load_mdp_file(env.substr(5));
  throw ConfigError("unknown --env '" + env + "' (expected riverswim, access-control, or json:<path>)");
}

struct SolveOptions {
  std::string env = "riverswim";
  double epsilon = 0.05;
  std::int64_t iterations = 200000;
  std::string pre_samples = "1000";  // per pair, or "auto" for the Prop.-1 count
  std::uint64_t seed = 0;
  std::string mode = "sequential";
  int workers = 1;
  std::string tmix = "auto";
  int policies = 1000;
  std::int64_t tmax = 100000;
  double sigma = 0.1;
  std::string trace_out;
  std::string policy_out;
  std::string summary_out;
  bool timing = false;
};

int cmd_solve(const SolveOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  const Mdp mdp = make_env(opt.env);

  double t_mix_bound = 0.0;
  if (opt.tmix == "auto") {
    t_mix_bound = static_cast<double>(estimate_mixing_time(
        mdp, opt.policies, opt.tmax, derive_stream(opt.seed, kMixingPhase)));
  } else {
    t_mix_bound = std::stod(opt.tmix);
    if (!(t_mix_bound > 0.0)) throw ConfigError("--tmix must be positive or 'auto'");
  }

  std::int64_t n_pre = 0;
  if (opt.pre_samples == "auto") {
    n_pre = required_samples_constraint(mdp.num_states(), mdp.num_pairs(), opt.sigma / 2.0,
                                        opt.epsilon / 16.0, 4.0 * t_mix_bound);
    std::cerr << "pre-samples auto: " << n_pre << " per pair\n";
  } else {
    n_pre = std::stoll(opt.pre_samples);
    if (n_pre < 1) throw ConfigError("--pre-samples must be >= 1 or 'auto'");
  }

  const GenerativeModel gen(mdp);
  auto model = estimate_model(gen, n_pre, derive_stream(opt.seed, kModelPhase), /*parallel=*/true);
  const AmdpProgram program(mdp, std::move(model), t_mix_bound);

  SolverConfig cfg;
  cfg.epsilon = opt.epsilon;
  cfg.iterations = opt.iterations;
  cfg.sigma = opt.sigma;
  cfg.seed = derive_stream(opt.seed, kSolvePhase);
  cfg.record_trace = !opt.trace_out.empty();

  RunSummary summary;
  summary.env = opt.env;
  summary.epsilon = opt.epsilon;
  summary.seed = opt.seed;
  summary.mode = opt.mode;
  summary.workers = opt.workers;
  summary.pre_samples_per_pair = n_pre;
  summary.t_mix_bound = t_mix_bound;
  summary.executed_iterations = opt.iterations;
  summary.theoretical_iterations = theoretical_iterations(program, opt.sigma, opt.epsilon);
  summary.sigma = opt.sigma;

  DualEstimate dual;
  std::vector<TraceRecord> trace;
  if (opt.mode == "sequential") {
    auto res = solve(program, cfg);
    summary.v_bar_hat = res.x_hat.v_bar;
    summary.productive_count = res.productive_count;
    summary.nonproductive_count = res.nonproductive_count;
    dual = std::move(res.dual);
    trace = std::move(res.trace);
  } else if (opt.mode == "parallel") {
    if (opt.workers < 1) throw ConfigError("--mode parallel requires --workers >= 1");
    auto res = run_parallel(program, cfg, opt.workers);
    summary.v_bar_hat = res.x_hat.v_bar;
    summary.productive_count = res.productive_count;
    summary.nonproductive_count = res.nonproductive_count;
    summary.comm = res.comm;
    dual = std::move(res.dual);
    trace = std::move(res.trace);
  } else {
    throw ConfigError("unknown --mode '" + opt.mode + "'");
  }

  const Policy pi = round_policy(dual, mdp);
  const auto rvi = optimal_gain_rvi(mdp, 1e-8);
  summary.v_star = rvi.gain;
  summary.policy_value = policy_value(mdp, pi);
  summary.optimality_gap = summary.v_star - summary.policy_value;
  summary.lambda_sum = dual.lambda.sum();
  if (opt.timing) {
    summary.runtime_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
  }

  if (!opt.trace_out.empty()) write_text_file(opt.trace_out, trace_to_csv(trace, opt.timing));
  if (!opt.policy_out.empty()) write_text_file(opt.policy_out, policy_to_json(mdp, pi));
  const std::string summary_json = summary_to_json(summary);
  if (!opt.summary_out.empty())
    write_text_file(opt.summary_out, summary_json + "\n");
  else
    std::cout << summary_json << "\n";
  return 0;
}

int cmd_optimal(const std::string& env) {
  const Mdp mdp = make_env(env);
  const auto res = optimal_gain_rvi(mdp, 1e-8);
  std::cout << "v_star: " << res.gain << "\n";
  std::cout << policy_to_json(mdp, res.greedy) << "\n";
  return 0;
}

int cmd_eval(const std::string& env, const std::string& policy_path) {
  const Mdp mdp = make_env(env);
  const Policy pi = load_policy_file(mdp, policy_path);
  std::cout << policy_value(mdp, pi) << "\n";
  return 0;
}

int cmd_mixing_time(const std::string& env, int policies, std::int64_t tmax, std::uint64_t seed) {
  const Mdp mdp = make_env(env);
  std::cout << estimate_mixing_time(mdp, policies, tmax, derive_stream(seed, kMixingPhase)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual stochastic mirror descent for mixing average-reward MDPs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file (flags override)");

  SolveOptions opt;
  auto* solve_cmd = app.add_subcommand("solve", "preprocess, solve, round, evaluate");
  solve_cmd->add_option("--env", opt.env, "riverswim | access-control | json:<path>");
  solve_cmd->add_option("--epsilon", opt.epsilon, "target accuracy")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--iters", opt.iterations, "executed mirror-descent iterations")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--pre-samples", opt.pre_samples,
                        "generative-model samples per pair, or 'auto'");
  solve_cmd->add_option("--seed", opt.seed, "master seed")->envname("MIRRORMDP_SEED");
  solve_cmd->add_option("--mode", opt.mode, "sequential | parallel");
  solve_cmd->add_option("--workers", opt.workers, "worker count for --mode parallel");
  solve_cmd->add_option("--tmix", opt.tmix, "mixing-time bound, or 'auto' to estimate");
  solve_cmd->add_option("--policies", opt.policies, "random policies for --tmix auto");
  solve_cmd->add_option("--tmax", opt.tmax, "mixing-time search horizon");
  solve_cmd->add_option("--sigma", opt.sigma, "confidence level (reporting and auto sampling)");
  solve_cmd->add_option("--trace-out", opt.trace_out, "trace CSV path");
  solve_cmd->add_option("--policy-out", opt.policy_out, "rounded policy JSON path");
  solve_cmd->add_option("--summary-out", opt.summary_out, "summary JSON path (default stdout)");
  solve_cmd->add_flag("--timing", opt.timing,
                      "record wall-clock timings (breaks byte-identical outputs)");

  std::string env_opt = "riverswim";
  auto* optimal_cmd = app.add_subcommand("optimal", "print v* and the greedy policy (RVI)");
  optimal_cmd->add_option("--env", env_opt, "riverswim | access-control | json:<path>");

  std::string eval_env = "riverswim";
  std::string policy_path;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy file with the exact oracle");
  eval_cmd->add_option("--env", eval_env, "riverswim | access-control | json:<path>");
  eval_cmd->add_option("--policy", policy_path, "policy JSON path")->required();

  std::string mix_env = "riverswim";
  int mix_policies = 1000;
  std::int64_t mix_tmax = 100000;
  std::uint64_t mix_seed = 0;
  auto* mix_cmd = app.add_subcommand("mixing-time", "estimate t_mix over random policies");
  mix_cmd->add_option("--env", mix_env, "riverswim | access-control | json:<path>");
  mix_cmd->add_option("--policies", mix_policies, "number of sampled policies");
  mix_cmd->add_option("--tmax", mix_tmax, "search horizon");
  mix_cmd->add_option("--seed", mix_seed, "master seed")->envname("MIRRORMDP_SEED");

  try {
    app.parse(argc, argv);
    if (solve_cmd->parsed()) return cmd_solve(opt);
    if (optimal_cmd->parsed()) return cmd_optimal(env_opt);
    if (eval_cmd->parsed()) return cmd_eval(eval_env, policy_path);
    if (mix_cmd->parsed()) return cmd_mixing_time(mix_env, mix_policies, mix_tmax, mix_seed);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
