#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "optstop/config.hpp"
#include "optstop/dp_oracle.hpp"
#include "optstop/errors.hpp"
#include "optstop/policy.hpp"
#include "optstop/simulator.hpp"
#include "optstop/tp2.hpp"
#include "optstop/tspsa.hpp"

namespace fs = std::filesystem;
using namespace optstop;

namespace {

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

struct CommonOptions {
  std::string config;
  std::string scenario = "default";
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "Experiment config (YAML)")->check(CLI::ExistingFile);
  app->add_option("--scenario", o.scenario, "Built-in scenario when no config is given")
      ->check(CLI::IsMember({"default", "easy"}));
  app->add_option("--seed", o.seed, "Master seed (overrides config and OPTSTOP_SEED)");
  app->add_option("--out", o.out, "Output directory (overrides config and OPTSTOP_OUTPUT_DIR)");
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? named_scenario(o.scenario) : load_config(o.config);
  apply_env_overrides(cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  fs::create_directories(cfg.output_dir);
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void print_metrics(const std::string& name, const EvalMetrics& m) {
  fmt::print("{:<22} reward {:9.3f} +/- {:.3f}  length {:7.2f}  prevented {:.3f}  early {:.3f}"
             "  delay {:6.2f}\n",
             name, m.reward_mean, m.reward_ci95, m.length_mean, m.prevention_probability,
             m.early_stopping_probability, m.delay_mean);
}

Policy deployable(Policy p, bool harden_smooth) {
  if (harden_smooth)
    if (const auto* s = std::get_if<SmoothThreshold>(&p)) return harden(s->theta);
  return p;
}

int cmd_train(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  const auto pomdp = build_pomdp(cfg);
  const auto res = train_with_restarts(pomdp, cfg.trainer, cfg.seed);

  for (std::size_t r = 0; r < res.runs.size(); ++r) {
    const auto name = r == res.best ? std::string("training_curve.csv")
                                    : fmt::format("training_curve_restart_{}.csv", r);
    auto f = open_out(cfg.output_dir / name);
    write_curve_csv(f, res.runs[r].curve);
  }
  {
    auto f = open_out(cfg.output_dir / "training_summary.csv");
    f << "restart,best,eval_reward_mean,eval_reward_ci95";
    for (int l = 1; l <= cfg.stops; ++l) f << ",threshold_" << l;
    f << '\n';
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
      const auto& run = res.runs[r];
      const auto& ev = run.curve.final_eval();
      f << r << ',' << (r == res.best ? 1 : 0) << ',' << format_real(ev.reward_mean) << ','
        << format_real(ev.reward_ci95);
      for (double a : run.theta.thresholds()) f << ',' << format_real(a);
      f << '\n';
    }
  }
  const auto& best = res.best_run();
  save_policy(Policy{SmoothThreshold{best.theta}}, cfg.output_dir / "policy.yaml");
  fmt::print("best restart {} final eval reward {:.3f} +/- {:.3f}\n", res.best,
             best.curve.final_eval().reward_mean, best.curve.final_eval().reward_ci95);
  for (int l = 1; l <= cfg.stops; ++l)
    fmt::print("alpha_{} = {:.4f}\n", l, best.theta.threshold(l));
  fmt::print("wrote {}\n", (cfg.output_dir / "policy.yaml").string());
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& policy_path, bool harden_smooth,
                 std::optional<int> episodes) {
  const auto cfg = resolve_config(o);
  const auto pomdp = build_pomdp(cfg);
  const Policy policy = deployable(load_policy(fs::path(policy_path)), harden_smooth);
  validate_policy(policy, pomdp.stops());
  const auto n = std::size_t(episodes.value_or(cfg.evaluation.episodes));
  const auto rows = compare(pomdp, std::vector<NamedPolicy>{{policy_kind(policy), policy}}, n, cfg.seed);
  auto f = open_out(cfg.output_dir / "metrics.csv");
  write_metrics_csv(f, rows);
  print_metrics(rows[0].name, rows[0].metrics);
  return 0;
}

int cmd_oracle(const CommonOptions& o, std::optional<int> resolution) {
  auto cfg = resolve_config(o);
  if (resolution) cfg.oracle.resolution = *resolution;
  const auto pomdp = build_pomdp(cfg);
  const auto grid = value_iteration(pomdp, cfg.oracle);
  const auto report = verify_structure(grid, pomdp, cfg.tp2_order);
  {
    auto f = open_out(cfg.output_dir / "structure_report.yaml");
    write_structure_report(f, report);
  }
  {
    auto f = open_out(cfg.output_dir / "value_function.csv");
    write_value_csv(f, grid);
  }
  write_structure_report(std::cout, report);
  if (!report.converged) {
    std::cerr << fmt::format("value iteration did not converge: residual {:.3g}\n",
                             report.max_residual);
    return kExitFailedCheck;
  }
  return 0;
}

int cmd_ingest(const CommonOptions& o, const std::string& traces, const std::string& variant,
               std::optional<double> epsilon, const std::string& output) {
  const auto cfg = resolve_config(o);
  const Bounds bounds = cfg.observation.kind == ObservationSource::Kind::Synthetic
                            ? cfg.observation.synthetic.bounds
                            : cfg.observation.bounds;
  const auto set = load_traces(traces, bounds);
  const auto model = fit_empirical(set.records, parse_variant(variant), bounds,
                                   epsilon.value_or(1e-9));
  const fs::path out = output.empty() ? cfg.output_dir / "observation_model.yaml" : fs::path(output);
  save_model(model, out);
  fmt::print("{} records, {} clipped counter values -> {}\n", set.records.size(), set.clipped,
             out.string());
  const auto tp2 = check_tp2_observations(model, cfg.tp2_order);
  fmt::print("TP2 under {} order: {}{}\n", to_string(cfg.tp2_order), tp2.verdict.tp2 ? "yes" : "no",
             tp2.verdict.tp2 ? "" : " (" + tp2.violation + ")");
  return 0;
}

std::vector<NamedPolicy> comparison_set(const ExperimentConfig& cfg, const StoppingPomdp& pomdp,
                                        const std::vector<std::string>& policy_files,
                                        bool harden_smooth) {
  std::vector<NamedPolicy> set;
  for (const auto& path : policy_files) {
    const Policy p = deployable(load_policy(fs::path(path)), harden_smooth);
    validate_policy(p, pomdp.stops());
    set.push_back({fs::path(path).stem().string(), p});
  }
  const auto grid = value_iteration(pomdp, cfg.oracle);
  set.push_back({"dp_thresholds", threshold_policy(grid)});
  set.push_back({"shiryaev", Shiryaev{cfg.evaluation.shiryaev_threshold}});
  set.push_back({"alert_baseline", AlertBaseline{}});
  set.push_back({"intrusion_time_oracle", IntrusionTimeOracle{}});
  return set;
}

int cmd_compare(const CommonOptions& o, const std::vector<std::string>& policy_files,
                bool harden_smooth, std::optional<int> episodes) {
  const auto cfg = resolve_config(o);
  const auto pomdp = build_pomdp(cfg);
  const auto set = comparison_set(cfg, pomdp, policy_files, harden_smooth);
  const auto n = std::size_t(episodes.value_or(cfg.evaluation.episodes));
  const auto rows = compare(pomdp, set, n, cfg.seed);
  auto f = open_out(cfg.output_dir / "comparison.csv");
  write_metrics_csv(f, rows);
  for (const auto& r : rows) print_metrics(r.name, r.metrics);
  return 0;
}

int cmd_verify(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  const auto pomdp = build_pomdp(cfg);

  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  bool all = true;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    all = all && ok;
    e << YAML::Key << name << YAML::Value << YAML::BeginMap << YAML::Key << "ok" << YAML::Value
      << ok;
    if (!detail.empty()) e << YAML::Key << "detail" << YAML::Value << detail;
    e << YAML::EndMap;
    fmt::print("{:<28} {}{}\n", name, ok ? "ok" : "FAILED", detail.empty() ? "" : "  " + detail);
  };

  const auto tr = check_tp2_transitions(pomdp);
  check("tp2_transitions", tr.tp2, "");
  const auto ob = check_tp2_observations(pomdp.observation_model(), cfg.tp2_order);
  check("tp2_observations", ob.verdict.tp2,
        "order " + to_string(cfg.tp2_order) + (ob.verdict.tp2 ? "" : ", " + ob.violation));

  bool gap_ok = true;
  for (int l = 1; l <= pomdp.stops(); ++l) gap_ok = gap_ok && pomdp.reward_gap_slope(l) > 0.0;
  check("reward_gap_increasing", gap_ok, "");

  const auto grid = value_iteration(pomdp, cfg.oracle);
  const auto report = verify_structure(grid, pomdp, cfg.tp2_order);
  check("value_iteration_converged", report.converged,
        fmt::format("residual {:.3g}", report.max_residual));
  check("nested_stopping_sets", report.nested.ok, report.nested.first_violation);
  check("connected_stopping_sets", report.connected.ok, report.connected.first_violation);
  check("monotone_thresholds", report.monotone.ok, report.monotone.first_violation);

  const auto m = evaluate(pomdp, threshold_policy(grid),
                          std::size_t(cfg.evaluation.consistency_episodes), cfg.seed);
  const double se = m.reward_ci95 / 1.959963984540054;
  const double v0 = report.value_at_zero;
  check("oracle_simulation_consistency", std::abs(m.reward_mean - v0) <= 3.0 * se,
        fmt::format("simulated {:.3f}, V*_L(0) {:.3f}, 3 SE {:.3f}", m.reward_mean, v0, 3.0 * se));
  e << YAML::EndMap;

  auto f = open_out(cfg.output_dir / "verify_report.yaml");
  f << e.c_str() << '\n';
  return all ? 0 : kExitFailedCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal multiple stopping for intrusion prevention"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string policy_path;
  std::vector<std::string> policy_files;
  bool harden_flag = false;
  std::optional<int> episodes, resolution;
  std::string traces, variant = "factorized", model_out;
  std::optional<double> epsilon;

  auto* train = app.add_subcommand("train", "Learn threshold policies with T-SPSA");
  add_common(train, common);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy file");
  add_common(evaluate, common);
  evaluate->add_option("--policy", policy_path, "Policy file")->required()->check(CLI::ExistingFile);
  evaluate->add_flag("--harden", harden_flag, "Evaluate the deterministic form of a smooth policy");
  evaluate->add_option("--episodes", episodes, "Evaluation episodes")->check(CLI::PositiveNumber);

  auto* oracle = app.add_subcommand("oracle", "Value iteration and structure report");
  add_common(oracle, common);
  oracle->add_option("--resolution", resolution, "Belief grid points")->check(CLI::Range(3, 1000000));

  auto* ingest = app.add_subcommand("ingest", "Fit an observation model from a trace CSV");
  add_common(ingest, common);
  ingest->add_option("--traces", traces, "Trace CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--variant", variant, "factorized or joint")
      ->check(CLI::IsMember({"factorized", "joint"}));
  ingest->add_option("--epsilon", epsilon, "Smoothing floor")->check(CLI::NonNegativeNumber);
  ingest->add_option("--output", model_out, "Model file (default <out>/observation_model.yaml)");

  auto* cmp = app.add_subcommand("compare", "Compare policies against the baselines");
  add_common(cmp, common);
  cmp->add_option("--policy", policy_files, "Policy files")->check(CLI::ExistingFile);
  cmp->add_flag("--harden", harden_flag, "Use the deterministic form of smooth policies");
  cmp->add_option("--episodes", episodes, "Evaluation episodes")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Run the structural and consistency checks");
  add_common(verify, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(common);
    if (*evaluate) return cmd_evaluate(common, policy_path, harden_flag, episodes);
    if (*oracle) return cmd_oracle(common, resolution);
    if (*ingest) return cmd_ingest(common, traces, variant, epsilon, model_out);
    if (*cmp) return cmd_compare(common, policy_files, harden_flag, episodes);
    if (*verify) return cmd_verify(common);
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return kExitError;
  } catch (const SchemaError& ex) {
    std::cerr << "schema error: " << ex.what() << '\n';
    return kExitError;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
