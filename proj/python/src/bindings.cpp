#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <sstream>

#include "optstop/config.hpp"
#include "optstop/dp_oracle.hpp"
#include "optstop/errors.hpp"
#include "optstop/policy.hpp"
#include "optstop/simulator.hpp"
#include "optstop/tp2.hpp"
#include "optstop/tspsa.hpp"

namespace py = pybind11;
using namespace optstop;

namespace {

py::dict metrics_dict(const EvalMetrics& m) {
  py::dict d;
  d["reward_mean"] = m.reward_mean;
  d["reward_ci95"] = m.reward_ci95;
  d["length_mean"] = m.length_mean;
  d["prevention_probability"] = m.prevention_probability;
  d["early_stopping_probability"] = m.early_stopping_probability;
  d["delay_mean"] = m.delay_mean;
  d["delay_excluded"] = m.delay_excluded;
  d["episodes"] = m.episodes;
  d["truncated"] = m.truncated;
  return d;
}

py::dict verdict_dict(const Verdict& v) {
  py::dict d;
  d["ok"] = v.ok;
  d["first_violation"] = v.first_violation;
  return d;
}

Policy parse_policy(const std::string& kind, const std::vector<double>& values) {
  if (kind == "smooth_threshold") return SmoothThreshold{ThetaVector(values)};
  if (kind == "hard_threshold") return HardThreshold{values};
  if (kind == "shiryaev") return Shiryaev{values.empty() ? 0.75 : values.at(0)};
  if (kind == "alert_baseline") return AlertBaseline{};
  if (kind == "intrusion_time_oracle") return IntrusionTimeOracle{};
  throw std::invalid_argument("unknown policy kind '" + kind + "'");
}

class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)), pomdp_(build_pomdp(cfg_)) {}

  static Experiment scenario(const std::string& name) { return Experiment(named_scenario(name)); }
  static Experiment from_file(const std::filesystem::path& path) { return Experiment(load_config(path)); }

  std::uint64_t seed() const { return cfg_.seed; }
  int stops() const { return cfg_.stops; }
  std::string config_yaml() const {
    std::ostringstream out;
    save_config(cfg_, out);
    return out.str();
  }

  py::dict oracle(std::optional<int> resolution) const {
    auto oc = cfg_.oracle;
    if (resolution) oc.resolution = *resolution;
    const auto grid = value_iteration(pomdp_, oc);
    const auto r = verify_structure(grid, pomdp_, cfg_.tp2_order);
    py::list thresholds;
    for (const auto& t : r.thresholds) thresholds.append(t.empty ? std::nan("") : t.alpha);
    py::dict d;
    d["resolution"] = r.resolution;
    d["converged"] = r.converged;
    d["max_residual"] = r.max_residual;
    d["value_at_zero"] = r.value_at_zero;
    d["thresholds"] = thresholds;
    d["nested"] = verdict_dict(r.nested);
    d["connected"] = verdict_dict(r.connected);
    d["monotone_thresholds"] = verdict_dict(r.monotone);
    d["tp2_transitions"] = verdict_dict(r.tp2_transitions);
    d["tp2_observations"] = verdict_dict(r.tp2_observations);
    d["points"] = grid.points;
    d["values"] = grid.values;
    return d;
  }

  py::dict train(std::optional<int> iterations, std::optional<int> restarts,
                 std::optional<int> rollouts_per_eval, std::optional<std::uint64_t> seed) const {
    auto tc = cfg_.trainer;
    if (iterations) tc.iterations = *iterations;
    if (restarts) tc.restarts = *restarts;
    if (rollouts_per_eval) tc.rollouts_per_eval = *rollouts_per_eval;
    RestartResults res;
    {
      py::gil_scoped_release release;
      res = train_with_restarts(pomdp_, tc, seed.value_or(cfg_.seed));
    }
    py::list runs;
    for (const auto& run : res.runs) {
      py::dict r;
      r["theta"] = run.theta.values();
      r["thresholds"] = harden(run.theta).thresholds;
      r["final_eval_reward"] = run.curve.final_eval().reward_mean;
      r["final_eval_ci95"] = run.curve.final_eval().reward_ci95;
      runs.append(r);
    }
    py::dict d;
    d["best"] = res.best;
    d["theta"] = res.best_run().theta.values();
    d["thresholds"] = harden(res.best_run().theta).thresholds;
    d["runs"] = runs;
    return d;
  }

  py::dict evaluate(const std::string& kind, const std::vector<double>& values,
                    std::optional<int> episodes, std::optional<std::uint64_t> seed) const {
    const auto policy = parse_policy(kind, values);
    validate_policy(policy, cfg_.stops);
    EvalMetrics m;
    {
      py::gil_scoped_release release;
      m = optstop::evaluate(pomdp_, policy, episodes.value_or(cfg_.evaluation.episodes),
                            seed.value_or(cfg_.seed));
    }
    return metrics_dict(m);
  }

 private:
  ExperimentConfig cfg_;
  StoppingPomdp pomdp_;
};

}  // namespace

PYBIND11_MODULE(_optstop, m) {
  m.doc() = "Optimal multiple stopping for intrusion prevention";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<ZeroLikelihoodError>(m, "ZeroLikelihoodError", PyExc_ArithmeticError);

  m.def("belief_update", py::overload_cast<double, double, double, double>(&belief_update), py::arg("b"),
        py::arg("z0"), py::arg("z1"), py::arg("p"),
        "Posterior intrusion probability after one continue step.");
  m.def("sigmoid", &sigmoid, py::arg("x"));
  m.def(
      "stop_probability",
      [](const std::vector<double>& theta, int l, double b) {
        return stop_probability(ThetaVector(theta), l, b);
      },
      py::arg("theta"), py::arg("l"), py::arg("b"));
  m.def(
      "harden", [](const std::vector<double>& theta) { return harden(ThetaVector(theta)).thresholds; },
      py::arg("theta"));
  m.def(
      "transition_minors",
      [](double p, bool final_stop) { return second_order_minors(transition_matrix(p, final_stop)); },
      py::arg("p"), py::arg("final_stop") = false);

  py::class_<Experiment>(m, "Experiment")
      .def_static("scenario", &Experiment::scenario, py::arg("name") = "default")
      .def_static("from_file", &Experiment::from_file, py::arg("path"))
      .def_property_readonly("seed", &Experiment::seed)
      .def_property_readonly("stops", &Experiment::stops)
      .def("config_yaml", &Experiment::config_yaml)
      .def("oracle", &Experiment::oracle, py::arg("resolution") = py::none())
      .def("train", &Experiment::train, py::arg("iterations") = py::none(),
           py::arg("restarts") = py::none(), py::arg("rollouts_per_eval") = py::none(),
           py::arg("seed") = py::none())
      .def("evaluate", &Experiment::evaluate, py::arg("kind"), py::arg("values") = std::vector<double>{},
           py::arg("episodes") = py::none(), py::arg("seed") = py::none());
}
