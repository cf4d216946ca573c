#include "optstop/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "optstop/errors.hpp"

namespace optstop {

namespace {

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else return "a string";
}

// A YAML mapping read with key tracking so unknown keys can be reported.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsMap()) throw ConfigError(display(), "expected a mapping");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) {
    used_.insert(key);
    return bool(lookup(key));
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const auto n = lookup(key);
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "not a scalar");
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(field(key), std::string("expected ") + type_name<T>());
    }
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(lookup(key), field(key));
  }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return lookup(key);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  YAML::Node lookup(const std::string& key) const {
    const YAML::Node& n = node_;
    return n ? n[key] : YAML::Node(YAML::NodeType::Undefined);
  }

  std::string display() const { return path_.empty() ? "<root>" : path_; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

const char* kStates[2] = {"no_intrusion", "intrusion"};
const char* kDims[3] = {"dx", "dy", "dz"};

CounterFamily parse_family(Section s) {
  const bool poisson = s.has("poisson");
  const bool table = s.has("table");
  if (poisson == table) throw ConfigError(s.path(), "give exactly one of 'poisson' or 'table'");
  CounterFamily f;
  if (poisson) {
    double mean = 0.0;
    s.get("poisson", mean);
    f = CounterFamily::poisson(mean);
  } else {
    const auto node = s.raw("table");
    std::map<int, double> t;
    try {
      for (const auto& row : node) {
        const auto pair = row.as<std::vector<double>>();
        if (pair.size() != 2) throw YAML::Exception(row.Mark(), "pair");
        t[int(pair[0])] += pair[1];
      }
    } catch (const YAML::Exception&) {
      throw ConfigError(s.field("table"), "expected a list of [value, probability] pairs");
    }
    f = CounterFamily::explicit_table(std::move(t));
  }
  s.finish();
  return f;
}

void parse_bounds(Section s, Bounds& b) {
  s.get("dx_max", b.dx_max);
  s.get("dy_max", b.dy_max);
  s.get("dz_max", b.dz_max);
  s.finish();
}

void rethrow_as_config(const std::invalid_argument& ex) {
  const std::string msg = ex.what();
  const auto space = msg.find(' ');
  throw ConfigError(msg.substr(0, space), msg.substr(space == std::string::npos ? 0 : space + 1));
}

// Shortest text that reads back to the same double.
std::string real(double v) { return fmt::format("{}", v); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(intrusion_probability > 0.0 && intrusion_probability < 1.0))
    throw ConfigError("pomdp.intrusion_probability", "must lie strictly between 0 and 1");
  if (stops < 1) throw ConfigError("pomdp.stops", "must be at least 1");
  if (max_steps < 1) throw ConfigError("pomdp.max_steps", "must be at least 1");
  if (!(rewards.stop > 0.0)) throw ConfigError("pomdp.rewards.stop", "must be positive");
  if (!(rewards.service > 0.0)) throw ConfigError("pomdp.rewards.service", "must be positive");
  if (!(rewards.intrusion < 0.0)) throw ConfigError("pomdp.rewards.intrusion", "must be negative");
  const auto& b = observation.kind == ObservationSource::Kind::Synthetic ? observation.synthetic.bounds
                                                                         : observation.bounds;
  if (b.dx_max < 0 || b.dy_max < 0 || b.dz_max < 0)
    throw ConfigError("observation_model.bounds", "bounds must be non-negative");
  if (observation.kind == ObservationSource::Kind::Synthetic) {
    for (int s = 0; s < 2; ++s)
      for (int d = 0; d < 3; ++d) {
        const auto& f = observation.synthetic.families[s][d];
        if (f.kind == CounterFamily::Kind::TruncatedPoisson && !(f.mean > 0.0))
          throw ConfigError(std::string("observation_model.") + kStates[s] + "." + kDims[d] +
                                ".poisson",
                            "mean must be positive");
      }
    if (!(observation.synthetic.epsilon >= 0.0))
      throw ConfigError("observation_model.epsilon", "must be non-negative");
  } else {
    if (observation.path.empty()) throw ConfigError("observation_model.path", "is required");
    if (!(observation.epsilon >= 0.0))
      throw ConfigError("observation_model.epsilon", "must be non-negative");
  }
  try {
    trainer.validate();
    oracle.validate();
  } catch (const std::invalid_argument& ex) {
    rethrow_as_config(ex);
  }
  if (evaluation.episodes < 1) throw ConfigError("evaluation.episodes", "must be at least 1");
  if (!(evaluation.shiryaev_threshold >= 0.0 && evaluation.shiryaev_threshold <= 1.0))
    throw ConfigError("evaluation.shiryaev_threshold", "must lie in [0, 1]");
  if (evaluation.consistency_episodes < 1)
    throw ConfigError("evaluation.consistency_episodes", "must be at least 1");
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& ex) {
    throw ConfigError("<root>", std::string("not valid YAML: ") + ex.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);

  ExperimentConfig cfg;
  Section top(root, "");
  top.get("seed", cfg.seed);
  std::string out_dir;
  if (top.has("output_dir")) {
    top.get("output_dir", out_dir);
    cfg.output_dir = out_dir;
  }

  {
    auto s = top.child("pomdp");
    s.get("intrusion_probability", cfg.intrusion_probability);
    s.get("stops", cfg.stops);
    s.get("max_steps", cfg.max_steps);
    auto r = s.child("rewards");
    r.get("stop", cfg.rewards.stop);
    r.get("service", cfg.rewards.service);
    r.get("intrusion", cfg.rewards.intrusion);
    r.finish();
    s.finish();
  }
  {
    auto s = top.child("observation_model");
    std::string source = "synthetic";
    s.get("source", source);
    auto& obs = cfg.observation;
    if (source == "synthetic") obs.kind = ObservationSource::Kind::Synthetic;
    else if (source == "traces") obs.kind = ObservationSource::Kind::Traces;
    else if (source == "model") obs.kind = ObservationSource::Kind::Model;
    else throw ConfigError(s.field("source"), "expected synthetic, traces or model");

    Bounds bounds{};
    parse_bounds(s.child("bounds"), bounds);
    std::string order = to_string(cfg.tp2_order);
    s.get("tp2_order", order);
    try {
      cfg.tp2_order = parse_order(order);
    } catch (const std::invalid_argument&) {
      throw ConfigError(s.field("tp2_order"), "expected lexicographic or total_count");
    }

    if (obs.kind == ObservationSource::Kind::Synthetic) {
      obs.synthetic.bounds = bounds;
      s.get("epsilon", obs.synthetic.epsilon);
      obs.synthetic.families = default_scenario().observation.synthetic.families;
      for (int st = 0; st < 2; ++st) {
        auto fs = s.child(kStates[st]);
        for (int d = 0; d < 3; ++d)
          if (fs.has(kDims[d])) obs.synthetic.families[st][d] = parse_family(fs.child(kDims[d]));
        fs.finish();
      }
    } else {
      obs.bounds = bounds;
      std::string path;
      s.get("path", path);
      if (!path.empty()) obs.path = resolve(base_dir, path);
      s.get("epsilon", obs.epsilon);
      std::string variant = to_string(obs.variant);
      s.get("variant", variant);
      try {
        obs.variant = parse_variant(variant);
      } catch (const std::invalid_argument&) {
        throw ConfigError(s.field("variant"), "expected factorized or joint");
      }
    }
    s.finish();
  }
  {
    auto s = top.child("trainer");
    auto& t = cfg.trainer;
    s.get("a", t.a);
    s.get("c", t.c);
    s.get("lambda", t.lambda);
    s.get("A", t.A);
    s.get("epsilon", t.epsilon);
    s.get("iterations", t.iterations);
    s.get("rollouts_per_eval", t.rollouts_per_eval);
    s.get("restarts", t.restarts);
    s.get("init_low", t.init_low);
    s.get("init_high", t.init_high);
    s.get("eval_every", t.eval_every);
    s.get("eval_episodes", t.eval_episodes);
    s.get("common_random_numbers", t.common_random_numbers);
    s.finish();
  }
  {
    auto s = top.child("evaluation");
    s.get("episodes", cfg.evaluation.episodes);
    s.get("shiryaev_threshold", cfg.evaluation.shiryaev_threshold);
    s.get("consistency_episodes", cfg.evaluation.consistency_episodes);
    s.finish();
  }
  {
    auto s = top.child("oracle");
    s.get("resolution", cfg.oracle.resolution);
    s.get("tol", cfg.oracle.tol);
    s.get("max_iters", cfg.oracle.max_iters);
    auto b = s.child("binning");
    std::string mode = to_string(cfg.oracle.binning.mode);
    b.get("mode", mode);
    try {
      cfg.oracle.binning.mode = parse_binning_mode(mode);
    } catch (const std::invalid_argument&) {
      throw ConfigError(b.field("mode"), "expected total_count or exact");
    }
    b.get("bin_width", cfg.oracle.binning.bin_width);
    b.get("max_bins", cfg.oracle.binning.max_bins);
    b.finish();
    s.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file " + path.string());
  return parse_config(in, path.parent_path());
}

void save_config(const ExperimentConfig& cfg, std::ostream& out) {
  YAML::Emitter e;
  auto bounds = [&](const Bounds& b) {
    e << YAML::Key << "bounds" << YAML::Value << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "dx_max" << YAML::Value << b.dx_max;
    e << YAML::Key << "dy_max" << YAML::Value << b.dy_max;
    e << YAML::Key << "dz_max" << YAML::Value << b.dz_max << YAML::EndMap;
  };
  e << YAML::BeginMap;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::Key << "output_dir" << YAML::Value << cfg.output_dir.string();

  e << YAML::Key << "pomdp" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "intrusion_probability" << YAML::Value << real(cfg.intrusion_probability);
  e << YAML::Key << "stops" << YAML::Value << cfg.stops;
  e << YAML::Key << "max_steps" << YAML::Value << cfg.max_steps;
  e << YAML::Key << "rewards" << YAML::Value << YAML::Flow << YAML::BeginMap;
  e << YAML::Key << "stop" << YAML::Value << real(cfg.rewards.stop);
  e << YAML::Key << "service" << YAML::Value << real(cfg.rewards.service);
  e << YAML::Key << "intrusion" << YAML::Value << real(cfg.rewards.intrusion) << YAML::EndMap;
  e << YAML::EndMap;

  const auto& obs = cfg.observation;
  e << YAML::Key << "observation_model" << YAML::Value << YAML::BeginMap;
  switch (obs.kind) {
    case ObservationSource::Kind::Synthetic: {
      e << YAML::Key << "source" << YAML::Value << "synthetic";
      bounds(obs.synthetic.bounds);
      e << YAML::Key << "epsilon" << YAML::Value << real(obs.synthetic.epsilon);
      for (int s = 0; s < 2; ++s) {
        e << YAML::Key << kStates[s] << YAML::Value << YAML::BeginMap;
        for (int d = 0; d < 3; ++d) {
          const auto& f = obs.synthetic.families[s][d];
          e << YAML::Key << kDims[d] << YAML::Value << YAML::Flow << YAML::BeginMap;
          if (f.kind == CounterFamily::Kind::TruncatedPoisson) {
            e << YAML::Key << "poisson" << YAML::Value << real(f.mean);
          } else {
            e << YAML::Key << "table" << YAML::Value << YAML::BeginSeq;
            for (const auto& [v, p] : f.table)
              e << YAML::Flow << YAML::BeginSeq << v << real(p) << YAML::EndSeq;
            e << YAML::EndSeq;
          }
          e << YAML::EndMap;
        }
        e << YAML::EndMap;
      }
      break;
    }
    case ObservationSource::Kind::Traces:
    case ObservationSource::Kind::Model:
      e << YAML::Key << "source" << YAML::Value
        << (obs.kind == ObservationSource::Kind::Traces ? "traces" : "model");
      bounds(obs.bounds);
      e << YAML::Key << "path" << YAML::Value << obs.path.string();
      e << YAML::Key << "variant" << YAML::Value << to_string(obs.variant);
      e << YAML::Key << "epsilon" << YAML::Value << real(obs.epsilon);
      break;
  }
  e << YAML::Key << "tp2_order" << YAML::Value << to_string(cfg.tp2_order);
  e << YAML::EndMap;

  const auto& t = cfg.trainer;
  e << YAML::Key << "trainer" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "a" << YAML::Value << real(t.a);
  e << YAML::Key << "c" << YAML::Value << real(t.c);
  e << YAML::Key << "lambda" << YAML::Value << real(t.lambda);
  e << YAML::Key << "A" << YAML::Value << real(t.A);
  e << YAML::Key << "epsilon" << YAML::Value << real(t.epsilon);
  e << YAML::Key << "iterations" << YAML::Value << t.iterations;
  e << YAML::Key << "rollouts_per_eval" << YAML::Value << t.rollouts_per_eval;
  e << YAML::Key << "restarts" << YAML::Value << t.restarts;
  e << YAML::Key << "init_low" << YAML::Value << real(t.init_low);
  e << YAML::Key << "init_high" << YAML::Value << real(t.init_high);
  e << YAML::Key << "eval_every" << YAML::Value << t.eval_every;
  e << YAML::Key << "eval_episodes" << YAML::Value << t.eval_episodes;
  e << YAML::Key << "common_random_numbers" << YAML::Value << t.common_random_numbers;
  e << YAML::EndMap;

  e << YAML::Key << "evaluation" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "episodes" << YAML::Value << cfg.evaluation.episodes;
  e << YAML::Key << "shiryaev_threshold" << YAML::Value << real(cfg.evaluation.shiryaev_threshold);
  e << YAML::Key << "consistency_episodes" << YAML::Value << cfg.evaluation.consistency_episodes;
  e << YAML::EndMap;

  e << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "resolution" << YAML::Value << cfg.oracle.resolution;
  e << YAML::Key << "tol" << YAML::Value << real(cfg.oracle.tol);
  e << YAML::Key << "max_iters" << YAML::Value << cfg.oracle.max_iters;
  e << YAML::Key << "binning" << YAML::Value << YAML::Flow << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << to_string(cfg.oracle.binning.mode);
  e << YAML::Key << "bin_width" << YAML::Value << cfg.oracle.binning.bin_width;
  e << YAML::Key << "max_bins" << YAML::Value << cfg.oracle.binning.max_bins << YAML::EndMap;
  e << YAML::EndMap;

  e << YAML::EndMap;
  out << e.c_str() << '\n';
}

void apply_env_overrides(ExperimentConfig& cfg) {
  if (const char* s = std::getenv("OPTSTOP_SEED"); s && *s) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(s, &pos);
      if (pos != std::string(s).size()) throw std::invalid_argument("trailing characters");
      cfg.seed = v;
    } catch (const std::exception&) {
      throw ConfigError("OPTSTOP_SEED", "expected a non-negative integer");
    }
  }
  if (const char* d = std::getenv("OPTSTOP_OUTPUT_DIR"); d && *d) cfg.output_dir = d;
}

namespace {

SyntheticSpec poisson_spec(Bounds bounds, std::array<double, 3> calm, std::array<double, 3> attack) {
  SyntheticSpec spec;
  spec.bounds = bounds;
  for (int d = 0; d < 3; ++d) {
    spec.families[0][d] = CounterFamily::poisson(calm[d]);
    spec.families[1][d] = CounterFamily::poisson(attack[d]);
  }
  return spec;
}

}  // namespace

ExperimentConfig default_scenario() {
  ExperimentConfig cfg;
  cfg.stops = 3;
  cfg.observation.kind = ObservationSource::Kind::Synthetic;
  cfg.observation.synthetic = poisson_spec({}, {0.4, 0.8, 0.2}, {0.5, 1.0, 0.25});
  cfg.tp2_order = ObservationOrder::TotalCount;
  cfg.oracle.binning = {ObservationBinning::Mode::TotalCount, 1, 100};
  cfg.trainer.rollouts_per_eval = 100;
  return cfg;
}

ExperimentConfig easy_scenario() {
  ExperimentConfig cfg;
  cfg.stops = 1;
  cfg.output_dir = "out/easy";
  cfg.observation.kind = ObservationSource::Kind::Synthetic;
  cfg.observation.synthetic = poisson_spec({}, {1.0, 2.0, 0.5}, {8.0, 16.0, 4.0});
  cfg.tp2_order = ObservationOrder::TotalCount;
  cfg.oracle.binning = {ObservationBinning::Mode::TotalCount, 1, 100};
  return cfg;
}

ExperimentConfig named_scenario(const std::string& name) {
  if (name == "default") return default_scenario();
  if (name == "easy") return easy_scenario();
  throw ConfigError("--scenario", "unknown scenario '" + name + "' (expected default or easy)");
}

ObservationModel build_observation_model(const ExperimentConfig& cfg) {
  const auto& obs = cfg.observation;
  switch (obs.kind) {
    case ObservationSource::Kind::Synthetic:
      return synthetic_model(obs.synthetic);
    case ObservationSource::Kind::Traces: {
      const auto traces = load_traces(obs.path, obs.bounds);
      return fit_empirical(traces.records, obs.variant, obs.bounds, obs.epsilon);
    }
    case ObservationSource::Kind::Model:
      return load_model(obs.path);
  }
  throw std::logic_error("unhandled observation source");
}

StoppingPomdp build_pomdp(const ExperimentConfig& cfg) {
  cfg.validate();
  auto model = std::make_shared<const ObservationModel>(build_observation_model(cfg));
  return StoppingPomdp(cfg.intrusion_probability, cfg.stops, cfg.rewards, std::move(model),
                       cfg.max_steps);
}

}  // namespace optstop
