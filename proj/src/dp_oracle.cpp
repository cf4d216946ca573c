#include "optstop/dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "optstop/simulator.hpp"

namespace optstop {

void ObservationBinning::validate() const {
  if (bin_width < 1) throw std::invalid_argument("oracle.binning.bin_width must be at least 1");
  if (max_bins < 1) throw std::invalid_argument("oracle.binning.max_bins must be at least 1");
}

std::string to_string(ObservationBinning::Mode m) {
  return m == ObservationBinning::Mode::Exact ? "exact" : "total_count";
}

ObservationBinning::Mode parse_binning_mode(const std::string& s) {
  if (s == "exact") return ObservationBinning::Mode::Exact;
  if (s == "total_count") return ObservationBinning::Mode::TotalCount;
  throw std::invalid_argument("unknown binning mode '" + s + "'");
}

void OracleConfig::validate() const {
  if (resolution < 3) throw std::invalid_argument("oracle.resolution must be at least 3");
  if (!(tol > 0.0)) throw std::invalid_argument("oracle.tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("oracle.max_iters must be at least 1");
  binning.validate();
}

ObservationAlphabet build_alphabet(const ObservationModel& model, const ObservationBinning& binning) {
  binning.validate();
  ObservationAlphabet out;
  if (binning.mode == ObservationBinning::Mode::Exact) {
    const auto n = model.bounds().cells();
    for (std::uint64_t k = 0; k < n; ++k) {
      const Counts c = model.cell_counts(k);
      const double z0 = model.likelihood(State::NoIntrusion, c);
      const double z1 = model.likelihood(State::Intrusion, c);
      if (z0 == 0.0 && z1 == 0.0) continue;
      out.z0.push_back(z0);
      out.z1.push_back(z1);
    }
    return out;
  }
  const auto t0 = model.total_count_pmf(State::NoIntrusion);
  const auto t1 = model.total_count_pmf(State::Intrusion);
  const std::size_t bins =
      std::min<std::size_t>(binning.max_bins, (t0.size() + binning.bin_width - 1) / binning.bin_width);
  out.z0.assign(bins, 0.0);
  out.z1.assign(bins, 0.0);
  for (std::size_t t = 0; t < t0.size(); ++t) {
    const std::size_t k = std::min(bins - 1, t / std::size_t(binning.bin_width));
    out.z0[k] += t0[t];
    out.z1[k] += t1[t];
  }
  std::size_t w = 0;
  for (std::size_t k = 0; k < bins; ++k) {
    if (out.z0[k] == 0.0 && out.z1[k] == 0.0) continue;
    out.z0[w] = out.z0[k];
    out.z1[w] = out.z1[k];
    ++w;
  }
  out.z0.resize(w);
  out.z1.resize(w);
  return out;
}

namespace {

// Successor distribution of one grid point: probability of each observation and
// the interpolation cell of the updated belief.
struct Successor {
  double prob;
  int cell;
  double weight;
};

struct Kernel {
  std::vector<std::size_t> offsets;  // size resolution + 1
  std::vector<Successor> entries;

  double expect(std::size_t i, const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      const auto& e = entries[k];
      s += e.prob * ((1.0 - e.weight) * v[e.cell] + e.weight * v[e.cell + 1]);
    }
    return s;
  }
};

Kernel build_kernel(const std::vector<double>& points, const ObservationAlphabet& alphabet, double p) {
  const int n = int(points.size());
  Kernel k;
  k.offsets.reserve(n + 1);
  k.offsets.push_back(0);
  for (int i = 0; i < n; ++i) {
    const double b = points[i];
    const double pred = b + (1.0 - b) * p;
    for (std::size_t o = 0; o < alphabet.size(); ++o) {
      const double num = alphabet.z1[o] * pred;
      const double prob = num + alphabet.z0[o] * (1.0 - pred);
      if (prob <= 0.0) continue;
      const double next = std::clamp(num / prob, 0.0, 1.0);
      const double x = next * double(n - 1);
      const int cell = std::min(int(x), n - 2);
      k.entries.push_back({prob, cell, x - double(cell)});
    }
    k.offsets.push_back(k.entries.size());
  }
  return k;
}

std::vector<double> make_points(int resolution) {
  std::vector<double> pts(resolution);
  for (int i = 0; i < resolution; ++i) pts[i] = double(i) / double(resolution - 1);
  pts.back() = 1.0;
  return pts;
}

}  // namespace

double BeliefGrid::value_at(int l, double b) const {
  if (l < 0 || l > stops()) throw std::out_of_range("stop count outside the grid");
  const double x = std::clamp(b, 0.0, 1.0) * double(resolution - 1);
  const int cell = std::min(int(x), resolution - 2);
  const double w = x - double(cell);
  return (1.0 - w) * values[l][cell] + w * values[l][cell + 1];
}

double BeliefGrid::max_residual() const {
  double r = 0.0;
  for (double v : residuals) r = std::max(r, v);
  return r;
}

BeliefGrid value_iteration(const StoppingPomdp& pomdp, const OracleConfig& cfg) {
  cfg.validate();
  const int L = pomdp.stops();
  const int n = cfg.resolution;
  const auto alphabet = build_alphabet(pomdp.observation_model(), cfg.binning);

  BeliefGrid g;
  g.resolution = n;
  g.points = make_points(n);
  g.values.assign(L + 1, std::vector<double>(n, 0.0));
  g.stop_values = g.values;
  g.continue_values = g.values;
  g.stop.assign(L + 1, std::vector<bool>(n, false));
  g.iterations.assign(L + 1, 0);
  g.residuals.assign(L + 1, 0.0);
  g.converged = true;

  const Kernel kernel = build_kernel(g.points, alphabet, pomdp.intrusion_probability());
  std::vector<double> stop_branch(n), service(n), next(n);
  for (int l = 1; l <= L; ++l) {
    for (int i = 0; i < n; ++i) {
      stop_branch[i] = pomdp.stop_reward(g.points[i], l) +
                       (l > 1 ? kernel.expect(i, g.values[l - 1]) : 0.0);
      service[i] = pomdp.continue_reward(g.points[i], l);
    }
    auto& v = g.values[l];
    double residual = 0.0;
    int it = 0;
    do {
      residual = 0.0;
      for (int i = 0; i < n; ++i) {
        next[i] = std::max(stop_branch[i], service[i] + kernel.expect(i, v));
        residual = std::max(residual, std::abs(next[i] - v[i]));
      }
      v.swap(next);
      ++it;
    } while (residual >= cfg.tol && it < cfg.max_iters);
    g.iterations[l] = it;
    g.residuals[l] = residual;
    if (residual >= cfg.tol) g.converged = false;

    for (int i = 0; i < n; ++i) {
      g.stop_values[l][i] = stop_branch[i];
      g.continue_values[l][i] = service[i] + kernel.expect(i, v);
      g.stop[l][i] = g.stop_values[l][i] >= g.continue_values[l][i];
    }
  }
  return g;
}

double bellman_residual(const StoppingPomdp& pomdp, const ObservationAlphabet& alphabet,
                        const BeliefGrid& grid) {
  const Kernel kernel = build_kernel(grid.points, alphabet, pomdp.intrusion_probability());
  double r = 0.0;
  for (int l = 1; l <= grid.stops(); ++l) {
    for (int i = 0; i < grid.resolution; ++i) {
      const double b = grid.points[i];
      const double s =
          pomdp.stop_reward(b, l) + (l > 1 ? kernel.expect(i, grid.values[l - 1]) : 0.0);
      const double c = pomdp.continue_reward(b, l) + kernel.expect(i, grid.values[l]);
      r = std::max(r, std::abs(grid.values[l][i] - std::max(s, c)));
    }
  }
  return r;
}

std::vector<ThresholdEstimate> extract_thresholds(const BeliefGrid& grid) {
  std::vector<ThresholdEstimate> out;
  for (int l = 1; l <= grid.stops(); ++l) {
    ThresholdEstimate t{1.0, true};
    for (int i = 0; i < grid.resolution; ++i) {
      if (grid.stop[l][i]) {
        t = {grid.points[i], false};
        break;
      }
    }
    out.push_back(t);
  }
  return out;
}

HardThreshold threshold_policy(const BeliefGrid& grid) {
  HardThreshold p;
  for (const auto& t : extract_thresholds(grid)) p.thresholds.push_back(t.alpha);
  return p;
}

namespace {

std::string at(int l, double b) {
  std::ostringstream s;
  s << "l=" << l << " b=" << b;
  return s.str();
}

}  // namespace

StructureReport verify_structure(const BeliefGrid& grid, const StoppingPomdp& pomdp,
                                 ObservationOrder order) {
  StructureReport r;
  r.thresholds = extract_thresholds(grid);
  r.order = order;
  r.resolution = grid.resolution;
  r.max_residual = grid.max_residual();
  r.converged = grid.converged;
  r.value_at_zero = grid.values[grid.stops()][0];

  for (int l = 2; l <= grid.stops() && r.nested.ok; ++l) {
    for (int i = 0; i < grid.resolution; ++i) {
      if (grid.stop[l - 1][i] && !grid.stop[l][i]) {
        r.nested = {false, at(l, grid.points[i]) + " stops with l-1 but continues with l"};
        break;
      }
    }
  }
  for (int l = 1; l <= grid.stops() && r.connected.ok; ++l) {
    bool seen = false;
    for (int i = 0; i < grid.resolution; ++i) {
      if (grid.stop[l][i]) {
        seen = true;
      } else if (seen) {
        r.connected = {false, at(l, grid.points[i]) + " continues above the stopping threshold"};
        break;
      }
    }
  }
  for (std::size_t l = 1; l < r.thresholds.size(); ++l) {
    if (r.thresholds[l].alpha > r.thresholds[l - 1].alpha) {
      std::ostringstream s;
      s << "alpha_" << l + 1 << "=" << r.thresholds[l].alpha << " exceeds alpha_" << l << "="
        << r.thresholds[l - 1].alpha;
      r.monotone = {false, s.str()};
      break;
    }
  }
  const auto tr = check_tp2_transitions(pomdp);
  if (!tr.tp2) r.tp2_transitions = {false, "negative second-order minor in a transition matrix"};
  const auto ob = check_tp2_observations(pomdp.observation_model(), order);
  if (!ob.verdict.tp2) r.tp2_observations = {false, ob.violation};
  return r;
}

void write_structure_report(std::ostream& out, const StructureReport& r) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  auto verdict = [&](const char* key, const Verdict& v) {
    e << YAML::Key << key << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "ok" << YAML::Value << v.ok;
    if (!v.ok) e << YAML::Key << "first_violation" << YAML::Value << v.first_violation;
    e << YAML::EndMap;
  };
  e << YAML::BeginMap;
  e << YAML::Key << "resolution" << YAML::Value << r.resolution;
  e << YAML::Key << "converged" << YAML::Value << r.converged;
  e << YAML::Key << "max_residual" << YAML::Value << r.max_residual;
  e << YAML::Key << "value_at_zero" << YAML::Value << r.value_at_zero;
  e << YAML::Key << "thresholds" << YAML::Value << YAML::BeginSeq;
  for (std::size_t l = 0; l < r.thresholds.size(); ++l) {
    e << YAML::BeginMap << YAML::Key << "l" << YAML::Value << int(l + 1);
    e << YAML::Key << "alpha" << YAML::Value << r.thresholds[l].alpha;
    e << YAML::Key << "empty" << YAML::Value << r.thresholds[l].empty << YAML::EndMap;
  }
  e << YAML::EndSeq;
  verdict("nested", r.nested);
  verdict("connected", r.connected);
  verdict("monotone_thresholds", r.monotone);
  verdict("tp2_transitions", r.tp2_transitions);
  verdict("tp2_observations", r.tp2_observations);
  e << YAML::Key << "observation_order" << YAML::Value << to_string(r.order);
  e << YAML::EndMap;
  out << e.c_str() << '\n';
}

void write_value_csv(std::ostream& out, const BeliefGrid& grid) {
  out << "b,l,V,action\n";
  for (int l = 1; l <= grid.stops(); ++l)
    for (int i = 0; i < grid.resolution; ++i)
      out << format_real(grid.points[i]) << ',' << l << ',' << format_real(grid.values[l][i]) << ','
          << (grid.stop[l][i] ? 1 : 0) << '\n';
}

}  // namespace optstop
