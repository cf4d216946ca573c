#include "optstop/observation_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "optstop/errors.hpp"
#include "optstop/rng.hpp"

namespace optstop {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_pmf(const std::vector<double>& pmf, const std::string& what) {
  double sum = 0.0;
  for (double v : pmf) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument(what + ": probabilities must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw std::invalid_argument(what + ": probabilities sum to " + std::to_string(sum));
}

void floor_and_normalize(std::vector<double>& pmf, double epsilon) {
  if (epsilon <= 0.0) return;
  double sum = 0.0;
  for (double& v : pmf) {
    v = std::max(v, epsilon);
    sum += v;
  }
  for (double& v : pmf) v /= sum;
}

std::vector<double> cumulative(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
  return cdf;
}

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

const char* dim_name(int d) { return d == 0 ? "dx" : d == 1 ? "dy" : "dz"; }

}  // namespace

std::string to_string(ModelVariant v) {
  return v == ModelVariant::Factorized ? "factorized" : "joint";
}

ModelVariant parse_variant(const std::string& s) {
  if (s == "factorized") return ModelVariant::Factorized;
  if (s == "joint") return ModelVariant::Joint;
  throw std::invalid_argument("unknown model variant '" + s + "' (expected factorized or joint)");
}

ObservationModel ObservationModel::factorized(Bounds bounds, std::array<Marginals, 2> pmfs,
                                              double epsilon) {
  ObservationModel m;
  m.variant_ = ModelVariant::Factorized;
  m.bounds_ = bounds;
  m.epsilon_ = epsilon;
  for (int s = 0; s < 2; ++s) {
    for (int d = 0; d < 3; ++d) {
      const auto& pmf = pmfs[s][d];
      const std::string what = to_string(State(s)) + "." + dim_name(d);
      if (pmf.size() != std::size_t(bounds.max(d)) + 1)
        throw std::invalid_argument(what + ": PMF length does not match the counter bound");
      check_pmf(pmf, what);
    }
  }
  m.marginals_ = std::move(pmfs);
  m.build_samplers();
  return m;
}

ObservationModel ObservationModel::joint(Bounds bounds, std::array<Table, 2> cells,
                                         std::array<double, 2> background, double epsilon) {
  ObservationModel m;
  m.variant_ = ModelVariant::Joint;
  m.bounds_ = bounds;
  m.epsilon_ = epsilon;
  const std::uint64_t n = bounds.cells();
  for (int s = 0; s < 2; ++s) {
    const std::string what = to_string(State(s));
    if (!(background[s] >= 0.0)) throw std::invalid_argument(what + ": negative background");
    double sum = 0.0;
    for (auto [idx, p] : cells[s]) {
      if (idx >= n) throw std::invalid_argument(what + ": cell outside the bounds");
      if (!(p >= 0.0) || !std::isfinite(p))
        throw std::invalid_argument(what + ": probabilities must be finite and non-negative");
      sum += p;
    }
    sum += background[s] * double(n - cells[s].size());
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw std::invalid_argument(what + ": probabilities sum to " + std::to_string(sum));
  }
  m.cells_ = std::move(cells);
  m.background_ = background;
  m.build_samplers();
  return m;
}

void ObservationModel::build_samplers() {
  if (variant_ == ModelVariant::Factorized) {
    for (int s = 0; s < 2; ++s)
      for (int d = 0; d < 3; ++d) cdfs_[s][d] = cumulative(marginals_[s][d]);
    return;
  }
  const std::uint64_t n = bounds_.cells();
  for (int s = 0; s < 2; ++s) {
    cell_keys_[s].clear();
    std::vector<double> pmf;
    for (auto [idx, p] : cells_[s]) {
      cell_keys_[s].push_back(idx);
      pmf.push_back(p);
    }
    pmf.push_back(background_[s] * double(n - cells_[s].size()));
    cell_cdf_[s] = cumulative(pmf);
  }
}

std::uint64_t ObservationModel::cell_index(const Counts& c) const noexcept {
  return (std::uint64_t(c.dx) * std::uint64_t(bounds_.dy_max + 1) + std::uint64_t(c.dy)) *
             std::uint64_t(bounds_.dz_max + 1) +
         std::uint64_t(c.dz);
}

Counts ObservationModel::cell_counts(std::uint64_t index) const noexcept {
  const std::uint64_t nz = bounds_.dz_max + 1, ny = bounds_.dy_max + 1;
  Counts c;
  c.dz = int(index % nz);
  index /= nz;
  c.dy = int(index % ny);
  c.dx = int(index / ny);
  return c;
}

double ObservationModel::likelihood(State s, const Counts& c) const {
  if (s == State::Terminal)
    throw std::invalid_argument("likelihood is undefined for the terminal state");
  if (!bounds_.contains(c)) throw std::out_of_range("observation counters outside the bounds");
  const int si = state_index(s);
  if (variant_ == ModelVariant::Factorized) {
    const auto& m = marginals_[si];
    return m[0][c.dx] * m[1][c.dy] * m[2][c.dz];
  }
  auto it = cells_[si].find(cell_index(c));
  return it == cells_[si].end() ? background_[si] : it->second;
}

Counts ObservationModel::sample(State s, Rng& rng) const {
  if (s == State::Terminal) throw std::invalid_argument("cannot sample counters in terminal state");
  const int si = state_index(s);
  if (variant_ == ModelVariant::Factorized) {
    const auto& c = cdfs_[si];
    Counts out;
    out.dx = int(draw(c[0], rng));
    out.dy = int(draw(c[1], rng));
    out.dz = int(draw(c[2], rng));
    return out;
  }
  const auto k = draw(cell_cdf_[si], rng);
  if (k < cell_keys_[si].size()) return cell_counts(cell_keys_[si][k]);
  // Background bucket: uniform over the unlisted cells by rejection.
  const std::uint64_t n = bounds_.cells();
  const auto& keys = cell_keys_[si];
  for (;;) {
    const auto idx = std::min<std::uint64_t>(n - 1, std::uint64_t(uniform01(rng) * double(n)));
    if (!std::binary_search(keys.begin(), keys.end(), idx)) return cell_counts(idx);
  }
}

std::vector<double> ObservationModel::marginal(State s, int dim) const {
  const int si = state_index(s);
  if (variant_ == ModelVariant::Factorized) return marginals_[si][dim];
  const int size = bounds_.max(dim) + 1;
  const double per_value = double(bounds_.cells() / std::uint64_t(size));
  std::vector<double> out(size, 0.0);
  std::vector<std::uint64_t> listed(size, 0);
  for (auto [idx, p] : cells_[si]) {
    const Counts c = cell_counts(idx);
    const int v = dim == 0 ? c.dx : dim == 1 ? c.dy : c.dz;
    out[v] += p;
    ++listed[v];
  }
  for (int v = 0; v < size; ++v) out[v] += background_[si] * (per_value - double(listed[v]));
  return out;
}

std::vector<double> ObservationModel::total_count_pmf(State s) const {
  const int si = state_index(s);
  if (variant_ == ModelVariant::Factorized) {
    const auto& m = marginals_[si];
    return convolve(convolve(m[0], m[1]), m[2]);
  }
  std::vector<double> ones_x(bounds_.dx_max + 1, 1.0), ones_y(bounds_.dy_max + 1, 1.0),
      ones_z(bounds_.dz_max + 1, 1.0);
  const auto cells_per_total = convolve(convolve(ones_x, ones_y), ones_z);
  std::vector<double> out(cells_per_total.size(), 0.0);
  std::vector<double> listed(cells_per_total.size(), 0.0);
  for (auto [idx, p] : cells_[si]) {
    const int t = cell_counts(idx).total();
    out[t] += p;
    listed[t] += 1.0;
  }
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t] += background_[si] * (cells_per_total[t] - listed[t]);
  return out;
}

const std::array<ObservationModel::Marginals, 2>& ObservationModel::factorized_pmfs() const {
  if (variant_ != ModelVariant::Factorized) throw std::logic_error("model is not factorized");
  return marginals_;
}

const std::array<ObservationModel::Table, 2>& ObservationModel::joint_cells() const {
  if (variant_ != ModelVariant::Joint) throw std::logic_error("model is not joint");
  return cells_;
}

const std::array<double, 2>& ObservationModel::joint_background() const {
  if (variant_ != ModelVariant::Joint) throw std::logic_error("model is not joint");
  return background_;
}

bool operator==(const ObservationModel& a, const ObservationModel& b) {
  return a.variant_ == b.variant_ && a.bounds_ == b.bounds_ && a.epsilon_ == b.epsilon_ &&
         a.marginals_ == b.marginals_ && a.cells_ == b.cells_ && a.background_ == b.background_;
}

double obs_likelihood(const ObservationModel& model, State s, const Observation& o) {
  if (o.terminal) throw std::invalid_argument("terminal observation has no counter likelihood");
  return model.likelihood(s, o.counts);
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_counter(std::string_view field, const char* name, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw SchemaError(std::string("non-integer ") + name + " '" + std::string(field) + "'", line);
  if (v < 0) throw SchemaError(std::string("negative ") + name, line);
  if (v > 1'000'000'000) throw SchemaError(std::string(name) + " out of range", line);
  return int(v);
}

}  // namespace

TraceSet parse_traces(std::istream& in, const Bounds& bounds) {
  TraceSet out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (lineno == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF")
      view.remove_prefix(3);
    if (view.empty()) continue;
    auto fields = split(view);
    if (!header_seen) {
      if (fields.size() != 4 || fields[0] != "state" || fields[1] != "dx" || fields[2] != "dy" ||
          fields[3] != "dz")
        throw SchemaError("expected header 'state,dx,dy,dz'", lineno);
      header_seen = true;
      continue;
    }
    if (fields.size() != 4)
      throw SchemaError("expected 4 columns, found " + std::to_string(fields.size()), lineno);
    TraceRecord r;
    if (fields[0] == "0")
      r.state = State::NoIntrusion;
    else if (fields[0] == "1")
      r.state = State::Intrusion;
    else
      throw SchemaError("state must be 0 or 1, found '" + std::string(fields[0]) + "'", lineno);
    int values[3] = {parse_counter(fields[1], "dx", lineno), parse_counter(fields[2], "dy", lineno),
                     parse_counter(fields[3], "dz", lineno)};
    for (int d = 0; d < 3; ++d) {
      if (values[d] > bounds.max(d)) {
        values[d] = bounds.max(d);
        ++out.clipped;
      }
    }
    r.counts = {values[0], values[1], values[2]};
    out.records.push_back(r);
  }
  if (!header_seen) throw SchemaError("empty trace file: missing header 'state,dx,dy,dz'", 0);
  return out;
}

TraceSet load_traces(const std::filesystem::path& path, const Bounds& bounds) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path.string());
  return parse_traces(in, bounds);
}

void write_traces(std::ostream& out, const std::vector<TraceRecord>& records) {
  out << "state,dx,dy,dz\n";
  for (const auto& r : records)
    out << state_index(r.state) << ',' << r.counts.dx << ',' << r.counts.dy << ',' << r.counts.dz
        << '\n';
}

ObservationModel fit_empirical(const std::vector<TraceRecord>& records, ModelVariant variant,
                               const Bounds& bounds, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("smoothing epsilon must be >= 0");
  std::array<std::size_t, 2> n{0, 0};
  for (const auto& r : records) {
    if (r.state == State::Terminal) throw std::invalid_argument("trace record in terminal state");
    if (!bounds.contains(r.counts)) throw std::out_of_range("trace record outside the bounds");
    ++n[state_index(r.state)];
  }
  for (int s = 0; s < 2; ++s)
    if (n[s] == 0) throw EmptyStateError("no trace records for state " + to_string(State(s)));

  if (variant == ModelVariant::Factorized) {
    std::array<ObservationModel::Marginals, 2> pmfs;
    for (int s = 0; s < 2; ++s)
      for (int d = 0; d < 3; ++d) pmfs[s][d].assign(bounds.max(d) + 1, 0.0);
    std::array<std::array<std::vector<std::size_t>, 3>, 2> counts;
    for (int s = 0; s < 2; ++s)
      for (int d = 0; d < 3; ++d) counts[s][d].assign(bounds.max(d) + 1, 0);
    for (const auto& r : records) {
      auto& c = counts[state_index(r.state)];
      ++c[0][r.counts.dx];
      ++c[1][r.counts.dy];
      ++c[2][r.counts.dz];
    }
    for (int s = 0; s < 2; ++s)
      for (int d = 0; d < 3; ++d) {
        for (std::size_t v = 0; v < counts[s][d].size(); ++v)
          pmfs[s][d][v] = double(counts[s][d][v]) / double(n[s]);
        floor_and_normalize(pmfs[s][d], epsilon);
      }
    return ObservationModel::factorized(bounds, std::move(pmfs), epsilon);
  }

  std::array<ObservationModel::Table, 2> cells;
  std::array<std::map<std::uint64_t, std::size_t>, 2> counts;
  auto index = [&](const Counts& c) {
    return (std::uint64_t(c.dx) * std::uint64_t(bounds.dy_max + 1) + std::uint64_t(c.dy)) *
               std::uint64_t(bounds.dz_max + 1) +
           std::uint64_t(c.dz);
  };
  for (const auto& r : records) ++counts[state_index(r.state)][index(r.counts)];
  std::array<double, 2> background{0.0, 0.0};
  const double total_cells = double(bounds.cells());
  for (int s = 0; s < 2; ++s) {
    double z = 0.0;
    for (auto [idx, c] : counts[s]) {
      const double q = std::max(double(c) / double(n[s]), epsilon);
      cells[s][idx] = q;
      z += q;
    }
    if (epsilon > 0.0) {
      z += epsilon * (total_cells - double(counts[s].size()));
      for (auto& [idx, q] : cells[s]) q /= z;
      background[s] = epsilon / z;
    }
  }
  return ObservationModel::joint(bounds, std::move(cells), background, epsilon);
}

// ---------------------------------------------------------------------------
// Synthetic
// ---------------------------------------------------------------------------

std::vector<double> truncated_poisson(double mean, int bound) {
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw std::invalid_argument("truncated Poisson mean must be positive and finite");
  if (bound < 0) throw std::invalid_argument("truncation bound must be >= 0");
  std::vector<double> logp(bound + 1);
  const double log_mean = std::log(mean);
  for (int k = 0; k <= bound; ++k) logp[k] = k * log_mean - mean - std::lgamma(k + 1.0);
  const double mx = *std::max_element(logp.begin(), logp.end());
  double sum = 0.0;
  std::vector<double> pmf(bound + 1);
  for (int k = 0; k <= bound; ++k) {
    pmf[k] = std::exp(logp[k] - mx);
    sum += pmf[k];
  }
  for (double& v : pmf) v /= sum;
  return pmf;
}

ObservationModel synthetic_model(const SyntheticSpec& spec) {
  std::array<ObservationModel::Marginals, 2> pmfs;
  for (int s = 0; s < 2; ++s) {
    for (int d = 0; d < 3; ++d) {
      const auto& fam = spec.families[s][d];
      const int bound = spec.bounds.max(d);
      const std::string what = to_string(State(s)) + "." + dim_name(d);
      if (fam.kind == CounterFamily::Kind::TruncatedPoisson) {
        if (!(fam.mean > 0.0) || !std::isfinite(fam.mean))
          throw std::invalid_argument(what + ": Poisson mean must be > 0");
        pmfs[s][d] = truncated_poisson(fam.mean, bound);
      } else {
        std::vector<double> pmf(bound + 1, 0.0);
        double sum = 0.0;
        for (auto [v, p] : fam.table) {
          if (v < 0 || v > bound) throw std::invalid_argument(what + ": table value out of bounds");
          if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument(what + ": table probabilities must be non-negative");
          pmf[v] += p;
          sum += p;
        }
        if (!(sum > 0.0)) throw std::invalid_argument(what + ": table has no probability mass");
        if (std::abs(sum - 1.0) > kSumTolerance)
          for (double& p : pmf) p /= sum;
        pmfs[s][d] = std::move(pmf);
      }
      floor_and_normalize(pmfs[s][d], spec.epsilon);
    }
  }
  return ObservationModel::factorized(spec.bounds, std::move(pmfs), spec.epsilon);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void save_model(const ObservationModel& model, std::ostream& out) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "variant" << YAML::Value << to_string(model.variant());
  const auto& b = model.bounds();
  e << YAML::Key << "bounds" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key
    << "dx_max" << YAML::Value << b.dx_max << YAML::Key << "dy_max" << YAML::Value << b.dy_max
    << YAML::Key << "dz_max" << YAML::Value << b.dz_max << YAML::EndMap;
  e << YAML::Key << "epsilon" << YAML::Value << model.epsilon();
  e << YAML::Key << "states" << YAML::Value << YAML::BeginMap;
  for (int s = 0; s < 2; ++s) {
    e << YAML::Key << to_string(State(s)) << YAML::Value << YAML::BeginMap;
    if (model.variant() == ModelVariant::Factorized) {
      for (int d = 0; d < 3; ++d) {
        e << YAML::Key << dim_name(d) << YAML::Value << YAML::BeginSeq;
        const auto& pmf = model.factorized_pmfs()[s][d];
        for (std::size_t v = 0; v < pmf.size(); ++v)
          if (pmf[v] != 0.0) e << YAML::Flow << YAML::BeginSeq << v << pmf[v] << YAML::EndSeq;
        e << YAML::EndSeq;
      }
    } else {
      e << YAML::Key << "background" << YAML::Value << model.joint_background()[s];
      e << YAML::Key << "cells" << YAML::Value << YAML::BeginSeq;
      for (auto [idx, p] : model.joint_cells()[s]) {
        const Counts c = model.cell_counts(idx);
        e << YAML::Flow << YAML::BeginSeq << c.dx << c.dy << c.dz << p << YAML::EndSeq;
      }
      e << YAML::EndSeq;
    }
    e << YAML::EndMap;
  }
  e << YAML::EndMap << YAML::EndMap;
  out << e.c_str() << '\n';
}

void save_model(const ObservationModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  save_model(model, out);
}

namespace {

template <class T>
T required(const YAML::Node& node, const std::string& path) {
  if (!node) throw SchemaError("missing field '" + path + "'");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw SchemaError("field '" + path + "' has the wrong type", node.Mark().line + 1);
  }
}

}  // namespace

ObservationModel load_model(std::istream& in) {
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& ex) {
    throw SchemaError(std::string("model file is not valid YAML: ") + ex.what());
  }
  if (!root.IsMap()) throw SchemaError("model file must be a mapping");
  const auto variant = parse_variant(required<std::string>(root["variant"], "variant"));
  Bounds b;
  b.dx_max = required<int>(root["bounds"]["dx_max"], "bounds.dx_max");
  b.dy_max = required<int>(root["bounds"]["dy_max"], "bounds.dy_max");
  b.dz_max = required<int>(root["bounds"]["dz_max"], "bounds.dz_max");
  if (b.dx_max < 0 || b.dy_max < 0 || b.dz_max < 0) throw SchemaError("bounds must be >= 0");
  const double epsilon = required<double>(root["epsilon"], "epsilon");
  const auto states = root["states"];
  try {
    if (variant == ModelVariant::Factorized) {
      std::array<ObservationModel::Marginals, 2> pmfs;
      for (int s = 0; s < 2; ++s) {
        const std::string sname = to_string(State(s));
        for (int d = 0; d < 3; ++d) {
          const std::string path = "states." + sname + "." + dim_name(d);
          const auto seq = states[sname][dim_name(d)];
          if (!seq || !seq.IsSequence()) throw SchemaError("missing PMF table '" + path + "'");
          auto& pmf = pmfs[s][d];
          pmf.assign(b.max(d) + 1, 0.0);
          for (const auto& entry : seq) {
            if (!entry.IsSequence() || entry.size() != 2)
              throw SchemaError(path + ": entries must be [value, probability]",
                                entry.Mark().line + 1);
            const int v = required<int>(entry[0], path);
            if (v < 0 || v > b.max(d)) throw SchemaError(path + ": value out of bounds");
            pmf[v] = required<double>(entry[1], path);
          }
        }
      }
      return ObservationModel::factorized(b, std::move(pmfs), epsilon);
    }
    std::array<ObservationModel::Table, 2> cells;
    std::array<double, 2> background{};
    const ObservationModel indexer = ObservationModel::joint(
        b, {ObservationModel::Table{}, ObservationModel::Table{}},
        {1.0 / double(b.cells()), 1.0 / double(b.cells())});
    for (int s = 0; s < 2; ++s) {
      const std::string sname = to_string(State(s));
      const std::string path = "states." + sname;
      background[s] = required<double>(states[sname]["background"], path + ".background");
      const auto seq = states[sname]["cells"];
      if (!seq || !seq.IsSequence()) throw SchemaError("missing cell table '" + path + ".cells'");
      for (const auto& entry : seq) {
        if (!entry.IsSequence() || entry.size() != 4)
          throw SchemaError(path + ".cells: entries must be [dx, dy, dz, probability]",
                            entry.Mark().line + 1);
        Counts c{required<int>(entry[0], path), required<int>(entry[1], path),
                 required<int>(entry[2], path)};
        if (!b.contains(c)) throw SchemaError(path + ".cells: cell out of bounds");
        cells[s][indexer.cell_index(c)] = required<double>(entry[3], path);
      }
    }
    return ObservationModel::joint(b, std::move(cells), background, epsilon);
  } catch (const std::invalid_argument& ex) {
    throw SchemaError(std::string("invalid model: ") + ex.what());
  }
}

ObservationModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace optstop
