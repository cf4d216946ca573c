#include "optstop/tp2.hpp"

#include <stdexcept>
#include <vector>

namespace optstop {

Matrix3 transition_matrix(double p, bool final_stop) {
  if (final_stop) return Matrix3{{{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}}};
  return Matrix3{{{1.0 - p, p, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
}

Matrix3 second_order_minors(const Matrix3& m) {
  Matrix3 out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      int rows[2], cols[2];
      for (int r = 0, k = 0; r < 3; ++r)
        if (r != i) rows[k++] = r;
      for (int c = 0, k = 0; c < 3; ++c)
        if (c != j) cols[k++] = c;
      out[i][j] = m[rows[0]][cols[0]] * m[rows[1]][cols[1]] -
                  m[rows[0]][cols[1]] * m[rows[1]][cols[0]];
    }
  }
  return out;
}

namespace {

MinorReport report_for(const Matrix3& m) {
  MinorReport r;
  r.matrix = m;
  r.minors = second_order_minors(m);
  r.tp2 = true;
  for (const auto& row : r.minors)
    for (double v : row)
      if (v < 0.0) r.tp2 = false;
  return r;
}

}  // namespace

TransitionTp2Report check_tp2_transitions(const StoppingPomdp& pomdp) {
  TransitionTp2Report out;
  out.continue_matrix = report_for(transition_matrix(pomdp.intrusion_probability(), false));
  out.final_stop_matrix = report_for(transition_matrix(pomdp.intrusion_probability(), true));
  out.tp2 = out.continue_matrix.tp2 && out.final_stop_matrix.tp2;
  return out;
}

Tp2Verdict check_tp2_rows(std::span<const double> row0, std::span<const double> row1) {
  if (row0.size() != row1.size()) throw std::invalid_argument("TP2 rows differ in length");
  Tp2Verdict v;
  std::optional<std::size_t> prev;
  for (std::size_t k = 0; k < row0.size(); ++k) {
    if (row0[k] < 0.0 || row1[k] < 0.0) throw std::invalid_argument("TP2 rows must be non-negative");
    if (row0[k] == 0.0 && row1[k] == 0.0) continue;
    if (prev) {
      const std::size_t j = *prev;
      const double minor = row0[j] * row1[k] - row0[k] * row1[j];
      if (minor < 0.0) {
        v.tp2 = false;
        v.violation = std::make_pair(j, k);
        v.violating_minor = minor;
        return v;
      }
    }
    prev = k;
  }
  return v;
}

std::string to_string(ObservationOrder o) {
  return o == ObservationOrder::Lexicographic ? "lexicographic" : "total_count";
}

ObservationOrder parse_order(const std::string& s) {
  if (s == "lexicographic") return ObservationOrder::Lexicographic;
  if (s == "total_count") return ObservationOrder::TotalCount;
  throw std::invalid_argument("unknown observation order '" + s + "'");
}

ObservationTp2Report check_tp2_observations(const ObservationModel& model, ObservationOrder order) {
  ObservationTp2Report out;
  out.order = order;
  std::vector<double> r0, r1;
  if (order == ObservationOrder::TotalCount) {
    r0 = model.total_count_pmf(State::NoIntrusion);
    r1 = model.total_count_pmf(State::Intrusion);
  } else {
    const auto n = model.bounds().cells();
    r0.resize(n);
    r1.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const Counts c = model.cell_counts(i);
      r0[i] = model.likelihood(State::NoIntrusion, c);
      r1[i] = model.likelihood(State::Intrusion, c);
    }
  }
  out.columns = r0.size();
  out.verdict = check_tp2_rows(r0, r1);
  if (out.verdict.violation) {
    auto [j, k] = *out.verdict.violation;
    if (order == ObservationOrder::TotalCount) {
      out.violation = "total " + std::to_string(j) + " vs total " + std::to_string(k);
    } else {
      auto a = model.cell_counts(j), b = model.cell_counts(k);
      out.violation = "(" + std::to_string(a.dx) + "," + std::to_string(a.dy) + "," +
                      std::to_string(a.dz) + ") vs (" + std::to_string(b.dx) + "," +
                      std::to_string(b.dy) + "," + std::to_string(b.dz) + ")";
    }
  }
  return out;
}

}  // namespace optstop
