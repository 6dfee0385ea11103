#pragma once

// Turning per-node neighborhood estimates into undirected graphs, and scoring
// estimated graph sequences against ground truth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tvnet/error.hpp"
#include "tvnet/ising.hpp"

namespace tvnet {

enum class Symmetrization { min, max };

inline std::string symmetrization_name(Symmetrization s) { return s == Symmetrization::min ? "min" : "max"; }

inline Symmetrization parse_symmetrization(const std::string& s) {
  if (s == "min") return Symmetrization::min;
  if (s == "max") return Symmetrization::max;
  throw InvalidArgument("unknown symmetrization '" + s + "'");
}

// Combines the two directed estimates theta_uv (from u's regression) and
// theta_vu. min keeps the smaller magnitude, max the larger; ties resolve to
// theta_vu in both modes.
inline double symmetrize(double theta_uv, double theta_vu, Symmetrization mode) noexcept {
  if (mode == Symmetrization::min) return std::fabs(theta_uv) < std::fabs(theta_vu) ? theta_uv : theta_vu;
  return std::fabs(theta_uv) > std::fabs(theta_vu) ? theta_uv : theta_vu;
}

struct Edge {
  NodeId u = 0;  // u < v
  NodeId v = 0;
  double theta = 0.0;

  friend bool operator==(const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v && a.theta == b.theta; }
};

// One undirected edge set per time stamp. Edge lists are kept sorted by (u, v).
class GraphSequence {
 public:
  GraphSequence() = default;
  GraphSequence(std::size_t p, std::vector<double> times) : p_(p), times_(std::move(times)), edges_(times_.size()) {}

  std::size_t dimension() const noexcept { return p_; }
  std::size_t n_times() const noexcept { return times_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<Edge>& edges(std::size_t t) const { return edges_.at(t); }

  void add_edge(std::size_t t, NodeId u, NodeId v, double theta = 1.0) {
    if (u == v || u >= p_ || v >= p_) throw InvalidArgument("invalid edge endpoints");
    if (u > v) std::swap(u, v);
    auto& list = edges_.at(t);
    const auto pos = std::lower_bound(list.begin(), list.end(), Edge{u, v, 0.0}, less);
    if (pos != list.end() && pos->u == u && pos->v == v) {
      pos->theta = theta;
      return;
    }
    list.insert(pos, Edge{u, v, theta});
  }

  bool has_edge(std::size_t t, NodeId u, NodeId v) const {
    if (u > v) std::swap(u, v);
    const auto& list = edges_.at(t);
    return std::binary_search(list.begin(), list.end(), Edge{u, v, 0.0}, less);
  }

  std::size_t total_edges() const noexcept {
    std::size_t n = 0;
    for (const auto& e : edges_) n += e.size();
    return n;
  }

  friend bool operator==(const GraphSequence&, const GraphSequence&) = default;

 private:
  static bool less(const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; }

  std::size_t p_ = 0;
  std::vector<double> times_;
  std::vector<std::vector<Edge>> edges_;
};

// Symmetrizes every pair at every time point and keeps edges whose combined
// estimate exceeds zero_eps in magnitude.
inline GraphSequence assemble_graphs(const std::vector<NodeParamPath>& paths, const std::vector<double>& times,
                                     Symmetrization mode, double zero_eps = 1e-8) {
  const std::size_t p = paths.size();
  if (p < 2) throw InvalidArgument("need paths for at least two nodes");
  for (std::size_t u = 0; u < p; ++u) {
    if (paths[u].width() + 1 != p || paths[u].n_times() != times.size())
      throw InvalidArgument("missing or malformed path for node " + std::to_string(u));
    if (paths[u].node() != u) throw InvalidArgument("path list is not ordered by node id");
  }
  GraphSequence g(p, times);
  for (std::size_t t = 0; t < times.size(); ++t)
    for (NodeId u = 0; u < p; ++u)
      for (NodeId v = u + 1; v < p; ++v) {
        const double c = symmetrize(paths[u].at(t, slot_of(u, v)), paths[v].at(t, slot_of(v, u)), mode);
        if (std::fabs(c) > zero_eps) g.add_edge(t, u, v, c);
      }
  return g;
}

// Ground-truth graphs: the support of each parameter vector.
inline GraphSequence support_graphs(const std::vector<ThetaFull>& thetas, const std::vector<double>& times) {
  if (thetas.size() != times.size()) throw InvalidArgument("one parameter vector per time point required");
  if (thetas.empty()) throw InvalidArgument("empty parameter sequence");
  const std::size_t p = thetas.front().dimension();
  GraphSequence g(p, times);
  for (std::size_t t = 0; t < thetas.size(); ++t)
    for (NodeId u = 0; u < p; ++u)
      for (NodeId v = u + 1; v < p; ++v)
        if (thetas[t](u, v) != 0.0) g.add_edge(t, u, v, thetas[t](u, v));
  return g;
}

struct MetricsResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double f1_score(double precision, double recall) noexcept {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

// Time-averaged precision and recall; a time point with an empty
// denominator scores 1 if both edge sets are empty and 0 otherwise. F1 is
// computed from the averaged precision and recall.
inline MetricsResult evaluate(const GraphSequence& estimated, const GraphSequence& truth) {
  if (estimated.dimension() != truth.dimension()) throw InvalidArgument("graph sequences differ in dimension");
  if (estimated.n_times() != truth.n_times() || estimated.n_times() == 0)
    throw InvalidArgument("graph sequences are defined on different time grids");
  for (std::size_t t = 0; t < truth.n_times(); ++t)
    if (std::fabs(estimated.times()[t] - truth.times()[t]) > 1e-12)
      throw InvalidArgument("graph sequences are defined on different time grids");

  double precision = 0.0, recall = 0.0;
  for (std::size_t t = 0; t < truth.n_times(); ++t) {
    const auto& est = estimated.edges(t);
    std::size_t hits = 0;
    for (const Edge& e : est) hits += truth.has_edge(t, e.u, e.v);
    const std::size_t n_est = est.size(), n_true = truth.edges(t).size();
    const bool both_empty = n_est == 0 && n_true == 0;
    precision += n_est > 0 ? static_cast<double>(hits) / static_cast<double>(n_est) : (both_empty ? 1.0 : 0.0);
    recall += n_true > 0 ? static_cast<double>(hits) / static_cast<double>(n_true) : (both_empty ? 1.0 : 0.0);
  }
  const double n = static_cast<double>(truth.n_times());
  MetricsResult m{precision / n, recall / n, 0.0};
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

}  // namespace tvnet
