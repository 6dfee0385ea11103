#pragma once

// Synthetic benchmark: random anchor graphs under a degree cap, prototype
// couplings, smooth or piecewise-constant interpolation over the time grid,
// Gibbs-sampled observations, and the estimation/evaluation loop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tvnet/error.hpp"
#include "tvnet/graph.hpp"
#include "tvnet/ising.hpp"
#include "tvnet/parallel.hpp"
#include "tvnet/random.hpp"
#include "tvnet/selection.hpp"

namespace tvnet {

enum class Scheme { smooth, piecewise };

inline std::string scheme_name(Scheme s) { return s == Scheme::smooth ? "smooth" : "piecewise"; }

inline Scheme parse_scheme(const std::string& s) {
  if (s == "smooth") return Scheme::smooth;
  if (s == "piecewise") return Scheme::piecewise;
  throw InvalidArgument("unknown scheme '" + s + "'");
}

struct ScenarioSpec {
  std::size_t p = 20;
  std::size_t s_max = 4;  // maximum node degree
  std::size_t n = 500;
  std::size_t anchors = 6;
  std::size_t edges_per_anchor = 15;
  std::size_t churn = 10;  // edges removed, then added, between anchors
  std::size_t replicates = 10;
  Scheme scheme = Scheme::smooth;
  std::uint64_t seed = 1;
  double coupling_lo = 0.5;
  double coupling_hi = 1.0;
  GibbsConfig gibbs;
  std::size_t max_retries = 10000;

  void validate() const {
    if (p < 2 || s_max < 1 || n < 1 || anchors < 2 || edges_per_anchor < 1 || replicates < 1)
      throw InvalidArgument("scenario parameters must be positive (p >= 2, anchors >= 2)");
    if (churn > edges_per_anchor) throw InvalidArgument("churn cannot exceed the edge count");
    if (edges_per_anchor + churn > p * s_max / 2)
      throw InvalidArgument("edge and churn counts are infeasible under the degree cap");
    if (edges_per_anchor + churn > p * (p - 1) / 2) throw InvalidArgument("too many edges for p nodes");
    if (!(coupling_lo <= coupling_hi)) throw InvalidArgument("invalid coupling range");
  }
};

// Edge and churn counts proportional to p, matching 15 and 10 at p = 20, so
// that small scenarios stay feasible under the degree cap.
inline void scale_edge_counts(ScenarioSpec& spec) {
  spec.edges_per_anchor = std::max<std::size_t>(1, (15 * spec.p + 10) / 20);
  spec.churn = (10 * spec.p + 10) / 20;
}

using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

struct AnchorSequence {
  std::size_t p = 0;
  std::vector<EdgeList> graphs;  // each sorted, u < v
  std::vector<ThetaFull> prototypes;
};

namespace detail {

class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(std::size_t p) : p_(p), adj_(p * p, 0), degree_(p, 0) {}
  bool has(NodeId u, NodeId v) const { return adj_[u * p_ + v] != 0; }
  std::size_t degree(NodeId u) const { return degree_[u]; }
  void add(NodeId u, NodeId v) {
    adj_[u * p_ + v] = adj_[v * p_ + u] = 1;
    ++degree_[u];
    ++degree_[v];
  }
  void remove(NodeId u, NodeId v) {
    adj_[u * p_ + v] = adj_[v * p_ + u] = 0;
    --degree_[u];
    --degree_[v];
  }

 private:
  std::size_t p_;
  std::vector<char> adj_;
  std::vector<std::size_t> degree_;
};

// Rejection-samples a node pair that is absent from `forbidden` and whose
// endpoints both have degree < cap in `degrees`.
inline std::pair<NodeId, NodeId> sample_pair(Rng& rng, std::size_t p, const AdjacencyMatrix& forbidden,
                                             const AdjacencyMatrix& degrees, std::size_t cap,
                                             std::size_t max_retries) {
  for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
    NodeId u = rng.below(p), v = rng.below(p);
    if (u == v || forbidden.has(u, v)) continue;
    if (degrees.degree(u) >= cap || degrees.degree(v) >= cap) continue;
    if (u > v) std::swap(u, v);
    return {u, v};
  }
  throw GenerationError("could not place an edge under the degree cap after " + std::to_string(max_retries) +
                        " attempts");
}

}  // namespace detail

// G^0 by sequential random insertion under the degree cap; each following
// anchor removes `churn` random edges and then adds `churn` edges that were
// not in the previous anchor, keeping the degree of the union of the two
// consecutive anchors under the cap (so interpolated graphs respect it too).
inline AnchorSequence generate_anchors(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const std::size_t p = spec.p;
  AnchorSequence out;
  out.p = p;

  detail::AdjacencyMatrix current(p);
  EdgeList edges;
  while (edges.size() < spec.edges_per_anchor) {
    const auto e = detail::sample_pair(rng, p, current, current, spec.s_max, spec.max_retries);
    current.add(e.first, e.second);
    edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  out.graphs.push_back(edges);

  for (std::size_t i = 1; i < spec.anchors; ++i) {
    detail::AdjacencyMatrix union_graph = current;
    for (std::size_t r = 0; r < spec.churn; ++r) {
      const std::size_t idx = rng.below(edges.size());
      current.remove(edges[idx].first, edges[idx].second);
      edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    for (std::size_t a = 0; a < spec.churn; ++a) {
      const auto e = detail::sample_pair(rng, p, union_graph, union_graph, spec.s_max, spec.max_retries);
      union_graph.add(e.first, e.second);
      current.add(e.first, e.second);
      edges.push_back(e);
    }
    std::sort(edges.begin(), edges.end());
    out.graphs.push_back(edges);
  }

  for (const EdgeList& g : out.graphs) {
    ThetaFull theta(p);
    for (const auto& [u, v] : g) theta.set(u, v, rng.uniform(spec.coupling_lo, spec.coupling_hi));
    out.prototypes.push_back(std::move(theta));
  }
  return out;
}

// Parameters at t = j/n, j = 1..n. Time point t lies in segment
// i = ceil(S t) of S = anchors - 1 segments, at fraction f = S t - (i - 1)
// along it (half-open segments: f in (0, 1]). Smooth: (1-f) A + f B;
// piecewise: (A + B) / 2, where A, B are the segment's prototypes.
inline std::vector<ThetaFull> interpolate_parameters(const AnchorSequence& anchors, const ScenarioSpec& spec) {
  const std::size_t segments = anchors.prototypes.size() - 1;
  if (anchors.prototypes.size() < 2) throw InvalidArgument("need at least two anchors");
  const std::size_t n = spec.n;
  const std::size_t p = anchors.p;
  std::vector<ThetaFull> thetas;
  thetas.reserve(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t seg = std::max<std::size_t>(1, (segments * j + n - 1) / n);
    const double f = static_cast<double>(segments * j - (seg - 1) * n) / static_cast<double>(n);
    const ThetaFull& a = anchors.prototypes[seg - 1];
    const ThetaFull& b = anchors.prototypes[seg];
    ThetaFull theta(p);
    for (NodeId u = 0; u < p; ++u)
      for (NodeId v = u + 1; v < p; ++v) {
        const double va = a(u, v), vb = b(u, v);
        if (va == 0.0 && vb == 0.0) continue;
        theta.set(u, v, spec.scheme == Scheme::smooth ? (1.0 - f) * va + f * vb : 0.5 * (va + vb));
      }
    thetas.push_back(std::move(theta));
  }
  return thetas;
}

inline std::size_t max_degree(const ThetaFull& theta) {
  std::size_t best = 0;
  for (NodeId u = 0; u < theta.dimension(); ++u) {
    std::size_t d = 0;
    for (NodeId v = 0; v < theta.dimension(); ++v) d += u != v && theta(u, v) != 0.0;
    best = std::max(best, d);
  }
  return best;
}

// Per-run structural assertions on generated anchors and parameters.
inline void check_scenario(const AnchorSequence& anchors, const std::vector<ThetaFull>& thetas,
                           const ScenarioSpec& spec) {
  for (std::size_t i = 0; i < anchors.graphs.size(); ++i) {
    if (anchors.graphs[i].size() != spec.edges_per_anchor)
      throw GenerationError("anchor " + std::to_string(i) + " has the wrong edge count");
    if (max_degree(anchors.prototypes[i]) > spec.s_max)
      throw GenerationError("anchor " + std::to_string(i) + " violates the degree cap");
  }
  const std::size_t union_size = spec.edges_per_anchor + spec.churn;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    if (max_degree(thetas[t]) > spec.s_max) throw GenerationError("interpolated parameters violate the degree cap");
    if (thetas[t].support_size() > union_size) throw GenerationError("interpolated support too large");
  }
}

// k independent Gibbs draws per time point, each the end state of its own
// chain seeded from (seed, time index, replicate). Replicate r does not depend
// on k, so smaller k are nested subsets of larger ones.
inline Dataset generate_dataset(const std::vector<ThetaFull>& thetas, std::size_t k, std::uint64_t seed,
                                const GibbsConfig& gibbs = {}, unsigned threads = 1) {
  if (k < 1) throw InvalidArgument("replicate count must be >= 1");
  if (thetas.empty()) throw InvalidArgument("empty parameter sequence");
  const std::size_t n = thetas.size();
  std::vector<std::vector<SpinVector>> obs(n, std::vector<SpinVector>(k));
  parallel_for(n * k, threads, [&](std::size_t task) {
    const std::size_t t = task / k, r = task % k;
    obs[t][r] = gibbs_sample(thetas[t], 1, gibbs.burn_in, gibbs.thin, derive_seed(seed, {t, r})).front();
  });
  return Dataset(thetas.front().dimension(), Dataset::uniform_grid(n), std::move(obs));
}

struct Scenario {
  AnchorSequence anchors;
  std::vector<ThetaFull> thetas;
  Dataset data;  // spec.replicates draws per time point
  GraphSequence truth;
};

inline Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed, unsigned threads = 1) {
  Scenario s;
  s.anchors = generate_anchors(spec, derive_seed(seed, {1}));
  s.thetas = interpolate_parameters(s.anchors, spec);
  check_scenario(s.anchors, s.thetas, spec);
  s.data = generate_dataset(s.thetas, spec.replicates, derive_seed(seed, {2}), spec.gibbs, threads);
  s.truth = support_graphs(s.thetas, s.data.times());
  return s;
}

struct ExperimentOptions {
  std::vector<std::size_t> ks;  // empty = 1..spec.replicates
  EstimationOptions estimation;
  // The TV objective is a sum over all n * k observations, so a fixed
  // absolute sweep tolerance gets stricter as k grows. When positive, the TV
  // tolerance becomes this value times the observation count and the KKT
  // exit check is dropped. Zero keeps estimation.tv unchanged.
  double tv_tol_per_observation = 1e-7;
};

struct ExperimentRow {
  std::size_t run = 0;
  Method method = Method::smooth;
  Symmetrization symmetrization = Symmetrization::min;
  std::size_t k = 0;
  Tuning tuning;
  MetricsResult metrics;
};

struct SummaryRow {
  Method method = Method::smooth;
  Symmetrization symmetrization = Symmetrization::min;
  std::size_t k = 0;
  std::size_t runs = 0;
  MetricsResult mean;
  MetricsResult sd;
};

struct ExperimentReport {
  ScenarioSpec spec;
  std::vector<ExperimentRow> rows;
  std::vector<SummaryRow> summary;

  const SummaryRow& find(Method m, Symmetrization s, std::size_t k) const {
    for (const auto& r : summary)
      if (r.method == m && r.symmetrization == s && r.k == k) return r;
    throw InvalidArgument("no summary row for the requested cell");
  }
};

inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows) {
  std::vector<SummaryRow> out;
  for (const ExperimentRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.method == r.method && s.symmetrization == r.symmetrization && s.k == r.k;
    });
    if (it == out.end()) {
      out.push_back(SummaryRow{r.method, r.symmetrization, r.k, 0, {}, {}});
      it = out.end() - 1;
    }
    ++it->runs;
    it->mean.precision += r.metrics.precision;
    it->mean.recall += r.metrics.recall;
    it->mean.f1 += r.metrics.f1;
  }
  for (SummaryRow& s : out) {
    const double n = static_cast<double>(s.runs);
    s.mean.precision /= n;
    s.mean.recall /= n;
    s.mean.f1 /= n;
    double vp = 0.0, vr = 0.0, vf = 0.0;
    for (const ExperimentRow& r : rows) {
      if (r.method != s.method || r.symmetrization != s.symmetrization || r.k != s.k) continue;
      vp += (r.metrics.precision - s.mean.precision) * (r.metrics.precision - s.mean.precision);
      vr += (r.metrics.recall - s.mean.recall) * (r.metrics.recall - s.mean.recall);
      vf += (r.metrics.f1 - s.mean.f1) * (r.metrics.f1 - s.mean.f1);
    }
    const double denom = s.runs > 1 ? n - 1.0 : 1.0;
    s.sd = MetricsResult{std::sqrt(vp / denom), std::sqrt(vr / denom), std::sqrt(vf / denom)};
  }
  return out;
}

// For each run: generate a scenario, then for each k and method select
// tuning by grid search on the first k replicates, assemble MIN and MAX
// graphs and score them against the true supports.
inline ExperimentReport run_experiment(const ScenarioSpec& spec, const std::vector<Method>& methods,
                                       const GridSpec& grid, std::size_t runs,
                                       const ExperimentOptions& options = {}) {
  spec.validate();
  if (runs < 1) throw InvalidArgument("runs must be >= 1");
  std::vector<std::size_t> ks = options.ks;
  if (ks.empty())
    for (std::size_t k = 1; k <= spec.replicates; ++k) ks.push_back(k);
  for (std::size_t k : ks)
    if (k < 1 || k > spec.replicates) throw InvalidArgument("k outside 1..replicates");

  ExperimentReport report;
  report.spec = spec;
  for (std::size_t run = 0; run < runs; ++run) {
    const Scenario scenario = generate_scenario(spec, derive_seed(spec.seed, {run}), options.estimation.threads);
    for (std::size_t k : ks) {
      const Dataset data = scenario.data.first_replicates(k);
      EstimationOptions estimation = options.estimation;
      if (options.tv_tol_per_observation > 0.0) {
        estimation.tv.tol = options.tv_tol_per_observation * static_cast<double>(data.total_observations());
        estimation.tv.kkt_tol = std::numeric_limits<double>::infinity();
      }
      for (Method m : methods) {
        const GridSearchResult gs = grid_search(m, data, grid, estimation);
        for (Symmetrization sym : {Symmetrization::min, Symmetrization::max}) {
          const GraphSequence est = assemble_graphs(gs.paths, data.times(), sym, estimation.zero_eps);
          report.rows.push_back(ExperimentRow{run, m, sym, k, gs.selected, evaluate(est, scenario.truth)});
        }
      }
    }
  }
  report.summary = summarize(report.rows);
  return report;
}

}  // namespace tvnet
