#pragma once

// Tuning-parameter selection: block-count degrees of freedom, BIC scores for
// the smooth, TV and static estimators, the bandwidth median heuristic, and
// BIC-maximizing grid search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tvnet/design.hpp"
#include "tvnet/error.hpp"
#include "tvnet/ising.hpp"
#include "tvnet/parallel.hpp"
#include "tvnet/smooth.hpp"
#include "tvnet/tv.hpp"

namespace tvnet {

inline constexpr double kDefaultZeroEps = 1e-8;

inline int snapped_sign(double v, double zero_eps) noexcept {
  if (std::fabs(v) < zero_eps) return 0;
  return v > 0.0 ? 1 : -1;
}

// Number of maximal blocks on which a covariate keeps one nonzero sign,
// summed over covariates. The value before the first time point is taken
// as zero, so a constant nonzero path counts as one block.
inline std::size_t dim_blocks(const NodeParamPath& path, double zero_eps = kDefaultZeroEps) {
  std::size_t dim = 0;
  for (std::size_t j = 0; j < path.width(); ++j) {
    int prev = 0;
    for (std::size_t t = 0; t < path.n_times(); ++t) {
      const int s = snapped_sign(path.at(t, j), zero_eps);
      if (s != 0 && s != prev) ++dim;
      prev = s;
    }
  }
  return dim;
}

inline double bic_penalty(std::size_t n_times, std::size_t dim) {
  return 0.5 * std::log(static_cast<double>(n_times)) * static_cast<double>(dim);
}

// sum over all observations of gamma(theta_u^t; x) - (log n / 2) Dim
inline double bic_tv(const NodeParamPath& path, const Dataset& data, double zero_eps = kDefaultZeroEps) {
  if (path.n_times() != data.n_times() || path.width() + 1 != data.dimension())
    throw InvalidArgument("parameter path shape does not match the dataset");
  double fit = 0.0;
  NodeParams params{path.node(), {}};
  for (std::size_t t = 0; t < data.n_times(); ++t) {
    const auto row = path.row(t);
    params.theta.assign(row.begin(), row.end());
    for (const SpinVector& x : data.at(t)) fit += conditional_log_likelihood(params, x);
  }
  return fit - bic_penalty(data.n_times(), dim_blocks(path, zero_eps));
}

// sum_tau sum_t w_t^tau gamma(theta_u^tau; x^t) - (log n / 2) Dim
inline double bic_smooth(const NodeParamPath& path, const Dataset& data, const KernelSpec& kernel,
                         double zero_eps = kDefaultZeroEps) {
  if (path.n_times() != data.n_times() || path.width() + 1 != data.dimension())
    throw InvalidArgument("parameter path shape does not match the dataset");
  double fit = 0.0;
  NodeParams params{path.node(), {}};
  for (std::size_t tau = 0; tau < data.n_times(); ++tau) {
    const auto row = path.row(tau);
    params.theta.assign(row.begin(), row.end());
    fit -= weighted_loss(params, data, kernel_weights(data.times()[tau], data, kernel));
  }
  return fit - bic_penalty(data.n_times(), dim_blocks(path, zero_eps));
}

// Median of the n x n matrix of squared time differences, diagonal
// included; for an even entry count the lower-middle entry is used.
inline double bandwidth_median_heuristic(std::span<const double> times) {
  const std::size_t n = times.size();
  if (n < 2) throw InvalidArgument("bandwidth heuristic needs at least two time points");
  std::vector<double> d;
  d.reserve(n * n);
  for (double a : times)
    for (double b : times) d.push_back((a - b) * (a - b));
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>((d.size() - 1) / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

// n points equidistant on the log scale over [lo, hi], endpoints included.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi >= lo) || n == 0) throw InvalidArgument("invalid log grid");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

enum class Method { smooth, tv, static_ };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::smooth:
      return "smooth";
    case Method::tv:
      return "tv";
    case Method::static_:
      return "static";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "smooth") return Method::smooth;
  if (s == "tv") return Method::tv;
  if (s == "static") return Method::static_;
  throw InvalidArgument("unknown method '" + s + "'");
}

struct GridSpec {
  std::vector<double> lambda1_grid = log_grid(0.01, 0.3, 100);
  std::vector<double> h_grid = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
  std::vector<double> lambda_tv_grid = log_grid(0.05, 0.3, 10);

  void validate(Method m) const {
    auto check = [](const std::vector<double>& g, const char* name) {
      if (g.empty()) throw InvalidArgument(std::string(name) + " grid is empty");
      for (double v : g)
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " grid values must be > 0");
    };
    check(lambda1_grid, "lambda1");
    if (m == Method::smooth) check(h_grid, "bandwidth");
    if (m == Method::tv) check(lambda_tv_grid, "lambda_tv");
  }
};

struct BICCell {
  double lambda1 = 0.0;
  double second = 0.0;  // bandwidth (smooth), lambda_tv (tv), unused (static)
  std::vector<double> node_bic;
  double average = 0.0;
  bool valid = true;
};

struct BICReport {
  Method method = Method::smooth;
  std::vector<BICCell> cells;
  std::size_t selected = 0;

  const BICCell& best() const { return cells.at(selected); }
};

struct EstimationOptions {
  KernelKind kernel = KernelKind::epanechnikov;
  CdOptions cd;
  TVConfig tv;  // penalties are overwritten per cell
  double zero_eps = kDefaultZeroEps;
  unsigned threads = 1;
};

// Tuning values for one fixed estimate.
struct Tuning {
  double lambda1 = 0.0;
  double bandwidth = 0.0;
  double lambda_tv = 0.0;
};

// Per-node paths for every node. The static estimate is replicated across
// the time grid.
inline std::vector<NodeParamPath> estimate_all_nodes(Method method, const Dataset& data, const Tuning& tuning,
                                                     const EstimationOptions& options = {}) {
  const std::size_t p = data.dimension();
  std::vector<NodeParamPath> paths(p);
  parallel_for(p, options.threads, [&](std::size_t u) {
    const NodeDesign design(data, u);
    switch (method) {
      case Method::smooth: {
        SmoothConfig cfg{tuning.lambda1, KernelSpec{options.kernel, tuning.bandwidth}, options.cd};
        paths[u] = fit_smooth_path(design, cfg).path;
        break;
      }
      case Method::tv: {
        TVConfig cfg = options.tv;
        cfg.lambda1 = tuning.lambda1;
        cfg.lambda_tv = tuning.lambda_tv;
        paths[u] = fit_node_tv(design, cfg).path;
        break;
      }
      case Method::static_: {
        const L1LogisticFit fit = fit_node_static(design, tuning.lambda1, options.cd);
        NodeParamPath path(u, data.n_times(), design.width());
        for (std::size_t t = 0; t < data.n_times(); ++t) std::copy(fit.theta.begin(), fit.theta.end(), path.row(t).begin());
        paths[u] = std::move(path);
        break;
      }
    }
  });
  return paths;
}

struct GridSearchResult {
  BICReport report;
  std::vector<NodeParamPath> paths;  // selected cell, one per node
  Tuning selected;
};

namespace detail {

// Walks lambda1 from largest to smallest for one node and one value of the
// second parameter, warm-starting each fit from the previous one. Calls
// visit(lambda_index, path, fit_term) for each lambda1 reached; returns
// early after stop_at if given. Throws on solver failure of the first
// lambda; later failures are reported through visit with an empty path.
struct PathVisit {
  std::size_t lambda_index;
  const NodeParamPath* path;  // null when the fit failed
  double fit_term;
};

template <class Visit>
void walk_lambda_path(Method method, const NodeDesign& design, double second, const GridSpec& grid,
                      const EstimationOptions& options, std::optional<std::size_t> stop_at, Visit&& visit) {
  std::vector<std::size_t> order(grid.lambda1_grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grid.lambda1_grid[a] > grid.lambda1_grid[b]; });
  std::optional<NodeParamPath> warm;
  std::vector<double> warm_static;
  for (std::size_t li : order) {
    const double lambda1 = grid.lambda1_grid[li];
    try {
      switch (method) {
        case Method::smooth: {
          SmoothConfig cfg{lambda1, KernelSpec{options.kernel, second}, options.cd};
          SmoothPath sp = fit_smooth_path(design, cfg, warm ? &*warm : nullptr);
          double fit = 0.0;
          for (double l : sp.losses) fit -= l;
          warm = std::move(sp.path);
          visit(PathVisit{li, &*warm, fit});
          break;
        }
        case Method::tv: {
          TVConfig cfg = options.tv;
          cfg.lambda1 = lambda1;
          cfg.lambda_tv = second;
          TVFit tf = fit_node_tv(design, cfg, warm ? &*warm : nullptr);
          // loss = objective - penalties
          double pen = 0.0;
          for (std::size_t j = 0; j < tf.path.width(); ++j) {
            const auto c = tf.path.covariate(j);
            for (double v : c) pen += lambda1 * std::fabs(v);
            pen += second * tv_penalty(c);
          }
          warm = std::move(tf.path);
          visit(PathVisit{li, &*warm, -(tf.objective - pen)});
          break;
        }
        case Method::static_: {
          const L1LogisticFit fit = fit_node_static(design, lambda1, options.cd, warm_static);
          warm_static = fit.theta;
          NodeParamPath path(design.node(), design.n_times(), design.width());
          for (std::size_t t = 0; t < design.n_times(); ++t)
            std::copy(fit.theta.begin(), fit.theta.end(), path.row(t).begin());
          warm = std::move(path);
          // uniform weights 1/N: total log pseudo-likelihood is -N * loss
          visit(PathVisit{li, &*warm, -fit.loss * static_cast<double>(design.n_obs())});
          break;
        }
      }
    } catch (const ConvergenceError&) {
      visit(PathVisit{li, nullptr, 0.0});
    }
    if (stop_at && li == *stop_at) return;
  }
}

}  // namespace detail

inline GridSearchResult grid_search(Method method, const Dataset& data, const GridSpec& grid,
                                    const EstimationOptions& options = {}) {
  grid.validate(method);
  const std::size_t p = data.dimension();
  const std::size_t n_lambda = grid.lambda1_grid.size();
  std::vector<double> seconds{0.0};
  if (method == Method::smooth) seconds = grid.h_grid;
  if (method == Method::tv) seconds = grid.lambda_tv_grid;
  const std::size_t n_second = seconds.size();

  BICReport report;
  report.method = method;
  report.cells.resize(n_second * n_lambda);
  for (std::size_t s = 0; s < n_second; ++s)
    for (std::size_t l = 0; l < n_lambda; ++l) {
      BICCell& c = report.cells[s * n_lambda + l];
      c.lambda1 = grid.lambda1_grid[l];
      c.second = seconds[s];
      c.node_bic.assign(p, 0.0);
    }
  std::vector<char> ok(report.cells.size() * p, 1);

  std::vector<NodeDesign> designs;
  designs.reserve(p);
  for (std::size_t u = 0; u < p; ++u) designs.emplace_back(data, u);

  parallel_for(p * n_second, options.threads, [&](std::size_t task) {
    const std::size_t u = task % p;
    const std::size_t s = task / p;
    try {
      detail::walk_lambda_path(method, designs[u], seconds[s], grid, options, std::nullopt,
                               [&](const detail::PathVisit& v) {
                                 const std::size_t cell = s * n_lambda + v.lambda_index;
                                 if (v.path == nullptr) {
                                   ok[cell * p + u] = 0;
                                   return;
                                 }
                                 report.cells[cell].node_bic[u] =
                                     v.fit_term - bic_penalty(data.n_times(), dim_blocks(*v.path, options.zero_eps));
                               });
    } catch (const EmptyWindowError&) {
      for (std::size_t l = 0; l < n_lambda; ++l) ok[(s * n_lambda + l) * p + u] = 0;
    }
  });

  bool any = false;
  std::size_t best = 0;
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    BICCell& cell = report.cells[c];
    cell.valid = true;
    double sum = 0.0;
    for (std::size_t u = 0; u < p; ++u) {
      cell.valid = cell.valid && ok[c * p + u];
      sum += cell.node_bic[u];
    }
    cell.average = sum / static_cast<double>(p);
    if (!cell.valid) continue;
    const BICCell& b = report.cells[best];
    const bool better = !any || cell.average > b.average ||
                        (cell.average == b.average &&
                         (cell.lambda1 < b.lambda1 || (cell.lambda1 == b.lambda1 && cell.second < b.second)));
    if (better) {
      best = c;
      any = true;
    }
  }
  if (!any) throw ConvergenceError("grid search: every grid cell failed", {}, {});
  report.selected = best;

  GridSearchResult result;
  const BICCell& sel = report.cells[best];
  result.selected = Tuning{sel.lambda1, method == Method::smooth ? sel.second : 0.0,
                           method == Method::tv ? sel.second : 0.0};
  const std::size_t s_best = best / n_lambda;
  const std::size_t l_best = best % n_lambda;
  result.paths.resize(p);
  // Re-walk the selected column with the identical warm-start sequence.
  parallel_for(p, options.threads, [&](std::size_t u) {
    detail::walk_lambda_path(method, designs[u], seconds[s_best], grid, options, l_best,
                             [&](const detail::PathVisit& v) {
                               if (v.lambda_index == l_best && v.path != nullptr) result.paths[u] = *v.path;
                             });
  });
  result.report = std::move(report);
  return result;
}

}  // namespace tvnet
