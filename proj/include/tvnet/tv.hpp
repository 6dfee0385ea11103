#pragma once

// Fused-lasso (l1 + total variation) penalized logistic regression over the
// whole time path of one node, solved by block coordinate descent over
// covariates. Each block is a one-covariate fused problem, solved by
// proximal Newton on a weighted fused-lasso prox (or, optionally, by
// accelerated proximal gradient).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tvnet/design.hpp"
#include "tvnet/error.hpp"
#include "tvnet/ising.hpp"

namespace tvnet {

// sum_{i >= 1} |x_i - x_{i-1}|
inline double tv_penalty(std::span<const double> x) noexcept {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += std::fabs(x[i] - x[i - 1]);
  return s;
}

// argmin_x 0.5 * ||x - y||^2 + lambda * TV(x), by Condat's direct
// (taut-string) algorithm. Linear time in practice.
inline std::vector<double> tv_prox(std::span<const double> input, double lambda) {
  const std::size_t width = input.size();
  std::vector<double> output(input.begin(), input.end());
  if (width <= 1 || lambda <= 0.0) return output;

  std::size_t k = 0, k0 = 0;
  double umin = lambda, umax = -lambda;
  double vmin = input[0] - lambda, vmax = input[0] + lambda;
  std::size_t kplus = 0, kminus = 0;
  const double twolambda = 2.0 * lambda;
  const double minlambda = -lambda;
  for (;;) {
    while (k == width - 1) {
      if (umin < 0.0) {
        do output[k0++] = vmin; while (k0 <= kminus);
        k = kminus = k0;
        vmin = input[k];
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        do output[k0++] = vmax; while (k0 <= kplus);
        k = kplus = k0;
        vmax = input[k];
        umax = minlambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        do output[k0++] = vmin; while (k0 <= k);
        return output;
      }
    }
    if ((umin += input[k + 1] - vmin) < minlambda) {
      do output[k0++] = vmin; while (k0 <= kminus);
      k = kplus = kminus = k0;
      vmin = input[k];
      vmax = vmin + twolambda;
      umin = lambda;
      umax = minlambda;
    } else if ((umax += input[k + 1] - vmax) > lambda) {
      do output[k0++] = vmax; while (k0 <= kplus);
      k = kplus = kminus = k0;
      vmax = input[k];
      vmin = vmax - twolambda;
      umin = lambda;
      umax = minlambda;
    } else {
      ++k;
      if (umin >= lambda) {
        kminus = k;
        vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
        umin = lambda;
      }
      if (umax <= minlambda) {
        kplus = k;
        vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
        umax = minlambda;
      }
    }
  }
}

inline double soft_threshold(double x, double t) noexcept {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// argmin_x 0.5 * ||x - y||^2 + l1 * ||x||_1 + ltv * TV(x). The TV prox
// followed by soft-thresholding is exact for this penalty pair.
inline std::vector<double> fused_prox(std::span<const double> y, double l1, double ltv) {
  std::vector<double> x = tv_prox(y, ltv);
  for (double& v : x) v = soft_threshold(v, l1);
  return x;
}

// argmin_x sum_t w_t/2 (x_t - v_t)^2 + l1 * ||x||_1 + ltv * TV(x), w_t > 0.
// Soft-thresholding no longer commutes with the TV prox once the weights
// differ, so this runs the forward dynamic program over the derivative of
// the partial minimum (piecewise linear, increasing, with a jump of 2*l1 at
// 0 for every point) and backtracks through the clamp points.
inline std::vector<double> weighted_fused_prox(std::span<const double> v, std::span<const double> w, double l1,
                                               double ltv) {
  const std::size_t n = v.size();
  if (w.size() != n) throw InvalidArgument("weight vector has wrong length");
  std::vector<double> x(n);
  if (n == 0) return x;
  if (ltv <= 0.0 || n == 1) {
    for (std::size_t t = 0; t < n; ++t) x[t] = soft_threshold(v[t], l1 / w[t]);
    return x;
  }

  // Derivative = (a_left * b + b_left) left of the first knot; each knot adds
  // (da, db) to the slope and intercept to its right.
  struct Delta {
    double da = 0.0, db = 0.0;
  };
  std::map<double, Delta> knots;
  double a_left = 0.0, b_left = 0.0, a_right = 0.0, b_right = 0.0;
  std::vector<double> lo(n - 1), hi(n - 1);

  auto add_point = [&](std::size_t t) {
    a_left += w[t];
    b_left -= w[t] * v[t] + l1;
    a_right += w[t];
    b_right -= w[t] * v[t] - l1;
    if (l1 > 0.0) knots[0.0].db += 2.0 * l1;
  };

  // Smallest b with derivative >= level. With erase set, the derivative left
  // of that point is replaced by the constant level.
  auto cross_from_left = [&](double level, bool erase) {
    double a = a_left, b = b_left;
    auto it = knots.begin();
    double at = 0.0;
    for (;; ++it) {
      if (it == knots.end()) {
        at = (level - b) / a;
        break;
      }
      const double loc = it->first;
      if (a * loc + b >= level) {
        at = (level - b) / a;
        break;
      }
      a += it->second.da;
      b += it->second.db;
      if (a * loc + b >= level) {
        at = loc;
        ++it;
        break;
      }
    }
    if (erase) {
      knots.erase(knots.begin(), it);
      Delta& d = knots[at];
      d.da += a;
      d.db += b - level;
      a_left = 0.0;
      b_left = level;
    }
    return at;
  };

  auto cross_from_right = [&](double level) {
    double a = a_right, b = b_right;
    auto it = knots.end();
    double at = 0.0;
    for (;;) {
      if (it == knots.begin()) {
        at = (level - b) / a;
        break;
      }
      auto prev = std::prev(it);
      const double loc = prev->first;
      if (a * loc + b <= level) {
        at = (level - b) / a;
        break;
      }
      a -= prev->second.da;
      b -= prev->second.db;
      it = prev;
      if (a * loc + b <= level) {
        at = loc;
        break;
      }
    }
    knots.erase(it, knots.end());
    Delta& d = knots[at];
    d.da -= a;
    d.db += level - b;
    a_right = 0.0;
    b_right = level;
    return at;
  };

  for (std::size_t t = 0; t + 1 < n; ++t) {
    add_point(t);
    lo[t] = cross_from_left(-ltv, true);
    hi[t] = cross_from_right(ltv);
  }
  add_point(n - 1);
  x[n - 1] = cross_from_left(0.0, false);
  for (std::size_t t = n - 1; t-- > 0;) x[t] = std::clamp(x[t + 1], lo[t], hi[t]);
  return x;
}

// Checks first-order optimality of a one-covariate fused problem: is there a
// subgradient of l1*|.|_1 + ltv*TV at theta whose sum with grad is within
// eps componentwise? Propagates the feasible interval of the TV dual
// variable along the chain.
inline bool fused_kkt_feasible(std::span<const double> theta, std::span<const double> grad, double l1,
                               double ltv, double eps) {
  const std::size_t n = theta.size();
  double lo = 0.0, hi = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double s_lo, s_hi;
    if (theta[t] > 0.0) {
      s_lo = s_hi = l1;
    } else if (theta[t] < 0.0) {
      s_lo = s_hi = -l1;
    } else {
      s_lo = -l1;
      s_hi = l1;
    }
    lo += grad[t] + s_lo - eps;
    hi += grad[t] + s_hi + eps;
    double c_lo, c_hi;
    if (t + 1 == n) {
      c_lo = c_hi = 0.0;
    } else if (theta[t + 1] > theta[t]) {
      c_lo = c_hi = ltv;
    } else if (theta[t + 1] < theta[t]) {
      c_lo = c_hi = -ltv;
    } else {
      c_lo = -ltv;
      c_hi = ltv;
    }
    lo = std::max(lo, c_lo);
    hi = std::min(hi, c_hi);
    if (lo > hi) return false;
  }
  return true;
}

// One covariate's block: the linear predictor of observation i is
// offset[i] + theta[t(i)] * z[i].
struct FusedProblem {
  std::span<const double> offset;
  const double* z = nullptr;
  const double* y = nullptr;
  std::span<const std::size_t> time_offsets;  // n_times + 1 entries

  std::size_t n_times() const noexcept { return time_offsets.size() - 1; }

  std::size_t max_replicates() const noexcept {
    std::size_t k = 0;
    for (std::size_t t = 0; t + 1 < time_offsets.size(); ++t)
      k = std::max(k, time_offsets[t + 1] - time_offsets[t]);
    return k;
  }

  double loss(std::span<const double> theta) const {
    double l = 0.0;
    for (std::size_t t = 0; t < n_times(); ++t)
      for (std::size_t i = time_offsets[t]; i < time_offsets[t + 1]; ++i) {
        const double eta = offset[i] + theta[t] * z[i];
        l += log_two_cosh(eta) - y[i] * eta;
      }
    return l;
  }

  void gradient(std::span<const double> theta, std::span<double> out) const {
    for (std::size_t t = 0; t < n_times(); ++t) {
      double g = 0.0;
      for (std::size_t i = time_offsets[t]; i < time_offsets[t + 1]; ++i)
        g += z[i] * (std::tanh(offset[i] + theta[t] * z[i]) - y[i]);
      out[t] = g;
    }
  }

  double objective(std::span<const double> theta, double l1, double ltv) const {
    double pen = 0.0;
    for (double v : theta) pen += std::fabs(v);
    return loss(theta) + l1 * pen + ltv * tv_penalty(theta);
  }
};

enum class FusedSolver { prox_newton, prox_gradient };

struct FusedOptions {
  double tol = 1e-8;  // bound on the componentwise subgradient residual
  std::size_t max_iterations = 10000;
  FusedSolver solver = FusedSolver::prox_newton;
};

struct FusedResult {
  std::vector<double> theta;
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Accelerated proximal gradient (FISTA with gradient-based restart), step
// 1/L with L = max replicate count, which bounds the per-coordinate
// curvature of the separable logistic part. Stops once
// 2L * ||prox point - extrapolated point||_inf <= tol, which bounds the
// subgradient residual at the returned point. Never returns a point with a
// higher objective than the warm start.
namespace detail {

inline FusedResult fused_prox_gradient(const FusedProblem& problem, double l1, double ltv,
                                       const FusedOptions& options, std::span<const double> warm) {
  const std::size_t n = problem.n_times();
  std::vector<double> x(n, 0.0);
  if (!warm.empty()) {
    if (warm.size() != n) throw InvalidArgument("warm start has wrong length");
    std::copy(warm.begin(), warm.end(), x.begin());
  }
  const double lipschitz = static_cast<double>(problem.max_replicates());
  const double start_objective = problem.objective(x, l1, ltv);

  std::vector<double> y = x, z(n), g(n), step(n);
  double momentum = 1.0;
  std::size_t it = 0;
  bool converged = false;
  for (; it < options.max_iterations; ++it) {
    problem.gradient(y, g);
    for (std::size_t t = 0; t < n; ++t) step[t] = y[t] - g[t] / lipschitz;
    z = fused_prox(step, l1 / lipschitz, ltv / lipschitz);
    double gap = 0.0, restart = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      gap = std::max(gap, std::fabs(z[t] - y[t]));
      restart += (y[t] - z[t]) * (z[t] - x[t]);
    }
    if (2.0 * lipschitz * gap <= options.tol) {
      x.swap(z);
      converged = true;
      break;
    }
    double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    if (restart > 0.0) next = 1.0;
    const double beta = (momentum - 1.0) / next;
    for (std::size_t t = 0; t < n; ++t) y[t] = z[t] + (restart > 0.0 ? 0.0 : beta) * (z[t] - x[t]);
    x.swap(z);
    momentum = next;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "fused subproblem did not converge within " << options.max_iterations << " iterations";
    throw ConvergenceError(msg.str(), x, {start_objective, problem.objective(x, l1, ltv)});
  }
  FusedResult out{std::move(x), 0.0, it + 1};
  out.objective = problem.objective(out.theta, l1, ltv);
  if (out.objective > start_objective && !warm.empty()) {
    out.theta.assign(warm.begin(), warm.end());
    out.objective = start_objective;
  }
  return out;
}

// Proximal Newton. The block loss is a sum of independent terms per time
// point, so its Hessian is diagonal and the scaled prox step is solved
// exactly by weighted_fused_prox. Backtracking on the usual
// sufficient-decrease model keeps the objective monotone.
inline FusedResult fused_prox_newton(const FusedProblem& problem, double l1, double ltv,
                                     const FusedOptions& options, std::span<const double> warm) {
  const std::size_t n = problem.n_times();
  const auto& bounds = problem.time_offsets;
  std::vector<double> x(n, 0.0);
  if (!warm.empty()) std::copy(warm.begin(), warm.end(), x.begin());

  // tanh(o + a z) from tanh(o) and tanh(a), z = +-1; log cosh likewise.
  std::vector<double> t_off(problem.offset.size());
  double base = 0.0;
  for (std::size_t i = 0; i < t_off.size(); ++i) {
    t_off[i] = std::tanh(problem.offset[i]);
    base += log_two_cosh(problem.offset[i]) - problem.y[i] * problem.offset[i];
  }
  auto term = [&](std::size_t t, double a, double* grad, double* hess) {
    const double ta = std::tanh(a);
    const double lca = log_two_cosh(a) - std::log(2.0);
    double l = 0.0, g = 0.0, h = 0.0;
    for (std::size_t i = bounds[t]; i < bounds[t + 1]; ++i) {
      const double zi = problem.z[i];
      const double zt = zi * ta;
      const double den = 1.0 + t_off[i] * zt;
      double th;
      if (den > 0.25) {
        th = (t_off[i] + zt) / den;
        l += lca + std::log(den);
      } else {
        const double o = problem.offset[i];
        th = std::tanh(o + a * zi);
        l += log_two_cosh(o + a * zi) - log_two_cosh(o);
      }
      l -= problem.y[i] * a * zi;
      if (grad != nullptr) {
        g += zi * (th - problem.y[i]);
        h += 1.0 - th * th;
      }
    }
    if (grad != nullptr) {
      *grad = g;
      *hess = h;
    }
    return l;
  };
  auto penalty = [&](const std::vector<double>& v) {
    double a = 0.0;
    for (double e : v) a += std::fabs(e);
    return l1 * a + ltv * tv_penalty(v);
  };

  std::vector<double> g(n), h(n), step(n), trial(n), d(n);
  double smooth = base;
  for (std::size_t t = 0; t < n; ++t) smooth += term(t, x[t], &g[t], &h[t]);
  double pen = penalty(x);
  const double start_objective = smooth + pen;
  const double floor = 1e-10 * static_cast<double>(std::max<std::size_t>(1, problem.max_replicates()));

  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    if (fused_kkt_feasible(x, g, l1, ltv, options.tol)) break;
    for (std::size_t t = 0; t < n; ++t) {
      h[t] = std::max(h[t], floor);
      step[t] = x[t] - g[t] / h[t];
    }
    const std::vector<double> target = weighted_fused_prox(step, h, l1, ltv);
    double model = penalty(target) - pen;
    for (std::size_t t = 0; t < n; ++t) {
      d[t] = target[t] - x[t];
      model += g[t] * d[t];
    }
    const double f = smooth + pen;
    double size = 0.0, scale = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
      size = std::max(size, std::fabs(d[t]));
      scale = std::max(scale, std::fabs(x[t]));
    }
    if (size <= 1e-15 * scale) break;  // nothing left at working precision
    // Below roundoff in f neither the model nor the decrease test can be
    // trusted for sign; the quadratic model is accurate there, so take the
    // full step.
    const bool tiny = -model <= 1e-12 * std::max(1.0, std::fabs(f));
    double s = 1.0, next_smooth = 0.0, next_pen = 0.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, s *= 0.5) {
      for (std::size_t t = 0; t < n; ++t) trial[t] = x[t] + s * d[t];
      next_smooth = base;
      for (std::size_t t = 0; t < n; ++t) next_smooth += term(t, trial[t], nullptr, nullptr);
      next_pen = penalty(trial);
      if (tiny || next_smooth + next_pen <= f + 0.25 * s * model) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    x.swap(trial);
    pen = next_pen;
    smooth = base;
    for (std::size_t t = 0; t < n; ++t) smooth += term(t, x[t], &g[t], &h[t]);
  }
  if (it == options.max_iterations) {
    std::ostringstream msg;
    msg << "fused subproblem did not converge within " << options.max_iterations << " iterations";
    throw ConvergenceError(msg.str(), x, {start_objective, smooth + pen});
  }
  FusedResult out{std::move(x), 0.0, it + 1};
  out.objective = problem.objective(out.theta, l1, ltv);
  const double warm_objective = warm.empty() ? out.objective : problem.objective(warm, l1, ltv);
  if (out.objective > warm_objective) {
    out.theta.assign(warm.begin(), warm.end());
    out.objective = warm_objective;
  }
  return out;
}

}  // namespace detail

// Solves one fused block from the warm start (zero if empty). Never returns
// a point with a higher objective than the warm start.
inline FusedResult fused_subproblem(const FusedProblem& problem, double l1, double ltv,
                                    const FusedOptions& options = {}, std::span<const double> warm = {}) {
  if (l1 < 0.0 || ltv < 0.0) throw InvalidArgument("penalties must be >= 0");
  if (!warm.empty() && warm.size() != problem.n_times()) throw InvalidArgument("warm start has wrong length");
  if (options.solver == FusedSolver::prox_gradient) return detail::fused_prox_gradient(problem, l1, ltv, options, warm);
  return detail::fused_prox_newton(problem, l1, ltv, options, warm);
}

struct TVConfig {
  double lambda1 = 0.0;
  double lambda_tv = 0.0;
  double tol = 1e-7;  // absolute objective decrease per sweep
  // Also required at exit: every block KKT-feasible within this residual.
  // Infinity turns the check off.
  double kkt_tol = 1e-5;
  std::size_t max_outer_sweeps = 500;
  FusedOptions inner;
  bool record_updates = false;  // objective after every block update

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda_tv >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda_tv))
      throw InvalidArgument("penalties must be finite and >= 0");
    if (!(tol > 0.0) || !(kkt_tol > 0.0)) throw InvalidArgument("tolerance must be > 0");
  }
};

struct TVFit {
  NodeParamPath path;
  double objective = 0.0;
  std::size_t sweeps = 0;
  std::vector<double> sweep_trace;
  std::vector<double> update_trace;
};

namespace detail {

class BlockCoordinateDescent {
 public:
  BlockCoordinateDescent(const NodeDesign& design, const TVConfig& cfg)
      : design_(design), cfg_(cfg), eta_(design.n_obs(), 0.0), offset_(design.n_obs()) {}

  TVFit run(const NodeParamPath* warm) {
    const std::size_t n = design_.n_times();
    const std::size_t d = design_.width();
    TVFit fit;
    fit.path = NodeParamPath(design_.node(), n, d);
    if (warm != nullptr) {
      if (warm->n_times() != n || warm->width() != d) throw InvalidArgument("warm path has wrong shape");
      fit.path = *warm;
    }
    paths_.assign(d, std::vector<double>(n));
    for (std::size_t j = 0; j < d; ++j) paths_[j] = fit.path.covariate(j);
    for (std::size_t j = 0; j < d; ++j) add_contribution(j, 1.0);

    double f = objective();
    fit.sweep_trace.push_back(f);
    if (cfg_.record_updates) fit.update_trace.push_back(f);
    for (;;) {
      if (fit.sweeps >= cfg_.max_outer_sweeps) {
        std::ostringstream msg;
        msg << "block coordinate descent did not converge within " << cfg_.max_outer_sweeps << " sweeps";
        std::vector<double> last;
        for (const auto& p : paths_) last.insert(last.end(), p.begin(), p.end());
        throw ConvergenceError(msg.str(), std::move(last), fit.sweep_trace);
      }
      for (std::size_t j = 0; j < d; ++j) {
        update_block(j);
        if (cfg_.record_updates) fit.update_trace.push_back(objective());
      }
      ++fit.sweeps;
      const double next = objective();
      fit.sweep_trace.push_back(next);
      const double decrease = f - next;
      f = next;
      if (decrease < cfg_.tol && kkt_satisfied()) break;
    }
    for (std::size_t j = 0; j < d; ++j) fit.path.set_covariate(j, paths_[j]);
    fit.objective = f;
    return fit;
  }

 private:
  FusedProblem block(std::size_t j) {
    const double* z = design_.column(j);
    const auto& th = paths_[j];
    for (std::size_t t = 0; t < design_.n_times(); ++t)
      for (std::size_t i = design_.time_begin(t); i < design_.time_end(t); ++i)
        offset_[i] = eta_[i] - th[t] * z[i];
    return FusedProblem{offset_, z, design_.response(), design_.time_offsets()};
  }

  void add_contribution(std::size_t j, double sign) {
    const double* z = design_.column(j);
    const auto& th = paths_[j];
    for (std::size_t t = 0; t < design_.n_times(); ++t)
      for (std::size_t i = design_.time_begin(t); i < design_.time_end(t); ++i) eta_[i] += sign * th[t] * z[i];
  }

  void update_block(std::size_t j) {
    const FusedProblem problem = block(j);
    auto& th = paths_[j];
    const bool all_zero = std::all_of(th.begin(), th.end(), [](double v) { return v == 0.0; });
    if (all_zero) {
      grad_.resize(th.size());
      problem.gradient(th, grad_);
      if (fused_kkt_feasible(th, grad_, cfg_.lambda1, cfg_.lambda_tv, 0.0)) return;
    }
    FusedResult r = fused_subproblem(problem, cfg_.lambda1, cfg_.lambda_tv, cfg_.inner, th);
    th = std::move(r.theta);
    const double* z = design_.column(j);
    for (std::size_t t = 0; t < design_.n_times(); ++t)
      for (std::size_t i = design_.time_begin(t); i < design_.time_end(t); ++i)
        eta_[i] = offset_[i] + th[t] * z[i];
  }

  bool kkt_satisfied() {
    if (std::isinf(cfg_.kkt_tol)) return true;
    const double* y = design_.response();
    std::vector<double> residual(eta_.size());
    for (std::size_t i = 0; i < eta_.size(); ++i) residual[i] = std::tanh(eta_[i]) - y[i];
    grad_.resize(design_.n_times());
    for (std::size_t j = 0; j < paths_.size(); ++j) {
      const double* z = design_.column(j);
      for (std::size_t t = 0; t < design_.n_times(); ++t) {
        double g = 0.0;
        for (std::size_t i = design_.time_begin(t); i < design_.time_end(t); ++i) g += z[i] * residual[i];
        grad_[t] = g;
      }
      if (!fused_kkt_feasible(paths_[j], grad_, cfg_.lambda1, cfg_.lambda_tv, cfg_.kkt_tol)) return false;
    }
    return true;
  }

  double objective() const {
    double l = 0.0;
    const double* y = design_.response();
    for (std::size_t i = 0; i < eta_.size(); ++i) l += log_two_cosh(eta_[i]) - y[i] * eta_[i];
    double pen = 0.0;
    for (const auto& p : paths_) {
      double a = 0.0;
      for (double v : p) a += std::fabs(v);
      pen += cfg_.lambda1 * a + cfg_.lambda_tv * tv_penalty(p);
    }
    return l + pen;
  }

  const NodeDesign& design_;
  const TVConfig& cfg_;
  std::vector<double> eta_;
  std::vector<double> offset_;
  std::vector<double> grad_;
  std::vector<std::vector<double>> paths_;
};

}  // namespace detail

inline TVFit fit_node_tv(const NodeDesign& design, const TVConfig& cfg, const NodeParamPath* warm = nullptr) {
  cfg.validate();
  detail::BlockCoordinateDescent bcd(design, cfg);
  return bcd.run(warm);
}

inline NodeParamPath estimate_node_tv(NodeId u, const Dataset& data, const TVConfig& cfg) {
  const NodeDesign design(data, u);
  return fit_node_tv(design, cfg).path;
}

// sum_t sum_{x in D^t} -gamma(theta_u^t; x) + lambda1 sum_t ||theta_u^t||_1
//   + lambda_tv sum_v TV(theta_uv), evaluated term by term from the data.
inline double tv_objective(const NodeParamPath& path, const Dataset& data, const TVConfig& cfg) {
  if (path.n_times() != data.n_times() || path.width() + 1 != data.dimension())
    throw InvalidArgument("parameter path shape does not match the dataset");
  double value = 0.0;
  NodeParams params{path.node(), std::vector<double>(path.width())};
  for (std::size_t t = 0; t < data.n_times(); ++t) {
    const auto row = path.row(t);
    params.theta.assign(row.begin(), row.end());
    for (const SpinVector& x : data.at(t)) value -= conditional_log_likelihood(params, x);
    for (double v : row) value += cfg.lambda1 * std::fabs(v);
  }
  for (std::size_t j = 0; j < path.width(); ++j) value += cfg.lambda_tv * tv_penalty(path.covariate(j));
  return value;
}

}  // namespace tvnet
