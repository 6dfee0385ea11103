#pragma once

// Kernel-reweighted l1-penalized logistic regression for one node at one
// target time, solved by cyclic coordinate descent with exact 1-D updates.
// The static (time-invariant) estimator is the uniform-weight special case.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tvnet/design.hpp"
#include "tvnet/error.hpp"
#include "tvnet/ising.hpp"

namespace tvnet {

enum class KernelKind { epanechnikov, boxcar };

struct KernelSpec {
  KernelKind kind = KernelKind::epanechnikov;
  double bandwidth = 0.1;

  void validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw InvalidArgument("kernel bandwidth must be positive and finite");
  }
};

// K(z), supported on [-1, 1].
inline double kernel_value(KernelKind kind, double z) noexcept {
  const double a = std::fabs(z);
  if (a > 1.0) return 0.0;
  switch (kind) {
    case KernelKind::epanechnikov:
      return 0.75 * (1.0 - z * z);
    case KernelKind::boxcar:
      return 0.5;
  }
  return 0.0;
}

// Normalized weights restricted to the contiguous range of observations
// [begin, end) that receive positive kernel mass.
struct ObservationWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<double> weights;
};

inline ObservationWindow kernel_window(double tau, std::span<const double> times,
                                       std::span<const std::size_t> offsets,
                                       const KernelSpec& kernel) {
  kernel.validate();
  const std::size_t n = times.size();
  std::size_t first = n, last = 0;
  std::vector<double> k(n, 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    k[t] = kernel_value(kernel.kind, (times[t] - tau) / kernel.bandwidth);
    if (k[t] > 0.0) {
      first = std::min(first, t);
      last = t;
      total += k[t] * static_cast<double>(offsets[t + 1] - offsets[t]);
    }
  }
  if (!(total > 0.0)) {
    std::ostringstream msg;
    msg << "kernel window is empty at tau = " << tau << " with bandwidth h = " << kernel.bandwidth;
    throw EmptyWindowError(tau, kernel.bandwidth, msg.str());
  }
  ObservationWindow w;
  w.begin = offsets[first];
  w.end = offsets[last + 1];
  w.weights.reserve(w.end - w.begin);
  for (std::size_t t = first; t <= last; ++t)
    for (std::size_t i = offsets[t]; i < offsets[t + 1]; ++i) w.weights.push_back(k[t] / total);
  return w;
}

inline ObservationWindow kernel_window(double tau, const NodeDesign& design, const KernelSpec& kernel) {
  return kernel_window(tau, design.times(), design.time_offsets(), kernel);
}

inline ObservationWindow uniform_window(const NodeDesign& design) {
  ObservationWindow w;
  w.begin = 0;
  w.end = design.n_obs();
  w.weights.assign(design.n_obs(), 1.0 / static_cast<double>(design.n_obs()));
  return w;
}

// Per-observation weights (flattened time/replicate order), summing to one.
struct WeightVector {
  std::vector<double> weights;
};

inline WeightVector kernel_weights(double tau, const Dataset& data, const KernelSpec& kernel) {
  std::vector<std::size_t> offsets{0};
  for (const auto& reps : data.observations()) offsets.push_back(offsets.back() + reps.size());
  const ObservationWindow w = kernel_window(tau, data.times(), offsets, kernel);
  WeightVector out{std::vector<double>(offsets.back(), 0.0)};
  std::copy(w.weights.begin(), w.weights.end(), out.weights.begin() + static_cast<std::ptrdiff_t>(w.begin));
  return out;
}

// l(theta_u) = -sum_i w_i gamma(theta_u; x^i) over all (time, replicate)
// entries in flattened order.
inline double weighted_loss(const NodeParams& theta_u, const Dataset& data, const WeightVector& w) {
  if (w.weights.size() != data.total_observations())
    throw InvalidArgument("weight vector length does not match the number of observations");
  double loss = 0.0;
  std::size_t i = 0;
  for (const auto& reps : data.observations())
    for (const SpinVector& x : reps) {
      const double wi = w.weights[i++];
      if (wi != 0.0) loss -= wi * conditional_log_likelihood(theta_u, x);
    }
  return loss;
}

struct CdOptions {
  double tol = 1e-7;              // sweep decrease, relative to max(1, |objective|)
  std::size_t max_sweeps = 1000;  // counts full and active-set sweeps
  double kkt_tol = 1e-5;          // per-coordinate, relative to total weight
  double coefficient_cap = 1e3;   // only reachable when lambda1 = 0
  std::vector<std::size_t> order;  // coordinate visiting order; empty = 0..p-2
  bool record_updates = false;     // objective after every coordinate update
};

struct L1LogisticFit {
  std::vector<double> theta;
  double loss = 0.0;
  double objective = 0.0;
  std::size_t sweeps = 0;
  std::vector<double> sweep_trace;   // objective at start and after each sweep
  std::vector<double> update_trace;  // filled when record_updates is set
  bool capped = false;               // some |theta_v| hit coefficient_cap
};

namespace detail {

class CoordinateDescent {
 public:
  CoordinateDescent(const NodeDesign& design, std::size_t begin, std::size_t end,
                    std::span<const double> weights, double lambda, const CdOptions& options)
      : design_(design),
        begin_(begin),
        m_(end - begin),
        w_(weights),
        y_(design.response() + begin),
        lambda_(lambda),
        options_(options),
        eta_(m_),
        th_(m_),
        trial_(m_) {
    if (weights.size() != m_) throw InvalidArgument("weight span does not match observation window");
    if (lambda < 0.0 || !std::isfinite(lambda)) throw InvalidArgument("lambda1 must be finite and >= 0");
    for (double wi : w_) total_weight_ += wi;
    psi_tol_ = 1e-12 * total_weight_;
    if (options_.order.empty()) {
      order_.resize(design.width());
      for (std::size_t j = 0; j < order_.size(); ++j) order_[j] = j;
    } else {
      order_ = options_.order;
      if (order_.size() != design.width()) throw InvalidArgument("coordinate order has wrong length");
    }
  }

  L1LogisticFit run(std::span<const double> warm_start) {
    const std::size_t d = design_.width();
    theta_.assign(d, 0.0);
    if (!warm_start.empty()) {
      if (warm_start.size() != d) throw InvalidArgument("warm start has wrong length");
      std::copy(warm_start.begin(), warm_start.end(), theta_.begin());
    }
    std::fill(eta_.begin(), eta_.end(), 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      if (theta_[j] == 0.0) continue;
      const double* z = column(j);
      for (std::size_t i = 0; i < m_; ++i) eta_[i] += theta_[j] * z[i];
    }
    for (std::size_t i = 0; i < m_; ++i) th_[i] = std::tanh(eta_[i]);

    L1LogisticFit fit;
    double f = objective();
    fit.sweep_trace.push_back(f);
    if (options_.record_updates) fit.update_trace.push_back(f);

    auto sweep = [&](bool active_only) {
      // drops the rounding carried in by addition-formula updates
      if (!active_only)
        for (std::size_t i = 0; i < m_; ++i) th_[i] = std::tanh(eta_[i]);
      for (std::size_t j : order_) {
        if (active_only && theta_[j] == 0.0) continue;
        update(j);
        if (options_.record_updates) fit.update_trace.push_back(objective());
      }
      ++fit.sweeps;
      const double next = objective();
      fit.sweep_trace.push_back(next);
      const double decrease = f - next;
      f = next;
      return decrease;
    };

    for (;;) {
      check_budget(fit);
      const double decrease = sweep(false);
      if (decrease < options_.tol * std::max(1.0, std::fabs(f)) && kkt_satisfied()) break;
      while (has_active()) {
        check_budget(fit);
        if (sweep(true) < options_.tol * std::max(1.0, std::fabs(f))) break;
      }
    }

    fit.theta = theta_;
    fit.objective = f;
    fit.loss = loss();
    fit.capped = capped_;
    return fit;
  }

  double loss() const {
    double l = 0.0;
    for (std::size_t i = 0; i < m_; ++i) l += w_[i] * (log_two_cosh(eta_[i]) - y_[i] * eta_[i]);
    return l;
  }

  double objective() const {
    double pen = 0.0;
    for (double v : theta_) pen += std::fabs(v);
    return loss() + lambda_ * pen;
  }

  // Gradient of the smooth part with respect to slot j at the current point.
  double gradient(std::size_t j) const {
    const double* z = column(j);
    double g = 0.0;
    for (std::size_t i = 0; i < m_; ++i) g += w_[i] * z[i] * (th_[i] - y_[i]);
    return g;
  }

  bool kkt_satisfied() const {
    const double tol = options_.kkt_tol * total_weight_;
    for (std::size_t j = 0; j < theta_.size(); ++j) {
      if (std::fabs(theta_[j]) >= options_.coefficient_cap) continue;
      const double g = gradient(j);
      if (theta_[j] == 0.0) {
        if (std::fabs(g) > lambda_ + tol) return false;
      } else if (std::fabs(g + lambda_ * (theta_[j] > 0 ? 1.0 : -1.0)) > tol) {
        return false;
      }
    }
    return true;
  }

 private:
  struct Eval {
    double g = 0.0;  // d/dtheta_j of the smooth part
    double h = 0.0;  // second derivative
  };

  const double* column(std::size_t j) const { return design_.column(j) + begin_; }

  bool has_active() const {
    return std::any_of(theta_.begin(), theta_.end(), [](double v) { return v != 0.0; });
  }

  void check_budget(const L1LogisticFit& fit) const {
    if (fit.sweeps >= options_.max_sweeps) {
      std::ostringstream msg;
      msg << "coordinate descent did not converge within " << options_.max_sweeps << " sweeps";
      throw ConvergenceError(msg.str(), theta_, fit.sweep_trace);
    }
  }

  Eval cached(const double* z) const {
    Eval e;
    for (std::size_t i = 0; i < m_; ++i) {
      e.g += w_[i] * z[i] * (th_[i] - y_[i]);
      e.h += w_[i] * (1.0 - th_[i] * th_[i]);
    }
    return e;
  }

  // Evaluates at theta_j + delta, leaving tanh values in trial_. Covariates
  // are +-1, so tanh(eta + delta z) follows from the cached tanh(eta) by the
  // addition formula; near mutual saturation the denominator cancels and
  // tanh is evaluated directly.
  Eval at_offset(const double* z, double delta) {
    Eval e;
    const double td = std::tanh(delta);
    for (std::size_t i = 0; i < m_; ++i) {
      const double zt = z[i] * td;
      const double den = 1.0 + th_[i] * zt;
      const double t = den > 0.25 ? (th_[i] + zt) / den : std::tanh(eta_[i] + delta * z[i]);
      trial_[i] = t;
      e.g += w_[i] * z[i] * (t - y_[i]);
      e.h += w_[i] * (1.0 - t * t);
    }
    return e;
  }

  struct Point {
    double a;       // |theta_j| on the current side
    double psi;     // s * g + lambda, increasing in a
    double h;
    bool in_trial;  // tanh values for this point live in trial_
  };

  // Solves s*g(s*a) + lambda = 0 for a > 0 by safeguarded Newton. Returns
  // nullopt when psi(0) >= 0, i.e. the minimizer is not on side s; the
  // evaluation at a = 0 is then left in `zero`.
  std::optional<Point> solve_side(const double* z, int s, double theta0, Point start, bool psi0_negative,
                                  std::optional<Point>& zero) {
    Point cur = start;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    const double cap = options_.coefficient_cap;
    for (int iter = 0; iter < 200; ++iter) {
      if (std::fabs(cur.psi) <= psi_tol_) return cur;
      if (cur.psi < 0.0) {
        lo = cur.a;
        if (cur.a >= cap) {
          capped_ = true;
          return cur;
        }
      } else {
        hi = cur.a;
      }
      double next = cur.a - cur.psi / std::max(cur.h, 1e-300);
      if (!(next > lo && next < hi)) {
        if (next <= 0.0 && !psi0_negative) {
          next = 0.0;
        } else if (std::isfinite(hi)) {
          next = 0.5 * (lo + hi);
        } else {
          next = std::max(2.0 * cur.a, cur.a + 1.0);
        }
      }
      next = std::min(next, cap);
      if (std::fabs(next - cur.a) <= 1e-15 * std::max(1.0, cur.a)) return cur;
      const Eval e = at_offset(z, s * next - theta0);
      cur = Point{next, s * e.g + lambda_, e.h, true};
      if (next == 0.0) {
        if (cur.psi >= 0.0) {
          zero = cur;
          return std::nullopt;
        }
        psi0_negative = true;
      }
    }
    return cur;
  }

  void commit(const double* z, double theta0, const Point& p, int s) {
    const double value = s * p.a;
    if (value == theta0) return;
    const double delta = value - theta0;
    for (std::size_t i = 0; i < m_; ++i) eta_[i] += delta * z[i];
    if (p.in_trial) {
      th_.swap(trial_);
    } else {
      for (std::size_t i = 0; i < m_; ++i) th_[i] = std::tanh(eta_[i]);
    }
    theta_[current_] = value;
  }

  void update(std::size_t j) {
    current_ = j;
    const double* z = column(j);
    const double theta0 = theta_[j];
    std::optional<Point> zero;

    if (theta0 == 0.0) {
      const Eval e0 = cached(z);
      if (std::fabs(e0.g) <= lambda_) return;
      const int s = e0.g > 0.0 ? -1 : 1;
      const Point start{0.0, s * e0.g + lambda_, e0.h, false};
      if (auto p = solve_side(z, s, theta0, start, true, zero)) commit(z, theta0, *p, s);
      return;
    }

    const int s = theta0 > 0.0 ? 1 : -1;
    const Eval e = cached(z);
    const Point start{std::fabs(theta0), s * e.g + lambda_, e.h, false};
    if (auto p = solve_side(z, s, theta0, start, false, zero)) {
      commit(z, theta0, *p, s);
      return;
    }
    // Minimizer is at zero or on the opposite side; zero->psi = s*g0 + lambda.
    const double g0 = (zero->psi - lambda_) * s;
    if (std::fabs(g0) <= lambda_) {
      commit(z, theta0, Point{0.0, 0.0, 0.0, true}, 1);
      return;
    }
    const int s2 = -s;
    const Point start2{0.0, s2 * g0 + lambda_, zero->h, true};
    std::optional<Point> unused;
    // trial_ holds tanh at theta_j = 0; move it into the cache before the
    // opposite-side search overwrites it.
    {
      const double delta = -theta0;
      for (std::size_t i = 0; i < m_; ++i) eta_[i] += delta * z[i];
      th_.swap(trial_);
      theta_[j] = 0.0;
    }
    const Point cached_start{start2.a, start2.psi, start2.h, false};
    if (auto p = solve_side(z, s2, 0.0, cached_start, true, unused)) commit(z, 0.0, *p, s2);
  }

  const NodeDesign& design_;
  std::size_t begin_;
  std::size_t m_;
  std::span<const double> w_;
  const double* y_;
  double lambda_;
  const CdOptions& options_;
  double total_weight_ = 0.0;
  double psi_tol_ = 0.0;
  std::vector<std::size_t> order_;
  std::vector<double> theta_;
  std::vector<double> eta_;
  std::vector<double> th_;
  std::vector<double> trial_;
  std::size_t current_ = 0;
  bool capped_ = false;
};

}  // namespace detail

// Minimizes sum_i w_i (-gamma_i) + lambda1 * ||theta||_1 over the window.
inline L1LogisticFit solve_l1_logistic(const NodeDesign& design, const ObservationWindow& window,
                                       double lambda1, const CdOptions& options = {},
                                       std::span<const double> warm_start = {}) {
  detail::CoordinateDescent cd(design, window.begin, window.end, window.weights, lambda1, options);
  return cd.run(warm_start);
}

struct SmoothConfig {
  double lambda1 = 0.0;
  KernelSpec kernel;
  CdOptions solver;

  void validate() const {
    if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw InvalidArgument("lambda1 must be >= 0");
    if (!(solver.tol > 0.0)) throw InvalidArgument("solver tolerance must be > 0");
    kernel.validate();
  }
};

inline L1LogisticFit fit_node_smooth(const NodeDesign& design, double tau, const SmoothConfig& cfg,
                                     std::span<const double> warm_start = {}) {
  cfg.validate();
  return solve_l1_logistic(design, kernel_window(tau, design, cfg.kernel), cfg.lambda1, cfg.solver,
                           warm_start);
}

inline NodeParams estimate_node_smooth(NodeId u, double tau, const Dataset& data, const SmoothConfig& cfg) {
  const NodeDesign design(data, u);
  return NodeParams{u, fit_node_smooth(design, tau, cfg).theta};
}

inline L1LogisticFit fit_node_static(const NodeDesign& design, double lambda1, const CdOptions& options = {},
                                     std::span<const double> warm_start = {}) {
  return solve_l1_logistic(design, uniform_window(design), lambda1, options, warm_start);
}

inline NodeParams estimate_node_static(NodeId u, const Dataset& data, double lambda1,
                                       const CdOptions& options = {}) {
  const NodeDesign design(data, u);
  return NodeParams{u, fit_node_static(design, lambda1, options).theta};
}

// Smooth estimates at every grid time tau, warm-started along tau. Also
// returns the weighted loss at each tau (used by the smooth BIC).
struct SmoothPath {
  NodeParamPath path;
  std::vector<double> losses;
  bool capped = false;
};

inline SmoothPath fit_smooth_path(const NodeDesign& design, const SmoothConfig& cfg,
                                  const NodeParamPath* warm = nullptr) {
  cfg.validate();
  const std::size_t n = design.n_times();
  SmoothPath out{NodeParamPath(design.node(), n, design.width()), std::vector<double>(n), false};
  std::vector<double> start(design.width(), 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    std::span<const double> init = start;
    if (warm != nullptr) init = warm->row(t);
    const L1LogisticFit fit = fit_node_smooth(design, design.times()[t], cfg, init);
    std::copy(fit.theta.begin(), fit.theta.end(), out.path.row(t).begin());
    out.losses[t] = fit.loss;
    out.capped = out.capped || fit.capped;
    start = fit.theta;
  }
  return out;
}

}  // namespace tvnet
