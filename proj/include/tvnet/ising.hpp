#pragma once

// Pairwise binary Markov random field (Ising model without field terms):
// core value types, per-node conditional likelihood, exact enumeration for
// small p, and a seeded Gibbs sampler.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tvnet/error.hpp"
#include "tvnet/random.hpp"

namespace tvnet {

using NodeId = std::size_t;

// Covariate slot j of node u's regression refers to node other_node(u, j);
// slots skip u itself.
constexpr NodeId other_node(NodeId u, std::size_t slot) noexcept {
  return slot < u ? slot : slot + 1;
}
constexpr std::size_t slot_of(NodeId u, NodeId v) noexcept { return v < u ? v : v - 1; }

// log(e^a + e^-a), overflow-safe.
inline double log_two_cosh(double a) noexcept {
  const double m = std::fabs(a);
  return m + std::log1p(std::exp(-2.0 * m));
}

class SpinVector {
 public:
  SpinVector() = default;

  explicit SpinVector(std::vector<std::int8_t> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw InvalidArgument("spin vector needs dimension p >= 2");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] != 1 && values_[i] != -1)
        throw InvalidArgument("spin entry " + std::to_string(i) + " is not -1 or +1");
    }
  }

  SpinVector(std::initializer_list<int> values)
      : SpinVector(std::vector<std::int8_t>(values.begin(), values.end())) {}

  std::size_t size() const noexcept { return values_.size(); }
  int operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const std::int8_t> values() const noexcept { return values_; }

  SpinVector flipped() const {
    SpinVector out = *this;
    for (auto& s : out.values_) s = static_cast<std::int8_t>(-s);
    return out;
  }

  friend bool operator==(const SpinVector&, const SpinVector&) = default;

 private:
  std::vector<std::int8_t> values_;
};

// Couplings theta_uv for u != v, stored once per unordered pair.
class ThetaFull {
 public:
  ThetaFull() = default;
  explicit ThetaFull(std::size_t p) : p_(p), values_(p * (p - 1) / 2, 0.0) {
    if (p < 2) throw InvalidArgument("ThetaFull needs p >= 2");
  }

  std::size_t dimension() const noexcept { return p_; }

  double operator()(NodeId u, NodeId v) const { return values_[index(u, v)]; }
  void set(NodeId u, NodeId v, double value) { values_[index(u, v)] = value; }

  std::span<const double> packed() const noexcept { return values_; }

  std::size_t support_size(double eps = 0.0) const {
    std::size_t count = 0;
    for (double v : values_) count += std::fabs(v) > eps;
    return count;
  }

  friend bool operator==(const ThetaFull&, const ThetaFull&) = default;

 private:
  std::size_t index(NodeId u, NodeId v) const {
    if (u == v || u >= p_ || v >= p_)
      throw InvalidArgument("invalid node pair (" + std::to_string(u) + ", " + std::to_string(v) +
                            ")");
    if (u > v) std::swap(u, v);
    // Row-major packed upper triangle.
    return u * (2 * p_ - u - 1) / 2 + (v - u - 1);
  }

  std::size_t p_ = 0;
  std::vector<double> values_;
};

// theta_u: node u's coupling subvector, slot j <-> node other_node(u, j).
struct NodeParams {
  NodeId node = 0;
  std::vector<double> theta;

  std::size_t dimension() const noexcept { return theta.size() + 1; }
  double coupling(NodeId v) const { return theta.at(slot_of(node, v)); }
};

inline NodeParams node_params(const ThetaFull& theta, NodeId u) {
  NodeParams out{u, std::vector<double>(theta.dimension() - 1)};
  for (std::size_t j = 0; j < out.theta.size(); ++j) out.theta[j] = theta(u, other_node(u, j));
  return out;
}

// Per-node parameter path over the time grid: row t holds theta_u^t.
class NodeParamPath {
 public:
  NodeParamPath() = default;
  NodeParamPath(NodeId node, std::size_t n_times, std::size_t width)
      : node_(node), n_times_(n_times), width_(width), values_(n_times * width, 0.0) {}

  NodeId node() const noexcept { return node_; }
  std::size_t n_times() const noexcept { return n_times_; }
  std::size_t width() const noexcept { return width_; }

  std::span<double> row(std::size_t t) { return {values_.data() + t * width_, width_}; }
  std::span<const double> row(std::size_t t) const { return {values_.data() + t * width_, width_}; }

  double& at(std::size_t t, std::size_t slot) { return values_[t * width_ + slot]; }
  double at(std::size_t t, std::size_t slot) const { return values_[t * width_ + slot]; }

  std::vector<double> covariate(std::size_t slot) const {
    std::vector<double> out(n_times_);
    for (std::size_t t = 0; t < n_times_; ++t) out[t] = at(t, slot);
    return out;
  }
  void set_covariate(std::size_t slot, std::span<const double> values) {
    for (std::size_t t = 0; t < n_times_; ++t) at(t, slot) = values[t];
  }

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const NodeParamPath&, const NodeParamPath&) = default;

 private:
  NodeId node_ = 0;
  std::size_t n_times_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

// Time-indexed observations: each time stamp carries one or more replicates.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::size_t p, std::vector<double> times, std::vector<std::vector<SpinVector>> observations)
      : p_(p), times_(std::move(times)), observations_(std::move(observations)) {
    validate();
  }

  // Equally spaced grid {1/n, 2/n, ..., 1}.
  static std::vector<double> uniform_grid(std::size_t n) {
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    return grid;
  }

  std::size_t dimension() const noexcept { return p_; }
  std::size_t n_times() const noexcept { return times_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<SpinVector>& at(std::size_t t) const { return observations_.at(t); }
  const std::vector<std::vector<SpinVector>>& observations() const noexcept { return observations_; }

  std::size_t total_observations() const noexcept {
    std::size_t n = 0;
    for (const auto& reps : observations_) n += reps.size();
    return n;
  }
  std::size_t max_replicates() const noexcept {
    std::size_t k = 0;
    for (const auto& reps : observations_) k = std::max(k, reps.size());
    return k;
  }

  // Keeps the first k replicates at every time point.
  Dataset first_replicates(std::size_t k) const {
    if (k == 0) throw InvalidArgument("replicate count must be >= 1");
    std::vector<std::vector<SpinVector>> obs(observations_.size());
    for (std::size_t t = 0; t < obs.size(); ++t) {
      const auto& reps = observations_[t];
      obs[t].assign(reps.begin(), reps.begin() + static_cast<std::ptrdiff_t>(std::min(k, reps.size())));
    }
    return Dataset(p_, times_, std::move(obs));
  }

 private:
  void validate() const {
    if (p_ < 2) throw InvalidArgument("dataset dimension must be >= 2");
    if (times_.empty()) throw InvalidArgument("dataset has no time points");
    if (times_.size() != observations_.size())
      throw InvalidArgument("time grid and observation lists differ in length");
    for (std::size_t t = 0; t < times_.size(); ++t) {
      if (!(times_[t] > 0.0 && times_[t] <= 1.0))
        throw InvalidArgument("time stamp " + std::to_string(times_[t]) + " outside (0, 1]");
      if (t > 0 && !(times_[t] > times_[t - 1]))
        throw InvalidArgument("time stamps must be strictly increasing (duplicate or unsorted at index " +
                              std::to_string(t) + ")");
      if (observations_[t].empty())
        throw InvalidArgument("time point " + std::to_string(t) + " has no observations");
      for (const auto& x : observations_[t]) {
        if (x.size() != p_) throw InvalidArgument("replicate length differs from dataset dimension");
      }
    }
  }

  std::size_t p_ = 0;
  std::vector<double> times_;
  std::vector<std::vector<SpinVector>> observations_;
};

namespace detail {
inline void check_node_input(const NodeParams& theta_u, const SpinVector& x) {
  if (theta_u.theta.size() + 1 != x.size())
    throw InvalidArgument("parameter length " + std::to_string(theta_u.theta.size()) +
                          " does not match spin dimension " + std::to_string(x.size()));
  if (theta_u.node >= x.size()) throw InvalidArgument("node index out of range");
}
}  // namespace detail

// <theta_u, x_{\u}>
inline double linear_predictor(const NodeParams& theta_u, const SpinVector& x) {
  detail::check_node_input(theta_u, x);
  double eta = 0.0;
  for (std::size_t j = 0; j < theta_u.theta.size(); ++j)
    eta += theta_u.theta[j] * x[other_node(theta_u.node, j)];
  return eta;
}

// P(x_u | x_{\u}) under theta_u.
inline double conditional_probability(const NodeParams& theta_u, const SpinVector& x) {
  const double a = x[theta_u.node] * linear_predictor(theta_u, x);
  // e^a / (e^a + e^-a) = 1 / (1 + e^{-2a})
  return 1.0 / (1.0 + std::exp(-2.0 * a));
}

inline double conditional_log_likelihood(const NodeParams& theta_u, const SpinVector& x) {
  const double eta = linear_predictor(theta_u, x);
  return x[theta_u.node] * eta - log_two_cosh(eta);
}

// d gamma / d theta_uv = x_u x_v - x_v tanh(eta)
inline std::vector<double> cll_gradient(const NodeParams& theta_u, const SpinVector& x) {
  const double eta = linear_predictor(theta_u, x);
  const double th = std::tanh(eta);
  const int xu = x[theta_u.node];
  std::vector<double> grad(theta_u.theta.size());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const int xv = x[other_node(theta_u.node, j)];
    grad[j] = xu * xv - xv * th;
  }
  return grad;
}

inline constexpr std::size_t kExactEnumerationCap = 20;

// Full joint distribution by enumeration. State index s encodes x_j = +1 iff
// bit j of s is set.
class ExactDistribution {
 public:
  explicit ExactDistribution(const ThetaFull& theta) : p_(theta.dimension()) {
    if (p_ > kExactEnumerationCap)
      throw CapacityError("exact enumeration limited to p <= " + std::to_string(kExactEnumerationCap) +
                          ", got p = " + std::to_string(p_));
    const std::size_t states = std::size_t{1} << p_;
    std::vector<double> energy(states);
    double max_energy = -INFINITY;
    for (std::size_t s = 0; s < states; ++s) {
      double e = 0.0;
      for (std::size_t u = 0; u < p_; ++u) {
        const int xu = spin(s, u);
        for (std::size_t v = u + 1; v < p_; ++v) e += theta(u, v) * xu * spin(s, v);
      }
      energy[s] = e;
      max_energy = std::max(max_energy, e);
    }
    probabilities_.resize(states);
    double z = 0.0;
    for (std::size_t s = 0; s < states; ++s) z += probabilities_[s] = std::exp(energy[s] - max_energy);
    for (double& pr : probabilities_) pr /= z;
    log_partition_ = max_energy + std::log(z);
  }

  std::size_t dimension() const noexcept { return p_; }
  std::size_t n_states() const noexcept { return probabilities_.size(); }
  double probability(std::size_t state) const { return probabilities_.at(state); }
  double probability(const SpinVector& x) const { return probabilities_.at(state_index(x)); }
  double log_partition() const noexcept { return log_partition_; }
  std::span<const double> probabilities() const noexcept { return probabilities_; }

  static int spin(std::size_t state, std::size_t j) noexcept { return (state >> j) & 1U ? 1 : -1; }

  SpinVector state(std::size_t s) const {
    std::vector<std::int8_t> v(p_);
    for (std::size_t j = 0; j < p_; ++j) v[j] = static_cast<std::int8_t>(spin(s, j));
    return SpinVector(std::move(v));
  }

  std::size_t state_index(const SpinVector& x) const {
    if (x.size() != p_) throw InvalidArgument("spin dimension mismatch");
    std::size_t s = 0;
    for (std::size_t j = 0; j < p_; ++j)
      if (x[j] > 0) s |= std::size_t{1} << j;
    return s;
  }

  // E[x_u x_v]
  double moment(NodeId u, NodeId v) const {
    double m = 0.0;
    for (std::size_t s = 0; s < probabilities_.size(); ++s) m += probabilities_[s] * spin(s, u) * spin(s, v);
    return m;
  }

 private:
  std::size_t p_;
  std::vector<double> probabilities_;
  double log_partition_ = 0.0;
};

inline ExactDistribution exact_distribution(const ThetaFull& theta) { return ExactDistribution(theta); }

struct GibbsConfig {
  std::size_t burn_in = 1000;  // sweeps discarded before the first kept sample
  std::size_t thin = 100;      // sweeps between kept samples
};

// One chain, sequential scan u = 0..p-1 per sweep. Initial state is drawn
// uniformly from the same generator, so the output depends only on the seed.
inline std::vector<SpinVector> gibbs_sample(const ThetaFull& theta, std::size_t n_samples,
                                            std::size_t burn_in, std::size_t thin,
                                            std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("gibbs_sample: n_samples must be >= 1");
  if (thin < 1) throw InvalidArgument("gibbs_sample: thin must be >= 1");
  const std::size_t p = theta.dimension();

  std::vector<std::vector<std::pair<std::size_t, double>>> neighbors(p);
  for (std::size_t u = 0; u < p; ++u)
    for (std::size_t v = 0; v < p; ++v)
      if (u != v && theta(u, v) != 0.0) neighbors[u].emplace_back(v, theta(u, v));

  Rng rng(seed);
  std::vector<std::int8_t> x(p);
  for (auto& s : x) s = rng.uniform() < 0.5 ? -1 : 1;

  auto sweep = [&] {
    for (std::size_t u = 0; u < p; ++u) {
      double eta = 0.0;
      for (const auto& [v, w] : neighbors[u]) eta += w * x[v];
      const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * eta));
      x[u] = rng.uniform() < p_plus ? 1 : -1;
    }
  };

  for (std::size_t i = 0; i < burn_in; ++i) sweep();
  std::vector<SpinVector> out;
  out.reserve(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n) {
    for (std::size_t i = 0; i < thin; ++i) sweep();
    out.emplace_back(x);
  }
  return out;
}

}  // namespace tvnet
