#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tvnet/ising.hpp"

namespace tvnet {

// Node u's regression problem laid out for the solvers: observations are
// flattened in time order (replicates of one time point are contiguous), the
// response is x_u and covariate slot j is column j of a column-major matrix.
class NodeDesign {
 public:
  NodeDesign(const Dataset& data, NodeId u)
      : node_(u),
        p_(data.dimension()),
        n_obs_(data.total_observations()),
        n_times_(data.n_times()),
        times_(data.times()) {
    if (u >= p_) throw InvalidArgument("node id " + std::to_string(u) + " out of range");
    response_.resize(n_obs_);
    covariates_.resize((p_ - 1) * n_obs_);
    time_offsets_.resize(n_times_ + 1);
    std::size_t i = 0;
    for (std::size_t t = 0; t < n_times_; ++t) {
      time_offsets_[t] = i;
      for (const SpinVector& x : data.at(t)) {
        response_[i] = x[u];
        for (std::size_t j = 0; j + 1 < p_; ++j) covariates_[j * n_obs_ + i] = x[other_node(u, j)];
        ++i;
      }
    }
    time_offsets_[n_times_] = i;
  }

  NodeId node() const noexcept { return node_; }
  std::size_t dimension() const noexcept { return p_; }
  std::size_t width() const noexcept { return p_ - 1; }
  std::size_t n_obs() const noexcept { return n_obs_; }
  std::size_t n_times() const noexcept { return n_times_; }

  const double* response() const noexcept { return response_.data(); }
  const double* column(std::size_t slot) const noexcept { return covariates_.data() + slot * n_obs_; }

  std::size_t time_begin(std::size_t t) const noexcept { return time_offsets_[t]; }
  std::size_t time_end(std::size_t t) const noexcept { return time_offsets_[t + 1]; }
  std::size_t replicates(std::size_t t) const noexcept { return time_offsets_[t + 1] - time_offsets_[t]; }
  std::size_t max_replicates() const noexcept {
    std::size_t k = 0;
    for (std::size_t t = 0; t < n_times_; ++t) k = std::max(k, replicates(t));
    return k;
  }

  const std::vector<double>& times() const noexcept { return times_; }
  std::span<const std::size_t> time_offsets() const noexcept { return time_offsets_; }

 private:
  NodeId node_;
  std::size_t p_;
  std::size_t n_obs_;
  std::size_t n_times_;
  std::vector<double> times_;
  std::vector<double> response_;
  std::vector<double> covariates_;
  std::vector<std::size_t> time_offsets_;
};

}  // namespace tvnet
