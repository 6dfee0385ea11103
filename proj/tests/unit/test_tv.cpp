#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "../support/oracle.hpp"
#include "tvnet/smooth.hpp"
#include "tvnet/tv.hpp"

using namespace tvnet;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

}  // namespace

TEST(TvPenalty, Examples) {
  EXPECT_EQ(tv_penalty(std::vector<double>{3, 3, 3}), 0.0);
  EXPECT_EQ(tv_penalty(std::vector<double>{0, 1, 0}), 2.0);
  EXPECT_EQ(tv_penalty(std::vector<double>{-1, 0.5, 2, 4}), 5.0);
  EXPECT_EQ(tv_penalty(std::vector<double>{7}), 0.0);
}

TEST(TvProx, MatchesDualReference) {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + rng.below(30);
    const auto y = random_vector(n, rng);
    const double lambda = rng.uniform(0.0, 1.5);
    const auto got = tv_prox(y, lambda);
    const auto want = oracle::tv_prox_dual(y, lambda);
    EXPECT_LE(max_abs_diff(got, want), 1e-9) << "n=" << n << " lambda=" << lambda;
  }
}

TEST(TvProx, LargeLambdaGivesMean) {
  const std::vector<double> y{1, 5, -2, 4};
  const auto x = tv_prox(y, 100.0);
  for (double v : x) EXPECT_NEAR(v, 2.0, 1e-14);
  EXPECT_EQ(tv_prox(y, 0.0), y);
}

TEST(FusedProx, TvThenSoftThresholdMatchesDirectReference) {
  // Reference: prox-gradient on 0.5||x-y||^2 + l1|x| + ltv TV(x) with the
  // dual TV prox; step 1 makes one prox evaluation exact.
  Rng rng(22);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 2 + rng.below(15);
    const auto y = random_vector(n, rng);
    const double l1 = rng.uniform(0.0, 0.8), ltv = rng.uniform(0.0, 0.8);
    const auto got = fused_prox(y, l1, ltv);
    // Check first-order optimality: grad of 0.5||x-y||^2 is x - y.
    std::vector<double> g(n);
    for (std::size_t t = 0; t < n; ++t) g[t] = got[t] - y[t];
    EXPECT_TRUE(fused_kkt_feasible(got, g, l1, ltv, 1e-10));
  }
}

TEST(WeightedFusedProx, SatisfiesOptimalityConditions) {
  Rng rng(25);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t n = 1 + rng.below(20);
    auto v = random_vector(n, rng);
    std::vector<double> w(n);
    for (std::size_t t = 0; t < n; ++t) {
      w[t] = rng.uniform(0.05, 3.0);
      if (t > 0 && rng.uniform() < 0.2) v[t] = v[t - 1];  // ties
    }
    const double l1 = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0.0, 1.5);
    const double ltv = rng.uniform() < 0.1 ? 0.0 : rng.uniform(0.0, 1.5);
    const auto x = weighted_fused_prox(v, w, l1, ltv);
    std::vector<double> g(n);
    for (std::size_t t = 0; t < n; ++t) g[t] = w[t] * (x[t] - v[t]);
    ASSERT_TRUE(fused_kkt_feasible(x, g, l1, ltv, 1e-9)) << "rep " << rep;
  }
}

TEST(WeightedFusedProx, ConstantWeightsReduceToFusedProx) {
  Rng rng(26);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.below(25);
    const auto v = random_vector(n, rng);
    const double c = rng.uniform(0.2, 4.0), l1 = rng.uniform(0.0, 1.0), ltv = rng.uniform(0.0, 1.0);
    const auto got = weighted_fused_prox(v, std::vector<double>(n, c), l1, ltv);
    EXPECT_LE(max_abs_diff(got, fused_prox(v, l1 / c, ltv / c)), 1e-12);
  }
  EXPECT_THROW(weighted_fused_prox(std::vector<double>{1, 2}, std::vector<double>{1}, 0.1, 0.1), InvalidArgument);
}

TEST(FusedSubproblem, NewtonAndProximalGradientAgree) {
  Rng rng(27);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 2 + rng.below(15);
    std::vector<std::size_t> bounds{0};
    for (std::size_t t = 0; t < n; ++t) bounds.push_back(bounds.back() + 1 + rng.below(4));
    const std::size_t m = bounds.back();
    std::vector<double> offset(m), z(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
      offset[i] = rng.uniform(-1.5, 1.5);
      z[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    const FusedProblem problem{offset, z.data(), y.data(), bounds};
    const double l1 = rng.uniform(0.0, 0.5), ltv = rng.uniform(0.0, 0.8);
    FusedOptions newton, gradient;
    gradient.solver = FusedSolver::prox_gradient;
    gradient.max_iterations = 1000000;
    gradient.tol = 1e-11;
    newton.tol = 1e-11;
    const FusedResult a = fused_subproblem(problem, l1, ltv, newton);
    const FusedResult b = fused_subproblem(problem, l1, ltv, gradient);
    EXPECT_NEAR(a.objective, b.objective, 1e-10 * std::max(1.0, std::fabs(b.objective)));
    EXPECT_LE(max_abs_diff(a.theta, b.theta), 1e-6);
    std::vector<double> g(n);
    problem.gradient(a.theta, g);
    EXPECT_TRUE(fused_kkt_feasible(a.theta, g, l1, ltv, 1e-9));
    // Warm start at the optimum stays put.
    const FusedResult again = fused_subproblem(problem, l1, ltv, newton, a.theta);
    EXPECT_LE(again.objective, a.objective);
  }
}

TEST(FusedKkt, DetectsNonOptimalPoints) {
  const std::vector<double> theta{0, 0, 0};
  EXPECT_TRUE(fused_kkt_feasible(theta, std::vector<double>{0.1, -0.1, 0.05}, 0.2, 0.0, 0.0));
  EXPECT_FALSE(fused_kkt_feasible(theta, std::vector<double>{0.5, 0.0, 0.0}, 0.2, 0.1, 0.0));
  // With fusion the gradient mass can be shared: cumulative sums within ltv.
  EXPECT_TRUE(fused_kkt_feasible(theta, std::vector<double>{0.5, -0.3, 0.0}, 0.2, 0.3, 0.0));
}

TEST(TvObjective, ZeroPathAndTermwise) {
  const Dataset data = oracle::random_dataset(4, 8, 3, 23);
  const NodeParamPath zero(1, 8, 3);
  EXPECT_NEAR(tv_objective(zero, data, TVConfig{0.3, 0.7}), 24 * std::log(2.0), 1e-12);
  Rng rng(24);
  NodeParamPath path(1, 8, 3);
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t j = 0; j < 3; ++j) path.at(t, j) = rng.uniform(-1, 1);
  oracle::TvProblem ref{oracle::node_samples(data, 1), 8, 0.3, 0.7};
  std::vector<std::vector<double>> cols(3);
  for (std::size_t j = 0; j < 3; ++j) cols[j] = path.covariate(j);
  EXPECT_NEAR(tv_objective(path, data, TVConfig{0.3, 0.7}), ref.objective(cols), 1e-12);
  EXPECT_NEAR(tv_objective(path, data, TVConfig{0.0, 0.0}), ref.loss(cols), 1e-12);
}

TEST(TvEstimator, MatchesFullProblemReference) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Dataset data = oracle::random_dataset(3, 20, 1, 300 + seed);
    const NodeId u = seed % 3;
    const TVConfig cfg{0.1, 0.1};
    const NodeParamPath got = estimate_node_tv(u, data, cfg);
    const oracle::TvProblem ref{oracle::node_samples(data, u), 20, 0.1, 0.1};
    const double fr = ref.objective(oracle::solve_tv(ref));
    const double fo = tv_objective(got, data, cfg);
    EXPECT_LE(fo - fr, 1e-6 * std::fabs(fr)) << "seed " << seed;
    EXPECT_GE(fo - fr, -1e-6 * std::fabs(fr)) << "seed " << seed;
  }
}

TEST(TvEstimator, ZeroWhenLambda1Dominates) {
  const Dataset data = oracle::random_dataset(4, 15, 2, 25);
  const NodeDesign d(data, 0);
  // Pooled KKT bound at zero: max over covariates and time of |sum x_u x_v|.
  double bound = 0.0;
  for (std::size_t j = 0; j < d.width(); ++j)
    for (std::size_t t = 0; t < d.n_times(); ++t) {
      double g = 0.0;
      for (std::size_t i = d.time_begin(t); i < d.time_end(t); ++i) g += d.response()[i] * d.column(j)[i];
      bound = std::max(bound, std::fabs(g));
    }
  const TVFit fit = fit_node_tv(d, TVConfig{bound + 1e-9, 0.05});
  for (double v : fit.path.values()) EXPECT_EQ(v, 0.0);
}

TEST(TvEstimator, NoFusionDecouplesPerTimePoint) {
  const Dataset data = oracle::random_dataset(3, 10, 4, 26);
  const NodeDesign d(data, 2);
  TVConfig cfg{0.4, 0.0};
  cfg.tol = 1e-12;
  const TVFit fit = fit_node_tv(d, cfg);
  for (std::size_t t = 0; t < d.n_times(); ++t) {
    ObservationWindow w{d.time_begin(t), d.time_end(t), std::vector<double>(d.replicates(t), 1.0)};
    CdOptions o;
    o.tol = 1e-13;
    const auto ref = solve_l1_logistic(d, w, 0.4, o);
    for (std::size_t j = 0; j < d.width(); ++j) EXPECT_NEAR(fit.path.at(t, j), ref.theta[j], 1e-6) << t;
  }
}

TEST(TvEstimator, LargeFusionGivesPooledConstantPath) {
  const Dataset data = oracle::random_dataset(2, 12, 3, 27);
  const NodeDesign d(data, 0);
  // One covariate: with lambda_tv above the total absolute gradient the path
  // is constant, equal to the pooled scalar minimizer with penalty n*lambda1.
  TVConfig cfg{0.2, 1000.0};
  cfg.tol = 1e-12;
  const TVFit fit = fit_node_tv(d, cfg);
  std::vector<oracle::ScalarTerm> terms;
  for (std::size_t i = 0; i < d.n_obs(); ++i) terms.push_back({d.column(0)[i], 0.0, d.response()[i], 1.0});
  const double pooled = oracle::solve_scalar_l1(terms, 12 * 0.2);
  for (std::size_t t = 0; t < 12; ++t) EXPECT_NEAR(fit.path.at(t, 0), pooled, 1e-6);
}

TEST(TvEstimator, SingleTimePointEqualsStatic) {
  const Dataset data = oracle::random_dataset(4, 1, 30, 28);
  const NodeDesign d(data, 1);
  TVConfig cfg{0.05 * 30, 0.3};
  cfg.tol = 1e-12;
  const TVFit fit = fit_node_tv(d, cfg);
  CdOptions o;
  o.tol = 1e-13;
  const auto stat = fit_node_static(d, 0.05, o);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(fit.path.at(0, j), stat.theta[j], 1e-6);
}

TEST(TvEstimator, MonotoneTracesKktAndPerturbation) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset data = oracle::random_dataset(4, 15, 2, 400 + seed);
    const NodeDesign d(data, seed % 4);
    TVConfig cfg{0.1, 0.2};
    cfg.record_updates = true;
    const TVFit fit = fit_node_tv(d, cfg);
    for (std::size_t i = 1; i < fit.update_trace.size(); ++i)
      EXPECT_LE(fit.update_trace[i], fit.update_trace[i - 1] + 1e-12);
    for (std::size_t i = 1; i < fit.sweep_trace.size(); ++i)
      EXPECT_LE(fit.sweep_trace[i], fit.sweep_trace[i - 1] + 1e-12);
    const double f0 = tv_objective(fit.path, data, cfg);
    EXPECT_NEAR(f0, fit.objective, 1e-9 * std::fabs(f0));
    for (std::size_t t = 0; t < d.n_times(); ++t)
      for (std::size_t j = 0; j < d.width(); ++j)
        for (double delta : {1e-4, -1e-4}) {
          NodeParamPath q = fit.path;
          q.at(t, j) += delta;
          EXPECT_GE(tv_objective(q, data, cfg), f0 - 1e-8);
        }
  }
}

TEST(TvEstimator, ReplicatePermutationAndDuplicationInvariance) {
  const Dataset data = oracle::random_dataset(3, 8, 3, 29);
  std::vector<std::vector<SpinVector>> reversed, doubled;
  for (std::size_t t = 0; t < data.n_times(); ++t) {
    auto r = data.at(t);
    std::reverse(r.begin(), r.end());
    reversed.push_back(r);
    auto dd = data.at(t);
    dd.insert(dd.end(), data.at(t).begin(), data.at(t).end());
    doubled.push_back(dd);
  }
  TVConfig cfg{0.2, 0.3};
  cfg.tol = 1e-12;
  const auto base = estimate_node_tv(0, data, cfg);
  const auto perm = estimate_node_tv(0, Dataset(3, data.times(), reversed), cfg);
  for (std::size_t i = 0; i < base.values().size(); ++i) EXPECT_NEAR(base.values()[i], perm.values()[i], 1e-7);
  TVConfig cfg2{0.4, 0.6};
  cfg2.tol = 1e-12;
  const auto dup = estimate_node_tv(0, Dataset(3, data.times(), doubled), cfg2);
  for (std::size_t i = 0; i < base.values().size(); ++i) EXPECT_NEAR(base.values()[i], dup.values()[i], 1e-6);
}

TEST(TvEstimator, SweepCapRaisesConvergenceError) {
  const Dataset data = oracle::random_dataset(4, 10, 2, 30);
  TVConfig cfg{0.01, 0.01};
  cfg.max_outer_sweeps = 1;
  cfg.tol = 1e-15;
  try {
    estimate_node_tv(0, data, cfg);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_FALSE(e.objective_trace().empty());
  }
}

TEST(TvEstimator, KktExitCheckCanBeDisabled) {
  const Dataset data = oracle::random_dataset(4, 15, 2, 400);
  const NodeDesign d(data, 0);
  TVConfig strict{0.1, 0.2};
  TVConfig loose = strict;
  loose.kkt_tol = std::numeric_limits<double>::infinity();
  const TVFit a = fit_node_tv(d, strict), b = fit_node_tv(d, loose);
  EXPECT_LE(b.sweeps, a.sweeps);
  EXPECT_LE(a.objective, b.objective + 1e-12);
  TVConfig bad = strict;
  bad.kkt_tol = 0.0;
  EXPECT_THROW(fit_node_tv(d, bad), InvalidArgument);
}
