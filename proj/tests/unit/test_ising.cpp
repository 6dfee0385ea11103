#include <gtest/gtest.h>

#include <cmath>

#include "tvnet/ising.hpp"

using namespace tvnet;

namespace {

ThetaFull random_theta(std::size_t p, Rng& rng, double lo = -1.0, double hi = 1.0) {
  ThetaFull th(p);
  for (NodeId u = 0; u < p; ++u)
    for (NodeId v = u + 1; v < p; ++v) th.set(u, v, rng.uniform(lo, hi));
  return th;
}

SpinVector random_spins(std::size_t p, Rng& rng) {
  std::vector<std::int8_t> x(p);
  for (auto& s : x) s = rng.uniform() < 0.5 ? -1 : 1;
  return SpinVector(x);
}

NodeParams random_params(NodeId u, std::size_t p, Rng& rng) {
  NodeParams th{u, std::vector<double>(p - 1)};
  for (double& v : th.theta) v = rng.uniform(-2.0, 2.0);
  return th;
}

}  // namespace

TEST(SpinVector, RejectsNonSpinValues) {
  EXPECT_THROW(SpinVector({1, 0, -1}), InvalidArgument);
  EXPECT_THROW(SpinVector({1}), InvalidArgument);
  EXPECT_NO_THROW(SpinVector({1, -1}));
}

TEST(ThetaFull, SymmetricAccessAndSupport) {
  ThetaFull th(4);
  th.set(2, 1, 0.5);
  EXPECT_EQ(th(1, 2), 0.5);
  EXPECT_EQ(th(2, 1), 0.5);
  EXPECT_EQ(th.support_size(), 1u);
  EXPECT_THROW(th(1, 1), InvalidArgument);
  EXPECT_THROW(th.set(0, 4, 1.0), InvalidArgument);
}

TEST(Slots, OtherNodeInvertsSlotOf) {
  for (NodeId u = 0; u < 6; ++u)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(slot_of(u, other_node(u, j)), j);
}

TEST(ConditionalProbability, HandExamples) {
  const SpinVector x{1, 1, -1};
  EXPECT_DOUBLE_EQ(conditional_probability(NodeParams{0, {0.0, 0.0}}, x), 0.5);
  const double e = std::exp(1.0);
  EXPECT_NEAR(conditional_probability(NodeParams{0, {1.0, 0.0}}, x), e / (e + 1.0 / e), 1e-15);
  EXPECT_NEAR(conditional_probability(NodeParams{0, {1.0, 0.0}}, x), 0.880797, 1e-6);
}

TEST(ConditionalProbability, ComplementSumsToOne) {
  Rng rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t p = 2 + rng.below(6);
    const NodeId u = rng.below(p);
    const NodeParams th = random_params(u, p, rng);
    const SpinVector x = random_spins(p, rng);
    std::vector<std::int8_t> flipped(x.values().begin(), x.values().end());
    flipped[u] = static_cast<std::int8_t>(-flipped[u]);
    const double a = conditional_probability(th, x), b = conditional_probability(th, SpinVector(flipped));
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
    EXPECT_NEAR(a + b, 1.0, 1e-15);
  }
}

TEST(ConditionalProbability, DimensionMismatch) {
  EXPECT_THROW(conditional_probability(NodeParams{0, {1.0}}, SpinVector{1, 1, 1}), InvalidArgument);
  EXPECT_THROW(conditional_log_likelihood(NodeParams{0, {1.0}}, SpinVector{1, 1, 1}), InvalidArgument);
  EXPECT_THROW(cll_gradient(NodeParams{0, {1.0}}, SpinVector{1, 1, 1}), InvalidArgument);
}

TEST(ConditionalLogLikelihood, HandExamples) {
  const SpinVector x{1, 1, -1};
  EXPECT_NEAR(conditional_log_likelihood(NodeParams{0, {0.0, 0.0}}, x), -std::log(2.0), 1e-15);
  const double e = std::exp(1.0);
  EXPECT_NEAR(conditional_log_likelihood(NodeParams{0, {1.0, 0.0}}, x), 1.0 - std::log(e + 1.0 / e), 1e-14);
  EXPECT_NEAR(conditional_log_likelihood(NodeParams{0, {1.0, 0.0}}, x), -0.126928, 1e-6);
}

TEST(ConditionalLogLikelihood, IsLogOfProbabilityAndStableForLargeEta) {
  Rng rng(12);
  for (int rep = 0; rep < 100; ++rep) {
    const NodeParams th = random_params(1, 5, rng);
    const SpinVector x = random_spins(5, rng);
    EXPECT_NEAR(conditional_log_likelihood(th, x), std::log(conditional_probability(th, x)), 1e-12);
  }
  const double big = conditional_log_likelihood(NodeParams{0, {800.0}}, SpinVector{-1, 1});
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, -1600.0, 1e-9);
}

TEST(ConditionalLogLikelihood, Concave) {
  Rng rng(13);
  for (int rep = 0; rep < 100; ++rep) {
    const NodeParams a = random_params(2, 4, rng), b = random_params(2, 4, rng);
    const SpinVector x = random_spins(4, rng);
    const double alpha = rng.uniform();
    NodeParams mix{2, std::vector<double>(3)};
    for (int j = 0; j < 3; ++j) mix.theta[j] = alpha * a.theta[j] + (1 - alpha) * b.theta[j];
    EXPECT_GE(conditional_log_likelihood(mix, x),
              alpha * conditional_log_likelihood(a, x) + (1 - alpha) * conditional_log_likelihood(b, x) - 1e-12);
  }
}

TEST(CllGradient, HandExamplesAndZeroParameter) {
  const auto g = cll_gradient(NodeParams{0, {1.0, 0.0}}, SpinVector{1, 1, -1});
  EXPECT_NEAR(g[0], 1.0 - std::tanh(1.0), 1e-15);
  EXPECT_NEAR(g[1], -1.0 + std::tanh(1.0), 1e-15);
  EXPECT_NEAR(g[0], 0.238406, 1e-6);
  const SpinVector x{-1, 1, 1, -1};
  const auto g0 = cll_gradient(NodeParams{2, {0.0, 0.0, 0.0}}, x);
  EXPECT_EQ(g0[0], x[2] * x[0]);
  EXPECT_EQ(g0[1], x[2] * x[1]);
  EXPECT_EQ(g0[2], x[2] * x[3]);
}

TEST(CllGradient, MatchesCentralDifferences) {
  Rng rng(14);
  const double h = 1e-5;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t p = 2 + rng.below(5);
    const NodeId u = rng.below(p);
    NodeParams th = random_params(u, p, rng);
    const SpinVector x = random_spins(p, rng);
    const auto g = cll_gradient(th, x);
    for (std::size_t j = 0; j < th.theta.size(); ++j) {
      NodeParams plus = th, minus = th;
      plus.theta[j] += h;
      minus.theta[j] -= h;
      const double fd =
          (conditional_log_likelihood(plus, x) - conditional_log_likelihood(minus, x)) / (2 * h);
      EXPECT_NEAR(g[j], fd, 1e-6);
    }
  }
}

TEST(ExactDistribution, UniformAtZeroAndNormalized) {
  const auto d = exact_distribution(ThetaFull(5));
  double sum = 0.0;
  for (std::size_t s = 0; s < d.n_states(); ++s) {
    EXPECT_NEAR(d.probability(s), 1.0 / 32.0, 1e-15);
    sum += d.probability(s);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(ExactDistribution, TwoNodeAgreement) {
  ThetaFull th(2);
  th.set(0, 1, 1.0);
  const auto d = exact_distribution(th);
  const double agree = d.probability(SpinVector{1, 1}) + d.probability(SpinVector{-1, -1});
  const double e = std::exp(1.0);
  EXPECT_NEAR(agree, e / (e + 1.0 / e), 1e-14);
  EXPECT_NEAR(d.moment(0, 1), std::tanh(1.0), 1e-14);
}

TEST(ExactDistribution, FlipInvariantAndNormalized) {
  Rng rng(15);
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = exact_distribution(random_theta(6, rng, -1.5, 1.5));
    double sum = 0.0;
    for (std::size_t s = 0; s < d.n_states(); ++s) {
      const SpinVector x = d.state(s);
      EXPECT_NEAR(d.probability(x), d.probability(x.flipped()), 1e-12);
      EXPECT_EQ(d.state_index(x), s);
      sum += d.probability(s);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(ExactDistribution, CapacityCap) {
  EXPECT_THROW(exact_distribution(ThetaFull(kExactEnumerationCap + 1)), CapacityError);
}

TEST(Gibbs, Deterministic) {
  Rng rng(16);
  const ThetaFull th = random_theta(5, rng);
  EXPECT_EQ(gibbs_sample(th, 50, 10, 2, 99), gibbs_sample(th, 50, 10, 2, 99));
  EXPECT_NE(gibbs_sample(th, 50, 10, 2, 99), gibbs_sample(th, 50, 10, 2, 100));
  EXPECT_THROW(gibbs_sample(th, 0, 10, 2, 1), InvalidArgument);
  EXPECT_THROW(gibbs_sample(th, 1, 10, 0, 1), InvalidArgument);
}

TEST(Gibbs, UniformMarginalsAtZero) {
  const auto xs = gibbs_sample(ThetaFull(3), 100000, 10, 1, 5);
  for (std::size_t u = 0; u < 3; ++u) {
    double plus = 0;
    for (const auto& x : xs) plus += x[u] > 0;
    EXPECT_NEAR(plus / xs.size(), 0.5, 0.01);
  }
}

TEST(Gibbs, TwoNodeAgreementFrequency) {
  ThetaFull th(2);
  th.set(0, 1, 1.0);
  const auto xs = gibbs_sample(th, 100000, 100, 1, 6);
  double agree = 0;
  for (const auto& x : xs) agree += x[0] == x[1];
  EXPECT_NEAR(agree / xs.size(), 0.880797, 0.01);
}

TEST(Dataset, ValidatesGridAndReplicates) {
  const SpinVector a{1, -1}, b{1, 1, 1};
  EXPECT_THROW(Dataset(2, {0.5, 0.5}, {{a}, {a}}), InvalidArgument);
  EXPECT_THROW(Dataset(2, {0.0, 0.5}, {{a}, {a}}), InvalidArgument);
  EXPECT_THROW(Dataset(2, {0.5, 1.5}, {{a}, {a}}), InvalidArgument);
  EXPECT_THROW(Dataset(2, {0.5, 1.0}, {{a}, {}}), InvalidArgument);
  EXPECT_THROW(Dataset(2, {0.5, 1.0}, {{a}, {b}}), InvalidArgument);
  EXPECT_THROW(Dataset(2, {0.5}, {{a}, {a}}), InvalidArgument);
  const Dataset d(2, {0.5, 1.0}, {{a, a.flipped()}, {a}});
  EXPECT_EQ(d.total_observations(), 3u);
  EXPECT_EQ(d.max_replicates(), 2u);
  const Dataset one = d.first_replicates(1);
  EXPECT_EQ(one.total_observations(), 2u);
  EXPECT_EQ(one.at(0).front(), a);
}

TEST(Dataset, UniformGrid) {
  const auto g = Dataset::uniform_grid(4);
  EXPECT_EQ(g, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
}
