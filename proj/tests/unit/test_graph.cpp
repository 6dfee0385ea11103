#include <gtest/gtest.h>

#include "tvnet/graph.hpp"

using namespace tvnet;

TEST(Symmetrize, HandExamples) {
  EXPECT_EQ(symmetrize(0.5, 0.0, Symmetrization::min), 0.0);
  EXPECT_EQ(symmetrize(0.5, 0.0, Symmetrization::max), 0.5);
  EXPECT_EQ(symmetrize(-0.3, 0.2, Symmetrization::min), 0.2);
  EXPECT_EQ(symmetrize(-0.3, 0.2, Symmetrization::max), -0.3);
  EXPECT_EQ(symmetrize(0.4, -0.4, Symmetrization::min), -0.4);
  EXPECT_EQ(symmetrize(0.4, -0.4, Symmetrization::max), -0.4);
}

TEST(Symmetrize, NamesRoundTrip) {
  EXPECT_EQ(parse_symmetrization("min"), Symmetrization::min);
  EXPECT_EQ(parse_symmetrization("max"), Symmetrization::max);
  EXPECT_THROW(parse_symmetrization("and"), InvalidArgument);
}

namespace {

std::vector<NodeParamPath> zero_paths(std::size_t p, std::size_t n) {
  std::vector<NodeParamPath> paths;
  for (NodeId u = 0; u < p; ++u) paths.emplace_back(u, n, p - 1);
  return paths;
}

}  // namespace

TEST(AssembleGraphs, ZeroPathsGiveEmptyGraphs) {
  const auto g = assemble_graphs(zero_paths(4, 3), {0.2, 0.6, 1.0}, Symmetrization::max);
  EXPECT_EQ(g.total_edges(), 0u);
  EXPECT_EQ(g.n_times(), 3u);
}

TEST(AssembleGraphs, AsymmetricPairMinExcludesMaxIncludes) {
  auto paths = zero_paths(3, 2);
  // Symmetric pair (0,1) at both times; asymmetric (1,2): only node 1 sees it.
  paths[0].at(0, slot_of(0, 1)) = 0.7;
  paths[1].at(0, slot_of(1, 0)) = 0.6;
  paths[0].at(1, slot_of(0, 1)) = 0.7;
  paths[1].at(1, slot_of(1, 0)) = 0.6;
  paths[1].at(0, slot_of(1, 2)) = -0.4;
  const std::vector<double> times{0.5, 1.0};
  const auto gmin = assemble_graphs(paths, times, Symmetrization::min);
  const auto gmax = assemble_graphs(paths, times, Symmetrization::max);
  EXPECT_TRUE(gmin.has_edge(0, 0, 1));
  EXPECT_FALSE(gmin.has_edge(0, 1, 2));
  EXPECT_TRUE(gmax.has_edge(0, 2, 1));
  EXPECT_EQ(gmin.edges(0).front().theta, 0.6);
  EXPECT_EQ(gmax.edges(0).front().theta, 0.7);
  EXPECT_EQ(gmax.edges(0).back().theta, -0.4);
}

TEST(AssembleGraphs, ZeroEpsThreshold) {
  auto paths = zero_paths(2, 1);
  paths[0].at(0, 0) = 5e-9;
  paths[1].at(0, 0) = 5e-9;
  EXPECT_EQ(assemble_graphs(paths, {1.0}, Symmetrization::max).total_edges(), 0u);
  EXPECT_EQ(assemble_graphs(paths, {1.0}, Symmetrization::max, 1e-9).total_edges(), 1u);
}

TEST(AssembleGraphs, RejectsMissingOrMisorderedPaths) {
  auto paths = zero_paths(3, 2);
  EXPECT_THROW(assemble_graphs({paths[0], paths[1]}, {0.5, 1.0}, Symmetrization::min), InvalidArgument);
  std::swap(paths[0], paths[1]);
  EXPECT_THROW(assemble_graphs(paths, {0.5, 1.0}, Symmetrization::min), InvalidArgument);
}

TEST(Evaluate, IdenticalSequencesScoreOne) {
  GraphSequence g(4, {0.5, 1.0});
  g.add_edge(0, 0, 1);
  g.add_edge(1, 2, 3);
  g.add_edge(1, 0, 3);
  const auto m = evaluate(g, g);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(Evaluate, HandExample) {
  GraphSequence truth(3, {1.0}), est(3, {1.0});
  truth.add_edge(0, 0, 1);
  truth.add_edge(0, 1, 2);
  est.add_edge(0, 0, 1);
  const auto m = evaluate(est, truth);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 0.5);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
}

TEST(Evaluate, EmptyEstimateAgainstNonEmptyTruth) {
  GraphSequence truth(3, {0.5, 1.0}), est(3, {0.5, 1.0});
  truth.add_edge(0, 0, 1);
  truth.add_edge(1, 0, 2);
  const auto m = evaluate(est, truth);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Evaluate, BothEmptyCountsAsAgreement) {
  GraphSequence truth(3, {0.5, 1.0}), est(3, {0.5, 1.0});
  truth.add_edge(1, 0, 2);
  est.add_edge(1, 0, 2);
  const auto m = evaluate(est, truth);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
}

TEST(Evaluate, GridMismatchRejected) {
  EXPECT_THROW(evaluate(GraphSequence(3, {0.5, 1.0}), GraphSequence(3, {1.0})), InvalidArgument);
  EXPECT_THROW(evaluate(GraphSequence(3, {0.4, 1.0}), GraphSequence(3, {0.5, 1.0})), InvalidArgument);
  EXPECT_THROW(evaluate(GraphSequence(4, {1.0}), GraphSequence(3, {1.0})), InvalidArgument);
}

TEST(GraphSequence, EdgesSortedAndDeduplicated) {
  GraphSequence g(5, {1.0});
  g.add_edge(0, 3, 1, 0.1);
  g.add_edge(0, 0, 4, 0.2);
  g.add_edge(0, 1, 3, 0.3);
  ASSERT_EQ(g.edges(0).size(), 2u);
  EXPECT_EQ(g.edges(0)[0].u, 0u);
  EXPECT_EQ(g.edges(0)[1].theta, 0.3);
  EXPECT_THROW(g.add_edge(0, 2, 2), InvalidArgument);
}
