#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "emrm/partitions.hpp"
#include "emrm/trace_graph.hpp"

using namespace emrm;

namespace {

TraceGraph graph_of(int k, const std::vector<std::vector<int>>& blocks) {
  return graph_of_partition(SetPartition::from_blocks(k, blocks));
}

// Forest test by depth-first search over the simple graph (a loop is a cycle).
bool simple_graph_is_forest(const TraceGraph& g) {
  std::set<std::pair<int, int>> simple;
  for (const auto& e : g.edges()) {
    if (e.from == e.to) return false;
    simple.insert({std::min(e.from, e.to), std::max(e.from, e.to)});
  }
  std::vector<std::vector<int>> adj(g.vertex_count());
  for (const auto& [a, b] : simple) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> seen(g.vertex_count(), 0);
  std::function<bool(int, int)> dfs = [&](int v, int parent) {
    seen[v] = 1;
    for (int w : adj[v]) {
      if (w == parent) continue;
      if (seen[w] || !dfs(w, v)) return false;
    }
    return true;
  };
  for (int v = 0; v < g.vertex_count(); ++v)
    if (!seen[v] && !dfs(v, -1)) return false;
  return true;
}

}  // namespace

TEST(GraphOfPartition, HandBuiltCases) {
  const TraceGraph two = graph_of(2, {{0}, {1}});
  EXPECT_EQ(two.vertex_count(), 2);
  EXPECT_EQ(two.edges(), (std::vector<Edge>{{0, 1}, {1, 0}}));

  const TraceGraph loops = graph_of(2, {{0, 1}});
  EXPECT_EQ(loops.vertex_count(), 1);
  EXPECT_EQ(loops.edges(), (std::vector<Edge>{{0, 0}, {0, 0}}));

  const TraceGraph crossing = graph_of(4, {{0, 2}, {1, 3}});
  EXPECT_EQ(crossing.vertex_count(), 2);
  EXPECT_EQ(crossing.edges(), (std::vector<Edge>{{0, 1}, {0, 1}, {1, 0}, {1, 0}}));
}

TEST(GraphOfPartition, EdgeCountEqualsK) {
  for (int k = 1; k <= 8; ++k)
    for_each_set_partition(k, [&](const SetPartition& p) { EXPECT_EQ(graph_of_partition(p).edge_count(), k); });
}

TEST(GraphStats, TwoVertexBackAndForth) {
  const GraphStats s = stats(graph_of(2, {{0}, {1}}));
  EXPECT_EQ(s.ordered_pair_counts.at({1, 1}), 1);
  EXPECT_EQ(s.reduced_edge_count, 1);
  EXPECT_EQ(s.cycle_excess, 0);
  EXPECT_TRUE(s.connected());
}

TEST(GraphStats, DoubleLoop) {
  const GraphStats s = stats(graph_of(2, {{0, 1}}));
  EXPECT_EQ(s.loop_counts.at(2), 1);
  EXPECT_EQ(s.reduced_edge_count, 1);
  EXPECT_TRUE(s.has_loop());
  EXPECT_FALSE(s.has_single_loop());
}

TEST(GraphStats, TriangleOfDoubleEdges) {
  const TraceGraph tri(3, {{0, 1}, {0, 1}, {1, 2}, {1, 2}, {2, 0}, {2, 0}});
  const GraphStats s = stats(tri);
  EXPECT_EQ(s.reduced_edge_count, 3);
  EXPECT_EQ(s.component_count, 1);
  EXPECT_EQ(s.cycle_excess, 1);
  EXPECT_EQ(s.unordered_counts.at(2), 3);
}

TEST(GraphStats, EdgeIncidencesAddUp) {
  for (int k = 1; k <= 7; ++k)
    for_each_set_partition(k, [&](const SetPartition& p) {
      const GraphStats s = stats(graph_of_partition(p));
      int total = 0;
      for (const auto& [loops, vertices] : s.loop_counts) total += loops * vertices;
      for (const auto& [mult, count] : s.unordered_counts) total += mult * count;
      EXPECT_EQ(total, k);
      int ordered = 0;
      for (const auto& [kl, count] : s.ordered_pair_counts) ordered += (kl.first + kl.second) * count;
      EXPECT_EQ(ordered + [&] {
        int l = 0;
        for (int c : s.loops_at) l += c;
        return l;
      }(), k);
      EXPECT_GE(s.cycle_excess, 0);
    });
}

TEST(GraphStats, CycleExcessMatchesIndependentForestTest) {
  for (int k = 1; k <= 7; ++k)
    for_each_set_partition(k, [&](const SetPartition& p) {
      const TraceGraph g = graph_of_partition(p);
      EXPECT_EQ(stats(g).cycle_excess == 0, simple_graph_is_forest(g)) << p.to_string();
    });
  const TraceGraph forest(4, {{0, 1}, {2, 3}});
  EXPECT_EQ(stats(forest).component_count, 2);
  EXPECT_EQ(stats(forest).cycle_excess, 0);
  EXPECT_TRUE(simple_graph_is_forest(forest));
}

TEST(Classify, BackAndForthEdge) {
  const TraceGraph g = graph_of(2, {{0}, {1}});
  EXPECT_EQ(classify(g, GraphModel::elliptic), Classification::admissible_tree);
  EXPECT_EQ(classify(g, GraphModel::iid), Classification::zero_by_direction_or_color_rule);
}

TEST(Classify, LoopsExcludedEverywhere) {
  const TraceGraph g = graph_of(2, {{0, 1}});
  for (GraphModel m : {GraphModel::elliptic, GraphModel::iid, GraphModel::colored_block})
    EXPECT_EQ(classify(g, m), Classification::zero_by_single_edge_or_loop);
}

TEST(Classify, ColoredFatTree) {
  const TraceGraph g(2, {{0, 1, EdgeColor::blue}, {0, 1, EdgeColor::blue}, {0, 1, EdgeColor::red}});
  EXPECT_EQ(classify(g, GraphModel::colored_block), Classification::admissible_tree);
  const TraceGraph reverse(2, {{0, 1, EdgeColor::blue}, {0, 1, EdgeColor::blue}, {1, 0, EdgeColor::red}});
  EXPECT_EQ(classify(reverse, GraphModel::colored_block), Classification::zero_by_direction_or_color_rule);
}

TEST(Classify, CyclesAndSingleEdges) {
  const TraceGraph tri(3, {{0, 1}, {0, 1}, {1, 2}, {1, 2}, {2, 0}, {2, 0}});
  EXPECT_EQ(classify(tri, GraphModel::elliptic), Classification::zero_by_cycle);
  const TraceGraph single(3, {{0, 1}, {1, 0}, {1, 2}});
  EXPECT_EQ(classify(single, GraphModel::elliptic), Classification::zero_by_single_edge_or_loop);
}

TEST(Classify, FatTreesAreThickTrees) {
  for (int k = 1; k <= 7; ++k)
    for_each_set_partition(k, [&](const SetPartition& p) {
      const GraphStats s = stats(graph_of_partition(p));
      if (classify(s, GraphModel::iid) == Classification::admissible_tree)
        EXPECT_EQ(classify(s, GraphModel::elliptic), Classification::admissible_tree);
    });
}

TEST(Classify, ClosedWalksNeverGiveFatTrees) {
  for (int k = 1; k <= 7; ++k)
    for_each_set_partition(k, [&](const SetPartition& p) {
      EXPECT_NE(classify(graph_of_partition(p), GraphModel::iid), Classification::admissible_tree) << p.to_string();
    });
}

TEST(Merge, GluingTwoBackAndForthGraphs) {
  const TraceGraph g = graph_of(2, {{0}, {1}});
  const CrossPartition same({2, 2}, SetPartition::from_blocks(4, {{0, 2}, {1, 3}}));
  const MergedGraph m = merge_under_cross_partition({g, g}, same);
  EXPECT_TRUE(m.shared_edge);
  EXPECT_EQ(m.graph.vertex_count(), 2);
  EXPECT_EQ(m.graph.edges(), (std::vector<Edge>{{0, 1}, {0, 1}, {1, 0}, {1, 0}}));

  const CrossPartition apart({2, 2}, SetPartition::from_blocks(4, {{0}, {1}, {2}, {3}}));
  const MergedGraph d = merge_under_cross_partition({g, g}, apart);
  EXPECT_FALSE(d.shared_edge);
  EXPECT_EQ(d.graph.vertex_count(), 4);
  EXPECT_EQ(d.graph.edge_count(), 4);

  const CrossPartition swapped({2, 2}, SetPartition::from_blocks(4, {{0, 3}, {1, 2}}));
  const MergedGraph s = merge_under_cross_partition({g, g}, swapped);
  EXPECT_TRUE(s.shared_edge);
  EXPECT_EQ(s.graph, m.graph);
}

TEST(Merge, SharedFlagIgnoresColorsAndChecksShape) {
  const TraceGraph g(2, {{0, 1}, {0, 1}});
  const CrossPartition c({2, 2}, SetPartition::from_blocks(4, {{0, 2}, {1, 3}}));
  const MergedGraph m = merge_under_cross_partition({g.colored(EdgeColor::blue), g.colored(EdgeColor::red)}, c);
  EXPECT_TRUE(m.shared_edge);
  EXPECT_THROW(merge_under_cross_partition({g}, c), InvalidArgumentError);
}

TEST(TraceGraphText, KeyAndDot) {
  const TraceGraph g(2, {{1, 0, EdgeColor::red}, {0, 1, EdgeColor::blue}, {0, 1, EdgeColor::blue}});
  EXPECT_EQ(g.key(), "2:0>1b,0>1b,1>0r");
  const std::string dot = g.to_dot();
  EXPECT_NE(dot.find("v1 -> v2 [label=\"2\", color=blue]"), std::string::npos);
  EXPECT_NE(dot.find("v2 -> v1 [label=\"1\", color=red]"), std::string::npos);
  EXPECT_THROW(TraceGraph(1, {{0, 1}}), InvalidArgumentError);
}
