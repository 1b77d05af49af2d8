#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "emrm/partitions.hpp"

namespace emrm {

enum class EdgeColor { none, blue, red };

inline std::string_view to_string(EdgeColor c) {
  switch (c) {
    case EdgeColor::none: return "none";
    case EdgeColor::blue: return "blue";
    case EdgeColor::red: return "red";
  }
  return "?";
}

struct Edge {
  int from;
  int to;
  EdgeColor color = EdgeColor::none;

  bool is_loop() const { return from == to; }
  friend bool operator==(const Edge&, const Edge&) = default;
  friend bool operator<(const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to, a.color) < std::tie(b.from, b.to, b.color);
  }
};

// Directed multigraph with loops and optional edge colors.  Edges are kept
// sorted, so two graphs with the same labeled edge multiset compare equal.
class TraceGraph {
 public:
  TraceGraph() = default;
  TraceGraph(int vertex_count, std::vector<Edge> edges) : vertex_count_(vertex_count), edges_(std::move(edges)) {
    if (vertex_count_ < 0) throw InvalidArgumentError("negative vertex count");
    for (const auto& e : edges_)
      if (e.from < 0 || e.to < 0 || e.from >= vertex_count_ || e.to >= vertex_count_)
        throw InvalidArgumentError("edge endpoint out of range");
    std::sort(edges_.begin(), edges_.end());
  }

  int vertex_count() const { return vertex_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  // Every edge recolored to `c`.
  TraceGraph colored(EdgeColor c) const {
    std::vector<Edge> e = edges_;
    for (auto& x : e) x.color = c;
    return TraceGraph(vertex_count_, std::move(e));
  }

  // Stable text encoding: "V:from>to[b|r],..." with multiplicities expanded.
  std::string key() const {
    std::string out = std::to_string(vertex_count_) + ":";
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(edges_[i].from) + ">" + std::to_string(edges_[i].to);
      if (edges_[i].color == EdgeColor::blue) out += "b";
      if (edges_[i].color == EdgeColor::red) out += "r";
    }
    return out;
  }

  // DOT digraph; parallel edges collapse into one labeled by multiplicity.
  std::string to_dot(std::string_view name = "T") const {
    std::map<Edge, int> mult;
    for (const auto& e : edges_) ++mult[e];
    std::string out = "digraph " + std::string(name) + " {\n";
    for (int v = 0; v < vertex_count_; ++v) out += "  v" + std::to_string(v + 1) + ";\n";
    for (const auto& [e, m] : mult) {
      out += "  v" + std::to_string(e.from + 1) + " -> v" + std::to_string(e.to + 1) + " [label=\"" + std::to_string(m) + "\"";
      if (e.color != EdgeColor::none) out += ", color=" + std::string(to_string(e.color));
      out += "];\n";
    }
    return out + "}\n";
  }

  friend bool operator==(const TraceGraph&, const TraceGraph&) = default;

 private:
  int vertex_count_ = 0;
  std::vector<Edge> edges_;
};

// Vertices are the blocks of pi; edge block(m) -> block(m+1) cyclically.
inline TraceGraph graph_of_partition(const SetPartition& pi) {
  const int k = pi.ground_size();
  std::vector<Edge> edges;
  edges.reserve(k);
  for (int m = 0; m < k; ++m) edges.push_back({pi.block_of(m), pi.block_of((m + 1) % k)});
  return TraceGraph(pi.block_count(), std::move(edges));
}

// Edges between an unordered vertex pair u < v.
struct PairRecord {
  int u;
  int v;
  int forward = 0;   // u -> v
  int backward = 0;  // v -> u
  int forward_blue = 0;
  int forward_red = 0;
  int backward_blue = 0;
  int backward_red = 0;

  int total() const { return forward + backward; }
  bool unidirectional() const { return forward == 0 || backward == 0; }
};

struct GraphStats {
  int vertex_count = 0;
  int edge_count = 0;
  std::vector<int> loops_at;                // loops carried by each vertex
  std::map<int, int> loop_counts;           // p_k: vertices with exactly k >= 1 loops
  std::vector<PairRecord> pairs;            // adjacent pairs u < v
  std::map<std::pair<int, int>, int> ordered_pair_counts;  // q_{k,l}
  std::map<int, int> unordered_counts;      // q_k
  std::map<std::pair<int, int>, int> colored_pair_counts;  // unidirectional pairs by (blue, red)
  int reduced_edge_count = 0;               // loop vertices + adjacent pairs
  int component_count = 0;
  int cycle_excess = 0;

  bool has_loop() const { return !loop_counts.empty(); }
  bool has_single_edge_pair() const {
    for (const auto& p : pairs)
      if (p.total() == 1) return true;
    return false;
  }
  bool has_single_loop() const { return loop_counts.count(1) > 0; }
  bool reduced_is_forest() const { return cycle_excess == 0; }
  bool connected() const { return component_count <= 1; }
};

inline GraphStats stats(const TraceGraph& g) {
  GraphStats s;
  s.vertex_count = g.vertex_count();
  s.edge_count = g.edge_count();
  s.loops_at.assign(g.vertex_count(), 0);
  std::map<std::pair<int, int>, PairRecord> by_pair;
  for (const auto& e : g.edges()) {
    if (e.is_loop()) {
      ++s.loops_at[e.from];
      continue;
    }
    const int u = std::min(e.from, e.to);
    const int v = std::max(e.from, e.to);
    auto [it, inserted] = by_pair.try_emplace({u, v});
    auto& rec = it->second;
    rec.u = u;
    rec.v = v;
    const bool fwd = e.from == u;
    (fwd ? rec.forward : rec.backward) += 1;
    if (e.color == EdgeColor::blue) (fwd ? rec.forward_blue : rec.backward_blue) += 1;
    if (e.color == EdgeColor::red) (fwd ? rec.forward_red : rec.backward_red) += 1;
  }
  for (int v = 0; v < g.vertex_count(); ++v)
    if (s.loops_at[v] > 0) ++s.loop_counts[s.loops_at[v]];
  for (const auto& [key, rec] : by_pair) {
    s.pairs.push_back(rec);
    ++s.ordered_pair_counts[{rec.forward, rec.backward}];
    ++s.unordered_counts[rec.total()];
    if (rec.backward == 0) ++s.colored_pair_counts[{rec.forward_blue, rec.forward_red}];
    else if (rec.forward == 0) ++s.colored_pair_counts[{rec.backward_blue, rec.backward_red}];
  }
  int loop_vertices = 0;
  for (int c : s.loops_at) loop_vertices += c > 0 ? 1 : 0;
  s.reduced_edge_count = loop_vertices + static_cast<int>(s.pairs.size());

  std::vector<int> parent(g.vertex_count());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  s.component_count = g.vertex_count();
  for (const auto& p : s.pairs) {
    const int a = find(p.u);
    const int b = find(p.v);
    if (a != b) {
      parent[a] = b;
      --s.component_count;
    }
  }
  s.cycle_excess = s.reduced_edge_count + s.component_count - s.vertex_count;
  return s;
}

enum class GraphModel { elliptic, iid, colored_block };

enum class Classification {
  admissible_tree,
  zero_by_single_edge_or_loop,
  zero_by_cycle,
  zero_by_direction_or_color_rule,
};

inline std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::admissible_tree: return "admissible_tree";
    case Classification::zero_by_single_edge_or_loop: return "zero_by_single_edge_or_loop";
    case Classification::zero_by_cycle: return "zero_by_cycle";
    case Classification::zero_by_direction_or_color_rule: return "zero_by_direction_or_color_rule";
  }
  return "?";
}

// Tree rules shared by single graphs and gluings.
//   elliptic: thick tree (no loops, every adjacent pair >= 2 edges, tree).
//   iid: fat tree, additionally every pair carries edges in one direction only.
//   colored_block: fat-tree shape, colors free.
inline Classification classify(const GraphStats& s, GraphModel model) {
  if (s.has_loop() || s.has_single_edge_pair()) return Classification::zero_by_single_edge_or_loop;
  if (!s.reduced_is_forest() || !s.connected()) return Classification::zero_by_cycle;
  if (model != GraphModel::elliptic)
    for (const auto& p : s.pairs)
      if (!p.unidirectional()) return Classification::zero_by_direction_or_color_rule;
  return Classification::admissible_tree;
}

inline Classification classify(const TraceGraph& g, GraphModel model) { return classify(stats(g), model); }

struct MergedGraph {
  TraceGraph graph;
  bool shared_edge = false;
};

// Identifies vertices of the input graphs along the blocks of sigma.  The
// shared-edge flag compares ordered endpoint blocks and ignores colors.
inline MergedGraph merge_under_cross_partition(const std::vector<TraceGraph>& graphs, const CrossPartition& sigma) {
  if (graphs.size() != sigma.parts().size()) throw InvalidArgumentError("cross partition has the wrong number of parts");
  for (std::size_t j = 0; j < graphs.size(); ++j)
    if (graphs[j].vertex_count() != sigma.parts()[j]) throw InvalidArgumentError("cross partition part size mismatch");
  std::vector<Edge> edges;
  std::map<std::pair<int, int>, std::vector<int>> owners;  // endpoint blocks -> graphs using them
  for (std::size_t j = 0; j < graphs.size(); ++j) {
    for (const auto& e : graphs[j].edges()) {
      const int a = sigma.block_of(static_cast<int>(j), e.from);
      const int b = sigma.block_of(static_cast<int>(j), e.to);
      edges.push_back({a, b, e.color});
      auto& list = owners[{a, b}];
      if (list.empty() || list.back() != static_cast<int>(j)) list.push_back(static_cast<int>(j));
    }
  }
  MergedGraph out;
  for (const auto& [key, list] : owners)
    if (list.size() > 1) out.shared_edge = true;
  out.graph = TraceGraph(sigma.block_count(), std::move(edges));
  return out;
}

}  // namespace emrm
