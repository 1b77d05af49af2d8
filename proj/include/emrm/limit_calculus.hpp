#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <string>
#include <vector>

#include "emrm/moment_model.hpp"
#include "emrm/parallel.hpp"
#include "emrm/trace_graph.hpp"

namespace emrm {

inline constexpr int kMaxLimitMoment = 10;
inline constexpr int kMaxCovarianceOrder = 6;
inline constexpr int kMaxWickArity = 6;
inline constexpr int kMaxOrientationVertices = 9;

struct LimitValue {
  enum class Kind { exact, zero_exact, symbolic_order };
  Kind kind = Kind::zero_exact;
  Rational value{0};     // exact
  Rational exponent{0};  // symbolic_order: the term scales like N^exponent

  static LimitValue exact(Rational v) { return {Kind::exact, std::move(v), Rational{0}}; }
  static LimitValue zero() { return {Kind::zero_exact, Rational{0}, Rational{0}}; }
  static LimitValue order(Rational e) { return {Kind::symbolic_order, Rational{0}, std::move(e)}; }

  std::string to_string() const {
    switch (kind) {
      case Kind::exact: return emrm::to_string(value);
      case Kind::zero_exact: return "0";
      case Kind::symbolic_order: return "O(N^" + emrm::to_string(exponent) + ")";
    }
    return "?";
  }
};

inline GraphModel graph_model_of(Model m) {
  switch (m) {
    case Model::elliptic: return GraphModel::elliptic;
    case Model::iid: return GraphModel::iid;
    case Model::block:
    case Model::centrosymmetric: return GraphModel::colored_block;
    case Model::circulant: break;
  }
  throw InvalidArgumentError("the circulant model has no trace-graph expansion");
}

// Average over all relative orders of the vertex labels of the product of
// weight(a, b) over adjacent pairs, where a counts the edges leaving the
// lower-ranked endpoint.  An injective labeling realizes each relative order
// equally often, so this is the exact pair contribution of a law whose joint
// moments depend on orientation.  For orientation-free weights it is the plain
// product.
template <typename T, typename Weight>
T oriented_pair_product(const GraphStats& s, Weight&& weight) {
  bool symmetric = true;
  for (const auto& p : s.pairs)
    if (!(weight(p.forward, p.backward) == weight(p.backward, p.forward))) {
      symmetric = false;
      break;
    }
  if (symmetric) {
    T product{1};
    for (const auto& p : s.pairs) product *= weight(p.forward, p.backward);
    return product;
  }
  if (s.vertex_count > kMaxOrientationVertices)
    throw GuardError("orientation average over more than " + std::to_string(kMaxOrientationVertices) + " vertices");
  std::vector<int> rank(s.vertex_count);
  std::iota(rank.begin(), rank.end(), 0);
  T total{0};
  Integer orders{0};
  do {
    T product{1};
    for (const auto& p : s.pairs)
      product *= rank[p.u] < rank[p.v] ? weight(p.forward, p.backward) : weight(p.backward, p.forward);
    total += product;
    ++orders;
  } while (std::next_permutation(rank.begin(), rank.end()));
  total *= Rational(Integer{1}, orders);
  return total;
}

// Pair table seen by the colored-graph rules: C_{blue,red}.  The block model
// uses the profile's own pair table; the centrosymmetric model its tilde
// transform with C_{r,s} = C_{r+s}.
inline MomentProfile colored_profile(Model model, const MomentProfile& profile) {
  if (model == Model::block) return profile;
  if (model != Model::centrosymmetric) throw InvalidArgumentError("colored profile requested for a non-block model");
  MomentProfile out;
  out.alpha = profile.alpha;
  out.kmax = profile.kmax;
  const TildeTables t = tilde_transform(profile, self_pair_table(profile, profile.kmax), profile.kmax);
  out.pair_table = t.mixed;
  for (const auto& [k, v] : t.plus) out.scalar_table[k] = v;
  return out;
}

namespace detail {

inline void require_alpha_one(const MomentProfile& p) {
  if (p.alpha != 1) throw InvalidArgumentError("exact limits need alpha = 1, got " + to_string(p.alpha));
}

// tau on precomputed stats; `colored` must already be the colored profile for
// block-type models.
inline Rational tau_from_stats(const GraphStats& s, Model model, const MomentProfile& p) {
  const GraphModel gm = graph_model_of(model);
  if (classify(s, gm) != Classification::admissible_tree) return Rational{0};
  switch (gm) {
    case GraphModel::elliptic:
      return oriented_pair_product<Rational>(s, [&](int a, int b) { return p.pair(a, b); });
    case GraphModel::iid: {
      Rational product{1};
      for (const auto& pr : s.pairs) product *= p.scalar(pr.total());
      return product;
    }
    case GraphModel::colored_block: {
      Rational product{1};
      for (const auto& pr : s.pairs) {
        const int blue = pr.forward_blue + pr.backward_blue;
        const int red = pr.forward_red + pr.backward_red;
        if (blue + red != pr.total()) throw InvalidArgumentError("colored model needs every edge colored");
        product *= p.pair(blue, red);
      }
      return product;
    }
  }
  return Rational{0};
}

struct CatalogEntry {
  SetPartition partition;
  TraceGraph graph;
  GraphStats stats;
};

// Trace graphs of all partitions of {1..k}; built once per k, then read-only.
class GraphCatalog {
 public:
  static const std::vector<CatalogEntry>& of(int k) {
    static GraphCatalog instance;
    {
      std::shared_lock lock(instance.mutex_);
      auto it = instance.entries_.find(k);
      if (it != instance.entries_.end()) return *it->second;
    }
    auto built = std::make_unique<std::vector<CatalogEntry>>();
    for_each_set_partition(k, [&](const SetPartition& pi) {
      TraceGraph g = graph_of_partition(pi);
      GraphStats s = stats(g);
      built->push_back({pi, std::move(g), std::move(s)});
    });
    std::unique_lock lock(instance.mutex_);
    auto [it, inserted] = instance.entries_.try_emplace(k, std::move(built));
    return *it->second;
  }

 private:
  std::shared_mutex mutex_;
  std::map<int, std::unique_ptr<std::vector<CatalogEntry>>> entries_;
};

inline void check_order(int k, int max, const char* what) {
  if (k < 1 || k > max)
    throw GuardError(std::string(what) + " order " + std::to_string(k) + " outside [1, " + std::to_string(max) + "]");
}

}  // namespace detail

inline const std::vector<detail::CatalogEntry>& graph_catalog(int k) { return detail::GraphCatalog::of(k); }

// tau[g] for an alpha = 1 profile: product of limit constants over the pairs
// of an admissible tree, 0 otherwise.  For the centrosymmetric model pass the
// scalar profile; its tilde transform is applied here.
inline Rational tau(const TraceGraph& g, Model model, const MomentProfile& profile) {
  detail::require_alpha_one(profile);
  if (model == Model::centrosymmetric)
    return detail::tau_from_stats(stats(g), model, colored_profile(model, profile));
  return detail::tau_from_stats(stats(g), model, profile);
}

// Order N^{|V|-1-alpha p} of the contribution of g, or an exact zero when a
// pair carries a single edge or a vertex a single loop.
inline LimitValue asymptotic_order(const TraceGraph& g, const Rational& alpha) {
  const GraphStats s = stats(g);
  if (s.has_single_edge_pair() || s.has_single_loop()) return LimitValue::zero();
  return LimitValue::order(Rational(s.vertex_count - 1) - alpha * s.reduced_edge_count);
}

enum class CirculantFormula { corrected, uncorrected };

// lim E[Tr C^k] for the circulant ensemble.  The corrected form divides each
// multiset term by the factorials of its part multiplicities.
inline Rational circulant_limit_moment(int k, const MomentProfile& profile,
                                       CirculantFormula formula = CirculantFormula::corrected) {
  detail::require_alpha_one(profile);
  if (k < 1) throw InvalidArgumentError("circulant moment order must be positive");
  Rational total{0};
  for (const auto& parts : enumerate_integer_partitions_min2(k)) {
    Rational term{factorial(k)};
    std::map<int, int> multiplicity;
    for (int m : parts) {
      term /= Rational(factorial(m));
      term *= profile.scalar(m);
      ++multiplicity[m];
    }
    if (formula == CirculantFormula::corrected)
      for (const auto& [m, count] : multiplicity) term /= Rational(factorial(count));
    total += term;
  }
  return total;
}

// Limit kernel of the circulant fluctuations: k! when k = l, else 0.
inline Rational circulant_covariance(int k, int l) {
  if (k < 1 || l < 1) throw InvalidArgumentError("circulant covariance orders must be positive");
  return k == l ? Rational(factorial(k)) : Rational{0};
}

// lim E[Tr(A^k)/N].  Block-type models sum both diagonal blocks (normalized by
// the block size).  For the circulant model this is lim E[Tr C^k].
inline Rational limit_trace_moment(Model model, int k, const MomentProfile& profile) {
  detail::require_alpha_one(profile);
  detail::check_order(k, kMaxLimitMoment, "limit moment");
  if (model == Model::circulant) return circulant_limit_moment(k, profile);
  Rational total{0};
  if (model == Model::elliptic || model == Model::iid) {
    for (const auto& e : graph_catalog(k)) total += detail::tau_from_stats(e.stats, model, profile);
    return total;
  }
  const MomentProfile colored = colored_profile(model, profile);
  for (EdgeColor c : {EdgeColor::blue, EdgeColor::red})
    for (const auto& e : graph_catalog(k)) total += detail::tau_from_stats(stats(e.graph.colored(c)), model, colored);
  return total;
}

namespace detail {

// A graph whose own loops or reduced cycles survive every gluing (gluing is
// injective on each graph) can never enter an admissible tree.
inline bool may_glue(const GraphStats& s) { return !s.has_loop() && s.reduced_is_forest(); }

inline Rational covariance_graphs_colored(const TraceGraph& g1, const TraceGraph& g2, Model model,
                                          const MomentProfile& colored) {
  if (!may_glue(stats(g1)) || !may_glue(stats(g2))) return Rational{0};
  Rational total{0};
  const std::vector<TraceGraph> pair{g1, g2};
  for_each_cross_partition({g1.vertex_count(), g2.vertex_count()}, [&](const CrossPartition& sigma) {
    const MergedGraph merged = merge_under_cross_partition(pair, sigma);
    if (!merged.shared_edge) return;
    total += tau_from_stats(stats(merged.graph), model, colored);
  });
  return total;
}

}  // namespace detail

// Sum of delta(sigma) over gluings of g1 and g2 that share an edge.  For the
// block-type models g1 and g2 carry their colors; the caller sums colorings.
inline Rational covariance_graphs(const TraceGraph& g1, const TraceGraph& g2, Model model, const MomentProfile& profile) {
  detail::require_alpha_one(profile);
  if (model == Model::centrosymmetric)
    return detail::covariance_graphs_colored(g1, g2, model, colored_profile(model, profile));
  return detail::covariance_graphs_colored(g1, g2, model, profile);
}

// Limit Cov(z(k), z(l)).
inline Rational covariance_trace(int k, int l, Model model, const MomentProfile& profile) {
  detail::require_alpha_one(profile);
  detail::check_order(k, kMaxCovarianceOrder, "covariance");
  detail::check_order(l, kMaxCovarianceOrder, "covariance");
  if (model == Model::circulant) return circulant_covariance(k, l);

  const bool colored_model = model == Model::block || model == Model::centrosymmetric;
  const MomentProfile effective = colored_model ? colored_profile(model, profile) : profile;
  std::vector<const detail::CatalogEntry*> left;
  std::vector<const detail::CatalogEntry*> right;
  for (const auto& e : graph_catalog(k))
    if (detail::may_glue(e.stats)) left.push_back(&e);
  for (const auto& e : graph_catalog(l))
    if (detail::may_glue(e.stats)) right.push_back(&e);

  std::vector<Rational> partial(left.size());
  parallel_for(left.size(), [&](std::size_t i) {
    Rational sum{0};
    for (const auto* r : right) {
      if (!colored_model) {
        sum += detail::covariance_graphs_colored(left[i]->graph, r->graph, model, effective);
        continue;
      }
      for (EdgeColor c1 : {EdgeColor::blue, EdgeColor::red})
        for (EdgeColor c2 : {EdgeColor::blue, EdgeColor::red})
          sum += detail::covariance_graphs_colored(left[i]->graph.colored(c1), r->graph.colored(c2), model, effective);
    }
    partial[i] = sum;
  });
  Rational total{0};
  for (const auto& p : partial) total += p;
  return total;
}

// Joint moment E[z(k_1) ... z(k_r)] of the limiting Gaussian family.
inline Rational wick_joint(const std::vector<int>& ks, Model model, const MomentProfile& profile) {
  if (ks.size() > static_cast<std::size_t>(kMaxWickArity))
    throw GuardError("Wick joint moment of more than " + std::to_string(kMaxWickArity) + " variables");
  const int r = static_cast<int>(ks.size());
  if (r % 2 != 0) return Rational{0};
  std::map<std::pair<int, int>, Rational> cache;
  auto cov = [&](int a, int b) -> const Rational& {
    const auto key = std::minmax(a, b);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, covariance_trace(key.first, key.second, model, profile)).first;
    return it->second;
  };
  Rational total{0};
  for (const auto& matching : enumerate_pair_partitions(r)) {
    Rational product{1};
    for (const auto& block : matching.blocks()) product *= cov(ks[block[0]], ks[block[1]]);
    total += product;
  }
  return total;
}

}  // namespace emrm
