#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "emrm/limit_calculus.hpp"
#include "emrm/moment_model.hpp"
#include "emrm/parallel.hpp"
#include "emrm/trace_graph.hpp"

namespace emrm {

inline constexpr int kMaxExactTraceOrder = 6;
inline const Integer kMaxExactN{1000000};
inline constexpr int kMaxCirculantOracleN = 15;
inline constexpr int kMaxCovarianceOracleN = 8;
inline constexpr int kMaxCovarianceOracleOrder = 3;

// Finite-N moments of the scaled entries a = x / sqrt(N) of a sparse law.
// An active off-diagonal entry equals xi (x = sqrt(N) xi), so every mixed
// moment of total order >= 1 is (q/N) E[xi^k eta^l]; diagonal moments carry
// N^{-p/2}.
class ExactMomentTable {
 public:
  ExactMomentTable(const SparsePairLaw& law, Integer n) : n_(std::move(n)), q_(law.activation), diagonal_(law.diagonal) {
    require_valid(law);
    check_n();
    pair_atoms_ = law.atoms;
  }
  ExactMomentTable(const SparseScalarLaw& law, Integer n) : n_(std::move(n)), q_(law.activation), diagonal_(law.diagonal) {
    require_valid(law);
    check_n();
    scalar_atoms_ = law.atoms;
  }

  const Integer& n() const { return n_; }
  bool is_pair_law() const { return !pair_atoms_.empty(); }

  // E[xi^k eta^l] over active atoms (scalar laws: independent copies).
  Rational atom(int k, int l) const {
    if (is_pair_law()) {
      Rational m{0};
      for (const auto& a : pair_atoms_) m += a.probability * pow(a.xi, k) * pow(a.eta, l);
      return m;
    }
    return atom_moment(scalar_atoms_, k) * atom_moment(scalar_atoms_, l);
  }

  // E[a^k] for one off-diagonal position (first coordinate of a pair law).
  Rational entry(int k) const {
    if (k == 0) return Rational{1};
    return q_ / Rational(n_) * atom(k, 0);
  }

  // E[a_ij^k a_ji^l], i < j.  Pair laws couple the two positions; scalar laws
  // make them independent.
  Rational pair(int k, int l) const {
    if (k + l == 0) return Rational{1};
    if (!is_pair_law()) return entry(k) * entry(l);
    return q_ / Rational(n_) * atom(k, l);
  }

  // E[(a^{(1)})^blue (a^{(2)})^red] at one position of the two correlated blocks.
  Rational block_position(int blue, int red) const {
    if (blue + red == 0) return Rational{1};
    if (!is_pair_law()) throw InvalidArgumentError("block moments need a pair law");
    return q_ / Rational(n_) * atom(blue, red);
  }

  // E[a_ii^p] = E[d^p] N^{-p/2}.
  SurdValue diagonal(int p) const {
    if (p == 0) return SurdValue(Rational{1});
    if (diagonal_.empty()) return SurdValue(Rational{0});
    const Rational m = atom_moment(diagonal_, p);
    if (m == 0) return SurdValue(Rational{0});
    return SurdValue::sqrt_power(n_, -p) * m;
  }

  // Unscaled E[x^k] = q N^{k/2-1} E[xi^k] for an off-diagonal entry.
  SurdValue raw_moment(int k) const { return raw_pair_moment(k, 0); }
  SurdValue raw_pair_moment(int k, int l) const {
    if (k + l == 0) return SurdValue(Rational{1});
    return SurdValue::sqrt_power(n_, k + l - 2) * (q_ * (is_pair_law() ? atom(k, l) : atom(k, 0) * atom(0, l)));
  }

  // Whether E[xi^k eta^l] = E[xi^l eta^k] for every k + l <= max_total.
  bool exchangeable(int max_total) const {
    if (!is_pair_law()) return true;
    for (int t = 2; t <= max_total; ++t)
      for (int k = 0; k < t - k; ++k)
        if (atom(k, t - k) != atom(t - k, k)) return false;
    return true;
  }

 private:
  void check_n() const {
    if (n_ < 1 || n_ > kMaxExactN) throw GuardError("oracle N must lie in [1, " + kMaxExactN.str() + "]");
  }

  Integer n_;
  Rational q_;
  std::vector<ScalarAtom> diagonal_;
  std::vector<PairAtom> pair_atoms_;
  std::vector<ScalarAtom> scalar_atoms_;
};

namespace detail {

enum class OracleCoupling { elliptic, iid, block };

// E[prod over edges of a_{phi(u) phi(v)}] for an injective labeling phi whose
// relative order is `rank` (identity when null).  Loops use the diagonal law;
// block graphs draw blue edges from block 1 and red edges from block 2 with
// independent diagonals.
inline SurdValue graph_expectation(const GraphStats& s, const ExactMomentTable& t, OracleCoupling coupling,
                                   const std::vector<int>* rank) {
  SurdValue value(Rational{1});
  Rational pair_part{1};
  for (const auto& p : s.pairs) {
    const bool up = rank == nullptr || (*rank)[p.u] < (*rank)[p.v];
    switch (coupling) {
      case OracleCoupling::elliptic:
        pair_part *= up ? t.pair(p.forward, p.backward) : t.pair(p.backward, p.forward);
        break;
      case OracleCoupling::iid:
        pair_part *= t.entry(p.forward) * t.entry(p.backward);
        break;
      case OracleCoupling::block:
        pair_part *= t.block_position(p.forward_blue, p.forward_red) * t.block_position(p.backward_blue, p.backward_red);
        break;
    }
    if (pair_part == 0) return SurdValue(Rational{0});
  }
  value *= pair_part;
  for (int v = 0; v < s.vertex_count; ++v) {
    if (s.loops_at[v] == 0) continue;
    if (coupling == OracleCoupling::block) throw InvalidArgumentError("block loops need colored loop counts");
    value *= t.diagonal(s.loops_at[v]);
  }
  return value;
}

// Loops of a colored graph split by color: E[d1^blue] E[d2^red] N^{-(blue+red)/2}.
inline SurdValue block_loop_factor(const TraceGraph& g, const ExactMomentTable& t) {
  std::vector<std::pair<int, int>> loops(g.vertex_count(), {0, 0});
  for (const auto& e : g.edges()) {
    if (!e.is_loop()) continue;
    (e.color == EdgeColor::red ? loops[e.from].second : loops[e.from].first) += 1;
  }
  SurdValue f(Rational{1});
  for (const auto& [b, r] : loops) f *= t.diagonal(b) * t.diagonal(r);
  return f;
}

inline SurdValue colored_expectation(const TraceGraph& g, const GraphStats& s, const ExactMomentTable& t,
                                     OracleCoupling coupling, const std::vector<int>* rank) {
  if (coupling != OracleCoupling::block) return graph_expectation(s, t, coupling, rank);
  GraphStats no_loops = s;
  std::fill(no_loops.loops_at.begin(), no_loops.loops_at.end(), 0);
  return graph_expectation(no_loops, t, coupling, rank) * block_loop_factor(g, t);
}

inline void check_exact_order(int k, int max) {
  if (k < 1 || k > max) throw GuardError("oracle order " + std::to_string(k) + " outside [1, " + std::to_string(max) + "]");
}

// Orientation-averaged expectation of one trace graph.
inline SurdValue averaged_expectation(const GraphStats& s, const ExactMomentTable& t, OracleCoupling coupling,
                                      bool orientation_free) {
  if (orientation_free) return graph_expectation(s, t, coupling, nullptr);
  std::vector<int> rank(s.vertex_count);
  std::iota(rank.begin(), rank.end(), 0);
  SurdValue total(Rational{0});
  Integer orders{0};
  do {
    total += graph_expectation(s, t, coupling, &rank);
    ++orders;
  } while (std::next_permutation(rank.begin(), rank.end()));
  return total * Rational(Integer{1}, orders);
}

inline SurdValue exact_iid_like_mean(const ExactMomentTable& t, OracleCoupling coupling, int k) {
  const bool orientation_free = coupling != OracleCoupling::elliptic || t.exchangeable(2 * k);
  SurdValue total(Rational{0});
  for (const auto& e : graph_catalog(k)) {
    const Integer count = falling_factorial(t.n() - 1, e.stats.vertex_count - 1);
    if (count == 0) continue;
    total += averaged_expectation(e.stats, t, coupling, orientation_free) * Rational(count);
  }
  return total;
}

}  // namespace detail

// E[Tr(A^k)/N] at finite N:
//   sum over pi of (N-1)!/(N-|pi|)! times the expectation of one injective labeling.
// Elliptic and block take a pair law; block sums both diagonal blocks.
inline SurdValue exact_trace_mean(Model model, const SparsePairLaw& law, const Integer& n, int k) {
  detail::check_exact_order(k, kMaxExactTraceOrder);
  switch (model) {
    case Model::elliptic:
      return detail::exact_iid_like_mean(ExactMomentTable(law, n), detail::OracleCoupling::elliptic, k);
    case Model::block:
      return detail::exact_iid_like_mean(ExactMomentTable(marginal_law(law, false), n), detail::OracleCoupling::iid, k) +
             detail::exact_iid_like_mean(ExactMomentTable(marginal_law(law, true), n), detail::OracleCoupling::iid, k);
    default: break;
  }
  throw InvalidArgumentError(std::string("exact trace mean with a pair law is not available for the ") +
                             std::string(to_string(model)) + " model");
}

// E[Tr C^k] for the circulant ensemble, summing over tuples with
// j_1 + ... + j_k = 0 (mod N).  A tuple with r distinct indices of
// multiplicities m_a contributes q^r N^{1-r} prod E[xi^{m_a}].
inline Rational exact_circulant_trace_mean(const SparseScalarLaw& law, int n, int k) {
  require_valid(law);
  if (n < 1 || n > kMaxCirculantOracleN) throw GuardError("circulant oracle needs 1 <= N <= " + std::to_string(kMaxCirculantOracleN));
  detail::check_exact_order(k, kMaxExactTraceOrder);
  std::map<std::vector<int>, Rational> pattern_value;
  auto value_of = [&](std::vector<int> mult) -> Rational {
    std::sort(mult.begin(), mult.end());
    auto it = pattern_value.find(mult);
    if (it != pattern_value.end()) return it->second;
    Rational v = pow(law.activation, static_cast<int>(mult.size())) * pow(Rational(n), 1 - static_cast<int>(mult.size()));
    for (int m : mult) v *= atom_moment(law.atoms, m);
    pattern_value.emplace(mult, v);
    return v;
  };
  Rational total{0};
  std::vector<int> j(k, 0);
  std::vector<int> count(n, 0);
  // iterate j_1..j_{k-1}; j_k closes the congruence
  while (true) {
    int partial = 0;
    for (int a = 0; a + 1 < k; ++a) partial += j[a];
    j[k - 1] = ((-partial) % n + n) % n;
    std::fill(count.begin(), count.end(), 0);
    for (int a = 0; a < k; ++a) ++count[j[a]];
    std::vector<int> mult;
    bool zero = false;
    for (int c : count) {
      if (c == 1) zero = true;
      if (c > 0) mult.push_back(c);
    }
    if (!zero) total += value_of(mult);
    int a = k - 2;
    while (a >= 0 && ++j[a] == n) j[a--] = 0;
    if (a < 0) break;
  }
  return total;
}

namespace detail {

// Both graphs relabeled onto the blocks of sigma, keeping their own edges.
inline TraceGraph relabel_into(const TraceGraph& g, const CrossPartition& sigma, int origin) {
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) edges.push_back({sigma.block_of(origin, e.from), sigma.block_of(origin, e.to), e.color});
  return TraceGraph(sigma.block_count(), std::move(edges));
}

inline SurdValue exact_graph_covariance_sum(const ExactMomentTable& t, OracleCoupling coupling, const TraceGraph& g1,
                                            const TraceGraph& g2, bool orientation_free) {
  SurdValue total(Rational{0});
  const std::vector<TraceGraph> graphs{g1, g2};
  for_each_cross_partition({g1.vertex_count(), g2.vertex_count()}, [&](const CrossPartition& sigma) {
    const Integer count = falling_factorial(t.n(), sigma.block_count());
    if (count == 0) return;
    const TraceGraph merged = merge_under_cross_partition(graphs, sigma).graph;
    const TraceGraph a = relabel_into(g1, sigma, 0);
    const TraceGraph b = relabel_into(g2, sigma, 1);
    const GraphStats sm = stats(merged);
    const GraphStats sa = stats(a);
    const GraphStats sb = stats(b);
    auto term = [&](const std::vector<int>* rank) {
      return colored_expectation(merged, sm, t, coupling, rank) -
             colored_expectation(a, sa, t, coupling, rank) * colored_expectation(b, sb, t, coupling, rank);
    };
    SurdValue value(Rational{0});
    if (orientation_free) {
      value = term(nullptr);
    } else {
      std::vector<int> rank(sigma.block_count());
      std::iota(rank.begin(), rank.end(), 0);
      Integer orders{0};
      do {
        value += term(&rank);
        ++orders;
      } while (std::next_permutation(rank.begin(), rank.end()));
      value *= Rational(Integer{1}, orders);
    }
    total += value * Rational(count);
  });
  return total;
}

inline Rational exact_circulant_covariance(const SparseScalarLaw& law, int n, int k, int l) {
  // E[Tr C^k Tr C^l]: a joint tuple with r distinct indices of total
  // multiplicities m_a contributes q^r N^{2-r} prod E[xi^{m_a}].
  Rational joint{0};
  std::vector<int> j(k + l, 0);
  std::vector<int> count(n, 0);
  const int total_len = k + l;
  while (true) {
    int s1 = 0;
    int s2 = 0;
    for (int a = 0; a < k; ++a) s1 += j[a];
    for (int a = k; a < total_len; ++a) s2 += j[a];
    if (s1 % n == 0 && s2 % n == 0) {
      std::fill(count.begin(), count.end(), 0);
      for (int a = 0; a < total_len; ++a) ++count[j[a]];
      Rational v{1};
      int r = 0;
      for (int c : count) {
        if (c == 0) continue;
        ++r;
        v *= atom_moment(law.atoms, c);
      }
      if (v != 0) joint += v * pow(law.activation, r) * pow(Rational(n), 2 - r);
    }
    int a = total_len - 1;
    while (a >= 0 && ++j[a] == n) j[a--] = 0;
    if (a < 0) break;
  }
  const Rational mean_k = exact_circulant_trace_mean(law, n, k);
  const Rational mean_l = exact_circulant_trace_mean(law, n, l);
  return (joint - mean_k * mean_l) / Rational(n);
}

inline void check_covariance_guards(const Integer& n, int k, int l) {
  if (n < 1 || n > kMaxCovarianceOracleN) throw GuardError("covariance oracle needs 1 <= N <= " + std::to_string(kMaxCovarianceOracleN));
  check_exact_order(k, kMaxCovarianceOracleOrder);
  check_exact_order(l, kMaxCovarianceOracleOrder);
}

}  // namespace detail

// E[Z_N(k) Z_N(l)] with Z_N(k) = (Tr A^k - E Tr A^k) / sqrt(N), exact.
inline SurdValue exact_fluct_covariance_small(Model model, const SparsePairLaw& law, const Integer& n, int k, int l) {
  detail::check_covariance_guards(n, k, l);
  const ExactMomentTable t(law, n);
  SurdValue total(Rational{0});
  if (model == Model::elliptic) {
    const bool orientation_free = t.exchangeable(k + l);
    for (const auto& e1 : graph_catalog(k))
      for (const auto& e2 : graph_catalog(l))
        total += detail::exact_graph_covariance_sum(t, detail::OracleCoupling::elliptic, e1.graph, e2.graph, orientation_free);
  } else if (model == Model::block) {
    for (EdgeColor c1 : {EdgeColor::blue, EdgeColor::red})
      for (EdgeColor c2 : {EdgeColor::blue, EdgeColor::red})
        for (const auto& e1 : graph_catalog(k))
          for (const auto& e2 : graph_catalog(l))
            total += detail::exact_graph_covariance_sum(t, detail::OracleCoupling::block, e1.graph.colored(c1),
                                                        e2.graph.colored(c2), true);
  } else {
    throw InvalidArgumentError(std::string("exact covariance with a pair law is not available for the ") +
                               std::string(to_string(model)) + " model");
  }
  return total * Rational(Integer{1}, n);
}

inline SurdValue exact_fluct_covariance_small(Model model, const SparseScalarLaw& law, const Integer& n, int k, int l) {
  detail::check_covariance_guards(n, k, l);
  if (model == Model::circulant)
    return SurdValue(detail::exact_circulant_covariance(law, static_cast<int>(n), k, l));
  if (model != Model::iid)
    throw InvalidArgumentError(std::string("exact covariance with a scalar law is not available for the ") +
                               std::string(to_string(model)) + " model");
  const ExactMomentTable t(law, n);
  SurdValue total(Rational{0});
  for (const auto& e1 : graph_catalog(k))
    for (const auto& e2 : graph_catalog(l))
      total += detail::exact_graph_covariance_sum(t, detail::OracleCoupling::iid, e1.graph, e2.graph, true);
  return total * Rational(Integer{1}, n);
}

inline SurdValue exact_trace_mean(Model model, const SparseScalarLaw& law, const Integer& n, int k) {
  detail::check_exact_order(k, kMaxExactTraceOrder);
  if (model == Model::iid) return detail::exact_iid_like_mean(ExactMomentTable(law, n), detail::OracleCoupling::iid, k);
  if (model == Model::circulant) {
    if (n > kMaxCirculantOracleN) throw GuardError("circulant oracle needs N <= " + std::to_string(kMaxCirculantOracleN));
    return SurdValue(exact_circulant_trace_mean(law, static_cast<int>(n), k));
  }
  throw InvalidArgumentError(std::string("exact trace mean with a scalar law is not available for the ") +
                             std::string(to_string(model)) + " model");
}

}  // namespace emrm
