#include <gtest/gtest.h>

#include <set>

#include "brute_force.hpp"
#include "emrm/limit_calculus.hpp"

using namespace emrm;

namespace {

MomentProfile sign_profile(const Rational& rho) { return profile_of_sparse_law(design_correlated_sign_law(rho)); }

// An elliptic profile with asymmetric constants, C_{k,l} != C_{l,k}.
MomentProfile asymmetric_profile() {
  // xi = 2 forces eta = 1; xi = -1/2 leaves eta = +-1.  C_{2,1} = 3/4, C_{1,2} = 0.
  SparsePairLaw law;
  law.atoms = {{Rational{2}, Rational{1}, make_rational(1, 5)},
               {make_rational(-1, 2), Rational{1}, make_rational(3, 10)},
               {make_rational(-1, 2), Rational{-1}, make_rational(1, 2)}};
  return profile_of_sparse_law(law);
}

TraceGraph graph_of(int k, const std::vector<std::vector<int>>& blocks) {
  return graph_of_partition(SetPartition::from_blocks(k, blocks));
}

}  // namespace

TEST(Tau, BackAndForthEdge) {
  const MomentProfile p = sign_profile(make_rational(2, 7));
  const TraceGraph g = graph_of(2, {{0}, {1}});
  EXPECT_EQ(tau(g, Model::elliptic, p), make_rational(2, 7));
  EXPECT_EQ(tau(g, Model::iid, light_scalar_profile()), 0);
}

TEST(Tau, CrossingPairing) {
  const MomentProfile p = sign_profile(make_rational(1, 2));
  EXPECT_EQ(tau(graph_of(4, {{0, 2}, {1, 3}}), Model::elliptic, p), p.pair(2, 2));
  EXPECT_EQ(tau(graph_of(4, {{0, 2}, {1}, {3}}), Model::elliptic, p), make_rational(1, 4));  // two back-and-forth pairs
}

TEST(Tau, RequiresAlphaOne) {
  MomentProfile p = wigner_profile();
  p.alpha = 2;
  EXPECT_THROW(tau(graph_of(2, {{0}, {1}}), Model::elliptic, p), InvalidArgumentError);
}

TEST(Tau, ShortTableRaises) {
  const MomentProfile p = wigner_profile(2);
  EXPECT_THROW(tau(graph_of(4, {{0, 2}, {1, 3}}), Model::elliptic, p), TableTooShortError);
}

TEST(Tau, OrientationMattersForAsymmetricConstants) {
  const MomentProfile p = asymmetric_profile();
  ASSERT_NE(p.pair(2, 1), p.pair(1, 2));
  // a pair with two edges one way and one the other; each labeling order is equally likely
  const TraceGraph g(2, {{0, 1}, {0, 1}, {1, 0}});
  EXPECT_EQ(tau(g, Model::elliptic, p), (p.pair(2, 1) + p.pair(1, 2)) / 2);
}

TEST(ModelReduction, IidMatchesDegenerateElliptic) {
  std::vector<MomentProfile> profiles{light_scalar_profile(), profile_of_sparse_law(skewed_scalar_law())};
  MomentProfile odd = light_scalar_profile();
  for (int k = 3; k <= 8; ++k) odd.scalar_table[k] = make_rational(k * k - 3, k + 1);
  profiles.push_back(odd);
  for (const auto& s : profiles) {
    const MomentProfile d = degenerate_profile_of(s);
    for (int k = 1; k <= 6; ++k)
      for (const auto& e : graph_catalog(k)) EXPECT_EQ(tau(e.graph, Model::iid, s), tau(e.graph, Model::elliptic, d));
  }
}

TEST(LimitMoment, SemicircleRecovery) {
  const auto cat = bf::catalan(6);
  const MomentProfile w = wigner_profile();
  for (int k = 1; k <= 4; ++k) {
    EXPECT_EQ(Rational(cat[k]), limit_trace_moment(Model::elliptic, 2 * k, w)) << "k=" << k;
    EXPECT_EQ(limit_trace_moment(Model::elliptic, 2 * k - 1, w), 0);
  }
}

TEST(LimitMoment, EllipticLowOrders) {
  for (const Rational& rho : {Rational{0}, make_rational(1, 2), Rational{1}, make_rational(-2, 3)}) {
    const MomentProfile p = sign_profile(rho);
    EXPECT_EQ(limit_trace_moment(Model::elliptic, 2, p), rho);
    EXPECT_EQ(limit_trace_moment(Model::elliptic, 4, p), 2 * rho * rho + p.pair(2, 2));
    EXPECT_EQ(limit_trace_moment(Model::elliptic, 1, p), 0);
  }
  EXPECT_EQ(limit_trace_moment(Model::elliptic, 4, sign_profile(1)), 3);
}

TEST(LimitMoment, ClosedWalkModelsVanish) {
  const MomentProfile skew = profile_of_sparse_law(skewed_scalar_law());
  const MomentProfile pair = sign_profile(make_rational(1, 3));
  for (int k = 1; k <= 7; ++k) {
    EXPECT_EQ(limit_trace_moment(Model::iid, k, skew), 0);
    EXPECT_EQ(limit_trace_moment(Model::block, k, pair), 0);
    EXPECT_EQ(limit_trace_moment(Model::centrosymmetric, k, skew), 0);
  }
}

TEST(LimitMoment, OrderGuard) {
  EXPECT_THROW(limit_trace_moment(Model::elliptic, 11, wigner_profile(12)), GuardError);
  EXPECT_THROW(limit_trace_moment(Model::elliptic, 0, wigner_profile()), GuardError);
}

TEST(AsymptoticOrder, Examples) {
  const TraceGraph g = graph_of(2, {{0}, {1}});
  const LimitValue one = asymptotic_order(g, 1);
  EXPECT_EQ(one.kind, LimitValue::Kind::symbolic_order);
  EXPECT_EQ(one.exponent, 0);
  EXPECT_EQ(asymptotic_order(g, 2).exponent, -1);
  const TraceGraph single(3, {{0, 1}, {1, 0}, {1, 2}});
  EXPECT_EQ(asymptotic_order(single, make_rational(1, 2)).kind, LimitValue::Kind::zero_exact);
  EXPECT_EQ(asymptotic_order(graph_of(1, {{0}}), 1).kind, LimitValue::Kind::zero_exact);
}

TEST(AsymptoticOrder, ExponentRecomputedFromEdges) {
  for (const Rational& alpha : {make_rational(1, 2), Rational{1}, Rational{2}})
    for (int k = 1; k <= 6; ++k)
      for (const auto& e : graph_catalog(k)) {
        std::set<std::pair<int, int>> reduced;
        std::map<std::pair<int, int>, int> mult;
        for (const auto& edge : e.graph.edges()) {
          const auto key = std::minmax(edge.from, edge.to);
          reduced.insert(key);
          ++mult[key];
        }
        bool zero = false;
        for (const auto& [key, m] : mult) zero = zero || m == 1;
        const LimitValue v = asymptotic_order(e.graph, alpha);
        if (zero) {
          EXPECT_EQ(v.kind, LimitValue::Kind::zero_exact);
          continue;
        }
        ASSERT_EQ(v.kind, LimitValue::Kind::symbolic_order);
        EXPECT_EQ(v.exponent, Rational(e.graph.vertex_count() - 1) - alpha * static_cast<int>(reduced.size()));
        if (alpha == 2) EXPECT_LT(v.exponent, 0);
      }
}

TEST(CovarianceGraphs, GluingsOfBackAndForthGraphs) {
  const MomentProfile p = sign_profile(make_rational(1, 2));
  const TraceGraph g = graph_of(2, {{0}, {1}});
  EXPECT_EQ(covariance_graphs(g, g, Model::elliptic, p), 2 * p.pair(2, 2));
  EXPECT_EQ(covariance_graphs(graph_of(2, {{0, 1}}), g, Model::elliptic, p), 0);
  const TraceGraph loop = graph_of(1, {{0}});
  EXPECT_EQ(covariance_graphs(loop, loop, Model::elliptic, p), 0);
}

TEST(CovarianceTrace, EllipticLowOrders) {
  for (const Rational& rho : {Rational{0}, make_rational(1, 3), Rational{1}}) {
    const MomentProfile p = sign_profile(rho);
    EXPECT_EQ(covariance_trace(2, 2, Model::elliptic, p), 2 * p.pair(2, 2));
    EXPECT_EQ(covariance_trace(1, 1, Model::elliptic, p), 0);
    EXPECT_EQ(covariance_trace(1, 2, Model::elliptic, p), 0);
  }
}

TEST(CovarianceTrace, Symmetric) {
  const MomentProfile p = asymmetric_profile();
  for (int k = 1; k <= 4; ++k)
    for (int l = k + 1; l <= 4; ++l)
      EXPECT_EQ(covariance_trace(k, l, Model::elliptic, p), covariance_trace(l, k, Model::elliptic, p));
}

TEST(CovarianceTrace, PositiveSemidefiniteForGenuineLaws) {
  for (const MomentProfile& p : {sign_profile(make_rational(1, 2)), sign_profile(make_rational(-1, 5)), asymmetric_profile()}) {
    const Rational a = covariance_trace(2, 2, Model::elliptic, p);
    const Rational b = covariance_trace(2, 3, Model::elliptic, p);
    const Rational c = covariance_trace(3, 3, Model::elliptic, p);
    EXPECT_GE(a, 0);
    EXPECT_GE(c, 0);
    EXPECT_GE(a * c - b * b, 0);
  }
}

// Two glued closed walks are degree balanced at every vertex, while a leaf of a
// tree whose pairs point one way is not; so unidirectional rules leave nothing.
TEST(CovarianceTrace, DirectionRuleModelsHaveNoKernel) {
  const MomentProfile skew = profile_of_sparse_law(skewed_scalar_law());
  const MomentProfile pair = sign_profile(make_rational(1, 2));
  for (int k = 1; k <= 3; ++k)
    for (int l = k; l <= 3; ++l) {
      EXPECT_EQ(covariance_trace(k, l, Model::iid, skew), 0);
      EXPECT_EQ(covariance_trace(k, l, Model::block, pair), 0);
      EXPECT_EQ(covariance_trace(k, l, Model::centrosymmetric, skew), 0);
    }
}

TEST(CovarianceTrace, Guards) {
  EXPECT_THROW(covariance_trace(7, 1, Model::elliptic, wigner_profile()), GuardError);
}

TEST(Wick, PairingSums) {
  const MomentProfile p = sign_profile(make_rational(1, 2));
  EXPECT_EQ(wick_joint({2, 2, 2}, Model::elliptic, p), 0);
  const Rational c22 = covariance_trace(2, 2, Model::elliptic, p);
  EXPECT_EQ(wick_joint({2, 2, 2, 2}, Model::elliptic, p), 3 * c22 * c22);
  EXPECT_EQ(wick_joint({2, 3}, Model::elliptic, p), covariance_trace(2, 3, Model::elliptic, p));
  EXPECT_EQ(wick_joint({}, Model::elliptic, p), 1);
  EXPECT_THROW(wick_joint({1, 1, 1, 1, 1, 1, 1, 1}, Model::elliptic, p), GuardError);
  EXPECT_EQ(wick_joint({2, 2, 2, 2}, Model::circulant, light_scalar_profile()), 12);
}

TEST(Circulant, LimitMoments) {
  const MomentProfile light = light_scalar_profile();
  EXPECT_EQ(circulant_limit_moment(2, light), 1);
  MomentProfile c = light_scalar_profile();
  c.scalar_table[3] = make_rational(5, 3);
  EXPECT_EQ(circulant_limit_moment(3, c), make_rational(5, 3));
  MomentProfile ones = light_scalar_profile();
  for (int k = 2; k <= 8; ++k) ones.scalar_table[k] = 1;
  EXPECT_EQ(circulant_limit_moment(4, ones), 4);
  EXPECT_EQ(circulant_limit_moment(4, ones, CirculantFormula::uncorrected), 7);
  // {6}, {4,2}, {3,3}, {2,2,2}: 1 + 15 + 20/2 + 90/6
  EXPECT_EQ(circulant_limit_moment(6, ones), 41);
  EXPECT_EQ(limit_trace_moment(Model::circulant, 4, ones), 4);
}

TEST(Circulant, LimitMomentMatchesPairingCount) {
  // For the light profile only all-2 multisets survive: k!/(2^{k/2} (k/2)!) = (k-1)!!
  for (int k = 2; k <= 8; k += 2)
    EXPECT_EQ(circulant_limit_moment(k, light_scalar_profile()), Rational(bf::double_factorial_odd(k)));
}

TEST(Circulant, Kernel) {
  EXPECT_EQ(circulant_covariance(2, 2), 2);
  EXPECT_EQ(circulant_covariance(1, 2), 0);
  EXPECT_EQ(circulant_covariance(1, 1), 1);
  EXPECT_EQ(circulant_covariance(4, 4), 24);
  EXPECT_EQ(covariance_trace(3, 3, Model::circulant, light_scalar_profile()), 6);
}

TEST(Catalog, ConcurrentFirstUseIsConsistent) {
  std::vector<std::size_t> sizes(8);
  parallel_for(sizes.size(), [&](std::size_t i) { sizes[i] = graph_catalog(7).size(); }, 4);
  for (auto s : sizes) EXPECT_EQ(Integer(s), bf::bell(8)[7]);
}
