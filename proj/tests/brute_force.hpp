#pragma once

// Direct tuple-enumeration expectations for small matrices.  Nothing here
// goes through partitions or trace graphs: every matrix position is mapped to
// an independent random variable (with one or more coordinates), and joint
// moments are computed from the atoms of that variable.

#include <functional>
#include <map>
#include <vector>

#include "emrm/moment_model.hpp"
#include "emrm/rational.hpp"

namespace bf {

using emrm::Integer;
using emrm::Rational;
using emrm::SurdValue;

// A finite random vector: each atom is a coordinate vector with a probability.
// Entries scale by N^{-1/2} when `diagonal_scaled` holds.
struct Variable {
  std::vector<std::pair<std::vector<Rational>, Rational>> atoms;
  bool diagonal_scaled = false;
};

// E[prod_c coord_c^{count_c}] for one variable.
inline SurdValue joint_moment(const Variable& v, const std::vector<int>& counts, int n) {
  Rational m{0};
  for (const auto& [coords, p] : v.atoms) {
    Rational term = p;
    for (std::size_t c = 0; c < counts.size(); ++c) term *= emrm::pow(coords[c], counts[c]);
    m += term;
  }
  int total = 0;
  for (int c : counts) total += c;
  if (v.diagonal_scaled && total > 0) return SurdValue::sqrt_power(Integer(n), -total) * m;
  return SurdValue(m);
}

// Matrix position -> (variable id, coordinate).
struct Position {
  long id;
  int coord;
};

struct Ensemble {
  int size = 0;
  int n = 0;  // N in the 1/sqrt(N) diagonal scaling
  std::function<Position(int, int)> locate;
  std::function<const Variable&(long)> variable;
};

// Off-diagonal pair variable: active with probability q/N, then (xi, eta).
inline Variable pair_variable(const emrm::SparsePairLaw& law, int n) {
  Variable v;
  const Rational act = law.activation / Rational(n);
  v.atoms.push_back({{Rational{0}, Rational{0}}, 1 - act});
  for (const auto& a : law.atoms) v.atoms.push_back({{a.xi, a.eta}, act * a.probability});
  return v;
}

inline Variable scalar_variable(const std::vector<emrm::ScalarAtom>& atoms, const Rational& activation, int n) {
  Variable v;
  const Rational act = activation / Rational(n);
  v.atoms.push_back({{Rational{0}}, 1 - act});
  for (const auto& a : atoms) v.atoms.push_back({{a.value}, act * a.probability});
  return v;
}

inline Variable diagonal_variable(const std::vector<emrm::ScalarAtom>& atoms) {
  Variable v;
  v.diagonal_scaled = true;
  if (atoms.empty()) v.atoms.push_back({{Rational{0}}, Rational{1}});
  for (const auto& a : atoms) v.atoms.push_back({{a.value}, a.probability});
  return v;
}

// Sum over closed walks i_1 -> ... -> i_k -> i_1 of the expectation of the
// product of the entries visited, for each walk in `walks` jointly.
inline SurdValue walk_expectation(const Ensemble& e, const std::vector<std::vector<int>>& walks) {
  std::map<long, std::vector<int>> counts;
  for (const auto& w : walks) {
    const int k = static_cast<int>(w.size());
    for (int a = 0; a < k; ++a) {
      const Position p = e.locate(w[a], w[(a + 1) % k]);
      auto& c = counts[p.id];
      if (static_cast<int>(c.size()) <= p.coord) c.resize(p.coord + 1, 0);
      ++c[p.coord];
    }
  }
  SurdValue value(Rational{1});
  for (auto& [id, c] : counts) {
    const Variable& v = e.variable(id);
    c.resize(v.atoms.front().first.size(), 0);
    value *= joint_moment(v, c, e.n);
    if (value == SurdValue(Rational{0})) break;
  }
  return value;
}

inline void for_each_tuple(int size, int length, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> t(length, 0);
  while (true) {
    visit(t);
    int pos = length - 1;
    while (pos >= 0 && ++t[pos] == size) t[pos--] = 0;
    if (pos < 0) return;
  }
}

// E[Tr(A^k)].
inline SurdValue trace_expectation(const Ensemble& e, int k) {
  SurdValue total(Rational{0});
  for_each_tuple(e.size, k, [&](const std::vector<int>& w) { total += walk_expectation(e, {w}); });
  return total;
}

// Cov(Tr A^k, Tr A^l).
inline SurdValue trace_covariance(const Ensemble& e, int k, int l) {
  SurdValue joint(Rational{0});
  for_each_tuple(e.size, k, [&](const std::vector<int>& w1) {
    for_each_tuple(e.size, l, [&](const std::vector<int>& w2) { joint += walk_expectation(e, {w1, w2}); });
  });
  return joint - trace_expectation(e, k) * trace_expectation(e, l);
}

// Ensembles.  Variable ids: diagonal i -> i; off-diagonal use n + row-major.

struct Elliptic {
  Variable off, diag;
  Ensemble e;
  Elliptic(const emrm::SparsePairLaw& law, int n) : off(pair_variable(law, n)), diag(diagonal_variable(law.diagonal)) {
    e.size = e.n = n;
    e.locate = [n](int i, int j) -> Position {
      if (i == j) return {i, 0};
      if (i < j) return {n + static_cast<long>(i) * n + j, 0};
      return {n + static_cast<long>(j) * n + i, 1};
    };
    e.variable = [this, n](long id) -> const Variable& { return id < n ? diag : off; };
  }
};

struct Iid {
  Variable off, diag;
  Ensemble e;
  Iid(const emrm::SparseScalarLaw& law, int n)
      : off(scalar_variable(law.atoms, law.activation, n)), diag(diagonal_variable(law.diagonal)) {
    e.size = e.n = n;
    e.locate = [n](int i, int j) -> Position {
      if (i == j) return {i, 0};
      return {n + static_cast<long>(i) * n + j, 0};
    };
    e.variable = [this, n](long id) -> const Variable& { return id < n ? diag : off; };
  }
};

// diag(M1, M2) of size 2N; (M1_ij, M2_ij) is one pair variable.
struct Block2 {
  Variable off, diag;
  Ensemble e;
  Block2(const emrm::SparsePairLaw& law, int n) : off(pair_variable(law, n)), diag(diagonal_variable(law.diagonal)) {
    e.size = 2 * n;
    e.n = n;
    e.locate = [n](int i, int j) -> Position {
      const int bi = i / n, bj = j / n;
      if (bi != bj) return {-1, 0};  // structural zero
      const int r = i % n, c = j % n;
      if (r == c) return {static_cast<long>(bi) * n + r, 0};
      return {2 * n + static_cast<long>(r) * n + c, bi};
    };
    e.variable = [this, n](long id) -> const Variable& {
      static const Variable zero{{{{Rational{0}, Rational{0}}, Rational{1}}}, false};
      if (id < 0) return zero;
      return id < 2 * n ? diag : off;
    };
  }
};

// c_ij = x_{(i-j) mod N} / sqrt(N) with x = sqrt(N) xi active w.p. q/N, so the
// entry itself is xi.
struct Circulant {
  Variable gen;
  Ensemble e;
  Circulant(const emrm::SparseScalarLaw& law, int n) : gen(scalar_variable(law.atoms, law.activation, n)) {
    e.size = e.n = n;
    e.locate = [n](int i, int j) -> Position { return {((i - j) % n + n) % n, 0}; };
    e.variable = [this](long) -> const Variable& { return gen; };
  }
};

// Catalan numbers by the convolution recurrence.
inline std::vector<Integer> catalan(int count) {
  std::vector<Integer> c{Integer(1)};
  for (int n = 1; n < count; ++n) {
    Integer s{0};
    for (int i = 0; i < n; ++i) s += c[i] * c[n - 1 - i];
    c.push_back(s);
  }
  return c;
}

// Bell numbers by the Bell triangle.
inline std::vector<Integer> bell(int count) {
  std::vector<Integer> out{Integer(1)};
  std::vector<Integer> row{Integer(1)};
  for (int n = 1; n < count; ++n) {
    std::vector<Integer> next{row.back()};
    for (const auto& v : row) next.push_back(next.back() + v);
    out.push_back(next.front());
    row = next;
  }
  return out;
}

inline Integer double_factorial_odd(int r) {  // (r-1)!! for even r
  Integer v{1};
  for (int i = r - 1; i > 1; i -= 2) v *= i;
  return v;
}

}  // namespace bf
