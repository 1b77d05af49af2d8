#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emrm/rational.hpp"

namespace emrm {

inline constexpr int kDefaultKmax = 8;

enum class Model { elliptic, iid, block, centrosymmetric, circulant };

inline std::string_view to_string(Model m) {
  switch (m) {
    case Model::elliptic: return "elliptic";
    case Model::iid: return "iid";
    case Model::block: return "block";
    case Model::centrosymmetric: return "centrosymmetric";
    case Model::circulant: return "circulant";
  }
  return "?";
}

inline std::optional<Model> parse_model(std::string_view s) {
  for (Model m : {Model::elliptic, Model::iid, Model::block, Model::centrosymmetric, Model::circulant})
    if (to_string(m) == s) return m;
  if (s == "block2") return Model::block;
  return std::nullopt;
}

// Models whose limit constants are the mixed pair moments C_{k,l}.
inline bool uses_pair_table(Model m) { return m == Model::elliptic || m == Model::block; }

using PairKey = std::pair<int, int>;
using PairTable = std::map<PairKey, Rational>;
using ScalarTable = std::map<int, Rational>;

// Limit constants of an exploding-moment entry law:
//   E[x_ij^k x_ji^l] / N^{(k+l)/2 - alpha} -> C_{k,l},   E[x^k] / N^{k/2 - alpha} -> C_k.
struct MomentProfile {
  Rational alpha{1};
  PairTable pair_table;
  ScalarTable scalar_table;
  int kmax = kDefaultKmax;
  bool diagonal_bounded = true;

  // C_{k,l} with C_{0,0} = 1 and C_{1,0} = C_{0,1} = 0.
  Rational pair(int k, int l) const {
    if (k < 0 || l < 0) throw InvalidArgumentError("negative moment order");
    if (k + l == 0) return Rational{1};
    if (k + l == 1) return Rational{0};
    auto it = pair_table.find({k, l});
    if (it == pair_table.end())
      throw TableTooShortError("pair table lacks C_{" + std::to_string(k) + "," + std::to_string(l) + "}");
    return it->second;
  }

  // C_k with C_0 = 1 and C_1 = 0.
  Rational scalar(int k) const {
    if (k < 0) throw InvalidArgumentError("negative moment order");
    if (k == 0) return Rational{1};
    if (k == 1) return Rational{0};
    auto it = scalar_table.find(k);
    if (it == scalar_table.end()) throw TableTooShortError("scalar table lacks C_" + std::to_string(k));
    return it->second;
  }

  friend bool operator==(const MomentProfile&, const MomentProfile&) = default;
};

enum class ViolationKind {
  missing_entry,
  variance_mismatch,
  non_finite_value,
  beyond_kmax,
  inconsistent_marginal,
  invalid_parameter,
};

inline std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::missing_entry: return "missing-entry";
    case ViolationKind::variance_mismatch: return "variance-mismatch";
    case ViolationKind::non_finite_value: return "non-finite-value";
    case ViolationKind::beyond_kmax: return "beyond-kmax";
    case ViolationKind::inconsistent_marginal: return "inconsistent-marginal";
    case ViolationKind::invalid_parameter: return "invalid-parameter";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::string detail;
};

struct Diagnostics {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind k) const {
    for (const auto& v : violations)
      if (v.kind == k) return true;
    return false;
  }
  void add(ViolationKind k, std::string detail) { violations.push_back({k, std::move(detail)}); }
  void append(const Diagnostics& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  }
  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += std::string(emrm::to_string(v.kind)) + ": " + v.detail;
    }
    return out;
  }
};

// Checks that the tables `model` needs are present up to kmax and that the
// alpha = 1 unit-variance constraint holds.
inline Diagnostics validate_profile(const MomentProfile& p, Model model) {
  Diagnostics d;
  if (p.alpha <= 0) d.add(ViolationKind::invalid_parameter, "alpha must be positive, got " + to_string(p.alpha));
  if (p.kmax < 2) d.add(ViolationKind::invalid_parameter, "kmax must be at least 2");

  for (const auto& [key, value] : p.pair_table)
    if (key.first + key.second > p.kmax)
      d.add(ViolationKind::beyond_kmax, "C_{" + std::to_string(key.first) + "," + std::to_string(key.second) +
                                            "} exceeds kmax " + std::to_string(p.kmax));
  for (const auto& [k, value] : p.scalar_table)
    if (k > p.kmax) d.add(ViolationKind::beyond_kmax, "C_" + std::to_string(k) + " exceeds kmax " + std::to_string(p.kmax));

  if (uses_pair_table(model)) {
    if (p.pair_table.empty()) {
      d.add(ViolationKind::missing_entry, std::string("pair_table required by the ") + std::string(to_string(model)) + " model");
    } else {
      for (int total = 2; total <= p.kmax; ++total)
        for (int k = 0; k <= total; ++k)
          if (!p.pair_table.count({k, total - k}))
            d.add(ViolationKind::missing_entry,
                  "pair_table lacks C_{" + std::to_string(k) + "," + std::to_string(total - k) + "}");
    }
    if (p.alpha == 1) {
      for (PairKey key : {PairKey{2, 0}, PairKey{0, 2}}) {
        auto it = p.pair_table.find(key);
        if (it != p.pair_table.end() && it->second != 1)
          d.add(ViolationKind::variance_mismatch, "C_{" + std::to_string(key.first) + "," + std::to_string(key.second) +
                                                      "} = " + to_string(it->second) + " but unit variance forces 1");
      }
    }
    if (model == Model::block) {
      for (const auto& [k, c] : p.scalar_table) {
        for (PairKey key : {PairKey{k, 0}, PairKey{0, k}}) {
          auto it = p.pair_table.find(key);
          if (it != p.pair_table.end() && it->second != c)
            d.add(ViolationKind::inconsistent_marginal,
                  "C_{" + std::to_string(key.first) + "," + std::to_string(key.second) + "} differs from C_" + std::to_string(k));
        }
      }
    }
  } else {
    if (p.scalar_table.empty()) {
      d.add(ViolationKind::missing_entry, std::string("scalar_table required by the ") + std::string(to_string(model)) + " model");
    } else {
      for (int k = 2; k <= p.kmax; ++k)
        if (!p.scalar_table.count(k)) d.add(ViolationKind::missing_entry, "scalar_table lacks C_" + std::to_string(k));
    }
    if (p.alpha == 1) {
      auto it = p.scalar_table.find(2);
      if (it != p.scalar_table.end() && it->second != 1)
        d.add(ViolationKind::variance_mismatch, "C_2 = " + to_string(it->second) + " but unit variance forces 1");
    }
  }
  for (const auto& [k, c] : p.scalar_table)
    for (PairKey key : {PairKey{k, 0}, PairKey{0, k}})
      if (uses_pair_table(model) && !p.pair_table.empty() && !p.pair_table.count(key))
        d.add(ViolationKind::missing_entry, "C_" + std::to_string(k) + " present without its pair-table image");
  return d;
}

// ---------------------------------------------------------------------------
// Sparse atomic laws.  An off-diagonal entry (pair) is active with
// probability q/N; an active entry takes the value sqrt(N)*xi (and sqrt(N)*eta
// for its partner).  Such a law realizes alpha = 1 with C_{k,l} = q E[xi^k eta^l].

struct PairAtom {
  Rational xi;
  Rational eta;
  Rational probability;
  friend bool operator==(const PairAtom&, const PairAtom&) = default;
};

struct ScalarAtom {
  Rational value;
  Rational probability;
  friend bool operator==(const ScalarAtom&, const ScalarAtom&) = default;
};

struct SparsePairLaw {
  Rational activation{1};  // q
  std::vector<PairAtom> atoms;
  std::vector<ScalarAtom> diagonal;  // bounded diagonal law; empty means x_ii = 0
  friend bool operator==(const SparsePairLaw&, const SparsePairLaw&) = default;
};

// Scalar specialization used by the iid, circulant and centrosymmetric models.
// `diagonal` only applies to the iid model.
struct SparseScalarLaw {
  Rational activation{1};
  std::vector<ScalarAtom> atoms;
  std::vector<ScalarAtom> diagonal;
  friend bool operator==(const SparseScalarLaw&, const SparseScalarLaw&) = default;
};

inline Rational atom_moment(const std::vector<ScalarAtom>& atoms, int k) {
  Rational m{0};
  for (const auto& a : atoms) m += a.probability * pow(a.value, k);
  if (atoms.empty() && k == 0) m = 1;
  return m;
}

// E[xi^k eta^l] over the active-pair atoms.
inline Rational atom_moment(const SparsePairLaw& law, int k, int l) {
  Rational m{0};
  for (const auto& a : law.atoms) m += a.probability * pow(a.xi, k) * pow(a.eta, l);
  return m;
}

namespace detail {

inline void validate_diagonal(const std::vector<ScalarAtom>& diagonal, Diagnostics& d) {
  if (diagonal.empty()) return;
  Rational total{0};
  for (const auto& a : diagonal) {
    if (a.probability < 0) d.add(ViolationKind::invalid_parameter, "negative diagonal atom probability");
    total += a.probability;
  }
  if (total != 1) d.add(ViolationKind::invalid_parameter, "diagonal probabilities sum to " + to_string(total));
  if (atom_moment(diagonal, 1) != 0) d.add(ViolationKind::invalid_parameter, "diagonal law is not centered");
  if (atom_moment(diagonal, 2) > 1) d.add(ViolationKind::variance_mismatch, "diagonal variance exceeds 1");
}

inline void validate_activation(const Rational& q, Diagnostics& d) {
  if (q <= 0) d.add(ViolationKind::invalid_parameter, "activation q must be positive");
}

}  // namespace detail

inline Diagnostics validate_law(const SparsePairLaw& law) {
  Diagnostics d;
  detail::validate_activation(law.activation, d);
  if (law.atoms.empty()) d.add(ViolationKind::missing_entry, "pair law has no atoms");
  Rational total{0};
  for (const auto& a : law.atoms) {
    if (a.probability < 0) d.add(ViolationKind::invalid_parameter, "negative atom probability");
    total += a.probability;
  }
  if (total != 1) d.add(ViolationKind::invalid_parameter, "atom probabilities sum to " + to_string(total));
  if (atom_moment(law, 1, 0) != 0 || atom_moment(law, 0, 1) != 0)
    d.add(ViolationKind::invalid_parameter, "pair law is not centered");
  if (law.activation * atom_moment(law, 2, 0) != 1 || law.activation * atom_moment(law, 0, 2) != 1)
    d.add(ViolationKind::variance_mismatch, "q E[xi^2] and q E[eta^2] must both equal 1");
  detail::validate_diagonal(law.diagonal, d);
  return d;
}

inline Diagnostics validate_law(const SparseScalarLaw& law) {
  Diagnostics d;
  detail::validate_activation(law.activation, d);
  if (law.atoms.empty()) d.add(ViolationKind::missing_entry, "scalar law has no atoms");
  Rational total{0};
  for (const auto& a : law.atoms) {
    if (a.probability < 0) d.add(ViolationKind::invalid_parameter, "negative atom probability");
    total += a.probability;
  }
  if (total != 1) d.add(ViolationKind::invalid_parameter, "atom probabilities sum to " + to_string(total));
  if (atom_moment(law.atoms, 1) != 0) d.add(ViolationKind::invalid_parameter, "scalar law is not centered");
  if (law.activation * atom_moment(law.atoms, 2) != 1)
    d.add(ViolationKind::variance_mismatch, "q E[xi^2] must equal 1");
  detail::validate_diagonal(law.diagonal, d);
  return d;
}

class InvalidLawError : public Error {
 public:
  explicit InvalidLawError(const Diagnostics& d) : Error("invalid law: " + d.to_string()) {}
};

template <typename Law>
void require_valid(const Law& law) {
  if (auto d = validate_law(law); !d.ok()) throw InvalidLawError(d);
}

// C_{k,l} = q E[xi^k eta^l] for 2 <= k+l <= kmax, alpha = 1.
inline MomentProfile profile_of_sparse_law(const SparsePairLaw& law, int kmax = kDefaultKmax) {
  require_valid(law);
  MomentProfile p;
  p.kmax = kmax;
  for (int total = 2; total <= kmax; ++total)
    for (int k = 0; k <= total; ++k) p.pair_table[{k, total - k}] = law.activation * atom_moment(law, k, total - k);
  return p;
}

// C_k = q E[xi^k] for 2 <= k <= kmax, alpha = 1.
inline MomentProfile profile_of_sparse_law(const SparseScalarLaw& law, int kmax = kDefaultKmax) {
  require_valid(law);
  MomentProfile p;
  p.kmax = kmax;
  for (int k = 2; k <= kmax; ++k) p.scalar_table[k] = law.activation * atom_moment(law.atoms, k);
  return p;
}

inline std::vector<ScalarAtom> sign_atoms() {
  return {{Rational{1}, make_rational(1, 2)}, {Rational{-1}, make_rational(1, 2)}};
}

// xi = +-1 uniform; eta = xi with probability (1+rho)/2, else -xi; q = 1.
// Diagonal entries are uniform signs.
inline SparsePairLaw design_correlated_sign_law(const Rational& rho) {
  if (rho < -1 || rho > 1) throw InvalidArgumentError("correlation " + to_string(rho) + " outside [-1, 1]");
  const Rational same = (1 + rho) / 4;
  const Rational flip = (1 - rho) / 4;
  SparsePairLaw law;
  law.activation = 1;
  for (int s : {1, -1}) {
    if (same != 0) law.atoms.push_back({Rational{s}, Rational{s}, same});
    if (flip != 0) law.atoms.push_back({Rational{s}, Rational{-s}, flip});
  }
  // canonical order: (1,1), (1,-1), (-1,1), (-1,-1)
  std::stable_sort(law.atoms.begin(), law.atoms.end(), [](const PairAtom& a, const PairAtom& b) {
    if (a.xi != b.xi) return a.xi > b.xi;
    return a.eta > b.eta;
  });
  law.diagonal = sign_atoms();
  return law;
}

// xi = +-1 uniform, q = 1: E[x^k] = N^{k/2-1} for even k.
inline SparseScalarLaw sign_scalar_law() {
  SparseScalarLaw law;
  law.atoms = sign_atoms();
  law.diagonal = sign_atoms();
  return law;
}

// xi = 2 w.p. 1/5, -1/2 w.p. 4/5; q = 1.  Skewed, so C_3 = 3/2 is non-zero.
inline SparseScalarLaw skewed_scalar_law() {
  SparseScalarLaw law;
  law.atoms = {{Rational{2}, make_rational(1, 5)}, {make_rational(-1, 2), make_rational(4, 5)}};
  law.diagonal = sign_atoms();
  return law;
}

// Marginal laws of the two coordinates of a pair law.
inline SparseScalarLaw marginal_law(const SparsePairLaw& law, bool second) {
  std::map<Rational, Rational> mass;
  for (const auto& a : law.atoms) mass[second ? a.eta : a.xi] += a.probability;
  SparseScalarLaw out;
  out.activation = law.activation;
  for (const auto& [v, p] : mass)
    if (p != 0) out.atoms.push_back({v, p});
  out.diagonal = law.diagonal;
  return out;
}

struct TildeTables {
  ScalarTable plus;    // C~^{(1)}_k, moments of the A + JC block
  ScalarTable minus;   // C~^{(2)}_k, moments of the A - JC block
  PairTable mixed;     // C~_{k,l}, joint moments of matching entries of the two blocks
};

// Binomial convolutions giving the limit constants of the two Weaver blocks.
// Uses C_0 = 1, C_1 = 0 (and C_{0,0} = 1, C_{1,0} = C_{0,1} = 0).
inline TildeTables tilde_transform(const MomentProfile& scalar_source, const PairTable& pair_source, int kmax) {
  MomentProfile pair_view;
  pair_view.pair_table = pair_source;
  TildeTables t;
  for (int k = 2; k <= kmax; ++k) {
    Rational plus{0};
    Rational minus{0};
    for (int r = 0; r <= k; ++r) {
      const Rational term = Rational(binomial(k, r)) * scalar_source.scalar(r) * scalar_source.scalar(k - r);
      plus += term;
      minus += ((k - r) % 2 == 0) ? term : Rational(-term);
    }
    t.plus[k] = plus;
    t.minus[k] = minus;
  }
  for (int total = 2; total <= kmax; ++total) {
    for (int k = 0; k <= total; ++k) {
      const int l = total - k;
      Rational sum{0};
      for (int r = 0; r <= k; ++r)
        for (int s = 0; s <= l; ++s) {
          const Rational term = Rational(binomial(k, r) * binomial(l, s)) * pair_view.pair(r, s) * pair_view.pair(k - r, l - s);
          sum += ((l - s) % 2 == 0) ? term : Rational(-term);
        }
      t.mixed[{k, l}] = sum;
    }
  }
  return t;
}

// Joint moment table of an entry with itself: C_{r,s} = C_{r+s}.  This is the
// pair table that enters the tilde transform for a centrosymmetric matrix,
// where both coordinates of a block entry expand in the same scalar variables.
inline PairTable self_pair_table(const MomentProfile& scalar_source, int kmax) {
  PairTable t;
  for (int total = 2; total <= kmax; ++total)
    for (int k = 0; k <= total; ++k) t[{k, total - k}] = scalar_source.scalar(total);
  return t;
}

// Pair profile an iid model induces inside the elliptic framework:
// C_{k,0} = C_{0,k} = C_k and C_{k,l} = 0 for k, l >= 1.
inline MomentProfile degenerate_profile_of(const MomentProfile& scalar_source) {
  MomentProfile p;
  p.alpha = scalar_source.alpha;
  p.kmax = scalar_source.kmax;
  p.diagonal_bounded = scalar_source.diagonal_bounded;
  p.scalar_table = scalar_source.scalar_table;
  for (int total = 2; total <= p.kmax; ++total)
    for (int k = 0; k <= total; ++k) {
      const int l = total - k;
      if (k == 0 || l == 0) {
        auto it = scalar_source.scalar_table.find(total);
        p.pair_table[{k, l}] = it == scalar_source.scalar_table.end() ? Rational{0} : it->second;
      } else {
        p.pair_table[{k, l}] = 0;
      }
    }
  return p;
}

// Wigner-type profile: only C_{1,1} = 1 and the forced C_{2,0} = C_{0,2} = 1.
inline MomentProfile wigner_profile(int kmax = kDefaultKmax) {
  MomentProfile p;
  p.kmax = kmax;
  for (int total = 2; total <= kmax; ++total)
    for (int k = 0; k <= total; ++k) p.pair_table[{k, total - k}] = 0;
  p.pair_table[{1, 1}] = 1;
  p.pair_table[{2, 0}] = 1;
  p.pair_table[{0, 2}] = 1;
  return p;
}

// Light scalar profile: C_2 = 1, C_k = 0 for k >= 3 (bounded-moment entries).
inline MomentProfile light_scalar_profile(int kmax = kDefaultKmax) {
  MomentProfile p;
  p.kmax = kmax;
  for (int k = 2; k <= kmax; ++k) p.scalar_table[k] = k == 2 ? 1 : 0;
  return p;
}

}  // namespace emrm
