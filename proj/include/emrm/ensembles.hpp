#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/FFT>

#include "emrm/moment_model.hpp"
#include "emrm/random.hpp"

namespace emrm {

inline constexpr int kMaxDenseSampleSize = 4096;

enum class EnsembleKind { elliptic, iid, block2, centrosymmetric, circulant };

inline std::string_view to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::elliptic: return "elliptic";
    case EnsembleKind::iid: return "iid";
    case EnsembleKind::block2: return "block2";
    case EnsembleKind::centrosymmetric: return "centrosymmetric";
    case EnsembleKind::circulant: return "circulant";
  }
  return "?";
}

inline EnsembleKind ensemble_of(Model m) {
  switch (m) {
    case Model::elliptic: return EnsembleKind::elliptic;
    case Model::iid: return EnsembleKind::iid;
    case Model::block: return EnsembleKind::block2;
    case Model::centrosymmetric: return EnsembleKind::centrosymmetric;
    case Model::circulant: return EnsembleKind::circulant;
  }
  return EnsembleKind::elliptic;
}

inline Model model_of(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::elliptic: return Model::elliptic;
    case EnsembleKind::iid: return Model::iid;
    case EnsembleKind::block2: return Model::block;
    case EnsembleKind::centrosymmetric: return Model::centrosymmetric;
    case EnsembleKind::circulant: return Model::circulant;
  }
  return Model::elliptic;
}

enum class Storage { sparse_coo, dense };

inline std::string_view to_string(Storage s) { return s == Storage::dense ? "dense" : "sparse"; }

// Standard normal entries; pair kinds correlate (x_ij, x_ji) (elliptic) or the
// two blocks (block2) with coefficient rho.  Realizes the light profile.
struct GaussianLaw {
  double rho = 0.0;
  friend bool operator==(const GaussianLaw&, const GaussianLaw&) = default;
};

using EntryLaw = std::variant<SparsePairLaw, SparseScalarLaw, GaussianLaw>;

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::elliptic;
  int n = 1;  // block size for block2, full size otherwise
  EntryLaw law = SparseScalarLaw{};
  std::uint64_t seed = 0;
  Storage storage = Storage::sparse_coo;
  bool materialize = true;  // circulant: false keeps only the generator
};

inline bool needs_pair_law(EnsembleKind k) { return k == EnsembleKind::elliptic || k == EnsembleKind::block2; }

inline void validate_spec(const EnsembleSpec& spec) {
  if (spec.n < 1) throw InvalidArgumentError("ensemble size must be positive");
  if (std::holds_alternative<SparsePairLaw>(spec.law)) {
    if (!needs_pair_law(spec.kind))
      throw InvalidArgumentError(std::string("the ") + std::string(to_string(spec.kind)) + " ensemble needs a scalar law");
    require_valid(std::get<SparsePairLaw>(spec.law));
  } else if (std::holds_alternative<SparseScalarLaw>(spec.law)) {
    if (needs_pair_law(spec.kind))
      throw InvalidArgumentError(std::string("the ") + std::string(to_string(spec.kind)) + " ensemble needs a pair law");
    require_valid(std::get<SparseScalarLaw>(spec.law));
  } else {
    const double rho = std::get<GaussianLaw>(spec.law).rho;
    if (!(rho >= -1.0 && rho <= 1.0)) throw InvalidArgumentError("Gaussian correlation outside [-1, 1]");
  }
  const int size = spec.kind == EnsembleKind::block2 ? 2 * spec.n : spec.n;
  if (spec.storage == Storage::dense && spec.materialize && size > kMaxDenseSampleSize)
    throw GuardError("dense storage limited to size " + std::to_string(kMaxDenseSampleSize));
}

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, long>;
using Triplet = Eigen::Triplet<double, long>;

struct MatrixSample {
  EnsembleKind kind = EnsembleKind::elliptic;
  int size = 0;        // matrix dimension
  int normalizer = 0;  // N in Tr(A^k)/N
  std::uint64_t seed = 0;
  Storage storage = Storage::sparse_coo;
  SparseMatrix sparse;
  Eigen::MatrixXd dense;
  std::vector<double> generator;  // circulant: unscaled x_0..x_{N-1}

  bool has_matrix() const { return storage == Storage::dense ? dense.size() > 0 || size == 0 : sparse.rows() == size; }

  Eigen::MatrixXd to_dense() const {
    if (storage == Storage::dense) return dense;
    if (sparse.rows() == size) return Eigen::MatrixXd(sparse);
    if (kind == EnsembleKind::circulant) {
      Eigen::MatrixXd m(size, size);
      const double scale = 1.0 / std::sqrt(static_cast<double>(size));
      for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) m(i, j) = generator[((i - j) % size + size) % size] * scale;
      return m;
    }
    throw InvalidArgumentError("sample holds no matrix");
  }

  SparseMatrix to_sparse() const {
    if (storage == Storage::sparse_coo && sparse.rows() == size) return sparse;
    return to_dense().sparseView();
  }

  // Coordinate dump: header "# kind N seed", then "i j value" per nonzero.
  void write_coo(std::ostream& out) const {
    out << "# " << to_string(kind) << ' ' << size << ' ' << seed << '\n';
    const SparseMatrix m = to_sparse();
    out.precision(17);
    for (long c = 0; c < m.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  }
};

namespace detail {

enum Stream : std::uint64_t { activation = 11, atom_pick = 12, diagonal_pick = 13, diagonal_pick_2 = 14, gauss = 15 };

template <typename Atom>
std::vector<double> cumulative(const std::vector<Atom>& atoms) {
  std::vector<double> c;
  double acc = 0.0;
  for (const auto& a : atoms) {
    acc += to_double(a.probability);
    c.push_back(acc);
  }
  if (!c.empty()) c.back() = 1.0;
  return c;
}

inline std::size_t pick(const std::vector<double>& cdf, double u) {
  for (std::size_t i = 0; i < cdf.size(); ++i)
    if (u < cdf[i]) return i;
  return cdf.size() - 1;
}

// Collects entries either as triplets or straight into a dense matrix.
class EntrySink {
 public:
  EntrySink(int size, Storage storage) : size_(size), storage_(storage) {
    if (storage_ == Storage::dense) dense_ = Eigen::MatrixXd::Zero(size, size);
  }
  void add(long i, long j, double v) {
    if (v == 0.0) return;
    if (storage_ == Storage::dense) dense_(i, j) += v;
    else triplets_.emplace_back(i, j, v);
  }
  void finish(MatrixSample& s) {
    if (storage_ == Storage::dense) {
      s.dense = std::move(dense_);
    } else {
      s.sparse.resize(size_, size_);
      s.sparse.setFromTriplets(triplets_.begin(), triplets_.end());
    }
  }

 private:
  int size_;
  Storage storage_;
  Eigen::MatrixXd dense_;
  std::vector<Triplet> triplets_;
};

// Visits the active positions 0..count-1 of a Bernoulli(p) stream with
// geometric skipping; one stream per (seed, row).
template <typename Visit>
void for_each_active(std::uint64_t seed, std::uint64_t row, std::uint64_t count, double p, Visit&& visit) {
  if (p <= 0.0 || count == 0) return;
  CounterRng rng(seed, Stream::activation, row);
  std::uint64_t pos = 0;
  while (true) {
    const std::uint64_t skip = rng.geometric(p);
    if (skip >= count - pos) return;
    pos += skip;
    visit(pos);
    if (++pos >= count) return;
  }
}

inline double activation_probability(const Rational& q, int n) { return std::min(1.0, to_double(q) / n); }

inline double draw_diagonal(const std::vector<ScalarAtom>& atoms, const std::vector<double>& cdf, std::uint64_t seed,
                            std::uint64_t i, Stream stream) {
  if (atoms.empty()) return 0.0;
  return to_double(atoms[pick(cdf, to_unit(counter_hash({seed, stream, i})))].value);
}

inline void sample_elliptic(const EnsembleSpec& spec, EntrySink& sink) {
  const int n = spec.n;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  if (const auto* g = std::get_if<GaussianLaw>(&spec.law)) {
    const double c = std::sqrt(std::max(0.0, 1.0 - g->rho * g->rho));
    for (int i = 0; i < n; ++i) {
      sink.add(i, i, counter_normal(spec.seed, Stream::gauss, static_cast<std::uint64_t>(i) * n + i) * inv_sqrt_n);
      for (int j = i + 1; j < n; ++j) {
        const std::uint64_t id = static_cast<std::uint64_t>(i) * n + j;
        const double z1 = counter_normal(spec.seed, Stream::gauss, id);
        const double z2 = counter_normal(spec.seed, Stream::gauss + 1, id);
        sink.add(i, j, z1 * inv_sqrt_n);
        sink.add(j, i, (g->rho * z1 + c * z2) * inv_sqrt_n);
      }
    }
    return;
  }
  const auto& law = std::get<SparsePairLaw>(spec.law);
  const auto cdf = cumulative(law.atoms);
  const auto dcdf = cumulative(law.diagonal);
  const double p = activation_probability(law.activation, n);
  for (int i = 0; i < n; ++i) {
    sink.add(i, i, draw_diagonal(law.diagonal, dcdf, spec.seed, i, Stream::diagonal_pick) * inv_sqrt_n);
    for_each_active(spec.seed, i, static_cast<std::uint64_t>(n - i - 1), p, [&](std::uint64_t offset) {
      const long j = i + 1 + static_cast<long>(offset);
      const auto& atom = law.atoms[pick(cdf, to_unit(counter_hash({spec.seed, Stream::atom_pick, std::uint64_t(i), std::uint64_t(j)})))];
      // active entry: x = sqrt(N) xi, so a = x / sqrt(N) = xi
      sink.add(i, j, to_double(atom.xi));
      sink.add(j, i, to_double(atom.eta));
    });
  }
}

inline void sample_iid(const EnsembleSpec& spec, EntrySink& sink) {
  const int n = spec.n;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  if (std::holds_alternative<GaussianLaw>(spec.law)) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        sink.add(i, j, counter_normal(spec.seed, Stream::gauss, static_cast<std::uint64_t>(i) * n + j) * inv_sqrt_n);
    return;
  }
  const auto& law = std::get<SparseScalarLaw>(spec.law);
  const auto cdf = cumulative(law.atoms);
  const auto dcdf = cumulative(law.diagonal);
  const double p = activation_probability(law.activation, n);
  for (int i = 0; i < n; ++i) {
    sink.add(i, i, draw_diagonal(law.diagonal, dcdf, spec.seed, i, Stream::diagonal_pick) * inv_sqrt_n);
    // off-diagonal columns of row i, skipping the diagonal position
    for_each_active(spec.seed, i, static_cast<std::uint64_t>(n - 1), p, [&](std::uint64_t offset) {
      const long j = static_cast<long>(offset) < i ? static_cast<long>(offset) : static_cast<long>(offset) + 1;
      const auto& atom = law.atoms[pick(cdf, to_unit(counter_hash({spec.seed, Stream::atom_pick, std::uint64_t(i), std::uint64_t(j)})))];
      sink.add(i, j, to_double(atom.value));
    });
  }
}

inline void sample_block2(const EnsembleSpec& spec, EntrySink& sink) {
  const int n = spec.n;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  if (const auto* g = std::get_if<GaussianLaw>(&spec.law)) {
    const double c = std::sqrt(std::max(0.0, 1.0 - g->rho * g->rho));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const std::uint64_t id = static_cast<std::uint64_t>(i) * n + j;
        const double z1 = counter_normal(spec.seed, Stream::gauss, id);
        const double z2 = counter_normal(spec.seed, Stream::gauss + 1, id);
        sink.add(i, j, z1 * inv_sqrt_n);
        sink.add(n + i, n + j, (i == j ? z2 : g->rho * z1 + c * z2) * inv_sqrt_n);
      }
    return;
  }
  const auto& law = std::get<SparsePairLaw>(spec.law);
  const auto cdf = cumulative(law.atoms);
  const auto dcdf = cumulative(law.diagonal);
  const double p = activation_probability(law.activation, n);
  for (int i = 0; i < n; ++i) {
    sink.add(i, i, draw_diagonal(law.diagonal, dcdf, spec.seed, i, Stream::diagonal_pick) * inv_sqrt_n);
    sink.add(n + i, n + i, draw_diagonal(law.diagonal, dcdf, spec.seed, i, Stream::diagonal_pick_2) * inv_sqrt_n);
    for_each_active(spec.seed, i, static_cast<std::uint64_t>(n - 1), p, [&](std::uint64_t offset) {
      const long j = static_cast<long>(offset) < i ? static_cast<long>(offset) : static_cast<long>(offset) + 1;
      const auto& atom = law.atoms[pick(cdf, to_unit(counter_hash({spec.seed, Stream::atom_pick, std::uint64_t(i), std::uint64_t(j)})))];
      sink.add(i, j, to_double(atom.xi));
      sink.add(n + i, n + j, to_double(atom.eta));
    });
  }
}

// Independent orbits {(i,j), (n-1-i, n-1-j)} are indexed by the smaller
// row-major position L < n^2 - 1 - L; the center of an odd size is its own orbit.
inline void sample_centrosymmetric(const EnsembleSpec& spec, EntrySink& sink) {
  const long n = spec.n;
  const std::uint64_t cells = static_cast<std::uint64_t>(n) * n;
  const std::uint64_t orbits = (cells + 1) / 2;
  auto place = [&](std::uint64_t L, double v) {
    const long i = static_cast<long>(L / n);
    const long j = static_cast<long>(L % n);
    sink.add(i, j, v);
    if (2 * L + 1 != cells) sink.add(n - 1 - i, n - 1 - j, v);
  };
  if (std::holds_alternative<GaussianLaw>(spec.law)) {
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::uint64_t L = 0; L < orbits; ++L) place(L, counter_normal(spec.seed, Stream::gauss, L) * inv_sqrt_n);
    return;
  }
  const auto& law = std::get<SparseScalarLaw>(spec.law);
  const auto cdf = cumulative(law.atoms);
  const double p = activation_probability(law.activation, static_cast<int>(n));
  // one activation stream per block of n orbit positions keeps row-level parallelism possible
  for (std::uint64_t row = 0; row * n < orbits; ++row) {
    const std::uint64_t begin = row * n;
    const std::uint64_t count = std::min<std::uint64_t>(n, orbits - begin);
    for_each_active(spec.seed, row, count, p, [&](std::uint64_t offset) {
      const std::uint64_t L = begin + offset;
      const auto& atom = law.atoms[pick(cdf, to_unit(counter_hash({spec.seed, Stream::atom_pick, L})))];
      place(L, to_double(atom.value));
    });
  }
}

inline void sample_circulant_generator(const EnsembleSpec& spec, MatrixSample& s) {
  const int n = spec.n;
  s.generator.assign(n, 0.0);
  if (std::holds_alternative<GaussianLaw>(spec.law)) {
    for (int j = 0; j < n; ++j) s.generator[j] = counter_normal(spec.seed, Stream::gauss, j);
    return;
  }
  const auto& law = std::get<SparseScalarLaw>(spec.law);
  const auto cdf = cumulative(law.atoms);
  const double p = activation_probability(law.activation, n);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for_each_active(spec.seed, 0, static_cast<std::uint64_t>(n), p, [&](std::uint64_t j) {
    const auto& atom = law.atoms[pick(cdf, to_unit(counter_hash({spec.seed, Stream::atom_pick, j})))];
    s.generator[j] = to_double(atom.value) * sqrt_n;  // unscaled x_j = sqrt(N) xi
  });
}

}  // namespace detail

// One realization; a deterministic function of the spec.
inline MatrixSample sample(const EnsembleSpec& spec) {
  validate_spec(spec);
  MatrixSample s;
  s.kind = spec.kind;
  s.seed = spec.seed;
  s.storage = spec.storage;
  s.size = spec.kind == EnsembleKind::block2 ? 2 * spec.n : spec.n;
  s.normalizer = spec.n;
  if (spec.kind == EnsembleKind::circulant) {
    detail::sample_circulant_generator(spec, s);
    if (!spec.materialize) return s;
    detail::EntrySink sink(s.size, spec.storage);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.n));
    for (int t = 0; t < spec.n; ++t) {
      if (s.generator[t] == 0.0) continue;
      for (int j = 0; j < spec.n; ++j) sink.add((j + t) % spec.n, j, s.generator[t] * scale);  // c_ij = x_{(i-j) mod N}
    }
    sink.finish(s);
    return s;
  }
  detail::EntrySink sink(s.size, spec.storage);
  switch (spec.kind) {
    case EnsembleKind::elliptic: detail::sample_elliptic(spec, sink); break;
    case EnsembleKind::iid: detail::sample_iid(spec, sink); break;
    case EnsembleKind::block2: detail::sample_block2(spec, sink); break;
    case EnsembleKind::centrosymmetric: detail::sample_centrosymmetric(spec, sink); break;
    case EnsembleKind::circulant: break;
  }
  sink.finish(s);
  return s;
}

// lambda_m = N^{-1/2} sum_j x_j w^{jm}, w = exp(2 pi i / N).
inline std::vector<std::complex<double>> circulant_eigenvalues(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  if (n == 1) return {std::complex<double>(x[0], 0.0)};  // the transform misbehaves at length 1
  std::vector<std::complex<double>> spectrum;
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, x);
  spectrum.resize(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  // the forward transform uses w^{-jm}; conjugate for real input
  for (auto& v : spectrum) v = std::conj(v) * scale;
  return spectrum;
}

struct WeaverReduction {
  Eigen::MatrixXd block1;       // A + JC (odd sizes: bordered by sqrt(2) x, sqrt(2) y, q)
  Eigen::MatrixXd block2;       // A - JC
  Eigen::MatrixXd q;            // orthogonal Q
  Eigen::MatrixXd transformed;  // Q^T M Q
  bool odd = false;
};

inline bool is_centrosymmetric(const Eigen::MatrixXd& m, double tol = 0.0) {
  const long n = m.rows();
  if (m.cols() != n) return false;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (std::abs(m(i, j) - m(n - 1 - i, n - 1 - j)) > tol) return false;
  return true;
}

inline Eigen::MatrixXd counter_identity(long s) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(s, s);
  for (long i = 0; i < s; ++i) j(i, s - 1 - i) = 1.0;
  return j;
}

// Orthogonal reduction of a centrosymmetric matrix to two diagonal blocks.
inline WeaverReduction weaver_reduce(const Eigen::MatrixXd& m) {
  if (!is_centrosymmetric(m)) throw InvalidArgumentError("matrix is not centrosymmetric");
  const long n = m.rows();
  const long s = n / 2;
  const bool odd = n % 2 == 1;
  const Eigen::MatrixXd J = counter_identity(s);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(s, s);
  const double r = std::sqrt(0.5);
  WeaverReduction w;
  w.odd = odd;
  w.q = Eigen::MatrixXd::Zero(n, n);
  const long lower = odd ? s + 1 : s;
  // symmetric columns r[I; J], antisymmetric columns r[I; -J]
  w.q.topLeftCorner(s, s) = r * I;
  w.q.topRightCorner(s, s) = r * I;
  w.q.bottomLeftCorner(s, s) = r * J;
  w.q.bottomRightCorner(s, s) = -r * J;
  if (odd) w.q(s, s) = 1.0;
  const Eigen::MatrixXd A = m.topLeftCorner(s, s);
  const Eigen::MatrixXd C = m.block(lower, 0, s, s);
  w.block2 = A - J * C;
  if (!odd) {
    w.block1 = A + J * C;
  } else {
    w.block1.resize(s + 1, s + 1);
    w.block1.topLeftCorner(s, s) = A + J * C;
    w.block1.block(0, s, s, 1) = std::sqrt(2.0) * m.block(0, s, s, 1);
    w.block1.block(s, 0, 1, s) = std::sqrt(2.0) * m.block(s, 0, 1, s);
    w.block1(s, s) = m(s, s);
  }
  w.transformed = w.q.transpose() * m * w.q;
  return w;
}

inline WeaverReduction weaver_reduce(const MatrixSample& sample) {
  if (sample.kind != EnsembleKind::centrosymmetric) throw InvalidArgumentError("weaver reduction needs a centrosymmetric sample");
  return weaver_reduce(sample.to_dense());
}

// Blocks A + JC and A - JC of an even-size centrosymmetric sample built
// directly from its nonzeros: row i of JC is row n-1-i of M restricted to
// the first s columns.
struct SparseWeaverBlocks {
  SparseMatrix plus;
  SparseMatrix minus;
};

inline SparseWeaverBlocks sparse_weaver_blocks(const MatrixSample& sample) {
  if (sample.kind != EnsembleKind::centrosymmetric) throw InvalidArgumentError("weaver blocks need a centrosymmetric sample");
  if (sample.size % 2 != 0) throw InvalidArgumentError("sparse weaver blocks need an even size");
  const long n = sample.size;
  const long s = n / 2;
  const SparseMatrix m = sample.to_sparse();
  std::vector<Triplet> plus;
  std::vector<Triplet> minus;
  for (long c = 0; c < s; ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      const long i = it.row();
      if (i < s) {
        plus.emplace_back(i, c, it.value());
        minus.emplace_back(i, c, it.value());
      } else {
        // M(i, c) with i >= s is C(i - s, c), which lands in row s-1-(i-s) of JC
        const long row = n - 1 - i;
        plus.emplace_back(row, c, it.value());
        minus.emplace_back(row, c, -it.value());
      }
    }
  SparseWeaverBlocks b;
  b.plus.resize(s, s);
  b.minus.resize(s, s);
  b.plus.setFromTriplets(plus.begin(), plus.end());
  b.minus.setFromTriplets(minus.begin(), minus.end());
  b.plus.prune(0.0);
  b.minus.prune(0.0);
  return b;
}

}  // namespace emrm
