#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "emrm/ensembles.hpp"
#include "emrm/parallel.hpp"
#include "emrm/random.hpp"

namespace emrm {

inline constexpr int kMaxTracePower = 8;
inline constexpr int kDenseSizeLimit = 512;
inline constexpr double kMaxSparseWork = 2e9;  // N * M
inline constexpr double kMaxDenseWork = 2e11;  // N^2 * M
inline constexpr int kDefaultBootstrap = 200;

enum class TracePath { automatic, sparse, dense, eigenvalue };

inline std::string_view to_string(TracePath p) {
  switch (p) {
    case TracePath::automatic: return "auto";
    case TracePath::sparse: return "sparse";
    case TracePath::dense: return "dense";
    case TracePath::eigenvalue: return "eigenvalue";
  }
  return "?";
}

namespace detail {

inline void check_kmax(int kmax) {
  if (kmax < 1 || kmax > kMaxTracePower)
    throw GuardError("trace power " + std::to_string(kmax) + " outside [1, " + std::to_string(kMaxTracePower) + "]");
}

// Tr(A^k) = sum_ij (A^a)_ij (A^b)_ji with a = ceil(k/2), b = floor(k/2).
template <typename Mat, typename Product, typename PairTrace>
std::vector<double> traces_by_halves(const Mat& a, int kmax, Product&& product, PairTrace&& pair_trace) {
  const int half = (kmax + 1) / 2;
  std::vector<Mat> powers;
  powers.push_back(a);
  for (int p = 2; p <= half; ++p) powers.push_back(product(powers.back(), a));
  std::vector<double> out;
  for (int k = 1; k <= kmax; ++k) {
    const int hi = (k + 1) / 2;
    const int lo = k / 2;
    if (lo == 0) out.push_back(pair_trace(powers[0], nullptr));
    else out.push_back(pair_trace(powers[hi - 1], &powers[lo - 1]));
  }
  return out;
}

inline std::vector<double> sparse_traces(const SparseMatrix& a, int kmax) {
  return traces_by_halves(
      a, kmax, [](const SparseMatrix& x, const SparseMatrix& y) { return SparseMatrix((x * y).pruned()); },
      [](const SparseMatrix& x, const SparseMatrix* y) {
        if (y == nullptr) return x.diagonal().sum();
        const SparseMatrix yt = y->transpose();
        return x.cwiseProduct(yt).sum();
      });
}

inline std::vector<double> dense_traces(const Eigen::MatrixXd& a, int kmax) {
  return traces_by_halves(
      a, kmax, [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) { return Eigen::MatrixXd(x * y); },
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd* y) {
        if (y == nullptr) return x.trace();
        return x.cwiseProduct(y->transpose()).sum();
      });
}

inline std::vector<double> eigenvalue_traces(const std::vector<double>& generator, int kmax) {
  const auto lambda = circulant_eigenvalues(generator);
  std::vector<double> out(kmax, 0.0);
  for (const auto& l : lambda) {
    std::complex<double> p{1.0, 0.0};
    for (int k = 1; k <= kmax; ++k) {
      p *= l;
      out[k - 1] += p.real();
    }
  }
  return out;
}

}  // namespace detail

// Tr(A^k) / N for k = 1..kmax, N the sample's normalizer (block size for block2).
inline std::vector<double> trace_powers(const MatrixSample& m, int kmax, TracePath path = TracePath::automatic) {
  detail::check_kmax(kmax);
  if (path == TracePath::automatic) {
    if (m.kind == EnsembleKind::circulant) path = TracePath::eigenvalue;
    else path = m.storage == Storage::dense ? TracePath::dense : TracePath::sparse;
  }
  std::vector<double> raw;
  switch (path) {
    case TracePath::eigenvalue:
      if (m.kind != EnsembleKind::circulant) throw InvalidArgumentError("eigenvalue traces need a circulant sample");
      raw = detail::eigenvalue_traces(m.generator, kmax);
      break;
    case TracePath::dense: raw = detail::dense_traces(m.to_dense(), kmax); break;
    case TracePath::sparse: raw = detail::sparse_traces(m.to_sparse(), kmax); break;
    case TracePath::automatic: break;
  }
  for (auto& v : raw) v /= m.normalizer;
  return raw;
}

struct SampleStats {
  EnsembleSpec spec;
  int n = 0;
  int kmax = 0;
  int replicas = 0;
  int bootstrap = kDefaultBootstrap;
  TracePath path = TracePath::automatic;
  Eigen::MatrixXd traces;         // replicas x kmax, Tr(A^k)/N
  Eigen::VectorXd mean;           // per k
  Eigen::VectorXd mean_se;        // sd / sqrt(M)
  Eigen::MatrixXd z;              // replicas x kmax, sqrt(N) (t - mean)
  Eigen::MatrixXd covariance;     // plug-in (1/M) Z^T Z
  Eigen::MatrixXd covariance_se;  // bootstrap
  std::uint64_t first_seed = 0;   // replica r uses seed + r + 1
};

struct ExperimentOptions {
  int bootstrap = kDefaultBootstrap;
  TracePath path = TracePath::automatic;
  unsigned threads = 0;  // 0: EMRM_THREADS or hardware
};

namespace detail {

inline void check_resources(const EnsembleSpec& spec, int replicas, TracePath path) {
  const double n = spec.kind == EnsembleKind::block2 ? 2.0 * spec.n : spec.n;
  const bool circulant_fast = spec.kind == EnsembleKind::circulant && path != TracePath::dense && path != TracePath::sparse;
  const bool dense = !circulant_fast && (spec.storage == Storage::dense || path == TracePath::dense);
  if (dense && n > kDenseSizeLimit)
    throw GuardError("dense traces limited to size " + std::to_string(kDenseSizeLimit) + "; use sparse storage");
  if (dense && n * n * replicas > kMaxDenseWork) throw GuardError("N^2 * M exceeds the dense work cap");
  if (n * replicas > kMaxSparseWork) throw GuardError("N * M exceeds the work cap");
  const bool gaussian = std::holds_alternative<GaussianLaw>(spec.law);
  if (gaussian && !circulant_fast && n > kDenseSizeLimit)
    throw GuardError("Gaussian entries fill the matrix; size limited to " + std::to_string(kDenseSizeLimit));
}

// Bootstrap standard error of a statistic of resampled replica rows.
template <typename Statistic>
double bootstrap_se(const Eigen::MatrixXd& rows, int resamples, std::uint64_t seed, Statistic&& stat) {
  const long m = rows.rows();
  if (m < 2 || resamples < 2) return 0.0;
  std::vector<double> values(resamples);
  for (int b = 0; b < resamples; ++b) {
    CounterRng rng(seed, 0xb007, static_cast<std::uint64_t>(b));
    Eigen::MatrixXd sample(m, rows.cols());
    for (long i = 0; i < m; ++i) sample.row(i) = rows.row(static_cast<long>(rng.next() % static_cast<std::uint64_t>(m)));
    values[b] = stat(sample);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= resamples;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (resamples - 1));
}

// Z rows of a trace matrix, centered at its own column means.
inline Eigen::MatrixXd centered_z(const Eigen::MatrixXd& traces, double sqrt_n) {
  const Eigen::RowVectorXd mu = traces.colwise().mean();
  return (traces.rowwise() - mu) * sqrt_n;
}

}  // namespace detail

// Monte Carlo over replicas with seeds spec.seed + 1 .. spec.seed + M.
inline SampleStats run_experiment(const EnsembleSpec& spec, int kmax, int replicas, const ExperimentOptions& options = {}) {
  detail::check_kmax(kmax);
  if (replicas < 2) throw InvalidArgumentError("at least two replicas are needed");
  validate_spec(spec);
  detail::check_resources(spec, replicas, options.path);

  SampleStats st;
  st.spec = spec;
  st.n = spec.n;
  st.kmax = kmax;
  st.replicas = replicas;
  st.bootstrap = options.bootstrap;
  st.path = options.path;
  st.first_seed = spec.seed + 1;
  st.traces.resize(replicas, kmax);

  std::vector<std::vector<double>> per(replicas);
  const unsigned threads = options.threads ? options.threads : thread_count();
  parallel_for(
      static_cast<std::size_t>(replicas),
      [&](std::size_t r) {
        EnsembleSpec s = spec;
        s.seed = spec.seed + r + 1;
        if (s.kind == EnsembleKind::circulant && options.path != TracePath::dense && options.path != TracePath::sparse)
          s.materialize = false;
        per[r] = trace_powers(sample(s), kmax, options.path);
      },
      threads);
  for (int r = 0; r < replicas; ++r)
    for (int k = 0; k < kmax; ++k) st.traces(r, k) = per[r][k];

  const double sqrt_n = std::sqrt(static_cast<double>(spec.n));
  st.mean = st.traces.colwise().mean().transpose();
  st.mean_se.resize(kmax);
  for (int k = 0; k < kmax; ++k) {
    const double var = (st.traces.col(k).array() - st.mean(k)).square().sum() / (replicas - 1);
    st.mean_se(k) = std::sqrt(var / replicas);
  }
  st.z = detail::centered_z(st.traces, sqrt_n);
  st.covariance = st.z.transpose() * st.z / static_cast<double>(replicas);
  st.covariance_se.resize(kmax, kmax);
  for (int a = 0; a < kmax; ++a)
    for (int b = a; b < kmax; ++b) {
      const double se = detail::bootstrap_se(st.traces, options.bootstrap, spec.seed ^ 0x5eULL, [&](const Eigen::MatrixXd& t) {
        const Eigen::MatrixXd z = detail::centered_z(t, sqrt_n);
        return z.col(a).dot(z.col(b)) / static_cast<double>(t.rows());
      });
      st.covariance_se(a, b) = st.covariance_se(b, a) = se;
    }
  return st;
}

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Plug-in E[prod_i Z(k_i)] over replicas with a bootstrap standard error.
inline Estimate moment_estimate(const SampleStats& st, const std::vector<int>& ks) {
  for (int k : ks)
    if (k < 1 || k > st.kmax) throw InvalidArgumentError("moment order outside the recorded trace powers");
  const double sqrt_n = std::sqrt(static_cast<double>(st.n));
  auto stat = [&](const Eigen::MatrixXd& t) {
    const Eigen::MatrixXd z = detail::centered_z(t, sqrt_n);
    double sum = 0.0;
    for (long r = 0; r < z.rows(); ++r) {
      double p = 1.0;
      for (int k : ks) p *= z(r, k - 1);
      sum += p;
    }
    return sum / static_cast<double>(z.rows());
  };
  Estimate e;
  e.value = stat(st.traces);
  e.se = detail::bootstrap_se(st.traces, st.bootstrap, st.spec.seed ^ 0xe57ULL, stat);
  return e;
}

}  // namespace emrm
