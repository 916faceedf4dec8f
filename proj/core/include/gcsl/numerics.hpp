#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gcsl {

using Vec = std::vector<double>;

// Dense row-major matrix. Small sizes only; no BLAS behind it.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0);

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  Vec row(int i) const;
  void set_row(int i, const Vec& v);
};

// Throws std::invalid_argument when a caller breaks an interface contract.
void require(bool cond, const std::string& msg);

double dot(const Vec& x, const Vec& y);
Vec matvec(const Mat& m, const Vec& x);
bool all_finite(std::span<const double> v);

// max-shifted log(sum(exp(v))); empty input is a contract violation.
double log_sum_exp(std::span<const double> v);

// Lower-triangular Cholesky factor L of a precision matrix, Lambda = L L^T.
// Packed row-major lower triangle; diagonal entries are stored as logs, so
// any raw parameter vector encodes a symmetric positive definite matrix.
class CholFactor {
 public:
  explicit CholFactor(int dim);  // identity factor

  // Factorizes an SPD matrix; nullopt when the pivot sequence fails.
  static std::optional<CholFactor> from_spd(const Mat& spd);

  int dim() const { return n_; }
  static int packed_size(int dim) { return dim * (dim + 1) / 2; }

  // Raw parameter access (log-space on the diagonal), row-major lower triangle.
  std::vector<double>& raw() { return p_; }
  const std::vector<double>& raw() const { return p_; }
  double& raw_at(int i, int j);

  double entry(int i, int j) const;  // actual L_ij, exp applied on the diagonal
  Mat lower() const;
  Mat precision() const;             // L L^T
  double log_det_precision() const;  // log |Lambda| = 2 * sum of raw diagonal

  Vec lt_apply(const Vec& v) const;         // L^T v
  Vec l_apply(const Vec& v) const;          // L v
  Vec precision_apply(const Vec& v) const;  // L (L^T v)
  Vec covariance_apply(const Vec& v) const; // solves (L L^T) u = v

 private:
  int n_ = 0;
  std::vector<double> p_;

  static int idx(int i, int j) { return i * (i + 1) / 2 + j; }
};

// Counter-based generator (splitmix64 stream). Cheap to copy; split() derives
// an independent child stream from the base seed, so the chain-to-stream
// assignment is fixed regardless of how many draws happened in between.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {}

  uint64_t next_u64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);
  double normal();                         // standard normal, Box-Muller
  Rng split(uint64_t stream) const;

 private:
  uint64_t seed_ = 0;
  uint64_t ctr_ = 0;
};

// n independent draws from N(0, std^2); std = 0 yields exact zeros.
Vec gaussian_noise(Rng& rng, int n, double std_dev);

}  // namespace gcsl
