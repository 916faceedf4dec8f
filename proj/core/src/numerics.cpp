#include "gcsl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gcsl {

Mat::Mat(int r, int c, double fill)
    : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
  require(r >= 0 && c >= 0, "Mat: negative dimension");
}

Vec Mat::row(int i) const {
  Vec v(cols);
  for (int j = 0; j < cols; ++j) v[j] = (*this)(i, j);
  return v;
}

void Mat::set_row(int i, const Vec& v) {
  require(static_cast<int>(v.size()) == cols, "Mat::set_row: size mismatch");
  for (int j = 0; j < cols; ++j) (*this)(i, j) = v[j];
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double dot(const Vec& x, const Vec& y) {
  require(x.size() == y.size(), "dot: size mismatch");
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

Vec matvec(const Mat& m, const Vec& x) {
  require(static_cast<int>(x.size()) == m.cols, "matvec: size mismatch");
  Vec y(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double log_sum_exp(std::span<const double> v) {
  require(!v.empty(), "log_sum_exp: empty input");
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;  // all -inf stays -inf; +inf/nan propagate
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

CholFactor::CholFactor(int dim) : n_(dim), p_(packed_size(dim), 0.0) {
  require(dim >= 1, "CholFactor: dim must be positive");
}

std::optional<CholFactor> CholFactor::from_spd(const Mat& spd) {
  if (spd.rows != spd.cols || spd.rows < 1) return std::nullopt;
  const int n = spd.rows;
  Mat l(n, n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = spd(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(s > 1e-300) || !std::isfinite(s)) return std::nullopt;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  CholFactor f(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      f.p_[idx(i, j)] = (i == j) ? std::log(l(i, i)) : l(i, j);
  return f;
}

double& CholFactor::raw_at(int i, int j) {
  require(i >= 0 && i < n_ && j >= 0 && j <= i, "CholFactor::raw_at: not in lower triangle");
  return p_[idx(i, j)];
}

double CholFactor::entry(int i, int j) const {
  require(i >= 0 && i < n_ && j >= 0 && j < n_, "CholFactor::entry: out of range");
  if (j > i) return 0.0;
  double raw = p_[idx(i, j)];
  return i == j ? std::exp(raw) : raw;
}

Mat CholFactor::lower() const {
  Mat l(n_, n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = entry(i, j);
  return l;
}

Mat CholFactor::precision() const {
  Mat l = lower();
  Mat m(n_, n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      double s = 0.0;
      for (int k = 0; k <= std::min(i, j); ++k) s += l(i, k) * l(j, k);
      m(i, j) = s;
    }
  return m;
}

double CholFactor::log_det_precision() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += p_[idx(i, i)];
  return 2.0 * s;
}

Vec CholFactor::lt_apply(const Vec& v) const {
  require(static_cast<int>(v.size()) == n_, "CholFactor::lt_apply: size mismatch");
  Vec out(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    double s = std::exp(p_[idx(i, i)]) * v[i];  // tail of column i starts on the diagonal
    out[i] += s;
    for (int j = 0; j < i; ++j) out[j] += p_[idx(i, j)] * v[i];
  }
  return out;
}

Vec CholFactor::l_apply(const Vec& v) const {
  require(static_cast<int>(v.size()) == n_, "CholFactor::l_apply: size mismatch");
  Vec out(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    double s = std::exp(p_[idx(i, i)]) * v[i];
    for (int j = 0; j < i; ++j) s += p_[idx(i, j)] * v[j];
    out[i] = s;
  }
  return out;
}

Vec CholFactor::precision_apply(const Vec& v) const { return l_apply(lt_apply(v)); }

Vec CholFactor::covariance_apply(const Vec& v) const {
  require(static_cast<int>(v.size()) == n_, "CholFactor::covariance_apply: size mismatch");
  // forward substitution L y = v
  Vec y(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    double s = v[i];
    for (int j = 0; j < i; ++j) s -= p_[idx(i, j)] * y[j];
    y[i] = s / std::exp(p_[idx(i, i)]);
  }
  // back substitution L^T u = y
  Vec u(n_, 0.0);
  for (int i = n_ - 1; i >= 0; --i) {
    double s = y[i];
    for (int j = i + 1; j < n_; ++j) s -= p_[idx(j, i)] * u[j];
    u[i] = s / std::exp(p_[idx(i, i)]);
  }
  return u;
}

namespace {

constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

uint64_t Rng::next_u64() {
  ctr_ += 1;
  return mix64(seed_ + ctr_ * kGamma);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  require(lo <= hi, "Rng::uniform: lo > hi");
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  // Box-Muller; u1 kept strictly positive so the log is finite.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

Rng Rng::split(uint64_t stream) const {
  return Rng(mix64(mix64(seed_) + (stream + 1) * 0xD1B54A32D192ED03ull));
}

Vec gaussian_noise(Rng& rng, int n, double std_dev) {
  require(n >= 0, "gaussian_noise: negative count");
  require(std_dev >= 0.0, "gaussian_noise: negative std");
  Vec v(n, 0.0);
  if (std_dev == 0.0) return v;
  for (int i = 0; i < n; ++i) v[i] = std_dev * rng.normal();
  return v;
}

}  // namespace gcsl
