#pragma once

// Closed-form limiting-spectrum quantities for sample canonical correlations
// of two Gaussian blocks in the proportional regime p/n -> c1, q/n -> c2.
//
// Every exported quantity except m_function and lsd_density is symmetric in
// (c1, c2). lsd_density is the limiting ESD of the squared canonical
// correlations, of which there are min(p, q); the normalising constant uses
// min(c1, c2) so callers never have to reorder the blocks.

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace hdcca {

using Complex = std::complex<double>;

struct SpectralConstants {
  double d_minus = 0.0;  // lower bulk edge
  double d_plus = 0.0;   // upper bulk edge
  double r_c = 0.0;      // detection threshold for population r_i
};

// Dimensions of the two blocks and the sample size. Enforces
// 0 < c1, c2 and c1 + c2 < 1, i.e. n > p + q.
class ModelConfig {
 public:
  ModelConfig(int p, int q, int n);

  int p() const { return p_; }
  int q() const { return q_; }
  int n() const { return n_; }
  int min_dim() const { return p_ < q_ ? p_ : q_; }
  double c1() const { return static_cast<double>(p_) / n_; }
  double c2() const { return static_cast<double>(q_) / n_; }
  SpectralConstants constants() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

 private:
  int p_;
  int q_;
  int n_;
};

// Population spikes r_1 >= ... >= r_k, each in (0, 1].
class SpikeSpec {
 public:
  SpikeSpec() = default;
  explicit SpikeSpec(std::vector<double> r);

  const std::vector<double>& values() const { return r_; }
  std::size_t size() const { return r_.size(); }
  bool empty() const { return r_.empty(); }
  double operator[](std::size_t i) const { return r_[i]; }

  // Number of spikes strictly above the detection threshold r_c.
  int count_detectable(double r_c) const;
  void check_fits(const ModelConfig& config) const;

 private:
  std::vector<double> r_;
};

// Throws DomainError unless 0 < c1, c2 < 1 and c1 + c2 < 1.
void validate_ratios(double c1, double c2);

SpectralConstants edges(double c1, double c2);

double lsd_density(double x, double c1, double c2);

// CDF of lsd_density, integrated numerically. 0 below d_minus, 1 above d_plus.
double lsd_cdf(double x, double c1, double c2);

// s(z) = (z - c1 - c2 - sqrt((z - d-)(z - d+))) / (2(z - 1)), with the branch
// making Im s > 0 on the upper half plane and s real to the right of d+.
Complex stieltjes_s(Complex z, double c1, double c2);

struct LsdTransforms {
  Complex s_check;  // transform associated with the c1 block
  Complex s_tilde;  // Stieltjes transform of lsd_density when c2 <= c1
};

LsdTransforms stieltjes_lsd(Complex z, double c1, double c2);

// Secular function whose root above d+ is the outlier location gamma(r).
Complex m_function(Complex z, double r, double c1, double c2);

// Almost-sure limit of the sample eigenvalue generated by a population spike r.
// Empty when r <= r_c: the eigenvalue sticks to d+.
std::optional<double> gamma_outlier(double r, double c1, double c2);

struct PhiResult {
  double r_hat = 0.0;
  // Set when lambda < d+ and the discriminant was clamped to zero.
  bool clamped = false;
};

// Inverse of gamma_outlier on [d+, 1].
PhiResult phi_invert(double lambda, double c1, double c2);

// The companion root of the quadratic solved by phi_invert. The two roots
// multiply to r_c^2.
double phi_invert_lower_root(double lambda, double c1, double c2);

// Scale of sqrt(n) (lambda_i - gamma_i) for a detached eigenvalue.
double xi_outlier(double r, double c1, double c2);
double xi_outlier_squared(double r, double c1, double c2);

// Scale of n^{2/3} (lambda - d+) at the soft edge.
double xi_tracy_widom(double c1, double c2);

}  // namespace hdcca
