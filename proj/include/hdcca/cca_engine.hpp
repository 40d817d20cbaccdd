#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hdcca/rmt_core.hpp"

namespace hdcca {

// Column i of a / b holds the i-th pair of canonical directions, scaled so
// that a_i' S_xx a_i = b_i' S_yy b_i = 1 with S = data * data' / effective_n.
struct CanonicalDirections {
  Eigen::MatrixXd a;  // p x min(p, q)
  Eigen::MatrixXd b;  // q x min(p, q)
};

struct SampleSpectrum {
  std::vector<double> lambdas;  // descending, in [0, 1], length min(p, q)
  int effective_n = 0;
  ModelConfig config;           // (p, q, effective_n)
  std::optional<CanonicalDirections> directions;
};

struct CenteredData {
  Eigen::MatrixXd data;
  int effective_n = 0;
};

// Removes each row's sample mean. effective_n = n - 1.
CenteredData center_observations(const Eigen::MatrixXd& data);

struct CcaOptions {
  // True when x and y are already mean-zero draws (the simulation path);
  // otherwise rows are centered here and effective_n = n - 1.
  bool centered = true;
  bool directions = false;
};

// Squared sample canonical correlations of X (p x n) and Y (q x n).
//
// Computed as squared cosines of the principal angles between the row
// spaces: thin Householder QR of X' and Y', then the spectrum of Qx' Qy.
// S_xx^{-1} is never formed. Throws ShapeError on mismatched or too few
// observations and RankDeficiencyError when X or Y lacks full row rank.
SampleSpectrum cca_eigenvalues(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, CcaOptions options = {});

// F_n(x) = #{lambda_i <= x} / m.
class EmpiricalSpectralDistribution {
 public:
  explicit EmpiricalSpectralDistribution(std::span<const double> lambdas);

  double operator()(double x) const;
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

double esd(const SampleSpectrum& spectrum, double x);

// sup_x |F_n(x) - F(x)| against the limiting Wachter law with ratios (c1, c2),
// evaluated on both sides of every jump of F_n.
double ks_distance_to_lsd(std::span<const double> lambdas, double c1, double c2);
double ks_distance_to_lsd(const SampleSpectrum& spectrum);

}  // namespace hdcca
