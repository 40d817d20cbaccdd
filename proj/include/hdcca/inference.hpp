#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdcca/cca_engine.hpp"
#include "hdcca/ref_dist.hpp"

namespace hdcca {

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double quantile = 0.0;              // critical value at level alpha
  std::optional<double> p_value;      // absent when no reference CDF is available
  bool p_value_bounded = false;       // statistic beyond the table; p_value is a bound
  double alpha = 0.05;
  bool reject = false;
  std::vector<std::pair<std::string, double>> inputs;
};

struct MultiplicityGroup {
  int first = 0;  // 1-based index of the largest eigenvalue in the group
  int size = 0;
  double pooled_r_hat = 0.0;
};

struct SpikeEstimate {
  int k_hat = 0;
  double epsilon_n = 0.0;
  std::vector<double> r_hat;    // after pooling within multiplicity groups
  std::vector<double> rho_hat;  // sqrt(r_hat)
  std::vector<double> r_hat_unpooled;
  std::vector<bool> clamped;    // phi_invert clamped the discriminant
  std::vector<MultiplicityGroup> groups;
};

// log(log(n)) / n^{2/3}. Needs n >= 16.
double default_epsilon(int n);

// #{i : lambda_i >= d+ + epsilon}. Lambdas must be descending.
int estimate_k0(std::span<const double> lambdas, double d_plus, double epsilon);
int estimate_k0(const SampleSpectrum& spectrum, std::optional<double> epsilon = std::nullopt);

// r_hat_i = phi(lambda_i), rho_hat_i = sqrt(r_hat_i), for i <= k_hat. No pooling.
SpikeEstimate estimate_spikes(const SampleSpectrum& spectrum, int k_hat);

// Rejects independence when n^{2/3} (lambda_1 - d+) / xi_tw exceeds the
// upper-alpha Tracy-Widom quantile.
TestReport test_independence(const SampleSpectrum& spectrum, double alpha);

// Equal-spike test for lambda_{j0}, ..., lambda_{j0 + j1 - 1} (1-based).
// T_n = sqrt(n) (lambda_{j0} - lambda_{j0+j1-1}) / xi(r_bar) where r_bar is
// the group mean of phi(lambda_i). Rejects when T_n > q_alpha(j1).
TestReport test_multiplicity(const SampleSpectrum& spectrum, int j0, int j1, double alpha,
                             const GoeGapQuantileTable& quantile_source, std::optional<int> k_hat = std::nullopt);

struct PipelineOptions {
  double alpha = 0.05;
  std::optional<double> epsilon;
  GoeGapQuantileTable quantiles = reference_goe_gap_table();
};

struct PipelineResult {
  SpikeEstimate estimate;
  std::vector<TestReport> reports;  // independence test first, then multiplicity tests
  bool independence_rejected = false;
};

// Eigenvalues -> independence test (stop if retained) -> k_hat -> phi ->
// greedy grouping of equal spikes -> pooling -> rho_hat.
//
// Grouping scans from the largest spike down. At index j0 the candidate
// group is grown j1 = 2, 3, ... while the equal-spike test is retained and
// the group fits inside k_hat; the largest retained group is pooled and the
// scan resumes after it. Groups never overlap.
PipelineResult estimate_ccc_pipeline(const SampleSpectrum& spectrum, const PipelineOptions& options = {});
PipelineResult estimate_ccc_pipeline(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, bool centered,
                                     const PipelineOptions& options = {});

struct ModelSelectionCounts {
  int aic = 0;
  int bic = 0;
  int cp = 0;
};

struct InformationCriteria {
  std::vector<double> aic;  // index j = 0..m, entry 0 is 0 by definition
  std::vector<double> bic;
  std::vector<double> cp;
};

// AIC_j, BIC_j and C_p,j for j = 0..min(p, q). Terms with lambda_i >= 1 - 1e-12
// make every criterion with j < i equal to +infinity.
InformationCriteria information_criteria(std::span<const double> lambdas, int p, int q, int n);

// Argmin of each criterion over j = 0..min(p, q); ties go to the smaller j.
ModelSelectionCounts model_selection_counts(std::span<const double> lambdas, int p, int q, int n);

// Limit of the independence test's power against a single spike r1 > r_c,
// with sqrt(n) (lambda_1 - gamma_1) / xi(r1) replaced by a centred normal of
// variance 2 * variance_scale.
double asymptotic_power(double r1, const ModelConfig& config, double alpha, double variance_scale);

}  // namespace hdcca
