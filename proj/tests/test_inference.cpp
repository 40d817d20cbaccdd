#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hdcca/errors.hpp"
#include "hdcca/inference.hpp"

using namespace hdcca;

namespace {

const std::vector<double> kFieldEigenvalues = {0.829, 0.520, 0.359, 0.107, 0.094, 0.038};

SampleSpectrum field_spectrum() { return SampleSpectrum{kFieldEigenvalues, 44, ModelConfig(8, 6, 44), std::nullopt}; }

SampleSpectrum spectrum_with_top(std::vector<double> top, int p, int q, int n) {
  const ModelConfig config(p, q, n);
  std::vector<double> l = std::move(top);
  while (static_cast<int>(l.size()) < config.min_dim()) l.push_back(0.3 * std::pow(0.99, static_cast<double>(l.size())));
  return SampleSpectrum{l, n, config, std::nullopt};
}

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

TEST(Epsilon, DefaultFormula) {
  EXPECT_NEAR(default_epsilon(1000), std::log(std::log(1000.0)) / 100.0, 1e-15);
  EXPECT_THROW(default_epsilon(15), DomainError);
}

TEST(EstimateK0, CountsEigenvaluesAboveThreshold) {
  const std::vector<double> l = {0.9, 0.6, 0.54, 0.52, 0.3};
  EXPECT_EQ(estimate_k0(l, 0.5, 0.05), 2);
  EXPECT_EQ(estimate_k0(l, 0.5, 0.02), 4);
  EXPECT_EQ(estimate_k0(l, 0.95, 0.01), 0);
  EXPECT_THROW(estimate_k0(l, 0.5, 0.0), DomainError);
}

TEST(FieldDataset, IndependenceTest) {
  const TestReport r = test_independence(field_spectrum(), 0.05);
  EXPECT_NEAR(r.statistic, 4.75, 0.01);
  ASSERT_TRUE(r.p_value.has_value());
  EXPECT_GE(*r.p_value / 3.71e-5, 0.8);
  EXPECT_LE(*r.p_value / 3.71e-5, 1.25);
  EXPECT_TRUE(r.reject);
  EXPECT_NEAR(r.quantile, 0.9793, 2e-3);
}

TEST(FieldDataset, Pipeline) {
  const PipelineResult res = estimate_ccc_pipeline(field_spectrum());
  EXPECT_TRUE(res.independence_rejected);
  EXPECT_EQ(res.estimate.k_hat, 1);
  ASSERT_EQ(res.estimate.rho_hat.size(), 1u);
  EXPECT_NEAR(res.estimate.rho_hat[0], 0.864, 1e-3);
  EXPECT_TRUE(res.estimate.groups.empty());
  EXPECT_EQ(res.reports.size(), 1u);
}

TEST(Independence, RetainedUnderBulkSpectrum) {
  const SampleSpectrum s = spectrum_with_top({0.49}, 100, 200, 1000);
  const TestReport r = test_independence(s, 0.05);
  EXPECT_FALSE(r.reject);
  const PipelineResult res = estimate_ccc_pipeline(s);
  EXPECT_FALSE(res.independence_rejected);
  EXPECT_EQ(res.estimate.k_hat, 0);
}

TEST(Independence, DecisionMatchesStatistic) {
  for (const double top : {0.49, 0.5, 0.505, 0.51, 0.52, 0.6}) {
    const TestReport r = test_independence(spectrum_with_top({top}, 100, 200, 1000), 0.05);
    EXPECT_EQ(r.reject, r.statistic > r.quantile) << top;
  }
}

TEST(Independence, StatisticBeyondTableReportsBound) {
  const TestReport r = test_independence(spectrum_with_top({0.99}, 100, 200, 1000), 0.05);
  EXPECT_TRUE(r.p_value_bounded);
  EXPECT_TRUE(r.reject);
}

TEST(Multiplicity, HandComputedStatistic) {
  const double c1 = 0.1;
  const double c2 = 0.2;
  const SampleSpectrum s = spectrum_with_top({0.67, 0.65, 0.598}, 100, 200, 1000);
  const TestReport r = test_multiplicity(s, 1, 2, 0.05, reference_goe_gap_table());
  const double r_bar = 0.5 * (phi_invert(0.67, c1, c2).r_hat + phi_invert(0.65, c1, c2).r_hat);
  const double expected = std::sqrt(1000.0) * 0.02 / xi_outlier(r_bar, c1, c2);
  EXPECT_NEAR(r.statistic, expected, 1e-10);
  EXPECT_DOUBLE_EQ(r.quantile, 3.462);
  EXPECT_EQ(r.reject, expected > 3.462);
}

TEST(Multiplicity, Preconditions) {
  const SampleSpectrum s = spectrum_with_top({0.67, 0.65, 0.598}, 100, 200, 1000);
  EXPECT_THROW(test_multiplicity(s, 1, 1, 0.05, reference_goe_gap_table()), DomainError);
  EXPECT_THROW(test_multiplicity(s, 2, 3, 0.05, reference_goe_gap_table()), DomainError);
  EXPECT_THROW(test_multiplicity(s, 1, 2, 0.1, reference_goe_gap_table()), DomainError);
  EXPECT_THROW(test_multiplicity(s, 1, 2, 0.05, GoeGapQuantileTable{}), DomainError);
}

TEST(Pipeline, PoolsEqualSpikes) {
  const double g5 = *gamma_outlier(0.5, 0.1, 0.2);
  const double g4 = *gamma_outlier(0.4, 0.1, 0.2);
  const SampleSpectrum s = spectrum_with_top({g5, g5, g4}, 100, 200, 1000);
  const PipelineResult res = estimate_ccc_pipeline(s);
  ASSERT_EQ(res.estimate.k_hat, 3);
  ASSERT_EQ(res.estimate.groups.size(), 1u);
  EXPECT_EQ(res.estimate.groups[0].first, 1);
  EXPECT_EQ(res.estimate.groups[0].size, 2);
  EXPECT_NEAR(res.estimate.r_hat[0], 0.5, 1e-10);
  EXPECT_NEAR(res.estimate.r_hat[1], 0.5, 1e-10);
  EXPECT_NEAR(res.estimate.r_hat[2], 0.4, 1e-10);
  EXPECT_NEAR(res.estimate.rho_hat[0], std::sqrt(0.5), 1e-10);
  // Independence, then j1 = 2 (retained) and j1 = 3 (rejected).
  ASSERT_EQ(res.reports.size(), 3u);
  EXPECT_FALSE(res.reports[1].reject);
  EXPECT_TRUE(res.reports[2].reject);
}

TEST(Pipeline, SeparatedSpikesStayUnpooled) {
  const SampleSpectrum s = spectrum_with_top({0.9, 0.7, 0.56}, 100, 200, 1000);
  const PipelineResult res = estimate_ccc_pipeline(s);
  EXPECT_EQ(res.estimate.k_hat, 3);
  EXPECT_TRUE(res.estimate.groups.empty());
  EXPECT_EQ(res.estimate.r_hat, res.estimate.r_hat_unpooled);
}

TEST(InformationCriteria, BruteForce) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.95);
  const int p = 7;
  const int q = 5;
  const int n = 60;
  std::vector<double> l(5);
  for (auto& v : l) v = u(rng);
  std::sort(l.rbegin(), l.rend());
  const InformationCriteria ic = information_criteria(l, p, q, n);
  ASSERT_EQ(ic.aic.size(), 6u);
  EXPECT_EQ(ic.aic[0], 0.0);
  EXPECT_EQ(ic.bic[0], 0.0);
  EXPECT_EQ(ic.cp[0], 0.0);
  for (int j = 1; j <= 5; ++j) {
    double log_term = 0.0;
    double ratio = 0.0;
    for (int i = j + 1; i <= 5; ++i) {
      log_term += std::log(1.0 - l[static_cast<std::size_t>(i - 1)]);
      ratio += l[static_cast<std::size_t>(i - 1)] / (1.0 - l[static_cast<std::size_t>(i - 1)]);
    }
    const double dof = (p - j) * (q - j);
    EXPECT_NEAR(ic.aic[static_cast<std::size_t>(j)], -n * log_term - 2.0 * dof, 1e-9);
    EXPECT_NEAR(ic.bic[static_cast<std::size_t>(j)], -n * log_term - std::log(n) * dof, 1e-9);
    EXPECT_NEAR(ic.cp[static_cast<std::size_t>(j)], n * ratio - 2.0 * dof, 1e-9);
  }
}

TEST(InformationCriteria, ArgminPrefersSmallestIndexOnTies) {
  // All-zero spectrum: AIC_j = -2 (p - j)(q - j) for j >= 1 is smallest at j = 1.
  const std::vector<double> zeros(6, 0.0);
  const ModelSelectionCounts ms = model_selection_counts(zeros, 8, 6, 44);
  EXPECT_EQ(ms.aic, 1);
  EXPECT_EQ(ms.bic, 1);
  EXPECT_EQ(ms.cp, 1);
  // p = q = 1: every criterion is 0 at j = 0 and j = 1; the tie goes to 0.
  const std::vector<double> one = {0.0};
  EXPECT_EQ(model_selection_counts(one, 1, 1, 10).aic, 0);
}

TEST(InformationCriteria, StrongSignalSelected) {
  const std::vector<double> l = {0.95, 0.9, 0.01, 0.005, 0.001};
  const ModelSelectionCounts ms = model_selection_counts(l, 5, 5, 500);
  EXPECT_EQ(ms.bic, 2);
}

TEST(InformationCriteria, UnitEigenvalueStaysFinite) {
  // A unit eigenvalue only enters AIC_j for j = 0, which is 0 by definition.
  const std::vector<double> l = {1.0, 0.2};
  const InformationCriteria ic = information_criteria(l, 2, 2, 50);
  EXPECT_NEAR(ic.aic[1], -50.0 * std::log(0.8) - 2.0, 1e-12);
  EXPECT_EQ(ic.aic[0], 0.0);
  EXPECT_EQ(ic.aic[2], 0.0);
  EXPECT_EQ(model_selection_counts(l, 2, 2, 50).aic, 0);
}

TEST(AsymptoticPower, MatchesDisplayedFormula) {
  const ModelConfig config(100, 200, 1000);
  const double c1 = 0.1;
  const double c2 = 0.2;
  const double r1 = 0.3;
  const double g = *gamma_outlier(r1, c1, c2);
  const double xi = xi_outlier(r1, c1, c2);
  const double t = (std::pow(1000.0, -1.0 / 6.0) * tw1_quantile(0.95) * xi_tracy_widom(c1, c2) +
                    std::sqrt(1000.0) * (0.5 - g)) /
                   xi;
  EXPECT_NEAR(asymptotic_power(r1, config, 0.05, 0.5), normal_sf(t), 1e-12);
  EXPECT_NEAR(asymptotic_power(r1, config, 0.05, 1.0), normal_sf(t / std::sqrt(2.0)), 1e-12);
}

TEST(AsymptoticPower, IncreasesToOne) {
  double prev = 0.0;
  for (const int n : {1000, 4000, 16000, 64000}) {
    const double pw = asymptotic_power(0.25, ModelConfig(n / 10, n / 5, n), 0.05, 0.5);
    EXPECT_GE(pw, prev);
    prev = pw;
  }
  EXPECT_GT(prev, 0.99);
  EXPECT_EQ(asymptotic_power(1.0, ModelConfig(100, 200, 1000), 0.05, 0.5), 1.0);
  EXPECT_THROW(asymptotic_power(0.1, ModelConfig(100, 200, 1000), 0.05, 0.5), DomainError);
}
