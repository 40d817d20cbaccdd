#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hdcca/errors.hpp"
#include "hdcca/ref_dist.hpp"

using namespace hdcca;

TEST(TracyWidom, KnownQuantiles) {
  // Standard published values of the beta = 1 law.
  EXPECT_NEAR(tw1_cdf(0.9793), 0.95, 5e-4);
  EXPECT_NEAR(tw1_cdf(2.0234), 0.99, 2e-4);
  EXPECT_NEAR(tw1_quantile(0.5), -1.2686, 1e-3);
  EXPECT_NEAR(tw1_quantile(0.95), 0.9793, 2e-3);
  EXPECT_NEAR(tw1_quantile(0.99), 2.0234, 2e-3);
}

TEST(TracyWidom, MomentsFromTable) {
  const auto& t = TracyWidomTable::embedded();
  const auto xs = t.grid();
  const auto fs = t.values();
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double mid = 0.5 * (xs[i] + xs[i - 1]);
    const double mass = fs[i] - fs[i - 1];
    mean += mid * mass;
    second += mid * mid * mass;
  }
  EXPECT_NEAR(mean, -1.2065, 2e-3);
  EXPECT_NEAR(std::sqrt(second - mean * mean), 1.2680, 2e-3);
}

TEST(TracyWidom, TableShapeAndTail) {
  const auto& t = TracyWidomTable::embedded();
  EXPECT_LE(t.lower(), -10.0);
  EXPECT_GE(t.upper(), 16.0);
  const auto fs = t.values();
  for (std::size_t i = 1; i < fs.size(); ++i) ASSERT_GE(fs[i], fs[i - 1]);
  // Left tail decays like exp(-|x|^3 / 24).
  EXPECT_LT(tw1_cdf(-8.0), 1e-10);
  EXPECT_LT(tw1_cdf(-10.0), 1e-20);
  // Right tail decays like exp(-(2/3) x^{3/2}); the survival at 6 is about 2e-6.
  EXPECT_NEAR(tw1_survival(6.0) / 1.94e-6, 1.0, 0.05);
  EXPECT_LT(tw1_survival(12.0), 1e-12);
  EXPECT_FALSE(t.provenance().empty());
}

TEST(TracyWidom, QuantileInvertsCdf) {
  for (const double level : {0.01, 0.1, 0.5, 0.9, 0.999}) {
    EXPECT_NEAR(tw1_cdf(tw1_quantile(level)), level, 1e-10);
  }
}

TEST(TracyWidom, Errors) {
  EXPECT_THROW(tw1_cdf(-11.0), DomainError);
  EXPECT_THROW(tw1_cdf(20.0), DomainError);
  EXPECT_THROW(tw1_quantile(0.0), DomainError);
  EXPECT_THROW(tw1_quantile(1.0), DomainError);
  EXPECT_THROW(TracyWidomTable::parse("0 0.1\n1 0.2\n", "x"), ConfigError);
  EXPECT_THROW(TracyWidomTable::parse("0 0.1\n1 0.2\n2 0.15\n3 0.9\n", "x"), ConfigError);
  EXPECT_THROW(TracyWidomTable::parse("0 0.1\n1 a\n2 0.3\n3 0.9\n", "x"), ConfigError);
}

TEST(TracyWidom, ParsesCommentsAndBlankLines) {
  const TracyWidomTable t = TracyWidomTable::parse("# header\n0 0\n\n1 0.25\n2 0.75\n3 1\n", "test");
  EXPECT_DOUBLE_EQ(t.cdf(1.0), 0.25);
  EXPECT_EQ(t.provenance(), "test");
  EXPECT_NEAR(t.quantile(0.5), 1.5, 1e-9);
}

TEST(Type7Quantile, LinearInterpolation) {
  std::vector<double> v = {4, 1, 3, 2, 5};
  EXPECT_DOUBLE_EQ(type7_quantile(v, 0.5), 3.0);
  v = {4, 1, 3, 2, 5};
  EXPECT_DOUBLE_EQ(type7_quantile(v, 0.9), 4.6);
  v = {4, 1, 3, 2, 5};
  EXPECT_DOUBLE_EQ(type7_quantile(v, 1.0), 5.0);
  std::vector<double> empty;
  EXPECT_THROW(type7_quantile(empty, 0.5), DomainError);
}

TEST(GoeGap, TwoByTwoClosedForm) {
  // P(gap > x) = exp(-x^2 / (8 s)) so q = sqrt(8 s ln(1 / alpha)).
  const double q_half = goe_gap_quantile(2, 0.05, 0.5, 400000, SampleSeed{3, 0});
  EXPECT_NEAR(q_half, std::sqrt(4.0 * std::log(20.0)), 0.015);
  const double q_one = goe_gap_quantile(2, 0.05, 1.0, 400000, SampleSeed{3, 0});
  EXPECT_NEAR(q_one, std::sqrt(8.0 * std::log(20.0)), 0.02);
}

TEST(GoeGap, ScalesWithSquareRootOfVariance) {
  // Same seed: the draws differ by an exact factor.
  const double a = goe_gap_quantile(4, 0.05, 0.5, 20000, SampleSeed{8, 0});
  const double b = goe_gap_quantile(4, 0.05, 2.0, 20000, SampleSeed{8, 0});
  EXPECT_NEAR(b / a, 2.0, 1e-9);
}

TEST(GoeGap, DeterministicAndWorkerInvariant) {
  const std::vector<double> a = goe_gap_samples(3, 0.5, 10000, SampleSeed{1, 2}, 1);
  const std::vector<double> b = goe_gap_samples(3, 0.5, 10000, SampleSeed{1, 2}, 4);
  EXPECT_EQ(a, b);
  const std::vector<double> c = goe_gap_samples(3, 0.5, 10000, SampleSeed{1, 3}, 1);
  EXPECT_NE(a, c);
}

TEST(GoeGap, RequiresEnoughReplications) {
  EXPECT_THROW(goe_gap_quantile(2, 0.05, 0.5, 9999, SampleSeed{}), DomainError);
  EXPECT_THROW(goe_gap_samples(1, 0.5, 10, SampleSeed{}), DomainError);
}

TEST(GoeGap, ReferenceTable) {
  const GoeGapQuantileTable t = reference_goe_gap_table();
  EXPECT_EQ(t.max_j1(), 10);
  EXPECT_DOUBLE_EQ(*t.lookup(2), 3.462);
  EXPECT_DOUBLE_EQ(*t.lookup(10), 8.942);
  EXPECT_FALSE(t.lookup(11).has_value());
  EXPECT_DOUBLE_EQ(t.variance_scale, 0.5);
}

TEST(GoeGap, BuiltTableTracksReference) {
  const std::vector<int> j1s = {3, 5};
  const GoeGapQuantileTable t = build_goe_gap_table(j1s, 0.05, 0.5, 100000, SampleSeed{4, 0});
  const GoeGapQuantileTable ref = reference_goe_gap_table();
  for (const int j : j1s) EXPECT_NEAR(*t.lookup(j) / *ref.lookup(j), 1.0, 0.015) << j;
  EXPECT_EQ(t.reps, 100000);
}
