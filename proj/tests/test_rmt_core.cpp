#include <cmath>
#include <complex>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "hdcca/errors.hpp"
#include "hdcca/rmt_core.hpp"

using namespace hdcca;

namespace {

// Direct integration in x; tanh-sinh handles the inverse square-root edge
// behaviour without the substitution used inside the library.
double integrate_density(double a, double b, double c1, double c2) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate([&](double x) { return lsd_density(x, c1, c2); }, a, b);
}

Complex stieltjes_by_quadrature(Complex z, double c1, double c2) {
  const SpectralConstants k = edges(c1, c2);
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double re = integrator.integrate(
      [&](double x) { return (lsd_density(x, c1, c2) / (x - z)).real(); }, k.d_minus, k.d_plus);
  const double im = integrator.integrate(
      [&](double x) { return (lsd_density(x, c1, c2) / (x - z)).imag(); }, k.d_minus, k.d_plus);
  return {re, im};
}

}  // namespace

TEST(Edges, MatchesClosedForm) {
  const SpectralConstants k = edges(0.1, 0.2);
  EXPECT_NEAR(k.d_minus, 0.02, 1e-14);
  EXPECT_NEAR(k.d_plus, 0.5, 1e-14);
  EXPECT_NEAR(k.r_c, 1.0 / 6.0, 1e-14);
}

TEST(Edges, SymmetricInRatios) {
  const SpectralConstants a = edges(0.13, 0.31);
  const SpectralConstants b = edges(0.31, 0.13);
  EXPECT_DOUBLE_EQ(a.d_minus, b.d_minus);
  EXPECT_DOUBLE_EQ(a.d_plus, b.d_plus);
  EXPECT_DOUBLE_EQ(a.r_c, b.r_c);
}

TEST(Edges, FieldDatasetShape) {
  const SpectralConstants k = edges(8.0 / 44.0, 6.0 / 44.0);
  EXPECT_NEAR(k.d_plus, 0.5333, 5e-4);
  EXPECT_NEAR(std::pow(xi_tracy_widom(8.0 / 44.0, 6.0 / 44.0), 3.0), 0.468, 5e-4);
}

TEST(Edges, RejectsInvalidRatios) {
  EXPECT_THROW(edges(0.6, 0.6), DomainError);
  EXPECT_THROW(edges(0.0, 0.2), DomainError);
  EXPECT_THROW(edges(-0.1, 0.2), DomainError);
  EXPECT_THROW(validate_ratios(0.5, 0.5), DomainError);
}

TEST(ModelConfig, RequiresSampleLargerThanDimensions) {
  EXPECT_THROW(ModelConfig(10, 5, 15), DomainError);
  EXPECT_THROW(ModelConfig(0, 5, 100), DomainError);
  const ModelConfig c(10, 5, 16);
  EXPECT_EQ(c.min_dim(), 5);
  EXPECT_DOUBLE_EQ(c.c1(), 10.0 / 16.0);
}

TEST(SpikeSpec, ValidatesOrderAndRange) {
  EXPECT_THROW(SpikeSpec({0.3, 0.5}), DomainError);
  EXPECT_THROW(SpikeSpec({1.2}), DomainError);
  EXPECT_THROW(SpikeSpec({0.0}), DomainError);
  const SpikeSpec s({0.5, 0.4, 0.3, 0.16});
  EXPECT_EQ(s.count_detectable(1.0 / 6.0), 3);
  EXPECT_THROW(SpikeSpec({0.9, 0.8, 0.7}).check_fits(ModelConfig(2, 5, 20)), ShapeError);
}

TEST(LsdDensity, IntegratesToOne) {
  for (const auto& [c1, c2] : {std::pair{0.1, 0.2}, std::pair{0.2, 0.1}, std::pair{0.3, 0.45},
                               std::pair{8.0 / 44.0, 6.0 / 44.0}, std::pair{0.05, 0.9}}) {
    const SpectralConstants k = edges(c1, c2);
    EXPECT_NEAR(integrate_density(k.d_minus, k.d_plus, c1, c2), 1.0, 1e-8) << c1 << ", " << c2;
  }
}

TEST(LsdDensity, ZeroOutsideSupport) {
  EXPECT_EQ(lsd_density(0.01, 0.1, 0.2), 0.0);
  EXPECT_EQ(lsd_density(0.51, 0.1, 0.2), 0.0);
  EXPECT_GT(lsd_density(0.25, 0.1, 0.2), 0.0);
}

TEST(LsdDensity, EqualRatiosHaveHardEdgeAtZero) {
  EXPECT_NEAR(edges(0.25, 0.25).d_minus, 0.0, 1e-15);
  EXPECT_THROW(lsd_density(0.0, 0.25, 0.25), DomainError);
  EXPECT_NEAR(integrate_density(0.0, edges(0.25, 0.25).d_plus, 0.25, 0.25), 1.0, 1e-8);
}

TEST(LsdCdf, AgreesWithDirectQuadrature) {
  const double c1 = 0.1;
  const double c2 = 0.2;
  EXPECT_EQ(lsd_cdf(0.0, c1, c2), 0.0);
  EXPECT_EQ(lsd_cdf(0.6, c1, c2), 1.0);
  for (const double x : {0.03, 0.1, 0.2, 0.3, 0.45, 0.499}) {
    EXPECT_NEAR(lsd_cdf(x, c1, c2), integrate_density(0.02, x, c1, c2), 1e-9) << x;
  }
}

TEST(StieltjesS, SolvesQuadratic) {
  // (z - 1) s^2 - (z - c1 - c2) s - c1 c2 = 0
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> re(-1.0, 2.0);
  std::uniform_real_distribution<double> im(-1.0, 1.0);
  const double c1 = 0.1;
  const double c2 = 0.2;
  int checked = 0;
  while (checked < 1000) {
    const Complex z(re(rng), im(rng));
    if (std::abs(z.imag()) < 1e-3) continue;
    const Complex s = stieltjes_s(z, c1, c2);
    const Complex residual = (z - 1.0) * s * s - (z - c1 - c2) * s - c1 * c2;
    ASSERT_LE(std::abs(residual), 1e-12) << z;
    ++checked;
  }
}

TEST(StieltjesS, HerglotzBranch) {
  for (const double x : {-0.5, 0.1, 0.3, 0.7, 1.5}) {
    const Complex s = stieltjes_s(Complex(x, 0.1), 0.1, 0.2);
    EXPECT_GT(s.imag(), 0.0) << x;
  }
  // Real above d+.
  EXPECT_NEAR(stieltjes_s(Complex(0.6, 0.0), 0.1, 0.2).imag(), 0.0, 1e-15);
  EXPECT_THROW(stieltjes_s(Complex(0.3, 0.0), 0.1, 0.2), DomainError);
}

TEST(StieltjesS, RemovableSingularityAtOne) {
  const Complex at_one = stieltjes_s(Complex(1.0, 0.0), 0.1, 0.2);
  const Complex near_one = stieltjes_s(Complex(1.0 + 1e-7, 0.0), 0.1, 0.2);
  EXPECT_NEAR(std::abs(at_one - near_one), 0.0, 1e-6);
}

TEST(StieltjesLsd, ScaledIdentity) {
  const double c1 = 0.1;
  const double c2 = 0.2;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const Complex z(u(rng), 0.05 + std::abs(u(rng)));
    const LsdTransforms t = stieltjes_lsd(z, c1, c2);
    const Complex s = stieltjes_s(z, c1, c2);
    EXPECT_LE(std::abs(t.s_check - (s / (c1 * z) - 1.0 / z)), 1e-12);
    EXPECT_LE(std::abs(t.s_tilde - (s / (c2 * z) - 1.0 / z)), 1e-12);
    EXPECT_LE(std::abs(c1 * (t.s_check + 1.0 / z) - c2 * (t.s_tilde + 1.0 / z)), 1e-12);
  }
}

TEST(StieltjesLsd, MatchesQuadratureOfDensity) {
  // The density describes the min(p, q) nonzero eigenvalues, so its transform
  // is s_check when c1 < c2 and s_tilde when c2 <= c1.
  const Complex z(0.8, 0.2);
  EXPECT_LE(std::abs(stieltjes_lsd(z, 0.1, 0.2).s_check - stieltjes_by_quadrature(z, 0.1, 0.2)), 1e-6);
  EXPECT_LE(std::abs(stieltjes_lsd(z, 0.2, 0.1).s_tilde - stieltjes_by_quadrature(z, 0.2, 0.1)), 1e-6);
  // The larger block's transform carries an atom of mass 1 - c1/c2 at zero.
  const LsdTransforms t = stieltjes_lsd(z, 0.1, 0.2);
  const Complex with_atom = 0.5 * stieltjes_by_quadrature(z, 0.1, 0.2) + 0.5 * (-1.0 / z);
  EXPECT_LE(std::abs(t.s_tilde - with_atom), 1e-6);
}

TEST(StieltjesLsd, RejectsSupportAndPoles) {
  EXPECT_THROW(stieltjes_lsd(Complex(0.3, 0.0), 0.1, 0.2), DomainError);
  EXPECT_THROW(stieltjes_lsd(Complex(0.0, 0.0), 0.1, 0.2), DomainError);
  EXPECT_THROW(stieltjes_lsd(Complex(1.0, 0.0), 0.1, 0.2), DomainError);
}

TEST(Gamma, KnownOutlierLocations) {
  EXPECT_NEAR(*gamma_outlier(0.5, 0.1, 0.2), 0.66, 1e-12);
  EXPECT_NEAR(*gamma_outlier(0.4, 0.1, 0.2), 0.598, 1e-12);
  EXPECT_NEAR(*gamma_outlier(0.3, 0.1, 0.2), 0.54266666666666, 1e-12);
  EXPECT_FALSE(gamma_outlier(0.16, 0.1, 0.2).has_value());
  EXPECT_NEAR(*gamma_outlier(1.0, 0.1, 0.2), 1.0, 1e-14);
}

TEST(Gamma, ContinuousAtThreshold) {
  const double rc = edges(0.1, 0.2).r_c;
  EXPECT_NEAR(*gamma_outlier(rc + 1e-9, 0.1, 0.2), 0.5, 1e-7);
}

TEST(MFunction, VanishesAtOutlier) {
  for (const auto& [c1, c2] : {std::pair{0.1, 0.2}, std::pair{0.2, 0.1}, std::pair{0.05, 0.3}}) {
    const double rc = edges(c1, c2).r_c;
    for (double r = rc + 0.01; r < 1.0; r += 0.05) {
      const double g = *gamma_outlier(r, c1, c2);
      EXPECT_LE(std::abs(m_function(Complex(g, 0.0), r, c1, c2)), 1e-10) << c1 << ' ' << c2 << ' ' << r;
    }
  }
}

TEST(MFunction, SignJustAboveEdgeTracksThreshold) {
  const double z = edges(0.1, 0.2).d_plus + 1e-6;
  EXPECT_GT(m_function(Complex(z, 0.0), 0.3, 0.1, 0.2).real(), 0.0);
  EXPECT_LT(m_function(Complex(z, 0.0), 0.1, 0.1, 0.2).real(), 0.0);
}

TEST(MFunction, OnlyRootAboveEdgeIsGamma) {
  const double r = 0.4;
  const double g = *gamma_outlier(r, 0.1, 0.2);
  int sign_changes = 0;
  double prev = m_function(Complex(0.5 + 1e-9, 0.0), r, 0.1, 0.2).real();
  for (double z = 0.501; z < 0.9999; z += 0.001) {
    const double cur = m_function(Complex(z, 0.0), r, 0.1, 0.2).real();
    if ((prev < 0.0) != (cur < 0.0)) {
      ++sign_changes;
      EXPECT_NEAR(z, g, 0.002);
    }
    prev = cur;
  }
  EXPECT_EQ(sign_changes, 1);
}

TEST(Phi, RoundTripsGamma) {
  std::mt19937_64 rng(3);
  for (const auto& [c1, c2] : {std::pair{0.1, 0.2}, std::pair{8.0 / 44.0, 6.0 / 44.0}, std::pair{0.3, 0.05}}) {
    const double rc = edges(c1, c2).r_c;
    std::uniform_real_distribution<double> u(rc + 1e-3, 1.0);
    for (int i = 0; i < 100; ++i) {
      const double r = u(rng);
      const PhiResult phi = phi_invert(*gamma_outlier(r, c1, c2), c1, c2);
      EXPECT_NEAR(phi.r_hat, r, 1e-10);
      EXPECT_FALSE(phi.clamped);
    }
  }
}

TEST(Phi, RootsMultiplyToThresholdSquared) {
  const double c1 = 0.1;
  const double c2 = 0.2;
  const double rc = edges(c1, c2).r_c;
  for (const double lambda : {0.55, 0.7, 0.9}) {
    EXPECT_NEAR(phi_invert(lambda, c1, c2).r_hat * phi_invert_lower_root(lambda, c1, c2), rc * rc, 1e-12);
  }
}

TEST(Phi, ClampsBelowEdge) {
  const PhiResult phi = phi_invert(0.45, 0.1, 0.2);
  EXPECT_TRUE(phi.clamped);
  EXPECT_THROW(phi_invert(1.2, 0.1, 0.2), DomainError);
  EXPECT_NEAR(phi_invert(0.5, 0.1, 0.2).r_hat, edges(0.1, 0.2).r_c, 1e-7);
}

TEST(Xi, ClosedFormAndLimits) {
  const double c1 = 0.1;
  const double c2 = 0.2;
  const double r = 0.5;
  const double expected = (1 - r) * (1 - r) * (2 * 0.9 * 0.8 * r + c1 + c2 - 2 * c1 * c2) *
                          (0.9 * 0.8 * r * r - c1 * c2) / (r * r);
  EXPECT_NEAR(xi_outlier_squared(r, c1, c2), expected, 1e-14);
  EXPECT_NEAR(xi_outlier(r, c1, c2), 0.39597979746446665, 1e-12);
  EXPECT_EQ(xi_outlier(1.0, c1, c2), 0.0);
  EXPECT_NEAR(xi_outlier(edges(c1, c2).r_c, c1, c2), 0.0, 1e-6);
  EXPECT_THROW(xi_outlier(0.1, c1, c2), DomainError);
}

TEST(Xi, TracyWidomScale) {
  const double dp = edges(0.1, 0.2).d_plus;
  const double expected = std::cbrt(dp * dp * (1 - dp) * (1 - dp) / std::sqrt(0.1 * 0.2 * 0.9 * 0.8));
  EXPECT_NEAR(xi_tracy_widom(0.1, 0.2), expected, 1e-14);
}
