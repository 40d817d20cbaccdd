#include "hdcca/rmt_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hdcca/errors.hpp"

namespace hdcca {

namespace {

Complex edge_root(Complex z, double d_minus, double d_plus) {
  // sqrt(z - d-) * sqrt(z - d+) with principal roots is analytic off
  // [d-, d+], behaves like z at infinity and is positive right of d+.
  return std::sqrt(z - d_minus) * std::sqrt(z - d_plus);
}

Complex s_upper(Complex z, double c1, double c2, const SpectralConstants& k) {
  if (z == Complex(1.0, 0.0)) {
    // Removable singularity: numerator and denominator both vanish at 1.
    const double root = 1.0 - c1 - c2;
    return Complex(0.5 * (1.0 - (2.0 - k.d_minus - k.d_plus) / (2.0 * root)), 0.0);
  }
  return (z - c1 - c2 - edge_root(z, k.d_minus, k.d_plus)) / (2.0 * (z - 1.0));
}

void require_off_support(Complex z, const SpectralConstants& k) {
  if (z.imag() == 0.0 && z.real() >= k.d_minus && z.real() <= k.d_plus) {
    std::ostringstream os;
    os << "z = " << z.real() << " lies on the support [" << k.d_minus << ", " << k.d_plus << "]";
    throw DomainError(os.str());
  }
}

}  // namespace

ModelConfig::ModelConfig(int p, int q, int n) : p_(p), q_(q), n_(n) {
  if (p < 1 || q < 1 || n < 1) {
    throw DomainError("p, q and n must be positive");
  }
  if (n <= p + q) {
    std::ostringstream os;
    os << "need n > p + q, got p = " << p << ", q = " << q << ", n = " << n;
    throw DomainError(os.str());
  }
}

SpectralConstants ModelConfig::constants() const { return edges(c1(), c2()); }

SpikeSpec::SpikeSpec(std::vector<double> r) : r_(std::move(r)) {
  for (std::size_t i = 0; i < r_.size(); ++i) {
    if (!(r_[i] > 0.0 && r_[i] <= 1.0)) {
      throw DomainError("spike values must lie in (0, 1]");
    }
    if (i > 0 && r_[i] > r_[i - 1]) {
      throw DomainError("spike values must be in descending order");
    }
  }
}

int SpikeSpec::count_detectable(double r_c) const {
  return static_cast<int>(std::count_if(r_.begin(), r_.end(), [r_c](double r) { return r > r_c; }));
}

void SpikeSpec::check_fits(const ModelConfig& config) const {
  if (static_cast<int>(r_.size()) > config.min_dim()) {
    throw ShapeError("more spikes than min(p, q)");
  }
}

void validate_ratios(double c1, double c2) {
  if (!(c1 > 0.0 && c1 < 1.0 && c2 > 0.0 && c2 < 1.0 && c1 + c2 < 1.0)) {
    std::ostringstream os;
    os << "dimension ratios must satisfy 0 < c1, c2 and c1 + c2 < 1 (got c1 = " << c1
       << ", c2 = " << c2 << ")";
    throw DomainError(os.str());
  }
}

SpectralConstants edges(double c1, double c2) {
  validate_ratios(c1, c2);
  const double a = std::sqrt(c1 * (1.0 - c2));
  const double b = std::sqrt(c2 * (1.0 - c1));
  SpectralConstants k;
  k.d_minus = (a - b) * (a - b);
  k.d_plus = (a + b) * (a + b);
  k.r_c = std::sqrt(c1 * c2 / ((1.0 - c1) * (1.0 - c2)));
  return k;
}

double lsd_density(double x, double c1, double c2) {
  const SpectralConstants k = edges(c1, c2);
  if (x == 0.0 && k.d_minus == 0.0) {
    throw DomainError("density is unbounded at x = 0 when d- = 0");
  }
  if (x <= k.d_minus || x >= k.d_plus) {
    return 0.0;
  }
  const double c = std::min(c1, c2);
  return std::sqrt((k.d_plus - x) * (x - k.d_minus)) / (2.0 * std::numbers::pi * c * x * (1.0 - x));
}

double lsd_cdf(double x, double c1, double c2) {
  const SpectralConstants k = edges(c1, c2);
  if (x <= k.d_minus) return 0.0;
  if (x >= k.d_plus) return 1.0;
  // x = mid - half cos(theta) turns the square-root edges into sin^2.
  const double mid = 0.5 * (k.d_plus + k.d_minus);
  const double half = 0.5 * (k.d_plus - k.d_minus);
  const double c = std::min(c1, c2);
  const double theta_max = std::acos(std::clamp((mid - x) / half, -1.0, 1.0));
  auto integrand = [&](double theta) {
    const double u = mid - half * std::cos(theta);
    if (u <= 0.0) {
      // d- = 0 and theta = 0: limit of sin^2 / u is 2 / half.
      return half * half * 2.0 / half / (2.0 * std::numbers::pi * c);
    }
    const double s = std::sin(theta);
    return half * half * s * s / (2.0 * std::numbers::pi * c * u * (1.0 - u));
  };
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, theta_max, 15, 1e-14);
  return std::clamp(value, 0.0, 1.0);
}

Complex stieltjes_s(Complex z, double c1, double c2) {
  const SpectralConstants k = edges(c1, c2);
  require_off_support(z, k);
  if (z.imag() < 0.0) {
    return std::conj(s_upper(std::conj(z), c1, c2, k));
  }
  return s_upper(z, c1, c2, k);
}

LsdTransforms stieltjes_lsd(Complex z, double c1, double c2) {
  const SpectralConstants k = edges(c1, c2);
  require_off_support(z, k);
  if (z == Complex(0.0, 0.0) || z == Complex(1.0, 0.0)) {
    throw DomainError("stieltjes_lsd is undefined at z = 0 and z = 1");
  }
  const Complex w = z.imag() < 0.0 ? std::conj(z) : z;
  const Complex numerator = w - c1 - c2 - edge_root(w, k.d_minus, k.d_plus);
  LsdTransforms t;
  t.s_check = numerator / (2.0 * c1 * w * (w - 1.0)) - 1.0 / w;
  t.s_tilde = numerator / (2.0 * c2 * w * (w - 1.0)) - 1.0 / w;
  if (z.imag() < 0.0) {
    t.s_check = std::conj(t.s_check);
    t.s_tilde = std::conj(t.s_tilde);
  }
  return t;
}

Complex m_function(Complex z, double r, double c1, double c2) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw DomainError("m_function needs r in [0, 1]");
  }
  const Complex s = stieltjes_s(z, c1, c2);
  const Complex one_minus_z = 1.0 - z;
  return (c2 - (1.0 - c1) * z - one_minus_z * s) * (1.0 - r) +
         one_minus_z * (1.0 - one_minus_z * s / c2) * r;
}

std::optional<double> gamma_outlier(double r, double c1, double c2) {
  if (!(r > 0.0 && r <= 1.0)) {
    throw DomainError("gamma_outlier needs r in (0, 1]");
  }
  const SpectralConstants k = edges(c1, c2);
  if (r <= k.r_c) {
    return std::nullopt;
  }
  return r * (1.0 - c1 + c1 / r) * (1.0 - c2 + c2 / r);
}

namespace {

struct PhiParts {
  double base;
  double root;
  double denominator;
  bool clamped;
};

PhiParts phi_parts(double lambda, double c1, double c2) {
  const SpectralConstants k = edges(c1, c2);
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError("phi_invert needs lambda in [0, 1]");
  }
  PhiParts parts{};
  parts.base = 2.0 * c1 * c2 - c1 - c2 + lambda;
  parts.denominator = 2.0 * (1.0 - c1) * (1.0 - c2);
  if (lambda < k.d_plus) {
    parts.root = 0.0;
    parts.clamped = true;
  } else {
    parts.root = std::sqrt((lambda - k.d_minus) * (lambda - k.d_plus));
    parts.clamped = false;
  }
  return parts;
}

}  // namespace

PhiResult phi_invert(double lambda, double c1, double c2) {
  const PhiParts parts = phi_parts(lambda, c1, c2);
  return PhiResult{(parts.base + parts.root) / parts.denominator, parts.clamped};
}

double phi_invert_lower_root(double lambda, double c1, double c2) {
  const PhiParts parts = phi_parts(lambda, c1, c2);
  return (parts.base - parts.root) / parts.denominator;
}

double xi_outlier_squared(double r, double c1, double c2) {
  validate_ratios(c1, c2);
  if (!(r > 0.0 && r <= 1.0)) {
    throw DomainError("xi_outlier needs r in (0, 1]");
  }
  const double a = (1.0 - c1) * (1.0 - c2);
  const double one_minus_r = 1.0 - r;
  const double value = one_minus_r * one_minus_r * (2.0 * a * r + c1 + c2 - 2.0 * c1 * c2) *
                       (a * r * r - c1 * c2) / (r * r);
  // Rounding at r = r_c can leave a value of order -1e-17.
  if (value < -1e-13) {
    throw DomainError("xi_outlier is undefined below the threshold r_c");
  }
  return std::max(value, 0.0);
}

double xi_outlier(double r, double c1, double c2) { return std::sqrt(xi_outlier_squared(r, c1, c2)); }

double xi_tracy_widom(double c1, double c2) {
  const SpectralConstants k = edges(c1, c2);
  const double one_minus = 1.0 - k.d_plus;
  return std::cbrt(k.d_plus * k.d_plus * one_minus * one_minus /
                   std::sqrt(c1 * c2 * (1.0 - c1) * (1.0 - c2)));
}

}  // namespace hdcca
