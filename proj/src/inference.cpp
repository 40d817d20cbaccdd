#include "hdcca/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hdcca/errors.hpp"

namespace hdcca {

namespace {

constexpr double kUnitSlack = 1e-12;

double lambda_at(const SampleSpectrum& spectrum, int index_1based) {
  return spectrum.lambdas.at(static_cast<std::size_t>(index_1based - 1));
}

}  // namespace

double default_epsilon(int n) {
  if (n < 16) throw DomainError("default_epsilon needs n >= 16 so that log(log(n)) > 0");
  const double dn = static_cast<double>(n);
  return std::log(std::log(dn)) / std::pow(dn, 2.0 / 3.0);
}

int estimate_k0(std::span<const double> lambdas, double d_plus, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  const double threshold = d_plus + epsilon;
  int count = 0;
  for (const double l : lambdas) {
    if (l >= threshold) ++count;
  }
  return count;
}

int estimate_k0(const SampleSpectrum& spectrum, std::optional<double> epsilon) {
  const double eps = epsilon.value_or(default_epsilon(spectrum.effective_n));
  return estimate_k0(spectrum.lambdas, spectrum.config.constants().d_plus, eps);
}

SpikeEstimate estimate_spikes(const SampleSpectrum& spectrum, int k_hat) {
  if (k_hat < 0 || k_hat > static_cast<int>(spectrum.lambdas.size())) {
    throw DomainError("k_hat must lie between 0 and the number of eigenvalues");
  }
  const double c1 = spectrum.config.c1();
  const double c2 = spectrum.config.c2();
  SpikeEstimate est;
  est.k_hat = k_hat;
  for (int i = 0; i < k_hat; ++i) {
    const PhiResult phi = phi_invert(spectrum.lambdas[static_cast<std::size_t>(i)], c1, c2);
    est.r_hat_unpooled.push_back(phi.r_hat);
    est.clamped.push_back(phi.clamped);
  }
  est.r_hat = est.r_hat_unpooled;
  for (const double r : est.r_hat) est.rho_hat.push_back(std::sqrt(r));
  return est;
}

TestReport test_independence(const SampleSpectrum& spectrum, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (spectrum.lambdas.empty()) throw ShapeError("empty spectrum");
  const ModelConfig& config = spectrum.config;
  const double d_plus = config.constants().d_plus;
  const double xi_tw = xi_tracy_widom(config.c1(), config.c2());
  const double n23 = std::pow(static_cast<double>(config.n()), 2.0 / 3.0);
  const double lambda1 = spectrum.lambdas.front();

  const auto& table = TracyWidomTable::embedded();
  TestReport report;
  report.name = "independence";
  report.alpha = alpha;
  report.statistic = n23 * (lambda1 - d_plus) / xi_tw;
  report.quantile = table.quantile(1.0 - alpha);
  report.reject = lambda1 > report.quantile * xi_tw / n23 + d_plus;
  if (report.statistic > table.upper()) {
    report.p_value = table.survival(table.upper());
    report.p_value_bounded = true;
  } else if (report.statistic < table.lower()) {
    report.p_value = 1.0;
    report.p_value_bounded = true;
  } else {
    report.p_value = table.survival(report.statistic);
  }
  report.inputs = {{"lambda_1", lambda1}, {"p", config.p()},        {"q", config.q()},
                   {"n", config.n()},     {"d_plus", d_plus},       {"xi_tw", xi_tw}};
  return report;
}

TestReport test_multiplicity(const SampleSpectrum& spectrum, int j0, int j1, double alpha,
                             const GoeGapQuantileTable& quantile_source, std::optional<int> k_hat) {
  const int k = k_hat.value_or(estimate_k0(spectrum));
  if (j0 < 1 || j1 < 2) throw DomainError("multiplicity test needs j0 >= 1 and j1 >= 2");
  if (j0 + j1 - 1 > k) {
    std::ostringstream os;
    os << "group " << j0 << ".." << j0 + j1 - 1 << " extends beyond the " << k << " detected spikes";
    throw DomainError(os.str());
  }
  if (std::abs(alpha - quantile_source.alpha) > 1e-12) {
    throw DomainError("alpha does not match the level of the GOE gap quantile table");
  }
  const std::optional<double> q = quantile_source.lookup(j1);
  if (!q) {
    throw DomainError("GOE gap quantile table has no entry for j1 = " + std::to_string(j1));
  }

  const ModelConfig& config = spectrum.config;
  const double c1 = config.c1();
  const double c2 = config.c2();
  const double r_c = config.constants().r_c;
  double r_sum = 0.0;
  for (int i = j0; i < j0 + j1; ++i) r_sum += phi_invert(lambda_at(spectrum, i), c1, c2).r_hat;
  const double r_bar = r_sum / j1;
  if (!(r_bar > r_c)) {
    std::ostringstream os;
    os << "pooled r_hat = " << r_bar << " is not above r_c = " << r_c << "; fluctuation scale undefined";
    throw DomainError(os.str());
  }
  const double xi = xi_outlier(r_bar, c1, c2);
  const double gap = lambda_at(spectrum, j0) - lambda_at(spectrum, j0 + j1 - 1);
  const double scaled_gap = std::sqrt(static_cast<double>(config.n())) * gap;

  TestReport report;
  report.name = "multiplicity";
  report.alpha = alpha;
  if (xi > 0.0) {
    report.statistic = scaled_gap / xi;
  } else {
    report.statistic = gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  report.quantile = *q;
  report.reject = report.statistic > report.quantile;
  report.inputs = {{"j0", j0}, {"j1", j1}, {"r_bar", r_bar}, {"xi", xi}, {"n", config.n()}};
  return report;
}

PipelineResult estimate_ccc_pipeline(const SampleSpectrum& spectrum, const PipelineOptions& options) {
  PipelineResult result;
  result.reports.push_back(test_independence(spectrum, options.alpha));
  result.independence_rejected = result.reports.front().reject;
  const double epsilon = options.epsilon.value_or(default_epsilon(spectrum.effective_n));
  result.estimate.epsilon_n = epsilon;
  if (!result.independence_rejected) {
    return result;
  }

  const int k_hat = estimate_k0(spectrum, epsilon);
  SpikeEstimate est = estimate_spikes(spectrum, k_hat);
  est.epsilon_n = epsilon;

  const int max_j1 = options.quantiles.max_j1();
  int j0 = 1;
  while (j0 < k_hat) {
    int accepted = 1;
    for (int j1 = 2; j0 + j1 - 1 <= k_hat && j1 <= max_j1; ++j1) {
      TestReport report =
          test_multiplicity(spectrum, j0, j1, options.quantiles.alpha, options.quantiles, k_hat);
      const bool reject = report.reject;
      result.reports.push_back(std::move(report));
      if (reject) break;
      accepted = j1;
    }
    if (accepted >= 2) {
      const auto begin = est.r_hat_unpooled.begin() + (j0 - 1);
      const double pooled = std::accumulate(begin, begin + accepted, 0.0) / accepted;
      std::fill(est.r_hat.begin() + (j0 - 1), est.r_hat.begin() + (j0 - 1 + accepted), pooled);
      est.groups.push_back(MultiplicityGroup{j0, accepted, pooled});
      j0 += accepted;
    } else {
      ++j0;
    }
  }
  std::transform(est.r_hat.begin(), est.r_hat.end(), est.rho_hat.begin(), [](double r) { return std::sqrt(r); });
  result.estimate = std::move(est);
  return result;
}

PipelineResult estimate_ccc_pipeline(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, bool centered,
                                     const PipelineOptions& options) {
  return estimate_ccc_pipeline(cca_eigenvalues(x, y, CcaOptions{centered, false}), options);
}

InformationCriteria information_criteria(std::span<const double> lambdas, int p, int q, int n) {
  if (p < 1 || q < 1 || n < 1) throw DomainError("p, q and n must be positive");
  const int m = std::min(p, q);
  if (static_cast<int>(lambdas.size()) > m) throw ShapeError("more eigenvalues than min(p, q)");
  const double inf = std::numeric_limits<double>::infinity();

  // suffix_log[j] = sum_{i > j} log(1 - lambda_i), suffix_ratio[j] = sum_{i > j} lambda_i / (1 - lambda_i).
  std::vector<double> suffix_log(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<double> suffix_ratio(static_cast<std::size_t>(m) + 1, 0.0);
  for (int i = m; i >= 1; --i) {
    const double l = i <= static_cast<int>(lambdas.size()) ? lambdas[static_cast<std::size_t>(i - 1)] : 0.0;
    const bool degenerate = l >= 1.0 - kUnitSlack;
    const auto idx = static_cast<std::size_t>(i);
    suffix_log[idx - 1] = suffix_log[idx] + (degenerate ? -inf : std::log1p(-l));
    suffix_ratio[idx - 1] = suffix_ratio[idx] + (degenerate ? inf : l / (1.0 - l));
  }

  InformationCriteria ic;
  ic.aic.assign(static_cast<std::size_t>(m) + 1, 0.0);
  ic.bic.assign(static_cast<std::size_t>(m) + 1, 0.0);
  ic.cp.assign(static_cast<std::size_t>(m) + 1, 0.0);
  const double dn = static_cast<double>(n);
  const double log_n = std::log(dn);
  for (int j = 1; j <= m; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    const double dof = static_cast<double>(p - j) * static_cast<double>(q - j);
    const double fit = -dn * suffix_log[idx];
    ic.aic[idx] = fit - 2.0 * dof;
    ic.bic[idx] = fit - log_n * dof;
    ic.cp[idx] = dn * suffix_ratio[idx] - 2.0 * dof;
  }
  return ic;
}

ModelSelectionCounts model_selection_counts(std::span<const double> lambdas, int p, int q, int n) {
  const InformationCriteria ic = information_criteria(lambdas, p, q, n);
  auto argmin = [](const std::vector<double>& v) {
    return static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
  };
  return ModelSelectionCounts{argmin(ic.aic), argmin(ic.bic), argmin(ic.cp)};
}

double asymptotic_power(double r1, const ModelConfig& config, double alpha, double variance_scale) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(variance_scale > 0.0)) throw DomainError("variance_scale must be positive");
  const double c1 = config.c1();
  const double c2 = config.c2();
  const std::optional<double> gamma = gamma_outlier(r1, c1, c2);
  if (!gamma) throw DomainError("asymptotic_power needs r1 > r_c");
  const double xi = xi_outlier(r1, c1, c2);
  if (xi == 0.0) return 1.0;  // r1 = 1: lambda_1 = 1 > d+ almost surely
  const double n = static_cast<double>(config.n());
  const double d_plus = config.constants().d_plus;
  const double threshold =
      (std::pow(n, -1.0 / 6.0) * tw1_quantile(1.0 - alpha) * xi_tracy_widom(c1, c2) + std::sqrt(n) * (d_plus - *gamma)) /
      xi;
  const double sd = std::sqrt(2.0 * variance_scale);
  return 0.5 * std::erfc(threshold / (sd * std::sqrt(2.0)));
}

}  // namespace hdcca
