#include "hdcca/cca_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hdcca/errors.hpp"

namespace hdcca {

namespace {

constexpr double kClampSlack = 1e-12;

struct ThinBasis {
  Eigen::MatrixXd q;  // n x d, orthonormal columns
  Eigen::MatrixXd r;  // d x d upper triangular
};

ThinBasis thin_basis(const Eigen::MatrixXd& rows_as_variables, const char* name) {
  const Eigen::Index n = rows_as_variables.cols();
  const Eigen::Index d = rows_as_variables.rows();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rows_as_variables.transpose());
  const Eigen::MatrixXd& packed = qr.matrixQR();

  const Eigen::VectorXd diag = packed.diagonal().cwiseAbs();
  const double largest = diag.maxCoeff();
  const double tol = static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon() * 16.0 * largest;
  if (!(largest > 0.0) || diag.minCoeff() <= tol) {
    std::ostringstream os;
    os << name << " does not have full row rank (|R_ii| min " << diag.minCoeff() << ", max " << largest << ")";
    throw RankDeficiencyError(os.str());
  }

  ThinBasis basis;
  basis.q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
  basis.r = packed.topRows(d).triangularView<Eigen::Upper>();
  return basis;
}

double clamp_unit(double lambda) {
  if (!(lambda >= -kClampSlack && lambda <= 1.0 + kClampSlack)) {
    std::ostringstream os;
    os << "squared canonical correlation " << lambda << " outside [0, 1]";
    throw NumericalError(os.str());
  }
  return std::clamp(lambda, 0.0, 1.0);
}

}  // namespace

CenteredData center_observations(const Eigen::MatrixXd& data) {
  if (data.cols() < 2) {
    throw ShapeError("centering needs at least 2 observations");
  }
  CenteredData out;
  out.data = data.colwise() - data.rowwise().mean();
  out.effective_n = static_cast<int>(data.cols()) - 1;
  return out;
}

SampleSpectrum cca_eigenvalues(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, CcaOptions options) {
  if (x.cols() != y.cols()) {
    throw ShapeError("X and Y must have the same number of observations");
  }
  if (x.rows() < 1 || y.rows() < 1) {
    throw ShapeError("X and Y need at least one variable each");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw ShapeError("X and Y must have finite entries");
  }
  const int p = static_cast<int>(x.rows());
  const int q = static_cast<int>(y.rows());
  const int n = static_cast<int>(x.cols());
  const int effective_n = options.centered ? n : n - 1;
  if (effective_n <= p + q) {
    std::ostringstream os;
    os << "need more observations than p + q = " << p + q << " (effective n = " << effective_n << ")";
    throw ShapeError(os.str());
  }

  ThinBasis bx;
  ThinBasis by;
  if (options.centered) {
    bx = thin_basis(x, "X");
    by = thin_basis(y, "Y");
  } else {
    bx = thin_basis(center_observations(x).data, "X");
    by = thin_basis(center_observations(y).data, "Y");
  }

  const Eigen::MatrixXd cosines = bx.q.transpose() * by.q;  // p x q
  const int m = std::min(p, q);
  std::vector<double> lambdas(m);
  std::optional<CanonicalDirections> directions;

  if (options.directions) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(cosines, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    for (int i = 0; i < m; ++i) lambdas[i] = clamp_unit(sigma(i) * sigma(i));
    const double scale = std::sqrt(static_cast<double>(effective_n));
    CanonicalDirections dirs;
    dirs.a = bx.r.triangularView<Eigen::Upper>().solve(svd.matrixU().leftCols(m)) * scale;
    dirs.b = by.r.triangularView<Eigen::Upper>().solve(svd.matrixV().leftCols(m)) * scale;
    directions = std::move(dirs);
  } else {
    // Eigenvalues of the smaller Gram matrix are the squared singular values.
    const Eigen::MatrixXd gram = p <= q ? Eigen::MatrixXd(cosines * cosines.transpose())
                                        : Eigen::MatrixXd(cosines.transpose() * cosines);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
    for (int i = 0; i < m; ++i) lambdas[i] = clamp_unit(ev(m - 1 - i));
  }
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());

  return SampleSpectrum{std::move(lambdas), effective_n, ModelConfig(p, q, effective_n), std::move(directions)};
}

EmpiricalSpectralDistribution::EmpiricalSpectralDistribution(std::span<const double> lambdas)
    : sorted_(lambdas.begin(), lambdas.end()) {
  if (sorted_.empty()) throw ShapeError("empirical distribution of an empty spectrum");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalSpectralDistribution::operator()(double x) const {
  const auto count = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return static_cast<double>(count) / static_cast<double>(sorted_.size());
}

double esd(const SampleSpectrum& spectrum, double x) {
  return EmpiricalSpectralDistribution(spectrum.lambdas)(x);
}

double ks_distance_to_lsd(std::span<const double> lambdas, double c1, double c2) {
  validate_ratios(c1, c2);
  const EmpiricalSpectralDistribution ecdf(lambdas);
  const auto& sorted = ecdf.sorted();
  const double m = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    // Ties form a single jump from i / m to j / m.
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double f = lsd_cdf(sorted[i], c1, c2);
    worst = std::max({worst, std::abs(static_cast<double>(i) / m - f), std::abs(static_cast<double>(j) / m - f)});
    i = j;
  }
  return worst;
}

double ks_distance_to_lsd(const SampleSpectrum& spectrum) {
  return ks_distance_to_lsd(spectrum.lambdas, spectrum.config.c1(), spectrum.config.c2());
}

}  // namespace hdcca
