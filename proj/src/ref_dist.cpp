#include "hdcca/ref_dist.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <math.h>  // Boost 1.74 pchip calls isnan unqualified

#include <Eigen/Eigenvalues>
#include <boost/math/interpolators/pchip.hpp>

#include "hdcca/errors.hpp"
#include "hdcca/parallel.hpp"

namespace hdcca {

namespace detail {
// Generated from data/tw1_table.txt at configure time.
extern const char* const kTw1TableText;
}  // namespace detail

struct TracyWidomTable::Interpolant {
  boost::math::interpolators::pchip<std::vector<double>> spline;
};

TracyWidomTable::TracyWidomTable(std::vector<double> xs, std::vector<double> fs, std::string provenance)
    : xs_(std::move(xs)), fs_(std::move(fs)), provenance_(std::move(provenance)) {
  if (xs_.size() < 4) throw ConfigError("Tracy-Widom table needs at least 4 rows");
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    if (!(xs_[i] > xs_[i - 1])) throw ConfigError("Tracy-Widom grid must be strictly increasing");
    if (fs_[i] < fs_[i - 1]) throw ConfigError("Tracy-Widom values must be nondecreasing");
  }
  auto xs_copy = xs_;
  auto fs_copy = fs_;
  interp_ = std::make_shared<const Interpolant>(
      Interpolant{boost::math::interpolators::pchip<std::vector<double>>(std::move(xs_copy), std::move(fs_copy))});
}

TracyWidomTable TracyWidomTable::parse(const std::string& text, std::string provenance) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> xs;
  std::vector<double> fs;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    double x = 0.0;
    double f = 0.0;
    if (!(row >> x >> f)) throw ConfigError("malformed Tracy-Widom table row: " + line);
    xs.push_back(x);
    fs.push_back(f);
  }
  return TracyWidomTable(std::move(xs), std::move(fs), std::move(provenance));
}

const TracyWidomTable& TracyWidomTable::embedded() {
  static const TracyWidomTable table =
      parse(detail::kTw1TableText, "Fredholm determinant, Gauss-Legendre Nystrom (scripts/gen_tw1_table.py)");
  return table;
}

double TracyWidomTable::cdf(double x) const {
  if (!(x >= lower() && x <= upper())) {
    std::ostringstream os;
    os << "x = " << x << " outside the Tracy-Widom table range [" << lower() << ", " << upper() << "]";
    throw DomainError(os.str());
  }
  return std::clamp(interp_->spline(x), 0.0, 1.0);
}

double TracyWidomTable::survival(double x) const { return 1.0 - cdf(x); }

double TracyWidomTable::quantile(double level) const {
  if (!(level > 0.0 && level < 1.0)) {
    throw DomainError("quantile level must lie in (0, 1)");
  }
  if (level <= fs_.front() || level >= fs_.back()) {
    throw DomainError("quantile level beyond the Tracy-Widom table");
  }
  // Bracket on the grid, then bisect the interpolant.
  const auto it = std::lower_bound(fs_.begin(), fs_.end(), level);
  const auto hi_index = static_cast<std::size_t>(it - fs_.begin());
  double lo = xs_[hi_index == 0 ? 0 : hi_index - 1];
  double hi = xs_[hi_index];
  for (int iter = 0; iter < 200 && hi - lo > 1e-14; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (interp_->spline(mid) < level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double tw1_cdf(double x) { return TracyWidomTable::embedded().cdf(x); }
double tw1_survival(double x) { return TracyWidomTable::embedded().survival(x); }
double tw1_quantile(double level) { return TracyWidomTable::embedded().quantile(level); }

std::optional<double> GoeGapQuantileTable::lookup(int j1) const {
  const auto it = quantiles.find(j1);
  if (it == quantiles.end()) return std::nullopt;
  return it->second;
}

GoeGapQuantileTable reference_goe_gap_table() {
  GoeGapQuantileTable table;
  table.alpha = 0.05;
  table.variance_scale = 0.5;
  table.reps = 0;
  table.quantiles = {{2, 3.462}, {3, 4.593}, {4, 5.459}, {5, 6.191}, {6, 6.838},
                     {7, 7.424}, {8, 7.964}, {9, 8.468}, {10, 8.942}};
  table.provenance = "reference table, 1e8 replicates";
  return table;
}

std::vector<double> goe_gap_samples(int j1, double variance_scale, long reps, SampleSeed seed, int workers) {
  if (j1 < 2) throw DomainError("goe gap needs j1 >= 2");
  if (!(variance_scale > 0.0)) throw DomainError("variance_scale must be positive");
  if (reps < 1) throw DomainError("reps must be positive");
  constexpr long kBlock = 4096;
  const long blocks = (reps + kBlock - 1) / kBlock;
  std::vector<double> gaps(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(blocks), workers, [&](std::size_t b) {
    GaussianStream stream(seed.child(b));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(j1);
    const long begin = static_cast<long>(b) * kBlock;
    const long end = std::min(reps, begin + kBlock);
    for (long i = begin; i < end; ++i) {
      const Eigen::MatrixXd g = sample_goe(j1, variance_scale, stream);
      solver.compute(g, Eigen::EigenvaluesOnly);
      const auto& ev = solver.eigenvalues();
      gaps[static_cast<std::size_t>(i)] = ev(j1 - 1) - ev(0);
    }
  });
  return gaps;
}

double type7_quantile(std::vector<double>& draws, double level) {
  if (draws.empty()) throw DomainError("quantile of an empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  const double h = (static_cast<double>(draws.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, draws.size() - 1);
  std::nth_element(draws.begin(), draws.begin() + static_cast<long>(lo), draws.end());
  const double below = draws[lo];
  double above = below;
  if (hi != lo) {
    above = *std::min_element(draws.begin() + static_cast<long>(lo) + 1, draws.end());
  }
  return below + (h - static_cast<double>(lo)) * (above - below);
}

double goe_gap_quantile(int j1, double alpha, double variance_scale, long reps, SampleSeed seed, int workers) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (reps < kMinGoeGapReps) throw DomainError("goe_gap_quantile needs at least 1e4 replications");
  std::vector<double> gaps = goe_gap_samples(j1, variance_scale, reps, seed, workers);
  return type7_quantile(gaps, 1.0 - alpha);
}

GoeGapQuantileTable build_goe_gap_table(std::span<const int> j1s, double alpha, double variance_scale, long reps,
                                        SampleSeed seed, int workers) {
  GoeGapQuantileTable table;
  table.alpha = alpha;
  table.variance_scale = variance_scale;
  table.reps = reps;
  table.seed = seed;
  std::ostringstream os;
  os << "Monte Carlo, " << reps << " replicates, seed " << seed.root_seed << "/" << seed.stream_id;
  table.provenance = os.str();
  for (const int j1 : j1s) {
    table.quantiles[j1] = goe_gap_quantile(j1, alpha, variance_scale, reps, seed.child(static_cast<std::uint64_t>(j1)),
                                           workers);
  }
  return table;
}

}  // namespace hdcca
