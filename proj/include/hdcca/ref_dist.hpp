#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdcca/sampling.hpp"

namespace hdcca {

// Tracy-Widom (beta = 1) distribution function from an embedded grid,
// interpolated with monotone piecewise cubic Hermite (PCHIP).
//
// The grid in data/tw1_table.txt is regenerated by scripts/gen_tw1_table.py
// from a Nystrom discretisation of the Fredholm determinant.
class TracyWidomTable {
 public:
  // The embedded table, parsed once on first use.
  static const TracyWidomTable& embedded();

  // Parses whitespace-separated "x F1(x)" rows; '#' starts a comment line.
  static TracyWidomTable parse(const std::string& text, std::string provenance);

  double lower() const { return xs_.front(); }
  double upper() const { return xs_.back(); }
  std::span<const double> grid() const { return xs_; }
  std::span<const double> values() const { return fs_; }
  const std::string& provenance() const { return provenance_; }

  // Throw DomainError outside [lower(), upper()].
  double cdf(double x) const;
  double survival(double x) const;
  // Throws DomainError unless 0 < alpha < 1.
  double quantile(double level) const;

 private:
  TracyWidomTable(std::vector<double> xs, std::vector<double> fs, std::string provenance);

  struct Interpolant;
  std::vector<double> xs_;
  std::vector<double> fs_;
  std::string provenance_;
  std::shared_ptr<const Interpolant> interp_;
};

double tw1_cdf(double x);
double tw1_survival(double x);
double tw1_quantile(double level);

// Upper-alpha quantiles q_alpha(j1) of lambda_1(G) - lambda_{j1}(G) for a
// j1 x j1 matrix G drawn by sample_goe.
struct GoeGapQuantileTable {
  double alpha = 0.05;
  double variance_scale = 0.5;
  long reps = 0;  // 0 for tabulated reference values
  SampleSeed seed;
  std::map<int, double> quantiles;
  std::string provenance;

  std::optional<double> lookup(int j1) const;
  int max_j1() const { return quantiles.empty() ? 0 : quantiles.rbegin()->first; }
};

// Reference 5% values for j1 = 2..10 at variance_scale 1/2, tabulated from
// 1e8 Monte Carlo replicates.
GoeGapQuantileTable reference_goe_gap_table();

inline constexpr long kMinGoeGapReps = 10'000;

// Gap samples lambda_1 - lambda_{j1}, replication-ordered. Replications are
// split into fixed blocks of 4096, block b drawing from seed.child(b), so the
// output does not depend on the worker count.
std::vector<double> goe_gap_samples(int j1, double variance_scale, long reps, SampleSeed seed, int workers = 0);

// Type-7 (linear interpolation between order statistics) quantile at
// probability level. Reorders the input.
double type7_quantile(std::vector<double>& draws, double level);

// Monte Carlo upper-alpha quantile of the GOE gap. Needs reps >= 1e4.
double goe_gap_quantile(int j1, double alpha, double variance_scale, long reps, SampleSeed seed, int workers = 0);

GoeGapQuantileTable build_goe_gap_table(std::span<const int> j1s, double alpha, double variance_scale, long reps,
                                        SampleSeed seed, int workers = 0);

}  // namespace hdcca
