#pragma once

// Seeded replication studies: spike-count estimators, spike-value estimates,
// edge and outlier fluctuations, null ESD convergence and GOE gap quantiles.
//
// Replication i of scenario s draws from SampleSeed{seed, s * 2^32 + i}, and
// reductions run in replication order, so results do not depend on the
// number of worker threads.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdcca/inference.hpp"
#include "hdcca/rmt_core.hpp"

namespace hdcca {

enum class StudyKind { kSpikeCount, kSpikeValues, kFluctuation, kNullEsd, kGoeGap };

std::string to_string(StudyKind kind);
StudyKind study_kind_from_string(const std::string& name);

struct Scenario {
  int p = 0;
  int q = 0;
  int n = 0;
  std::vector<double> spikes;
  std::string label;
};

struct StudyConfig {
  std::string name;
  StudyKind kind = StudyKind::kSpikeCount;
  std::vector<Scenario> scenarios;
  long reps = 200;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::optional<double> epsilon;  // default log(log n) / n^{2/3}
  double variance_scale = 0.5;
  int workers = 0;                // 0: hardware concurrency
  int histogram_bins = 40;
  std::vector<int> goe_j1 = {2, 3, 4, 5, 6, 7, 8, 9, 10};  // kGoeGap only
  std::string output_dir;         // empty: no files written

  void validate() const;
};

struct SummaryStat {
  long count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
};

SummaryStat summarize(const std::vector<double>& values);

struct Histogram {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<long> counts;
};

Histogram make_histogram(const std::vector<double>& values, int bins);

struct FluctuationSummary {
  // Per index i (1-based): raw lambda_i samples and summaries.
  std::vector<SummaryStat> lambda;
  std::vector<Histogram> lambda_hist;
  // Outlier indices (r_i > r_c): sqrt(n) (lambda_i - gamma_i) and the same
  // divided by xi(r_i).
  std::vector<int> outlier_index;
  std::vector<double> outlier_gamma;
  std::vector<double> outlier_xi;
  std::vector<SummaryStat> outlier_centered;
  std::vector<SummaryStat> outlier_normalized;
  std::vector<Histogram> outlier_hist;
  // Largest sticking eigenvalue: n^{2/3} (lambda_{k0+1} - d+) / xi_tw.
  int sticking_index = 0;
  SummaryStat sticking;
  Histogram sticking_hist;
  double sticking_ks_to_tw1 = 0.0;
  // sd of sqrt(n) (lambda_1 - gamma_1) / xi(r_1); about sqrt(2 * variance
  // scale) of the limiting Gaussian matrix.
  double outlier_sd_ratio = 0.0;
  std::vector<std::string> warnings;
  // Raw per-replication statistics, replication-major, for dumps.
  std::vector<std::vector<double>> lambda_samples;
  std::vector<double> sticking_samples;
};

struct NullEsdSummary {
  SummaryStat ks;
  double ks_max = 0.0;
  double edge_exceed_fraction = 0.0;  // fraction with lambda_1 > d+ + 0.05
  double rejection_rate = 0.0;        // independence test at alpha
  std::vector<double> ks_samples;
};

struct ScenarioResult {
  Scenario scenario;
  SpectralConstants constants;
  int true_k0 = 0;
  // kSpikeCount / kSpikeValues: histogram of each estimator over k = 0..min(p, q).
  std::map<std::string, std::vector<long>> k_counts;
  // kSpikeValues: r_hat_i over replications with i <= k_hat.
  std::vector<SummaryStat> r_hat;
  std::optional<FluctuationSummary> fluctuation;
  std::optional<NullEsdSummary> null_esd;
};

struct StudyResult {
  StudyConfig config;
  std::vector<ScenarioResult> scenarios;
  // kGoeGap only.
  std::optional<GoeGapQuantileTable> goe_table;
  double elapsed_seconds = 0.0;
};

StudyResult run_k0_study(const StudyConfig& config);
StudyResult run_spike_study(const StudyConfig& config);
StudyResult run_fluctuation_study(const StudyConfig& config);
StudyResult run_null_esd_study(const StudyConfig& config);
StudyResult run_goe_gap_study(const StudyConfig& config);
StudyResult run_study(const StudyConfig& config);

// Named configurations mirroring the published simulation tables/figures.
std::vector<std::string> preset_names();
StudyConfig preset(const std::string& name);

// Reads a JSON study description; see README for the keys.
StudyConfig load_study_config(const std::string& path);
StudyConfig parse_study_config(const std::string& json_text);

// CSV tables and a plain-text summary into config.output_dir. CSV content
// depends only on the configuration; timings appear in the summary only.
void write_study_outputs(const StudyResult& result);
std::string format_summary(const StudyResult& result);

// Table-style buckets used by the published count tables: <= k0-2, k0-1, k0, k0+1, >= k0+2.
std::vector<long> bucket_counts(const std::vector<long>& counts, int k0);

}  // namespace hdcca
