#include "hdcca/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hdcca/cca_engine.hpp"
#include "hdcca/errors.hpp"
#include "hdcca/parallel.hpp"
#include "hdcca/sampling.hpp"

namespace hdcca {

namespace {

using Clock = std::chrono::steady_clock;

const std::vector<double> kTableSpikes = {0.8, 0.6, 0.4, 0.2};
const std::vector<double> kTableSpikesTied = {0.8, 0.6, 0.4, 0.4};

SampleSeed replication_seed(std::uint64_t root, std::size_t scenario, std::size_t rep) {
  return SampleSeed{root, (static_cast<std::uint64_t>(scenario) << 32) | static_cast<std::uint64_t>(rep)};
}

SampleSpectrum simulate_spectrum(const Scenario& s, SampleSeed seed) {
  const ModelConfig config(s.p, s.q, s.n);
  const DataMatrixPair data = sample_spiked(config, SpikeSpec(s.spikes), seed);
  return cca_eigenvalues(data.x, data.y, CcaOptions{true, false});
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string scenario_label(const Scenario& s) {
  if (!s.label.empty()) return s.label;
  std::ostringstream os;
  os << "p" << s.p << "_q" << s.q << "_n" << s.n;
  return os.str();
}

ScenarioResult scenario_header(const Scenario& s) {
  ScenarioResult r;
  r.scenario = s;
  const ModelConfig config(s.p, s.q, s.n);
  r.constants = config.constants();
  r.true_k0 = SpikeSpec(s.spikes).count_detectable(r.constants.r_c);
  return r;
}

// Two-sided sup distance between the empirical CDF of `samples` and a
// continuous reference CDF.
template <typename Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf) {
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    worst = std::max({worst, std::abs(static_cast<double>(i) / m - f), std::abs(static_cast<double>(i + 1) / m - f)});
  }
  return worst;
}

double tw1_cdf_extended(double x) {
  const auto& table = TracyWidomTable::embedded();
  if (x <= table.lower()) return 0.0;
  if (x >= table.upper()) return 1.0;
  return table.cdf(x);
}

}  // namespace

std::string to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::kSpikeCount: return "k0";
    case StudyKind::kSpikeValues: return "spikes";
    case StudyKind::kFluctuation: return "fluctuation";
    case StudyKind::kNullEsd: return "null-esd";
    case StudyKind::kGoeGap: return "goe-gap";
  }
  return "unknown";
}

StudyKind study_kind_from_string(const std::string& name) {
  for (const StudyKind k : {StudyKind::kSpikeCount, StudyKind::kSpikeValues, StudyKind::kFluctuation,
                            StudyKind::kNullEsd, StudyKind::kGoeGap}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown study kind '" + name + "' (expected k0, spikes, fluctuation, null-esd or goe-gap)");
}

void StudyConfig::validate() const {
  if (reps < 1) throw ConfigError("replication count must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(variance_scale > 0.0)) throw ConfigError("variance_scale must be positive");
  if (epsilon && !(*epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (histogram_bins < 1) throw ConfigError("histogram_bins must be positive");
  if (kind == StudyKind::kGoeGap) {
    if (goe_j1.empty()) throw ConfigError("goe-gap study needs at least one j1");
    if (reps < kMinGoeGapReps) throw ConfigError("goe-gap study needs at least 10000 replications");
    for (const int j : goe_j1) {
      if (j < 2) throw ConfigError("goe-gap j1 values must be >= 2");
    }
    return;
  }
  if (scenarios.empty()) throw ConfigError("study needs at least one scenario");
  for (const Scenario& s : scenarios) {
    try {
      const ModelConfig config(s.p, s.q, s.n);
      SpikeSpec(s.spikes).check_fits(config);
      if (!epsilon) default_epsilon(s.n);
    } catch (const std::exception& e) {
      throw ConfigError("invalid scenario " + scenario_label(s) + ": " + e.what());
    }
  }
}

SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat s;
  s.count = static_cast<long>(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

Histogram make_histogram(const std::vector<double>& values, int bins) {
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(std::max(bins, 1)), 0);
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lower = *lo;
  h.upper = *hi;
  const double width = (h.upper - h.lower) / static_cast<double>(h.counts.size());
  for (const double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - h.lower) / width) : 0;
    b = std::min(b, h.counts.size() - 1);
    ++h.counts[b];
  }
  return h;
}

std::vector<long> bucket_counts(const std::vector<long>& counts, int k0) {
  std::vector<long> buckets(5, 0);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const int d = static_cast<int>(k) - k0;
    const int row = std::clamp(d + 2, 0, 4);
    buckets[static_cast<std::size_t>(row)] += counts[k];
  }
  return buckets;
}

StudyResult run_k0_study(const StudyConfig& config) {
  config.validate();
  const auto start = Clock::now();
  StudyResult result;
  result.config = config;
  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    const Scenario& s = config.scenarios[si];
    ScenarioResult sr = scenario_header(s);
    const auto reps = static_cast<std::size_t>(config.reps);
    std::vector<std::array<int, 4>> per_rep(reps);
    parallel_for(reps, config.workers, [&](std::size_t i) {
      const SampleSpectrum spectrum = simulate_spectrum(s, replication_seed(config.seed, si, i));
      const ModelSelectionCounts ms = model_selection_counts(spectrum.lambdas, s.p, s.q, spectrum.effective_n);
      per_rep[i] = {estimate_k0(spectrum, config.epsilon), ms.aic, ms.bic, ms.cp};
    });
    const std::size_t width = static_cast<std::size_t>(std::min(s.p, s.q)) + 1;
    const char* names[4] = {"k0", "aic", "bic", "cp"};
    for (int e = 0; e < 4; ++e) {
      std::vector<long> counts(width, 0);
      for (const auto& row : per_rep) ++counts[static_cast<std::size_t>(row[static_cast<std::size_t>(e)])];
      sr.k_counts[names[e]] = std::move(counts);
    }
    result.scenarios.push_back(std::move(sr));
  }
  result.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

StudyResult run_spike_study(const StudyConfig& config) {
  config.validate();
  const auto start = Clock::now();
  StudyResult result;
  result.config = config;
  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    const Scenario& s = config.scenarios[si];
    ScenarioResult sr = scenario_header(s);
    const auto reps = static_cast<std::size_t>(config.reps);
    std::vector<std::vector<double>> per_rep(reps);
    parallel_for(reps, config.workers, [&](std::size_t i) {
      const SampleSpectrum spectrum = simulate_spectrum(s, replication_seed(config.seed, si, i));
      const int k_hat = estimate_k0(spectrum, config.epsilon);
      per_rep[i] = estimate_spikes(spectrum, k_hat).r_hat;
    });
    std::vector<long> counts(static_cast<std::size_t>(std::min(s.p, s.q)) + 1, 0);
    for (const auto& r : per_rep) ++counts[r.size()];
    sr.k_counts["k0"] = std::move(counts);
    for (std::size_t idx = 0; idx < s.spikes.size(); ++idx) {
      std::vector<double> values;
      for (const auto& r : per_rep) {
        if (idx < r.size()) values.push_back(r[idx]);
      }
      sr.r_hat.push_back(summarize(values));
    }
    result.scenarios.push_back(std::move(sr));
  }
  result.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

StudyResult run_fluctuation_study(const StudyConfig& config) {
  config.validate();
  const auto start = Clock::now();
  StudyResult result;
  result.config = config;
  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    const Scenario& s = config.scenarios[si];
    ScenarioResult sr = scenario_header(s);
    const ModelConfig model(s.p, s.q, s.n);
    const double c1 = model.c1();
    const double c2 = model.c2();
    const int k0 = sr.true_k0;
    const int tracked = std::min(model.min_dim(), std::max(static_cast<int>(s.spikes.size()) + 1, 4));

    const auto reps = static_cast<std::size_t>(config.reps);
    std::vector<std::vector<double>> per_rep(reps);
    parallel_for(reps, config.workers, [&](std::size_t i) {
      const SampleSpectrum spectrum = simulate_spectrum(s, replication_seed(config.seed, si, i));
      per_rep[i].assign(spectrum.lambdas.begin(), spectrum.lambdas.begin() + tracked);
    });

    FluctuationSummary fs;
    fs.lambda_samples = per_rep;
    const double n = static_cast<double>(s.n);
    for (int idx = 0; idx < tracked; ++idx) {
      std::vector<double> values;
      values.reserve(reps);
      for (const auto& row : per_rep) values.push_back(row[static_cast<std::size_t>(idx)]);
      fs.lambda.push_back(summarize(values));
      fs.lambda_hist.push_back(make_histogram(values, config.histogram_bins));
    }

    for (std::size_t idx = 0; idx < s.spikes.size(); ++idx) {
      const double r = s.spikes[idx];
      if (std::abs(r - sr.constants.r_c) < 0.02) {
        std::ostringstream os;
        os << "spike " << idx + 1 << " (r = " << r << ") is within 0.02 of r_c = " << sr.constants.r_c
           << "; limit laws need separation";
        fs.warnings.push_back(os.str());
      }
    }

    for (int idx = 0; idx < k0 && idx < tracked; ++idx) {
      const double r = s.spikes[static_cast<std::size_t>(idx)];
      const double gamma = *gamma_outlier(r, c1, c2);
      const double xi = xi_outlier(r, c1, c2);
      std::vector<double> centered;
      std::vector<double> normalized;
      for (const auto& row : per_rep) {
        const double v = std::sqrt(n) * (row[static_cast<std::size_t>(idx)] - gamma);
        centered.push_back(v);
        if (xi > 0.0) normalized.push_back(v / xi);
      }
      fs.outlier_index.push_back(idx + 1);
      fs.outlier_gamma.push_back(gamma);
      fs.outlier_xi.push_back(xi);
      const SummaryStat cs = summarize(centered);
      fs.outlier_centered.push_back(cs);
      fs.outlier_normalized.push_back(summarize(normalized));
      fs.outlier_hist.push_back(make_histogram(normalized.empty() ? centered : normalized, config.histogram_bins));
      if (cs.count > 1 && cs.sd > 0.0 && std::abs(cs.mean) > 5.0 * cs.sd / std::sqrt(static_cast<double>(cs.count))) {
        std::ostringstream os;
        os << "centred statistic for lambda_" << idx + 1 << " drifts (mean " << cs.mean << ", sd " << cs.sd
           << "); gamma may not describe this index";
        fs.warnings.push_back(os.str());
      }
      if (idx == 0 && xi > 0.0) fs.outlier_sd_ratio = cs.sd / xi;
    }

    if (k0 < tracked) {
      fs.sticking_index = k0 + 1;
      const double xi_tw = xi_tracy_widom(c1, c2);
      const double n23 = std::pow(n, 2.0 / 3.0);
      for (const auto& row : per_rep) {
        fs.sticking_samples.push_back(n23 * (row[static_cast<std::size_t>(k0)] - sr.constants.d_plus) / xi_tw);
      }
      fs.sticking = summarize(fs.sticking_samples);
      fs.sticking_hist = make_histogram(fs.sticking_samples, config.histogram_bins);
      fs.sticking_ks_to_tw1 = ks_distance(fs.sticking_samples, tw1_cdf_extended);
    }
    sr.fluctuation = std::move(fs);
    result.scenarios.push_back(std::move(sr));
  }
  result.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

StudyResult run_null_esd_study(const StudyConfig& config) {
  config.validate();
  const auto start = Clock::now();
  StudyResult result;
  result.config = config;
  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    const Scenario& s = config.scenarios[si];
    ScenarioResult sr = scenario_header(s);
    const auto reps = static_cast<std::size_t>(config.reps);
    struct Row {
      double ks;
      double lambda1;
      bool reject;
    };
    std::vector<Row> per_rep(reps);
    parallel_for(reps, config.workers, [&](std::size_t i) {
      const SampleSpectrum spectrum = simulate_spectrum(s, replication_seed(config.seed, si, i));
      per_rep[i] = Row{ks_distance_to_lsd(spectrum), spectrum.lambdas.front(),
                       test_independence(spectrum, config.alpha).reject};
    });
    NullEsdSummary ns;
    long exceed = 0;
    long rejected = 0;
    for (const Row& row : per_rep) {
      ns.ks_samples.push_back(row.ks);
      ns.ks_max = std::max(ns.ks_max, row.ks);
      if (row.lambda1 > sr.constants.d_plus + 0.05) ++exceed;
      if (row.reject) ++rejected;
    }
    ns.ks = summarize(ns.ks_samples);
    ns.edge_exceed_fraction = static_cast<double>(exceed) / static_cast<double>(reps);
    ns.rejection_rate = static_cast<double>(rejected) / static_cast<double>(reps);
    sr.null_esd = std::move(ns);
    result.scenarios.push_back(std::move(sr));
  }
  result.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

StudyResult run_goe_gap_study(const StudyConfig& config) {
  config.validate();
  const auto start = Clock::now();
  StudyResult result;
  result.config = config;
  result.goe_table = build_goe_gap_table(config.goe_j1, config.alpha, config.variance_scale, config.reps,
                                         SampleSeed{config.seed, 0}, config.workers);
  result.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

StudyResult run_study(const StudyConfig& config) {
  switch (config.kind) {
    case StudyKind::kSpikeCount: return run_k0_study(config);
    case StudyKind::kSpikeValues: return run_spike_study(config);
    case StudyKind::kFluctuation: return run_fluctuation_study(config);
    case StudyKind::kNullEsd: return run_null_esd_study(config);
    case StudyKind::kGoeGap: return run_goe_gap_study(config);
  }
  throw ConfigError("unknown study kind");
}

std::vector<std::string> preset_names() {
  return {"table1",   "table1-full",   "table2",   "table2-full",  "table2-small", "table3_1",    "table3_1-full",
          "table3_1-small", "table3_2", "table3_2-full", "table3_2-small", "table4", "figure1", "figure1-full",
          "figure2",  "figure2-full",  "null-esd"};
}

StudyConfig preset(const std::string& name) {
  StudyConfig c;
  c.name = name;
  auto table1 = [] {
    std::vector<Scenario> v;
    for (const int p : {10, 60, 110, 160, 210, 260}) v.push_back(Scenario{p, p / 2, 1000, kTableSpikes, ""});
    return v;
  };
  auto table2 = [](const std::vector<double>& spikes) {
    std::vector<Scenario> v;
    for (const int p : {10, 60, 110, 160, 210, 260}) v.push_back(Scenario{p, p / 2, p * 10, spikes, ""});
    return v;
  };
  const Scenario figure1{500, 1000, 5000, {0.5, 0.4, 0.3, 0.16}, "figure1"};
  const Scenario figure2{500, 1000, 5000, {0.5, 0.4, 0.4, 0.16}, "figure2"};

  if (name == "table1" || name == "table1-full") {
    c.kind = StudyKind::kSpikeCount;
    c.scenarios = table1();
    c.reps = name == "table1" ? 200 : 1000;
  } else if (name == "table2" || name == "table2-full") {
    c.kind = StudyKind::kSpikeCount;
    c.scenarios = table2(kTableSpikes);
    c.reps = name == "table2" ? 200 : 1000;
  } else if (name == "table2-small") {
    c.kind = StudyKind::kSpikeCount;
    c.scenarios = {Scenario{60, 30, 600, kTableSpikes, ""}};
    c.reps = 200;
  } else if (name == "table3_1" || name == "table3_1-full") {
    c.kind = StudyKind::kSpikeValues;
    c.scenarios = table2(kTableSpikes);
    c.reps = name == "table3_1" ? 200 : 1000;
  } else if (name == "table3_1-small") {
    c.kind = StudyKind::kSpikeValues;
    c.scenarios = {Scenario{110, 55, 1100, kTableSpikes, ""}};
    c.reps = 200;
  } else if (name == "table3_2" || name == "table3_2-full") {
    c.kind = StudyKind::kSpikeValues;
    c.scenarios = table2(kTableSpikesTied);
    c.reps = name == "table3_2" ? 200 : 1000;
  } else if (name == "table3_2-small") {
    c.kind = StudyKind::kSpikeValues;
    c.scenarios = {Scenario{160, 80, 1600, kTableSpikesTied, ""}};
    c.reps = 200;
  } else if (name == "table4") {
    c.kind = StudyKind::kGoeGap;
    c.reps = 1'000'000;
    c.variance_scale = 0.5;
  } else if (name == "figure1" || name == "figure1-full") {
    c.kind = StudyKind::kFluctuation;
    c.scenarios = {figure1};
    c.reps = name == "figure1" ? 200 : 1000;
  } else if (name == "figure2" || name == "figure2-full") {
    c.kind = StudyKind::kFluctuation;
    c.scenarios = {figure2};
    c.reps = name == "figure2" ? 200 : 1000;
  } else if (name == "null-esd") {
    c.kind = StudyKind::kNullEsd;
    c.scenarios = {Scenario{200, 100, 1000, {}, "null"}};
    c.reps = 100;
  } else {
    std::ostringstream os;
    os << "unknown preset '" << name << "'; available:";
    for (const auto& p : preset_names()) os << ' ' << p;
    throw ConfigError(os.str());
  }
  return c;
}

StudyConfig parse_study_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("study config is not valid JSON: ") + e.what());
  }
  try {
    StudyConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : StudyConfig{};
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("study")) c.kind = study_kind_from_string(j.at("study").get<std::string>());
    if (j.contains("reps")) c.reps = j.at("reps").get<long>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("epsilon") && !j.at("epsilon").is_null()) c.epsilon = j.at("epsilon").get<double>();
    if (j.contains("variance_scale")) c.variance_scale = j.at("variance_scale").get<double>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("histogram_bins")) c.histogram_bins = j.at("histogram_bins").get<int>();
    if (j.contains("goe_j1")) c.goe_j1 = j.at("goe_j1").get<std::vector<int>>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("scenarios")) {
      c.scenarios.clear();
      for (const auto& s : j.at("scenarios")) {
        Scenario sc;
        sc.p = s.at("p").get<int>();
        sc.q = s.at("q").get<int>();
        sc.n = s.at("n").get<int>();
        if (s.contains("spikes")) sc.spikes = s.at("spikes").get<std::vector<double>>();
        if (s.contains("label")) sc.label = s.at("label").get<std::string>();
        c.scenarios.push_back(std::move(sc));
      }
    }
    if (c.name.empty()) c.name = to_string(c.kind);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("study config: ") + e.what());
  }
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open study config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_study_config(buf.str());
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

std::string histogram_rows(const std::string& label, const std::string& series, const Histogram& h) {
  std::ostringstream os;
  const double width = h.counts.empty() ? 0.0 : (h.upper - h.lower) / static_cast<double>(h.counts.size());
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    os << label << ',' << series << ',' << fmt(h.lower + width * static_cast<double>(b)) << ','
       << fmt(h.lower + width * static_cast<double>(b + 1)) << ',' << h.counts[b] << '\n';
  }
  return os.str();
}

}  // namespace

void write_study_outputs(const StudyResult& result) {
  const StudyConfig& c = result.config;
  if (c.output_dir.empty()) return;
  const std::filesystem::path dir(c.output_dir);
  std::filesystem::create_directories(dir);
  const std::string stem = c.name.empty() ? to_string(c.kind) : c.name;

  if (result.goe_table) {
    std::ostringstream os;
    os << "j1,alpha,variance_scale,reps,quantile\n";
    for (const auto& [j1, q] : result.goe_table->quantiles) {
      os << j1 << ',' << fmt(c.alpha) << ',' << fmt(c.variance_scale) << ',' << c.reps << ',' << fmt(q) << '\n';
    }
    write_file(dir / (stem + "_goe_gap.csv"), os.str());
  }

  std::ostringstream counts;
  std::ostringstream table;
  std::ostringstream rhat;
  std::ostringstream fluct;
  std::ostringstream hist;
  std::ostringstream samples;
  std::ostringstream null_esd;
  counts << "scenario,p,q,n,estimator,k,count\n";
  table << "scenario,p,q,n,true_k0,row,k0,aic,bic,cp\n";
  rhat << "scenario,p,q,n,index,true_r,count,mean,sd\n";
  fluct << "scenario,statistic,index,count,mean,sd,reference\n";
  hist << "scenario,series,bin_lower,bin_upper,count\n";
  samples << "scenario,replication,index,lambda\n";
  null_esd << "scenario,p,q,n,reps,ks_mean,ks_sd,ks_max,edge_exceed_fraction,rejection_rate\n";

  for (const ScenarioResult& sr : result.scenarios) {
    const Scenario& s = sr.scenario;
    const std::string label = scenario_label(s);
    const std::string head = label + ',' + std::to_string(s.p) + ',' + std::to_string(s.q) + ',' + std::to_string(s.n);
    for (const auto& [estimator, cnt] : sr.k_counts) {
      for (std::size_t k = 0; k < cnt.size(); ++k) {
        if (cnt[k] != 0) counts << head << ',' << estimator << ',' << k << ',' << cnt[k] << '\n';
      }
    }
    if (c.kind == StudyKind::kSpikeCount) {
      const char* rows[5] = {"<=k0-2", "k0-1", "k0", "k0+1", ">=k0+2"};
      std::map<std::string, std::vector<long>> buckets;
      for (const auto& [estimator, cnt] : sr.k_counts) buckets[estimator] = bucket_counts(cnt, sr.true_k0);
      for (std::size_t r = 0; r < 5; ++r) {
        table << head << ',' << sr.true_k0 << ',' << rows[r] << ',' << buckets["k0"][r] << ',' << buckets["aic"][r]
              << ',' << buckets["bic"][r] << ',' << buckets["cp"][r] << '\n';
      }
    }
    for (std::size_t i = 0; i < sr.r_hat.size(); ++i) {
      rhat << head << ',' << i + 1 << ',' << fmt(s.spikes[i]) << ',' << sr.r_hat[i].count << ','
           << fmt(sr.r_hat[i].mean) << ',' << fmt(sr.r_hat[i].sd) << '\n';
    }
    if (sr.fluctuation) {
      const FluctuationSummary& fs = *sr.fluctuation;
      for (std::size_t i = 0; i < fs.lambda.size(); ++i) {
        fluct << label << ",lambda," << i + 1 << ',' << fs.lambda[i].count << ',' << fmt(fs.lambda[i].mean) << ','
              << fmt(fs.lambda[i].sd) << ',' << fmt(i < fs.outlier_gamma.size() ? fs.outlier_gamma[i] : sr.constants.d_plus)
              << '\n';
        hist << histogram_rows(label, "lambda_" + std::to_string(i + 1), fs.lambda_hist[i]);
      }
      for (std::size_t i = 0; i < fs.outlier_index.size(); ++i) {
        fluct << label << ",outlier_centered," << fs.outlier_index[i] << ',' << fs.outlier_centered[i].count << ','
              << fmt(fs.outlier_centered[i].mean) << ',' << fmt(fs.outlier_centered[i].sd) << ','
              << fmt(fs.outlier_xi[i]) << '\n';
        fluct << label << ",outlier_normalized," << fs.outlier_index[i] << ',' << fs.outlier_normalized[i].count << ','
              << fmt(fs.outlier_normalized[i].mean) << ',' << fmt(fs.outlier_normalized[i].sd) << ','
              << fmt(std::sqrt(2.0 * c.variance_scale)) << '\n';
        hist << histogram_rows(label, "outlier_" + std::to_string(fs.outlier_index[i]), fs.outlier_hist[i]);
      }
      if (fs.sticking_index > 0) {
        fluct << label << ",sticking_tw," << fs.sticking_index << ',' << fs.sticking.count << ','
              << fmt(fs.sticking.mean) << ',' << fmt(fs.sticking.sd) << ',' << fmt(fs.sticking_ks_to_tw1) << '\n';
        hist << histogram_rows(label, "sticking_" + std::to_string(fs.sticking_index), fs.sticking_hist);
      }
      for (std::size_t rep = 0; rep < fs.lambda_samples.size(); ++rep) {
        for (std::size_t i = 0; i < fs.lambda_samples[rep].size(); ++i) {
          samples << label << ',' << rep << ',' << i + 1 << ',' << fmt(fs.lambda_samples[rep][i]) << '\n';
        }
      }
    }
    if (sr.null_esd) {
      const NullEsdSummary& ns = *sr.null_esd;
      null_esd << head << ',' << c.reps << ',' << fmt(ns.ks.mean) << ',' << fmt(ns.ks.sd) << ',' << fmt(ns.ks_max) << ','
               << fmt(ns.edge_exceed_fraction) << ',' << fmt(ns.rejection_rate) << '\n';
    }
  }

  switch (c.kind) {
    case StudyKind::kSpikeCount:
      write_file(dir / (stem + "_counts.csv"), counts.str());
      write_file(dir / (stem + "_table.csv"), table.str());
      break;
    case StudyKind::kSpikeValues:
      write_file(dir / (stem + "_counts.csv"), counts.str());
      write_file(dir / (stem + "_rhat.csv"), rhat.str());
      break;
    case StudyKind::kFluctuation:
      write_file(dir / (stem + "_fluctuation.csv"), fluct.str());
      write_file(dir / (stem + "_hist.csv"), hist.str());
      write_file(dir / (stem + "_samples.csv"), samples.str());
      break;
    case StudyKind::kNullEsd:
      write_file(dir / (stem + "_null.csv"), null_esd.str());
      break;
    case StudyKind::kGoeGap:
      break;
  }
  write_file(dir / (stem + "_summary.txt"), format_summary(result));
}

std::string format_summary(const StudyResult& result) {
  const StudyConfig& c = result.config;
  std::ostringstream os;
  os << "study " << (c.name.empty() ? to_string(c.kind) : c.name) << " (" << to_string(c.kind) << "), " << c.reps
     << " replications, seed " << c.seed << '\n';
  if (result.goe_table) {
    os << "GOE gap upper " << c.alpha << " quantiles, variance scale " << c.variance_scale << '\n';
    for (const auto& [j1, q] : result.goe_table->quantiles) os << "  j1 = " << j1 << ": " << fmt(q) << '\n';
  }
  for (const ScenarioResult& sr : result.scenarios) {
    const Scenario& s = sr.scenario;
    os << "\nscenario " << scenario_label(s) << ": d- = " << fmt(sr.constants.d_minus)
       << ", d+ = " << fmt(sr.constants.d_plus) << ", r_c = " << fmt(sr.constants.r_c) << ", true k0 = " << sr.true_k0
       << '\n';
    if (c.kind == StudyKind::kSpikeCount) {
      const char* rows[5] = {"<=k0-2", "k0-1  ", "k0    ", "k0+1  ", ">=k0+2"};
      os << "  row      k0_hat   AIC   BIC    Cp\n";
      std::map<std::string, std::vector<long>> b;
      for (const auto& [estimator, cnt] : sr.k_counts) b[estimator] = bucket_counts(cnt, sr.true_k0);
      for (std::size_t r = 0; r < 5; ++r) {
        char line[128];
        std::snprintf(line, sizeof(line), "  %s %7ld %5ld %5ld %5ld\n", rows[r], b["k0"][r], b["aic"][r],
                      b["bic"][r], b["cp"][r]);
        os << line;
      }
    }
    for (std::size_t i = 0; i < sr.r_hat.size(); ++i) {
      os << "  r_hat_" << i + 1 << " (true " << fmt(s.spikes[i]) << "): mean " << fmt(sr.r_hat[i].mean) << ", sd "
         << fmt(sr.r_hat[i].sd) << ", over " << sr.r_hat[i].count << " replications\n";
    }
    if (sr.fluctuation) {
      const FluctuationSummary& fs = *sr.fluctuation;
      for (std::size_t i = 0; i < fs.lambda.size(); ++i) {
        os << "  lambda_" << i + 1 << ": mean " << fmt(fs.lambda[i].mean) << ", sd " << fmt(fs.lambda[i].sd) << '\n';
      }
      for (std::size_t i = 0; i < fs.outlier_index.size(); ++i) {
        os << "  sqrt(n)(lambda_" << fs.outlier_index[i] << " - gamma): mean " << fmt(fs.outlier_centered[i].mean)
           << ", sd " << fmt(fs.outlier_centered[i].sd) << ", xi = " << fmt(fs.outlier_xi[i]) << '\n';
      }
      if (!fs.outlier_index.empty()) os << "  outlier sd / xi(r_1) = " << fmt(fs.outlier_sd_ratio) << '\n';
      if (fs.sticking_index > 0) {
        os << "  edge statistic for lambda_" << fs.sticking_index << ": mean " << fmt(fs.sticking.mean) << ", sd "
           << fmt(fs.sticking.sd) << ", KS to F1 " << fmt(fs.sticking_ks_to_tw1) << '\n';
      }
      for (const auto& w : fs.warnings) os << "  warning: " << w << '\n';
    }
    if (sr.null_esd) {
      const NullEsdSummary& ns = *sr.null_esd;
      os << "  KS distance to limiting law: mean " << fmt(ns.ks.mean) << ", max " << fmt(ns.ks_max) << '\n'
         << "  fraction with lambda_1 > d+ + 0.05: " << fmt(ns.edge_exceed_fraction) << '\n'
         << "  independence test rejection rate: " << fmt(ns.rejection_rate) << '\n';
    }
  }
  char elapsed[64];
  std::snprintf(elapsed, sizeof(elapsed), "\nelapsed %.1f s\n", result.elapsed_seconds);
  os << elapsed;
  return os.str();
}

}  // namespace hdcca
