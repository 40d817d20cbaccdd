// hdcca: command-line front end for the high-dimensional CCA library.
//
// Exit codes: 0 success, 2 usage, 3 data or shape, 4 numerical, 5 config.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdcca/cca_engine.hpp"
#include "hdcca/errors.hpp"
#include "hdcca/inference.hpp"
#include "hdcca/montecarlo.hpp"
#include "hdcca/ref_dist.hpp"
#include "hdcca/rmt_core.hpp"

namespace {

using nlohmann::json;
using namespace hdcca;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitConfig = 5;
constexpr int kSchemaVersion = 1;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("HDCCA_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("HDCCA_SEED is not an unsigned integer: ") + env);
    }
  }
  return 1;
}

json envelope(const std::string& command, std::uint64_t seed) {
  return json{{"schema_version", kSchemaVersion}, {"command", command}, {"seed", seed}};
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

json constants_json(double c1, double c2) {
  const SpectralConstants k = edges(c1, c2);
  return json{{"c1", c1}, {"c2", c2}, {"d_minus", k.d_minus}, {"d_plus", k.d_plus}, {"r_c", k.r_c},
              {"xi_tw", xi_tracy_widom(c1, c2)}};
}

// ---------------------------------------------------------------- CSV input

Eigen::MatrixXd read_csv(const std::string& path, char delimiter, bool header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  if (header) {
    std::getline(in, line);
    ++line_no;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    std::size_t col = 0;
    while (std::getline(ss, field, delimiter)) {
      ++col;
      const auto b = field.find_first_not_of(" \t\"");
      const auto e = field.find_last_not_of(" \t\"");
      const std::string cell = b == std::string::npos ? "" : field.substr(b, e - b + 1);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        std::ostringstream os;
        os << path << ":" << line_no << ": column " << col << " is missing or not a finite number ('" << cell
           << "')";
        throw DataError(os.str());
      }
      row.push_back(v);
    }
    if (line.back() == delimiter) {
      std::ostringstream os;
      os << path << ":" << line_no << ": trailing empty field";
      throw DataError(os.str());
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected " << rows.front().size() << " fields, found " << row.size();
      throw DataError(os.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

// ---------------------------------------------------------------- lsd

struct LsdArgs {
  double c1 = 0.0;
  double c2 = 0.0;
  int grid = 0;
};

int cmd_lsd(const LsdArgs& a, bool as_json, std::uint64_t seed) {
  validate_ratios(a.c1, a.c2);
  const SpectralConstants k = edges(a.c1, a.c2);
  std::vector<std::pair<double, double>> density;
  if (a.grid > 0) {
    // Interior grid: the density has inverse square-root singularities at the edges when d- = 0.
    for (int i = 0; i <= a.grid; ++i) {
      const double x = k.d_minus + (k.d_plus - k.d_minus) * static_cast<double>(i) / a.grid;
      const bool edge = (i == 0 || i == a.grid);
      double f = 0.0;
      if (!edge) f = lsd_density(x, a.c1, a.c2);
      density.emplace_back(x, f);
    }
  }
  if (as_json) {
    json j = envelope("lsd", seed);
    j["constants"] = constants_json(a.c1, a.c2);
    if (!density.empty()) {
      json rows = json::array();
      for (const auto& [x, f] : density) rows.push_back({x, f});
      j["density"] = rows;
    }
    print(j);
    return kExitOk;
  }
  std::cout.precision(10);
  std::cout << "c1 = " << a.c1 << ", c2 = " << a.c2 << "\n"
            << "d- = " << k.d_minus << "\n"
            << "d+ = " << k.d_plus << "\n"
            << "r_c = " << k.r_c << "\n"
            << "xi_tw = " << xi_tracy_widom(a.c1, a.c2) << "\n";
  if (!density.empty()) {
    std::cout << "x,density\n";
    for (const auto& [x, f] : density) std::cout << x << ',' << f << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- outlier / invert

int cmd_outlier(double c1, double c2, double r, bool as_json, std::uint64_t seed) {
  validate_ratios(c1, c2);
  const std::optional<double> g = gamma_outlier(r, c1, c2);
  json j = envelope("outlier", seed);
  j["constants"] = constants_json(c1, c2);
  j["r"] = r;
  j["detached"] = g.has_value();
  if (g) {
    j["gamma"] = *g;
    j["xi"] = xi_outlier(r, c1, c2);
  }
  if (as_json) {
    print(j);
  } else if (g) {
    std::cout.precision(10);
    std::cout << "gamma = " << *g << "\nxi = " << xi_outlier(r, c1, c2) << "\n";
  } else {
    std::cout << "r = " << r << " <= r_c = " << edges(c1, c2).r_c << ": eigenvalue sticks to d+ = "
              << edges(c1, c2).d_plus << "\n";
  }
  return kExitOk;
}

int cmd_invert(double c1, double c2, double lambda, bool as_json, std::uint64_t seed) {
  validate_ratios(c1, c2);
  const PhiResult phi = phi_invert(lambda, c1, c2);
  if (as_json) {
    json j = envelope("invert", seed);
    j["constants"] = constants_json(c1, c2);
    j["lambda"] = lambda;
    j["r_hat"] = phi.r_hat;
    j["rho_hat"] = std::sqrt(phi.r_hat);
    j["clamped"] = phi.clamped;
    print(j);
  } else {
    std::cout.precision(10);
    std::cout << "r_hat = " << phi.r_hat << "\nrho_hat = " << std::sqrt(phi.r_hat) << "\n";
    if (phi.clamped) std::cout << "note: lambda is below d+; discriminant clamped\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string data;
  std::string y_file;
  int p = 0;
  int q = 0;
  int n = 0;
  std::string delimiter = ",";
  bool header = false;
  bool transpose = false;
  bool already_centered = false;
  std::vector<double> eigenvalues;
  double alpha = 0.05;
  std::optional<double> epsilon;
  long goe_reps = 0;
  double variance_scale = 0.5;
};

json report_json(const TestReport& r) {
  json j{{"name", r.name}, {"statistic", r.statistic}, {"quantile", r.quantile}, {"alpha", r.alpha},
         {"reject", r.reject}};
  j["p_value"] = r.p_value ? json(*r.p_value) : json(nullptr);
  j["p_value_bounded"] = r.p_value_bounded;
  json inputs = json::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = v;
  j["inputs"] = inputs;
  return j;
}

SampleSpectrum load_spectrum(const EstimateArgs& a) {
  if (!a.eigenvalues.empty()) {
    if (a.p < 1 || a.q < 1 || a.n < 1) throw DomainError("--eigenvalues needs --p, --q and --n");
    const ModelConfig config(a.p, a.q, a.n);
    if (static_cast<int>(a.eigenvalues.size()) != config.min_dim()) {
      throw ShapeError("expected min(p, q) = " + std::to_string(config.min_dim()) + " eigenvalues, got " +
                       std::to_string(a.eigenvalues.size()));
    }
    std::vector<double> l = a.eigenvalues;
    for (const double v : l) {
      if (!(v >= 0.0 && v <= 1.0)) throw ShapeError("eigenvalues must lie in [0, 1]");
    }
    std::sort(l.rbegin(), l.rend());
    return SampleSpectrum{l, a.n, config, std::nullopt};
  }
  if (a.data.empty()) throw DomainError("estimate needs a data file or --eigenvalues");
  if (a.delimiter.size() != 1) throw DomainError("--delimiter must be a single character");
  const char delim = a.delimiter == "\\t" ? '\t' : a.delimiter[0];
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  auto orient = [&](Eigen::MatrixXd m) -> Eigen::MatrixXd {
    // Library convention: variables in rows.
    if (a.transpose) return m;
    return m.transpose();
  };
  if (!a.y_file.empty()) {
    x = orient(read_csv(a.data, delim, a.header));
    y = orient(read_csv(a.y_file, delim, a.header));
  } else {
    const Eigen::MatrixXd all = orient(read_csv(a.data, delim, a.header));
    if (a.p < 1 || a.p >= all.rows()) {
      throw ShapeError("--p must split the " + std::to_string(all.rows()) + " variables into two nonempty blocks");
    }
    x = all.topRows(a.p);
    y = all.bottomRows(all.rows() - a.p);
  }
  if (a.p > 0 && x.rows() != a.p) throw ShapeError("x block has " + std::to_string(x.rows()) + " variables, --p says " + std::to_string(a.p));
  if (a.q > 0 && y.rows() != a.q) throw ShapeError("y block has " + std::to_string(y.rows()) + " variables, --q says " + std::to_string(a.q));
  return cca_eigenvalues(x, y, CcaOptions{a.already_centered, false});
}

int cmd_estimate(const EstimateArgs& a, bool as_json, std::uint64_t seed, int workers) {
  const SampleSpectrum spectrum = load_spectrum(a);
  PipelineOptions options;
  options.alpha = a.alpha;
  options.epsilon = a.epsilon;
  if (a.goe_reps > 0) {
    const std::vector<int> j1s = {2, 3, 4, 5, 6, 7, 8, 9, 10};
    options.quantiles = build_goe_gap_table(j1s, a.alpha, a.variance_scale, a.goe_reps, SampleSeed{seed, 0}, workers);
  } else if (std::abs(a.alpha - options.quantiles.alpha) > 1e-12) {
    throw DomainError("the reference GOE gap table is at alpha = 0.05; pass --goe-reps to simulate other levels");
  }
  const PipelineResult result = estimate_ccc_pipeline(spectrum, options);
  const ModelConfig& cfg = spectrum.config;
  const SpikeEstimate& est = result.estimate;

  json j = envelope("estimate", seed);
  j["input"] = {{"p", cfg.p()}, {"q", cfg.q()}, {"effective_n", spectrum.effective_n},
                {"source", a.eigenvalues.empty() ? "data" : "eigenvalues"}};
  j["constants"] = constants_json(cfg.c1(), cfg.c2());
  j["constants"]["epsilon_n"] = est.epsilon_n;
  j["constants"]["alpha"] = a.alpha;
  j["constants"]["goe_quantiles"] = {{"provenance", options.quantiles.provenance},
                                     {"variance_scale", options.quantiles.variance_scale}};
  j["eigenvalues"] = spectrum.lambdas;
  j["independence_rejected"] = result.independence_rejected;
  j["k_hat"] = est.k_hat;
  j["r_hat"] = est.r_hat;
  j["rho_hat"] = est.rho_hat;
  j["r_hat_unpooled"] = est.r_hat_unpooled;
  j["clamped"] = est.clamped;
  json groups = json::array();
  for (const auto& g : est.groups) groups.push_back({{"first", g.first}, {"size", g.size}, {"pooled_r_hat", g.pooled_r_hat}});
  j["groups"] = groups;
  json tests = json::array();
  for (const auto& r : result.reports) tests.push_back(report_json(r));
  j["tests"] = tests;
  j["message"] = result.independence_rejected ? "independence rejected" : "no evidence of correlation";

  if (as_json) {
    print(j);
    return kExitOk;
  }
  std::cout.precision(6);
  std::cout << "p = " << cfg.p() << ", q = " << cfg.q() << ", effective n = " << spectrum.effective_n << "\n"
            << "d+ = " << cfg.constants().d_plus << ", r_c = " << cfg.constants().r_c << ", epsilon_n = " << est.epsilon_n
            << "\neigenvalues:";
  for (const double l : spectrum.lambdas) std::cout << ' ' << l;
  const TestReport& ind = result.reports.front();
  std::cout << "\nindependence test: statistic " << ind.statistic << ", critical value " << ind.quantile;
  if (ind.p_value) std::cout << ", p-value " << (ind.p_value_bounded ? "<= " : "") << *ind.p_value;
  std::cout << "\n";
  if (!result.independence_rejected) {
    std::cout << "no evidence of correlation\n";
    return kExitOk;
  }
  std::cout << "k_hat = " << est.k_hat << "\n";
  for (std::size_t i = 1; i < result.reports.size(); ++i) {
    const TestReport& r = result.reports[i];
    std::cout << "equal-spike test j0 = " << r.inputs[0].second << ", j1 = " << r.inputs[1].second << ": statistic "
              << r.statistic << ", critical value " << r.quantile << (r.reject ? " (rejected)" : " (retained)") << "\n";
  }
  for (std::size_t i = 0; i < est.rho_hat.size(); ++i) {
    std::cout << "rho_hat_" << i + 1 << " = " << est.rho_hat[i] << " (r_hat " << est.r_hat[i] << ")\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- study

json stat_json(const SummaryStat& s) { return json{{"count", s.count}, {"mean", s.mean}, {"sd", s.sd}}; }

json study_json(const StudyResult& r) {
  const StudyConfig& c = r.config;
  json j = envelope("study", c.seed);
  j["name"] = c.name;
  j["kind"] = to_string(c.kind);
  j["reps"] = c.reps;
  j["alpha"] = c.alpha;
  j["variance_scale"] = c.variance_scale;
  j["output_dir"] = c.output_dir;
  j["elapsed_seconds"] = r.elapsed_seconds;
  if (r.goe_table) {
    json q = json::object();
    for (const auto& [j1, v] : r.goe_table->quantiles) q[std::to_string(j1)] = v;
    j["goe_quantiles"] = q;
  }
  json scenarios = json::array();
  for (const ScenarioResult& s : r.scenarios) {
    json sj{{"p", s.scenario.p}, {"q", s.scenario.q}, {"n", s.scenario.n}, {"spikes", s.scenario.spikes},
            {"d_plus", s.constants.d_plus}, {"r_c", s.constants.r_c}, {"true_k0", s.true_k0}};
    if (!s.k_counts.empty()) sj["k_counts"] = s.k_counts;
    if (!s.r_hat.empty()) {
      json rh = json::array();
      for (const auto& st : s.r_hat) rh.push_back(stat_json(st));
      sj["r_hat"] = rh;
    }
    if (s.fluctuation) {
      const FluctuationSummary& f = *s.fluctuation;
      json fj;
      json lam = json::array();
      for (const auto& st : f.lambda) lam.push_back(stat_json(st));
      fj["lambda"] = lam;
      json out = json::array();
      for (std::size_t i = 0; i < f.outlier_index.size(); ++i) {
        out.push_back({{"index", f.outlier_index[i]}, {"gamma", f.outlier_gamma[i]}, {"xi", f.outlier_xi[i]},
                       {"centered", stat_json(f.outlier_centered[i])},
                       {"normalized", stat_json(f.outlier_normalized[i])}});
      }
      fj["outliers"] = out;
      fj["outlier_sd_ratio"] = f.outlier_sd_ratio;
      if (f.sticking_index > 0) {
        fj["sticking"] = {{"index", f.sticking_index}, {"stat", stat_json(f.sticking)}, {"ks_to_tw1", f.sticking_ks_to_tw1}};
      }
      fj["warnings"] = f.warnings;
      sj["fluctuation"] = fj;
    }
    if (s.null_esd) {
      const NullEsdSummary& ns = *s.null_esd;
      sj["null_esd"] = {{"ks", stat_json(ns.ks)}, {"ks_max", ns.ks_max}, {"edge_exceed_fraction", ns.edge_exceed_fraction},
                        {"rejection_rate", ns.rejection_rate}};
    }
    scenarios.push_back(sj);
  }
  j["scenarios"] = scenarios;
  return j;
}

struct StudyArgs {
  std::string preset;
  std::string config;
  std::string out;
  std::optional<long> reps;
  std::optional<double> variance_scale;
  int workers = 0;
};

int cmd_study(const StudyArgs& a, bool as_json, std::optional<std::uint64_t> seed) {
  if (a.preset.empty() == a.config.empty()) throw DomainError("study needs exactly one of --preset or --config");
  StudyConfig c = a.preset.empty() ? load_study_config(a.config) : preset(a.preset);
  if (seed) {
    c.seed = *seed;
  } else if (!a.preset.empty()) {
    c.seed = default_seed();
  }
  if (a.reps) c.reps = *a.reps;
  if (a.variance_scale) c.variance_scale = *a.variance_scale;
  if (a.workers > 0) c.workers = a.workers;
  if (!a.out.empty()) c.output_dir = a.out;
  if (c.output_dir.empty()) c.output_dir = "hdcca_results";
  c.validate();
  const StudyResult result = run_study(c);
  write_study_outputs(result);
  if (as_json) {
    print(study_json(result));
  } else {
    std::cout << format_summary(result) << "outputs written to " << c.output_dir << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-dimensional canonical correlation analysis: limiting spectra, spike estimation and tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hdcca 1.0");

  bool as_json = false;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_flag("--json", as_json, "Machine-readable JSON output");
    sub->add_option("--seed", seed, "Random seed (default: $HDCCA_SEED, else 1)");
  };

  LsdArgs lsd;
  auto* lsd_cmd = app.add_subcommand("lsd", "Limiting spectral edges, threshold and density");
  lsd_cmd->add_option("--c1", lsd.c1, "p / n")->required();
  lsd_cmd->add_option("--c2", lsd.c2, "q / n")->required();
  lsd_cmd->add_option("--grid", lsd.grid, "Number of density grid intervals (0: none)")->check(CLI::NonNegativeNumber);
  add_common(lsd_cmd);

  double oc1 = 0.0;
  double oc2 = 0.0;
  double r = 0.0;
  auto* out_cmd = app.add_subcommand("outlier", "Limit gamma(r) and fluctuation scale xi(r) of an outlier");
  out_cmd->add_option("--c1", oc1, "p / n")->required();
  out_cmd->add_option("--c2", oc2, "q / n")->required();
  out_cmd->add_option("--r", r, "Population squared canonical correlation")->required();
  add_common(out_cmd);

  double lambda = 0.0;
  auto* inv_cmd = app.add_subcommand("invert", "Estimate r from a sample eigenvalue above d+");
  inv_cmd->add_option("--c1", oc1, "p / n")->required();
  inv_cmd->add_option("--c2", oc2, "q / n")->required();
  inv_cmd->add_option("--lambda", lambda, "Sample squared canonical correlation")->required();
  add_common(inv_cmd);

  EstimateArgs est;
  int est_workers = 0;
  auto* est_cmd = app.add_subcommand("estimate", "Test independence and estimate canonical correlations");
  est_cmd->add_option("data", est.data, "CSV file, observations in rows; first --p columns form the x block");
  est_cmd->add_option("--y-file", est.y_file, "Separate CSV holding the y block (data then holds x)");
  est_cmd->add_option("--p", est.p, "Number of x variables");
  est_cmd->add_option("--q", est.q, "Number of y variables (checked if given)");
  est_cmd->add_option("--n", est.n, "Effective sample size (with --eigenvalues)");
  est_cmd->add_option("--delimiter", est.delimiter, "Field delimiter, default ','");
  est_cmd->add_flag("--header", est.header, "Skip the first line");
  est_cmd->add_flag("--transpose", est.transpose, "Variables in rows, observations in columns");
  est_cmd->add_flag("--centered", est.already_centered, "Data are already mean zero; do not center (effective n = n)");
  est_cmd->add_option("--eigenvalues", est.eigenvalues, "Use these squared sample canonical correlations instead of data")
      ->delimiter(',');
  est_cmd->add_option("--alpha", est.alpha, "Test level");
  est_cmd->add_option("--epsilon", est.epsilon, "Threshold margin (default log(log n) / n^(2/3))");
  est_cmd->add_option("--goe-reps", est.goe_reps, "Simulate the equal-spike quantiles with this many replications");
  est_cmd->add_option("--variance-scale", est.variance_scale, "GOE variance scale for simulated quantiles");
  est_cmd->add_option("--workers", est_workers, "Worker threads for simulation (0: all cores)");
  add_common(est_cmd);

  StudyArgs study;
  std::string presets_help = "Named study:";
  for (const auto& p : preset_names()) presets_help += " " + p;
  auto* study_cmd = app.add_subcommand("study", "Run a seeded Monte Carlo study");
  study_cmd->add_option("--preset", study.preset, presets_help);
  study_cmd->add_option("--config", study.config, "JSON study configuration file");
  study_cmd->add_option("--out", study.out, "Output directory (default hdcca_results)");
  study_cmd->add_option("--reps", study.reps, "Override the replication count");
  study_cmd->add_option("--variance-scale", study.variance_scale, "Override the GOE variance scale");
  study_cmd->add_option("--workers", study.workers, "Worker threads (0: all cores)");
  add_common(study_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const std::uint64_t s = seed.value_or(default_seed());
    if (lsd_cmd->parsed()) return cmd_lsd(lsd, as_json, s);
    if (out_cmd->parsed()) return cmd_outlier(oc1, oc2, r, as_json, s);
    if (inv_cmd->parsed()) return cmd_invert(oc1, oc2, lambda, as_json, s);
    if (est_cmd->parsed()) return cmd_estimate(est, as_json, s, est_workers);
    if (study_cmd->parsed()) return cmd_study(study, as_json, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitUsage;
}
