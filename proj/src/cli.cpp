#include "bcpvs/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>

#include <CLI11.hpp>

#include "bcpvs/bench.hpp"
#include "bcpvs/errors.hpp"
#include "bcpvs/oracle.hpp"
#include "bcpvs/pelt.hpp"
#include "bcpvs/report.hpp"
#include "bcpvs/sampler.hpp"
#include "bcpvs/settings.hpp"
#include "bcpvs/simgen.hpp"

namespace bcpvs {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  return fs::path(dir);
}

/// Collects explicitly given setting flags so they can be layered over a
/// config file.
class SettingFlags {
 public:
  void add(CLI::App* app, const std::string& key, const std::string& help) {
    options_.emplace_back(key, app->add_option("--" + key, values_[key], help));
  }
  void add_switch(CLI::App* app, const std::string& key, const std::string& help) {
    options_.emplace_back(key, app->add_flag("--" + key, switches_[key], help));
  }
  Settings given() const {
    Settings out;
    for (const auto& [key, opt] : options_) {
      if (opt->count() == 0) continue;
      const auto s = switches_.find(key);
      out[key] = s != switches_.end() ? (s->second ? "true" : "false") : values_.at(key);
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, CLI::Option*>> options_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> switches_;
};

void add_prior_flags(CLI::App* app, SettingFlags& flags) {
  flags.add(app, "seed", "RNG seed");
  flags.add(app, "sigma2", "known noise variance, or 'estimate' (default)");
  flags.add(app, "tau2", "slab / block-mean prior variance (default 1)");
  flags.add(app, "V", "variance of the global mean in the mean-shift model (default 1)");
  flags.add(app, "cn", "expected number of changepoints c_n, p_n = c_n/n (default 1)");
  flags.add(app, "pn", "changepoint prior probability, overrides --cn");
  flags.add(app, "inclusion-prob", "covariate prior inclusion probability (one value or a comma list)");
  flags.add(app, "alpha1", "exponent offset in -log p = (log n)^(1+alpha1) (default 0.1)");
  flags.add(app, "max-covariates", "maximum number of selected covariates q_n");
  flags.add(app, "sample-tau2", "update tau2 in the mean-shift model (true/false)");
  flags.add(app, "model", "auto, mean or regression");
  flags.add_switch(app, "ar-lag", "add the lagged response as a selectable column");
  flags.add(app, "response", "response column name (default y)");
  flags.add(app, "covariates", "comma list of covariate columns, 'all' or 'none'");
  flags.add_switch(app, "standardize", "centre and scale the response");
  flags.add_switch(app, "sqrt", "square-root transform the response first");
  flags.add(app, "iterations", "total sweeps including burn-in (default 8000)");
  flags.add(app, "burn-in", "discarded sweeps (default 4000)");
  flags.add(app, "thin", "keep every k-th sweep (default 1)");
  flags.add(app, "chains", "independent chains (default 1)");
  flags.add(app, "threads", "worker threads (default BCPVS_THREADS or 1)");
}

RunConfig load_run_config(const std::string& config_path, const SettingFlags& flags) {
  Settings file;
  if (!config_path.empty()) file = load_settings(config_path);
  return resolve_config(merge(file, flags.given()));
}

LoadedCsv load_input(const std::string& path, const RunConfig& config) {
  LoadedCsv loaded = load_csv(path, config.schema);
  loaded.data.validate();
  return loaded;
}

Provenance provenance_of(const LoadedCsv& loaded) {
  Provenance p;
  p.input = loaded.meta.path;
  p.n = loaded.data.n();
  p.p = loaded.data.p();
  p.ar_lag = loaded.data.ar_lag;
  p.standardized = loaded.meta.standardized;
  p.sqrt_transformed = loaded.meta.sqrt_transformed;
  return p;
}

std::string series_csv(const char* header, const std::vector<double>& values) {
  std::string out = std::string(header) + "\n";
  for (std::size_t i = 0; i < values.size(); ++i) out += std::to_string(i + 1) + "," + format_double(values[i]) + "\n";
  return out;
}

std::string join(const std::vector<Index>& v) {
  std::string out;
  for (Index x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

PeltResult run_pelt(const Dataset& data, std::optional<double> penalty, Index min_seg,
                    std::optional<double> sigma2) {
  const std::span<const double> y(data.y.data(), static_cast<std::size_t>(data.n()));
  double variance = 0.0;
  bool fallback = false;
  if (sigma2) {
    variance = *sigma2;
  } else {
    const auto v = mad_variance(y);
    variance = v.value;
    fallback = v.fallback;
  }
  const double pen = penalty ? *penalty : default_penalty(y.size(), variance);
  PeltResult r = pelt_detect(y, pen, min_seg, variance);
  r.variance_fallback = fallback;
  return r;
}

int cmd_simulate(int example, std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  const Simulation sim = gen_example(example, seed);
  const fs::path dir = ensure_dir(out_dir);
  const std::string stem = "example" + std::to_string(example);
  write_file(dir / (stem + ".csv"), to_csv(sim.data));
  write_file(dir / (stem + "_truth.json"), dump(to_json(sim.truth, sim.data.n(), sim.data.p())));
  out << stem << ": n=" << sim.data.n() << " p=" << sim.data.p() << " changepoints=" << sim.truth.changepoints.size()
      << " -> " << (dir / (stem + ".csv")).string() << "\n";
  return 0;
}

int cmd_detect(const std::string& input, const std::string& config_path, const SettingFlags& flags,
               const std::string& out_dir, std::ostream& out) {
  const auto t0 = Clock::now();
  RunConfig config = load_run_config(config_path, flags);
  if (!config.seed_given) throw ConfigError("detect needs --seed (or 'seed' in the config file)");
  const LoadedCsv loaded = load_input(input, config);
  const Dataset& data = loaded.data;
  config.prior.kind = resolve_model_kind(config.model, data);
  config.prior.validate(data.n_eff(), data.num_candidates());

  RunReport report;
  report.command = "detect";
  report.prior = config.prior;
  report.sampler = config.sampler;
  report.candidate_names = data.candidate_names();
  report.provenance = provenance_of(loaded);
  report.timings["load"] = seconds_since(t0);

  const auto t1 = Clock::now();
  report.posterior = run_chain(data, config.prior, config.sampler);
  report.timings["sampler"] = seconds_since(t1);
  if (config.run_pelt) {
    const auto t2 = Clock::now();
    report.pelt = run_pelt(data, config.pelt_penalty, config.min_seg, config.prior.sigma2);
    report.timings["pelt"] = seconds_since(t2);
  }
  check_probabilities(report);
  report.timings["total"] = seconds_since(t0);

  const PosteriorSummary& s = *report.posterior;
  const fs::path dir = ensure_dir(out_dir);
  write_file(dir / "report.json", dump(report.to_json()));
  write_file(dir / "cp_prob.csv", series_csv("index,cp_prob", s.cp_prob));
  std::string fitted = "index,y,fitted_mean\n";
  for (Index i = 0; i < data.n(); ++i) {
    fitted += std::to_string(i + 1) + "," + format_double(data.y(i)) + "," +
              format_double(s.fitted_mean[static_cast<std::size_t>(i)]) + "\n";
  }
  write_file(dir / "fitted_mean.csv", fitted);
  std::string counts = "partitions,probability\n";
  for (auto [k, prob] : s.partition_count_dist) counts += std::to_string(k) + "," + format_double(prob) + "\n";
  write_file(dir / "partition_counts.csv", counts);
  std::string pip = "covariate,pip\n";
  for (std::size_t j = 0; j < s.pip.size(); ++j) pip += report.candidate_names[j] + "," + format_double(s.pip[j]) + "\n";
  write_file(dir / "pip.csv", pip);

  const Index offset = data.first_observation();
  std::vector<Index> cps;
  for (Index c : s.map_model.segmentation.changepoints()) cps.push_back(c + offset + 1);
  out << "model=" << name_of(config.prior.kind) << " n=" << data.n() << " samples=" << s.n_samples
      << " partition_mode=" << s.partition_count_mode() << " map_changepoints=[" << join(cps) << "]";
  if (!s.pip.empty()) {
    out << " selected=[";
    bool first = true;
    for (std::size_t j = 0; j < s.pip.size(); ++j) {
      if (s.pip[j] > 0.5) {
        out << (first ? "" : ",") << report.candidate_names[j];
        first = false;
      }
    }
    out << "]";
  }
  out << " -> " << (dir / "report.json").string() << "\n";
  return 0;
}

int cmd_pelt(const std::string& input, const std::string& response, std::optional<double> penalty, Index min_seg,
             std::optional<double> sigma2, const std::string& out_dir, std::ostream& out) {
  const auto t0 = Clock::now();
  CsvSchema schema;
  schema.response = response;
  schema.all_covariates = false;
  const LoadedCsv loaded = load_csv(input, schema);
  RunReport report;
  report.command = "pelt";
  report.provenance = provenance_of(loaded);
  report.prior.sigma2 = sigma2;
  report.pelt = run_pelt(loaded.data, penalty, min_seg, sigma2);
  report.timings["total"] = seconds_since(t0);

  const PeltResult& r = *report.pelt;
  const fs::path dir = ensure_dir(out_dir);
  write_file(dir / "pelt_report.json", dump(report.to_json()));
  std::string segs = "first,last,mean,variance\n";
  std::vector<Index> bounds{0};
  bounds.insert(bounds.end(), r.changepoints.begin(), r.changepoints.end());
  bounds.push_back(loaded.data.n());
  for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
    segs += std::to_string(bounds[b] + 1) + "," + std::to_string(bounds[b + 1]) + "," +
            format_double(r.segment_means[b]) + "," + format_double(r.segment_variances[b]) + "\n";
  }
  write_file(dir / "pelt_segments.csv", segs);
  std::vector<Index> cps;
  for (Index c : r.changepoints) cps.push_back(c + 1);
  out << "changepoints=[" << join(cps) << "] penalty=" << format_double(r.penalty)
      << " variance=" << format_double(r.variance) << (r.variance_fallback ? " (fallback)" : "") << "\n";
  return 0;
}

std::vector<Index> parse_grid(const std::string& text) {
  std::vector<Index> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw ConfigError("bad n-grid entry '" + item + "'");
    }
  }
  return out;
}

int cmd_bench(const std::string& scenario, const std::string& grid, Index replicates, std::uint64_t seed,
              const std::string& shift_rule, Index shift, const std::string& out_dir, std::ostream& out) {
  BenchOptions options;
  if (shift_rule == "const") {
    options.shift_rule = ShiftRule::Constant;
    options.shift_rows = shift;
  } else if (shift_rule != "log2") {
    throw ConfigError("shift rule must be log2 or const");
  }
  const std::vector<Index> n_grid = parse_grid(grid);
  std::vector<BenchScenario> scenarios;
  if (scenario == "all") {
    scenarios = consistency_scenarios();
  } else {
    scenarios.push_back(parse_scenario(scenario));
  }
  const fs::path dir = ensure_dir(out_dir);
  std::string summary = "scenario,n,mean_log_bf,sd_log_bf\n";
  for (BenchScenario s : scenarios) {
    const BenchResult r = bench_consistency(s, n_grid, replicates, seed, options);
    write_file(dir / ("bench_" + scenario_name(s) + ".csv"), bench_csv(r));
    out << scenario_name(s) << ":";
    for (const auto& row : r.summary) {
      summary += scenario_name(s) + "," + std::to_string(row.n) + "," + format_double(row.mean_log_bf) + "," +
                 format_double(row.sd_log_bf) + "\n";
      out << " n=" << row.n << " mean=" << format_double(row.mean_log_bf);
    }
    out << (r.strictly_decreasing() ? " decreasing" : " NOT decreasing") << "\n";
  }
  write_file(dir / "bench_summary.csv", summary);
  return 0;
}

double max_abs_dev(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_dev(const std::map<Index, double>& a, const std::map<Index, double>& b) {
  double m = 0.0;
  for (auto [k, v] : a) m = std::max(m, std::abs(v - (b.count(k) ? b.at(k) : 0.0)));
  for (auto [k, v] : b) m = std::max(m, std::abs(v - (a.count(k) ? a.at(k) : 0.0)));
  return m;
}

int cmd_oracle(const std::string& input, const std::string& config_path, const SettingFlags& flags, bool compare,
               Index n_max, Index p_max, const std::string& out_dir, std::ostream& out) {
  RunConfig config = load_run_config(config_path, flags);
  if (compare && !config.seed_given) throw ConfigError("oracle --compare needs --seed");
  const LoadedCsv loaded = load_input(input, config);
  const Dataset& data = loaded.data;
  config.prior.kind = resolve_model_kind(config.model, data);
  const ExactPosterior exact = enumerate_exact(data, config.prior, n_max, p_max, config.sampler.threads);

  Json j;
  j["command"] = "oracle";
  j["config"] = {{"prior", to_json(config.prior)}, {"sampler", to_json(config.sampler)}};
  j["exact"] = to_json(exact.marginals);
  j["num_models"] = exact.table.size();
  j["log_normalizer"] = exact.normalizer;
  RunReport echo;
  echo.provenance = provenance_of(loaded);
  j["provenance"] = echo.to_json().at("provenance");
  if (compare) {
    const PosteriorSummary s = run_chain(data, config.prior, config.sampler);
    const double cp = max_abs_dev(s.cp_prob, exact.marginals.cp_prob);
    const double pip = max_abs_dev(s.pip, exact.marginals.pip);
    const double part = max_abs_dev(s.partition_count_dist, exact.marginals.partition_count_dist);
    j["sampler"] = to_json(s);
    j["max_abs_deviation"] = {{"cp_prob", cp}, {"pip", pip}, {"partition_count_dist", part}};
    out << "max |cp_prob dev|=" << format_double(cp) << " max |pip dev|=" << format_double(pip)
        << " max |partition dev|=" << format_double(part) << "\n";
  }
  const fs::path dir = ensure_dir(out_dir);
  write_file(dir / "oracle.json", dump(j));
  out << "models=" << exact.table.size() << " partition_mode=" << exact.marginals.partition_count_mode() << " -> "
      << (dir / "oracle.json").string() << "\n";
  return 0;
}

int cmd_report(const std::string& path, bool canonical, std::ostream& out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  Json j;
  try {
    j = Json::parse(f);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("invalid report JSON: ") + e.what(), 0, 0);
  }
  RunReport report;
  try {
    report = RunReport::from_json(j);
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  }
  check_probabilities(report);
  if (canonical) {
    out << dump(report.to_json());
    return 0;
  }
  out << "command=" << report.command << " n=" << report.provenance.n << " p=" << report.provenance.p;
  if (report.posterior) out << " partition_mode=" << report.posterior->partition_count_mode();
  if (report.pelt) out << " pelt_changepoints=" << report.pelt->changepoints.size();
  out << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian changepoint detection with sparse variable selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bcpvs 1.0.0");

  CLI::App* sim = app.add_subcommand("simulate", "write one of the three simulation studies as CSV + truth JSON");
  int example = 1;
  std::uint64_t sim_seed = 0;
  std::string out_dir = ".";
  sim->add_option("--example", example, "1, 2 or 3")->required();
  sim->add_option("--seed", sim_seed, "RNG seed")->required();
  sim->add_option("--out", out_dir, "output directory");

  CLI::App* detect = app.add_subcommand("detect", "run the Gibbs sampler and write a report and plot data");
  std::string input;
  std::string config_path;
  SettingFlags detect_flags;
  detect->add_option("--input", input, "CSV with a header row")->required();
  detect->add_option("--config", config_path, "key = value or JSON config file");
  detect->add_option("--out", out_dir, "output directory");
  add_prior_flags(detect, detect_flags);
  detect_flags.add_switch(detect, "pelt", "also run the PELT baseline");
  detect_flags.add(detect, "pelt-penalty", "PELT penalty (default 2 sigma^2 log n)");
  detect_flags.add(detect, "min-seg", "PELT minimum segment length");

  CLI::App* pelt = app.add_subcommand("pelt", "PELT mean-change segmentation");
  std::string response = "y";
  std::optional<double> penalty;
  std::optional<double> pelt_sigma2;
  Index min_seg = 1;
  pelt->add_option("--input", input, "CSV with a header row")->required();
  pelt->add_option("--response", response, "response column");
  pelt->add_option("--penalty", penalty, "penalty per changepoint (default 2 sigma^2 log n)");
  pelt->add_option("--sigma2", pelt_sigma2, "noise variance for the default penalty (default MAD estimate)");
  pelt->add_option("--min-seg", min_seg, "minimum segment length");
  pelt->add_option("--out", out_dir, "output directory");

  CLI::App* bench = app.add_subcommand("bench", "Bayes-factor consistency trends over growing n");
  std::string scenario = "all";
  std::string grid = "100,200,400,800";
  Index replicates = 20;
  std::uint64_t bench_seed = 0;
  std::string shift_rule = "log2";
  Index shift = 10;
  bench->add_option("--scenario", scenario,
                    "wrong-count, shifted-eps, wrong-covariates, est-sigma, misspec-var, truth or all");
  bench->add_option("--n-grid", grid, "comma list of series lengths");
  bench->add_option("--replicates", replicates, "datasets per n");
  bench->add_option("--seed", bench_seed, "RNG seed")->required();
  bench->add_option("--shift-rule", shift_rule, "log2: shift by ceil((log n)^2) rows; const: by --shift rows");
  bench->add_option("--shift", shift, "rows for --shift-rule const");
  bench->add_option("--out", out_dir, "output directory");

  CLI::App* oracle = app.add_subcommand("oracle", "exact posterior by enumeration for tiny inputs");
  SettingFlags oracle_flags;
  bool compare = false;
  Index n_max = 12;
  Index p_max = 3;
  oracle->add_option("--input", input, "CSV with a header row")->required();
  oracle->add_option("--config", config_path, "key = value or JSON config file");
  oracle->add_option("--out", out_dir, "output directory");
  oracle->add_flag("--compare", compare, "also run the sampler and report deviations");
  oracle->add_option("--n-max", n_max, "largest series length to enumerate (at most 12)");
  oracle->add_option("--p-max", p_max, "largest candidate count to enumerate (at most 3)");
  add_prior_flags(oracle, oracle_flags);

  CLI::App* report = app.add_subcommand("report", "validate a report JSON and summarise it");
  std::string report_path;
  bool canonical = false;
  report->add_option("--input", report_path, "report.json")->required();
  report->add_flag("--canonical", canonical, "print the re-serialised report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorClass::Config);
  }

  try {
    if (*sim) return cmd_simulate(example, sim_seed, out_dir, out);
    if (*detect) return cmd_detect(input, config_path, detect_flags, out_dir, out);
    if (*pelt) return cmd_pelt(input, response, penalty, min_seg, pelt_sigma2, out_dir, out);
    if (*bench) return cmd_bench(scenario, grid, replicates, bench_seed, shift_rule, shift, out_dir, out);
    if (*oracle) {
      return cmd_oracle(input, config_path, oracle_flags, compare, std::min<Index>(n_max, 12),
                        std::min<Index>(p_max, 3), out_dir, out);
    }
    if (*report) return cmd_report(report_path, canonical, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.error_class());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace bcpvs
