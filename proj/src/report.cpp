#include "bcpvs/report.hpp"

#include "bcpvs/errors.hpp"

namespace bcpvs {

namespace {

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

Json distribution_json(const std::map<Index, double>& dist, const char* key) {
  Json out = Json::array();
  for (auto [k, prob] : dist) out.push_back({{key, k}, {"probability", prob}});
  return out;
}

std::map<Index, double> distribution_from(const Json& j, const char* key) {
  std::map<Index, double> out;
  for (const auto& e : j) out[e.at(key).get<Index>()] = e.at("probability").get<double>();
  return out;
}

Json summary_json(const PosteriorSummary& s, bool with_chains) {
  Json j;
  j["cp_prob"] = s.cp_prob;
  j["pip"] = s.pip;
  j["partition_count_dist"] = distribution_json(s.partition_count_dist, "partitions");
  j["model_size_dist"] = distribution_json(s.model_size_dist, "size");
  j["fitted_mean"] = s.fitted_mean;
  j["partition_count_mode"] = s.partition_count_dist.empty() ? Json(nullptr) : Json(s.partition_count_mode());

  // The segmentation covers the modelled rows; positions are reported as
  // 1-based observation indices.
  const Index offset = static_cast<Index>(s.cp_prob.size()) - s.map_model.segmentation.size();
  Json map;
  map["rows"] = s.map_model.segmentation.size();
  map["first_observation"] = offset + 1;
  std::vector<Index> cps;
  for (Index c : s.map_model.segmentation.changepoints()) cps.push_back(c + offset + 1);
  map["changepoints"] = cps;
  map["dimension"] = s.map_model.mask.dimension();
  std::vector<Index> inc;
  for (Index c : s.map_model.mask.indices()) inc.push_back(c + 1);
  map["included"] = inc;
  map["log_posterior"] = s.map_log_posterior;
  j["map_model"] = map;

  j["sigma2_mean"] = s.sigma2_mean;
  j["tau2_mean"] = s.tau2_mean;
  j["n_samples"] = s.n_samples;
  if (with_chains) {
    Json chains = Json::array();
    for (const auto& c : s.per_chain) chains.push_back(summary_json(c, false));
    j["chains"] = chains;
  }
  return j;
}

}  // namespace

std::string name_of(ModelKind kind) { return kind == ModelKind::MeanShift ? "mean" : "regression"; }

ModelKind parse_model_kind(const std::string& name) {
  if (name == "mean") return ModelKind::MeanShift;
  if (name == "regression") return ModelKind::Regression;
  throw ConfigError("unknown model '" + name + "'; expected mean or regression");
}

Json to_json(const PriorConfig& p) {
  Json j;
  j["model"] = name_of(p.kind);
  j["expected_changepoints"] = p.expected_changepoints;
  j["changepoint_prob"] = optional_json(p.changepoint_prob);
  j["inclusion_prob"] = optional_json(p.inclusion_prob);
  j["inclusion_probs"] = p.inclusion_probs;
  j["alpha1"] = p.alpha1;
  j["tau2"] = p.tau2;
  j["V"] = p.mean_var;
  j["sigma2"] = optional_json(p.sigma2);
  j["sigma2_mode"] = p.estimate_sigma2() ? "estimate" : "known";
  j["sample_tau2"] = p.sample_tau2;
  j["max_covariates"] = optional_json(p.max_covariates);
  return j;
}

PriorConfig prior_from_json(const Json& j) {
  PriorConfig p;
  p.kind = parse_model_kind(j.at("model").get<std::string>());
  p.expected_changepoints = j.at("expected_changepoints").get<double>();
  p.changepoint_prob = optional_from<double>(j, "changepoint_prob");
  p.inclusion_prob = optional_from<double>(j, "inclusion_prob");
  p.inclusion_probs = j.at("inclusion_probs").get<std::vector<double>>();
  p.alpha1 = j.at("alpha1").get<double>();
  p.tau2 = j.at("tau2").get<double>();
  p.mean_var = j.at("V").get<double>();
  p.sigma2 = optional_from<double>(j, "sigma2");
  p.sample_tau2 = j.at("sample_tau2").get<bool>();
  p.max_covariates = optional_from<Index>(j, "max_covariates");
  return p;
}

Json to_json(const SamplerConfig& c) {
  return {{"iterations", c.iterations}, {"burn_in", c.burn_in}, {"thin", c.thin},
          {"seed", c.seed},             {"chains", c.chains},   {"threads", c.threads}};
}

SamplerConfig sampler_from_json(const Json& j) {
  SamplerConfig c;
  c.iterations = j.at("iterations").get<Index>();
  c.burn_in = j.at("burn_in").get<Index>();
  c.thin = j.at("thin").get<Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.chains = j.at("chains").get<Index>();
  c.threads = j.at("threads").get<Index>();
  return c;
}

Json to_json(const PosteriorSummary& s) { return summary_json(s, true); }

PosteriorSummary summary_from_json(const Json& j) {
  PosteriorSummary s;
  s.cp_prob = j.at("cp_prob").get<std::vector<double>>();
  s.pip = j.at("pip").get<std::vector<double>>();
  s.partition_count_dist = distribution_from(j.at("partition_count_dist"), "partitions");
  s.model_size_dist = distribution_from(j.at("model_size_dist"), "size");
  s.fitted_mean = j.at("fitted_mean").get<std::vector<double>>();

  const Json& map = j.at("map_model");
  const Index rows = map.at("rows").get<Index>();
  const Index offset = map.at("first_observation").get<Index>() - 1;
  std::vector<Index> cps;
  for (Index c : map.at("changepoints").get<std::vector<Index>>()) cps.push_back(c - offset - 1);
  s.map_model.segmentation = Segmentation::from_changepoints(rows, cps);
  std::vector<Index> inc;
  for (Index c : map.at("included").get<std::vector<Index>>()) inc.push_back(c - 1);
  s.map_model.mask = InclusionMask::from_indices(map.at("dimension").get<Index>(), inc);
  s.map_log_posterior = map.at("log_posterior").get<double>();

  s.sigma2_mean = j.at("sigma2_mean").get<double>();
  s.tau2_mean = j.at("tau2_mean").get<double>();
  s.n_samples = j.at("n_samples").get<Index>();
  if (j.contains("chains")) {
    for (const auto& c : j.at("chains")) s.per_chain.push_back(summary_from_json(c));
  }
  return s;
}

Json to_json(const PeltResult& r) {
  Json j;
  std::vector<Index> cps;
  for (Index c : r.changepoints) cps.push_back(c + 1);
  j["changepoints"] = cps;
  j["total_cost"] = r.total_cost;
  j["segment_means"] = r.segment_means;
  j["segment_variances"] = r.segment_variances;
  j["variance"] = r.variance;
  j["variance_fallback"] = r.variance_fallback;
  j["penalty"] = r.penalty;
  j["min_seg"] = r.min_seg;
  return j;
}

PeltResult pelt_from_json(const Json& j) {
  PeltResult r;
  for (Index c : j.at("changepoints").get<std::vector<Index>>()) r.changepoints.push_back(c - 1);
  r.total_cost = j.at("total_cost").get<double>();
  r.segment_means = j.at("segment_means").get<std::vector<double>>();
  r.segment_variances = j.at("segment_variances").get<std::vector<double>>();
  r.variance = j.at("variance").get<double>();
  r.variance_fallback = j.at("variance_fallback").get<bool>();
  r.penalty = j.at("penalty").get<double>();
  r.min_seg = j.at("min_seg").get<Index>();
  return r;
}

Json to_json(const GroundTruth& t, Index n, Index p) {
  Json j;
  j["example"] = t.example;
  j["seed"] = t.seed;
  j["n"] = n;
  j["p"] = p;
  j["changepoints"] = t.changepoints_1based();
  j["num_partitions"] = t.changepoints.size() + 1;
  Json segs = Json::array();
  for (const auto& s : t.segments) {
    Json coef = Json::object();
    for (auto [k, c] : s.coefficients) coef["x" + std::to_string(k)] = c;
    segs.push_back({{"first", s.begin + 1}, {"last", s.end}, {"intercept", s.intercept},
                    {"coefficients", coef}, {"noise_sd", s.noise_sd}});
  }
  j["segments"] = segs;
  j["active_set"] = t.active_set;
  if (!t.theta.empty()) j["theta"] = t.theta;
  if (t.rho) j["rho"] = *t.rho;
  return j;
}

Json RunReport::to_json() const {
  Json j;
  j["command"] = command;
  Json config;
  config["prior"] = bcpvs::to_json(prior);
  config["sampler"] = bcpvs::to_json(sampler);
  config["seed"] = sampler.seed;
  j["config"] = config;
  j["candidate_names"] = candidate_names;
  j["posterior"] = posterior ? bcpvs::to_json(*posterior) : Json(nullptr);
  j["pelt"] = pelt ? bcpvs::to_json(*pelt) : Json(nullptr);
  j["timings"] = timings;
  j["provenance"] = {{"input", provenance.input},
                     {"generator", provenance.generator},
                     {"data_seed", optional_json(provenance.data_seed)},
                     {"n", provenance.n},
                     {"p", provenance.p},
                     {"ar_lag", provenance.ar_lag},
                     {"standardized", provenance.standardized},
                     {"sqrt_transformed", provenance.sqrt_transformed}};
  return j;
}

RunReport RunReport::from_json(const Json& j) {
  RunReport r;
  r.command = j.at("command").get<std::string>();
  r.prior = prior_from_json(j.at("config").at("prior"));
  r.sampler = sampler_from_json(j.at("config").at("sampler"));
  r.candidate_names = j.at("candidate_names").get<std::vector<std::string>>();
  if (!j.at("posterior").is_null()) r.posterior = summary_from_json(j.at("posterior"));
  if (!j.at("pelt").is_null()) r.pelt = pelt_from_json(j.at("pelt"));
  r.timings = j.at("timings").get<std::map<std::string, double>>();
  const Json& p = j.at("provenance");
  r.provenance.input = p.at("input").get<std::string>();
  r.provenance.generator = p.at("generator").get<std::string>();
  r.provenance.data_seed = optional_from<std::uint64_t>(p, "data_seed");
  r.provenance.n = p.at("n").get<Index>();
  r.provenance.p = p.at("p").get<Index>();
  r.provenance.ar_lag = p.at("ar_lag").get<bool>();
  r.provenance.standardized = p.at("standardized").get<bool>();
  r.provenance.sqrt_transformed = p.at("sqrt_transformed").get<bool>();
  return r;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void check_probabilities(const RunReport& report) {
  auto check = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(what) + " outside [0, 1]");
  };
  auto check_summary = [&](const PosteriorSummary& s) {
    for (double v : s.cp_prob) check(v, "cp_prob");
    for (double v : s.pip) check(v, "pip");
    for (auto [k, v] : s.partition_count_dist) check(v, "partition_count_dist");
    for (auto [k, v] : s.model_size_dist) check(v, "model_size_dist");
  };
  if (report.posterior) {
    check_summary(*report.posterior);
    for (const auto& c : report.posterior->per_chain) check_summary(c);
  }
  if (report.prior.changepoint_prob) check(*report.prior.changepoint_prob, "changepoint_prob");
  if (report.prior.inclusion_prob) check(*report.prior.inclusion_prob, "inclusion_prob");
  for (double v : report.prior.inclusion_probs) check(v, "inclusion_probs");
}

}  // namespace bcpvs
