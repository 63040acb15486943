#ifndef BCPVS_REPORT_HPP
#define BCPVS_REPORT_HPP

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "bcpvs/pelt.hpp"
#include "bcpvs/sampler.hpp"
#include "bcpvs/simgen.hpp"

namespace bcpvs {

using Json = nlohmann::json;

/// Where the analysed data came from.
struct Provenance {
  std::string input;      // file path, empty for generated data
  std::string generator;  // e.g. "example2", empty for file input
  std::optional<std::uint64_t> data_seed;
  Index n = 0;
  Index p = 0;
  bool ar_lag = false;
  bool standardized = false;
  bool sqrt_transformed = false;
};

/// Everything a detect / pelt run produced, with the resolved configuration.
/// Serialised keys are sorted, so the text form is stable.
struct RunReport {
  std::string command;
  PriorConfig prior;
  SamplerConfig sampler;
  std::vector<std::string> candidate_names;
  std::optional<PosteriorSummary> posterior;
  std::optional<PeltResult> pelt;
  std::map<std::string, double> timings;  // seconds
  Provenance provenance;

  Json to_json() const;
  static RunReport from_json(const Json& j);
};

Json to_json(const PriorConfig& prior);
PriorConfig prior_from_json(const Json& j);
Json to_json(const SamplerConfig& config);
SamplerConfig sampler_from_json(const Json& j);
/// Changepoints and selected columns are written 1-based.
Json to_json(const PosteriorSummary& summary);
PosteriorSummary summary_from_json(const Json& j);
Json to_json(const PeltResult& result);
PeltResult pelt_from_json(const Json& j);
Json to_json(const GroundTruth& truth, Index n, Index p);

/// Pretty-printed text with a trailing newline.
std::string dump(const Json& j);

/// Throws ConfigError if any probability in the report lies outside [0, 1].
void check_probabilities(const RunReport& report);

std::string name_of(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

}  // namespace bcpvs

#endif  // BCPVS_REPORT_HPP
