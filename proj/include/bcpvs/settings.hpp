#ifndef BCPVS_SETTINGS_HPP
#define BCPVS_SETTINGS_HPP

#include <map>
#include <optional>
#include <string>

#include "bcpvs/model.hpp"
#include "bcpvs/sampler.hpp"
#include "bcpvs/simgen.hpp"

namespace bcpvs {

/// Raw key/value settings. Keys are normalised to lower case with '-'
/// separators, so "burn_in" and "burn-in" are the same key.
using Settings = std::map<std::string, std::string>;

std::string normalize_key(std::string key);

/// Parses either a JSON object of scalars or "key = value" lines
/// (TOML-style: '#' comments, [section] headers ignored, optional quotes).
Settings parse_settings(const std::string& text);
Settings load_settings(const std::string& path);

/// Layers settings left to right; later layers win.
Settings merge(const Settings& lower, const Settings& upper);

struct RunConfig {
  PriorConfig prior;
  SamplerConfig sampler;
  CsvSchema schema;
  std::string model = "auto";  // auto, mean or regression
  bool seed_given = false;
  bool run_pelt = false;
  std::optional<double> pelt_penalty;
  Index min_seg = 1;
};

/// Applies settings over the built-in defaults. Unknown keys and malformed
/// values raise ConfigError.
RunConfig resolve_config(const Settings& settings);

/// Default thread count from BCPVS_THREADS, if set and valid.
std::optional<Index> threads_from_env();

/// Picks the model kind for "auto": mean-shift without candidates, regression otherwise.
ModelKind resolve_model_kind(const std::string& model, const Dataset& data);

}  // namespace bcpvs

#endif  // BCPVS_SETTINGS_HPP
