#include "bcpvs/settings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "bcpvs/errors.hpp"

namespace bcpvs {

namespace {

std::string strip(std::string s) {
  auto blank = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), blank));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), blank).base(), s.end());
  return s;
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// TOML arrays of strings or numbers become a comma list.
std::string flatten_array(const std::string& s) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return s;
  std::string out;
  std::stringstream in(s.substr(1, s.size() - 2));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = unquote(strip(item));
    if (item.empty()) continue;
    if (!out.empty()) out += ",";
    out += item;
  }
  return out;
}

Settings parse_json_settings(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  Settings out;
  for (const auto& [key, value] : j.items()) {
    std::string v;
    if (value.is_string()) {
      v = value.get<std::string>();
    } else if (value.is_array()) {
      for (const auto& e : value) {
        if (!v.empty()) v += ",";
        v += e.is_string() ? e.get<std::string>() : e.dump();
      }
    } else if (value.is_null()) {
      v = "estimate";
    } else if (value.is_primitive()) {
      v = value.dump();
    } else {
      throw ConfigError("config key '" + key + "' must be a scalar or a list");
    }
    out[normalize_key(key)] = v;
  }
  return out;
}

Settings parse_key_values(const std::string& text) {
  Settings out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    line = strip(line);
    if (line.empty() || line.front() == '[') continue;
    const auto pos = line.find_first_of("=:");
    if (pos == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = strip(line.substr(0, pos));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[normalize_key(key)] = flatten_array(unquote(strip(line.substr(pos + 1))));
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const std::string s = strip(v);
  const char* begin = s.data() + (!s.empty() && s.front() == '+' ? 1 : 0);
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out)) {
    throw ConfigError("setting '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const std::string s = strip(v);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("setting '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

Index to_count(const std::string& key, const std::string& v, std::int64_t min) {
  const auto out = to_int(key, v);
  if (out < min) throw ConfigError("setting '" + key + "' must be at least " + std::to_string(min));
  return static_cast<Index>(out);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const std::string s = strip(v);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("setting '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string s = strip(v);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("setting '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = strip(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Handler = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = {
      {"seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.sampler.seed = to_seed(k, v);
         c.seed_given = true;
       }},
      {"sigma2",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (strip(v) == "estimate") {
           c.prior.sigma2.reset();
         } else {
           c.prior.sigma2 = to_double(k, v);
         }
       }},
      {"tau2", [](RunConfig& c, const std::string& k, const std::string& v) { c.prior.tau2 = to_double(k, v); }},
      {"v", [](RunConfig& c, const std::string& k, const std::string& v) { c.prior.mean_var = to_double(k, v); }},
      {"cn",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.prior.expected_changepoints = to_double(k, v);
       }},
      {"pn",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.prior.changepoint_prob = to_double(k, v); }},
      {"inclusion-prob",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto items = to_list(v);
         if (items.size() == 1) {
           c.prior.inclusion_prob = to_double(k, items.front());
         } else {
           c.prior.inclusion_probs.clear();
           for (const auto& item : items) c.prior.inclusion_probs.push_back(to_double(k, item));
         }
       }},
      {"alpha1", [](RunConfig& c, const std::string& k, const std::string& v) { c.prior.alpha1 = to_double(k, v); }},
      {"max-covariates",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.prior.max_covariates = to_count(k, v, 0); }},
      {"sample-tau2",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.prior.sample_tau2 = to_bool(k, v); }},
      {"model",
       [](RunConfig& c, const std::string&, const std::string& v) {
         const std::string m = strip(v);
         if (m != "auto" && m != "mean" && m != "regression") {
           throw ConfigError("setting 'model' must be auto, mean or regression, got '" + v + "'");
         }
         c.model = m;
       }},
      {"ar-lag", [](RunConfig& c, const std::string& k, const std::string& v) { c.schema.ar_lag = to_bool(k, v); }},
      {"response", [](RunConfig& c, const std::string&, const std::string& v) { c.schema.response = strip(v); }},
      {"covariates",
       [](RunConfig& c, const std::string&, const std::string& v) {
         const std::string s = strip(v);
         c.schema.covariates.clear();
         if (s == "all") {
           c.schema.all_covariates = true;
         } else {
           c.schema.all_covariates = false;
           if (s != "none") c.schema.covariates = to_list(s);
         }
       }},
      {"standardize",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.schema.standardize = to_bool(k, v); }},
      {"sqrt",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.schema.sqrt_transform = to_bool(k, v); }},
      {"iterations",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.sampler.iterations = to_count(k, v, 1); }},
      {"burn-in",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.sampler.burn_in = to_count(k, v, 0); }},
      {"thin", [](RunConfig& c, const std::string& k, const std::string& v) { c.sampler.thin = to_count(k, v, 1); }},
      {"chains",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.sampler.chains = to_count(k, v, 1); }},
      {"threads",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.sampler.threads = to_count(k, v, 1); }},
      {"pelt", [](RunConfig& c, const std::string& k, const std::string& v) { c.run_pelt = to_bool(k, v); }},
      {"pelt-penalty",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.pelt_penalty = to_double(k, v); }},
      {"min-seg", [](RunConfig& c, const std::string& k, const std::string& v) { c.min_seg = to_count(k, v, 1); }},
  };
  return table;
}

}  // namespace

std::string normalize_key(std::string key) {
  key = strip(key);
  while (!key.empty() && key.front() == '-') key.erase(0, 1);
  for (auto& ch : key) {
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (ch == '_') ch = '-';
  }
  return key;
}

Settings parse_settings(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_json_settings(text);
  return parse_key_values(text);
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str());
}

Settings merge(const Settings& lower, const Settings& upper) {
  Settings out = lower;
  for (const auto& [k, v] : upper) out[k] = v;
  return out;
}

RunConfig resolve_config(const Settings& settings) {
  RunConfig config;
  if (auto t = threads_from_env()) config.sampler.threads = *t;
  for (const auto& [key, value] : settings) {
    const auto it = handlers().find(normalize_key(key));
    if (it == handlers().end()) throw ConfigError("unknown setting '" + key + "'");
    it->second(config, it->first, value);
  }
  config.sampler.validate();
  return config;
}

std::optional<Index> threads_from_env() {
  const char* env = std::getenv("BCPVS_THREADS");
  if (env == nullptr) return std::nullopt;
  Index v = 0;
  const std::string s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) return std::nullopt;
  return v;
}

ModelKind resolve_model_kind(const std::string& model, const Dataset& data) {
  if (model == "mean") return ModelKind::MeanShift;
  if (model == "regression") return ModelKind::Regression;
  return data.num_candidates() == 0 ? ModelKind::MeanShift : ModelKind::Regression;
}

}  // namespace bcpvs
