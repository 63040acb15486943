#include "bcpvs/simgen.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "bcpvs/errors.hpp"
#include "bcpvs/rng.hpp"

namespace bcpvs {

std::vector<Index> GroundTruth::changepoints_1based() const {
  std::vector<Index> out;
  out.reserve(changepoints.size());
  for (Index c : changepoints) out.push_back(c + 1);
  return out;
}

namespace {

struct RegressionSegment {
  Index end;  // 1-based last row
  double intercept;
  std::map<Index, double> coefficients;
  double noise_sd;
};

Simulation changing_regression(int example, std::uint64_t seed, Index n, Index p,
                               const std::vector<RegressionSegment>& segments, std::optional<double> rho) {
  CounterRng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Simulation sim;
  Dataset& d = sim.data;
  d.X.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) d.X(i, j) = normal(rng);
  }
  d.y.resize(n);
  d.ar_lag = rho.has_value();

  GroundTruth& t = sim.truth;
  t.example = example;
  t.seed = seed;
  t.rho = rho;
  Index begin = 0;
  std::map<Index, bool> active;
  for (const auto& s : segments) {
    t.segments.push_back({begin, s.end, s.intercept, s.coefficients, s.noise_sd});
    if (begin > 0) t.changepoints.push_back(begin);
    for (auto [j, c] : s.coefficients) active[j] = true;
    begin = s.end;
  }
  for (auto [j, on] : active) t.active_set.push_back(j);

  double previous = 0.0;  // y_0 for the AR(1) recursion
  for (const auto& s : t.segments) {
    for (Index i = s.begin; i < s.end; ++i) {
      double mean = s.intercept;
      for (auto [j, c] : s.coefficients) mean += c * d.X(i, j - 1);
      if (rho) mean += *rho * previous;
      d.y(i) = mean + s.noise_sd * normal(rng);
      previous = d.y(i);
    }
  }
  return sim;
}

double parse_number(std::string_view cell, long row, long col) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
  if (cell.empty()) throw ParseError("empty cell", row, col);
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("cannot parse '" + std::string(cell) + "' as a number", row, col);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite value", row, col);
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

Simulation gen_example1(std::uint64_t seed) {
  constexpr Index n = 497;
  const std::vector<std::pair<Index, double>> blocks = {{138, -0.18}, {225, 0.08}, {242, 1.07}, {299, -0.53},
                                                        {308, 0.16},  {333, -0.69}, {497, -0.16}};
  constexpr double sd = 0.2;  // variance 0.04
  CounterRng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Simulation sim;
  sim.data.y.resize(n);
  GroundTruth& t = sim.truth;
  t.example = 1;
  t.seed = seed;
  Index begin = 0;
  for (auto [end, level] : blocks) {
    t.segments.push_back({begin, end, level, {}, sd});
    if (begin > 0) t.changepoints.push_back(begin);
    for (Index i = begin; i < end; ++i) {
      t.theta.push_back(level);
      sim.data.y(i) = level + sd * normal(rng);
    }
    begin = end;
  }
  return sim;
}

Simulation gen_example2(std::uint64_t seed) {
  return changing_regression(2, seed, 250, 250,
                             {{75, 3.0, {{2, 1.0}, {12, 2.0}}, 1.2},
                              {175, 1.0, {{2, 2.0}}, 0.8},
                              {250, -2.5, {{2, 2.0}, {3, -1.0}}, 1.0}},
                             std::nullopt);
}

Simulation gen_example3(std::uint64_t seed) {
  return changing_regression(3, seed, 300, 250,
                             {{90, 3.0, {{2, 1.0}, {12, 3.0}}, 1.2},
                              {210, 1.0, {{2, 2.0}}, 0.8},
                              {300, -2.0, {{2, 1.0}, {3, -1.0}}, 1.0}},
                             0.5);
}

Simulation gen_example(int example, std::uint64_t seed) {
  switch (example) {
    case 1:
      return gen_example1(seed);
    case 2:
      return gen_example2(seed);
    case 3:
      return gen_example3(seed);
    default:
      throw ConfigError("unknown example " + std::to_string(example) + "; expected 1, 2 or 3");
  }
}

LoadedCsv parse_csv(const std::string& text, const CsvSchema& schema, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  long row = 1;
  if (!std::getline(in, line)) throw ParseError("missing header row", row, 1);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header;
  for (auto cell : split(line)) header.push_back(trim(cell));

  auto find = [&](const std::string& name) -> std::size_t {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw SchemaError("column '" + name + "' not found in " + origin);
  };
  const std::size_t response = find(schema.response);
  std::vector<std::size_t> covs;
  std::vector<std::string> names;
  if (schema.all_covariates && schema.covariates.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != response) {
        covs.push_back(c);
        names.push_back(header[c]);
      }
    }
  } else {
    for (const auto& name : schema.covariates) {
      covs.push_back(find(name));
      names.push_back(name);
    }
  }

  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()),
                       row, static_cast<long>(std::min(cells.size(), header.size())) + 1);
    }
    ys.push_back(parse_number(cells[response], row, static_cast<long>(response) + 1));
    std::vector<double> x;
    x.reserve(covs.size());
    for (std::size_t c : covs) x.push_back(parse_number(cells[c], row, static_cast<long>(c) + 1));
    xs.push_back(std::move(x));
  }

  LoadedCsv out;
  out.meta.path = origin;
  Dataset& d = out.data;
  const auto n = static_cast<Index>(ys.size());
  d.y = Eigen::Map<const VectorXd>(ys.data(), n);
  d.X.resize(n, static_cast<Index>(covs.size()));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d.X.cols(); ++j) d.X(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  d.covariate_names = names;
  d.ar_lag = schema.ar_lag;

  if (schema.sqrt_transform) {
    if ((d.y.array() < 0.0).any()) throw SchemaError("square-root transform needs a non-negative response");
    d.y = d.y.array().sqrt();
    out.meta.sqrt_transformed = true;
  }
  if (schema.standardize) {
    if (n < 2) throw SchemaError("standardisation needs at least two rows");
    const double mean = d.y.mean();
    const double sd = std::sqrt((d.y.array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw SchemaError("cannot standardise a constant response");
    d.y = (d.y.array() - mean) / sd;
    out.meta.standardized = true;
    out.meta.original_mean = mean;
    out.meta.original_sd = sd;
  }
  return out;
}

LoadedCsv load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, path);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string to_csv(const Dataset& data) {
  std::string out = "y";
  const auto names = data.candidate_names();
  for (Index j = 0; j < data.p(); ++j) out += "," + names[static_cast<std::size_t>(j)];
  out += "\n";
  for (Index i = 0; i < data.n(); ++i) {
    out += format_double(data.y(i));
    for (Index j = 0; j < data.p(); ++j) {
      out += ",";
      out += format_double(data.X(i, j));
    }
    out += "\n";
  }
  return out;
}

}  // namespace bcpvs
