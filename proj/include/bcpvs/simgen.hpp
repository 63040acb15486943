#ifndef BCPVS_SIMGEN_HPP
#define BCPVS_SIMGEN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bcpvs/model.hpp"

namespace bcpvs {

struct SegmentTruth {
  Index begin = 0;  // 0-based, half-open
  Index end = 0;
  double intercept = 0.0;
  std::map<Index, double> coefficients;  // 1-based covariate index -> coefficient
  double noise_sd = 0.0;
};

struct GroundTruth {
  int example = 0;
  std::uint64_t seed = 0;
  std::vector<Index> changepoints;  // 0-based observation index where a new block starts
  std::vector<SegmentTruth> segments;
  std::vector<double> theta;        // true mean per observation (mean-shift example only)
  std::vector<Index> active_set;    // 1-based covariate indices, union over segments
  std::optional<double> rho;        // AR(1) coefficient when present

  /// 1-based changepoint positions as used in files and reports.
  std::vector<Index> changepoints_1based() const;
};

struct Simulation {
  Dataset data;
  GroundTruth truth;
};

/// Piecewise-constant mean, n = 497, six changepoints, noise N(0, 0.04).
Simulation gen_example1(std::uint64_t seed);
/// Changing regression, n = p = 250, changepoints after rows 75 and 175.
Simulation gen_example2(std::uint64_t seed);
/// Changing regression with an AR(1) term, n = 300, p = 250, rho = 0.5.
Simulation gen_example3(std::uint64_t seed);
Simulation gen_example(int example, std::uint64_t seed);

struct CsvSchema {
  std::string response = "y";
  /// Covariate column names; empty with all_covariates unset means none.
  std::vector<std::string> covariates;
  bool all_covariates = true;  // use every non-response column
  bool standardize = false;
  bool sqrt_transform = false;
  bool ar_lag = false;
};

struct CsvMetadata {
  std::string path;
  bool standardized = false;
  bool sqrt_transformed = false;
  double original_mean = 0.0;  // of the (possibly square-rooted) response
  double original_sd = 1.0;
};

struct LoadedCsv {
  Dataset data;
  CsvMetadata meta;
};

/// Reads a header-first, comma-separated numeric table. The square-root
/// transform is applied before standardisation.
LoadedCsv load_csv(const std::string& path, const CsvSchema& schema);
LoadedCsv parse_csv(const std::string& text, const CsvSchema& schema, const std::string& origin = "<memory>");

/// Writes y followed by the covariate columns with round-trip precision.
std::string to_csv(const Dataset& data);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace bcpvs

#endif  // BCPVS_SIMGEN_HPP
