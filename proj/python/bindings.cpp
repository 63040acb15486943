#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bcpvs/bench.hpp"
#include "bcpvs/errors.hpp"
#include "bcpvs/model.hpp"
#include "bcpvs/oracle.hpp"
#include "bcpvs/pelt.hpp"
#include "bcpvs/report.hpp"
#include "bcpvs/sampler.hpp"
#include "bcpvs/simgen.hpp"

namespace py = pybind11;
using namespace bcpvs;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

ModelId make_model(const Dataset& data, const std::vector<Index>& changepoints, const std::vector<Index>& included) {
  return {Segmentation::from_changepoints(data.n_eff(), changepoints),
          InclusionMask::from_indices(data.num_candidates(), included)};
}

Dataset make_dataset(const VectorXd& y, const std::optional<MatrixXd>& X, bool ar_lag) {
  Dataset d;
  d.y = y;
  d.X = X ? *X : MatrixXd(y.size(), 0);
  d.ar_lag = ar_lag;
  d.validate();
  return d;
}

}  // namespace

PYBIND11_MODULE(_bcpvs, m) {
  m.doc() = "Bayesian changepoint detection with sparse variable selection";

  py::register_exception<Error>(m, "BcpvsError");

  py::enum_<ModelKind>(m, "ModelKind").value("MeanShift", ModelKind::MeanShift).value("Regression", ModelKind::Regression);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("y"), py::arg("X") = std::nullopt, py::arg("ar_lag") = false)
      .def_readwrite("y", &Dataset::y)
      .def_readwrite("X", &Dataset::X)
      .def_readwrite("ar_lag", &Dataset::ar_lag)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("p", &Dataset::p)
      .def_property_readonly("n_eff", &Dataset::n_eff)
      .def("candidate_names", &Dataset::candidate_names);

  py::class_<PriorConfig>(m, "PriorConfig")
      .def(py::init<>())
      .def_readwrite("kind", &PriorConfig::kind)
      .def_readwrite("expected_changepoints", &PriorConfig::expected_changepoints)
      .def_readwrite("changepoint_prob", &PriorConfig::changepoint_prob)
      .def_readwrite("inclusion_prob", &PriorConfig::inclusion_prob)
      .def_readwrite("alpha1", &PriorConfig::alpha1)
      .def_readwrite("tau2", &PriorConfig::tau2)
      .def_readwrite("V", &PriorConfig::mean_var)
      .def_readwrite("sigma2", &PriorConfig::sigma2)
      .def_readwrite("sample_tau2", &PriorConfig::sample_tau2)
      .def_readwrite("max_covariates", &PriorConfig::max_covariates);

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &SamplerConfig::iterations)
      .def_readwrite("burn_in", &SamplerConfig::burn_in)
      .def_readwrite("thin", &SamplerConfig::thin)
      .def_readwrite("seed", &SamplerConfig::seed)
      .def_readwrite("chains", &SamplerConfig::chains)
      .def_readwrite("threads", &SamplerConfig::threads);

  m.def(
      "simulate",
      [](int example, std::uint64_t seed) {
        Simulation sim = gen_example(example, seed);
        const Json truth = to_json(sim.truth, sim.data.n(), sim.data.p());
        return py::make_tuple(sim.data, to_python(truth));
      },
      py::arg("example"), py::arg("seed"), "Generate one of the simulation studies; returns (Dataset, truth dict).");

  m.def(
      "log_marginal",
      [](const Dataset& data, const std::vector<Index>& changepoints, const std::vector<Index>& included,
         const PriorConfig& prior) { return log_marginal(data, make_model(data, changepoints, included), prior); },
      py::arg("data"), py::arg("changepoints"), py::arg("included") = std::vector<Index>{}, py::arg("prior") = PriorConfig{},
      "Collapsed log marginal likelihood. Changepoints are 0-based block starts over the modelled rows.");

  m.def(
      "log_bayes_factor",
      [](const Dataset& data, const std::vector<Index>& cps_a, const std::vector<Index>& inc_a,
         const std::vector<Index>& cps_b, const std::vector<Index>& inc_b, const PriorConfig& prior) {
        return log_bayes_factor(data, make_model(data, cps_a, inc_a), make_model(data, cps_b, inc_b), prior);
      },
      py::arg("data"), py::arg("changepoints_a"), py::arg("included_a"), py::arg("changepoints_b"),
      py::arg("included_b"), py::arg("prior") = PriorConfig{});

  m.def(
      "run_chain",
      [](const Dataset& data, const PriorConfig& prior, const SamplerConfig& config) {
        PosteriorSummary s;
        {
          py::gil_scoped_release release;
          s = run_chain(data, prior, config);
        }
        return to_python(to_json(s));
      },
      py::arg("data"), py::arg("prior"), py::arg("config"), "Run the Gibbs sampler; returns the posterior summary dict.");

  m.def(
      "enumerate_exact",
      [](const Dataset& data, const PriorConfig& prior) {
        return to_python(to_json(enumerate_exact(data, prior).marginals));
      },
      py::arg("data"), py::arg("prior"), "Exact posterior marginals by enumeration (n <= 12, p <= 3).");

  m.def(
      "pelt_detect",
      [](const std::vector<double>& y, std::optional<double> penalty, Index min_seg) {
        const auto v = mad_variance(y);
        const double pen = penalty ? *penalty : default_penalty(y.size(), v.value);
        PeltResult r = pelt_detect(y, pen, min_seg, v.value);
        r.variance_fallback = v.fallback;
        return to_python(to_json(r));
      },
      py::arg("y"), py::arg("penalty") = std::nullopt, py::arg("min_seg") = 1,
      "PELT mean-change segmentation; changepoints are 1-based in the result.");

  m.def(
      "bench_consistency",
      [](const std::string& scenario, const std::vector<Index>& n_grid, Index replicates, std::uint64_t seed) {
        const BenchResult r = bench_consistency(parse_scenario(scenario), n_grid, replicates, seed);
        py::list means;
        for (const auto& s : r.summary) means.append(py::make_tuple(s.n, s.mean_log_bf));
        return means;
      },
      py::arg("scenario"), py::arg("n_grid"), py::arg("replicates"), py::arg("seed"),
      "Mean log Bayes factor (alternative vs truth) per n.");
}
