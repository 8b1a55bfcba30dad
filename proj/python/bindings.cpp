#include "lpca/evaluate.hpp"
#include "lpca/io.hpp"
#include "lpca/selection.hpp"
#include "lpca/simulator.hpp"
#include "lpca/solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>

namespace py = pybind11;
using namespace lpca;

namespace {

PenaltySpec make_spec(const std::string& penalty, double lam, double gamma, double a, double q, int rank) {
  PenaltySpec s;
  s.family = parse_penalty_family(penalty);
  s.lambda = lam;
  s.gamma = gamma;
  s.a = a;
  s.q = q;
  s.rank = rank;
  s.validate();
  return s;
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict d;
  d["rmse_theta"] = m.rmse_theta;
  d["rmse_z"] = m.rmse_z;
  d["rmse_mu"] = m.rmse_mu;
  d["mhd_pi"] = m.mhd_pi;
  d["estimated_rank"] = m.estimated_rank;
  d["variation_explained"] = m.variation_explained;
  return d;
}

py::dict simulate_py(Index rows, Index cols, Index rank, double snr, const std::string& offset,
                     std::uint64_t seed, double p_lo, double p_hi, std::optional<std::uint64_t> offset_seed,
                     std::optional<Eigen::VectorXd> marginals) {
  SimulationConfig cfg;
  cfg.rows = rows;
  cfg.cols = cols;
  cfg.rank = rank;
  cfg.snr = snr;
  cfg.seed = seed;
  if (offset == "sampled") {
    cfg.offset = SampledOffset{p_lo, p_hi, offset_seed.value_or(seed)};
  } else if (offset == "marginal") {
    if (!marginals) throw std::invalid_argument("offset='marginal' needs marginals");
    cfg.offset = MarginalOffset{*marginals};
  } else if (offset != "balanced") {
    throw std::invalid_argument("offset must be 'balanced', 'sampled' or 'marginal'");
  }
  SimulatedDataset ds;
  {
    py::gil_scoped_release release;
    ds = simulate(cfg);
  }
  py::dict d;
  d["X"] = ds.X.to_dense();
  d["theta"] = ds.theta;
  d["Z"] = ds.Z;
  d["mu"] = ds.mu;
  d["Pi"] = ds.Pi;
  d["Xstar"] = ds.Xstar;
  d["D"] = ds.D;
  d["realized_snr"] = ds.realized_snr;
  return d;
}

LpcaModel fit_py(const Eigen::MatrixXd& X, const std::string& penalty, double lam, double gamma, double a,
                 double q, int rank, const std::string& link, double eps, int max_iter, std::uint64_t seed,
                 const std::string& init, std::optional<LpcaModel> warm_start) {
  const BinaryMatrix data = BinaryMatrix::from_dense(X);
  const PenaltySpec spec = make_spec(penalty, lam, gamma, a, q, rank);
  FitConfig cfg;
  cfg.eps_f = eps;
  cfg.max_iter = max_iter;
  cfg.link = parse_link(link);
  if (warm_start) {
    cfg.init = WarmInit{std::make_shared<const LpcaModel>(std::move(*warm_start))};
  } else if (init == "zero") {
    cfg.init = UserInit{Eigen::VectorXd::Zero(data.cols()), Eigen::MatrixXd::Zero(data.rows(), data.cols())};
  } else if (init == "random") {
    cfg.init = RandomInit{seed};
  } else {
    throw std::invalid_argument("init must be 'random' or 'zero'");
  }
  py::gil_scoped_release release;
  return fit(data, spec, cfg);
}

py::dict select_py(const Eigen::MatrixXd& X, const std::string& penalty, double gamma, double a, double q,
                   const std::string& link, int n_lambda, double fraction, std::uint64_t seed, double eps,
                   int max_iter, int refit_max_iter, int extend_max_iter, const std::string& path_start) {
  const BinaryMatrix data = BinaryMatrix::from_dense(X);
  const PenaltySpec family = make_spec(penalty, 0.0, gamma, a, q, 0);
  SelectionOptions opt;
  opt.n_lambda = n_lambda;
  opt.fraction = fraction;
  opt.seed = seed;
  opt.path_eps = eps;
  opt.path_max_iter = max_iter;
  opt.refit_tolerances = {eps};
  opt.refit_max_iter = refit_max_iter;
  opt.extend_max_iter = extend_max_iter;
  opt.path_start = parse_path_start(path_start);
  opt.link = parse_link(link);
  SelectionPath path;
  {
    py::gil_scoped_release release;
    path = select_and_refit(data, family, opt);
  }
  py::list records;
  for (const PathRecord& r : path.records) {
    py::dict rec;
    rec["lambda"] = r.lambda;
    rec["cv_error"] = r.cv_error;
    rec["rank"] = r.rank;
    rec["iterations"] = r.iterations;
    rec["converged"] = r.converged;
    rec["extended"] = r.extended;
    records.append(rec);
  }
  py::dict d;
  d["model"] = path.model();
  d["path"] = records;
  d["chosen_index"] = path.chosen_index;
  d["chosen_lambda"] = path.chosen_lambda;
  d["lambda_max"] = path.range.lambda_max;
  d["lambda_min"] = path.range.lambda_min;
  d["path_start"] = to_string(path.path_start);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Penalized logistic PCA for binary data";
  m.attr("__version__") = LPCA_VERSION;

  py::class_<LpcaModel>(m, "Model")
      .def_readonly("mu", &LpcaModel::mu)
      .def_readonly("U", &LpcaModel::U)
      .def_readonly("S", &LpcaModel::S)
      .def_readonly("V", &LpcaModel::V)
      .def_property_readonly("rank", &LpcaModel::rank)
      .def_property_readonly("link", [](const LpcaModel& self) { return to_string(self.link); })
      .def_property_readonly("penalty", [](const LpcaModel& self) { return to_string(self.penalty.family); })
      .def_property_readonly("lam", [](const LpcaModel& self) { return self.penalty.lambda; })
      .def_property_readonly("iterations", [](const LpcaModel& self) { return self.diagnostics.iterations; })
      .def_property_readonly("converged", [](const LpcaModel& self) { return self.diagnostics.converged; })
      .def_property_readonly("objective_trace",
                             [](const LpcaModel& self) { return self.diagnostics.objective_trace; })
      .def_property_readonly("final_objective",
                             [](const LpcaModel& self) { return self.diagnostics.final_objective; })
      .def("Z", &LpcaModel::Z)
      .def("theta", &LpcaModel::theta)
      .def("probabilities", [](const LpcaModel& self) { return inverse_link(self.theta(), self.link); })
      .def("save", [](const LpcaModel& self, const std::filesystem::path& p) { io::save_model(p, self); })
      .def_static("load", [](const std::filesystem::path& p) { return io::load_model(p); })
      .def("__repr__", [](const LpcaModel& self) {
        return "<lpca.Model " + to_string(self.penalty.family) + " rank=" + std::to_string(self.rank()) +
               " iterations=" + std::to_string(self.diagnostics.iterations) + ">";
      });

  m.def("simulate", &simulate_py, py::arg("rows") = 160, py::arg("cols") = 410, py::arg("rank") = 5,
        py::arg("snr") = 1.0, py::arg("offset") = "balanced", py::arg("seed") = 0, py::arg("p_lo") = 0.01,
        py::arg("p_hi") = 0.15, py::arg("offset_seed") = py::none(), py::arg("marginals") = py::none(),
        "Simulate a binary matrix; X uses NaN for missing entries.");

  m.def("fit", &fit_py, py::arg("X"), py::arg("penalty") = "gdp", py::arg("lam") = 0.0,
        py::arg("gamma") = 1.0, py::arg("a") = 3.7, py::arg("q") = 0.5, py::arg("rank") = 0,
        py::arg("link") = "logit", py::arg("eps") = 1e-6, py::arg("max_iter") = 500, py::arg("seed") = 0,
        py::arg("init") = "random", py::arg("warm_start") = py::none(),
        "MM fit at a fixed lambda. X holds 0, 1 or NaN.");

  m.def("select", &select_py, py::arg("X"), py::arg("penalty") = "gdp", py::arg("gamma") = 1.0,
        py::arg("a") = 3.7, py::arg("q") = 0.5, py::arg("link") = "logit", py::arg("n_lambda") = 30,
        py::arg("fraction") = 0.1, py::arg("seed") = 0, py::arg("eps") = 1e-6, py::arg("max_iter") = 500,
        py::arg("refit_max_iter") = 500, py::arg("extend_max_iter") = 10000, py::arg("path_start") = "auto",
        "Lambda path with held-out selection and a full-data refit.");

  m.def(
      "evaluate",
      [](const LpcaModel& model, const Eigen::MatrixXd& theta, const Eigen::MatrixXd& Z,
         const Eigen::VectorXd& mu, const Eigen::MatrixXd& Pi) {
        return metrics_dict(evaluate_model(GroundTruth{theta, Z, mu, Pi}, model));
      },
      py::arg("model"), py::arg("theta"), py::arg("Z"), py::arg("mu"), py::arg("Pi"));

  m.def(
      "threshold_curve",
      [](const std::string& penalty, double lam, double gamma, double a, double q, double sigma_max, int points,
         double L) {
        const auto curve = threshold_curve(make_spec(penalty, lam, gamma, a, q, 0), sigma_max, points, L);
        Eigen::VectorXd sigma(static_cast<Index>(curve.size())), eta(static_cast<Index>(curve.size()));
        for (std::size_t k = 0; k < curve.size(); ++k) {
          sigma(static_cast<Index>(k)) = curve[k].first;
          eta(static_cast<Index>(k)) = curve[k].second;
        }
        return py::make_tuple(sigma, eta);
      },
      py::arg("penalty"), py::arg("lam"), py::arg("gamma") = 1.0, py::arg("a") = 3.7, py::arg("q") = 0.5,
      py::arg("sigma_max") = 10.0, py::arg("points") = 201, py::arg("L") = 1.0);

  m.def("weighted_sv_threshold", &weighted_sv_threshold, py::arg("M"), py::arg("weights"), py::arg("lam"),
        py::arg("L") = 1.0);

  m.def(
      "neg_log_likelihood",
      [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& theta, const std::string& link) {
        return neg_log_likelihood(BinaryMatrix::from_dense(X), theta, parse_link(link));
      },
      py::arg("X"), py::arg("theta"), py::arg("link") = "logit");

  m.def("full_information_theta",
        [](const Eigen::MatrixXd& Xstar, Index rank) { return full_information_fit(Xstar, rank).theta(); },
        py::arg("Xstar"), py::arg("rank"));
}
