#include "lpca/experiments.hpp"

#include "lpca/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>

namespace lpca {

namespace {

std::string sigma_label(const std::string& name, double eps) {
  return name + "_eps" + io::format_double(eps);
}

SelectionOptions compare_selection(const CompareConfig& cfg) {
  SelectionOptions opt;
  opt.n_lambda = cfg.n_lambda;
  opt.fraction = cfg.fraction;
  opt.seed = cfg.seed;
  opt.path_eps = 1e-6;
  opt.path_max_iter = cfg.path_max_iter;
  opt.refit_tolerances = cfg.tolerances;
  opt.refit_max_iter = cfg.max_iter;
  opt.extend_max_iter = cfg.extend_max_iter;
  opt.path_start = cfg.path_start;
  opt.link = cfg.link;
  return opt;
}

void add_model_rows(CompareResult& out, std::vector<Eigen::VectorXd>& spectra,
                    const std::string& name, const std::vector<LpcaModel>& models,
                    const std::vector<double>& tolerances, const GroundTruth& truth) {
  for (std::size_t t = 0; t < models.size(); ++t) {
    CompareRow row;
    row.penalty = name;
    row.eps_f = tolerances[t];
    row.metrics = evaluate_model(truth, models[t]);
    row.iterations = models[t].diagnostics.iterations;
    row.converged = models[t].diagnostics.converged;
    out.rows.push_back(std::move(row));
    out.sigma_columns.push_back(sigma_label(name, tolerances[t]));
    spectra.push_back(models[t].S);
  }
}

}  // namespace

CompareResult run_compare(const io::LoadedDataset& data, const CompareConfig& cfg) {
  if (cfg.tolerances.empty()) throw std::invalid_argument("compare needs at least one tolerance");
  if (cfg.sigma_components < 1) throw std::invalid_argument("sigma table needs at least one row");
  const GroundTruth& truth = data.truth;
  CompareResult out;
  std::vector<Eigen::VectorXd> spectra;

  out.sigma_columns = {"true_z", "noise_e"};
  spectra.push_back(singular_values(truth.Z));
  spectra.push_back(singular_values(data.Xstar - truth.theta));

  FitConfig exact_cfg;
  exact_cfg.max_iter = cfg.max_iter;
  exact_cfg.link = cfg.link;
  exact_cfg.init = RandomInit{cfg.seed};
  const auto exact = fit_tolerance_ladder(data.X, PenaltySpec::exact_rank(static_cast<int>(cfg.exact_rank)),
                                          exact_cfg, cfg.tolerances);
  add_model_rows(out, spectra, "exact", exact, cfg.tolerances, truth);

  const SelectionOptions opt = compare_selection(cfg);
  const CvSplit split = make_cv_split(data.X, opt.fraction, opt.seed);
  out.nuclear_path = select_and_refit(data.X, split, PenaltySpec::nuclear(0.0), opt);
  add_model_rows(out, spectra, "nuclear", out.nuclear_path->refits, cfg.tolerances, truth);
  out.gdp_path = select_and_refit(data.X, split, PenaltySpec::gdp(0.0, cfg.gamma), opt);
  add_model_rows(out, spectra, "gdp", out.gdp_path->refits, cfg.tolerances, truth);

  const FullInformationModel full = full_information_fit(data.Xstar, cfg.exact_rank);
  CompareRow row;
  row.penalty = "full";
  row.eps_f = std::numeric_limits<double>::quiet_NaN();
  row.metrics = evaluate_full_information(truth, full);
  out.rows.push_back(std::move(row));
  out.sigma_columns.push_back("full");
  spectra.push_back(full.factors.s);

  out.sigma_table = Eigen::MatrixXd::Zero(cfg.sigma_components, static_cast<Index>(spectra.size()));
  for (std::size_t c = 0; c < spectra.size(); ++c) {
    const Index n = std::min<Index>(cfg.sigma_components, spectra[c].size());
    out.sigma_table.col(static_cast<Index>(c)).head(n) = spectra[c].head(n);
  }
  return out;
}

int sweep_threads(int requested, std::size_t work_items) {
  int n = requested;
  if (n <= 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LPCA_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v > 0) n = static_cast<int>(v);
    }
  }
  n = std::max(n, 1);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(work_items, 1)));
}

namespace {

SweepRow metrics_row(double snr, int repeat, const std::string& model, const MetricsReport& m) {
  SweepRow row;
  row.snr = snr;
  row.repeat = repeat;
  row.model = model;
  row.rmse_z = m.rmse_z;
  row.rmse_theta = m.rmse_theta;
  row.mhd_pi = m.mhd_pi;
  row.rank = m.estimated_rank;
  return row;
}

SweepRow failed_row(double snr, int repeat, const std::string& model, const std::string& what) {
  SweepRow row;
  row.snr = snr;
  row.repeat = repeat;
  row.model = model;
  row.rmse_z = row.rmse_theta = row.mhd_pi = std::numeric_limits<double>::quiet_NaN();
  row.error = what;
  return row;
}

template <class F>
void guarded(std::vector<SweepRow>& rows, double snr, int repeat, const std::string& model, F&& body) {
  try {
    rows.push_back(metrics_row(snr, repeat, model, body()));
  } catch (const std::exception& e) {
    rows.push_back(failed_row(snr, repeat, model, e.what()));
  }
}

std::vector<SweepRow> sweep_cell(const SweepConfig& cfg, double snr, int repeat) {
  std::vector<SweepRow> rows;
  SimulationConfig sim;
  sim.rows = cfg.rows;
  sim.cols = cfg.cols;
  sim.rank = cfg.rank;
  sim.snr = snr;
  sim.seed = cfg.seed + static_cast<std::uint64_t>(repeat);
  if (!cfg.balanced) sim.offset = SampledOffset{0.01, 0.15, cfg.seed};

  SimulatedDataset ds;
  try {
    ds = simulate(sim);
  } catch (const std::exception& e) {
    for (const char* m : {"gdp", "nuclear", "null", "full"}) rows.push_back(failed_row(snr, repeat, m, e.what()));
    return rows;
  }
  const GroundTruth truth{ds.theta, ds.Z, ds.mu, ds.Pi};

  SelectionOptions opt;
  opt.n_lambda = cfg.n_lambda;
  opt.fraction = cfg.fraction;
  opt.seed = sim.seed;
  opt.path_eps = cfg.eps_f;
  opt.path_max_iter = cfg.max_iter;
  opt.refit_tolerances = {cfg.eps_f};
  opt.refit_max_iter = cfg.max_iter;
  opt.extend_max_iter = cfg.extend_max_iter;
  opt.path_start = cfg.path_start;
  opt.link = cfg.link;

  std::optional<CvSplit> split;
  try {
    split = make_cv_split(ds.X, opt.fraction, opt.seed);
  } catch (const std::exception&) {
  }
  auto select = [&](const PenaltySpec& family) {
    if (!split) split = make_cv_split(ds.X, opt.fraction, opt.seed);
    return evaluate_model(truth, select_and_refit(ds.X, *split, family, opt).model());
  };
  guarded(rows, snr, repeat, "gdp", [&] { return select(PenaltySpec::gdp(0.0, cfg.gamma)); });
  guarded(rows, snr, repeat, "nuclear", [&] { return select(PenaltySpec::nuclear(0.0)); });
  guarded(rows, snr, repeat, "null", [&] {
    FitConfig fc;
    fc.eps_f = cfg.eps_f;
    fc.max_iter = cfg.max_iter;
    fc.link = cfg.link;
    fc.init = UserInit{Eigen::VectorXd::Zero(ds.X.cols()), Eigen::MatrixXd::Zero(ds.X.rows(), ds.X.cols())};
    return evaluate_model(truth, fit(ds.X, PenaltySpec::exact_rank(0), fc));
  });
  guarded(rows, snr, repeat, "full", [&] {
    std::optional<MetricsReport> best;
    const Index max_rank = std::min<Index>(cfg.max_full_rank, std::min(ds.X.rows() - 1, ds.X.cols()));
    for (Index r = 1; r <= max_rank; ++r) {
      const MetricsReport m = evaluate_full_information(truth, full_information_fit(ds.Xstar, r));
      if (!best || m.rmse_theta < best->rmse_theta) best = m;
    }
    if (!best) throw std::runtime_error("no admissible full-information rank");
    return *best;
  });
  return rows;
}

}  // namespace

std::vector<SweepRow> run_snr_sweep(const SweepConfig& cfg) {
  if (cfg.snrs.empty()) throw std::invalid_argument("snr list is empty");
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  for (double s : cfg.snrs) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("snr values must be positive");
  }

  const std::size_t cells = cfg.snrs.size() * static_cast<std::size_t>(cfg.repeats);
  std::vector<std::vector<SweepRow>> results(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      const double snr = cfg.snrs[c / static_cast<std::size_t>(cfg.repeats)];
      const int repeat = static_cast<int>(c % static_cast<std::size_t>(cfg.repeats));
      results[c] = sweep_cell(cfg, snr, repeat);
    }
  };
  const int n_threads = sweep_threads(cfg.threads, cells);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<SweepRow> rows;
  for (auto& cell : results) {
    for (SweepRow& r : cell) rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lpca
