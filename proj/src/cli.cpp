#include "lpca/cli.hpp"

#include "lpca/experiments.hpp"
#include "lpca/io.hpp"
#include "lpca/selection.hpp"
#include "lpca/simulator.hpp"
#include "lpca/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>

namespace lpca::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Everything a re-run needs; `argv` is replayed verbatim from `cwd`.
struct Manifest {
  std::string subcommand;
  std::vector<std::string> argv;
  json config = json::object();
  json seeds = json::object();
  json inputs = json::object();
  json outputs = json::object();

  void write(const fs::path& path, double seconds) const {
    json doc;
    doc["command"] = subcommand;
    doc["argv"] = argv;
    doc["cwd"] = fs::current_path().string();
    doc["config"] = config;
    doc["seeds"] = seeds;
    doc["inputs"] = inputs;
    doc["outputs"] = outputs;
    doc["version"] = LPCA_VERSION;
    doc["started_utc"] = utc_timestamp();
    doc["wall_clock_seconds"] = seconds;
    io::write_json(path, doc);
  }
};

fs::path file_manifest_path(const fs::path& out) {
  return fs::path(out.string() + ".manifest.json");
}

std::string csv_field(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

Link link_option(const std::string& name) {
  try {
    return parse_link(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--link: ") + e.what());
  }
}

PenaltyFamily family_option(const std::string& name) {
  try {
    return parse_penalty_family(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--penalty: ") + e.what());
  }
}

json penalty_json(const PenaltySpec& p) {
  return json{{"family", to_string(p.family)}, {"lambda", p.lambda}, {"gamma", p.gamma},
              {"a", p.a},                      {"q", p.q},           {"rank", p.rank}};
}

// Shared penalty flags.
struct PenaltyArgs {
  std::string penalty = "gdp";
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double gamma = 1.0;
  double a = 3.7;
  double q = 0.5;
  int rank = -1;

  void add(CLI::App* app, bool with_lambda, bool with_rank) {
    app->add_option("--penalty", penalty, "gdp, nuclear, scad, lq or exact")->capture_default_str();
    if (with_lambda) app->add_option("--lambda", lambda, "Penalty strength");
    app->add_option("--gamma", gamma, "GDP scale")->capture_default_str();
    app->add_option("--a", a, "SCAD shape parameter")->capture_default_str();
    app->add_option("--q", q, "Lq exponent in (0, 1)")->capture_default_str();
    if (with_rank) app->add_option("--rank", rank, "Target rank for --penalty exact");
  }

  PenaltySpec spec(bool need_lambda) const {
    PenaltySpec s;
    s.family = family_option(penalty);
    s.gamma = gamma;
    s.a = a;
    s.q = q;
    if (s.family == PenaltyFamily::ExactRank) {
      if (rank < 0) throw UsageError("--rank is required with --penalty exact");
      s.rank = rank;
    } else if (need_lambda) {
      if (std::isnan(lambda)) throw UsageError("--lambda is required with --penalty " + penalty);
      s.lambda = lambda;
    }
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return s;
  }
};

void write_path_csv(const fs::path& path, const SelectionPath& sel) {
  std::ofstream out = open_csv(path);
  out << "lambda,cv_error,rank,iterations,converged\n";
  for (const PathRecord& r : sel.records) {
    out << io::format_double(r.lambda) << ',' << io::format_double(r.cv_error) << ',' << r.rank << ','
        << r.iterations << ',' << (r.converged ? "true" : "false") << '\n';
  }
}

json selection_meta(const SelectionPath& sel, const SelectionOptions& opt) {
  const PathRecord& chosen = sel.records[sel.chosen_index];
  json refit = json::array();
  for (const LpcaModel& m : sel.refits) {
    refit.push_back({{"iterations", m.diagnostics.iterations},
                     {"converged", m.diagnostics.converged},
                     {"rank", m.rank()}});
  }
  json extended = json::array();
  for (std::size_t k = 0; k < sel.records.size(); ++k) {
    if (sel.records[k].extended) extended.push_back(k);
  }
  return json{{"chosen_lambda", sel.chosen_lambda},
              {"chosen_index", sel.chosen_index},
              {"chosen_cv_error", chosen.cv_error},
              {"chosen_rank", chosen.rank},
              {"penalty", penalty_json(sel.spec)},
              {"gamma", sel.spec.gamma},
              {"seed", opt.seed},
              {"fraction", opt.fraction},
              {"n_lambda", opt.n_lambda},
              {"range", {{"lambda_max", sel.range.lambda_max}, {"lambda_min", sel.range.lambda_min}}},
              {"path_start", to_string(sel.path_start)},
              {"lambda_doublings", sel.lambda_doublings},
              {"extended_records", extended},
              {"train_fit", {{"iterations", sel.train_model.diagnostics.iterations},
                             {"converged", sel.train_model.diagnostics.converged}}},
              {"refit", refit}};
}

// Subcommand handlers fill the manifest and return the path it goes to.
using Handler = std::function<fs::path(Manifest&, std::ostream&)>;

struct Command {
  CLI::App* app = nullptr;
  Handler run;
};

Command add_simulate(CLI::App& root) {
  struct Args {
    Index rows = 160, cols = 410, rank = 5;
    double snr = 1.0;
    std::string offset = "balanced";
    std::string marginals;
    double p_lo = 0.01, p_hi = 0.15;
    std::optional<std::uint64_t> offset_seed;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  CLI::App* app = root.add_subcommand("simulate", "Simulate a binary matrix with low-rank logit structure");
  app->add_option("--rows", a->rows, "Number of rows I")->capture_default_str();
  app->add_option("--cols", a->cols, "Number of columns J")->capture_default_str();
  app->add_option("--rank", a->rank, "Rank R of Z")->capture_default_str();
  app->add_option("--snr", a->snr, "Target ||Z||^2 / ||E||^2")->capture_default_str();
  app->add_option("--offset", a->offset, "balanced, sampled or marginal")
      ->check(CLI::IsMember({"balanced", "sampled", "marginal"}))
      ->capture_default_str();
  app->add_option("--marginals", a->marginals, "CSV of column probabilities for --offset marginal");
  app->add_option("--p-lo", a->p_lo, "Lower bound of sampled marginals")->capture_default_str();
  app->add_option("--p-hi", a->p_hi, "Upper bound of sampled marginals")->capture_default_str();
  app->add_option("--offset-seed", a->offset_seed, "Seed for sampled marginals (default: --seed)");
  app->add_option("--seed", a->seed, "Random seed")->capture_default_str();
  app->add_option("--out", a->out, "Output directory")->required();

  auto run = [a](Manifest& m, std::ostream& out) {
    SimulationConfig cfg;
    cfg.rows = a->rows;
    cfg.cols = a->cols;
    cfg.rank = a->rank;
    cfg.snr = a->snr;
    cfg.seed = a->seed;
    const std::uint64_t offset_seed = a->offset_seed.value_or(a->seed);
    json offset{{"kind", a->offset}};
    if (a->offset == "sampled") {
      cfg.offset = SampledOffset{a->p_lo, a->p_hi, offset_seed};
      offset["p_lo"] = a->p_lo;
      offset["p_hi"] = a->p_hi;
      offset["seed"] = offset_seed;
    } else if (a->offset == "marginal") {
      if (a->marginals.empty()) throw UsageError("--marginals is required with --offset marginal");
      const Eigen::VectorXd p = io::read_vector_csv(a->marginals);
      cfg.offset = MarginalOffset{p};
      offset["marginals"] = a->marginals;
      m.inputs["marginals"] = a->marginals;
    } else if (!a->marginals.empty()) {
      throw UsageError("--marginals requires --offset marginal");
    }
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    json config{{"rows", cfg.rows}, {"cols", cfg.cols}, {"rank", cfg.rank},
                {"snr", cfg.snr},   {"seed", cfg.seed}, {"offset", offset}};
    const SimulatedDataset ds = simulate(cfg);
    io::write_dataset_dir(a->out, ds, config);
    m.config = config;
    m.seeds = {{"seed", cfg.seed}, {"offset_seed", offset_seed}};
    m.outputs["dir"] = a->out;
    out << "simulated " << cfg.rows << "x" << cfg.cols << " rank " << cfg.rank
        << " realized snr " << io::format_double(ds.realized_snr) << " -> " << a->out << '\n';
    return fs::path(a->out) / "manifest.json";
  };
  return {app, run};
}

Command add_fit(CLI::App& root) {
  struct Args {
    std::string data;
    PenaltyArgs pen;
    std::string link = "logit";
    double eps = 1e-6;
    int max_iter = 500;
    std::uint64_t seed = 0;
    std::string init = "random";
    std::string warm_start;
    std::string out;
    std::string factors_dir;
  };
  auto a = std::make_shared<Args>();
  CLI::App* app = root.add_subcommand("fit", "Fit a penalized logistic PCA model at a fixed lambda");
  app->add_option("--data", a->data, "Binary CSV (0, 1, NA or empty)")->required();
  a->pen.add(app, true, true);
  app->add_option("--link", a->link, "logit or probit")->capture_default_str();
  app->add_option("--eps", a->eps, "Relative objective change for convergence")->capture_default_str();
  app->add_option("--max-iter", a->max_iter, "Iteration cap")->capture_default_str();
  app->add_option("--seed", a->seed, "Seed of the random initialization")->capture_default_str();
  app->add_option("--init", a->init, "random or zero")
      ->check(CLI::IsMember({"random", "zero"}))
      ->capture_default_str();
  app->add_option("--warm-start", a->warm_start, "Initialize from a saved model JSON");
  app->add_option("--out", a->out, "Output model JSON")->required();
  app->add_option("--factors-dir", a->factors_dir, "Also write A.csv, B.csv and mu.csv here");

  auto run = [a](Manifest& m, std::ostream& out) {
    const PenaltySpec spec = a->pen.spec(true);
    FitConfig cfg;
    cfg.eps_f = a->eps;
    cfg.max_iter = a->max_iter;
    cfg.link = link_option(a->link);
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const BinaryMatrix X = io::read_binary_csv(a->data);
    json init{{"kind", a->init}};
    if (!a->warm_start.empty()) {
      cfg.init = WarmInit{std::make_shared<const LpcaModel>(io::load_model(a->warm_start))};
      init = {{"kind", "warm"}, {"model", a->warm_start}};
      m.inputs["warm_start"] = a->warm_start;
    } else if (a->init == "zero") {
      cfg.init = UserInit{Eigen::VectorXd::Zero(X.cols()), Eigen::MatrixXd::Zero(X.rows(), X.cols())};
    } else {
      cfg.init = RandomInit{a->seed};
    }
    const LpcaModel model = fit(X, spec, cfg);
    io::save_model(a->out, model);
    m.outputs["model"] = a->out;
    if (!a->factors_dir.empty()) {
      const Decomposition d = decompose(model);
      const fs::path dir(a->factors_dir);
      fs::create_directories(dir);
      io::write_matrix_csv(dir / "A.csv", d.scores);
      io::write_matrix_csv(dir / "B.csv", d.loadings);
      io::write_vector_csv(dir / "mu.csv", model.mu);
      io::write_json(dir / "manifest.json", json{{"command", "fit"}, {"model", a->out}});
      m.outputs["factors_dir"] = a->factors_dir;
    }
    m.config = {{"penalty", penalty_json(spec)}, {"link", to_string(cfg.link)},
                {"eps", cfg.eps_f},              {"max_iter", cfg.max_iter},
                {"init", init}};
    m.seeds = {{"seed", a->seed}};
    m.inputs["data"] = a->data;
    out << "fit " << to_string(spec.family) << " rank " << model.rank() << " iterations "
        << model.diagnostics.iterations << (model.diagnostics.converged ? " converged" : " not converged")
        << " objective " << io::format_double(model.diagnostics.final_objective) << '\n';
    return file_manifest_path(a->out);
  };
  return {app, run};
}

void add_path_options(CLI::App* app, std::string& path_start, int& extend_max_iter) {
  app->add_option("--path-start", path_start,
                  "Path initialization: auto, warm (descending warm starts) or random (seeded start per lambda)")
      ->check(CLI::IsMember({"auto", "warm", "random"}))
      ->capture_default_str();
  app->add_option("--extend-max-iter", extend_max_iter,
                  "Total extra iterations for capped random-start path fits, large lambda first (0: off)")
      ->capture_default_str();
}

PathStart path_start_option(const std::string& name) {
  try {
    return parse_path_start(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct SelectArgs {
  std::string link = "logit";
  int n_lambda = 30;
  double fraction = 0.1;
  std::uint64_t seed = 0;
  double eps = 1e-6;
  int max_iter = 500;
  int refit_max_iter = 500;
  int extend_max_iter = 10000;
  std::string path_start = "auto";
  std::optional<double> lambda_max, lambda_min;

  void add(CLI::App* app) {
    app->add_option("--link", link, "logit or probit")->capture_default_str();
    app->add_option("--n-lambda", n_lambda, "Number of lambda values")->capture_default_str();
    app->add_option("--fraction", fraction, "Held-out fraction of ones and of zeros")->capture_default_str();
    app->add_option("--seed", seed, "Seed of the held-out split")->capture_default_str();
    app->add_option("--eps", eps, "Convergence tolerance of path and refit fits")->capture_default_str();
    app->add_option("--max-iter", max_iter, "Iteration cap of path fits")->capture_default_str();
    app->add_option("--refit-max-iter", refit_max_iter, "Iteration cap of the full-data refit")
        ->capture_default_str();
    add_path_options(app, path_start, extend_max_iter);
    app->add_option("--lambda-max", lambda_max, "Largest lambda (default: automatic)");
    app->add_option("--lambda-min", lambda_min, "Smallest lambda (default: lambda-max / 500)");
  }

  SelectionOptions options() const {
    SelectionOptions o;
    o.n_lambda = n_lambda;
    o.fraction = fraction;
    o.seed = seed;
    o.path_eps = eps;
    o.path_max_iter = max_iter;
    o.refit_tolerances = {eps};
    o.refit_max_iter = refit_max_iter;
    o.extend_max_iter = extend_max_iter;
    o.path_start = path_start_option(path_start);
    o.link = link_option(link);
    if (n_lambda < 2) throw UsageError("--n-lambda must be at least 2");
    if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("--fraction must lie in (0, 1)");
    if (!(eps > 0.0)) throw UsageError("--eps must be positive");
    if (max_iter < 1 || refit_max_iter < 1) throw UsageError("iteration caps must be positive");
    if (extend_max_iter < 0) throw UsageError("--extend-max-iter must be non-negative");
    if (lambda_min && !lambda_max) throw UsageError("--lambda-min requires --lambda-max");
    if (lambda_max) {
      LambdaRange r;
      r.lambda_max = *lambda_max;
      r.lambda_min = lambda_min.value_or(*lambda_max / kLambdaRangeRatio);
      if (!(r.lambda_max > 0.0 && r.lambda_min > 0.0 && r.lambda_min <= r.lambda_max)) {
        throw UsageError("lambda range must satisfy 0 < lambda-min <= lambda-max");
      }
      o.range = r;
    }
    return o;
  }

  json config() const {
    json c{{"link", link},      {"n_lambda", n_lambda},   {"fraction", fraction},
           {"eps", eps},        {"max_iter", max_iter},   {"refit_max_iter", refit_max_iter},
           {"extend_max_iter", extend_max_iter}, {"path_start", path_start}};
    if (lambda_max) c["lambda_max"] = *lambda_max;
    if (lambda_min) c["lambda_min"] = *lambda_min;
    return c;
  }
};

Command add_select(CLI::App& root) {
  struct Args {
    std::string data;
    PenaltyArgs pen;
    SelectArgs sel;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  CLI::App* app = root.add_subcommand("select", "Choose lambda by held-out likelihood and refit on all data");
  app->add_option("--data", a->data, "Binary CSV (0, 1, NA or empty)")->required();
  a->pen.add(app, false, false);
  a->sel.add(app);
  app->add_option("--out", a->out, "Output directory")->required();

  auto run = [a](Manifest& m, std::ostream& out) {
    const PenaltySpec family = a->pen.spec(false);
    if (family.family == PenaltyFamily::ExactRank) throw UsageError("select does not support --penalty exact");
    const SelectionOptions opt = a->sel.options();
    const BinaryMatrix X = io::read_binary_csv(a->data);
    const SelectionPath sel = select_and_refit(X, family, opt);
    const fs::path dir(a->out);
    fs::create_directories(dir);
    write_path_csv(dir / "path.csv", sel);
    io::save_model(dir / "model.json", sel.model());
    io::write_json(dir / "selection-meta.json", selection_meta(sel, opt));
    m.config = a->sel.config();
    m.config["penalty"] = penalty_json(family);
    m.seeds = {{"seed", opt.seed}};
    m.inputs["data"] = a->data;
    m.outputs["dir"] = a->out;
    out << "selected lambda " << io::format_double(sel.chosen_lambda) << " rank " << sel.model().rank()
        << " -> " << a->out << '\n';
    return dir / "manifest.json";
  };
  return {app, run};
}

Command add_evaluate(CLI::App& root) {
  struct Args {
    std::string model;
    std::string truth_dir;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  CLI::App* app = root.add_subcommand("evaluate", "Score a fitted model against simulated ground truth");
  app->add_option("--model", a->model, "Model JSON")->required();
  app->add_option("--truth-dir", a->truth_dir, "Directory written by simulate")->required();
  app->add_option("--out", a->out, "Output directory for metrics.json")->required();

  auto run = [a](Manifest& m, std::ostream& out) {
    const LpcaModel model = io::load_model(a->model);
    const GroundTruth truth = io::load_truth_dir(a->truth_dir);
    const MetricsReport report = evaluate_model(truth, model);
    const fs::path dir(a->out);
    io::write_json(dir / "metrics.json", io::metrics_to_json(report));
    m.inputs = {{"model", a->model}, {"truth_dir", a->truth_dir}};
    m.outputs["dir"] = a->out;
    out << "rmse_theta " << io::format_double(report.rmse_theta) << " rmse_z "
        << io::format_double(report.rmse_z) << " mhd " << io::format_double(report.mhd_pi) << '\n';
    return dir / "manifest.json";
  };
  return {app, run};
}

Command add_threshold_curve(CLI::App& root) {
  struct Args {
    PenaltyArgs pen;
    double sigma_max = 10.0;
    int points = 201;
    double L = 1.0;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  CLI::App* app = root.add_subcommand("threshold-curve", "Scalar thresholding function eta(sigma) as CSV");
  a->pen.add(app, true, false);
  app->add_option("--sigma-max", a->sigma_max, "Largest sigma")->capture_default_str();
  app->add_option("--points", a->points, "Number of sigma values")->capture_default_str();
  app->add_option("--L", a->L, "Curvature of the quadratic term")->capture_default_str();
  app->add_option("--out", a->out, "Output CSV (default: stdout)");

  auto run = [a](Manifest& m, std::ostream& out) {
    const PenaltySpec spec = a->pen.spec(true);
    if (spec.family == PenaltyFamily::ExactRank) throw UsageError("threshold-curve does not support --penalty exact");
    if (!(a->sigma_max > 0.0)) throw UsageError("--sigma-max must be positive");
    if (a->points < 2) throw UsageError("--points must be at least 2");
    if (!(a->L > 0.0)) throw UsageError("--L must be positive");
    const auto curve = threshold_curve(spec, a->sigma_max, a->points, a->L);
    auto emit = [&](std::ostream& os) {
      os << "sigma,eta\n";
      for (const auto& [s, e] : curve) os << io::format_double(s) << ',' << io::format_double(e) << '\n';
    };
    if (a->out.empty()) {
      emit(out);
      return fs::path();
    }
    std::ofstream file = open_csv(a->out);
    emit(file);
    m.config = {{"penalty", penalty_json(spec)}, {"sigma_max", a->sigma_max}, {"points", a->points}, {"L", a->L}};
    m.outputs["csv"] = a->out;
    return file_manifest_path(a->out);
  };
  return {app, run};
}

Command add_compare(CLI::App& root) {
  struct Args {
    std::string dataset;
    std::string out;
    CompareConfig cfg;
    std::string link = "logit";
    std::string path_start = "auto";
  };
  auto a = std::make_shared<Args>();
  CLI::App* app = root.add_subcommand("compare", "Exact-rank, nuclear, GDP and full-information comparison");
  app->add_option("--dataset", a->dataset, "Directory written by simulate")->required();
  app->add_option("--out", a->out, "Output directory")->required();
  app->add_option("--seed", a->cfg.seed, "Seed of the split and the exact-rank initialization")
      ->capture_default_str();
  app->add_option("--rank", a->cfg.exact_rank, "Rank of the exact-rank and full-information fits")
      ->capture_default_str();
  app->add_option("--eps", a->cfg.tolerances, "Comma-separated convergence tolerances")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--max-iter", a->cfg.max_iter, "Iteration cap of the compared fits")->capture_default_str();
  app->add_option("--gamma", a->cfg.gamma, "GDP scale")->capture_default_str();
  app->add_option("--n-lambda", a->cfg.n_lambda, "Lambda values on each path")->capture_default_str();
  app->add_option("--fraction", a->cfg.fraction, "Held-out fraction")->capture_default_str();
  app->add_option("--path-max-iter", a->cfg.path_max_iter, "Iteration cap of path fits")->capture_default_str();
  add_path_options(app, a->path_start, a->cfg.extend_max_iter);
  app->add_option("--sigma-components", a->cfg.sigma_components, "Rows of the singular value table")
      ->capture_default_str();
  app->add_option("--link", a->link, "logit or probit")->capture_default_str();

  auto run = [a](Manifest& m, std::ostream& out) {
    CompareConfig cfg = a->cfg;
    cfg.link = link_option(a->link);
    cfg.path_start = path_start_option(a->path_start);
    if (cfg.extend_max_iter < 0) throw UsageError("--extend-max-iter must be non-negative");
    if (cfg.tolerances.empty()) throw UsageError("--eps needs at least one value");
    if (cfg.exact_rank < 1) throw UsageError("--rank must be positive");
    if (cfg.max_iter < 1 || cfg.path_max_iter < 1) throw UsageError("iteration caps must be positive");
    if (cfg.n_lambda < 2) throw UsageError("--n-lambda must be at least 2");
    if (!(cfg.fraction > 0.0 && cfg.fraction < 1.0)) throw UsageError("--fraction must lie in (0, 1)");
    if (cfg.sigma_components < 1) throw UsageError("--sigma-components must be positive");
    const io::LoadedDataset data = io::load_dataset_dir(a->dataset);
    const CompareResult res = run_compare(data, cfg);

    const fs::path dir(a->out);
    fs::create_directories(dir);
    {
      std::ofstream csv = open_csv(dir / "compare.csv");
      csv << "penalty,eps_f,rmse_theta,rmse_z,rmse_mu,mhd,rank,iterations,converged\n";
      for (const CompareRow& r : res.rows) {
        csv << r.penalty << ',' << io::format_double(r.eps_f) << ',' << io::format_double(r.metrics.rmse_theta)
            << ',' << io::format_double(r.metrics.rmse_z) << ',' << io::format_double(r.metrics.rmse_mu) << ','
            << io::format_double(r.metrics.mhd_pi) << ',' << r.metrics.estimated_rank << ',' << r.iterations
            << ',' << (r.converged ? "true" : "false") << '\n';
      }
    }
    {
      std::ofstream csv = open_csv(dir / "sigma.csv");
      csv << "component";
      for (const std::string& c : res.sigma_columns) csv << ',' << c;
      csv << '\n';
      for (Index i = 0; i < res.sigma_table.rows(); ++i) {
        csv << (i + 1);
        for (Index j = 0; j < res.sigma_table.cols(); ++j) csv << ',' << io::format_double(res.sigma_table(i, j));
        csv << '\n';
      }
    }
    SelectionOptions opt;
    opt.seed = cfg.seed;
    opt.fraction = cfg.fraction;
    opt.n_lambda = cfg.n_lambda;
    write_path_csv(dir / "gdp_path.csv", *res.gdp_path);
    write_path_csv(dir / "nuclear_path.csv", *res.nuclear_path);
    io::write_json(dir / "compare-meta.json",
                   json{{"gdp", selection_meta(*res.gdp_path, opt)},
                        {"nuclear", selection_meta(*res.nuclear_path, opt)}});

    m.config = {{"rank", cfg.exact_rank},       {"eps", cfg.tolerances},     {"max_iter", cfg.max_iter},
                {"gamma", cfg.gamma},           {"n_lambda", cfg.n_lambda},  {"fraction", cfg.fraction},
                {"path_max_iter", cfg.path_max_iter}, {"sigma_components", cfg.sigma_components},
                {"extend_max_iter", cfg.extend_max_iter}, {"path_start", a->path_start},
                {"link", to_string(cfg.link)}};
    m.seeds = {{"seed", cfg.seed}};
    m.inputs["dataset"] = a->dataset;
    m.outputs["dir"] = a->out;
    for (const CompareRow& r : res.rows) {
      out << r.penalty << " eps " << io::format_double(r.eps_f) << " rmse_theta "
          << io::format_double(r.metrics.rmse_theta) << " mhd " << io::format_double(r.metrics.mhd_pi) << " rank "
          << r.metrics.estimated_rank << '\n';
    }
    return dir / "manifest.json";
  };
  return {app, run};
}

Command add_snr_sweep(CLI::App& root) {
  struct Args {
    SweepConfig cfg;
    std::string offset = "balanced";
    std::string link = "logit";
    std::string path_start = "auto";
    std::string out;
  };
  auto a = std::make_shared<Args>();
  a->cfg.snrs = {0.01, 1.0, 1000.0};
  CLI::App* app = root.add_subcommand("snr-sweep", "Simulate and fit across signal-to-noise ratios");
  app->add_option("--snr", a->cfg.snrs, "Comma-separated SNR values")->delimiter(',')->capture_default_str();
  app->add_option("--repeats", a->cfg.repeats, "Datasets per SNR")->capture_default_str();
  app->add_option("--offset", a->offset, "balanced or sampled")
      ->check(CLI::IsMember({"balanced", "sampled"}))
      ->capture_default_str();
  app->add_option("--rows", a->cfg.rows, "Rows per dataset")->capture_default_str();
  app->add_option("--cols", a->cfg.cols, "Columns per dataset")->capture_default_str();
  app->add_option("--rank", a->cfg.rank, "Simulated rank")->capture_default_str();
  app->add_option("--seed", a->cfg.seed, "Base seed; repeat r uses seed + r")->capture_default_str();
  app->add_option("--gamma", a->cfg.gamma, "GDP scale")->capture_default_str();
  app->add_option("--n-lambda", a->cfg.n_lambda, "Lambda values on each path")->capture_default_str();
  app->add_option("--fraction", a->cfg.fraction, "Held-out fraction")->capture_default_str();
  app->add_option("--eps", a->cfg.eps_f, "Convergence tolerance")->capture_default_str();
  app->add_option("--max-iter", a->cfg.max_iter, "Iteration cap")->capture_default_str();
  add_path_options(app, a->path_start, a->cfg.extend_max_iter);
  app->add_option("--max-full-rank", a->cfg.max_full_rank, "Largest rank tried for the full-information fit")
      ->capture_default_str();
  app->add_option("--threads", a->cfg.threads, "Worker threads (default: LPCA_THREADS or all cores)");
  app->add_option("--link", a->link, "logit or probit")->capture_default_str();
  app->add_option("--out", a->out, "Output directory")->required();

  auto run = [a](Manifest& m, std::ostream& out) {
    SweepConfig cfg = a->cfg;
    cfg.balanced = a->offset == "balanced";
    cfg.link = link_option(a->link);
    cfg.path_start = path_start_option(a->path_start);
    if (cfg.extend_max_iter < 0) throw UsageError("--extend-max-iter must be non-negative");
    if (cfg.snrs.empty()) throw UsageError("--snr needs at least one value");
    for (double s : cfg.snrs) {
      if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("--snr values must be positive");
    }
    if (cfg.repeats < 1) throw UsageError("--repeats must be at least 1");
    if (cfg.rank < 1 || cfg.rows < 2 || cfg.cols < 1) throw UsageError("invalid dataset shape");
    if (cfg.n_lambda < 2) throw UsageError("--n-lambda must be at least 2");
    if (cfg.max_full_rank < 1) throw UsageError("--max-full-rank must be positive");
    const std::vector<SweepRow> rows = run_snr_sweep(cfg);

    const fs::path dir(a->out);
    std::ofstream csv = open_csv(dir / "sweep.csv");
    csv << "snr,repeat,model,rmse_z,rmse_theta,mhd_pi,rank,status\n";
    int failures = 0;
    for (const SweepRow& r : rows) {
      csv << io::format_double(r.snr) << ',' << r.repeat << ',' << r.model << ',' << io::format_double(r.rmse_z)
          << ',' << io::format_double(r.rmse_theta) << ',' << io::format_double(r.mhd_pi) << ',' << r.rank << ','
          << (r.error.empty() ? std::string("ok") : "error: " + csv_field(r.error)) << '\n';
      failures += r.error.empty() ? 0 : 1;
    }
    m.config = {{"snr", cfg.snrs},           {"repeats", cfg.repeats},     {"offset", a->offset},
                {"rows", cfg.rows},          {"cols", cfg.cols},           {"rank", cfg.rank},
                {"gamma", cfg.gamma},        {"n_lambda", cfg.n_lambda},   {"fraction", cfg.fraction},
                {"eps", cfg.eps_f},          {"max_iter", cfg.max_iter},   {"max_full_rank", cfg.max_full_rank},
                {"extend_max_iter", cfg.extend_max_iter}, {"path_start", a->path_start},
                {"link", to_string(cfg.link)}};
    m.seeds = {{"seed", cfg.seed}};
    m.outputs["dir"] = a->out;
    out << rows.size() << " rows, " << failures << " failed -> " << (dir / "sweep.csv").string() << '\n';
    return dir / "manifest.json";
  };
  return {app, run};
}

Command add_gamma_study(CLI::App& root) {
  struct Args {
    std::string data;
    std::string truth_dir;
    std::vector<double> gammas{0.1, 1.0, 10.0, 100.0};
    SelectArgs sel;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  CLI::App* app = root.add_subcommand("gamma-study", "GDP selection for several gamma values on one split");
  app->add_option("--data", a->data, "Binary CSV")->required();
  app->add_option("--truth-dir", a->truth_dir, "Simulated ground truth for RMSE columns");
  app->add_option("--gammas", a->gammas, "Comma-separated gamma values")->delimiter(',')->capture_default_str();
  a->sel.add(app);
  app->add_option("--out", a->out, "Output directory")->required();

  auto run = [a](Manifest& m, std::ostream& out) {
    if (a->gammas.empty()) throw UsageError("--gammas needs at least one value");
    for (double g : a->gammas) {
      if (!(g > 0.0)) throw UsageError("--gammas values must be positive");
    }
    const SelectionOptions opt = a->sel.options();
    const BinaryMatrix X = io::read_binary_csv(a->data);
    std::optional<GroundTruth> truth;
    if (!a->truth_dir.empty()) {
      truth = io::load_truth_dir(a->truth_dir);
      m.inputs["truth_dir"] = a->truth_dir;
    }
    const auto rows = gamma_study(X, a->gammas, opt, truth);
    const fs::path dir(a->out);
    std::ofstream csv = open_csv(dir / "gamma.csv");
    csv << "gamma,lambda,rank,cv_error,rmse_theta,rmse_z,mhd_pi,status\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const GammaStudyRow& r : rows) {
      csv << io::format_double(r.gamma) << ',' << io::format_double(r.chosen_lambda) << ',' << r.rank << ','
          << io::format_double(r.cv_error) << ',' << io::format_double(r.metrics ? r.metrics->rmse_theta : nan)
          << ',' << io::format_double(r.metrics ? r.metrics->rmse_z : nan) << ','
          << io::format_double(r.metrics ? r.metrics->mhd_pi : nan) << ','
          << (r.error.empty() ? std::string("ok") : "error: " + csv_field(r.error)) << '\n';
    }
    m.config = a->sel.config();
    m.config["gammas"] = a->gammas;
    m.seeds = {{"seed", opt.seed}};
    m.inputs["data"] = a->data;
    m.outputs["dir"] = a->out;
    out << rows.size() << " gamma values -> " << (dir / "gamma.csv").string() << '\n';
    return dir / "manifest.json";
  };
  return {app, run};
}

int run_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err);

// CLI11 reports missing required options before unexpected ones; scan first so
// the offending token is always the one named.
std::optional<std::string> unknown_flag(CLI::App& app, const std::vector<std::string>& args) {
  CLI::App* sub = nullptr;
  for (const std::string& tok : args) {
    if (tok == "--") break;
    if (!tok.empty() && tok[0] == '-') {
      if (tok.size() > 1 && (std::isdigit(static_cast<unsigned char>(tok[1])) || tok[1] == '.')) continue;
      const std::string name = tok.substr(0, tok.find('='));
      CLI::App* scope = sub ? sub : &app;
      if (scope->get_option_no_throw(name) == nullptr &&
          (sub == nullptr || app.get_option_no_throw(name) == nullptr)) {
        return tok;
      }
    } else if (sub == nullptr) {
      sub = app.get_subcommand_no_throw(tok);
      if (sub == nullptr) return tok;
    }
  }
  return std::nullopt;
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized logistic PCA for binary data", "lpca"};
  app.set_version_flag("--version", LPCA_VERSION);
  app.require_subcommand(1);

  std::vector<Command> commands{add_simulate(app),        add_fit(app),       add_select(app),
                                add_evaluate(app),        add_threshold_curve(app), add_compare(app),
                                add_snr_sweep(app),       add_gamma_study(app)};
  std::string replay_manifest;
  CLI::App* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_manifest, "Manifest JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (CLI::App* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << LPCA_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (const auto tok = unknown_flag(app, args)) {
      err << "error: unexpected argument '" << *tok << "'\n";
    } else {
      err << "error: " << e.what() << '\n';
    }
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  if (replay->parsed()) return run_replay(replay_manifest, out, err);

  for (Command& c : commands) {
    if (!c.app->parsed()) continue;
    Manifest manifest;
    manifest.subcommand = c.app->get_name();
    manifest.argv = args;
    const auto start = std::chrono::steady_clock::now();
    try {
      const fs::path where = c.run(manifest, out);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!where.empty()) manifest.write(where, seconds);
      return kExitOk;
    } catch (const UsageError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitRuntime;
    }
  }
  err << "error: no subcommand given\n";
  return kExitUsage;
}

namespace {

int run_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  std::vector<std::string> argv;
  try {
    const json doc = io::read_json(manifest_path);
    argv = doc.at("argv").get<std::vector<std::string>>();
    if (!argv.empty() && argv.front() == "replay") throw std::runtime_error("manifest records a replay");
    fs::current_path(doc.at("cwd").get<std::string>());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return parse_and_dispatch(argv, out, err);
}

}  // namespace

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return parse_and_dispatch(args, std::cout, std::cerr);
}

}  // namespace lpca::cli
