#include "lpca/selection.hpp"

#include "lpca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lpca {

namespace {

bool columns_observed(const BinaryMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    if (m.mask().col(j).sum() == 0.0) return false;
  }
  return true;
}

FitConfig null_start(const BinaryMatrix& X, double eps, int max_iter, Link link) {
  FitConfig cfg;
  cfg.eps_f = eps;
  cfg.max_iter = max_iter;
  cfg.link = link;
  cfg.init = UserInit{Eigen::VectorXd::Zero(X.cols()), Eigen::MatrixXd::Zero(X.rows(), X.cols())};
  return cfg;
}

// s_1 of J·H where H = 1μᵀ − (1/L)·W⊙∇f(1μᵀ).
double leading_centered_working_value(const BinaryMatrix& X, const Eigen::VectorXd& mu,
                                      Link link) {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(X.rows(), X.cols());
  theta.rowwise() += mu.transpose();
  Eigen::MatrixXd grad;
  nll_and_masked_gradient(X, theta, link, grad);
  const Eigen::MatrixXd H = theta - grad / lipschitz_bound(link);
  const Eigen::VectorXd s = singular_values(column_centered(H));
  return s.size() > 0 ? s(0) : 0.0;
}

constexpr int kMaxLambdaDoublings = 60;

}  // namespace

std::string to_string(PathStart start) {
  switch (start) {
    case PathStart::Auto: return "auto";
    case PathStart::Warm: return "warm";
    case PathStart::Random: return "random";
  }
  return "auto";
}

PathStart parse_path_start(std::string_view name) {
  if (name == "auto") return PathStart::Auto;
  if (name == "warm") return PathStart::Warm;
  if (name == "random") return PathStart::Random;
  throw std::invalid_argument("unknown path start '" + std::string(name) + "' (auto, warm, random)");
}

PathStart resolve_path_start(PathStart start, PenaltyFamily family) {
  if (start != PathStart::Auto) return start;
  return family == PenaltyFamily::Nuclear ? PathStart::Warm : PathStart::Random;
}

CvSplit make_cv_split(const BinaryMatrix& X, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("holdout fraction must lie in (0, 1)");
  }
  std::vector<TestEntry> ones;
  std::vector<TestEntry> zeros;
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      if (!X.observed(i, j)) continue;
      (X.value(i, j) != 0.0 ? ones : zeros).push_back(TestEntry{i, j, X.value(i, j)});
    }
  }
  if (ones.empty() || zeros.empty()) {
    throw std::invalid_argument("cross-validation needs at least one observed 1 and one observed 0");
  }
  const auto n_ones = static_cast<std::size_t>(std::llround(fraction * ones.size()));
  const auto n_zeros = static_cast<std::size_t>(std::llround(fraction * zeros.size()));

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::shuffle(ones.begin(), ones.end(), rng);
    std::shuffle(zeros.begin(), zeros.end(), rng);
    CvSplit split{X, {}};
    split.test.reserve(n_ones + n_zeros);
    for (std::size_t k = 0; k < n_ones; ++k) split.test.push_back(ones[k]);
    for (std::size_t k = 0; k < n_zeros; ++k) split.test.push_back(zeros[k]);
    for (const TestEntry& e : split.test) split.train.set_missing(e.row, e.col);
    if (columns_observed(split.train)) return split;
  }
  throw std::runtime_error("could not draw a holdout set that leaves every column observed");
}

double cv_error(const LpcaModel& model, const std::vector<TestEntry>& test, Link link) {
  if (test.empty()) throw std::invalid_argument("cv_error: empty test set");
  double total = 0.0;
  for (const TestEntry& e : test) total += entry_nll(e.value, model.theta_at(e.row, e.col), link);
  return total;
}

double cv_error(const LpcaModel& model, const CvSplit& split, Link link) {
  return cv_error(model, split.test, link);
}

LambdaRange auto_lambda_range(const BinaryMatrix& X, const PenaltySpec& spec, Link link) {
  if (spec.family == PenaltyFamily::ExactRank) {
    throw std::invalid_argument("no lambda range for the hard rank constraint");
  }
  PenaltySpec probe = spec;
  probe.validate();
  const double w0 = supergradient_weights(probe, SingularSpectrum(Eigen::VectorXd::Zero(1)))(0);

  double s1 = leading_centered_working_value(X, Eigen::VectorXd::Zero(X.cols()), link);
  const LpcaModel null_model = fit(X, PenaltySpec::exact_rank(0), null_start(X, 1e-10, 2000, link));
  s1 = std::max(s1, leading_centered_working_value(X, null_model.mu, link));

  LambdaRange range;
  range.lambda_max = lipschitz_bound(link) * s1 / w0;
  range.lambda_min = range.lambda_max / kLambdaRangeRatio;
  return range;
}

std::vector<double> lambda_grid(const LambdaRange& range, int count) {
  if (count < 2) throw std::invalid_argument("lambda grid needs at least 2 values");
  if (!(range.lambda_max > 0.0 && range.lambda_min > 0.0 && range.lambda_min <= range.lambda_max)) {
    throw std::invalid_argument("lambda range must satisfy 0 < lambda_min <= lambda_max");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double hi = std::log(range.lambda_max);
  const double lo = std::log(range.lambda_min);
  for (int k = 0; k < count; ++k) {
    grid[static_cast<std::size_t>(k)] = std::exp(hi + (lo - hi) * k / (count - 1));
  }
  grid.front() = range.lambda_max;
  grid.back() = range.lambda_min;
  return grid;
}

SelectionPath select_and_refit(const BinaryMatrix& X, const PenaltySpec& family_template,
                               const SelectionOptions& options) {
  return select_and_refit(X, make_cv_split(X, options.fraction, options.seed), family_template,
                          options);
}

SelectionPath select_and_refit(const BinaryMatrix& X, const CvSplit& split,
                               const PenaltySpec& family_template,
                               const SelectionOptions& options) {
  if (family_template.family == PenaltyFamily::ExactRank) {
    throw std::invalid_argument("lambda selection is not defined for the exact-rank model");
  }
  if (options.refit_tolerances.empty()) throw std::invalid_argument("no refit tolerance given");
  if (options.extend_max_iter < 0) throw std::invalid_argument("extend_max_iter must be non-negative");
  SelectionPath path;
  path.path_start = resolve_path_start(options.path_start, family_template.family);
  const bool random_start = path.path_start == PathStart::Random;
  path.range = options.range ? *options.range
                             : auto_lambda_range(split.train, family_template, options.link);

  FitConfig cfg = null_start(split.train, options.path_eps, options.path_max_iter, options.link);
  if (random_start) cfg.init = RandomInit{options.seed};
  auto fit_at = [&](double lambda) {
    return std::make_shared<const LpcaModel>(fit(split.train, family_template.with_lambda(lambda), cfg));
  };

  if (random_start && !options.range) {
    while (fit_at(path.range.lambda_max)->rank() > 0) {
      if (++path.lambda_doublings > kMaxLambdaDoublings) {
        throw std::runtime_error("no lambda removes every component from the random start");
      }
      path.range.lambda_max *= 2.0;
    }
    path.range.lambda_min = path.range.lambda_max / kLambdaRangeRatio;
  }
  const std::vector<double> grid = lambda_grid(path.range, options.n_lambda);

  std::vector<std::shared_ptr<const LpcaModel>> models;
  auto record = [&](std::size_t k, const LpcaModel& model, int prior_iterations) {
    PathRecord& rec = path.records[k];
    rec.cv_error = cv_error(model, split, options.link);
    rec.rank = model.rank();
    rec.converged = model.diagnostics.converged;
    rec.iterations = prior_iterations + model.diagnostics.iterations;
    rec.objective = model.diagnostics.final_objective;
  };

  // The λ_max fit starts from the null state in both designs.
  const FitConfig first_cfg = null_start(split.train, options.path_eps, options.path_max_iter, options.link);
  for (double lambda : grid) {
    std::shared_ptr<const LpcaModel> model;
    if (models.empty()) {
      model = std::make_shared<const LpcaModel>(fit(split.train, family_template.with_lambda(lambda), first_cfg));
    } else {
      if (!random_start) cfg.init = WarmInit{models.back()};
      model = fit_at(lambda);
    }
    path.records.push_back(PathRecord{lambda});
    record(path.records.size() - 1, *model, 0);
    models.push_back(std::move(model));
  }

  // Independent fits that hit the cap are continued from large to small λ
  // on one shared iteration budget, stopping at the first one that still
  // does not converge.
  if (random_start) {
    FitConfig more = cfg;
    int budget = options.extend_max_iter;
    for (std::size_t k = 0; k < path.records.size() && budget > 0; ++k) {
      if (path.records[k].converged) continue;
      more.max_iter = budget;
      more.init = WarmInit{models[k]};
      models[k] = std::make_shared<const LpcaModel>(
          fit(split.train, family_template.with_lambda(path.records[k].lambda), more));
      path.records[k].extended = true;
      record(k, *models[k], path.records[k].iterations);
      budget -= models[k]->diagnostics.iterations;
      if (!path.records[k].converged) break;
    }
  }

  std::shared_ptr<const LpcaModel> best;
  double best_cv = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < path.records.size(); ++k) {
    if (path.records[k].converged && path.records[k].cv_error < best_cv) {
      best_cv = path.records[k].cv_error;
      best = models[k];
      path.chosen_index = k;
    }
  }

  if (!best) {
    std::ostringstream msg;
    msg << "no fit on the lambda path converged:";
    for (const PathRecord& r : path.records) {
      msg << " [lambda=" << r.lambda << " iterations=" << r.iterations << " rank=" << r.rank << "]";
    }
    throw std::runtime_error(msg.str());
  }

  path.chosen_lambda = path.records[path.chosen_index].lambda;
  path.spec = family_template.with_lambda(path.chosen_lambda);
  path.train_model = *best;
  path.fits = std::move(models);

  FitConfig refit_cfg;
  refit_cfg.max_iter = options.refit_max_iter;
  refit_cfg.link = options.link;
  refit_cfg.init = WarmInit{best};
  path.refits = fit_tolerance_ladder(X, path.spec, refit_cfg, options.refit_tolerances);
  return path;
}

std::vector<GammaStudyRow> gamma_study(const BinaryMatrix& X, const std::vector<double>& gammas,
                                       const SelectionOptions& options,
                                       const std::optional<GroundTruth>& truth) {
  if (gammas.empty()) throw std::invalid_argument("gamma grid is empty");
  const CvSplit split = make_cv_split(X, options.fraction, options.seed);
  std::vector<GammaStudyRow> rows;
  for (double gamma : gammas) {
    GammaStudyRow row;
    row.gamma = gamma;
    try {
      const SelectionPath path = select_and_refit(X, split, PenaltySpec::gdp(0.0, gamma), options);
      row.chosen_lambda = path.chosen_lambda;
      row.rank = path.model().rank();
      row.cv_error = path.records[path.chosen_index].cv_error;
      if (truth) row.metrics = evaluate_model(*truth, path.model());
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lpca
