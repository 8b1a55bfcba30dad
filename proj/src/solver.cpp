#include "lpca/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lpca {

namespace {

Eigen::MatrixXd compose_z(const Eigen::MatrixXd& U, const Eigen::VectorXd& S,
                          const Eigen::MatrixXd& V) {
  if (S.size() == 0) return Eigen::MatrixXd::Zero(U.rows(), V.rows());
  return (U * S.asDiagonal()) * V.transpose();
}

Eigen::MatrixXd compose_theta(const Eigen::VectorXd& mu, const Eigen::MatrixXd& U,
                              const Eigen::VectorXd& S, const Eigen::MatrixXd& V) {
  Eigen::MatrixXd theta = compose_z(U, S, V);
  theta.rowwise() += mu.transpose();
  return theta;
}

// Current iterate: offset plus either factored Z or a dense initial Z.
struct Iterate {
  Eigen::VectorXd mu;
  Eigen::MatrixXd U;
  Eigen::VectorXd S;
  Eigen::MatrixXd V;
  Eigen::MatrixXd theta;
  Eigen::VectorXd spectrum;  // σ(Z), all min(I, J) values
};

Iterate initial_iterate(const BinaryMatrix& X, const FitConfig& cfg) {
  const Index I = X.rows();
  const Index J = X.cols();
  const Index n = std::min(I, J);
  Iterate it;
  if (const auto* random = std::get_if<RandomInit>(&cfg.init)) {
    std::mt19937_64 rng(random->seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd Z0(I, J);
    for (Index j = 0; j < J; ++j) {
      for (Index i = 0; i < I; ++i) Z0(i, j) = unif(rng);
    }
    it.mu = Eigen::VectorXd::Zero(J);
    it.spectrum = singular_values(Z0);
    it.theta = std::move(Z0);
  } else if (const auto* warm = std::get_if<WarmInit>(&cfg.init)) {
    if (!warm->model) throw std::invalid_argument("warm start without a model");
    const LpcaModel& m = *warm->model;
    if (m.mu.size() != J || m.U.rows() != I || m.V.rows() != J) {
      throw std::invalid_argument("warm-start model shape does not match the data");
    }
    it.mu = m.mu;
    it.U = m.U;
    it.S = m.S;
    it.V = m.V;
    it.theta = compose_theta(it.mu, it.U, it.S, it.V);
    it.spectrum = SingularSpectrum::padded(m.S, n).values();
  } else {
    const auto& user = std::get<UserInit>(cfg.init);
    if (user.mu.size() != J || user.Z.rows() != I || user.Z.cols() != J) {
      throw std::invalid_argument("user initialization shape does not match the data");
    }
    it.mu = user.mu;
    it.spectrum = singular_values(user.Z);
    it.theta = user.Z;
    it.theta.rowwise() += it.mu.transpose();
  }
  if (!it.theta.allFinite()) throw std::invalid_argument("initialization contains non-finite values");
  return it;
}

LpcaModel snapshot(const Iterate& it, const PenaltySpec& spec, Link link,
                   const FitDiagnostics& diag) {
  LpcaModel m;
  m.mu = it.mu;
  m.U = it.U;
  m.S = it.S;
  m.V = it.V;
  m.link = link;
  m.penalty = spec;
  m.diagnostics = diag;
  m.diagnostics.final_objective = diag.objective_trace.back();
  return m;
}

}  // namespace

Eigen::MatrixXd LpcaModel::Z() const { return compose_z(U, S, V); }

Eigen::MatrixXd LpcaModel::theta() const { return compose_theta(mu, U, S, V); }

double LpcaModel::theta_at(Index i, Index j) const {
  double value = mu(j);
  for (Index r = 0; r < S.size(); ++r) value += U(i, r) * S(r) * V(j, r);
  return value;
}

void FitConfig::validate() const {
  if (!(eps_f > 0.0)) throw std::invalid_argument("eps_f must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

std::vector<LpcaModel> fit_tolerance_ladder(const BinaryMatrix& X, const PenaltySpec& spec,
                                            const FitConfig& cfg,
                                            const std::vector<double>& tolerances) {
  spec.validate();
  if (tolerances.empty()) throw std::invalid_argument("no tolerances requested");
  for (double t : tolerances) {
    if (!(t > 0.0)) throw std::invalid_argument("tolerances must be > 0");
  }
  if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  const Index I = X.rows();
  const Index J = X.cols();
  const Index n = std::min(I, J);
  const bool exact = spec.family == PenaltyFamily::ExactRank;
  if (exact && spec.rank > std::min(I - 1, J)) {
    throw std::invalid_argument("exact rank " + std::to_string(spec.rank) +
                                " exceeds min(I-1, J) = " + std::to_string(std::min(I - 1, J)));
  }
  const double L = lipschitz_bound(cfg.link);

  Iterate it = initial_iterate(X, cfg);
  Eigen::MatrixXd grad;
  double nll = nll_and_masked_gradient(X, it.theta, cfg.link, grad);
  double f_prev = nll + penalty_term(spec, SingularSpectrum(it.spectrum));
  if (!std::isfinite(f_prev)) throw std::runtime_error("objective at the initial point is not finite");

  FitDiagnostics diag;
  diag.objective_trace.push_back(f_prev);

  std::vector<LpcaModel> out(tolerances.size());
  std::vector<bool> done(tolerances.size(), false);
  std::size_t remaining = tolerances.size();

  Eigen::MatrixXd H(I, J);
  for (int k = 1; k <= cfg.max_iter && remaining > 0; ++k) {
    H.noalias() = it.theta - grad / L;
    Eigen::VectorXd mu_next = column_means(H);
    H.rowwise() -= mu_next.transpose();

    LowRankFactors factors;
    if (exact) {
      factors = best_rank_approximation(H, spec.rank);
      for (Index r = 0; r < factors.s.size(); ++r) {
        if (factors.s(r) > kExactRankCap) {
          factors.s(r) = kExactRankCap;
          diag.capped = true;
        }
      }
    } else {
      const Eigen::VectorXd weights = supergradient_weights(spec, SingularSpectrum(it.spectrum));
      factors = weighted_sv_threshold_factors(H, weights, spec.lambda, L);
    }

    it.mu = std::move(mu_next);
    it.U = std::move(factors.U);
    it.S = std::move(factors.s);
    it.V = std::move(factors.V);
    it.spectrum = SingularSpectrum::padded(it.S, n).values();
    it.theta = compose_theta(it.mu, it.U, it.S, it.V);

    nll = nll_and_masked_gradient(X, it.theta, cfg.link, grad);
    const double f = nll + penalty_term(spec, SingularSpectrum(it.spectrum));
    if (!std::isfinite(f)) {
      std::ostringstream msg;
      msg << "objective became non-finite at iteration " << k << " (previous value " << f_prev
          << ")";
      throw std::runtime_error(msg.str());
    }
    diag.objective_trace.push_back(f);
    diag.iterations = k;

    const double rel = (f_prev - f) / (std::abs(f_prev) + 1e-10);
    for (std::size_t t = 0; t < tolerances.size(); ++t) {
      if (!done[t] && rel <= tolerances[t]) {
        FitDiagnostics d = diag;
        d.converged = true;
        out[t] = snapshot(it, spec, cfg.link, d);
        done[t] = true;
        --remaining;
      }
    }
    f_prev = f;
  }

  for (std::size_t t = 0; t < tolerances.size(); ++t) {
    if (!done[t]) out[t] = snapshot(it, spec, cfg.link, diag);
  }
  return out;
}

LpcaModel fit(const BinaryMatrix& X, const PenaltySpec& spec, const FitConfig& cfg) {
  cfg.validate();
  return fit_tolerance_ladder(X, spec, cfg, {cfg.eps_f}).front();
}

double objective(const BinaryMatrix& X, const LpcaModel& model, const PenaltySpec& spec) {
  const Index n = std::min(X.rows(), X.cols());
  const double nll = neg_log_likelihood(X, model.theta(), model.link);
  return nll + penalty_term(spec, SingularSpectrum::padded(model.S, n));
}

Decomposition decompose(const LpcaModel& model) {
  return Decomposition{model.U, model.V * model.S.asDiagonal()};
}

}  // namespace lpca
