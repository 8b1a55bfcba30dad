#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lpca/selection.hpp"
#include "lpca/simulator.hpp"
#include "lpca/solver.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace lpca;

namespace {

BinaryMatrix small_data(std::uint64_t seed, Index I = 30, Index J = 40, double missing = 0.0) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd theta =
      oracle::random_normal(I, 2, rng, 1.5) * oracle::random_normal(2, J, rng) / 1.5 +
      Eigen::MatrixXd::Constant(I, J, -0.5);
  return BinaryMatrix::from_dense(oracle::random_binary(theta, rng, missing));
}

FitConfig config(double eps, int max_iter, Initialization init = RandomInit{1}, Link link = Link::Logit) {
  FitConfig c;
  c.eps_f = eps;
  c.max_iter = max_iter;
  c.link = link;
  c.init = std::move(init);
  return c;
}

bool monotone(const std::vector<double>& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k] > trace[k - 1] + 1e-9 * std::abs(trace[k - 1])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("objective trace never increases") {
  const PenaltySpec specs[] = {PenaltySpec::gdp(3.0, 1.0), PenaltySpec::nuclear(4.0), PenaltySpec::scad(2.0),
                               PenaltySpec::lq(2.0, 0.5), PenaltySpec::exact_rank(3)};
  int seed = 0;
  for (const PenaltySpec& spec : specs) {
    for (Link link : {Link::Logit, Link::Probit}) {
      for (double missing : {0.0, 0.2}) {
        const BinaryMatrix X = small_data(static_cast<std::uint64_t>(++seed), 25, 35, missing);
        const LpcaModel m = fit(X, spec, config(1e-10, 300, RandomInit{static_cast<std::uint64_t>(seed)}, link));
        CAPTURE(to_string(spec.family));
        CHECK(monotone(m.diagnostics.objective_trace));
        CHECK(m.diagnostics.objective_trace.size() == static_cast<std::size_t>(m.diagnostics.iterations) + 1);
        CHECK(m.diagnostics.final_objective == m.diagnostics.objective_trace.back());
        CHECK(objective(X, m, spec) == doctest::Approx(m.diagnostics.final_objective).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("fitted models satisfy the structural constraints") {
  const BinaryMatrix X = small_data(7);
  for (const PenaltySpec& spec : {PenaltySpec::gdp(2.0), PenaltySpec::exact_rank(2)}) {
    const LpcaModel m = fit(X, spec, config(1e-8, 1000));
    const Index R = m.rank();
    CHECK((m.U.transpose() * m.U - Eigen::MatrixXd::Identity(R, R)).norm() < 1e-9);
    CHECK((m.V.transpose() * m.V - Eigen::MatrixXd::Identity(R, R)).norm() < 1e-9);
    CHECK(m.U.colwise().sum().norm() < 1e-9);
    for (Index r = 0; r < R; ++r) CHECK(m.S(r) > 0.0);
    for (Index r = 1; r < R; ++r) CHECK(m.S(r) <= m.S(r - 1));
    CHECK(m.theta_at(3, 5) == doctest::Approx(m.theta()(3, 5)).epsilon(1e-12));
    const Decomposition d = decompose(m);
    CHECK((d.scores * d.loadings.transpose() - m.Z()).norm() < 1e-10);
  }
  CHECK(fit(X, PenaltySpec::exact_rank(2), config(1e-8, 1000)).rank() == 2);
}

TEST_CASE("nuclear fits reach the same optimum from any start") {
  const BinaryMatrix X = small_data(9, 40, 60);
  std::vector<double> finals;
  for (std::uint64_t s = 0; s < 5; ++s) {
    finals.push_back(fit(X, PenaltySpec::nuclear(3.0), config(1e-12, 20000, RandomInit{s})).diagnostics.final_objective);
  }
  const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
  CHECK((*hi - *lo) / std::abs(*lo) < 1e-5);
}

TEST_CASE("tolerance ladder equals separate fits") {
  const BinaryMatrix X = small_data(10);
  FitConfig cfg = config(1e-4, 800, RandomInit{4});
  const auto ladder = fit_tolerance_ladder(X, PenaltySpec::gdp(2.0), cfg, {1e-4, 1e-7});
  const LpcaModel a = fit(X, PenaltySpec::gdp(2.0), cfg);
  cfg.eps_f = 1e-7;
  const LpcaModel b = fit(X, PenaltySpec::gdp(2.0), cfg);
  CHECK(ladder[0].S == a.S);
  CHECK(ladder[0].mu == a.mu);
  CHECK(ladder[0].diagnostics.iterations == a.diagnostics.iterations);
  CHECK(ladder[1].S == b.S);
  CHECK(ladder[1].diagnostics.objective_trace == b.diagnostics.objective_trace);
}

TEST_CASE("warm start continues from the given model") {
  const BinaryMatrix X = small_data(11);
  const PenaltySpec spec = PenaltySpec::gdp(2.0);
  auto first = std::make_shared<const LpcaModel>(fit(X, spec, config(1e-9, 50000)));
  REQUIRE(first->diagnostics.converged);
  const LpcaModel again = fit(X, spec, config(1e-9, 50000, WarmInit{first}));
  CHECK(again.diagnostics.objective_trace.front() == doctest::Approx(first->diagnostics.final_objective).epsilon(1e-12));
  CHECK(again.diagnostics.iterations <= 3);
}

TEST_CASE("a huge lambda yields the rank-0 null model") {
  const BinaryMatrix X = small_data(12);
  const LambdaRange range = auto_lambda_range(X, PenaltySpec::gdp(0.0, 1.0), Link::Logit);
  FitConfig cfg = config(1e-8, 500, UserInit{Eigen::VectorXd::Zero(X.cols()), Eigen::MatrixXd::Zero(X.rows(), X.cols())});
  for (double factor : {1.0, 1.01, 10.0}) {
    const LpcaModel m = fit(X, PenaltySpec::gdp(range.lambda_max * factor, 1.0), cfg);
    CHECK(m.rank() == 0);
  }
  // The null model puts μ at the column logits of the observed frequencies.
  const LpcaModel null_model = fit(X, PenaltySpec::exact_rank(0), config(1e-13, 5000, cfg.init));
  for (Index j = 0; j < X.cols(); ++j) {
    const double p = X.values().col(j).sum() / X.mask().col(j).sum();
    if (p > 0.0 && p < 1.0) CHECK(null_model.mu(j) == doctest::Approx(std::log(p / (1 - p))).epsilon(1e-4));
  }
}

TEST_CASE("masked entries have no influence on the fit") {
  const BinaryMatrix X = small_data(13, 20, 25, 0.15);
  BinaryMatrix Y = X;
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      if (!X.observed(i, j)) {
        Y.set(i, j, 1.0);
        Y.set_missing(i, j);
      }
    }
  }
  const LpcaModel a = fit(X, PenaltySpec::gdp(2.0), config(1e-8, 500));
  const LpcaModel b = fit(Y, PenaltySpec::gdp(2.0), config(1e-8, 500));
  CHECK(a.S == b.S);
  CHECK(a.mu == b.mu);
}

TEST_CASE("invalid inputs are rejected") {
  const BinaryMatrix X = small_data(14, 6, 8);
  CHECK_THROWS_AS(fit(X, PenaltySpec::exact_rank(6), config(1e-6, 10)), std::invalid_argument);
  CHECK_THROWS_AS(fit(X, PenaltySpec::gdp(1.0), config(0.0, 10)), std::invalid_argument);
  CHECK_THROWS_AS(fit(X, PenaltySpec::gdp(1.0), config(1e-6, 0)), std::invalid_argument);
  CHECK_THROWS_AS(fit(X, PenaltySpec::gdp(1.0),
                      config(1e-6, 10, UserInit{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(6, 8)})),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit(X, PenaltySpec::gdp(1.0), config(1e-6, 10, WarmInit{nullptr})), std::invalid_argument);
}
