#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lpca/penalty.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace lpca;

namespace {

// Penalty λ-scaled as in the objective, written from the textbook definitions.
double reference_penalty(const PenaltySpec& s, double z) {
  switch (s.family) {
    case PenaltyFamily::GDP: return s.lambda * std::log(1.0 + z / s.gamma);
    case PenaltyFamily::Nuclear: return s.lambda * z;
    case PenaltyFamily::Lq: return s.lambda * std::pow(z, s.q);
    case PenaltyFamily::SCAD:
      if (z <= s.lambda) return s.lambda * z;
      if (z <= s.a * s.lambda) {
        return (2.0 * s.a * s.lambda * z - z * z - s.lambda * s.lambda) / (2.0 * (s.a - 1.0));
      }
      return s.lambda * s.lambda * (s.a + 1.0) / 2.0;
    default: return 0.0;
  }
}

PenaltySpec random_spec(std::mt19937_64& rng, int family) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lambda = std::exp(std::log(0.05) + u(rng) * std::log(100.0));
  switch (family % 4) {
    case 0: return PenaltySpec::gdp(lambda, std::exp(std::log(0.1) + u(rng) * std::log(1000.0)));
    case 1: return PenaltySpec::nuclear(lambda);
    case 2: return PenaltySpec::scad(lambda, 2.1 + 3.0 * u(rng));
    default: return PenaltySpec::lq(lambda, 0.1 + 0.8 * u(rng));
  }
}

}  // namespace

TEST_CASE("penalty_term agrees with the closed forms") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const PenaltySpec spec = random_spec(rng, k);
    Eigen::VectorXd s(3);
    s << u(rng), u(rng), u(rng);
    std::sort(s.data(), s.data() + 3, std::greater<double>());
    const double expected = reference_penalty(spec, s(0)) + reference_penalty(spec, s(1)) +
                            reference_penalty(spec, s(2));
    CHECK(penalty_term(spec, SingularSpectrum(s)) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("scalar threshold is never beaten by a fine grid") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 400; ++k) {
    const PenaltySpec spec = random_spec(rng, k);
    const double L = k % 2 == 0 ? 1.0 : 0.25;
    const double sigma = 20.0 * u(rng);
    auto obj = [&](double z) { return 0.5 * L * (z - sigma) * (z - sigma) + reference_penalty(spec, z); };
    const double eta = scalar_threshold(spec, sigma, L);
    CAPTURE(to_string(spec.family));
    CAPTURE(sigma);
    CHECK(eta >= 0.0);
    CHECK(eta <= sigma + 1e-12);
    CHECK(obj(eta) <= oracle::grid_min(obj, 0.0, sigma, 10001) + 1e-10);
  }
}

TEST_CASE("GDP threshold matches a refined argmin away from the jump") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int compared = 0;
  for (int k = 0; k < 300; ++k) {
    const PenaltySpec spec = PenaltySpec::gdp(0.1 + 5.0 * u(rng), 0.1 + 5.0 * u(rng));
    const double sigma = 15.0 * u(rng);
    auto obj = [&](double z) { return 0.5 * (z - sigma) * (z - sigma) + reference_penalty(spec, z); };
    const double z_star = oracle::grid_argmin(obj, 0.0, sigma, 4001);
    const double eta = scalar_threshold(spec, sigma);
    // Near the jump two minima nearly tie and the argmin is ill-conditioned.
    if (std::abs(obj(0.0) - obj(z_star)) < 1e-6 && z_star > 0.0) continue;
    CHECK(eta == doctest::Approx(z_star).epsilon(1e-6).scale(1.0));
    ++compared;
  }
  CHECK(compared > 200);
}

TEST_CASE("threshold functions are monotone and vanish at zero") {
  for (int family = 0; family < 4; ++family) {
    std::mt19937_64 rng(family);
    const PenaltySpec spec = random_spec(rng, family);
    const auto curve = threshold_curve(spec, 30.0, 601);
    CHECK(curve.front().second == 0.0);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second >= curve[i - 1].second - 1e-12);
  }
}

TEST_CASE("nuclear threshold is soft thresholding; SCAD leaves large values untouched") {
  CHECK(scalar_threshold(PenaltySpec::nuclear(2.0), 5.0) == doctest::Approx(3.0));
  CHECK(scalar_threshold(PenaltySpec::nuclear(2.0), 1.0) == 0.0);
  CHECK(scalar_threshold(PenaltySpec::nuclear(1.0), 5.0, 0.25) == doctest::Approx(1.0));
  const PenaltySpec scad = PenaltySpec::scad(1.0, 3.7);
  CHECK(scalar_threshold(scad, 10.0) == 10.0);
  CHECK(scalar_threshold(scad, 1.5) == doctest::Approx(0.5));
  CHECK(scalar_threshold(scad, 3.0) == doctest::Approx((2.7 * 3.0 - 3.7) / 1.7));
}

TEST_CASE("supergradient weights are nondecreasing along a nonincreasing spectrum") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const PenaltySpec spec = random_spec(rng, k);
    Eigen::VectorXd s(6);
    for (int r = 0; r < 6; ++r) s(r) = u(rng);
    std::sort(s.data(), s.data() + 6, std::greater<double>());
    const Eigen::VectorXd w = supergradient_weights(spec, SingularSpectrum(s));
    for (int r = 1; r < 6; ++r) CHECK(w(r) >= w(r - 1));
    // weight = derivative of g (P'/λ for SCAD), checked by a central difference
    for (int r = 0; r < 6; ++r) {
      const double h = 1e-6 * std::max(1.0, s(r));
      if (s(r) < 2 * h) continue;
      if (spec.family == PenaltyFamily::SCAD &&
          (std::abs(s(r) - spec.lambda) < 1e-3 || std::abs(s(r) - spec.a * spec.lambda) < 1e-3)) {
        continue;
      }
      const double fd = (reference_penalty(spec, s(r) + h) - reference_penalty(spec, s(r) - h)) / (2 * h);
      const double expected = spec.family == PenaltyFamily::Lq
                                  ? spec.q * std::pow(s(r) + kLqSmoothing, spec.q - 1.0)
                                  : fd / spec.lambda;
      CHECK(w(r) == doctest::Approx(expected).epsilon(1e-5));
    }
  }
  CHECK(supergradient_weights(PenaltySpec::gdp(1.0, 2.0), SingularSpectrum(Eigen::VectorXd::Zero(1)))(0) ==
        doctest::Approx(0.5));
}

TEST_CASE("weighted thresholding solves the prox for random weights") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 100; ++k) {
    const Eigen::MatrixXd M = oracle::random_normal(5, 7, rng, 2.0);
    const PenaltySpec spec = random_spec(rng, k);
    const Eigen::VectorXd s_prev = oracle::jacobi_singular_values(oracle::random_normal(5, 7, rng, 2.0));
    const Eigen::VectorXd w = supergradient_weights(spec, SingularSpectrum(s_prev));
    const double lam = spec.lambda * 0.3;
    const double L = 0.25 + k % 4;
    const Eigen::MatrixXd Z = weighted_sv_threshold(M, w, lam, L);
    const Eigen::VectorXd sz = oracle::jacobi_singular_values(Z);
    const double obj = 0.5 * L * (Z - M).squaredNorm() + lam * w.dot(sz);
    const Eigen::VectorXd sm = oracle::jacobi_singular_values(M);
    double bound = 0.0;
    for (int r = 0; r < sm.size(); ++r) {
      const double s = sm(r), wr = w(r);
      bound += oracle::grid_min([&](double z) { return 0.5 * L * (z - s) * (z - s) + lam * wr * z; }, 0.0, s,
                                10000);
    }
    CAPTURE(k);
    CAPTURE(obj - bound);
    CHECK(obj <= bound + 1e-8);
  }
}

TEST_CASE("weighted thresholding validates its inputs") {
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(3, 4);
  CHECK_THROWS_AS(weighted_sv_threshold(M, Eigen::VectorXd::Ones(2), 1.0, 1.0), std::invalid_argument);
  Eigen::VectorXd decreasing(3);
  decreasing << 3.0, 2.0, 1.0;
  CHECK_THROWS_AS(weighted_sv_threshold(M, decreasing, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(weighted_sv_threshold(M, Eigen::VectorXd::Ones(3), -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(weighted_sv_threshold(M, Eigen::VectorXd::Ones(3), 1.0, 0.0), std::invalid_argument);
  // λ = 0 is the identity; a huge λ gives zero
  CHECK((weighted_sv_threshold(M, Eigen::VectorXd::Ones(3), 0.0, 1.0) - M).norm() < 1e-12);
  CHECK(weighted_sv_threshold(M, Eigen::VectorXd::Ones(3), 10.0, 1.0).norm() == 0.0);
}

TEST_CASE("penalty parameters are validated") {
  CHECK_THROWS_AS(PenaltySpec::gdp(1.0, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(PenaltySpec::scad(1.0, 2.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(PenaltySpec::lq(1.0, 1.5).validate(), std::invalid_argument);
  CHECK_NOTHROW(PenaltySpec::lq(1.0, 1.0).validate());
  CHECK_THROWS_AS(PenaltySpec::nuclear(-1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(PenaltySpec::exact_rank(-1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_penalty_family("ridge"), std::invalid_argument);
  CHECK(parse_penalty_family("gdp") == PenaltyFamily::GDP);
  Eigen::VectorXd unsorted(2);
  unsorted << 1.0, 2.0;
  CHECK_THROWS_AS(SingularSpectrum{unsorted}, std::invalid_argument);
}
