#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lpca/evaluate.hpp"
#include "lpca/linalg.hpp"
#include "lpca/simulator.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace lpca;

TEST_SUITE("linalg") {
  TEST_CASE("thin SVD reconstructs and normalizes signs") {
    std::mt19937_64 rng(1);
    for (auto [r, c] : {std::pair{5, 7}, std::pair{9, 4}, std::pair{30, 50}}) {
      const Eigen::MatrixXd m = oracle::random_normal(r, c, rng);
      const ThinSvd svd = thin_svd(m);
      CHECK((svd.U * svd.s.asDiagonal() * svd.V.transpose() - m).norm() < 1e-10 * m.norm());
      CHECK((svd.s - oracle::jacobi_singular_values(m)).norm() < 1e-9 * svd.s(0));
      for (Index k = 0; k < svd.U.cols(); ++k) {
        Index arg = 0;
        svd.U.col(k).cwiseAbs().maxCoeff(&arg);
        CHECK(svd.U(arg, k) > 0.0);
      }
    }
  }

  TEST_CASE("Gram route agrees with the direct SVD on kept components") {
    std::mt19937_64 rng(2);
    for (auto [r, c] : {std::pair{40, 90}, std::pair{120, 30}}) {
      const Eigen::MatrixXd m = oracle::random_normal(r, c, rng);
      const ThinSvd direct = thin_svd(m);
      const ThinSvd lead = leading_svd(m, [](const Eigen::VectorXd&) { return Index{6}; });
      REQUIRE(lead.U.cols() == 6);
      CHECK((lead.s.head(6) - direct.s.head(6)).norm() < 1e-9 * direct.s(0));
      const Eigen::MatrixXd a = lead.U * lead.s.head(6).asDiagonal() * lead.V.transpose();
      const Eigen::MatrixXd b = direct.U.leftCols(6) * direct.s.head(6).asDiagonal() * direct.V.leftCols(6).transpose();
      CHECK((a - b).norm() < 1e-8 * b.norm());
      CHECK((lead.U.transpose() * lead.U - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-9);
    }
  }

  TEST_CASE("Gram route falls back when kept values are tiny") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd a = oracle::random_normal(50, 3, rng);
    const Eigen::MatrixXd b = oracle::random_normal(60, 3, rng);
    Eigen::MatrixXd m = a * b.transpose();
    m += 1e-9 * oracle::random_normal(50, 60, rng);
    const ThinSvd lead = leading_svd(m, [](const Eigen::VectorXd&) { return Index{5}; });
    const ThinSvd direct = thin_svd(m);
    CHECK((lead.U.transpose() * lead.U - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-9);
    CHECK(std::abs(lead.s(4) - direct.s(4)) < 1e-12);
  }

  TEST_CASE("best rank approximation and centering helpers") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd m = oracle::random_normal(8, 6, rng);
    const LowRankFactors f = best_rank_approximation(m, 2);
    const Eigen::VectorXd s = oracle::jacobi_singular_values(m);
    CHECK((m - f.reconstruct()).squaredNorm() == doctest::Approx(s.tail(4).squaredNorm()).epsilon(1e-10));
    CHECK(best_rank_approximation(m, 0).reconstruct().norm() == 0.0);
    CHECK(column_centered(m).colwise().sum().norm() < 1e-12);
    CHECK_THROWS_AS(thin_svd(Eigen::MatrixXd::Constant(2, 2, std::nan(""))), std::invalid_argument);
  }
}

TEST_SUITE("simulator") {
  TEST_CASE("realized SNR and factor structure are exact") {
    for (double snr : {0.01, 1.0, 1000.0}) {
      SimulationConfig cfg;
      cfg.rows = 60;
      cfg.cols = 80;
      cfg.rank = 4;
      cfg.snr = snr;
      cfg.seed = 12;
      const SimulatedDataset ds = simulate(cfg);
      CHECK(std::abs(ds.realized_snr - snr) <= 1e-12 * snr);
      CHECK(std::abs(ds.Z.squaredNorm() / ds.E.squaredNorm() - snr) <= 1e-12 * snr);
      CHECK((ds.U.transpose() * ds.U - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((ds.V.transpose() * ds.V - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(ds.U.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
      CHECK((ds.U * ds.D.asDiagonal() * ds.V.transpose() - ds.Z).norm() < 1e-10 * ds.Z.norm());
      CHECK((ds.Xstar - ds.theta - ds.E).norm() < 1e-10 * ds.Xstar.norm());
      for (Index r = 1; r < ds.D.size(); ++r) CHECK(ds.D(r) <= ds.D(r - 1));
      for (Index j = 0; j < ds.X.cols(); ++j) {
        for (Index i = 0; i < ds.X.rows(); ++i) {
          CHECK(ds.Pi(i, j) == doctest::Approx(1.0 / (1.0 + std::exp(-ds.theta(i, j)))));
        }
      }
    }
  }

  TEST_CASE("SNR changes only the scale of Z") {
    SimulationConfig a;
    a.rows = 30;
    a.cols = 40;
    a.rank = 3;
    a.seed = 5;
    SimulationConfig b = a;
    b.snr = 9.0;
    const SimulatedDataset da = simulate(a), db = simulate(b);
    CHECK((db.Z - 3.0 * da.Z).norm() < 1e-10 * db.Z.norm());
    CHECK(da.E == db.E);
    const SimulatedDataset again = simulate(a);
    CHECK(again.X.values() == da.X.values());
    CHECK(again.Z == da.Z);
  }

  TEST_CASE("sampled offsets depend on their own seed only") {
    SimulationConfig a;
    a.rows = 20;
    a.cols = 30;
    a.rank = 2;
    a.seed = 1;
    a.offset = SampledOffset{0.01, 0.15, 99};
    SimulationConfig b = a;
    b.seed = 2;
    const SimulatedDataset da = simulate(a), db = simulate(b);
    CHECK(da.mu == db.mu);
    for (Index j = 0; j < da.mu.size(); ++j) {
      const double p = 1.0 / (1.0 + std::exp(-da.mu(j)));
      CHECK(p >= 0.01 - 1e-12);
      CHECK(p <= 0.15 + 1e-12);
    }
  }

  TEST_CASE("marginal offsets are logits") {
    Eigen::VectorXd p(3);
    p << 0.5, 0.1, 0.9;
    const Eigen::VectorXd mu = offset_from_marginals(p);
    CHECK(mu(0) == doctest::Approx(0.0));
    CHECK(mu(1) == doctest::Approx(std::log(0.1 / 0.9)));
    CHECK(mu(2) == doctest::Approx(-mu(1)));
    p(0) = 1.0;
    CHECK_THROWS_AS(offset_from_marginals(p), std::invalid_argument);
    Eigen::VectorXd q(2);
    q << 0.75, 0.067;
    const Eigen::VectorXd m = offset_from_marginals(q);
    CHECK(m(0) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(m(1) == doctest::Approx(-2.634).epsilon(1e-3));
  }

  TEST_CASE("balanced columns sit near one half") {
    SimulationConfig cfg;
    cfg.rows = 2000;
    cfg.cols = 50;
    cfg.rank = 3;
    cfg.seed = 21;
    const SimulatedDataset ds = simulate(cfg);
    const Eigen::RowVectorXd means = ds.Pi.colwise().mean();
    CHECK(means.minCoeff() >= 0.35);
    CHECK(means.maxCoeff() <= 0.65);
  }

  TEST_CASE("high SNR data follow the sign of theta") {
    SimulationConfig cfg;
    cfg.rows = 100;
    cfg.cols = 120;
    cfg.rank = 3;
    cfg.snr = 1000.0;
    cfg.seed = 8;
    const SimulatedDataset ds = simulate(cfg);
    const Eigen::MatrixXd X = ds.X.to_dense();
    Index agree = 0;
    for (Index j = 0; j < X.cols(); ++j) {
      for (Index i = 0; i < X.rows(); ++i) agree += (X(i, j) == 1.0) == (ds.theta(i, j) > 0.0) ? 1 : 0;
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(X.size()) > 0.95);
  }

  TEST_CASE("logistic noise has the logistic moments") {
    std::mt19937_64 rng(77);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    int below = 0;
    for (int k = 0; k < n; ++k) {
      const double e = sample_standard_logistic(rng);
      sum += e;
      sq += e * e;
      below += e < 1.0 ? 1 : 0;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.02);
    CHECK((sq / n - mean * mean) == doctest::Approx(std::numbers::pi * std::numbers::pi / 3.0).epsilon(0.03));
    CHECK(static_cast<double>(below) / n == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(0.01));
  }

  TEST_CASE("invalid configurations are rejected") {
    SimulationConfig cfg;
    cfg.rank = 0;
    CHECK_THROWS_AS(simulate(cfg), std::invalid_argument);
    cfg.rank = 2;
    cfg.snr = -1.0;
    CHECK_THROWS_AS(simulate(cfg), std::invalid_argument);
    cfg.snr = 1.0;
    cfg.rows = 5;
    cfg.cols = 5;
    cfg.rank = 5;
    CHECK_THROWS_AS(simulate(cfg), std::invalid_argument);
  }
}

TEST_SUITE("evaluate") {
  TEST_CASE("relative squared error and Hellinger distance") {
    Eigen::MatrixXd t(1, 2), e(1, 2);
    t << 3.0, 4.0;
    e << 3.0, 2.0;
    CHECK(rmse(t, e) == doctest::Approx(4.0 / 25.0));
    CHECK_THROWS_AS(rmse(Eigen::MatrixXd::Zero(1, 2), e), std::invalid_argument);
    CHECK(hellinger(0.3, 0.3) == 0.0);
    CHECK(hellinger(0.0, 1.0) == doctest::Approx(1.0));
    CHECK(hellinger(0.5, 0.0) == doctest::Approx(std::sqrt(1.0 - std::sqrt(0.5))));
    Eigen::MatrixXd p(1, 2), q(1, 2);
    p << 0.0, 0.5;
    q << 1.0, 0.5;
    CHECK(mean_hellinger(p, q) == doctest::Approx(0.5));
  }

  TEST_CASE("variation explained") {
    Eigen::VectorXd s(3);
    s << 3.0, 2.0, 1.0;
    const auto v = variation_explained(s);
    CHECK(v[0] == doctest::Approx(9.0 / 14.0));
    CHECK(v[2] == doctest::Approx(1.0 / 14.0));
    CHECK(variation_explained(Eigen::VectorXd(0)).empty());
    Eigen::VectorXd bad(2);
    bad << 1.0, 2.0;
    CHECK_THROWS(variation_explained(bad));
  }

  TEST_CASE("full-information fit recovers noiseless structure") {
    SimulationConfig cfg;
    cfg.rows = 40;
    cfg.cols = 50;
    cfg.rank = 3;
    cfg.snr = 1e8;
    cfg.offset = SampledOffset{0.05, 0.5, 3};
    const SimulatedDataset ds = simulate(cfg);
    const FullInformationModel full = full_information_fit(ds.Xstar, 3);
    const GroundTruth truth{ds.theta, ds.Z, ds.mu, ds.Pi};
    const MetricsReport m = evaluate_full_information(truth, full);
    CHECK(m.rmse_z < 1e-6);
    CHECK(m.rmse_theta < 1e-6);
    CHECK(m.mhd_pi < 1e-2);
    CHECK(m.estimated_rank == 3);
    const MetricsReport balanced = evaluate_estimate(GroundTruth{ds.Z, ds.Z, Eigen::VectorXd::Zero(50), ds.Pi},
                                                     Eigen::VectorXd::Zero(50), ds.Z, ds.D, Link::Logit);
    CHECK(std::isnan(balanced.rmse_mu));
  }
}
