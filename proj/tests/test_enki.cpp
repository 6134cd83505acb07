#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ecmki/enki.hpp"
#include "ecmki/ensemble.hpp"
#include "ecmki/temper.hpp"

using namespace ecmki;
using Catch::Approx;

namespace {

Ensemble make_ensemble(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& y) {
  Ensemble ens;
  ens.theta = theta;
  ens.y = y;
  ens.health.assign(theta.cols(), MemberHealth{});
  return ens;
}

}  // namespace

TEST_CASE("misfit of a perfect fit is zero", "[misfit]") {
  Eigen::VectorXd y(4);
  y << 4.0, 300.0, 3.9, 301.0;
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(4, 1e-4);
  CHECK(misfit(y, y, r) == 0.0);
}

TEST_CASE("scalar misfit hand value", "[misfit]") {
  Eigen::VectorXd y_obs(1), y(1), r(1);
  y_obs << 4.02;
  y << 4.0;
  r << 1e-4;
  CHECK(misfit(y_obs, y, r) == Approx(2.0));
}

TEST_CASE("misfit is invariant under joint permutation", "[misfit]") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  Eigen::VectorXd y_obs(6), y(6), r(6);
  for (int k = 0; k < 6; ++k) {
    y_obs(k) = unif(rng);
    y(k) = unif(rng);
    r(k) = unif(rng);
  }
  const double base = misfit(y_obs, y, r);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Eigen::VectorXd y_obs_p(6), y_p(6), r_p(6);
  for (int k = 0; k < 6; ++k) {
    y_obs_p(k) = y_obs(perm[k]);
    y_p(k) = y(perm[k]);
    r_p(k) = r(perm[k]);
  }
  CHECK(misfit(y_obs_p, y_p, r_p) == Approx(base).epsilon(1e-14));
}

TEST_CASE("misfit input validation", "[misfit]") {
  Eigen::VectorXd y2(2), y3(3), r2(2);
  y2.setOnes();
  y3.setOnes();
  r2.setOnes();
  CHECK_THROWS_AS(misfit(y3, y2, r2), SchemaError);
  r2(1) = 0.0;
  CHECK_THROWS_AS(misfit(y2, y2, r2), SolverError);
}

TEST_CASE("dmc hand values", "[temper]") {
  SECTION("variance term dominates") {
    // mean 1000, sample variance 250: alpha = max(0.05, 0.2).
    const double a = std::sqrt(125.0);
    Eigen::VectorXd misfits(2);
    misfits << 1000.0 - a, 1000.0 + a;
    TemperState temper;
    const auto alpha = dmc_alpha(misfits, 100, temper);
    REQUIRE(alpha.has_value());
    CHECK(*alpha == Approx(0.2).epsilon(1e-12));
    CHECK(temper.t() == Approx(0.2));
  }
  SECTION("identical misfits take the full remainder") {
    TemperState temper;
    temper.alphas = {0.7};
    Eigen::VectorXd misfits = Eigen::VectorXd::Constant(5, 500.0);
    const auto alpha = dmc_alpha(misfits, 100, temper);
    REQUIRE(alpha.has_value());
    CHECK(*alpha == Approx(0.3).epsilon(1e-12));
    CHECK(temper.done());
  }
  SECTION("cap lands the schedule exactly on one") {
    TemperState temper;
    temper.alphas = {0.9};
    // mean term 0.025, variance term 0.5; remainder 0.1 caps the step.
    const double a = std::sqrt(50.0);
    Eigen::VectorXd misfits(2);
    misfits << 2000.0 - a, 2000.0 + a;
    const auto alpha = dmc_alpha(misfits, 100, temper);
    REQUIRE(alpha.has_value());
    CHECK(*alpha == Approx(0.1).epsilon(1e-12));
    CHECK(temper.t() == 1.0);
    CHECK(temper.done());
    CHECK_FALSE(dmc_alpha(misfits, 100, temper).has_value());
  }
}

TEST_CASE("dmc schedules always sum to one", "[temper]") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(50.0, 5000.0);
  for (int trial = 0; trial < 25; ++trial) {
    TemperState temper;
    for (int round = 0; round < 500 && !temper.done(); ++round) {
      Eigen::VectorXd misfits(16);
      for (int i = 0; i < 16; ++i) misfits(i) = unif(rng);
      const double t_before = temper.t();
      const auto alpha = dmc_alpha(misfits, 100, temper);
      REQUIRE(alpha.has_value());
      CHECK(*alpha > 0.0);
      CHECK(*alpha <= 1.0 - t_before + 1e-15);
    }
    REQUIRE(temper.done());
    CHECK(std::abs(temper.t() - 1.0) <= 1e-12);
  }
}

TEST_CASE("dmc variants", "[temper]") {
  const double a = std::sqrt(125.0);  // mean 1000, variance 250
  Eigen::VectorXd misfits(2);
  misfits << 1000.0 - a, 1000.0 + a;

  SECTION("square-root variance term") {
    TemperState temper;
    DmcOptions opt;
    opt.sqrt_variance = true;
    // 100 / (2 sqrt(250)) > 1, so the remainder caps the step at 1.
    const auto alpha = dmc_alpha(misfits, 100, temper, opt);
    CHECK(*alpha == 1.0);
  }
  SECTION("doubled step count") {
    TemperState temper;
    DmcOptions opt;
    opt.double_h = true;
    const auto alpha = dmc_alpha(misfits, 100, temper, opt);
    CHECK(*alpha == Approx(0.4).epsilon(1e-12));
  }
}

TEST_CASE("dmc input validation", "[temper]") {
  TemperState temper;
  Eigen::VectorXd one(1);
  one << 5.0;
  CHECK_THROWS_AS(dmc_alpha(one, 100, temper), SolverError);
  Eigen::VectorXd two(2);
  two << 5.0, 6.0;
  CHECK_THROWS_AS(dmc_alpha(two, 0, temper), SolverError);
  CHECK_FALSE(TemperState{}.done());
}

TEST_CASE("woodbury solve matches the dense solve", "[enki]") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> runif(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int ny = 40, m = 8, ncols = 3;
    Eigen::MatrixXd a_y(ny, m);
    Eigen::MatrixXd b(ny, ncols);
    Eigen::VectorXd r(ny);
    for (int i = 0; i < ny; ++i) {
      for (int j = 0; j < m; ++j) a_y(i, j) = normal(rng);
      for (int j = 0; j < ncols; ++j) b(i, j) = normal(rng);
      r(i) = runif(rng);
    }
    const double alpha = trial % 2 == 0 ? 1.0 : 0.37;
    const Eigen::MatrixXd fast = woodbury_solve(a_y, m, r, alpha, b);
    Eigen::MatrixXd dense = a_y * a_y.transpose() / (m - 1);
    dense.diagonal() += r / alpha;
    const Eigen::MatrixXd slow = dense.ldlt().solve(b);
    CHECK((fast - slow).norm() / slow.norm() < 1e-8);
  }
}

TEST_CASE("woodbury input validation", "[enki]") {
  Eigen::MatrixXd a_y = Eigen::MatrixXd::Ones(4, 3);
  Eigen::VectorXd r = Eigen::VectorXd::Ones(4);
  Eigen::MatrixXd b = Eigen::MatrixXd::Ones(4, 1);
  CHECK_THROWS_AS(woodbury_solve(a_y, 1, r, 1.0, b), SolverError);
  CHECK_THROWS_AS(woodbury_solve(a_y, 3, r, 0.0, b), SolverError);
  Eigen::VectorXd bad_r = r;
  bad_r(2) = -1.0;
  CHECK_THROWS_AS(woodbury_solve(a_y, 3, bad_r, 1.0, b), SolverError);
  Eigen::VectorXd short_r = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(woodbury_solve(a_y, 3, short_r, 1.0, b), SchemaError);
}

TEST_CASE("members reproducing the data are a fixed point", "[enki]") {
  Eigen::MatrixXd theta(2, 5);
  theta << 1.0, 2.0, 3.0, 4.0, 5.0, -1.0, 0.0, 1.0, 2.0, 3.0;
  Eigen::VectorXd y_obs(3);
  y_obs << 4.0, 300.0, 3.9;
  Eigen::MatrixXd y = y_obs.replicate(1, 5);
  Ensemble ens = make_ensemble(theta, y);
  const EnsembleStats stats = ensemble_stats(ens);
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(3, 1e-4);
  enki_update(ens, stats, y_obs, r, 1.0);
  CHECK((ens.theta - theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero cross-covariance leaves the ensemble unchanged", "[enki]") {
  Eigen::MatrixXd theta(1, 3);
  theta << 1.0, 2.0, 3.0;  // anomalies [-1, 0, 1]
  Eigen::MatrixXd y(1, 3);
  y << 6.0, 5.0, 6.0;  // anomalies [1/3, -2/3, 1/3], orthogonal to theta's
  Ensemble ens = make_ensemble(theta, y);
  const EnsembleStats stats = ensemble_stats(ens);
  CHECK(std::abs(stats.cov_theta_y()(0, 0)) < 1e-14);
  Eigen::VectorXd y_obs(1), r(1);
  y_obs << 7.0;
  r << 1.0;
  enki_update(ens, stats, y_obs, r, 1.0);
  CHECK((ens.theta - theta).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("scalar identity map reproduces the hand Kalman update", "[enki]") {
  Eigen::MatrixXd theta(1, 3);
  theta << 1.0, 2.0, 3.0;
  Ensemble ens = make_ensemble(theta, theta);
  const EnsembleStats stats = ensemble_stats(ens);
  Eigen::VectorXd y_obs(1), r(1);
  y_obs << 2.0;
  r << 1.0;
  enki_update(ens, stats, y_obs, r, 1.0);
  // Gain 1/(1+1): members move halfway toward the observation.
  CHECK(ens.theta(0, 0) == Approx(1.5).epsilon(1e-12));
  CHECK(ens.theta(0, 1) == Approx(2.0).epsilon(1e-12));
  CHECK(ens.theta(0, 2) == Approx(2.5).epsilon(1e-12));
}

TEST_CASE("update applies the positivity floor", "[enki]") {
  Eigen::MatrixXd theta(1, 3);
  theta << 1.0, 2.0, 3.0;
  Ensemble ens = make_ensemble(theta, theta);
  const EnsembleStats stats = ensemble_stats(ens);
  Eigen::VectorXd y_obs(1), r(1), floor(1);
  y_obs << 2.0;
  r << 1.0;
  floor << 1.9;
  enki_update(ens, stats, y_obs, r, 1.0, floor);
  CHECK(ens.theta(0, 0) == Approx(1.9));
  CHECK(ens.theta(0, 2) == Approx(2.5).epsilon(1e-12));
}

TEST_CASE("explicit predictions drive the residual", "[enki]") {
  Eigen::MatrixXd theta(1, 3);
  theta << 1.0, 2.0, 3.0;
  Ensemble ens = make_ensemble(theta, theta);
  const EnsembleStats stats = ensemble_stats(ens);
  Eigen::VectorXd y_obs(1), r(1);
  y_obs << 2.0;
  r << 1.0;
  // Shifting every prediction shifts every member by -gain * shift.
  Eigen::MatrixXd y_pred = ens.y.array() + 1.0;
  enki_update(ens, stats, y_pred, y_obs, r, 1.0);
  CHECK(ens.theta(0, 0) == Approx(1.0).epsilon(1e-12));
  CHECK(ens.theta(0, 1) == Approx(1.5).epsilon(1e-12));
  CHECK(ens.theta(0, 2) == Approx(2.0).epsilon(1e-12));

  Eigen::MatrixXd wrong(2, 3);
  wrong.setOnes();
  CHECK_THROWS_AS(enki_update(ens, stats, wrong, y_obs, r, 1.0), SchemaError);
}

TEST_CASE("update is affine-equivariant in the parameters", "[enki]") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 3, m = 12, ny = 8;
  Eigen::MatrixXd theta(n, m), y(ny, m);
  Eigen::VectorXd y_obs(ny), r(ny);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) theta(i, j) = normal(rng);
    for (int i = 0; i < ny; ++i) y(i, j) = normal(rng);
  }
  for (int i = 0; i < ny; ++i) {
    y_obs(i) = normal(rng);
    r(i) = 0.5 + std::abs(normal(rng));
  }
  Eigen::MatrixXd t_map(n, n);
  t_map << 2.0, 0.5, 0.0, -1.0, 1.0, 0.25, 0.0, 0.0, 3.0;
  Eigen::VectorXd shift(n);
  shift << 1.0, -2.0, 0.5;

  Ensemble plain = make_ensemble(theta, y);
  Eigen::MatrixXd mapped_theta = t_map * theta;
  mapped_theta.colwise() += shift;
  Ensemble mapped = make_ensemble(mapped_theta, y);

  enki_update(plain, ensemble_stats(plain), y_obs, r, 0.6);
  enki_update(mapped, ensemble_stats(mapped), y_obs, r, 0.6);

  Eigen::MatrixXd expected = t_map * plain.theta;
  expected.colwise() += shift;
  CHECK((mapped.theta - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single-shot update on the conjugate scalar case", "[enki]") {
  Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd one11 = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd y_obs(1), r(1);
  y_obs << 1.0;
  r << 1.0;
  const GaussianUpdate post =
      single_shot_update(zero1, zero1, one11, one11, one11, y_obs, r);
  CHECK(std::abs(post.mean(0) - 0.5) < 1e-10);
  CHECK(std::abs(post.cov(0, 0) - 0.5) < 1e-10);
}

TEST_CASE("single-shot update with uninformative data", "[enki]") {
  Eigen::VectorXd theta_mean(2);
  theta_mean << 1.0, 2.0;
  Eigen::VectorXd y_mean(1);
  y_mean << 5.0;
  Eigen::MatrixXd cov_tt(2, 2);
  cov_tt << 2.0, 0.3, 0.3, 1.0;
  Eigen::MatrixXd cov_ty = Eigen::MatrixXd::Zero(2, 1);
  Eigen::MatrixXd cov_yy = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd y_obs(1), r(1);
  y_obs << 9.0;
  r << 1.0;
  const GaussianUpdate post = single_shot_update(theta_mean, y_mean, cov_tt,
                                                 cov_ty, cov_yy, y_obs, r);
  CHECK((post.mean - theta_mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((post.cov - cov_tt).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ensemble single-shot agrees with the dense covariances", "[enki]") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 3, m = 6, ny = 12;
  Eigen::MatrixXd theta(n, m), y(ny, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) theta(i, j) = normal(rng);
    for (int i = 0; i < ny; ++i) y(i, j) = 0.5 * normal(rng) + theta(0, j);
  }
  Eigen::VectorXd y_obs(ny), r(ny);
  for (int i = 0; i < ny; ++i) {
    y_obs(i) = normal(rng);
    r(i) = 0.5 + std::abs(normal(rng));
  }
  const Ensemble ens = make_ensemble(theta, y);
  const EnsembleStats stats = ensemble_stats(ens);
  const GaussianUpdate fast = single_shot_update(stats, y_obs, r);
  const GaussianUpdate slow =
      single_shot_update(stats.theta_mean, stats.y_mean, stats.cov_theta(),
                         stats.cov_theta_y(), stats.cov_yy(), y_obs, r);
  CHECK((fast.mean - slow.mean).norm() < 1e-8 * (1.0 + slow.mean.norm()));
  CHECK((fast.cov - slow.cov).norm() < 1e-8 * (1.0 + slow.cov.norm()));
}
