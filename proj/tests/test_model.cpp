#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "obsbandit/model.hpp"

using namespace obsbandit;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using numkit::SymMatrix;

namespace {

model::ProblemInstance minimal_instance() {
  model::ProblemInstance inst;
  inst.n_arms = 1;
  inst.d_x = 1;
  inst.d_y = 1;
  inst.sensing = MatrixXd::Ones(1, 1);
  inst.sigma_x = SymMatrix::Identity(1);
  inst.sigma_y = SymMatrix::Identity(1);
  inst.mu_star = VectorXd::Ones(1);
  inst.gamma_r = 1.0;
  return inst;
}

model::ProblemInstance identity_instance(Eigen::Index d, Eigen::Index n_arms,
                                         const VectorXd& mu) {
  model::ProblemInstance inst;
  inst.n_arms = n_arms;
  inst.d_x = d;
  inst.d_y = d;
  inst.sensing = MatrixXd::Identity(d, d);
  inst.sigma_x = SymMatrix::Identity(d);
  inst.sigma_y = SymMatrix::Identity(d);
  inst.mu_star = mu;
  inst.gamma_r = 1.0;
  return inst;
}

}  // namespace

TEST_CASE("validate accepts the minimal instance") {
  CHECK_NOTHROW(model::validate(minimal_instance()));
}

TEST_CASE("validate rejects broken instances") {
  auto inst = minimal_instance();
  inst.sigma_y = SymMatrix(MatrixXd::Zero(1, 1));
  CHECK_THROWS_AS(model::validate(inst), NotPsd);

  inst = minimal_instance();
  inst.d_y = 2;
  inst.sensing = MatrixXd::Ones(3, 1);  // three rows for d_y = 2
  inst.sigma_y = SymMatrix::Identity(2);
  CHECK_THROWS_AS(model::validate(inst), BadDimension);

  inst = minimal_instance();
  inst.gamma_r = 0.0;
  CHECK_THROWS_AS(model::validate(inst), NonPositiveNoise);
  inst.gamma_r = -1.0;
  CHECK_THROWS_AS(model::validate(inst), NonPositiveNoise);

  inst = minimal_instance();
  inst.n_arms = 0;
  CHECK_THROWS_AS(model::validate(inst), BadDimension);

  inst = minimal_instance();
  MatrixXd indefinite(1, 1);
  indefinite << -1.0;
  inst.sigma_x = SymMatrix(indefinite);
  CHECK_THROWS_AS(model::validate(inst), NotPsd);
}

TEST_CASE("derive on the identity instance") {
  VectorXd mu(2);
  mu << 1.0, 1.0;
  const auto inst = identity_instance(2, 1, mu);
  const auto derived = model::derive(inst);

  CHECK((derived.decoder - 0.5 * MatrixXd::Identity(2, 2)).norm() <= 1e-12);
  CHECK(derived.eta_star(0) == doctest::Approx(0.5));
  CHECK(derived.eta_star(1) == doctest::Approx(0.5));
  CHECK((derived.s_y.matrix() - 2.0 * MatrixXd::Identity(2, 2)).norm() <= 1e-12);
  CHECK(derived.gamma_ry_sq == doctest::Approx(2.0));
  CHECK(derived.lambda_s1 == doctest::Approx(2.0));
  CHECK(derived.lambda_s2 == doctest::Approx(2.0));
  CHECK(derived.lambda_a1 == doctest::Approx(1.0));
  CHECK(derived.lambda_y1 == doctest::Approx(1.0));
}

TEST_CASE("derive with zero parameter") {
  const auto inst = identity_instance(2, 1, VectorXd::Zero(2));
  const auto derived = model::derive(inst);
  CHECK(derived.eta_star.norm() == 0.0);
  CHECK(derived.gamma_ry_sq == doctest::Approx(inst.gamma_r * inst.gamma_r));
}

TEST_CASE("derive matches a direct-inversion oracle") {
  // 3x2 sensing matrix, identity covariances; the oracle forms every
  // inverse explicitly, the implementation never does.
  model::ProblemInstance inst;
  inst.n_arms = 2;
  inst.d_x = 2;
  inst.d_y = 3;
  inst.sensing.resize(3, 2);
  inst.sensing << 0.7, -1.2, 0.3, 0.8, -0.5, 0.25;
  inst.sigma_x = SymMatrix::Identity(2);
  inst.sigma_y = SymMatrix::Identity(3);
  inst.mu_star.resize(2);
  inst.mu_star << 1.5, -0.4;
  inst.gamma_r = 0.7;

  const auto derived = model::derive(inst);

  const MatrixXd a = inst.sensing;
  const MatrixXd m = a.transpose() * a + MatrixXd::Identity(2, 2);
  const MatrixXd d_oracle = m.inverse() * a.transpose();
  const VectorXd eta_oracle = d_oracle.transpose() * inst.mu_star;
  const double gamma_oracle =
      inst.mu_star.dot(m.inverse() * inst.mu_star) + 0.49;

  CHECK((derived.decoder - d_oracle).norm() <= 1e-10 * d_oracle.norm());
  CHECK((derived.eta_star - eta_oracle).norm() <= 1e-10 * eta_oracle.norm());
  CHECK(derived.gamma_ry_sq == doctest::Approx(gamma_oracle).epsilon(1e-10));

  // invariants
  CHECK(derived.gamma_ry_sq >= inst.gamma_r * inst.gamma_r);
  CHECK(numkit::is_psd(
      SymMatrix(MatrixXd(derived.s_y.matrix() - inst.sigma_y.matrix()))));
  CHECK(derived.lambda_s1 > 0.0);
  CHECK(derived.lambda_s1 <= derived.lambda_s2);
  CHECK((derived.whitener * derived.s_y.matrix() * derived.whitener -
         MatrixXd::Identity(3, 3))
            .norm() <= 1e-10);
}

TEST_CASE("derive rejects singular sigma_x") {
  auto inst = minimal_instance();
  inst.sigma_x = SymMatrix(MatrixXd::Zero(1, 1));
  CHECK_THROWS_AS(model::derive(inst), NotPsd);
}

TEST_CASE("sample_round degenerate noise") {
  // gamma_r = 0 is allowed for sampling (validate would reject it)
  auto inst = minimal_instance();
  inst.gamma_r = 0.0;
  const auto factors = model::make_sample_factors(inst);
  const auto sample = model::sample_round(inst, factors, 1, 2, 3);
  CHECK(sample.reward_noises.norm() == 0.0);

  // sigma_x = 0: contexts vanish, observations are pure noise
  auto inst2 = identity_instance(2, 3, VectorXd::Zero(2));
  inst2.sigma_x = SymMatrix(MatrixXd::Zero(2, 2));
  const auto factors2 = model::make_sample_factors(inst2);
  const auto sample2 = model::sample_round(inst2, factors2, 1, 2, 3);
  CHECK(sample2.contexts.norm() == 0.0);
  CHECK(sample2.observations.norm() > 0.0);
}

TEST_CASE("sample_round is deterministic") {
  VectorXd mu(2);
  mu << 0.3, -0.7;
  const auto inst = identity_instance(2, 4, mu);
  const auto factors = model::make_sample_factors(inst);
  const auto s1 = model::sample_round(inst, factors, 99, 5, 17);
  const auto s2 = model::sample_round(inst, factors, 99, 5, 17);
  CHECK(s1.contexts == s2.contexts);
  CHECK(s1.observations == s2.observations);
  CHECK(s1.reward_noises == s2.reward_noises);

  const auto s3 = model::sample_round(inst, factors, 99, 5, 18);
  CHECK(s1.contexts != s3.contexts);
}

TEST_CASE("reward arithmetic") {
  model::RoundSample sample;
  sample.contexts.resize(1, 2);
  sample.contexts << 1.0, 0.0;
  sample.observations.resize(1, 2);
  sample.observations.setZero();
  sample.reward_noises.resize(1);
  sample.reward_noises << 0.0;

  VectorXd mu(2);
  mu << 3.0, 4.0;
  CHECK(model::reward(sample, 0, mu) == doctest::Approx(3.0));

  sample.reward_noises << 0.7;
  CHECK(model::reward(sample, 0, VectorXd::Zero(2)) == doctest::Approx(0.7));

  sample.contexts << 1.0, 2.0;
  sample.reward_noises << 0.25;
  mu << 0.5, -1.0;
  CHECK(model::reward(sample, 0, mu) == doctest::Approx(-1.25));

  CHECK_THROWS_AS(model::reward(sample, 1, mu), IndexOutOfRange);
  CHECK_THROWS_AS(model::reward(sample, -1, mu), IndexOutOfRange);
}

TEST_CASE("observation and whitened covariances converge to theory") {
  VectorXd mu(2);
  mu << 1.0, 0.0;
  const auto inst = identity_instance(2, 1, mu);
  const auto derived = model::derive(inst);

  const int n = 100000;
  MatrixXd cov = MatrixXd::Zero(2, 2);
  MatrixXd cov_white = MatrixXd::Zero(2, 2);
  double reward_sum = 0.0, reward_sq = 0.0;
  for (int t = 1; t <= n; ++t) {
    const auto s = model::sample_round(inst, derived.factors, 31, 0,
                                       static_cast<std::uint64_t>(t));
    const VectorXd y = s.observations.row(0).transpose();
    cov += y * y.transpose();
    const VectorXd w = derived.whitener * y;
    cov_white += w * w.transpose();
    const double r = model::reward(s, 0, inst.mu_star);
    reward_sum += r;
    reward_sq += r * r;
  }
  cov /= n;
  cov_white /= n;
  CHECK((cov - derived.s_y.matrix()).norm() <=
        0.05 * derived.s_y.matrix().norm());
  CHECK((cov_white - MatrixXd::Identity(2, 2)).norm() <= 0.05);

  const double mean = reward_sum / n;
  const double sd = std::sqrt(reward_sq / n - mean * mean);
  CHECK(std::abs(mean) <= 4.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("least-squares regression of rewards on observations recovers eta") {
  // the executable content of the conditional reward distribution
  model::ProblemInstance inst;
  inst.n_arms = 1;
  inst.d_x = 3;
  inst.d_y = 2;
  inst.sensing.resize(2, 3);
  inst.sensing << 1.0, -0.5, 0.2, 0.3, 0.9, -1.1;
  inst.sigma_x = SymMatrix::Identity(3);
  inst.sigma_y = SymMatrix::Identity(2);
  inst.mu_star.resize(3);
  inst.mu_star << 2.0, -1.0, 0.5;
  inst.gamma_r = 1.0;
  const auto derived = model::derive(inst);

  const int n = 100000;
  MatrixXd yty = MatrixXd::Zero(2, 2);
  VectorXd ytr = VectorXd::Zero(2);
  for (int t = 1; t <= n; ++t) {
    const auto s = model::sample_round(inst, derived.factors, 77, 0,
                                       static_cast<std::uint64_t>(t));
    const VectorXd y = s.observations.row(0).transpose();
    yty += y * y.transpose();
    ytr += y * model::reward(s, 0, inst.mu_star);
  }
  const VectorXd eta_fit = yty.ldlt().solve(ytr);
  CHECK((eta_fit - derived.eta_star).norm() <= 0.05 * derived.eta_star.norm());
}

TEST_CASE("default_instance shape and determinism") {
  const auto inst = model::default_instance(10, 5, 20, 1.0, 42, 3);
  CHECK_NOTHROW(model::validate(inst));
  CHECK(inst.sensing.rows() == 5);
  CHECK(inst.sensing.cols() == 20);
  CHECK(inst.mu_star.norm() == doctest::Approx(std::sqrt(20.0)));

  const auto again = model::default_instance(10, 5, 20, 1.0, 42, 3);
  CHECK(inst.sensing == again.sensing);
  CHECK(inst.mu_star == again.mu_star);

  const auto other_cell = model::default_instance(10, 5, 20, 1.0, 42, 4);
  CHECK(inst.sensing != other_cell.sensing);
}
