#include "obsbandit/model.hpp"

#include <string>

namespace obsbandit::model {

using numkit::SymMatrix;

const ProblemInstance& validate(const ProblemInstance& inst) {
  if (inst.n_arms < 1 || inst.d_x < 1 || inst.d_y < 1) {
    throw BadDimension("n_arms, d_x and d_y must all be at least 1");
  }
  if (inst.sensing.rows() != inst.d_y || inst.sensing.cols() != inst.d_x) {
    throw BadDimension("sensing matrix must be d_y x d_x, got " +
                       std::to_string(inst.sensing.rows()) + "x" +
                       std::to_string(inst.sensing.cols()));
  }
  if (inst.sigma_x.dim() != inst.d_x) {
    throw BadDimension("sigma_x must be d_x x d_x");
  }
  if (inst.sigma_y.dim() != inst.d_y) {
    throw BadDimension("sigma_y must be d_y x d_y");
  }
  if (inst.mu_star.size() != inst.d_x) {
    throw BadDimension("mu_star must have length d_x");
  }
  if (!numkit::is_psd(inst.sigma_x)) {
    throw NotPsd("sigma_x is not positive semidefinite");
  }
  if (!numkit::is_pd(inst.sigma_y)) {
    throw NotPsd("sigma_y must be strictly positive definite");
  }
  if (!(inst.gamma_r > 0.0)) {
    throw NonPositiveNoise("gamma_r must be positive");
  }
  return inst;
}

SampleFactors make_sample_factors(const ProblemInstance& inst) {
  return SampleFactors{numkit::cholesky(inst.sigma_x), numkit::cholesky(inst.sigma_y)};
}

DerivedParams derive(const ProblemInstance& inst) {
  bool clamped = false;
  numkit::cholesky(inst.sigma_x, &clamped);
  if (clamped) {
    throw NotPsd("sigma_x must be strictly PD: the decoder uses its inverse");
  }

  DerivedParams out;
  const Matrix& a = inst.sensing;

  // Sy^-1 A and Sx^-1 via factor solves; inverses are never materialized
  // beyond these solve results, which the decoder formula itself requires.
  const Matrix sy_inv_a = numkit::solve_spd_matrix(inst.sigma_y, a);
  const Matrix sx_inv = numkit::solve_spd_matrix(
      inst.sigma_x, Matrix::Identity(inst.d_x, inst.d_x));
  const SymMatrix info_mat(Matrix(a.transpose() * sy_inv_a + sx_inv));

  out.decoder = numkit::solve_spd_matrix(info_mat, Matrix(sy_inv_a.transpose()));
  out.eta_star = out.decoder.transpose() * inst.mu_star;
  out.gamma_ry_sq =
      inst.mu_star.dot(numkit::solve_spd(info_mat, inst.mu_star)) +
      inst.gamma_r * inst.gamma_r;

  const SymMatrix a_sx_at(Matrix(a * inst.sigma_x.matrix() * a.transpose()));
  out.s_y = SymMatrix(Matrix(a_sx_at.matrix() + inst.sigma_y.matrix()));
  out.s_y_chol = numkit::cholesky(out.s_y);
  out.whitener = numkit::sym_inv_sqrt(out.s_y);

  const auto es = numkit::eig_extremes(out.s_y);
  out.lambda_s1 = es.lambda_min;
  out.lambda_s2 = es.lambda_max;
  const auto ea = numkit::eig_extremes(a_sx_at);
  out.lambda_a1 = ea.lambda_min;
  out.lambda_a2 = ea.lambda_max;
  const auto ey = numkit::eig_extremes(inst.sigma_y);
  out.lambda_y1 = ey.lambda_min;
  out.lambda_y2 = ey.lambda_max;

  out.factors = make_sample_factors(inst);
  return out;
}

RoundSample sample_round(const ProblemInstance& inst, const SampleFactors& factors,
                         std::uint64_t seed, std::uint64_t scenario,
                         std::uint64_t round) {
  const Eigen::Index n = inst.n_arms;
  RoundSample out;

  rng::Stream ctx_stream(seed, scenario, round, rng::Purpose::kContext);
  Matrix g(inst.d_x, n);
  ctx_stream.fill_normal(g);
  out.contexts = (factors.chol_x * g).transpose();

  rng::Stream obs_stream(seed, scenario, round, rng::Purpose::kObsNoise);
  Matrix h(inst.d_y, n);
  obs_stream.fill_normal(h);
  out.observations =
      out.contexts * inst.sensing.transpose() + (factors.chol_y * h).transpose();

  rng::Stream rew_stream(seed, scenario, round, rng::Purpose::kRewardNoise);
  out.reward_noises.resize(n);
  rew_stream.fill_normal(out.reward_noises);
  out.reward_noises *= inst.gamma_r;

  return out;
}

double reward(const RoundSample& sample, Eigen::Index arm, const Vector& mu_star) {
  if (arm < 0 || arm >= sample.contexts.rows()) {
    throw IndexOutOfRange("arm index out of range");
  }
  return sample.contexts.row(arm).dot(mu_star) + sample.reward_noises(arm);
}

ProblemInstance default_instance(Eigen::Index n_arms, Eigen::Index d_y,
                                 Eigen::Index d_x, double gamma_r,
                                 std::uint64_t seed, std::uint64_t cell) {
  ProblemInstance inst;
  inst.n_arms = n_arms;
  inst.d_x = d_x;
  inst.d_y = d_y;
  inst.sigma_x = numkit::SymMatrix::Identity(d_x);
  inst.sigma_y = numkit::SymMatrix::Identity(d_y);
  inst.gamma_r = gamma_r;

  rng::Stream stream(seed, cell, 0, rng::Purpose::kInstance);
  inst.sensing.resize(d_y, d_x);
  stream.fill_normal(inst.sensing);

  Vector direction(d_x);
  stream.fill_normal(direction);
  double norm = direction.norm();
  while (!(norm > 0)) {  // probability-zero guard
    stream.fill_normal(direction);
    norm = direction.norm();
  }
  inst.mu_star = direction * (std::sqrt(static_cast<double>(d_x)) / norm);
  return inst;
}

}  // namespace obsbandit::model
