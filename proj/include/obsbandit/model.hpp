#pragma once

// The bandit environment. Arms carry latent contexts x ~ N(0, Sigma_x);
// the policy sees only y = A x + zeta with zeta ~ N(0, Sigma_y), and the
// reward of the chosen arm is x^T mu_star + psi with psi ~ N(0, gamma_r^2).
// Conditionally on y the reward is N(y^T eta_star, gamma_ry^2) with
// eta_star = D^T mu_star, which is what the policy estimates.

#include <Eigen/Dense>
#include <cstdint>

#include "obsbandit/numkit.hpp"
#include "obsbandit/rng.hpp"

namespace obsbandit::model {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Full generative specification of one environment.
struct ProblemInstance {
  Eigen::Index n_arms = 0;
  Eigen::Index d_x = 0;
  Eigen::Index d_y = 0;
  Matrix sensing;               // d_y x d_x
  numkit::SymMatrix sigma_x;    // d_x, PSD
  numkit::SymMatrix sigma_y;    // d_y, PD
  Vector mu_star;               // d_x
  double gamma_r = 1.0;
};

/// Cholesky factors needed to sample contexts and observation noise.
/// Tolerates semidefinite covariances (a zero factor just means no noise).
struct SampleFactors {
  Matrix chol_x;  // lower, Sigma_x = chol_x chol_x^T
  Matrix chol_y;
};

/// Quantities computed once per instance.
struct DerivedParams {
  numkit::SymMatrix s_y;   // A Sigma_x A^T + Sigma_y
  Matrix decoder;          // D = (A^T Sy^-1 A + Sx^-1)^-1 A^T Sy^-1, d_x x d_y
  Vector eta_star;         // D^T mu_star
  double gamma_ry_sq = 0;  // conditional reward variance
  Matrix s_y_chol;         // lower factor of s_y
  Matrix whitener;         // s_y^{-1/2}, symmetric
  double lambda_s1 = 0, lambda_s2 = 0;  // eigen extremes of s_y
  double lambda_a1 = 0, lambda_a2 = 0;  // of A Sigma_x A^T
  double lambda_y1 = 0, lambda_y2 = 0;  // of Sigma_y
  SampleFactors factors;
};

/// One round of draws for all arms. Rows are arms.
struct RoundSample {
  Matrix contexts;       // N x d_x
  Matrix observations;   // N x d_y
  Vector reward_noises;  // N
};

/// Checks dimensions and definiteness; throws BadDimension, NotPsd or
/// NonPositiveNoise. Returns its argument for chaining.
const ProblemInstance& validate(const ProblemInstance& inst);

/// Computes the conditional-reward parameters and eigenvalue symbols.
/// Requires Sigma_x strictly PD (its inverse enters the decoder).
DerivedParams derive(const ProblemInstance& inst);

/// Factors for sampling only; works for semidefinite covariances.
SampleFactors make_sample_factors(const ProblemInstance& inst);

/// Draws contexts, observations and reward noises for every arm of one
/// round. Deterministic in (seed, scenario, round).
RoundSample sample_round(const ProblemInstance& inst, const SampleFactors& factors,
                         std::uint64_t seed, std::uint64_t scenario,
                         std::uint64_t round);

inline RoundSample sample_round(const ProblemInstance& inst,
                                const DerivedParams& derived, std::uint64_t seed,
                                std::uint64_t scenario, std::uint64_t round) {
  return sample_round(inst, derived.factors, seed, scenario, round);
}

/// Realized reward of one arm: contexts.row(arm) * mu_star + noise.
double reward(const RoundSample& sample, Eigen::Index arm, const Vector& mu_star);

/// The default experiment instance: Sigma_x = I, Sigma_y = I, gamma_r as
/// given, sensing entries iid N(0,1) and mu_star uniform on the sphere of
/// radius sqrt(d_x), both drawn from the (seed, cell) instance stream and
/// then held fixed.
ProblemInstance default_instance(Eigen::Index n_arms, Eigen::Index d_y,
                                 Eigen::Index d_x, double gamma_r,
                                 std::uint64_t seed, std::uint64_t cell);

}  // namespace obsbandit::model
