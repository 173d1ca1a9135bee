#pragma once

// The Greedy policy: act as if the current least-squares estimate of the
// transformed parameter were the truth. State is the regularized Gram
// matrix of chosen observations plus the running estimate, updated by
// rank-one recursions; the estimate update solves against a maintained
// Cholesky factor, never an explicit inverse.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "obsbandit/model.hpp"
#include "obsbandit/numkit.hpp"

namespace obsbandit::policy {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sufficient statistics of the recursive least-squares estimator.
/// gram == prior_gram + sum of y y^T over applied updates, and
/// gram * eta_hat == prior_gram * eta_init + sum of y r (normal equations).
struct GreedyState {
  numkit::SymMatrix prior_gram;  // B(1), a PD prior
  Vector eta_init;               // eta_hat(1)
  Matrix gram;                   // dense B(t)
  Matrix gram_chol;              // lower factor of B(t), rank-one updated
  Vector eta_hat;
  long round = 1;                // t; gram holds t-1 rank-one terms
};

GreedyState init_state(const numkit::SymMatrix& prior, const Vector& eta_init);

/// argmax_i observations.row(i) . eta, lowest index on ties.
Eigen::Index select_arm(const Matrix& observations, const Vector& eta);

inline Eigen::Index select_greedy(const GreedyState& state,
                                  const Matrix& observations) {
  return select_arm(observations, state.eta_hat);
}

inline Eigen::Index select_optimal(const model::DerivedParams& derived,
                                   const Matrix& observations) {
  return select_arm(observations, derived.eta_star);
}

/// Applies one observation/reward pair: gram += y y^T, then eta_hat solves
/// gram' eta = gram eta_hat + y r against the updated factor.
void update(GreedyState& state, const Vector& y_chosen, double r_chosen);

/// Conditional expected-reward gap (y_best - y_chosen) . eta_star.
double regret_increment(const model::DerivedParams& derived,
                        const Matrix& observations, Eigen::Index a_star,
                        Eigen::Index a_chosen);

struct ScenarioOptions {
  numkit::SymMatrix prior;  // empty -> identity
  Vector eta_init;          // empty -> zero
  bool record_whitened_eigmin = false;  // lambda_min(W B(t) W) per round
  bool record_lambda_t = false;         // lambda_max(B(t)^-1) per round
  bool record_updates = false;          // chosen observations and rewards
};

/// Per-round record of one scenario.
struct RegretTrace {
  std::vector<double> cum_regret;      // index t-1 <-> round t
  std::vector<std::uint8_t> suboptimal_flags;
  std::vector<Eigen::Index> chosen_arms;
  std::vector<Eigen::Index> optimal_arms;
  std::vector<double> whitened_eigmin;  // if recorded; value for B(t) before
  std::vector<double> lambda_t;         // the round-t update
  Matrix chosen_observations;           // if recorded, T x d_y
  Vector chosen_rewards;
};

/// Runs one scenario: sample a round, pick the greedy arm, realize its
/// reward, update, and account regret against the clairvoyant selection.
/// Deterministic in (seed, scenario).
RegretTrace run_scenario(const model::ProblemInstance& inst,
                         const model::DerivedParams& derived,
                         const ScenarioOptions& options, long horizon,
                         std::uint64_t seed, std::uint64_t scenario);

}  // namespace obsbandit::policy
