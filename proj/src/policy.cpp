#include "obsbandit/policy.hpp"

#include <cassert>

namespace obsbandit::policy {

GreedyState init_state(const numkit::SymMatrix& prior, const Vector& eta_init) {
  if (eta_init.size() != prior.dim()) {
    throw DimensionMismatch("prior and eta_init dimensions differ");
  }
  GreedyState state;
  state.prior_gram = prior;
  state.eta_init = eta_init;
  state.gram = prior.matrix();
  bool clamped = false;
  try {
    state.gram_chol = numkit::cholesky(prior, &clamped);
  } catch (const NotPositiveDefinite&) {
    throw NotPsd("prior gram matrix must be strictly PD");
  }
  if (clamped) {
    throw NotPsd("prior gram matrix must be strictly PD");
  }
  state.eta_hat = eta_init;
  state.round = 1;
  return state;
}

Eigen::Index select_arm(const Matrix& observations, const Vector& eta) {
  if (observations.rows() < 1) {
    throw DimensionMismatch("need at least one arm");
  }
  if (observations.cols() != eta.size()) {
    throw DimensionMismatch("observation/parameter dimension mismatch");
  }
  Eigen::Index best = 0;
  double best_score = observations.row(0).dot(eta);
  for (Eigen::Index i = 1; i < observations.rows(); ++i) {
    const double score = observations.row(i).dot(eta);
    if (score > best_score) {  // strict: ties keep the lowest index
      best_score = score;
      best = i;
    }
  }
  return best;
}

void update(GreedyState& state, const Vector& y_chosen, double r_chosen) {
  if (y_chosen.size() != state.eta_hat.size()) {
    throw DimensionMismatch("observation dimension mismatch in update");
  }
  Vector rhs = state.gram * state.eta_hat + y_chosen * r_chosen;
  state.gram.noalias() += y_chosen * y_chosen.transpose();
  numkit::chol_rank_one_update<double>(state.gram_chol, y_chosen);
  state.eta_hat = numkit::solve_cholesky<double>(state.gram_chol, rhs);
  state.round += 1;
#ifndef NDEBUG
  const double drift = (state.gram_chol * state.gram_chol.transpose() - state.gram)
                           .norm();
  assert(drift <= 1e-8 * (1.0 + state.gram.norm()));
#endif
}

double regret_increment(const model::DerivedParams& derived,
                        const Matrix& observations, Eigen::Index a_star,
                        Eigen::Index a_chosen) {
  if (a_star < 0 || a_star >= observations.rows() || a_chosen < 0 ||
      a_chosen >= observations.rows()) {
    throw IndexOutOfRange("arm index out of range in regret_increment");
  }
  return (observations.row(a_star) - observations.row(a_chosen))
      .dot(derived.eta_star);
}

RegretTrace run_scenario(const model::ProblemInstance& inst,
                         const model::DerivedParams& derived,
                         const ScenarioOptions& options, long horizon,
                         std::uint64_t seed, std::uint64_t scenario) {
  const numkit::SymMatrix prior = options.prior.dim() > 0
                                      ? options.prior
                                      : numkit::SymMatrix::Identity(inst.d_y);
  const Vector eta_init = options.eta_init.size() > 0
                              ? options.eta_init
                              : Vector::Zero(inst.d_y);
  GreedyState state = init_state(prior, eta_init);

  RegretTrace trace;
  trace.cum_regret.reserve(horizon);
  trace.suboptimal_flags.reserve(horizon);
  trace.chosen_arms.reserve(horizon);
  trace.optimal_arms.reserve(horizon);
  if (options.record_whitened_eigmin) trace.whitened_eigmin.reserve(horizon);
  if (options.record_lambda_t) trace.lambda_t.reserve(horizon);
  if (options.record_updates) {
    trace.chosen_observations.resize(horizon, inst.d_y);
    trace.chosen_rewards.resize(horizon);
  }

  double cum = 0.0;
  for (long t = 1; t <= horizon; ++t) {
    if (options.record_whitened_eigmin) {
      const numkit::SymMatrix whitened(
          Matrix(derived.whitener * state.gram * derived.whitener));
      trace.whitened_eigmin.push_back(numkit::eig_extremes(whitened).lambda_min);
    }
    if (options.record_lambda_t) {
      const double eigmin =
          numkit::eig_extremes(numkit::SymMatrix(state.gram)).lambda_min;
      trace.lambda_t.push_back(1.0 / eigmin);
    }

    const model::RoundSample sample =
        model::sample_round(inst, derived.factors, seed, scenario,
                            static_cast<std::uint64_t>(t));
    const Eigen::Index chosen = select_greedy(state, sample.observations);
    const Eigen::Index best = select_optimal(derived, sample.observations);

    cum += regret_increment(derived, sample.observations, best, chosen);
    trace.cum_regret.push_back(cum);
    trace.suboptimal_flags.push_back(chosen != best ? 1 : 0);
    trace.chosen_arms.push_back(chosen);
    trace.optimal_arms.push_back(best);

    const double r = model::reward(sample, chosen, inst.mu_star);
    const Vector y = sample.observations.row(chosen).transpose();
    if (options.record_updates) {
      trace.chosen_observations.row(t - 1) = y.transpose();
      trace.chosen_rewards(t - 1) = r;
    }
    update(state, y, r);
  }
  return trace;
}

}  // namespace obsbandit::policy
