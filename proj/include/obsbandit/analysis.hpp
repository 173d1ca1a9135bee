#pragma once

// Constants of the regret theory and Monte Carlo verifiers for its
// testable identities: the truncation event, the whitened second moment of
// the chosen observation, minimum-eigenvalue growth of the Gram matrix,
// estimator tails, suboptimal-selection probability, the top-two-gap
// density bound, and the weighted indicator sum.
//
// Every verifier returns a BoundReport whose verdict is recomputable from
// the recorded fields alone: holds == (lhs <= rhs * (1 + tolerance)).
// Coverage-style verifiers record the empirical *failure* rate as lhs and
// the allowed failure budget (delta plus sampling slack) as rhs.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "obsbandit/model.hpp"
#include "obsbandit/policy.hpp"
#include "obsbandit/rng.hpp"

namespace obsbandit::analysis {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct BoundReport {
  std::string name;
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  long samples = 0;
  double tolerance = 0.0;
};

/// Builds a report; `holds` is derived from the other fields, never set
/// independently.
BoundReport make_report(std::string name, double lhs, double rhs, long samples,
                        double tolerance);

std::string report_csv_header();
std::string report_csv_row(const BoundReport& report);

/// v_T(delta) = sqrt(2 log(N d_y T / delta)); requires 0 < delta < 0.25.
double truncation_level(long n_arms, long d_y, long horizon, double delta);

/// Theoretical burn-in t* = 128 v_T^4 log(d_y T / delta) + 1.
double burn_in_round(long n_arms, long d_y, long horizon, double delta);

/// k_N = E[(max of N iid standard normals)^2] by deterministic composite
/// Simpson quadrature of x^2 N phi(x) Phi(x)^(N-1), refined to ~1e-10.
double k_n_quadrature(long n_arms);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_err = 0.0;
  long samples = 0;
};

MonteCarloEstimate k_n_estimate(long n_arms, long n_samples, rng::Stream& stream);

struct TheoryConstants {
  long n_arms = 1;
  long d_y = 1;
  long horizon = 1;
  double delta = 0.05;
  double v_t = 0.0;
  double k_n = 1.0;
  double t_star = 0.0;

  static TheoryConstants compute(long n_arms, long d_y, long horizon,
                                 double delta);
};

/// Estimates P(some whitened observation component up to T exceeds v_T)
/// over n_reps full-horizon simulations; the exceedance budget is delta.
BoundReport verify_truncation(const model::ProblemInstance& inst,
                              const model::DerivedParams& derived, long horizon,
                              double delta, long n_reps, std::uint64_t seed);

struct MomentDiagnostics {
  Matrix second_moment;
  double trace_value = 0.0;
  double trace_target = 0.0;
};

/// Accumulates the whitened second moment of the arm selected by a fixed
/// direction eta_hat and compares it in Frobenius norm against
/// P(k_N - 1) + I, with P the projector onto S_y^{1/2} eta_hat.
/// tolerance <= 0 selects the default 0.05 * d_y.
BoundReport verify_conditional_moment(const model::ProblemInstance& inst,
                                      const model::DerivedParams& derived,
                                      const Vector& eta_hat, long n_samples,
                                      std::uint64_t seed, double tolerance = 0.0,
                                      MomentDiagnostics* diag = nullptr);

/// Formal minimum-eigenvalue growth bound. eigmin_trace[t-1] must hold
/// lambda_min(B(t)). Rounds where the bound is vacuous (its right side is
/// nonpositive) are skipped; `samples` records how many rounds were
/// actually checked, so an all-vacuous window is visible in the report.
BoundReport verify_gram_growth(const std::vector<double>& eigmin_trace,
                               const model::DerivedParams& derived,
                               const TheoryConstants& constants);

/// Desk-scale proxy: lambda_min(S_y^{-1/2} B(t) S_y^{-1/2}) >= rate*(t-1)
/// for all t >= t_eff. The expected per-round growth of the whitened Gram
/// matrix is at least 1 in every direction, so rate = 0.5 leaves margin.
BoundReport verify_gram_growth_desk(const std::vector<double>& whitened_eigmin,
                                    long t_eff, double rate = 0.5);

/// Estimator tail bound at fixed B(t): for each epsilon, the exceedance
/// frequency of ||eta_hat - eta_star|| must not exceed
/// 2 exp(-eps^2 / (2 d_y lambda_max(B^-1) gamma_ry^2)) plus 3 binomial
/// standard errors. The recorded lhs/rhs pair is the tightest epsilon.
BoundReport verify_estimator_tail(const std::vector<Vector>& eta_hats,
                                  const Vector& eta_star, double gamma_ry_sq,
                                  double lambda_max_b_inv,
                                  const std::vector<double>& epsilons);

/// Replicates the estimator at a fixed design with B = target_scale * I:
/// prior = prior_scale * I, eta_hat(1) ~ N(eta_star, gamma_ry^2/prior_scale I),
/// then scaled basis-vector observations with conditional-model rewards.
/// The resulting eta_hat is exactly N(eta_star, gamma_ry^2/target_scale I).
std::vector<Vector> fixed_design_snapshots(Eigen::Index d_y, double prior_scale,
                                           double target_scale,
                                           int copies_per_direction,
                                           const Vector& eta_star,
                                           double gamma_ry_sq, long n_replicates,
                                           std::uint64_t seed);

/// Mismatch probability of greedy vs optimal selection when the estimate
/// is drawn from the conditional model with lambda_max(B^-1) = lambda_t.
BoundReport verify_suboptimal_prob(const model::ProblemInstance& inst,
                                   const model::DerivedParams& derived,
                                   const TheoryConstants& constants,
                                   double lambda_t, long n_samples,
                                   std::uint64_t seed);

struct GapDensityDiagnostics {
  std::vector<double> bin_centers;
  std::vector<double> densities;
  std::vector<long> counts;
  double bin_width = 0.0;
};

/// Histogram check that the density of the gap between the top two of N
/// standard normals never exceeds N * phi(0), in bins with >= 100 hits.
BoundReport verify_gap_density(long n_arms, long n_samples, std::uint64_t seed,
                               double tolerance = 0.05,
                               GapDensityDiagnostics* diag = nullptr);

/// Regret envelope C * ((l_a2+l_y2) gamma_ry / (l_a1+l_y1)) * N d_y^{3/2}
/// * log(N d_y T/delta)^{5/2} * log(d_y T/delta), on a grid of horizons.
std::vector<double> regret_envelope(const std::vector<double>& horizon_grid,
                                    const TheoryConstants& constants,
                                    const model::DerivedParams& derived,
                                    double fitted_c);

/// Least-squares fit (through the origin) of the envelope constant against
/// observed regret values on a horizon grid.
double fit_envelope_constant(const std::vector<double>& horizon_grid,
                             const std::vector<double>& observed,
                             const TheoryConstants& constants,
                             const model::DerivedParams& derived);

/// Per-trace weighted indicator sum against the martingale term plus the
/// probability-sum term evaluated at the realized lambda_t. Traces must
/// carry recorded lambda_t. Reports the fraction of failing traces.
BoundReport verify_indicator_sum(const std::vector<policy::RegretTrace>& traces,
                                 const TheoryConstants& constants,
                                 const model::DerivedParams& derived,
                                 long t_eff);

}  // namespace obsbandit::analysis
