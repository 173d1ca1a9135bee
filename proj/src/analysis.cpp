#include "obsbandit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace obsbandit::analysis {

namespace {

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void check_theory_args(long n_arms, long d_y, long horizon, double delta) {
  if (n_arms < 1 || d_y < 1 || horizon < 1) {
    throw BadRange("n_arms, d_y and horizon must be at least 1");
  }
  if (!(delta > 0.0) || !(delta < 0.25)) {
    throw BadDelta("delta must lie in (0, 0.25)");
  }
}

double binomial_std_err(double p, long n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

/// Suboptimal-selection probability bound at a given lambda_t, clipped at 1.
double mismatch_bound(const model::DerivedParams& derived,
                      const TheoryConstants& constants, double lambda_t) {
  const double signal =
      derived.eta_star.dot(derived.s_y.matrix() * derived.eta_star);
  if (!(signal > 0.0)) return 1.0;  // vacuous without signal
  const double raw = 2.0 * static_cast<double>(constants.n_arms) *
                     std::sqrt(derived.lambda_s2) *
                     static_cast<double>(constants.d_y) * constants.v_t *
                     std::sqrt(derived.gamma_ry_sq) * std::sqrt(lambda_t) /
                     std::sqrt(signal);
  return std::min(1.0, raw);
}

}  // namespace

BoundReport make_report(std::string name, double lhs, double rhs, long samples,
                        double tolerance) {
  BoundReport report;
  report.name = std::move(name);
  report.lhs = lhs;
  report.rhs = rhs;
  report.samples = samples;
  report.tolerance = tolerance;
  report.holds = lhs <= rhs * (1.0 + tolerance);
  return report;
}

std::string report_csv_header() { return "name,holds,lhs,rhs,samples,tolerance"; }

std::string report_csv_row(const BoundReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%.10g,%ld,%.10g",
                report.name.c_str(), report.holds ? "true" : "false", report.lhs,
                report.rhs, report.samples, report.tolerance);
  return std::string(buf);
}

double truncation_level(long n_arms, long d_y, long horizon, double delta) {
  check_theory_args(n_arms, d_y, horizon, delta);
  const double ratio = static_cast<double>(n_arms) * static_cast<double>(d_y) *
                       static_cast<double>(horizon) / delta;
  return std::sqrt(2.0 * std::log(ratio));
}

double burn_in_round(long n_arms, long d_y, long horizon, double delta) {
  const double v = truncation_level(n_arms, d_y, horizon, delta);
  const double log_term =
      std::log(static_cast<double>(d_y) * static_cast<double>(horizon) / delta);
  return 128.0 * v * v * v * v * log_term + 1.0;
}

double k_n_quadrature(long n_arms) {
  if (n_arms < 1) throw BadRange("n_arms must be at least 1");
  const double n = static_cast<double>(n_arms);
  const auto integrand = [n](double x) {
    const double cdf = normal_cdf(x);
    return x * x * n * normal_pdf(x) * std::pow(cdf, n - 1.0);
  };
  // Composite Simpson on [-12, 12], panels doubled until two consecutive
  // refinements agree to 1e-10.
  const double lo = -12.0, hi = 12.0;
  long panels = 128;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int iter = 0; iter < 16; ++iter) {
    const double h = (hi - lo) / static_cast<double>(panels);
    double sum = integrand(lo) + integrand(hi);
    for (long i = 1; i < panels; ++i) {
      sum += integrand(lo + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    const double value = sum * h / 3.0;
    if (iter > 0 && std::abs(value - previous) < 1e-10) return value;
    previous = value;
    panels *= 2;
  }
  throw NonConvergence("k_N quadrature did not stabilize");
}

MonteCarloEstimate k_n_estimate(long n_arms, long n_samples, rng::Stream& stream) {
  if (n_arms < 1) throw BadRange("n_arms must be at least 1");
  double sum = 0.0, sum_sq = 0.0;
  for (long s = 0; s < n_samples; ++s) {
    double max_z = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n_arms; ++i) max_z = std::max(max_z, stream.next_normal());
    const double m2 = max_z * max_z;
    sum += m2;
    sum_sq += m2 * m2;
  }
  const double n = static_cast<double>(n_samples);
  MonteCarloEstimate est;
  est.estimate = sum / n;
  const double var = std::max(sum_sq / n - est.estimate * est.estimate, 0.0);
  est.std_err = std::sqrt(var / n);
  est.samples = n_samples;
  return est;
}

TheoryConstants TheoryConstants::compute(long n_arms, long d_y, long horizon,
                                         double delta) {
  TheoryConstants c;
  c.n_arms = n_arms;
  c.d_y = d_y;
  c.horizon = horizon;
  c.delta = delta;
  c.v_t = truncation_level(n_arms, d_y, horizon, delta);
  c.k_n = k_n_quadrature(n_arms);
  c.t_star = burn_in_round(n_arms, d_y, horizon, delta);
  return c;
}

BoundReport verify_truncation(const model::ProblemInstance& inst,
                              const model::DerivedParams& derived, long horizon,
                              double delta, long n_reps, std::uint64_t seed) {
  const double v = truncation_level(inst.n_arms, inst.d_y, horizon, delta);
  long failures = 0;
  for (long rep = 0; rep < n_reps; ++rep) {
    bool exceeded = false;
    for (long t = 1; t <= horizon && !exceeded; ++t) {
      const auto sample =
          model::sample_round(inst, derived.factors, seed,
                              static_cast<std::uint64_t>(rep),
                              static_cast<std::uint64_t>(t));
      const Matrix whitened = derived.whitener * sample.observations.transpose();
      exceeded = whitened.cwiseAbs().maxCoeff() > v;
    }
    if (exceeded) ++failures;
  }
  const double fail_rate = static_cast<double>(failures) / static_cast<double>(n_reps);
  const double se = binomial_std_err(fail_rate, n_reps);
  return make_report("truncation", fail_rate, delta + 2.0 * se, n_reps, 0.0);
}

BoundReport verify_conditional_moment(const model::ProblemInstance& inst,
                                      const model::DerivedParams& derived,
                                      const Vector& eta_hat, long n_samples,
                                      std::uint64_t seed, double tolerance,
                                      MomentDiagnostics* diag) {
  if (!(eta_hat.norm() > 0.0)) {
    throw ZeroDirection("conditional-moment verifier needs eta_hat != 0");
  }
  const Eigen::Index d_y = inst.d_y;
  Matrix accum = Matrix::Zero(d_y, d_y);
  for (long s = 1; s <= n_samples; ++s) {
    const auto sample =
        model::sample_round(inst, derived.factors, seed, 0,
                            static_cast<std::uint64_t>(s));
    const Eigen::Index arm = policy::select_arm(sample.observations, eta_hat);
    const Vector w = derived.whitener * sample.observations.row(arm).transpose();
    accum.noalias() += w * w.transpose();
  }
  accum /= static_cast<double>(n_samples);

  const double k_n = k_n_quadrature(inst.n_arms);
  // projector direction is S_y^{1/2} eta_hat = S_y * (S_y^{-1/2} eta_hat)
  const Vector direction = derived.s_y.matrix() * (derived.whitener * eta_hat);
  const numkit::Projection proj(direction);
  const Matrix target =
      proj.matrix() * (k_n - 1.0) + Matrix::Identity(d_y, d_y);

  if (diag != nullptr) {
    diag->second_moment = accum;
    diag->trace_value = accum.trace();
    diag->trace_target = static_cast<double>(d_y) + (k_n - 1.0);
  }
  const double allowed =
      tolerance > 0.0 ? tolerance : 0.05 * static_cast<double>(d_y);
  return make_report("conditional_moment", (accum - target).norm(), allowed,
                     n_samples, 0.0);
}

BoundReport verify_gram_growth(const std::vector<double>& eigmin_trace,
                               const model::DerivedParams& derived,
                               const TheoryConstants& constants) {
  const double log_term = std::log(static_cast<double>(constants.d_y) *
                                   static_cast<double>(constants.horizon) /
                                   constants.delta);
  const double v4 = std::pow(constants.v_t, 4.0);
  double worst_violation = 0.0;
  long checked = 0;
  for (std::size_t idx = 0; idx < eigmin_trace.size(); ++idx) {
    const double t = static_cast<double>(idx + 1);
    if (t < 2.0) continue;
    const double radical = std::sqrt(32.0 * v4 * log_term / (t - 1.0));
    if (radical >= 1.0) continue;  // vacuous: right side nonpositive
    const double bound = derived.lambda_s1 * (t - 1.0) * (1.0 - radical);
    worst_violation = std::max(worst_violation, bound - eigmin_trace[idx]);
    ++checked;
  }
  return make_report("gram_growth", worst_violation, 0.0, checked, 0.0);
}

BoundReport verify_gram_growth_desk(const std::vector<double>& whitened_eigmin,
                                    long t_eff, double rate) {
  double worst_violation = 0.0;
  long checked = 0;
  for (std::size_t idx = 0; idx < whitened_eigmin.size(); ++idx) {
    const long t = static_cast<long>(idx) + 1;
    if (t < t_eff) continue;
    const double bound = rate * static_cast<double>(t - 1);
    worst_violation = std::max(worst_violation, bound - whitened_eigmin[idx]);
    ++checked;
  }
  return make_report("gram_growth_desk", worst_violation, 0.0, checked, 0.0);
}

BoundReport verify_estimator_tail(const std::vector<Vector>& eta_hats,
                                  const Vector& eta_star, double gamma_ry_sq,
                                  double lambda_max_b_inv,
                                  const std::vector<double>& epsilons) {
  const long n = static_cast<long>(eta_hats.size());
  if (n < 1000) {
    throw InsufficientReplicates("estimator-tail verifier needs >= 1000 replicates");
  }
  const double d_y = static_cast<double>(eta_star.size());
  std::vector<double> errors(eta_hats.size());
  for (std::size_t i = 0; i < eta_hats.size(); ++i) {
    errors[i] = (eta_hats[i] - eta_star).norm();
  }
  double worst_margin = -std::numeric_limits<double>::infinity();
  double worst_lhs = 0.0, worst_rhs = 2.0;
  for (const double eps : epsilons) {
    long exceed = 0;
    for (const double e : errors) exceed += e > eps ? 1 : 0;
    const double freq = static_cast<double>(exceed) / static_cast<double>(n);
    const double bound = 2.0 * std::exp(-eps * eps / (2.0 * d_y *
                                                      lambda_max_b_inv *
                                                      gamma_ry_sq));
    const double rhs = bound + 3.0 * binomial_std_err(freq, n);
    if (freq - rhs > worst_margin) {
      worst_margin = freq - rhs;
      worst_lhs = freq;
      worst_rhs = rhs;
    }
  }
  return make_report("estimator_tail", worst_lhs, worst_rhs, n, 0.0);
}

std::vector<Vector> fixed_design_snapshots(Eigen::Index d_y, double prior_scale,
                                           double target_scale,
                                           int copies_per_direction,
                                           const Vector& eta_star,
                                           double gamma_ry_sq, long n_replicates,
                                           std::uint64_t seed) {
  if (!(target_scale > prior_scale) || !(prior_scale > 0.0)) {
    throw BadRange("need 0 < prior_scale < target_scale");
  }
  const double gamma_ry = std::sqrt(gamma_ry_sq);
  const double step = std::sqrt((target_scale - prior_scale) /
                                static_cast<double>(copies_per_direction));
  const numkit::SymMatrix prior(
      Matrix(prior_scale * Matrix::Identity(d_y, d_y)));

  std::vector<Vector> snapshots;
  snapshots.reserve(n_replicates);
  for (long rep = 0; rep < n_replicates; ++rep) {
    rng::Stream stream(seed, static_cast<std::uint64_t>(rep), 0,
                       rng::Purpose::kInitDraw);
    Vector g(d_y);
    stream.fill_normal(g);
    // randomized initialization makes Cov(eta_hat) = gamma_ry^2 B^-1 exact
    const Vector eta_init = eta_star + (gamma_ry / std::sqrt(prior_scale)) * g;
    auto state = policy::init_state(prior, eta_init);
    for (int copy = 0; copy < copies_per_direction; ++copy) {
      for (Eigen::Index j = 0; j < d_y; ++j) {
        Vector y = Vector::Zero(d_y);
        y(j) = step;
        const double r = y.dot(eta_star) + gamma_ry * stream.next_normal();
        policy::update(state, y, r);
      }
    }
    snapshots.push_back(state.eta_hat);
  }
  return snapshots;
}

BoundReport verify_suboptimal_prob(const model::ProblemInstance& inst,
                                   const model::DerivedParams& derived,
                                   const TheoryConstants& constants,
                                   double lambda_t, long n_samples,
                                   std::uint64_t seed) {
  const double signal =
      derived.eta_star.dot(derived.s_y.matrix() * derived.eta_star);
  if (!(signal > 0.0)) {
    throw ZeroSignal("suboptimal-arm bound needs eta_star^T S_y eta_star > 0");
  }
  const double gamma_ry = std::sqrt(derived.gamma_ry_sq);
  const double noise_scale = std::sqrt(lambda_t) * gamma_ry;
  rng::Stream estimator_stream(seed, 1, 0, rng::Purpose::kInitDraw);
  long mismatches = 0;
  Vector g(inst.d_y);
  for (long s = 1; s <= n_samples; ++s) {
    const auto sample = model::sample_round(inst, derived.factors, seed, 0,
                                            static_cast<std::uint64_t>(s));
    estimator_stream.fill_normal(g);
    const Vector eta_draw = derived.eta_star + noise_scale * g;
    const Eigen::Index best = policy::select_arm(sample.observations,
                                                 derived.eta_star);
    const Eigen::Index chosen = policy::select_arm(sample.observations, eta_draw);
    if (best != chosen) ++mismatches;
  }
  const double freq =
      static_cast<double>(mismatches) / static_cast<double>(n_samples);
  const double bound = mismatch_bound(derived, constants, lambda_t);
  const double rhs = bound + 3.0 * binomial_std_err(freq, n_samples);
  return make_report("suboptimal_prob", freq, rhs, n_samples, 0.0);
}

BoundReport verify_gap_density(long n_arms, long n_samples, std::uint64_t seed,
                               double tolerance, GapDensityDiagnostics* diag) {
  if (n_arms < 2) throw BadRange("gap density needs at least two arms");
  const double bin_width = 0.05;
  const double range_max = 12.0;
  const long n_bins = static_cast<long>(range_max / bin_width);
  std::vector<long> counts(n_bins, 0);

  rng::Stream stream(seed, 0, 0, rng::Purpose::kMonteCarlo);
  for (long s = 0; s < n_samples; ++s) {
    double top = -std::numeric_limits<double>::infinity();
    double second = top;
    for (long i = 0; i < n_arms; ++i) {
      const double z = stream.next_normal();
      if (z > top) {
        second = top;
        top = z;
      } else if (z > second) {
        second = z;
      }
    }
    const double gap = top - second;
    const long bin = static_cast<long>(gap / bin_width);
    if (bin >= 0 && bin < n_bins) ++counts[bin];
  }

  const double scale = static_cast<double>(n_samples) * bin_width;
  double max_density = 0.0;
  for (long b = 0; b < n_bins; ++b) {
    if (counts[b] < 100) continue;  // too few hits for a density estimate
    max_density = std::max(max_density, static_cast<double>(counts[b]) / scale);
  }
  if (diag != nullptr) {
    diag->bin_width = bin_width;
    diag->bin_centers.resize(n_bins);
    diag->densities.resize(n_bins);
    diag->counts = counts;
    for (long b = 0; b < n_bins; ++b) {
      diag->bin_centers[b] = (static_cast<double>(b) + 0.5) * bin_width;
      diag->densities[b] = static_cast<double>(counts[b]) / scale;
    }
  }
  const double bound = static_cast<double>(n_arms) * normal_pdf(0.0);
  return make_report("gap_density", max_density, bound, n_samples, tolerance);
}

std::vector<double> regret_envelope(const std::vector<double>& horizon_grid,
                                    const TheoryConstants& constants,
                                    const model::DerivedParams& derived,
                                    double fitted_c) {
  const double shape_const =
      (derived.lambda_a2 + derived.lambda_y2) * std::sqrt(derived.gamma_ry_sq) /
      (derived.lambda_a1 + derived.lambda_y1);
  const double n = static_cast<double>(constants.n_arms);
  const double d_y = static_cast<double>(constants.d_y);
  std::vector<double> out;
  out.reserve(horizon_grid.size());
  for (const double t : horizon_grid) {
    const double log_all = std::log(n * d_y * t / constants.delta);
    const double log_dy = std::log(d_y * t / constants.delta);
    out.push_back(fitted_c * shape_const * n * std::pow(d_y, 1.5) *
                  std::pow(log_all, 2.5) * log_dy);
  }
  return out;
}

double fit_envelope_constant(const std::vector<double>& horizon_grid,
                             const std::vector<double>& observed,
                             const TheoryConstants& constants,
                             const model::DerivedParams& derived) {
  if (horizon_grid.size() != observed.size() || horizon_grid.empty()) {
    throw DimensionMismatch("grid and observations must match and be nonempty");
  }
  const std::vector<double> shape =
      regret_envelope(horizon_grid, constants, derived, 1.0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    num += shape[i] * observed[i];
    den += shape[i] * shape[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

BoundReport verify_indicator_sum(const std::vector<policy::RegretTrace>& traces,
                                 const TheoryConstants& constants,
                                 const model::DerivedParams& derived,
                                 long t_eff) {
  const double t_total = static_cast<double>(constants.horizon);
  const double martingale_term =
      std::sqrt(32.0 * std::log(t_total) * std::log(t_total / constants.delta));
  long satisfied = 0;
  for (const auto& trace : traces) {
    if (trace.lambda_t.size() != trace.suboptimal_flags.size()) {
      throw Error("indicator-sum verifier needs traces with recorded lambda_t");
    }
    double lhs = 0.0, prob_sum = 0.0;
    for (std::size_t idx = 0; idx < trace.suboptimal_flags.size(); ++idx) {
      const long t = static_cast<long>(idx) + 1;
      if (t < std::max<long>(2, t_eff)) continue;
      const double weight = 1.0 / std::sqrt(static_cast<double>(t - 1));
      lhs += weight * static_cast<double>(trace.suboptimal_flags[idx]);
      prob_sum +=
          weight * mismatch_bound(derived, constants, trace.lambda_t[idx]);
    }
    if (lhs <= martingale_term + prob_sum) ++satisfied;
  }
  const long n = static_cast<long>(traces.size());
  const double frac = static_cast<double>(satisfied) / static_cast<double>(n);
  const double fail_rate = 1.0 - frac;
  const double se = binomial_std_err(frac, n);
  return make_report("indicator_sum", fail_rate, constants.delta + 2.0 * se, n,
                     0.0);
}

}  // namespace obsbandit::analysis
