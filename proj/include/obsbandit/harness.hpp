#pragma once

// Runs repeated seeded scenarios across (N, d_y) sweep cells, aggregates
// average / worst-case / percentile regret per round, and serializes the
// results. Cells and repetitions carry pre-assigned counter streams, so the
// sweep is deterministic for a fixed master seed no matter how many worker
// threads execute it.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "obsbandit/model.hpp"
#include "obsbandit/policy.hpp"

namespace obsbandit::harness {

struct ExperimentConfig {
  std::vector<long> n_arms_sweep{10, 20, 50};
  std::vector<long> d_y_sweep{5, 20, 50};
  long d_x = 20;
  long horizon = 2000;
  long repetitions = 100;
  double delta = 0.05;
  std::uint64_t master_seed = 20220913;
  // reward-noise std; the default matches the reward scale |mu*| = sqrt(d_x)
  double gamma_r = 5.0;
  double percentile = 0.90;
  long t_eff = 200;
  bool retain_traces = false;
  // redraw sensing/parameter per repetition (cell means then average over
  // instance draws); false pins one instance per cell for paired comparisons
  bool redraw_instances = true;
  int threads = 0;  // 0: hardware concurrency

  // optional row-major instance overrides; empty selects the default
  // instance. Dimensions must match every swept cell.
  std::vector<double> sensing_override;
  std::vector<double> sigma_x_override;
  std::vector<double> sigma_y_override;
  std::vector<double> mu_star_override;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError (or BadDelta) when a field is out of its domain.
void validate(const ExperimentConfig& config);

using SweepKey = std::pair<long, long>;  // (N, d_y)

struct AggregateSeries {
  long n_arms = 0;
  long d_y = 0;
  double percentile_level = 0.90;
  std::vector<double> mean_regret;        // per round, index t-1
  std::vector<double> worst_regret;       // pointwise max over repetitions
  std::vector<double> percentile_regret;  // nearest-rank percentile
  double fitted_envelope_c = 0.0;         // descriptive envelope fit
  Eigen::MatrixXd rep_traces;             // repetitions x T if retained
};

/// Builds the instance of one repetition of a sweep cell: the default
/// instance unless overrides are present. With redraw_instances the draw is
/// keyed by (cell, repetition); otherwise repetition 0 stands for the cell.
model::ProblemInstance instance_for_cell(const ExperimentConfig& config,
                                         long n_arms, long d_y,
                                         std::uint64_t cell_index,
                                         long repetition = 0);

/// Aggregates per-repetition cumulative-regret traces.
AggregateSeries aggregate(long n_arms, long d_y,
                          const std::vector<std::vector<double>>& rep_traces,
                          double percentile, bool retain);

/// Runs the full sweep. Deterministic in the config (including seed).
std::map<SweepKey, AggregateSeries> run_sweep(const ExperimentConfig& config);

/// out[i] = in[i+1] / ln(i+2): the series Regret(t)/ln t for t >= 2.
std::vector<double> normalize(const std::vector<double>& cum_regret);

struct SummaryRow {
  long n_arms = 0;
  long d_y = 0;
  long at_round = 0;
  double mean = 0.0;
  double worst = 0.0;
  double percentile = 0.0;
};

/// One row per sweep cell at the requested round, sorted by (N, d_y).
std::vector<SummaryRow> summarize_final(
    const std::map<SweepKey, AggregateSeries>& sweep, long at_round);

/// CSV serialization. header_comments are emitted as leading '#' lines.
/// Schema: N,d_y,t,mean_regret,worst_regret,p90_regret,mean_normalized,
/// worst_normalized; floats at 10 significant digits; the normalized
/// columns are nan at t=1.
std::string traces_csv(const std::map<SweepKey, AggregateSeries>& sweep,
                       const std::vector<std::string>& header_comments);

/// Schema: N,d_y,at_round,mean,worst,p90.
std::string summary_csv(const std::vector<SummaryRow>& rows,
                        const std::vector<std::string>& header_comments);

/// Writes via a temp file and rename, so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace obsbandit::harness
