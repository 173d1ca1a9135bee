#include "obsbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "obsbandit/analysis.hpp"

namespace obsbandit::harness {

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return std::string(buf);
}

Eigen::MatrixXd matrix_from_row_major(const std::vector<double>& values,
                                      Eigen::Index rows, Eigen::Index cols,
                                      const char* what) {
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw BadDimension(std::string(what) + " override has wrong element count");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
    }
  }
  return m;
}

}  // namespace

void validate(const ExperimentConfig& config) {
  if (config.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (config.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (config.d_x < 1) throw ConfigError("d_x must be >= 1");
  if (config.n_arms_sweep.empty() || config.d_y_sweep.empty()) {
    throw ConfigError("sweep lists must be nonempty");
  }
  for (long n : config.n_arms_sweep) {
    if (n < 1) throw ConfigError("every swept n_arms must be >= 1");
  }
  for (long d : config.d_y_sweep) {
    if (d < 1) throw ConfigError("every swept d_y must be >= 1");
  }
  if (!(config.delta > 0.0) || !(config.delta < 0.25)) {
    throw BadDelta("delta must lie in (0, 0.25)");
  }
  if (!(config.gamma_r > 0.0)) throw ConfigError("gamma_r must be positive");
  if (!(config.percentile > 0.0) || !(config.percentile < 1.0)) {
    throw ConfigError("percentile must lie in (0, 1)");
  }
  if (config.t_eff < 1) throw ConfigError("t_eff must be >= 1");
  if (config.threads < 0) throw ConfigError("threads must be >= 0");
}

model::ProblemInstance instance_for_cell(const ExperimentConfig& config,
                                         long n_arms, long d_y,
                                         std::uint64_t cell_index,
                                         long repetition) {
  const std::uint64_t stream =
      config.redraw_instances
          ? (cell_index << 32) | static_cast<std::uint64_t>(repetition)
          : cell_index;
  model::ProblemInstance inst = model::default_instance(
      n_arms, d_y, config.d_x, config.gamma_r, config.master_seed, stream);
  if (!config.sensing_override.empty()) {
    inst.sensing = matrix_from_row_major(config.sensing_override, d_y,
                                         config.d_x, "sensing");
  }
  if (!config.sigma_x_override.empty()) {
    inst.sigma_x = numkit::SymMatrix(matrix_from_row_major(
        config.sigma_x_override, config.d_x, config.d_x, "sigma_x"));
  }
  if (!config.sigma_y_override.empty()) {
    inst.sigma_y = numkit::SymMatrix(
        matrix_from_row_major(config.sigma_y_override, d_y, d_y, "sigma_y"));
  }
  if (!config.mu_star_override.empty()) {
    if (static_cast<long>(config.mu_star_override.size()) != config.d_x) {
      throw BadDimension("mu_star override has wrong element count");
    }
    inst.mu_star = Eigen::Map<const Eigen::VectorXd>(
        config.mu_star_override.data(),
        static_cast<Eigen::Index>(config.mu_star_override.size()));
  }
  model::validate(inst);
  return inst;
}

AggregateSeries aggregate(long n_arms, long d_y,
                          const std::vector<std::vector<double>>& rep_traces,
                          double percentile, bool retain) {
  AggregateSeries out;
  out.n_arms = n_arms;
  out.d_y = d_y;
  out.percentile_level = percentile;
  if (rep_traces.empty()) return out;

  const std::size_t horizon = rep_traces.front().size();
  const std::size_t reps = rep_traces.size();
  out.mean_regret.assign(horizon, 0.0);
  out.worst_regret.assign(horizon, 0.0);
  out.percentile_regret.assign(horizon, 0.0);

  // nearest-rank percentile: k-th smallest with k = ceil(q * reps)
  const std::size_t rank = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(percentile * static_cast<double>(reps))));

  std::vector<double> column(reps);
  for (std::size_t t = 0; t < horizon; ++t) {
    double sum = 0.0, worst = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double v = rep_traces[r][t];
      column[r] = v;
      sum += v;
      worst = std::max(worst, v);
    }
    out.mean_regret[t] = sum / static_cast<double>(reps);
    out.worst_regret[t] = worst;
    std::nth_element(column.begin(), column.begin() + (rank - 1), column.end());
    out.percentile_regret[t] = column[rank - 1];
  }

  if (retain) {
    out.rep_traces.resize(static_cast<Eigen::Index>(reps),
                          static_cast<Eigen::Index>(horizon));
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t t = 0; t < horizon; ++t) {
        out.rep_traces(static_cast<Eigen::Index>(r),
                       static_cast<Eigen::Index>(t)) = rep_traces[r][t];
      }
    }
  }
  return out;
}

std::map<SweepKey, AggregateSeries> run_sweep(const ExperimentConfig& config) {
  validate(config);

  struct Cell {
    long n_arms;
    long d_y;
    std::uint64_t index;
    model::ProblemInstance rep0_inst;  // repetition-0 instance; shared by
    model::DerivedParams rep0_derived; // every repetition when not redrawing
    std::vector<std::vector<double>> rep_traces;
  };

  std::vector<Cell> cells;
  std::uint64_t cell_index = 0;
  for (long n : config.n_arms_sweep) {
    for (long d : config.d_y_sweep) {
      Cell cell;
      cell.n_arms = n;
      cell.d_y = d;
      cell.index = cell_index++;
      cell.rep0_inst = instance_for_cell(config, n, d, cell.index, 0);
      cell.rep0_derived = model::derive(cell.rep0_inst);
      cell.rep_traces.resize(config.repetitions);
      cells.push_back(std::move(cell));
    }
  }

  struct Task {
    std::size_t cell;
    long rep;
  };
  std::vector<Task> tasks;
  tasks.reserve(cells.size() * config.repetitions);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (long r = 0; r < config.repetitions; ++r) tasks.push_back({c, r});
  }

  const auto run_task = [&](const Task& task) {
    Cell& cell = cells[task.cell];
    policy::ScenarioOptions opts;
    const std::uint64_t scenario =
        (cell.index << 32) | static_cast<std::uint64_t>(task.rep);
    const auto run_one = [&](const model::ProblemInstance& inst,
                             const model::DerivedParams& derived) {
      return policy::run_scenario(inst, derived, opts, config.horizon,
                                  config.master_seed, scenario);
    };
    if (config.redraw_instances && task.rep != 0) {
      const auto inst =
          instance_for_cell(config, cell.n_arms, cell.d_y, cell.index,
                            task.rep);
      const auto derived = model::derive(inst);
      cell.rep_traces[task.rep] = run_one(inst, derived).cum_regret;
    } else {
      cell.rep_traces[task.rep] =
          run_one(cell.rep0_inst, cell.rep0_derived).cum_regret;
    }
  };

  int n_threads = config.threads;
  if (n_threads == 0) {
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
  }
  if (n_threads <= 1 || tasks.size() <= 1) {
    for (const auto& task : tasks) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size();
             i = next.fetch_add(1)) {
          run_task(tasks[i]);
        }
      });
    }
    for (auto& worker : pool) worker.join();
  }

  std::map<SweepKey, AggregateSeries> out;
  for (auto& cell : cells) {
    AggregateSeries series =
        aggregate(cell.n_arms, cell.d_y, cell.rep_traces, config.percentile,
                  config.retain_traces);

    // descriptive envelope fit on a coarse grid of the mean series, with
    // eigenvalue symbols taken from the cell's repetition-0 instance
    const auto constants = analysis::TheoryConstants::compute(
        cell.n_arms, cell.d_y, config.horizon, config.delta);
    std::vector<double> grid, observed;
    for (long frac = 1; frac <= 4; ++frac) {
      const long t = std::max<long>(2, config.horizon * frac / 4);
      if (t <= config.horizon &&
          (grid.empty() || static_cast<long>(grid.back()) != t)) {
        grid.push_back(static_cast<double>(t));
        observed.push_back(series.mean_regret[static_cast<std::size_t>(t - 1)]);
      }
    }
    series.fitted_envelope_c = analysis::fit_envelope_constant(
        grid, observed, constants, cell.rep0_derived);

    out.emplace(SweepKey{cell.n_arms, cell.d_y}, std::move(series));
  }
  return out;
}

std::vector<double> normalize(const std::vector<double>& cum_regret) {
  if (cum_regret.size() < 2) {
    throw TooShort("normalization needs at least two rounds");
  }
  std::vector<double> out(cum_regret.size() - 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = cum_regret[i + 1] / std::log(static_cast<double>(i + 2));
  }
  return out;
}

std::vector<SummaryRow> summarize_final(
    const std::map<SweepKey, AggregateSeries>& sweep, long at_round) {
  std::vector<SummaryRow> rows;
  rows.reserve(sweep.size());
  for (const auto& [key, series] : sweep) {
    if (at_round < 1 ||
        at_round > static_cast<long>(series.mean_regret.size())) {
      throw IndexOutOfRange("summary round exceeds the recorded horizon");
    }
    SummaryRow row;
    row.n_arms = key.first;
    row.d_y = key.second;
    row.at_round = at_round;
    row.mean = series.mean_regret[static_cast<std::size_t>(at_round - 1)];
    row.worst = series.worst_regret[static_cast<std::size_t>(at_round - 1)];
    row.percentile =
        series.percentile_regret[static_cast<std::size_t>(at_round - 1)];
    rows.push_back(row);
  }
  return rows;  // std::map iteration is already (N, d_y) ascending
}

std::string traces_csv(const std::map<SweepKey, AggregateSeries>& sweep,
                       const std::vector<std::string>& header_comments) {
  std::string out;
  for (const auto& comment : header_comments) {
    out += "# " + comment + "\n";
  }
  out += "N,d_y,t,mean_regret,worst_regret,p90_regret,mean_normalized,"
         "worst_normalized\n";
  for (const auto& [key, series] : sweep) {
    const std::size_t horizon = series.mean_regret.size();
    for (std::size_t t = 1; t <= horizon; ++t) {
      const double log_t = std::log(static_cast<double>(t));
      const double mean = series.mean_regret[t - 1];
      const double worst = series.worst_regret[t - 1];
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out += std::to_string(key.first) + "," + std::to_string(key.second) +
             "," + std::to_string(t) + "," + format_double(mean) + "," +
             format_double(worst) + "," +
             format_double(series.percentile_regret[t - 1]) + "," +
             format_double(t >= 2 ? mean / log_t : nan) + "," +
             format_double(t >= 2 ? worst / log_t : nan) + "\n";
    }
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows,
                        const std::vector<std::string>& header_comments) {
  std::string out;
  for (const auto& comment : header_comments) {
    out += "# " + comment + "\n";
  }
  out += "N,d_y,at_round,mean,worst,p90\n";
  for (const auto& row : rows) {
    out += std::to_string(row.n_arms) + "," + std::to_string(row.d_y) + "," +
           std::to_string(row.at_round) + "," + format_double(row.mean) + "," +
           format_double(row.worst) + "," + format_double(row.percentile) +
           "\n";
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream stream(temp, std::ios::binary | std::ios::trunc);
    if (!stream) throw Error("cannot open " + temp.string() + " for writing");
    stream.write(content.data(),
                 static_cast<std::streamsize>(content.size()));
    if (!stream) throw Error("short write to " + temp.string());
  }
  fs::rename(temp, target);
}

}  // namespace obsbandit::harness
