#include "obsbandit/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "obsbandit/analysis.hpp"
#include "obsbandit/config.hpp"
#include "obsbandit/harness.hpp"
#include "obsbandit/model.hpp"
#include "obsbandit/policy.hpp"
#include "obsbandit/svg.hpp"

namespace obsbandit::cli {

namespace {

constexpr std::uint64_t kVerifyInstanceCell = 9001;

const std::vector<std::string> kVerifierNames = {
    "truncation",     "conditional_moment", "gram_growth", "estimator_tail",
    "suboptimal_prob", "gap_density",        "indicator_sum"};

std::vector<std::string> config_comments(const config::Resolved& resolved) {
  const auto& exp = resolved.experiment;
  std::vector<std::string> comments;
  comments.push_back("fingerprint = " + config::fingerprint(resolved));
  comments.push_back("seed = " + std::to_string(exp.master_seed));
  comments.push_back("horizon = " + std::to_string(exp.horizon));
  comments.push_back("repetitions = " + std::to_string(exp.repetitions));
  comments.push_back("d_x = " + std::to_string(exp.d_x));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "gamma_r = %.10g", exp.gamma_r);
  comments.push_back(buf);
  std::snprintf(buf, sizeof(buf), "delta = %.10g", exp.delta);
  comments.push_back(buf);
  std::snprintf(buf, sizeof(buf), "percentile = %.10g", exp.percentile);
  comments.push_back(buf);
  comments.push_back(
      "instance = sigma_x:I sigma_y:I sensing:N(0,1) mu_star:sphere" +
      std::string(exp.sensing_override.empty() ? "" : " (sensing overridden)"));
  comments.push_back(std::string("redraw_instances = ") +
                     (exp.redraw_instances ? "true" : "false"));
  return comments;
}

int cmd_run(const config::Resolved& resolved) {
  const auto& out = resolved.output;
  const std::filesystem::path dir(out.dir);

  harness::write_file_atomic((dir / out.echo).string(),
                             config::render(resolved));

  const auto sweep = harness::run_sweep(resolved.experiment);
  const auto comments = config_comments(resolved);
  harness::write_file_atomic((dir / out.traces).string(),
                             harness::traces_csv(sweep, comments));
  const auto rows =
      harness::summarize_final(sweep, resolved.experiment.horizon);
  harness::write_file_atomic((dir / out.summary).string(),
                             harness::summary_csv(rows, comments));

  for (const auto& [key, series] : sweep) {
    std::printf(
        "cell N=%ld d_y=%ld: mean=%.4f worst=%.4f p%.0f=%.4f envelope_C=%.3e\n",
        key.first, key.second, series.mean_regret.back(),
        series.worst_regret.back(), 100.0 * series.percentile_level,
        series.percentile_regret.back(), series.fitted_envelope_c);
  }
  std::printf("wrote %s, %s, %s\n", (dir / out.traces).string().c_str(),
              (dir / out.summary).string().c_str(),
              (dir / out.echo).string().c_str());
  return 0;
}

struct ScenarioBatch {
  std::vector<policy::RegretTrace> traces;
};

ScenarioBatch run_verify_scenarios(const config::Resolved& resolved,
                                   const model::ProblemInstance& inst,
                                   const model::DerivedParams& derived) {
  const auto& ver = resolved.verify;
  policy::ScenarioOptions opts;
  opts.record_whitened_eigmin = true;
  opts.record_lambda_t = true;
  ScenarioBatch batch;
  batch.traces.reserve(ver.scenarios);
  for (long s = 0; s < ver.scenarios; ++s) {
    batch.traces.push_back(policy::run_scenario(
        inst, derived, opts, ver.scenario_horizon,
        resolved.experiment.master_seed + 3,
        static_cast<std::uint64_t>(s)));
  }
  return batch;
}

int cmd_verify(const config::Resolved& resolved, const std::string& which) {
  const auto& exp = resolved.experiment;
  const auto& ver = resolved.verify;

  std::vector<std::string> selected;
  for (const auto& token : [&] {
         std::vector<std::string> tokens;
         std::string tok;
         std::istringstream stream(which);
         while (std::getline(stream, tok, ',')) {
           if (!tok.empty()) tokens.push_back(tok);
         }
         return tokens;
       }()) {
    if (token == "all") {
      selected = kVerifierNames;
      break;
    }
    if (std::find(kVerifierNames.begin(), kVerifierNames.end(), token) ==
        kVerifierNames.end()) {
      throw ConfigError("unknown verifier '" + token + "'");
    }
    selected.push_back(token);
  }
  if (selected.empty()) {
    throw ConfigError("no verifier selected; use --which <names|all>");
  }

  const auto inst = model::default_instance(
      ver.n_arms, ver.d_y, exp.d_x, exp.gamma_r, exp.master_seed,
      kVerifyInstanceCell);
  const auto derived = model::derive(inst);

  std::optional<ScenarioBatch> batch;
  const auto scenario_batch = [&]() -> const ScenarioBatch& {
    if (!batch) batch = run_verify_scenarios(resolved, inst, derived);
    return *batch;
  };

  std::vector<analysis::BoundReport> reports;
  for (const auto& name : selected) {
    if (name == "truncation") {
      reports.push_back(analysis::verify_truncation(
          inst, derived, ver.horizon, exp.delta, ver.reps,
          exp.master_seed + 1));
    } else if (name == "conditional_moment") {
      Eigen::VectorXd direction = derived.eta_star;
      if (!(direction.norm() > 0.0)) {
        direction = Eigen::VectorXd::Zero(inst.d_y);
        direction(0) = 1.0;
      }
      reports.push_back(analysis::verify_conditional_moment(
          inst, derived, direction, ver.samples, exp.master_seed + 2));
    } else if (name == "gram_growth") {
      const auto constants = analysis::TheoryConstants::compute(
          ver.n_arms, ver.d_y, ver.scenario_horizon, exp.delta);
      double formal_lhs = 0.0, desk_lhs = 0.0;
      long formal_checked = 0, desk_checked = 0;
      for (const auto& trace : scenario_batch().traces) {
        std::vector<double> eigmin(trace.lambda_t.size());
        for (std::size_t i = 0; i < eigmin.size(); ++i) {
          eigmin[i] = 1.0 / trace.lambda_t[i];
        }
        const auto formal =
            analysis::verify_gram_growth(eigmin, derived, constants);
        formal_lhs = std::max(formal_lhs, formal.lhs);
        formal_checked += formal.samples;
        const auto desk = analysis::verify_gram_growth_desk(
            trace.whitened_eigmin, exp.t_eff, ver.growth_rate);
        desk_lhs = std::max(desk_lhs, desk.lhs);
        desk_checked += desk.samples;
      }
      reports.push_back(analysis::make_report("gram_growth", formal_lhs, 0.0,
                                              formal_checked, 0.0));
      reports.push_back(analysis::make_report("gram_growth_desk", desk_lhs,
                                              0.0, desk_checked, 0.0));
    } else if (name == "estimator_tail") {
      const double sigma_sq =
          static_cast<double>(ver.d_y) * derived.gamma_ry_sq /
          ver.target_scale;
      std::vector<double> eps;
      for (double f : {0.5, 1.0, 2.0}) eps.push_back(f * std::sqrt(sigma_sq));
      const auto snaps = analysis::fixed_design_snapshots(
          ver.d_y, ver.prior_scale, ver.target_scale, 4, derived.eta_star,
          derived.gamma_ry_sq, ver.tail_replicates, exp.master_seed + 4);
      reports.push_back(analysis::verify_estimator_tail(
          snaps, derived.eta_star, derived.gamma_ry_sq,
          1.0 / ver.target_scale, eps));
    } else if (name == "suboptimal_prob") {
      const auto constants = analysis::TheoryConstants::compute(
          ver.n_arms, ver.d_y, ver.horizon, exp.delta);
      reports.push_back(analysis::verify_suboptimal_prob(
          inst, derived, constants, ver.lambda_t, ver.samples,
          exp.master_seed + 5));
    } else if (name == "gap_density") {
      reports.push_back(analysis::verify_gap_density(
          ver.n_arms, ver.gap_samples, exp.master_seed + 6));
    } else if (name == "indicator_sum") {
      const auto constants = analysis::TheoryConstants::compute(
          ver.n_arms, ver.d_y, ver.scenario_horizon, exp.delta);
      reports.push_back(analysis::verify_indicator_sum(
          scenario_batch().traces, constants, derived, exp.t_eff));
    }
  }

  std::string csv = analysis::report_csv_header() + "\n";
  bool all_hold = true;
  for (const auto& report : reports) {
    csv += analysis::report_csv_row(report) + "\n";
    all_hold &= report.holds;
  }
  const std::filesystem::path dir(resolved.output.dir);
  harness::write_file_atomic((dir / resolved.output.reports).string(), csv);

  for (const auto& report : reports) {
    std::printf("%-20s %s  lhs=%.6g rhs=%.6g samples=%ld\n",
                report.name.c_str(), report.holds ? "HOLDS" : "FAILED",
                report.lhs, report.rhs, report.samples);
  }
  for (const auto& name : selected) {
    if (name == "gram_growth" || name == "indicator_sum") {
      // the formal bounds only bite beyond this round; desk-scale checks
      // use t_eff instead, so put the theoretical value on record
      const double t_star = analysis::burn_in_round(
          ver.n_arms, ver.d_y, ver.scenario_horizon, exp.delta);
      std::printf("theoretical burn-in t* = %.4g (horizon %ld, t_eff %ld)\n",
                  t_star, ver.scenario_horizon, exp.t_eff);
      break;
    }
  }
  return all_hold ? 0 : 3;
}

struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path, const std::string& expected_header) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw SchemaError("cannot read CSV file: " + path);
  CsvTable table;
  std::string line;
  bool header_seen = false;
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string comment = line.substr(1);
      const auto begin = comment.find_first_not_of(' ');
      table.comments.push_back(
          begin == std::string::npos ? "" : comment.substr(begin));
      continue;
    }
    if (!header_seen) {
      if (line != expected_header) {
        throw SchemaError("unexpected CSV header in " + path + ": " + line);
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::string field;
    std::istringstream row(line);
    while (std::getline(row, field, ',')) fields.push_back(field);
    table.rows.push_back(std::move(fields));
  }
  if (!header_seen) throw SchemaError("missing CSV header in " + path);
  if (table.rows.empty()) throw SchemaError("no data rows in " + path);
  return table;
}

double field_double(const std::vector<std::string>& row, std::size_t idx,
                    const std::string& path) {
  if (idx >= row.size()) throw SchemaError("short CSV row in " + path);
  try {
    return std::stod(row[idx]);
  } catch (const std::exception&) {
    throw SchemaError("bad numeric field '" + row[idx] + "' in " + path);
  }
}

long field_long(const std::vector<std::string>& row, std::size_t idx,
                const std::string& path) {
  if (idx >= row.size()) throw SchemaError("short CSV row in " + path);
  try {
    return std::stol(row[idx]);
  } catch (const std::exception&) {
    throw SchemaError("bad integer field '" + row[idx] + "' in " + path);
  }
}

std::string annotation_from(const CsvTable& table) {
  for (const auto& comment : table.comments) {
    if (comment.rfind("fingerprint = ", 0) == 0) {
      return "config " + comment.substr(14);
    }
  }
  return "config unknown";
}

int cmd_plot(const config::Resolved& resolved, const std::string& traces_path,
             const std::string& summary_path) {
  if (traces_path.empty() && summary_path.empty()) {
    throw ConfigError("plot needs --traces and/or --summary");
  }
  const std::filesystem::path dir(resolved.output.dir);

  if (!traces_path.empty()) {
    const auto table = read_csv(
        traces_path,
        "N,d_y,t,mean_regret,worst_regret,p90_regret,mean_normalized,"
        "worst_normalized");
    std::map<std::pair<long, long>, std::pair<std::vector<double>,
                                              std::vector<double>>>
        mean_series;
    std::map<std::pair<long, long>, std::pair<std::vector<double>,
                                              std::vector<double>>>
        worst_series;
    for (const auto& row : table.rows) {
      const long n = field_long(row, 0, traces_path);
      const long d = field_long(row, 1, traces_path);
      const long t = field_long(row, 2, traces_path);
      if (t < 2) continue;  // normalized series starts at t = 2
      const double mean_norm = field_double(row, 6, traces_path);
      const double worst_norm = field_double(row, 7, traces_path);
      auto& ms = mean_series[{n, d}];
      auto& ws = worst_series[{n, d}];
      ms.first.push_back(static_cast<double>(t));
      ms.second.push_back(mean_norm);
      ws.first.push_back(static_cast<double>(t));
      ws.second.push_back(worst_norm);
    }
    std::vector<svg::Series> series;
    int color = 0;
    for (const auto& [key, xy] : mean_series) {
      const std::string label =
          "N=" + std::to_string(key.first) + " dy=" + std::to_string(key.second);
      series.push_back({label + " mean", xy.first, xy.second, false, color});
      const auto& wxy = worst_series[key];
      series.push_back({label + " worst", wxy.first, wxy.second, true, color});
      ++color;
    }
    const std::string chart =
        svg::line_chart("Normalized regret over time", "t", "Regret(t)/ln t",
                        series, annotation_from(table));
    harness::write_file_atomic((dir / "fig1_normalized_regret.svg").string(),
                               chart);
    std::printf("wrote %s\n",
                (dir / "fig1_normalized_regret.svg").string().c_str());
  }

  if (!summary_path.empty()) {
    const auto table = read_csv(summary_path, "N,d_y,at_round,mean,worst,p90");
    std::vector<svg::BarGroup> groups;
    long at_round = 0;
    for (const auto& row : table.rows) {
      svg::BarGroup group;
      const long n = field_long(row, 0, summary_path);
      const long d = field_long(row, 1, summary_path);
      at_round = field_long(row, 2, summary_path);
      group.label = "N=" + std::to_string(n) + " dy=" + std::to_string(d);
      group.mean = field_double(row, 3, summary_path);
      group.worst = field_double(row, 4, summary_path);
      group.percentile = field_double(row, 5, summary_path);
      groups.push_back(std::move(group));
    }
    const std::string chart = svg::bar_chart(
        "Regret at T=" + std::to_string(at_round), "Regret", groups,
        annotation_from(table));
    harness::write_file_atomic((dir / "fig2_final_regret.svg").string(), chart);
    std::printf("wrote %s\n",
                (dir / "fig2_final_regret.svg").string().c_str());
  }
  return 0;
}

int cmd_kn(long n_min, long n_max, long samples, std::uint64_t seed) {
  if (n_min < 1 || n_min > n_max) {
    throw BadRange("kn needs 1 <= min <= max");
  }
  std::printf("%6s %14s %14s %12s\n", "N", "quadrature", "monte_carlo",
              "std_err");
  for (long n = n_min; n <= n_max; ++n) {
    const double quad = analysis::k_n_quadrature(n);
    rng::Stream stream(seed, static_cast<std::uint64_t>(n), 0,
                       rng::Purpose::kMonteCarlo);
    const auto mc = analysis::k_n_estimate(n, samples, stream);
    std::printf("%6ld %14.6f %14.6f %12.6f\n", n, quad, mc.estimate,
                mc.std_err);
  }
  return 0;
}

}  // namespace

int run_main(int argc, const char* const* argv) {
  CLI::App app{"Simulation and verification for greedy bandits with "
               "imperfectly observed contexts"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
  app.add_option("--config", config_path, "Path to a config file");
  app.add_option("--out", out_dir, "Output directory (overrides config)");
  app.add_option_function<std::uint64_t>(
         "--seed",
         [&](std::uint64_t value) {
           seed = value;
           seed_set = true;
         },
         "Master seed (overrides config)");
  app.add_option("--threads", threads, "Worker threads (0 = auto)")
      ->envname("OBSBANDIT_THREADS");

  auto* run_cmd = app.add_subcommand("run", "Run the regret experiment sweep");
  run_cmd->fallthrough();
  long repetitions_override = -1, horizon_override = -1;
  run_cmd->add_option("--repetitions", repetitions_override,
                      "Repetitions per sweep cell");
  run_cmd->add_option("--horizon", horizon_override, "Rounds per scenario");

  auto* verify_cmd =
      app.add_subcommand("verify", "Run analytical-identity verifiers");
  verify_cmd->fallthrough();
  std::string which;
  verify_cmd->add_option("--which", which,
                         "Comma-separated verifier names or 'all'");

  auto* plot_cmd = app.add_subcommand("plot", "Render SVG figures from CSVs");
  plot_cmd->fallthrough();
  std::string traces_path, summary_path;
  plot_cmd->add_option("--traces", traces_path, "Trace CSV from 'run'");
  plot_cmd->add_option("--summary", summary_path, "Summary CSV from 'run'");

  auto* kn_cmd = app.add_subcommand("kn", "Tabulate the k_N constant");
  kn_cmd->fallthrough();
  long n_min = 1, n_max = 10, kn_samples = 200000;
  kn_cmd->add_option("--min", n_min, "Smallest N");
  kn_cmd->add_option("--max", n_max, "Largest N");
  kn_cmd->add_option("--samples", kn_samples, "Monte Carlo sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    config::Resolved resolved;
    if (!config_path.empty()) resolved = config::parse_file(config_path);
    if (seed_set) resolved.experiment.master_seed = seed;
    if (!out_dir.empty()) resolved.output.dir = out_dir;
    if (threads >= 0) resolved.experiment.threads = threads;

    if (run_cmd->parsed()) {
      if (repetitions_override >= 0) {
        resolved.experiment.repetitions = repetitions_override;
      }
      if (horizon_override >= 0) {
        resolved.experiment.horizon = horizon_override;
      }
      harness::validate(resolved.experiment);
      return cmd_run(resolved);
    }
    if (verify_cmd->parsed()) return cmd_verify(resolved, which);
    if (plot_cmd->parsed()) return cmd_plot(resolved, traces_path, summary_path);
    if (kn_cmd->parsed()) {
      return cmd_kn(n_min, n_max, kn_samples, resolved.experiment.master_seed);
    }
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const BadDelta& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const BadRange& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const BadDimension& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace obsbandit::cli
