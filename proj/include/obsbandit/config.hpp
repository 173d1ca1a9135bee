#pragma once

// Declarative key-value configuration with sections [sweep], [run],
// [instance], [verify], [output]. Unknown sections or keys are hard errors.
// render() emits a canonical echo of the resolved configuration; parsing
// that echo reproduces the configuration exactly.

#include <cstdint>
#include <string>
#include <string_view>

#include "obsbandit/harness.hpp"

namespace obsbandit::config {

struct VerifySettings {
  long n_arms = 5;
  long d_y = 3;
  long horizon = 100;           // truncation-verifier horizon
  long reps = 2000;             // truncation repetitions
  long samples = 100000;        // Monte Carlo samples per verifier
  long gap_samples = 1000000;   // gap-density samples
  long scenarios = 20;          // scenario count for trace-based verifiers
  long scenario_horizon = 1000;
  long tail_replicates = 5000;
  double lambda_t = 0.01;
  double prior_scale = 1.0;     // fixed-design prior B(1) = prior_scale * I
  double target_scale = 25.0;   // fixed-design B(t) = target_scale * I
  double growth_rate = 0.5;     // desk-scale eigenvalue growth threshold

  bool operator==(const VerifySettings&) const = default;
};

struct OutputSettings {
  std::string dir = "out";
  std::string traces = "traces.csv";
  std::string summary = "summary.csv";
  std::string reports = "reports.csv";
  std::string echo = "config_resolved.ini";

  bool operator==(const OutputSettings&) const = default;
};

struct Resolved {
  harness::ExperimentConfig experiment;
  VerifySettings verify;
  OutputSettings output;

  bool operator==(const Resolved&) const = default;
};

/// Parses config text onto the defaults. Throws ConfigError on unknown
/// sections/keys or malformed values.
Resolved parse(const std::string& text);

/// Reads and parses a file; ConfigError if it cannot be read.
Resolved parse_file(const std::string& path);

/// Canonical echo of a resolved configuration.
std::string render(const Resolved& resolved);

std::uint64_t fnv1a64(std::string_view text);

/// Hex digest of the canonical echo; annotates plots and CSV headers.
std::string fingerprint(const Resolved& resolved);

}  // namespace obsbandit::config
