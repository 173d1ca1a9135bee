#pragma once

// Command-line front end. Subcommands: run (sweep + CSV outputs), verify
// (analytical-identity verifiers + report CSV), plot (SVG figures), kn
// (order-statistic constant table). Exit codes are a stable contract:
// 0 success, 1 runtime error, 2 config error, 3 verification failure.

namespace obsbandit::cli {

int run_main(int argc, const char* const* argv);

}  // namespace obsbandit::cli
