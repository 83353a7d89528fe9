#pragma once

#include <iosfwd>
#include <string>

#include "hybridgp/config.hpp"

namespace hybridgp {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

/// Writes train.csv, test.csv (each with a sidecar) and manifest.json into `out_dir`.
void cmd_generate(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);
void cmd_train(const RunConfig& cfg, const std::string& dataset, const std::string& model_out, std::ostream& log);
void cmd_predict(const RunConfig& cfg, const std::string& model, const std::string& trace_out, std::ostream& log);
/// Trains the single global GP on `dataset` and writes the particle baseline trace.
void cmd_baseline(const RunConfig& cfg, const std::string& dataset, const std::string& trace_out, std::ostream& log);
/// Scores one or two traces (hybrid, then baseline) against a test set and
/// prints a comparison table when both are given.
void cmd_score(const std::string& trace, const std::string& baseline_trace, const std::string& test_dataset,
               const std::string& report_out, std::ostream& log);

/// Parses arguments, dispatches, and maps errors to exit codes.
int run_cli(int argc, char** argv);

}  // namespace hybridgp
