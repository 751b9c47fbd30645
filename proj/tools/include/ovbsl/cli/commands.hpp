#ifndef OVBSL_CLI_COMMANDS_HPP
#define OVBSL_CLI_COMMANDS_HPP

#include <string>

#include "ovbsl/cli/config.hpp"
#include "ovbsl/error.hpp"
#include "ovbsl/stream_io.hpp"

namespace ovbsl::cli {

/// Ground-truth files written next to a simulated stream.
struct TruthPaths {
  std::string subspace;  // <prefix>.subspace.csv
  std::string clean;     // <prefix>.clean.csv, noise-free rows in stream format
  std::string coeffs;    // <prefix>.coeffs.csv
};
TruthPaths truth_paths(const std::string& prefix);

/// Writes cfg.stream and the ground-truth files under cfg.truth.
Report cmd_simulate(const RunConfig& cfg);

/// Runs the tracker over cfg.stream. Optional outputs: traces under
/// cfg.metrics_out (nraee and error need cfg.truth, nsre too), the final and
/// periodic checkpoint, per-sample reconstructions in cfg.completion and a
/// summary in cfg.report. With cfg.resume set the stream is skipped up to the
/// checkpoint and the outputs cover the remaining samples only.
Report cmd_track(const RunConfig& cfg);

/// Batch fit of the whole stream. Writes <out>.posterior, <out>.w_mean.csv and
/// <out>.reconstruction.csv.
Report cmd_batch_fit(const RunConfig& cfg);

/// Compares cfg.completion and/or cfg.checkpoint against the truth files.
Report cmd_evaluate(const RunConfig& cfg);

/// Process exit status for an error: 1 I/O, 2 format or shape, 3 numerical,
/// 4 configuration.
int exit_code(ErrorCode code) noexcept;

}  // namespace ovbsl::cli

#endif  // OVBSL_CLI_COMMANDS_HPP
