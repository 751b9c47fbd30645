#ifndef OVBSL_CLI_CONFIG_HPP
#define OVBSL_CLI_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ovbsl/datagen.hpp"
#include "ovbsl/online_tracker.hpp"
#include "ovbsl/stream_io.hpp"
#include "ovbsl/types.hpp"

namespace ovbsl::cli {

/// Everything a command needs. Filled from a config file, then overridden by
/// command-line flags that share the key names.
struct RunConfig {
  // [model]
  std::optional<Index> rank_max;
  HyperParams hp;
  TrackerOptions tracker;
  std::uint64_t seed = 1;
  double rank_threshold = 1e-3;
  int max_iters = 500;
  double tol = 1e-6;
  double cap = 1e7;  // largest n * K accepted by batch-fit

  // [scenario]
  std::optional<ScenarioSpec> scenario;

  // [io]
  std::string stream;       // input or output stream file
  std::string truth;        // ground-truth prefix
  std::string metrics_out;  // trace prefix
  std::string checkpoint;   // checkpoint written by track, read by evaluate
  std::string resume;       // checkpoint to resume track from
  std::string completion;   // per-sample reconstructions
  std::string report;       // key=value report
  std::string out;          // batch-fit output prefix
  StreamFormat format = StreamFormat::csv;
  std::uint64_t checkpoint_every = 0;
  std::uint64_t nsre_every = 100;

  /// L from rank_max, else twice the scenario rank.
  Index resolved_rank() const;
  /// Scenario with the shared seed applied.
  ScenarioSpec resolved_scenario() const;
  void validate() const;
};

/// Lower-cases a key and maps '-' to '_'.
std::string normalize_key(std::string_view key);

/// Applies one key=value setting. `section` may be empty, in which case the
/// key is looked up in every section (used for command-line overrides).
void apply_setting(RunConfig& cfg, std::string_view section, std::string_view key,
                   std::string_view value);

/// Parses "[section]" headers and "key = value" lines; '#' and ';' start
/// comments. `origin` names the source in error messages.
RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

}  // namespace ovbsl::cli

#endif  // OVBSL_CLI_CONFIG_HPP
