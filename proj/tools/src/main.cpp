#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ovbsl/cli/commands.hpp"
#include "ovbsl/cli/config.hpp"

namespace {

using ovbsl::cli::RunConfig;

struct Flag {
  const char* key;  // config key; the flag is --key with '_' as '-'
  const char* help;
  bool boolean = false;
};

const std::vector<Flag> kModelFlags = {
    {"lambda", "forgetting factor in (0, 1]"},
    {"rank_max", "working rank L (default 2r with a scenario)"},
    {"sparse_subspace", "enable element-wise sparsity of the subspace", true},
    {"seed", "random seed for generation and initialization"},
    {"mu", "Gamma hyperparameter"},
    {"nu", "Gamma hyperparameter"},
    {"psi", "Gamma hyperparameter"},
    {"xi", "Gamma hyperparameter"},
    {"kappa", "Gamma hyperparameter"},
    {"theta", "Gamma hyperparameter"},
    {"rank_threshold", "relative column-norm threshold for the effective rank"},
};

const std::vector<Flag> kScenarioFlags = {
    {"K", "ambient dimension"},
    {"r", "true rank"},
    {"n_samples", "stream length"},
    {"beta_true", "noise precision"},
    {"pi", "observed fraction per sample"},
    {"change_at", "sample index from which the subspace is redrawn"},
    {"subspace_sparsity", "fraction of zero entries per subspace column"},
    {"noiseless", "disable the additive noise", true},
    {"seed", "random seed"},
};

std::string flag_name(const char* key) {
  std::string name = "--";
  for (const char* p = key; *p; ++p) name += *p == '_' ? '-' : *p;
  return name;
}

// Registers flags on a subcommand. Given values are stored by key and applied
// on top of the config file after parsing.
class Overrides {
 public:
  void add(CLI::App* app, const std::vector<Flag>& flags) {
    for (const auto& f : flags) {
      const std::string key = f.key;
      if (f.boolean) {
        app->add_flag_callback(flag_name(f.key), [this, key] { values_[key] = "true"; }, f.help);
      } else {
        app->add_option_function<std::string>(
            flag_name(f.key), [this, key](const std::string& v) { values_[key] = v; }, f.help);
      }
    }
  }
  void add(CLI::App* app, const char* key, const char* help) { add(app, {{key, help}}); }

  void apply(RunConfig& cfg) const {
    for (const auto& [key, value] : values_) ovbsl::cli::apply_setting(cfg, "", key, value);
  }

 private:
  std::map<std::string, std::string> values_;
};

void print_report(const ovbsl::Report& report) {
  for (const auto& [k, v] : report) std::cout << k << '=' << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online variational Bayes subspace learning"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  std::function<ovbsl::Report(const RunConfig&)> command;

  auto* simulate =
      app.add_subcommand("simulate", "generate a synthetic stream and its ground truth");
  auto* track = app.add_subcommand("track", "run the online tracker over a stream");
  auto* batch = app.add_subcommand("batch-fit", "batch variational fit of a whole stream");
  auto* evaluate =
      app.add_subcommand("evaluate", "score reconstructions and a checkpoint against ground truth");

  for (auto* sub : {simulate, track, batch, evaluate}) {
    sub->add_option("--config", config_path, "config file with [model], [scenario], [io] sections");
  }

  overrides.add(simulate, kScenarioFlags);
  overrides.add(simulate, "stream", "output stream file");
  overrides.add(simulate, "truth", "output prefix for the ground-truth files");
  overrides.add(simulate, "format", "stream format: csv or binary");
  simulate->callback([&] { command = ovbsl::cli::cmd_simulate; });

  overrides.add(track, kModelFlags);
  overrides.add(track, {{"stream", "input stream file"},
                        {"truth", "ground-truth prefix for NRAEE and NSRE"},
                        {"metrics_out", "prefix for the metric traces"},
                        {"checkpoint", "checkpoint file written at the end"},
                        {"checkpoint_every", "also write the checkpoint every N samples"},
                        {"resume", "checkpoint to resume from"},
                        {"completion", "file for per-sample reconstructions"},
                        {"report", "summary report file"},
                        {"nsre_every", "NSRE and rank trace interval"},
                        {"inner_sweeps", "coordinate-descent sweeps per row and step"},
                        {"initial_w_var", "initial variance of the subspace entries"}});
  track->callback([&] { command = ovbsl::cli::cmd_track; });

  overrides.add(batch, kModelFlags);
  overrides.add(batch, {{"stream", "input stream file"},
                        {"out", "output prefix"},
                        {"report", "summary report file"},
                        {"max_iters", "iteration budget"},
                        {"tol", "relative change of the subspace mean that stops the fit"},
                        {"cap", "largest n*K accepted"}});
  batch->callback([&] { command = ovbsl::cli::cmd_batch_fit; });

  overrides.add(evaluate, {{"truth", "ground-truth prefix"},
                           {"completion", "reconstructions to score"},
                           {"checkpoint", "tracker checkpoint to score"},
                           {"report", "report file"},
                           {"metrics_out", "prefix for the metric traces"},
                           {"rank_threshold", "relative column-norm threshold"}});
  evaluate->callback([&] { command = ovbsl::cli::cmd_evaluate; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : ovbsl::cli::load_config(config_path);
    overrides.apply(cfg);
    print_report(command(cfg));
  } catch (const ovbsl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ovbsl::cli::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
