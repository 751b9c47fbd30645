#include "ovbsl/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ovbsl::cli {

namespace {

[[noreturn]] void config_fail(const std::string& msg) { throw Error(ErrorCode::config_error, msg); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view key, std::string_view v) {
  v = trim(v);
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || std::isnan(out)) {
    config_fail("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_count(std::string_view key, std::string_view v) {
  v = trim(v);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    config_fail("'" + std::string(key) + "' expects a nonnegative integer, got '" + std::string(v) +
                "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  std::string s(trim(v));
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  config_fail("'" + std::string(key) + "' expects a boolean, got '" + std::string(v) + "'");
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

struct KeyInfo {
  std::string section;
  Setter set;
};

ScenarioSpec& scenario(RunConfig& cfg) {
  if (!cfg.scenario) cfg.scenario.emplace();
  return *cfg.scenario;
}

const std::map<std::string, KeyInfo>& key_table() {
  static const std::map<std::string, KeyInfo> table = [] {
    std::map<std::string, KeyInfo> t;
    auto real = [](double HyperParams::* field) {
      return [field](RunConfig& c, std::string_view k, std::string_view v) {
        c.hp.*field = to_double(k, v);
      };
    };
    t["lambda"] = {"model", real(&HyperParams::lambda)};
    t["mu"] = {"model", real(&HyperParams::mu)};
    t["nu"] = {"model", real(&HyperParams::nu)};
    t["psi"] = {"model", real(&HyperParams::psi)};
    t["xi"] = {"model", real(&HyperParams::xi)};
    t["kappa"] = {"model", real(&HyperParams::kappa)};
    t["theta"] = {"model", real(&HyperParams::theta)};
    t["sparse_subspace"] = {
        "model", [](RunConfig& c, auto k, auto v) { c.hp.sparse_subspace = to_bool(k, v); }};
    t["rank_max"] = {"model", [](RunConfig& c, auto k, auto v) {
                       c.rank_max = static_cast<Index>(to_count(k, v));
                     }};
    t["seed"] = {"model", [](RunConfig& c, auto k, auto v) { c.seed = to_count(k, v); }};
    t["rank_threshold"] = {
        "model", [](RunConfig& c, auto k, auto v) { c.rank_threshold = to_double(k, v); }};
    t["inner_sweeps"] = {"model", [](RunConfig& c, auto k, auto v) {
                           c.tracker.inner_sweeps = static_cast<int>(to_count(k, v));
                         }};
    t["initial_w_var"] = {
        "model", [](RunConfig& c, auto k, auto v) { c.tracker.initial_w_var = to_double(k, v); }};
    t["max_iters"] = {"model", [](RunConfig& c, auto k, auto v) {
                        c.max_iters = static_cast<int>(to_count(k, v));
                      }};
    t["tol"] = {"model", [](RunConfig& c, auto k, auto v) { c.tol = to_double(k, v); }};
    t["cap"] = {"model", [](RunConfig& c, auto k, auto v) { c.cap = to_double(k, v); }};

    t["k"] = {"scenario", [](RunConfig& c, auto k, auto v) {
                scenario(c).K = static_cast<Index>(to_count(k, v));
              }};
    t["r"] = {"scenario", [](RunConfig& c, auto k, auto v) {
                scenario(c).r = static_cast<Index>(to_count(k, v));
              }};
    t["n_samples"] = {"scenario",
                      [](RunConfig& c, auto k, auto v) { scenario(c).n_samples = to_count(k, v); }};
    t["beta_true"] = {
        "scenario", [](RunConfig& c, auto k, auto v) { scenario(c).beta_true = to_double(k, v); }};
    t["pi"] = {"scenario", [](RunConfig& c, auto k, auto v) { scenario(c).pi = to_double(k, v); }};
    t["change_at"] = {"scenario", [](RunConfig& c, auto k, auto v) {
                        const auto s = trim(v);
                        if (s == "none" || s.empty()) {
                          scenario(c).change_at.reset();
                        } else {
                          scenario(c).change_at = to_count(k, v);
                        }
                      }};
    t["subspace_sparsity"] = {"scenario", [](RunConfig& c, auto k, auto v) {
                                scenario(c).subspace_sparsity = to_double(k, v);
                              }};
    t["noiseless"] = {"scenario",
                      [](RunConfig& c, auto k, auto v) { scenario(c).noiseless = to_bool(k, v); }};

    auto path = [](std::string RunConfig::* field) {
      return [field](RunConfig& c, std::string_view, std::string_view v) {
        c.*field = std::string(trim(v));
      };
    };
    t["stream"] = {"io", path(&RunConfig::stream)};
    t["truth"] = {"io", path(&RunConfig::truth)};
    t["metrics_out"] = {"io", path(&RunConfig::metrics_out)};
    t["checkpoint"] = {"io", path(&RunConfig::checkpoint)};
    t["resume"] = {"io", path(&RunConfig::resume)};
    t["completion"] = {"io", path(&RunConfig::completion)};
    t["report"] = {"io", path(&RunConfig::report)};
    t["out"] = {"io", path(&RunConfig::out)};
    t["format"] = {"io", [](RunConfig& c, auto k, auto v) {
                     const auto s = trim(v);
                     if (s == "csv") {
                       c.format = StreamFormat::csv;
                     } else if (s == "binary") {
                       c.format = StreamFormat::binary;
                     } else {
                       config_fail("'" + std::string(k) + "' must be csv or binary");
                     }
                   }};
    t["checkpoint_every"] = {
        "io", [](RunConfig& c, auto k, auto v) { c.checkpoint_every = to_count(k, v); }};
    t["nsre_every"] = {"io", [](RunConfig& c, auto k, auto v) { c.nsre_every = to_count(k, v); }};
    return t;
  }();
  return table;
}

}  // namespace

std::string normalize_key(std::string_view key) {
  std::string out(trim(key));
  for (auto& ch : out) {
    ch = ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

void apply_setting(RunConfig& cfg, std::string_view section, std::string_view key,
                   std::string_view value) {
  const auto name = normalize_key(key);
  const auto& table = key_table();
  const auto it = table.find(name);
  if (it == table.end()) config_fail("unknown key '" + std::string(key) + "'");
  if (!section.empty() && normalize_key(section) != it->second.section) {
    // The seed is shared; accept it in the scenario section as well.
    if (!(name == "seed" && normalize_key(section) == "scenario")) {
      config_fail("key '" + std::string(key) + "' belongs to [" + it->second.section + "], not [" +
                  std::string(section) + "]");
    }
  }
  it->second.set(cfg, name, value);
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    const auto comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = trim(line.substr(0, comment));
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') config_fail(where + "unterminated section header");
      section = normalize_key(line.substr(1, line.size() - 2));
      if (section != "model" && section != "scenario" && section != "io") {
        config_fail(where + "unknown section [" + section + "]");
      }
      if (section == "scenario" && !cfg.scenario) cfg.scenario.emplace();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_fail(where + "expected key = value");
    if (section.empty()) config_fail(where + "setting outside of a section");
    try {
      apply_setting(cfg, section, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

Index RunConfig::resolved_rank() const {
  if (rank_max) return *rank_max;
  if (scenario) return 2 * scenario->r;
  config_fail("rank_max is required when no scenario is configured");
}

ScenarioSpec RunConfig::resolved_scenario() const {
  if (!scenario) config_fail("no [scenario] configured");
  ScenarioSpec spec = *scenario;
  spec.seed = seed;
  return spec;
}

void RunConfig::validate() const {
  try {
    hp.validate();
  } catch (const Error& e) {
    config_fail(e.what());
  }
  if (scenario) scenario->validate();
  if (rank_max && *rank_max < 1) config_fail("rank_max must be at least 1");
  if (!(rank_threshold >= 0.0 && rank_threshold < 1.0)) {
    config_fail("rank_threshold must lie in [0, 1)");
  }
  if (tracker.inner_sweeps < 1) config_fail("inner_sweeps must be at least 1");
  if (tracker.initial_w_var && !(*tracker.initial_w_var > 0.0)) {
    config_fail("initial_w_var must be positive");
  }
  if (max_iters < 1) config_fail("max_iters must be at least 1");
  if (!(tol > 0.0)) config_fail("tol must be positive");
  if (!(cap > 0.0)) config_fail("cap must be positive");
  if (nsre_every < 1) config_fail("nsre_every must be at least 1");
}

}  // namespace ovbsl::cli
