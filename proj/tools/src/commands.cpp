#include "ovbsl/cli/commands.hpp"

#include <fstream>
#include <memory>
#include <optional>

#include "ovbsl/batch_vb.hpp"
#include "ovbsl/checkpoint.hpp"
#include "ovbsl/datagen.hpp"
#include "ovbsl/metrics.hpp"
#include "ovbsl/online_tracker.hpp"

namespace ovbsl::cli {

namespace {

[[noreturn]] void config_fail(const std::string& msg) { throw Error(ErrorCode::config_error, msg); }

void require_path(const std::string& value, const char* key) {
  if (value.empty()) config_fail(std::string("missing required setting '") + key + "'");
}

std::string num(double v) { return format_double(v); }

std::string scenario_line(const ScenarioSpec& s) {
  return "scenario K=" + std::to_string(s.K) + " r=" + std::to_string(s.r) +
         " n_samples=" + std::to_string(s.n_samples) + " beta_true=" + num(s.beta_true) +
         " pi=" + num(s.pi) +
         " change_at=" + (s.change_at ? std::to_string(*s.change_at) : std::string("none")) +
         " subspace_sparsity=" + num(s.subspace_sparsity) +
         " noiseless=" + (s.noiseless ? "1" : "0") + " seed=" + std::to_string(s.seed);
}

void check_same_k(Index a, Index b, const std::string& what) {
  if (a != b) {
    throw Error(ErrorCode::shape_mismatch,
                what + ": K=" + std::to_string(a) + " versus K=" + std::to_string(b));
  }
}

// Accumulates the per-coordinate residual map over a stream in row blocks.
class ResidualAccumulator {
 public:
  explicit ResidualAccumulator(Index K)
      : truth_(kBlock, K), estimate_(kBlock, K), sum_(Vector::Zero(K)) {}

  void add(const Vector& y, const Vector& y_hat) {
    truth_.row(fill_) = y.transpose();
    estimate_.row(fill_) = y_hat.transpose();
    if (++fill_ == kBlock) drain();
  }

  Vector mean() {
    drain();
    if (rows_ == 0) return Vector::Zero(sum_.size());
    return sum_ / static_cast<double>(rows_);
  }

 private:
  static constexpr Index kBlock = 256;

  void drain() {
    if (fill_ == 0) return;
    sum_ +=
        residual_map(truth_.topRows(fill_), estimate_.topRows(fill_)) * static_cast<double>(fill_);
    rows_ += static_cast<std::uint64_t>(fill_);
    fill_ = 0;
  }

  Matrix truth_;
  Matrix estimate_;
  Vector sum_;
  Index fill_ = 0;
  std::uint64_t rows_ = 0;
};

}  // namespace

TruthPaths truth_paths(const std::string& prefix) {
  return {prefix + ".subspace.csv", prefix + ".clean.csv", prefix + ".coeffs.csv"};
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::io_error:
      return 1;
    case ErrorCode::dimension_mismatch:
    case ErrorCode::mask_value_not_binary:
    case ErrorCode::nonzero_at_masked_position:
    case ErrorCode::shape_mismatch:
    case ErrorCode::format_error:
      return 2;
    case ErrorCode::nonpositive_parameter:
    case ErrorCode::overflow:
    case ErrorCode::not_positive_definite:
    case ErrorCode::division_underflow:
    case ErrorCode::nonpositive_denominator:
      return 3;
    case ErrorCode::invalid_spec:
    case ErrorCode::config_error:
    case ErrorCode::cap_exceeded:
      return 4;
  }
  return 4;
}

Report cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  const ScenarioSpec spec = cfg.resolved_scenario();
  spec.validate();
  require_path(cfg.stream, "stream");
  require_path(cfg.truth, "truth");
  const auto paths = truth_paths(cfg.truth);

  ScenarioStream gen(spec);
  const std::vector<std::string> header{scenario_line(spec)};

  SubspaceSegments segs;
  segs.segments.emplace_back(1, gen.U());
  if (gen.U2()) segs.segments.emplace_back(*spec.change_at, *gen.U2());
  write_subspace_file(paths.subspace, segs);

  StreamWriter stream(cfg.stream, spec.K, cfg.format, header);
  StreamWriter clean(paths.clean, spec.K, StreamFormat::csv, header);
  std::ofstream coeffs(paths.coeffs, std::ios::trunc);
  if (!coeffs) throw Error(ErrorCode::io_error, "cannot open " + paths.coeffs + " for writing");
  coeffs << "# coefficients\n";

  while (!gen.done()) {
    const auto draw = gen.next();
    stream.write(draw.sample);
    clean.write(draw.y);
    for (Index l = 0; l < draw.c.size(); ++l) {
      if (l) coeffs << ',';
      coeffs << format_double(draw.c[l]);
    }
    coeffs << '\n';
  }
  stream.flush();
  clean.flush();
  coeffs.flush();
  if (!coeffs) throw Error(ErrorCode::io_error, "write failed for " + paths.coeffs);

  return {{"command", "simulate"},
          {"K", std::to_string(spec.K)},
          {"r", std::to_string(spec.r)},
          {"samples", std::to_string(spec.n_samples)},
          {"observed_per_sample", std::to_string(spec.observed_per_sample())},
          {"seed", std::to_string(spec.seed)}};
}

Report cmd_track(const RunConfig& cfg) {
  cfg.validate();
  require_path(cfg.stream, "stream");

  StreamReader reader(cfg.stream);
  const Index K = reader.K();
  const Index L = cfg.resolved_rank();
  if (L > K) config_fail("rank_max " + std::to_string(L) + " exceeds K=" + std::to_string(K));

  TrackerState state = cfg.resume.empty() ? init_state({K, L}, cfg.hp, cfg.seed, cfg.tracker)
                                          : load_checkpoint(cfg.resume, cfg.hp, cfg.tracker);
  check_same_k(state.dims.K, K, "checkpoint and stream");
  reader.skip_to(state.n);

  std::optional<StreamReader> clean;
  std::optional<SubspaceSegments> segs;
  if (!cfg.truth.empty()) {
    const auto paths = truth_paths(cfg.truth);
    clean.emplace(paths.clean);
    check_same_k(clean->K(), K, "truth and stream");
    clean->skip_to(state.n);
    segs = read_subspace_file(paths.subspace);
    check_same_k(segs->last().rows(), K, "truth subspace and stream");
  }

  std::unique_ptr<TraceWriter> nraee_trace, error_trace, nsre_trace, rank_trace;
  if (!cfg.metrics_out.empty()) {
    rank_trace = std::make_unique<TraceWriter>(cfg.metrics_out + ".rank.csv", "effective_rank");
    if (clean) {
      nraee_trace = std::make_unique<TraceWriter>(cfg.metrics_out + ".nraee.csv", "nraee");
      error_trace = std::make_unique<TraceWriter>(cfg.metrics_out + ".error.csv", "error");
      nsre_trace = std::make_unique<TraceWriter>(cfg.metrics_out + ".nsre.csv", "nsre");
    }
  }
  std::optional<StreamWriter> completion;
  if (!cfg.completion.empty()) completion.emplace(cfg.completion, K);

  auto flush_outputs = [&] {
    for (auto* t : {nraee_trace.get(), error_trace.get(), nsre_trace.get(), rank_trace.get()}) {
      if (t) t->flush();
    }
    if (completion) completion->flush();
  };

  NraeeAccumulator nraee;
  std::uint64_t processed = 0;
  std::uint64_t last_periodic = 0;
  auto periodic = [&] {
    last_periodic = state.n;
    if (rank_trace) {
      rank_trace->push(state.n, static_cast<double>(effective_rank(state, cfg.rank_threshold)));
    }
    if (nsre_trace) {
      nsre_trace->push(state.n, nsre(state.w_mean, segs->at(state.n), cfg.rank_threshold));
    }
  };

  while (auto sample = reader.next()) {
    StepResult res;
    try {
      res = step(state, *sample);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + std::to_string(sample->index) + ": " + e.what());
    }
    ++processed;
    if (clean) {
      const auto y = clean->next();
      if (!y)
        throw Error(ErrorCode::format_error,
                    "truth ended before sample " + std::to_string(sample->index));
      const double err = normalized_error(y->z, res.reconstruction);
      const double avg = nraee.update(y->z, res.reconstruction);
      if (error_trace && err >= 0.0) error_trace->push(state.n, err);
      if (nraee_trace) nraee_trace->push(state.n, avg);
    }
    if (completion) completion->write(res.reconstruction);
    if (state.n % cfg.nsre_every == 0) periodic();
    if (cfg.checkpoint_every > 0 && state.n % cfg.checkpoint_every == 0 &&
        !cfg.checkpoint.empty()) {
      save_checkpoint(state, cfg.checkpoint);
      flush_outputs();
    }
  }
  if (processed > 0 && last_periodic != state.n) periodic();
  if (!cfg.checkpoint.empty()) save_checkpoint(state, cfg.checkpoint);
  flush_outputs();

  Report report{{"command", "track"},
                {"K", std::to_string(K)},
                {"L", std::to_string(L)},
                {"samples", std::to_string(state.n)},
                {"processed", std::to_string(processed)},
                {"effective_rank", std::to_string(effective_rank(state, cfg.rank_threshold))},
                {"beta", num(state.beta)}};
  if (clean) {
    report.emplace_back("nraee", num(nraee.value()));
    report.emplace_back("nraee_skipped", std::to_string(nraee.skipped));
    report.emplace_back("nsre", num(nsre(state.w_mean, segs->at(state.n), cfg.rank_threshold)));
  }
  report.emplace_back("jitter_retries", std::to_string(state.diagnostics.jitter_retries));
  report.emplace_back("beta_denominator_clamps",
                      std::to_string(state.diagnostics.beta_denominator_clamps));
  if (!cfg.report.empty()) write_report(cfg.report, report);
  return report;
}

Report cmd_batch_fit(const RunConfig& cfg) {
  cfg.validate();
  require_path(cfg.stream, "stream");
  require_path(cfg.out, "out");

  StreamReader reader(cfg.stream);
  const Index K = reader.K();
  const Index L = cfg.resolved_rank();
  if (L > K) config_fail("rank_max " + std::to_string(L) + " exceeds K=" + std::to_string(K));

  BatchDataset data;
  data.dims = {K, L};
  while (auto s = reader.next()) {
    const double entries = static_cast<double>(data.size() + 1) * static_cast<double>(K);
    if (entries > cfg.cap) {
      throw Error(ErrorCode::cap_exceeded, "dataset exceeds the cap of " + num(cfg.cap) +
                                               " entries (n*K); raise 'cap' to fit it");
    }
    data.samples.push_back(std::move(*s));
  }

  BatchOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.tol = cfg.tol;
  opts.seed = cfg.seed;
  const auto fit = batch_fit(data, cfg.hp, opts);
  const auto& post = fit.posterior;

  Report report{
      {"command", "batch-fit"},
      {"K", std::to_string(K)},
      {"L", std::to_string(L)},
      {"samples", std::to_string(data.size())},
      {"iterations", std::to_string(fit.iterations)},
      {"converged", fit.converged ? "1" : "0"},
      {"beta", num(post.beta)},
      {"effective_rank", std::to_string(effective_rank(post.w_mean, cfg.rank_threshold))}};
  for (Index l = 0; l < L; ++l) report.emplace_back("s_" + std::to_string(l + 1), num(post.s[l]));

  write_report(cfg.out + ".posterior", report);
  write_matrix_csv(cfg.out + ".w_mean.csv", "w_mean", post.w_mean);
  StreamWriter recon(cfg.out + ".reconstruction.csv", K);
  for (Index i = 0; i < post.x_mean.rows(); ++i) {
    recon.write(Vector(post.w_mean * post.x_mean.row(i).transpose()));
  }
  recon.flush();
  if (!cfg.report.empty()) write_report(cfg.report, report);
  return report;
}

Report cmd_evaluate(const RunConfig& cfg) {
  cfg.validate();
  require_path(cfg.truth, "truth");
  if (cfg.completion.empty() && cfg.checkpoint.empty()) {
    config_fail("evaluate needs 'completion' and/or 'checkpoint'");
  }
  const auto paths = truth_paths(cfg.truth);
  Report report{{"command", "evaluate"}};

  if (!cfg.completion.empty()) {
    StreamReader truth(paths.clean);
    StreamReader estimate(cfg.completion);
    check_same_k(estimate.K(), truth.K(), "completion and truth");
    const Index K = truth.K();

    std::unique_ptr<TraceWriter> error_trace, nraee_trace;
    if (!cfg.metrics_out.empty()) {
      error_trace = std::make_unique<TraceWriter>(cfg.metrics_out + ".error.csv", "error");
      nraee_trace = std::make_unique<TraceWriter>(cfg.metrics_out + ".nraee.csv", "nraee");
    }
    NraeeAccumulator nraee;
    ResidualAccumulator residual(K);
    std::uint64_t n = 0;
    while (true) {
      auto y = truth.next();
      auto y_hat = estimate.next();
      if (!y && !y_hat) break;
      if (!y || !y_hat) {
        throw Error(ErrorCode::shape_mismatch, "completion and truth differ in sample count");
      }
      ++n;
      const double err = normalized_error(y->z, y_hat->z);
      const double avg = nraee.update(y->z, y_hat->z);
      residual.add(y->z, y_hat->z);
      if (error_trace && err >= 0.0) error_trace->push(n, err);
      if (nraee_trace) nraee_trace->push(n, avg);
    }
    const Vector map = residual.mean();
    if (!cfg.metrics_out.empty()) {
      MetricTrace trace{"residual_map", {}};
      for (Index k = 0; k < map.size(); ++k) trace.push(static_cast<std::uint64_t>(k + 1), map[k]);
      write_trace(cfg.metrics_out + ".residual.csv", trace);
    }
    report.emplace_back("samples", std::to_string(n));
    report.emplace_back("nraee", num(nraee.value()));
    report.emplace_back("nraee_skipped", std::to_string(nraee.skipped));
    report.emplace_back("residual_mean", num(map.size() ? map.mean() : 0.0));
    report.emplace_back("residual_max", num(map.size() ? map.maxCoeff() : 0.0));
  }

  if (!cfg.checkpoint.empty()) {
    const TrackerState state = load_checkpoint(cfg.checkpoint, cfg.hp, cfg.tracker);
    const auto segs = read_subspace_file(paths.subspace);
    const Matrix& U = segs.at(state.n);
    check_same_k(state.dims.K, U.rows(), "checkpoint and truth subspace");
    report.emplace_back("checkpoint_samples", std::to_string(state.n));
    report.emplace_back("nsre", num(nsre(state.w_mean, U, cfg.rank_threshold)));
    report.emplace_back("effective_rank",
                        std::to_string(effective_rank(state, cfg.rank_threshold)));
  }

  if (!cfg.report.empty()) write_report(cfg.report, report);
  return report;
}

}  // namespace ovbsl::cli
