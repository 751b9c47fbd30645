#include "ovbsl/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "ovbsl/stream_io.hpp"

namespace ovbsl {

namespace {

void put_matrix(std::ostream& os, const Matrix& M) {
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) write_f64_le(os, M(i, j));
  }
}

void put_vector(std::ostream& os, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) write_f64_le(os, v[i]);
}

void get_matrix(std::istream& is, Matrix& M) {
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = read_f64_le(is);
  }
}

void get_vector(std::istream& is, Vector& v) {
  for (Index i = 0; i < v.size(); ++i) v[i] = read_f64_le(is);
}

}  // namespace

void save_checkpoint(const TrackerState& state, std::ostream& os) {
  os.write("OVBS", 4);
  write_u32_le(os, kCheckpointVersion);
  write_u32_le(os, static_cast<std::uint32_t>(state.dims.K));
  write_u32_le(os, static_cast<std::uint32_t>(state.dims.L));
  write_f64_le(os, state.hp.lambda);
  write_u32_le(os, state.hp.sparse_subspace ? 1u : 0u);
  put_matrix(os, state.w_mean);
  put_matrix(os, state.w_var);
  put_vector(os, state.s);
  put_vector(os, state.delta);
  put_matrix(os, state.gamma);
  put_matrix(os, state.rho);
  write_f64_le(os, state.beta);
  put_matrix(os, state.stats.T);
  put_matrix(os, state.stats.Q);
  for (const auto& Pk : state.stats.P) put_matrix(os, Pk);
  put_vector(os, state.stats.d);
  write_u64_le(os, state.n);
  if (!os) throw Error(ErrorCode::io_error, "checkpoint write failed");
}

void save_checkpoint(const TrackerState& state, const std::string& path) {
  // Write next to the target and rename so an interrupted save never leaves
  // a truncated checkpoint behind.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    save_checkpoint(state, out);
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "checkpoint write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error(ErrorCode::io_error, "cannot move checkpoint into " + path);
  }
}

TrackerState load_checkpoint(std::istream& is, const HyperParams& hp,
                             const TrackerOptions& options) {
  char magic[4] = {};
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "OVBS") {
    throw Error(ErrorCode::format_error, "not a tracker checkpoint");
  }
  const auto version = read_u32_le(is);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::format_error,
                "unsupported checkpoint version " + std::to_string(version));
  }
  ModelDims dims;
  dims.K = static_cast<Index>(read_u32_le(is));
  dims.L = static_cast<Index>(read_u32_le(is));
  HyperParams h = hp;
  h.lambda = read_f64_le(is);
  h.sparse_subspace = (read_u32_le(is) & 1u) != 0;

  TrackerState st = init_state(dims, h, 0, options);
  get_matrix(is, st.w_mean);
  get_matrix(is, st.w_var);
  get_vector(is, st.s);
  get_vector(is, st.delta);
  get_matrix(is, st.gamma);
  get_matrix(is, st.rho);
  st.beta = read_f64_le(is);
  get_matrix(is, st.stats.T);
  get_matrix(is, st.stats.Q);
  for (auto& Pk : st.stats.P) get_matrix(is, Pk);
  get_vector(is, st.stats.d);
  st.n = read_u64_le(is);
  return st;
}

TrackerState load_checkpoint(const std::string& path, const HyperParams& hp,
                             const TrackerOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  return load_checkpoint(in, hp, options);
}

}  // namespace ovbsl
