#ifndef OVBSL_CHECKPOINT_HPP
#define OVBSL_CHECKPOINT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ovbsl/online_tracker.hpp"

namespace ovbsl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary tracker snapshot:
///   "OVBS", u32 version, u32 K, u32 L, f64 lambda, u32 flags (bit 0: sparse
///   subspace), then little-endian f64 arrays in row-major order: w_mean,
///   w_var, s, delta, gamma, rho, beta, T, Q, P_1..P_K, d; finally u64 n.
void save_checkpoint(const TrackerState& state, std::ostream& os);
void save_checkpoint(const TrackerState& state, const std::string& path);

/// Restores a snapshot. lambda and the sparse flag come from the blob; the
/// remaining hyperparameters and options are taken from the arguments.
TrackerState load_checkpoint(std::istream& is, const HyperParams& hp,
                             const TrackerOptions& options = {});
TrackerState load_checkpoint(const std::string& path, const HyperParams& hp,
                             const TrackerOptions& options = {});

}  // namespace ovbsl

#endif  // OVBSL_CHECKPOINT_HPP
