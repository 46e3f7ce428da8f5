#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace deco {

struct NetworkSample {
  double time_s = 0.0;
  double bandwidth_bps = 0.0;
  double latency_s = 0.0;
};

/// Time-ordered bandwidth/latency samples, replayed as a step function.
/// Immutable once built; timestamps strictly increase and start at 0.
struct NetworkTrace {
  std::vector<NetworkSample> samples;

  void validate() const;
};

/// Sample holding at time t: the entry with the greatest timestamp <= t.
/// Queries beyond the last sample hold the last sample.
const NetworkSample& sample_at(const NetworkTrace& trace, double t);

/// Deterministic synthetic trace: bandwidth_i = mean * (1 + u_i) with u_i
/// uniform in [-fluctuation, +fluctuation] drawn from SplitMix64(seed),
/// constant latency, samples every `interval_s` from 0 through `duration_s`.
NetworkTrace gen_trace(std::uint64_t seed, double mean_bandwidth_bps,
                       double fluctuation_fraction, double latency_s,
                       double duration_s, double interval_s);

NetworkTrace constant_trace(double bandwidth_bps, double latency_s);

/// CSV with header `time_s,bandwidth_bps,latency_s`; `#`-prefixed lines are
/// metadata and are skipped on load. Round-trips binary64 exactly.
void save_trace(const NetworkTrace& trace, const std::filesystem::path& path,
                const std::string& config_hash = "");
NetworkTrace load_trace(const std::filesystem::path& path);

}  // namespace deco
