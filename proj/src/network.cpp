#include "deco/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "deco/rng.hpp"

namespace deco {

void NetworkTrace::validate() const {
  if (samples.empty())
    throw std::invalid_argument("trace must contain at least one sample");
  if (samples.front().time_s != 0.0)
    throw std::invalid_argument("trace must start at time 0");
  double prev = -1.0;
  for (const auto& s : samples) {
    if (!(s.time_s > prev))
      throw std::invalid_argument("trace timestamps must strictly increase");
    if (!(s.bandwidth_bps > 0.0) || !std::isfinite(s.bandwidth_bps))
      throw std::invalid_argument("trace bandwidth must be finite and > 0");
    if (s.latency_s < 0.0 || !std::isfinite(s.latency_s))
      throw std::invalid_argument("trace latency must be finite and >= 0");
    prev = s.time_s;
  }
}

const NetworkSample& sample_at(const NetworkTrace& trace, double t) {
  if (t < 0.0) throw std::invalid_argument("query time must be >= 0");
  if (trace.samples.empty()) throw std::invalid_argument("empty trace");
  auto it = std::upper_bound(
      trace.samples.begin(), trace.samples.end(), t,
      [](double q, const NetworkSample& s) { return q < s.time_s; });
  return *(it - 1);  // first sample is at t = 0, so it != begin()
}

NetworkTrace gen_trace(std::uint64_t seed, double mean_bandwidth_bps,
                       double fluctuation_fraction, double latency_s,
                       double duration_s, double interval_s) {
  if (!(mean_bandwidth_bps > 0.0))
    throw std::invalid_argument("mean bandwidth must be > 0");
  if (fluctuation_fraction < 0.0 || fluctuation_fraction >= 1.0)
    throw std::invalid_argument("fluctuation fraction must lie in [0, 1)");
  if (latency_s < 0.0) throw std::invalid_argument("latency must be >= 0");
  if (!(interval_s > 0.0)) throw std::invalid_argument("interval must be > 0");
  if (duration_s < 0.0) throw std::invalid_argument("duration must be >= 0");

  SplitMix64 rng(seed);
  NetworkTrace trace;
  const auto count = static_cast<std::size_t>(duration_s / interval_s) + 1;
  trace.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u =
        fluctuation_fraction * (2.0 * rng.next_unit() - 1.0);
    trace.samples.push_back(NetworkSample{
        static_cast<double>(i) * interval_s,
        mean_bandwidth_bps * (1.0 + u), latency_s});
  }
  trace.validate();
  return trace;
}

NetworkTrace constant_trace(double bandwidth_bps, double latency_s) {
  NetworkTrace trace;
  trace.samples.push_back(NetworkSample{0.0, bandwidth_bps, latency_s});
  trace.validate();
  return trace;
}

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void save_trace(const NetworkTrace& trace, const std::filesystem::path& path,
                const std::string& config_hash) {
  trace.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << "\n";
  out << "time_s,bandwidth_bps,latency_s\n";
  for (const auto& s : trace.samples)
    out << fmt_double(s.time_s) << ',' << fmt_double(s.bandwidth_bps) << ','
        << fmt_double(s.latency_s) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

NetworkTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  NetworkTrace trace;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != "time_s,bandwidth_bps,latency_s")
        throw std::runtime_error("unexpected trace header in " + path.string());
      saw_header = true;
      continue;
    }
    std::istringstream row(line);
    NetworkSample s;
    char c1 = 0, c2 = 0;
    if (!(row >> s.time_s >> c1 >> s.bandwidth_bps >> c2 >> s.latency_s) ||
        c1 != ',' || c2 != ',')
      throw std::runtime_error("malformed trace row: " + line);
    trace.samples.push_back(s);
  }
  if (!saw_header) throw std::runtime_error("missing trace header");
  trace.validate();
  return trace;
}

}  // namespace deco
