#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cascinv/cascinv.hpp"

namespace testing_support {

using namespace cascinv;

// Random traces with times in 1..t_max and roughly `censored` of the
// entries censored.
inline CascadeTraceSet random_traces(std::size_t n_nodes, std::size_t n_cascades, Time t_max, Seed seed,
                                     double censored = 0.1) {
  Rng rng = make_rng(seed);
  std::vector<CascadeTrace> rows(n_cascades, CascadeTrace(n_nodes));
  for (auto& row : rows) {
    for (auto& t : row) {
      t = uniform01(rng) < censored ? kCensored : static_cast<Time>(1 + uniform_below(rng, t_max));
    }
  }
  return CascadeTraceSet::from_traces(n_nodes, rows);
}

// Exact distribution of activation-time vectors for a small graph, found by
// expanding every combination of per-step coin flips up to `horizon` steps.
// Nodes still inactive after the horizon keep time 0, as in a censored trace.
inline std::map<std::vector<Time>, double> enumerate_cascades(const DirectedGraph& g, const ActivationFunction& f,
                                                              std::size_t horizon) {
  const std::size_t n = g.n_nodes();
  std::map<std::vector<Time>, double> done;
  std::map<std::vector<Time>, double> live{{std::vector<Time>(n, 0), 1.0}};
  for (std::size_t step = 1; step <= horizon && !live.empty(); ++step) {
    std::map<std::vector<Time>, double> next;
    for (const auto& [times, mass] : live) {
      std::vector<NodeId> waiting;
      std::vector<double> p;
      for (NodeId v = 0; v < n; ++v) {
        if (times[v] != 0) continue;
        std::size_t m = 0;
        for (NodeId u : g.providers(v)) m += times[u] != 0 ? 1 : 0;
        waiting.push_back(v);
        p.push_back(f(m, g.in_degree(v)));
      }
      for (std::size_t mask = 0; mask < (std::size_t{1} << waiting.size()); ++mask) {
        double w = mass;
        std::vector<Time> out = times;
        for (std::size_t b = 0; b < waiting.size(); ++b) {
          if (mask >> b & 1) {
            w *= p[b];
            out[waiting[b]] = static_cast<Time>(step);
          } else {
            w *= 1.0 - p[b];
          }
        }
        if (w == 0.0) continue;
        bool finished = true;
        for (Time t : out) finished = finished && t != 0;
        (finished ? done : next)[out] += w;
      }
    }
    live.swap(next);
  }
  for (const auto& [times, mass] : live) done[times] += mass;
  return done;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("cascinv_" + tag + "_" + std::to_string(derive_seed(reinterpret_cast<std::uintptr_t>(this), 0) % 1000000));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

} // namespace testing_support
