#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cascinv/activation.hpp"
#include "cascinv/error.hpp"
#include "cascinv/graph.hpp"
#include "cascinv/parallel.hpp"
#include "cascinv/random.hpp"

namespace cascinv {

/// Discrete activation time; the first step is t = 1.
using Time = std::uint32_t;

/// Marks a node that had not activated when the cascade was cut off. Time
/// zero is never a real activation time.
inline constexpr Time kCensored = 0;

constexpr bool is_censored(Time t) noexcept { return t == kCensored; }

/// Activation time of every node in one cascade.
using CascadeTrace = std::vector<Time>;

// Activation times of every node in every cascade, stored cascade-major.
class CascadeTraceSet {
public:
  CascadeTraceSet() = default;

  CascadeTraceSet(std::size_t n_nodes, std::size_t n_cascades)
      : n_nodes_(n_nodes), n_cascades_(n_cascades), times_(n_nodes * n_cascades, kCensored) {}

  static CascadeTraceSet from_traces(std::size_t n_nodes, std::span<const CascadeTrace> traces) {
    CascadeTraceSet set(n_nodes, traces.size());
    for (std::size_t c = 0; c < traces.size(); ++c) {
      if (traces[c].size() != n_nodes) {
        throw ValidationError("cascade " + std::to_string(c) + " has " +
                              std::to_string(traces[c].size()) + " entries, expected " +
                              std::to_string(n_nodes));
      }
      std::copy(traces[c].begin(), traces[c].end(), set.times_.begin() + c * n_nodes);
    }
    set.refresh_t_max();
    return set;
  }

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_cascades() const noexcept { return n_cascades_; }
  bool empty() const noexcept { return n_cascades_ == 0; }

  /// Largest finite activation time over all cascades (0 if none).
  Time t_max() const noexcept { return t_max_; }

  std::span<const Time> cascade(std::size_t c) const {
    return {times_.data() + c * n_nodes_, n_nodes_};
  }

  Time time(std::size_t c, NodeId v) const { return times_[c * n_nodes_ + v]; }

  std::size_t censored_count() const {
    return static_cast<std::size_t>(std::count(times_.begin(), times_.end(), kCensored));
  }

  /// First `count` cascades.
  CascadeTraceSet prefix(std::size_t count) const {
    count = std::min(count, n_cascades_);
    CascadeTraceSet out(n_nodes_, count);
    std::copy_n(times_.begin(), count * n_nodes_, out.times_.begin());
    out.refresh_t_max();
    return out;
  }

  /// Same cascades in a different order; order[i] names the source cascade.
  CascadeTraceSet permuted(std::span<const std::size_t> order) const {
    CascadeTraceSet out(n_nodes_, order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto src = cascade(order[i]);
      std::copy(src.begin(), src.end(), out.times_.begin() + i * n_nodes_);
    }
    out.refresh_t_max();
    return out;
  }

  friend bool operator==(const CascadeTraceSet&, const CascadeTraceSet&) = default;

private:
  friend CascadeTraceSet run_experiments(const DirectedGraph&, const ActivationFunction&,
                                         std::size_t, Seed, std::size_t, unsigned);

  void refresh_t_max() {
    t_max_ = times_.empty() ? 0 : *std::max_element(times_.begin(), times_.end());
  }

  std::size_t n_nodes_ = 0;
  std::size_t n_cascades_ = 0;
  std::vector<Time> times_;
  Time t_max_ = 0;
};

namespace detail {

inline std::size_t max_in_degree(const DirectedGraph& g) {
  std::size_t k = 0;
  for (NodeId v = 0; v < g.n_nodes(); ++v) k = std::max(k, g.in_degree(v));
  return k;
}

inline void simulate_into(const DirectedGraph& g, const ActivationTable& f, Seed seed,
                          std::size_t step_cap, std::span<Time> times) {
  const std::size_t n = g.n_nodes();
  std::fill(times.begin(), times.end(), kCensored);
  std::vector<std::uint32_t> active_providers(n, 0);
  std::vector<NodeId> inactive(n);
  for (NodeId v = 0; v < n; ++v) inactive[v] = v;
  std::vector<NodeId> fired;
  Rng rng = make_rng(seed);

  for (std::size_t step = 1; step <= step_cap && !inactive.empty(); ++step) {
    fired.clear();
    bool any_chance = false;
    std::size_t keep = 0;
    // Decisions read active_providers as of the end of the previous step;
    // counts are only bumped after every node has drawn.
    for (NodeId v : inactive) {
      const double p = f(active_providers[v], g.in_degree(v));
      any_chance = any_chance || p > 0.0;
      if (uniform01(rng) < p) {
        fired.push_back(v);
      } else {
        inactive[keep++] = v;
      }
    }
    inactive.resize(keep);
    if (fired.empty() && !any_chance) break; // frozen: nothing can ever fire
    for (NodeId v : fired) {
      times[v] = static_cast<Time>(step);
      for (NodeId w : g.successors(v)) ++active_providers[w];
    }
  }
}

} // namespace detail

/// One synchronous cascade from the all-inactive state. Nodes still
/// inactive after step_cap steps are reported as kCensored.
inline CascadeTrace simulate_cascade(const DirectedGraph& g, const ActivationFunction& f,
                                     Seed seed, std::size_t step_cap) {
  if (step_cap < 1) throw ValidationError("step cap must be at least 1");
  const ActivationTable table(f, detail::max_in_degree(g));
  CascadeTrace times(g.n_nodes(), kCensored);
  detail::simulate_into(g, table, seed, step_cap, times);
  return times;
}

/// n_cascades independent cascades; cascade c uses derive_seed(seed, c), so
/// the result is identical for any thread count.
inline CascadeTraceSet run_experiments(const DirectedGraph& g, const ActivationFunction& f,
                                       std::size_t n_cascades, Seed seed, std::size_t step_cap,
                                       unsigned threads = 1) {
  if (n_cascades < 1) throw ValidationError("need at least one cascade");
  if (step_cap < 1) throw ValidationError("step cap must be at least 1");
  const ActivationTable table(f, detail::max_in_degree(g));
  CascadeTraceSet set(g.n_nodes(), n_cascades);
  const std::size_t n = g.n_nodes();
  parallel_for(n_cascades, threads, [&](std::size_t c) {
    detail::simulate_into(g, table, derive_seed(seed, c), step_cap,
                          std::span<Time>(set.times_.data() + c * n, n));
  });
  set.refresh_t_max();
  return set;
}

// ---------------------------------------------------------------------------
// Trace file: header "# nodes=N cascades=M", then one line per cascade with N
// space-separated fields (activation time or '-' for censored).

inline void write_traces(std::ostream& out, const CascadeTraceSet& traces) {
  out << "# nodes=" << traces.n_nodes() << " cascades=" << traces.n_cascades() << '\n';
  std::string line;
  for (std::size_t c = 0; c < traces.n_cascades(); ++c) {
    line.clear();
    bool first = true;
    for (Time t : traces.cascade(c)) {
      if (!first) line += ' ';
      first = false;
      if (is_censored(t)) {
        line += '-';
      } else {
        line += std::to_string(t);
      }
    }
    line += '\n';
    out << line;
  }
}

inline CascadeTraceSet read_traces(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  long long n_nodes = -1;
  long long n_cascades = -1;
  std::vector<CascadeTrace> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      std::istringstream tokens(line.substr(first + 1));
      std::string tok;
      while (tokens >> tok) {
        try {
          if (tok.rfind("nodes=", 0) == 0) n_nodes = std::stoll(tok.substr(6));
          if (tok.rfind("cascades=", 0) == 0) n_cascades = std::stoll(tok.substr(9));
        } catch (const std::exception&) {
          throw ParseError("line " + std::to_string(line_no) + ": bad header field '" + tok + "'");
        }
      }
      continue;
    }
    if (n_nodes < 0) {
      throw ParseError("line " + std::to_string(line_no) + ": trace data before '# nodes=' header");
    }
    CascadeTrace row;
    row.reserve(static_cast<std::size_t>(n_nodes));
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      if (tok == "-") {
        row.push_back(kCensored);
        continue;
      }
      std::size_t pos = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(tok, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != tok.size() || tok[0] == '-' || tok[0] == '+' || v == 0 || v > 0xffffffffULL) {
        throw ParseError("line " + std::to_string(line_no) + ": bad activation time '" + tok + "'");
      }
      row.push_back(static_cast<Time>(v));
    }
    if (static_cast<long long>(row.size()) != n_nodes) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(n_nodes) +
                       " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (n_nodes < 0) throw ParseError("missing '# nodes=N cascades=M' header");
  if (n_cascades >= 0 && static_cast<long long>(rows.size()) != n_cascades) {
    throw ParseError("header declares " + std::to_string(n_cascades) + " cascades, found " +
                     std::to_string(rows.size()));
  }
  return CascadeTraceSet::from_traces(static_cast<std::size_t>(n_nodes), rows);
}

inline void save_traces(const CascadeTraceSet& traces, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write traces '" + path.string() + "'");
  write_traces(out, traces);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline CascadeTraceSet load_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open traces '" + path.string() + "'");
  return read_traces(in);
}

} // namespace cascinv
