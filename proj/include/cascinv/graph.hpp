#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cascinv/error.hpp"
#include "cascinv/random.hpp"

namespace cascinv {

using NodeId = std::uint32_t;

struct Edge {
  NodeId src;
  NodeId dst;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Sorted, duplicate-free list of directed edges.
using EdgeList = std::vector<Edge>;

inline void normalize(EdgeList& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

inline std::size_t max_edges(std::size_t n_nodes) {
  return n_nodes < 2 ? 0 : n_nodes * (n_nodes - 1);
}

// Directed simple graph stored as provider (in-neighbor) lists, with the
// mirrored successor lists the simulator needs. Immutable once built.
class DirectedGraph {
public:
  DirectedGraph() = default;

  explicit DirectedGraph(std::size_t n_nodes)
      : providers_(n_nodes), successors_(n_nodes) {}

  /// Throws ValidationError on self-loops, duplicates or out-of-range ids.
  static DirectedGraph from_edges(std::size_t n_nodes, std::span<const Edge> edges) {
    DirectedGraph g(n_nodes);
    for (const Edge& e : edges) {
      if (e.src >= n_nodes || e.dst >= n_nodes) {
        throw ValidationError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                              " references a node outside [0, " + std::to_string(n_nodes) + ")");
      }
      if (e.src == e.dst) {
        throw ValidationError("self-loop on node " + std::to_string(e.src));
      }
      g.providers_[e.dst].push_back(e.src);
      g.successors_[e.src].push_back(e.dst);
    }
    for (NodeId v = 0; v < n_nodes; ++v) {
      auto& p = g.providers_[v];
      std::sort(p.begin(), p.end());
      if (auto dup = std::adjacent_find(p.begin(), p.end()); dup != p.end()) {
        throw ValidationError("duplicate edge " + std::to_string(*dup) + "->" + std::to_string(v));
      }
      std::sort(g.successors_[v].begin(), g.successors_[v].end());
    }
    g.n_edges_ = edges.size();
    return g;
  }

  std::size_t n_nodes() const noexcept { return providers_.size(); }
  std::size_t n_edges() const noexcept { return n_edges_; }

  std::span<const NodeId> providers(NodeId v) const { return providers_[v]; }
  std::span<const NodeId> successors(NodeId v) const { return successors_[v]; }
  std::size_t in_degree(NodeId v) const { return providers_[v].size(); }
  std::size_t out_degree(NodeId v) const { return successors_[v].size(); }

  bool has_edge(NodeId src, NodeId dst) const {
    const auto& p = providers_[dst];
    return std::binary_search(p.begin(), p.end(), src);
  }

  EdgeList edges() const {
    EdgeList out;
    out.reserve(n_edges_);
    for (NodeId src = 0; src < n_nodes(); ++src) {
      for (NodeId dst : successors_[src]) out.push_back({src, dst});
    }
    return out;
  }

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.providers_ == b.providers_;
  }

private:
  std::vector<std::vector<NodeId>> providers_;
  std::vector<std::vector<NodeId>> successors_;
  std::size_t n_edges_ = 0;
};

// Gamma(k): fraction of nodes with in-degree k.
class DegreeDistribution {
public:
  DegreeDistribution() = default;

  explicit DegreeDistribution(std::map<std::size_t, double> gamma) : gamma_(std::move(gamma)) {
    double total = 0.0;
    for (auto [k, frac] : gamma_) {
      if (!(frac >= 0.0) || frac > 1.0) {
        throw ValidationError("degree fraction for k=" + std::to_string(k) + " is outside [0,1]");
      }
      total += frac;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("degree fractions sum to " + std::to_string(total) + ", expected 1");
    }
  }

  const std::map<std::size_t, double>& fractions() const noexcept { return gamma_; }
  auto begin() const { return gamma_.begin(); }
  auto end() const { return gamma_.end(); }
  bool empty() const noexcept { return gamma_.empty(); }

  double at(std::size_t k) const {
    auto it = gamma_.find(k);
    return it == gamma_.end() ? 0.0 : it->second;
  }

  std::size_t max_degree() const { return gamma_.empty() ? 0 : gamma_.rbegin()->first; }

  double mean() const {
    double m = 0.0;
    for (auto [k, frac] : gamma_) m += static_cast<double>(k) * frac;
    return m;
  }

  friend bool operator==(const DegreeDistribution&, const DegreeDistribution&) = default;

private:
  std::map<std::size_t, double> gamma_;
};

/// Number of nodes per in-degree.
inline std::map<std::size_t, std::size_t> in_degree_histogram(const DirectedGraph& g) {
  std::map<std::size_t, std::size_t> hist;
  for (NodeId v = 0; v < g.n_nodes(); ++v) ++hist[g.in_degree(v)];
  return hist;
}

inline DegreeDistribution in_degree_distribution(const DirectedGraph& g) {
  std::map<std::size_t, double> gamma;
  const double n = static_cast<double>(g.n_nodes());
  for (auto [k, count] : in_degree_histogram(g)) gamma[k] = static_cast<double>(count) / n;
  return DegreeDistribution(std::move(gamma));
}

/// Uniformly random simple digraph with exactly n_edges edges. Samples
/// n_edges distinct slots out of the n(n-1) ordered pairs (Floyd's method).
inline DirectedGraph generate_random_graph(std::size_t n_nodes, std::size_t n_edges, Seed seed) {
  const std::size_t slots = max_edges(n_nodes);
  if (n_edges > slots) {
    throw CapacityError("requested " + std::to_string(n_edges) + " edges but " +
                        std::to_string(n_nodes) + " nodes admit at most " + std::to_string(slots));
  }
  Rng rng = make_rng(seed);
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(n_edges * 2);
  std::vector<std::uint64_t> order;
  order.reserve(n_edges);
  for (std::uint64_t j = slots - n_edges; j < slots; ++j) {
    const std::uint64_t t = uniform_below(rng, j + 1);
    const std::uint64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    order.push_back(pick);
  }
  EdgeList edges;
  edges.reserve(n_edges);
  for (std::uint64_t slot : order) {
    const auto src = static_cast<NodeId>(slot / (n_nodes - 1));
    const auto r = static_cast<NodeId>(slot % (n_nodes - 1));
    edges.push_back({src, r < src ? r : r + 1});
  }
  return DirectedGraph::from_edges(n_nodes, edges);
}

namespace detail {

// Node counts per degree: round(gamma*n), then largest-remainder adjustment
// so the counts sum to n.
inline std::map<std::size_t, std::size_t> realize_counts(const DegreeDistribution& target,
                                                         std::size_t n_nodes) {
  struct Slot {
    std::size_t k;
    double exact;
    long long count;
  };
  std::vector<Slot> slots;
  long long total = 0;
  for (auto [k, frac] : target) {
    const double exact = frac * static_cast<double>(n_nodes);
    const auto count = static_cast<long long>(std::llround(exact));
    slots.push_back({k, exact, count});
    total += count;
  }
  auto residual = [](const Slot& s) { return s.exact - static_cast<double>(s.count); };
  while (total < static_cast<long long>(n_nodes)) {
    auto it = std::max_element(slots.begin(), slots.end(), [&](const Slot& a, const Slot& b) {
      return residual(a) < residual(b);
    });
    ++it->count;
    ++total;
  }
  while (total > static_cast<long long>(n_nodes)) {
    auto it = slots.end();
    for (auto s = slots.begin(); s != slots.end(); ++s) {
      if (s->count > 0 && (it == slots.end() || residual(*s) < residual(*it))) it = s;
    }
    --it->count;
    --total;
  }
  std::map<std::size_t, std::size_t> counts;
  for (const Slot& s : slots) {
    if (s.count == 0) continue;
    if (s.k >= n_nodes) {
      throw ConstructionError("in-degree k=" + std::to_string(s.k) + " cannot be realized with " +
                              std::to_string(n_nodes) + " nodes");
    }
    counts[s.k] = static_cast<std::size_t>(s.count);
  }
  return counts;
}

} // namespace detail

/// Random graph whose in-degree distribution matches `target` exactly.
/// Degrees are assigned to nodes in random order; each node then receives
/// k distinct providers drawn uniformly from the other nodes. Out-degrees
/// are left unconstrained.
inline DirectedGraph build_surrogate(const DegreeDistribution& target, std::size_t n_nodes,
                                     Seed seed) {
  if (target.empty()) throw ConstructionError("empty target degree distribution");
  const auto counts = detail::realize_counts(target, n_nodes);
  std::vector<std::size_t> degrees;
  degrees.reserve(n_nodes);
  for (auto [k, c] : counts) degrees.insert(degrees.end(), c, k);

  Rng rng = make_rng(seed);
  for (std::size_t i = degrees.size(); i > 1; --i) {
    std::swap(degrees[i - 1], degrees[uniform_below(rng, i)]);
  }

  EdgeList edges;
  std::unordered_set<std::uint64_t> picked;
  for (NodeId v = 0; v < n_nodes; ++v) {
    const std::size_t k = degrees[v];
    const std::size_t pool = n_nodes - 1;
    picked.clear();
    for (std::uint64_t j = pool - k; j < pool; ++j) {
      const std::uint64_t t = uniform_below(rng, j + 1);
      picked.insert(picked.contains(t) ? j : t);
    }
    std::vector<std::uint64_t> sorted(picked.begin(), picked.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::uint64_t r : sorted) {
      const auto src = static_cast<NodeId>(r < v ? r : r + 1);
      edges.push_back({src, v});
    }
  }
  return DirectedGraph::from_edges(n_nodes, edges);
}

// ---------------------------------------------------------------------------
// Edge-list text format
//
//   # nodes=N          optional; declares isolated nodes, ids must be 0..N-1
//   src<TAB>dst        one edge per line
//
// Without a nodes= header, labels are arbitrary tokens mapped to dense ids in
// order of first appearance.

inline DirectedGraph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> declared_nodes;
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::pair<std::string, std::string>> raw;
  std::vector<std::size_t> raw_lines;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      std::istringstream tokens(line.substr(first + 1));
      std::string tok;
      while (tokens >> tok) {
        if (tok.rfind("nodes=", 0) == 0) {
          try {
            std::size_t pos = 0;
            const auto value = std::stoull(tok.substr(6), &pos);
            if (pos != tok.size() - 6) throw std::invalid_argument(tok);
            declared_nodes = value;
          } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad node count '" + tok + "'");
          }
        }
      }
      continue;
    }
    std::istringstream fields(line);
    std::string src, dst, extra;
    if (!(fields >> src >> dst) || (fields >> extra)) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'src<TAB>dst', got '" +
                       line + "'");
    }
    raw.emplace_back(std::move(src), std::move(dst));
    raw_lines.push_back(line_no);
  }

  EdgeList edges;
  edges.reserve(raw.size());
  std::size_t n_nodes = 0;
  if (declared_nodes) {
    n_nodes = *declared_nodes;
    auto parse_id = [&](const std::string& tok, std::size_t at) -> NodeId {
      std::size_t pos = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(tok, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != tok.size() || tok.empty() || tok[0] == '-') {
        throw ParseError("line " + std::to_string(at) + ": node id '" + tok +
                         "' is not a non-negative integer");
      }
      if (v >= n_nodes) {
        throw ValidationError("line " + std::to_string(at) + ": node id " + tok +
                              " out of range for nodes=" + std::to_string(n_nodes));
      }
      return static_cast<NodeId>(v);
    };
    for (std::size_t e = 0; e < raw.size(); ++e) {
      edges.push_back({parse_id(raw[e].first, raw_lines[e]), parse_id(raw[e].second, raw_lines[e])});
    }
  } else {
    auto intern = [&](const std::string& tok) {
      auto [it, inserted] = ids.try_emplace(tok, static_cast<NodeId>(ids.size()));
      return it->second;
    };
    for (auto& [s, d] : raw) {
      const NodeId a = intern(s);
      const NodeId b = intern(d);
      edges.push_back({a, b});
    }
    n_nodes = ids.size();
  }
  return DirectedGraph::from_edges(n_nodes, edges);
}

inline void write_edge_list(std::ostream& out, const DirectedGraph& g) {
  out << "# nodes=" << g.n_nodes() << " edges=" << g.n_edges() << '\n';
  for (const Edge& e : g.edges()) out << e.src << '\t' << e.dst << '\n';
}

inline DirectedGraph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path.string() + "'");
  return read_edge_list(in);
}

inline void save_edge_list(const DirectedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write edge list '" + path.string() + "'");
  write_edge_list(out, g);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Degree-distribution file: "# degree-distribution", then "k<TAB>fraction".

inline void write_degree_distribution(std::ostream& out, const DegreeDistribution& dist) {
  out << "# degree-distribution\n";
  out.precision(17);
  for (auto [k, frac] : dist) out << k << '\t' << frac << '\n';
}

inline DegreeDistribution read_degree_distribution(std::istream& in) {
  std::map<std::size_t, double> gamma;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long k = -1;
    double frac = -1.0;
    std::string extra;
    if (!(fields >> k >> frac) || (fields >> extra) || k < 0) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'k<TAB>fraction'");
    }
    gamma[static_cast<std::size_t>(k)] += frac;
  }
  return DegreeDistribution(std::move(gamma));
}

inline DegreeDistribution load_degree_distribution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open degree distribution '" + path.string() + "'");
  return read_degree_distribution(in);
}

} // namespace cascinv
