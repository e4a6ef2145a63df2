#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cascinv/activation.hpp"
#include "cascinv/cascade.hpp"
#include "cascinv/error.hpp"
#include "cascinv/graph.hpp"
#include "cascinv/meanfield.hpp"
#include "cascinv/parallel.hpp"

namespace cascinv {

/// Posteriors and likelihood-table entries are kept inside
/// [kProbabilityFloor, 1 - kProbabilityFloor].
inline constexpr double kProbabilityFloor = 1e-9;

inline double clamp_probability(double p) {
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

/// Dense N x N matrix over ordered node pairs. The diagonal is storage only.
template <typename T>
class PairMatrix {
public:
  PairMatrix() = default;
  PairMatrix(std::size_t n, T init = T{}) : n_(n), data_(n * n, init) {}

  std::size_t n_nodes() const noexcept { return n_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<T> row(std::size_t i) { return {data_.data() + i * n_, n_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

  friend bool operator==(const PairMatrix&, const PairMatrix&) = default;

private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

/// Prior probability of a directed edge between two random nodes.
inline double prior_omega(std::size_t n_nodes, std::size_t n_edges) {
  if (n_nodes < 2) throw ValidationError("prior needs at least two nodes");
  const std::size_t slots = max_edges(n_nodes);
  if (n_edges > slots) {
    throw ValidationError(std::to_string(n_edges) + " edges exceed the " + std::to_string(slots) +
                          " ordered pairs of " + std::to_string(n_nodes) + " nodes");
  }
  return static_cast<double>(n_edges) / static_cast<double>(slots);
}

/// One Bayes update of P(i->j) given the likelihood of an observation with
/// and without the edge.
inline double bayes_step(double prev, double l_edge, double l_noedge) {
  if (l_edge < 0.0 || l_noedge < 0.0) throw DomainError("likelihoods must be non-negative");
  const double with = prev * l_edge;
  const double without = (1.0 - prev) * l_noedge;
  if (with + without <= 0.0) throw DegenerateEvidenceError("both likelihoods are zero");
  return clamp_probability(with / (with + without));
}

// P(i->j | data) for every ordered pair. Evidence is accumulated as a sum of
// per-observation log-likelihood ratios, which makes the fold independent of
// cascade order and keeps the ranking informative after the reported
// probability has reached the clamp.
class EdgePosterior {
public:
  EdgePosterior() = default;
  EdgePosterior(std::size_t n_nodes, double omega)
      : omega_(omega), prior_log_odds_(std::log(clamp_probability(omega)) -
                                       std::log1p(-clamp_probability(omega))),
        evidence_(n_nodes, 0.0) {}

  std::size_t n_nodes() const noexcept { return evidence_.n_nodes(); }
  double omega() const noexcept { return omega_; }

  /// Accumulated log-likelihood ratio for i->j.
  double evidence(std::size_t i, std::size_t j) const { return evidence_(i, j); }
  const PairMatrix<double>& evidence_matrix() const noexcept { return evidence_; }
  PairMatrix<double>& evidence_matrix() noexcept { return evidence_; }

  double log_odds(std::size_t i, std::size_t j) const { return prior_log_odds_ + evidence_(i, j); }

  double probability(std::size_t i, std::size_t j) const {
    const double e = evidence_(i, j);
    if (e == 0.0) return clamp_probability(omega_);
    const double x = prior_log_odds_ + e;
    const double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    return clamp_probability(p);
  }

  void add_evidence(std::size_t i, std::size_t j, double llr) { evidence_(i, j) += llr; }

private:
  double omega_ = 0.0;
  double prior_log_odds_ = 0.0;
  PairMatrix<double> evidence_;
};

/// Log-likelihood ratio log P(t_i,t_j|i->j) - log P(t_i,t_j|no edge) for
/// every time pair, indexed by raw activation time (0 = censored).
class EvidenceTable {
public:
  explicit EvidenceTable(Time t_max) : span_(static_cast<std::size_t>(t_max) + 1), llr_(span_ * span_, 0.0) {}

  std::size_t span() const noexcept { return span_; }
  double& operator()(Time ti, Time tj) { return llr_[ti * span_ + tj]; }
  double operator()(Time ti, Time tj) const { return llr_[ti * span_ + tj]; }
  std::span<const double> row(Time ti) const { return {llr_.data() + ti * span_, span_}; }

private:
  std::size_t span_;
  std::vector<double> llr_;
};

inline double log_likelihood_ratio(double l_edge, double l_noedge) {
  return std::log(clamp_probability(l_edge)) - std::log(clamp_probability(l_noedge));
}

/// Folds every cascade's evidence into a posterior started at omega. Rows
/// are processed in parallel; each pair is summed in cascade order.
inline EdgePosterior fold_evidence(const CascadeTraceSet& traces, const EvidenceTable& table,
                                   double omega, unsigned threads = 1) {
  if (traces.t_max() >= table.span()) throw DomainError("evidence table does not cover trace times");
  const std::size_t n = traces.n_nodes();
  EdgePosterior posterior(n, omega);
  auto& ev = posterior.evidence_matrix();
  parallel_for(n, threads, [&](std::size_t i) {
    auto acc = ev.row(i);
    for (std::size_t c = 0; c < traces.n_cascades(); ++c) {
      const auto times = traces.cascade(c);
      const auto llr = table.row(times[i]);
      for (std::size_t j = 0; j < n; ++j) acc[j] += llr[times[j]];
    }
    acc[i] = 0.0;
  });
  return posterior;
}

// ---------------------------------------------------------------------------
// Theoretical likelihood
//
// Take i -> j with j of in-degree k. j's other k-1 providers activate
// independently at the population rate, so a priori m of them are active at
// the end of step s-1 with probability B(m, k-1, Q(s-1)). At step s, j fires
// with probability
//
//   h = f(m/k)        for s <= t_i
//   h = f((m+1)/k)    for s > t_i   (i counts as one more active provider)
//
// The distribution over m is carried jointly with j's survival, so
// Q_j(t) = sum_k Gamma(k) P(j active by t) and
// P(t_i, t_j | i->j) = D(t_i) [Q_j(t_j) - Q_j(t_j - 1)].
// Only k >= 1 classes can hold an edge; their weights are renormalized.
class TheoreticalLikelihood {
public:
  TheoreticalLikelihood(const DegreeDistribution& dist, const ActivationFunction& f,
                        const MeanFieldCurves& curves)
      : horizon_(curves.horizon()), d_(curves.d().begin(), curves.d().end()),
        p_edge_((horizon_ + 1) * (horizon_ + 1), 0.0) {
    if (dist.empty()) throw ValidationError("theoretical likelihood needs a degree distribution");
    double mass = 0.0;
    for (auto [k, g] : dist) {
      if (k >= 1) mass += g;
    }
    if (!(mass > 0.0)) {
      throw DomainError("degree distribution has no node with providers; no edge can exist");
    }
    const std::size_t max_k = dist.max_degree();
    const ActivationTable table(f, max_k);

    // growth[s] advances other providers through step s.
    std::vector<detail::BinomialRows> growth(horizon_ + 1);
    for (std::size_t s = 1; s <= horizon_; ++s) {
      growth[s] = detail::BinomialRows(max_k - 1, detail::provider_hazard(curves.D(s), curves.Q(s - 1)));
    }

    // fire[ti][tj]: P(j fires at tj | edge, ti), accumulated over classes.
    std::vector<double> fire((horizon_ + 2) * (horizon_ + 1), 0.0);
    auto at = [&](std::size_t ti, std::size_t tj) -> double& { return fire[ti * (horizon_ + 1) + tj]; };
    std::vector<double> unboosted(horizon_ + 1);
    std::vector<std::vector<double>> entering(horizon_ + 2); // state entering step s, i still inactive
    std::vector<double> v, scratch;

    for (auto [k, g] : dist) {
      if (k == 0 || g == 0.0) continue;
      const double weight = g / mass;
      const auto& fk = table.row(k);

      v.assign(k, 0.0);
      v[0] = 1.0;
      for (std::size_t s = 1; s <= horizon_; ++s) {
        entering[s] = v;
        double p = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
          p += v[m] * fk[m];
          v[m] *= 1.0 - fk[m];
        }
        unboosted[s] = p;
        detail::grow_providers(v, growth[s], scratch);
      }

      for (std::size_t ti = 1; ti <= horizon_; ++ti) {
        for (std::size_t tj = 1; tj <= ti; ++tj) at(ti, tj) += weight * unboosted[tj];
        if (ti == horizon_) break;
        v = entering[ti + 1];
        for (std::size_t s = ti + 1; s <= horizon_; ++s) {
          double p = 0.0;
          for (std::size_t m = 0; m < k; ++m) {
            p += v[m] * fk[m + 1];
            v[m] *= 1.0 - fk[m + 1];
          }
          at(ti, s) += weight * p;
          detail::grow_providers(v, growth[s], scratch);
        }
      }
    }

    for (std::size_t ti = 1; ti <= horizon_; ++ti) {
      for (std::size_t tj = 1; tj <= horizon_; ++tj) {
        p_edge_[ti * (horizon_ + 1) + tj] = d_[ti] * at(ti, tj);
      }
    }
  }

  std::size_t horizon() const noexcept { return horizon_; }
  double D(Time t) const { return d_.at(t); }

  /// P(t_i, t_j | i->j).
  double edge(Time ti, Time tj) const {
    check(ti);
    check(tj);
    return p_edge_[ti * (horizon_ + 1) + tj];
  }

private:
  void check(Time t) const {
    if (is_censored(t) || t > horizon_) {
      throw DomainError("time " + std::to_string(t) + " outside the curve horizon 1.." +
                        std::to_string(horizon_));
    }
  }

  std::size_t horizon_;
  std::vector<double> d_;
  std::vector<double> p_edge_;
};

inline double theoretical_pair_likelihood(Time ti, Time tj, const DegreeDistribution& dist,
                                          const ActivationFunction& f,
                                          const MeanFieldCurves& curves) {
  return TheoreticalLikelihood(dist, f, curves).edge(ti, tj);
}

/// P(t_i, t_j | no edge) from D(t_i) D(t_j) = w P(.|edge) + (1 - w) P(.|no
/// edge), floored at kProbabilityFloor when the edge term overshoots.
inline double noedge_pair_likelihood(Time ti, Time tj, double omega, double p_edge,
                                     const MeanFieldCurves& curves) {
  if (!(omega >= 0.0 && omega < 1.0)) throw DomainError("omega must lie in [0,1)");
  if (is_censored(ti) || is_censored(tj) || ti > curves.horizon() || tj > curves.horizon()) {
    throw DomainError("time outside the curve horizon");
  }
  const double joint = curves.D(ti) * curves.D(tj);
  return std::max((joint - omega * p_edge) / (1.0 - omega), kProbabilityFloor);
}

/// Method 1: Bayes fold with theoretical likelihoods built from the
/// empirical D(t), Q(t) of the traces. Pairs with a censored time carry no
/// evidence.
inline EdgePosterior infer_theoretical(const CascadeTraceSet& traces, const DegreeDistribution& dist,
                                       const ActivationFunction& f, double omega,
                                       unsigned threads = 1) {
  const MeanFieldCurves curves = empirical_curves(traces);
  EvidenceTable table(traces.t_max());
  if (curves.horizon() > 0) {
    const TheoreticalLikelihood model(dist, f, curves);
    for (Time ti = 1; ti <= traces.t_max(); ++ti) {
      for (Time tj = 1; tj <= traces.t_max(); ++tj) {
        if (curves.D(ti) == 0.0 || curves.D(tj) == 0.0) continue; // never observed
        const double edge = model.edge(ti, tj);
        table(ti, tj) = log_likelihood_ratio(edge, noedge_pair_likelihood(ti, tj, omega, edge, curves));
      }
    }
  }
  return fold_evidence(traces, table, omega, threads);
}

// ---------------------------------------------------------------------------
// Semiempirical likelihood table

// P(t_i, t_j | edge) and P(t_i, t_j | no edge) measured on a surrogate graph,
// over a (t_limit + 1)^2 grid whose last row/column collects times beyond
// t_limit and censored nodes.
class LikelihoodTable {
public:
  LikelihoodTable() = default;

  /// Add-one smoothing over the grid, then normalization.
  static LikelihoodTable from_counts(std::size_t t_limit, std::vector<std::uint64_t> edge_counts,
                                     std::vector<std::uint64_t> noedge_counts) {
    const std::size_t dim = t_limit + 1;
    if (edge_counts.size() != dim * dim || noedge_counts.size() != dim * dim) {
      throw ValidationError("count grid does not match t_limit");
    }
    LikelihoodTable t;
    t.t_limit_ = t_limit;
    t.edge_counts_ = std::move(edge_counts);
    t.noedge_counts_ = std::move(noedge_counts);
    t.p_edge_ = smooth(t.edge_counts_);
    t.p_noedge_ = smooth(t.noedge_counts_);
    return t;
  }

  std::size_t t_limit() const noexcept { return t_limit_; }
  std::size_t dim() const noexcept { return t_limit_ + 1; }

  /// Grid index of a time: 0..t_limit-1 for t = 1..t_limit, t_limit for
  /// overflow and censored.
  std::size_t bucket(Time t) const {
    return is_censored(t) || t > t_limit_ ? t_limit_ : static_cast<std::size_t>(t) - 1;
  }

  double edge(Time ti, Time tj) const { return p_edge_[bucket(ti) * dim() + bucket(tj)]; }
  double noedge(Time ti, Time tj) const { return p_noedge_[bucket(ti) * dim() + bucket(tj)]; }

  std::span<const double> p_edge() const { return p_edge_; }
  std::span<const double> p_noedge() const { return p_noedge_; }
  std::span<const std::uint64_t> edge_counts() const { return edge_counts_; }
  std::span<const std::uint64_t> noedge_counts() const { return noedge_counts_; }

  friend bool operator==(const LikelihoodTable&, const LikelihoodTable&) = default;

private:
  static std::vector<double> smooth(const std::vector<std::uint64_t>& counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c) + 1.0;
    std::vector<double> p(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      p[i] = clamp_probability((static_cast<double>(counts[i]) + 1.0) / total);
    }
    return p;
  }

  std::size_t t_limit_ = 0;
  std::vector<std::uint64_t> edge_counts_;
  std::vector<std::uint64_t> noedge_counts_;
  std::vector<double> p_edge_;
  std::vector<double> p_noedge_;
};

/// Raw (t_i, t_j) grid counts over connected and unconnected ordered pairs of
/// `g`. Unconnected pairs are counted exhaustively from the per-bucket node
/// histogram, so every unconnected pair contributes once per cascade.
inline std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>
count_pair_times(const DirectedGraph& g, const CascadeTraceSet& traces, std::size_t t_limit) {
  const std::size_t dim = t_limit + 1;
  auto bucket = [&](Time t) {
    return is_censored(t) || t > t_limit ? t_limit : static_cast<std::size_t>(t) - 1;
  };
  std::vector<std::uint64_t> edge(dim * dim, 0);
  std::vector<std::uint64_t> all(dim * dim, 0);
  std::vector<std::uint64_t> hist(dim);
  const EdgeList edges = g.edges();
  for (std::size_t c = 0; c < traces.n_cascades(); ++c) {
    const auto times = traces.cascade(c);
    std::fill(hist.begin(), hist.end(), 0);
    for (Time t : times) ++hist[bucket(t)];
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < dim; ++b) {
        all[a * dim + b] += hist[a] * hist[b] - (a == b ? hist[a] : 0);
      }
    }
    for (const Edge& e : edges) ++edge[bucket(times[e.src]) * dim + bucket(times[e.dst])];
  }
  for (std::size_t x = 0; x < all.size(); ++x) all[x] -= edge[x];
  return {std::move(edge), std::move(all)};
}

inline LikelihoodTable measure_likelihood_table(const DirectedGraph& surrogate,
                                                const ActivationFunction& f,
                                                std::size_t n_cascades, Seed seed,
                                                std::size_t step_cap, std::size_t t_limit,
                                                unsigned threads = 1) {
  if (t_limit < 1) throw ValidationError("t_limit must be at least 1");
  if (surrogate.n_edges() == 0) {
    throw ValidationError("surrogate has no edges; P(t_i,t_j | edge) cannot be measured");
  }
  const CascadeTraceSet traces = run_experiments(surrogate, f, n_cascades, seed, step_cap, threads);
  auto [edge, noedge] = count_pair_times(surrogate, traces, t_limit);
  return LikelihoodTable::from_counts(t_limit, std::move(edge), std::move(noedge));
}

/// Method 2: Bayes fold with likelihoods looked up in a measured table.
inline EdgePosterior infer_semiempirical(const CascadeTraceSet& traces, const LikelihoodTable& table,
                                         double omega, unsigned threads = 1) {
  EvidenceTable evidence(traces.t_max());
  for (Time ti = 0; ti <= traces.t_max(); ++ti) {
    for (Time tj = 0; tj <= traces.t_max(); ++tj) {
      evidence(ti, tj) = log_likelihood_ratio(table.edge(ti, tj), table.noedge(ti, tj));
    }
  }
  return fold_evidence(traces, evidence, omega, threads);
}

// ---------------------------------------------------------------------------
// Heuristic

/// counts(i, j) = number of cascades in which j activated exactly one step
/// after i.
struct HeuristicScores {
  PairMatrix<std::uint32_t> counts;
  std::size_t n_cascades = 0;
};

inline HeuristicScores score_heuristic(const CascadeTraceSet& traces,
                                       std::size_t max_cascades = std::numeric_limits<std::size_t>::max()) {
  const std::size_t n = traces.n_nodes();
  const std::size_t used = std::min(max_cascades, traces.n_cascades());
  HeuristicScores scores{PairMatrix<std::uint32_t>(n, 0), used};
  std::vector<std::vector<NodeId>> by_time;
  for (std::size_t c = 0; c < used; ++c) {
    const auto times = traces.cascade(c);
    by_time.assign(traces.t_max() + 2, {});
    for (NodeId v = 0; v < n; ++v) {
      if (!is_censored(times[v])) by_time[times[v]].push_back(v);
    }
    for (std::size_t t = 1; t + 1 < by_time.size(); ++t) {
      for (NodeId i : by_time[t]) {
        auto row = scores.counts.row(i);
        for (NodeId j : by_time[t + 1]) ++row[j];
      }
    }
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Selection

/// Ordered pairs ranked by descending score, ties by ascending (i, j).
/// Non-finite scores are never selected. Returns at most n_edges pairs in
/// rank order.
template <typename T>
EdgeList rank_pairs(const PairMatrix<T>& scores, std::size_t n_edges) {
  struct Candidate {
    T score;
    Edge edge;
  };
  const std::size_t n = scores.n_nodes();
  std::vector<Candidate> pool;
  pool.reserve(max_edges(n));
  for (NodeId i = 0; i < n; ++i) {
    const auto row = scores.row(i);
    for (NodeId j = 0; j < n; ++j) {
      if (i == j) continue;
      if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(row[j])) continue;
      }
      pool.push_back({row[j], {i, j}});
    }
  }
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.edge < b.edge;
  };
  const std::size_t take = std::min(n_edges, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(), better);
  EdgeList out;
  out.reserve(take);
  for (std::size_t x = 0; x < take; ++x) out.push_back(pool[x].edge);
  return out;
}

/// The n_edges highest-scoring ordered pairs as a sorted edge set.
template <typename T>
EdgeList select_edges(const PairMatrix<T>& scores, std::size_t n_edges) {
  if (n_edges > max_edges(scores.n_nodes())) {
    throw ValidationError("cannot select " + std::to_string(n_edges) + " edges among " +
                          std::to_string(max_edges(scores.n_nodes())) + " ordered pairs");
  }
  EdgeList out = rank_pairs(scores, n_edges);
  std::sort(out.begin(), out.end());
  return out;
}

inline EdgeList select_edges(const EdgePosterior& posterior, std::size_t n_edges) {
  return select_edges(posterior.evidence_matrix(), n_edges);
}

inline EdgeList select_edges(const HeuristicScores& scores, std::size_t n_edges) {
  return select_edges(scores.counts, n_edges);
}

/// In-degree distribution of the graph the heuristic infers, for use as
/// Gamma(k) when the true distribution is unknown.
inline DegreeDistribution bootstrap_degree_distribution(
    const CascadeTraceSet& traces, std::size_t n_edges,
    std::size_t max_cascades = std::numeric_limits<std::size_t>::max()) {
  if (traces.empty()) throw ValidationError("bootstrap needs at least one cascade");
  const EdgeList edges = select_edges(score_heuristic(traces, max_cascades), n_edges);
  return in_degree_distribution(DirectedGraph::from_edges(traces.n_nodes(), edges));
}

// ---------------------------------------------------------------------------
// Score dump: "# method=<name> omega=<value>", then one tab-separated row
// per source node; the diagonal is written as '-'.

inline void write_score_dump(std::ostream& out, std::string_view method, const EdgePosterior& posterior) {
  out << "# method=" << method << " omega=" << detail::format_double(posterior.omega()) << '\n';
  const std::size_t n = posterior.n_nodes();
  for (std::size_t i = 0; i < n; ++i) {
    std::string line;
    for (std::size_t j = 0; j < n; ++j) {
      if (j) line += '\t';
      line += i == j ? std::string("-") : detail::format_double(posterior.probability(i, j));
    }
    out << line << '\n';
  }
}

inline void write_score_dump(std::ostream& out, const HeuristicScores& scores, double omega) {
  out << "# method=heuristic omega=" << detail::format_double(omega) << '\n';
  const std::size_t n = scores.counts.n_nodes();
  for (std::size_t i = 0; i < n; ++i) {
    std::string line;
    for (std::size_t j = 0; j < n; ++j) {
      if (j) line += '\t';
      line += i == j ? std::string("-") : std::to_string(scores.counts(i, j));
    }
    out << line << '\n';
  }
}

} // namespace cascinv
