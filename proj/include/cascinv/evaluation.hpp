#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cascinv/activation.hpp"
#include "cascinv/cascade.hpp"
#include "cascinv/error.hpp"
#include "cascinv/graph.hpp"
#include "cascinv/inference.hpp"
#include "cascinv/parallel.hpp"

namespace cascinv {

/// |predicted ∩ truth| / |truth| over sorted edge sets.
inline double accuracy(const EdgeList& predicted, const EdgeList& truth) {
  if (truth.empty()) throw ValidationError("accuracy needs a non-empty true edge set");
  EdgeList p = predicted;
  EdgeList t = truth;
  normalize(p);
  normalize(t);
  std::size_t hits = 0;
  auto a = p.begin();
  auto b = t.begin();
  while (a != p.end() && b != t.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++hits;
      ++a;
      ++b;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(t.size());
}

enum class Method { theoretical, semiempirical, heuristic };

inline std::string_view to_string(Method m) {
  switch (m) {
  case Method::theoretical: return "theoretical";
  case Method::semiempirical: return "semiempirical";
  case Method::heuristic: return "heuristic";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "theoretical") return Method::theoretical;
  if (name == "semiempirical") return Method::semiempirical;
  if (name == "heuristic") return Method::heuristic;
  throw UsageError("unknown method '" + std::string(name) +
                   "' (expected theoretical, semiempirical or heuristic)");
}

/// Where Gamma(k) for the Bayesian methods comes from.
enum class GammaSource { truth, bootstrap };

inline std::string_view to_string(GammaSource g) {
  return g == GammaSource::truth ? "truth" : "bootstrap";
}

struct GraphSource {
  std::optional<std::filesystem::path> file; // edge list; otherwise a random graph
  std::size_t n_nodes = 200;
  std::size_t n_edges = 1484;
  std::optional<double> density; // overrides n_edges: round(density * N(N-1))
};

// Everything needed to reproduce one trial.
struct TrialConfig {
  GraphSource graph;
  ActivationFunction model = Threshold{0.04, 0.6, 0.4};
  std::size_t n_cascades = 2000;
  Seed seed = 1;
  std::size_t step_cap = 10000;
  std::vector<Method> methods{Method::theoretical, Method::semiempirical, Method::heuristic};
  GammaSource gamma_source = GammaSource::truth;
  std::size_t surrogate_cascades = 2000;
  std::size_t surrogate_graphs = 10; // cascades are split across this many surrogates
  std::size_t t_limit = 0;            // 0: largest observed activation time
  std::size_t heuristic_cascades = 0; // 0: every cascade
  unsigned threads = 1;
};

/// Stable key = value echo of a configuration (thread count excluded: it
/// never changes results).
inline std::string describe(const TrialConfig& c) {
  std::string out;
  auto put = [&](std::string_view k, const std::string& v) {
    out += std::string(k) + " = " + v + "\n";
  };
  if (c.graph.file) {
    put("graph", "file:" + c.graph.file->string());
  } else {
    put("graph", "random:" + std::to_string(c.graph.n_nodes) + "," + std::to_string(c.graph.n_edges));
    if (c.graph.density) put("density", detail::format_double(*c.graph.density));
  }
  put("model", to_string(c.model));
  put("cascades", std::to_string(c.n_cascades));
  put("seed", std::to_string(c.seed));
  put("step_cap", std::to_string(c.step_cap));
  std::string methods;
  for (Method m : c.methods) methods += (methods.empty() ? "" : ",") + std::string(to_string(m));
  put("methods", methods);
  put("gamma_from", std::string(to_string(c.gamma_source)));
  put("surrogate_cascades", std::to_string(c.surrogate_cascades));
  put("surrogate_graphs", std::to_string(c.surrogate_graphs));
  put("t_limit", std::to_string(c.t_limit));
  put("heuristic_cascades", std::to_string(c.heuristic_cascades));
  return out;
}

struct InferenceReport {
  Method method;
  EdgeList predicted_edges;
  double accuracy = 0.0;
  std::string params;
  double wall_time = 0.0; // seconds

  /// Equality on everything except wall time.
  bool same_result(const InferenceReport& o) const {
    return method == o.method && predicted_edges == o.predicted_edges && accuracy == o.accuracy &&
           params == o.params;
  }
};

// Stream indices under the trial seed.
namespace seeds {
inline constexpr std::uint64_t graph = 0;
inline constexpr std::uint64_t cascades = 1;
inline constexpr std::uint64_t surrogate_graph = 2;
inline constexpr std::uint64_t surrogate_cascades = 3;
} // namespace seeds

inline DirectedGraph resolve_graph(const TrialConfig& c) {
  if (c.graph.file) return load_edge_list(*c.graph.file);
  std::size_t edges = c.graph.n_edges;
  if (c.graph.density) {
    edges = static_cast<std::size_t>(std::llround(*c.graph.density * static_cast<double>(max_edges(c.graph.n_nodes))));
  }
  return generate_random_graph(c.graph.n_nodes, edges, derive_seed(c.seed, seeds::graph));
}

/// Likelihood table pooled over n_graphs independent surrogates of the given
/// in-degree distribution; the n_cascades are split as evenly as possible.
/// On small graphs a single surrogate's timing can differ noticeably from
/// the target's, and pooling averages that out.
inline LikelihoodTable surrogate_likelihood_table(const DegreeDistribution& gamma, std::size_t n_nodes,
                                                  const ActivationFunction& f, std::size_t n_cascades,
                                                  Seed seed, std::size_t step_cap, std::size_t t_limit,
                                                  unsigned threads = 1, std::size_t n_graphs = 1) {
  if (t_limit < 1) throw ValidationError("t_limit must be at least 1");
  if (n_cascades < 1) throw ValidationError("need at least one surrogate cascade");
  n_graphs = std::clamp<std::size_t>(n_graphs, 1, n_cascades);
  const std::size_t dim = t_limit + 1;
  std::vector<std::uint64_t> edge(dim * dim, 0);
  std::vector<std::uint64_t> noedge(dim * dim, 0);
  for (std::size_t s = 0; s < n_graphs; ++s) {
    const DirectedGraph surrogate =
        build_surrogate(gamma, n_nodes, derive_seed(derive_seed(seed, seeds::surrogate_graph), s));
    if (surrogate.n_edges() == 0) {
      throw ValidationError("surrogate has no edges; P(t_i,t_j | edge) cannot be measured");
    }
    const std::size_t share = n_cascades / n_graphs + (s < n_cascades % n_graphs ? 1 : 0);
    const CascadeTraceSet traces = run_experiments(
        surrogate, f, share, derive_seed(derive_seed(seed, seeds::surrogate_cascades), s), step_cap, threads);
    const auto [e, ne] = count_pair_times(surrogate, traces, t_limit);
    for (std::size_t x = 0; x < e.size(); ++x) {
      edge[x] += e[x];
      noedge[x] += ne[x];
    }
  }
  return LikelihoodTable::from_counts(t_limit, std::move(edge), std::move(noedge));
}

/// Graph -> cascades -> each requested method -> E selected edges -> accuracy.
inline std::vector<InferenceReport> run_trial(const TrialConfig& c) {
  using clock = std::chrono::steady_clock;
  const DirectedGraph graph = resolve_graph(c);
  if (graph.n_edges() == 0) throw ValidationError("trial graph has no edges to recover");
  const EdgeList truth = graph.edges();
  const std::size_t n = graph.n_nodes();
  const std::size_t e = graph.n_edges();
  const CascadeTraceSet traces =
      run_experiments(graph, c.model, c.n_cascades, derive_seed(c.seed, seeds::cascades), c.step_cap, c.threads);
  const double omega = prior_omega(n, e);
  const std::size_t heuristic_limit =
      c.heuristic_cascades == 0 ? traces.n_cascades() : c.heuristic_cascades;

  std::optional<DegreeDistribution> gamma;
  auto need_gamma = [&]() -> const DegreeDistribution& {
    if (!gamma) {
      gamma = c.gamma_source == GammaSource::truth
                  ? in_degree_distribution(graph)
                  : bootstrap_degree_distribution(traces, e, heuristic_limit);
    }
    return *gamma;
  };

  const std::string params = describe(c);
  std::vector<InferenceReport> reports;
  for (Method m : c.methods) {
    const auto start = clock::now();
    EdgeList predicted;
    switch (m) {
    case Method::heuristic:
      predicted = select_edges(score_heuristic(traces, heuristic_limit), e);
      break;
    case Method::theoretical:
      predicted = select_edges(infer_theoretical(traces, need_gamma(), c.model, omega, c.threads), e);
      break;
    case Method::semiempirical: {
      const std::size_t t_limit = c.t_limit ? c.t_limit : std::max<std::size_t>(1, traces.t_max());
      const LikelihoodTable table = surrogate_likelihood_table(
          need_gamma(), n, c.model, c.surrogate_cascades, c.seed, c.step_cap, t_limit, c.threads,
          c.surrogate_graphs);
      predicted = select_edges(infer_semiempirical(traces, table, omega, c.threads), e);
      break;
    }
    }
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();
    const double acc = accuracy(predicted, truth);
    reports.push_back({m, std::move(predicted), acc, params, seconds});
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParameter { gamma, epsilon, critical_fraction, n_experiments, n_nodes, n_edges, density };

inline std::string_view to_string(SweepParameter p) {
  switch (p) {
  case SweepParameter::gamma: return "gamma";
  case SweepParameter::epsilon: return "epsilon";
  case SweepParameter::critical_fraction: return "f_c";
  case SweepParameter::n_experiments: return "n_experiments";
  case SweepParameter::n_nodes: return "n_nodes";
  case SweepParameter::n_edges: return "n_edges";
  case SweepParameter::density: return "density";
  }
  return "?";
}

inline SweepParameter parse_sweep_parameter(std::string_view s) {
  for (auto p : {SweepParameter::gamma, SweepParameter::epsilon, SweepParameter::critical_fraction,
                 SweepParameter::n_experiments, SweepParameter::n_nodes, SweepParameter::n_edges,
                 SweepParameter::density}) {
    if (s == to_string(p)) return p;
  }
  throw UsageError("unknown sweep parameter '" + std::string(s) + "'");
}

/// How the cascade count follows the swept graph.
enum class CascadePolicy {
  fixed,         // base n_cascades (or the swept value)
  equal_edges,   // n_cascades = E
  pair_fraction, // n_cascades = round(fraction * N(N-1))
};

struct SweepSpec {
  SweepParameter parameter = SweepParameter::n_experiments;
  std::vector<double> values;
  TrialConfig base;
  std::size_t replicates = 3;
  CascadePolicy policy = CascadePolicy::fixed;
  double pair_fraction = 0.4;
};

struct SweepRow {
  double value;
  Method method;
  std::size_t replicate;
  double accuracy;
  double seconds;
};

struct SweepSummary {
  double value;
  Method method;
  double mean;
  double stderr_;
  std::size_t replicates;
};

struct SweepResult {
  SweepParameter parameter;
  std::vector<SweepRow> rows;        // sorted by value, replicate, method order
  std::vector<SweepSummary> summary; // sorted by value, method order
};

/// Trial configuration for one sweep point.
inline TrialConfig sweep_point(const SweepSpec& spec, double value, std::size_t replicate) {
  TrialConfig c = spec.base;
  c.seed = derive_seed(spec.base.seed, replicate);
  auto threshold = [&]() -> Threshold {
    const auto* t = std::get_if<Threshold>(&c.model.model());
    if (!t) throw ValidationError("sweeping " + std::string(to_string(spec.parameter)) +
                                  " needs a threshold model");
    return *t;
  };
  auto count = [&](double v) {
    if (!(v >= 0.0)) throw ValidationError("sweep value must be non-negative");
    return static_cast<std::size_t>(std::llround(v));
  };
  auto need_random = [&] {
    if (c.graph.file) throw ValidationError("cannot sweep graph size with a fixed edge-list graph");
  };
  switch (spec.parameter) {
  case SweepParameter::gamma: { auto t = threshold(); t.gamma = value; c.model = t; break; }
  case SweepParameter::epsilon: { auto t = threshold(); t.epsilon = value; c.model = t; break; }
  case SweepParameter::critical_fraction: { auto t = threshold(); t.critical_fraction = value; c.model = t; break; }
  case SweepParameter::n_experiments: c.n_cascades = count(value); break;
  case SweepParameter::n_nodes: need_random(); c.graph.n_nodes = count(value); break;
  case SweepParameter::n_edges: need_random(); c.graph.n_edges = count(value); c.graph.density.reset(); break;
  case SweepParameter::density: need_random(); c.graph.density = value; break;
  }
  if (spec.policy != CascadePolicy::fixed) {
    const DirectedGraph g = resolve_graph(c);
    c.n_cascades = spec.policy == CascadePolicy::equal_edges
                       ? g.n_edges()
                       : static_cast<std::size_t>(std::llround(spec.pair_fraction * static_cast<double>(max_edges(g.n_nodes()))));
  }
  c.n_cascades = std::max<std::size_t>(1, c.n_cascades);
  return c;
}

/// One trial per (value, replicate); trials run concurrently and are
/// assembled in value order.
inline SweepResult run_sweep(const SweepSpec& spec, unsigned threads = 1) {
  if (spec.values.empty()) throw ValidationError("sweep needs at least one value");
  if (spec.replicates < 1) throw ValidationError("sweep needs at least one replicate");
  if (spec.base.methods.empty()) throw ValidationError("sweep needs at least one method");
  std::vector<double> values = spec.values;
  std::sort(values.begin(), values.end());

  const std::size_t tasks = values.size() * spec.replicates;
  std::vector<std::vector<InferenceReport>> reports(tasks);
  const unsigned inner = tasks >= threads ? 1u : std::max(1u, threads / static_cast<unsigned>(tasks));
  parallel_for(tasks, threads, [&](std::size_t task) {
    TrialConfig c = sweep_point(spec, values[task / spec.replicates], task % spec.replicates);
    c.threads = inner;
    reports[task] = run_trial(c);
  });

  SweepResult result{spec.parameter, {}, {}};
  for (std::size_t v = 0; v < values.size(); ++v) {
    for (std::size_t r = 0; r < spec.replicates; ++r) {
      for (const auto& rep : reports[v * spec.replicates + r]) {
        result.rows.push_back({values[v], rep.method, r, rep.accuracy, rep.wall_time});
      }
    }
    for (std::size_t mi = 0; mi < spec.base.methods.size(); ++mi) {
      const Method m = spec.base.methods[mi];
      std::vector<double> acc;
      for (std::size_t r = 0; r < spec.replicates; ++r) acc.push_back(reports[v * spec.replicates + r][mi].accuracy);
      double mean = 0.0;
      for (double a : acc) mean += a;
      mean /= static_cast<double>(acc.size());
      double var = 0.0;
      for (double a : acc) var += (a - mean) * (a - mean);
      const double se = acc.size() > 1
                            ? std::sqrt(var / static_cast<double>(acc.size() - 1) / static_cast<double>(acc.size()))
                            : 0.0;
      result.summary.push_back({values[v], m, mean, se, acc.size()});
    }
  }
  return result;
}

/// CSV with header param,value,method,replicate,accuracy,seconds. Without
/// `timing` the seconds column is NA so reruns are byte-identical.
inline void write_sweep_csv(std::ostream& out, const SweepResult& result, bool timing = false) {
  out << "param,value,method,replicate,accuracy,seconds\n";
  for (const SweepRow& row : result.rows) {
    out << to_string(result.parameter) << ',' << detail::format_double(row.value) << ','
        << to_string(row.method) << ',' << row.replicate << ',' << detail::format_double(row.accuracy) << ','
        << (timing ? detail::format_double(row.seconds) : std::string("NA")) << '\n';
  }
}

} // namespace cascinv
