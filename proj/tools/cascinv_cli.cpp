#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cascinv/cascinv.hpp"

using namespace cascinv;

namespace {

// "-" or empty means standard output.
void emit(const std::string& path, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write(out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct Common {
  Seed seed = 1;
  unsigned threads = default_thread_count();
  std::string output;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "RNG seed");
  cmd->add_option("--threads", c.threads, "worker threads (output does not depend on it)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("-o,--output", c.output, "output file (default: stdout)");
}

// generate ------------------------------------------------------------------

struct GenerateArgs {
  Common common;
  std::size_t nodes = 0;
  std::optional<std::size_t> edges;
  std::optional<double> density;
};

void run_generate(const GenerateArgs& a) {
  std::size_t e = 0;
  if (a.edges && a.density) throw UsageError("give --edges or --density, not both");
  if (a.edges) {
    e = *a.edges;
  } else if (a.density) {
    if (!(*a.density >= 0.0 && *a.density <= 1.0)) throw UsageError("--density must be in [0,1]");
    e = static_cast<std::size_t>(std::llround(*a.density * static_cast<double>(max_edges(a.nodes))));
  } else {
    throw UsageError("generate needs --edges or --density");
  }
  const DirectedGraph g = generate_random_graph(a.nodes, e, a.common.seed);
  emit(a.common.output, [&](std::ostream& out) { write_edge_list(out, g); });
  const double mean = g.n_nodes() ? static_cast<double>(g.n_edges()) / static_cast<double>(g.n_nodes()) : 0.0;
  std::fprintf(stderr, "nodes=%zu edges=%zu mean_in_degree=%.6g\n", g.n_nodes(), g.n_edges(), mean);
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string graph;
  std::string model;
  std::size_t cascades = 0;
  std::size_t step_cap = 10000;
};

void run_simulate(const SimulateArgs& a) {
  const ActivationFunction f = parse_activation(a.model);
  const DirectedGraph g = load_edge_list(a.graph);
  const CascadeTraceSet traces = run_experiments(g, f, a.cascades, a.common.seed, a.step_cap, a.common.threads);
  emit(a.common.output, [&](std::ostream& out) { write_traces(out, traces); });
  std::fprintf(stderr, "cascades=%zu nodes=%zu censored=%zu t_max=%u\n", traces.n_cascades(), traces.n_nodes(),
               traces.censored_count(), static_cast<unsigned>(traces.t_max()));
}

// infer ---------------------------------------------------------------------

struct InferArgs {
  Common common;
  std::string traces;
  std::string method;
  std::string model;
  std::optional<std::size_t> edges;
  std::string gamma_from;
  std::string truth;
  std::string gamma_file;
  std::size_t surrogate_cascades = 2000;
  std::size_t surrogate_graphs = 10;
  std::size_t t_limit = 0;
  std::size_t heuristic_cascades = 0;
  std::size_t step_cap = 10000;
  std::string dump;
};

void run_infer(const InferArgs& a) {
  const Method method = parse_method(a.method);
  const CascadeTraceSet traces = load_traces(a.traces);
  const std::size_t n = traces.n_nodes();

  std::optional<DirectedGraph> truth;
  if (!a.truth.empty()) {
    truth = load_edge_list(a.truth);
    if (truth->n_nodes() != n) {
      throw ValidationError("truth graph has " + std::to_string(truth->n_nodes()) + " nodes, traces have " +
                            std::to_string(n));
    }
  }
  std::size_t e = 0;
  if (a.edges) {
    e = *a.edges;
  } else if (truth) {
    e = truth->n_edges();
  } else {
    throw UsageError("infer needs --edges (or --truth to take E from)");
  }
  const double omega = prior_omega(n, e);
  const std::size_t heuristic_limit = a.heuristic_cascades ? a.heuristic_cascades : traces.n_cascades();

  std::optional<ActivationFunction> f;
  std::optional<DegreeDistribution> gamma;
  if (method != Method::heuristic) {
    const std::string name(to_string(method));
    if (a.model.empty()) throw UsageError(name + " needs --model");
    f = parse_activation(a.model);
    if (a.gamma_from.empty()) throw UsageError(name + " needs --gamma-from truth|bootstrap|file");
    if (a.gamma_from == "truth") {
      if (!truth) throw UsageError("--gamma-from truth needs --truth");
      gamma = in_degree_distribution(*truth);
    } else if (a.gamma_from == "bootstrap") {
      gamma = bootstrap_degree_distribution(traces, e, heuristic_limit);
    } else if (a.gamma_from == "file") {
      if (a.gamma_file.empty()) throw UsageError("--gamma-from file needs --gamma-file");
      gamma = load_degree_distribution(a.gamma_file);
    } else {
      throw UsageError("--gamma-from must be truth, bootstrap or file");
    }
  }

  EdgeList predicted;
  std::function<void(std::ostream&)> dump;
  switch (method) {
  case Method::heuristic: {
    auto scores = std::make_shared<HeuristicScores>(score_heuristic(traces, heuristic_limit));
    predicted = select_edges(*scores, e);
    dump = [scores, omega](std::ostream& out) { write_score_dump(out, *scores, omega); };
    break;
  }
  case Method::theoretical: {
    auto post = std::make_shared<EdgePosterior>(infer_theoretical(traces, *gamma, *f, omega, a.common.threads));
    predicted = select_edges(*post, e);
    dump = [post](std::ostream& out) { write_score_dump(out, "theoretical", *post); };
    break;
  }
  case Method::semiempirical: {
    const std::size_t t_limit = a.t_limit ? a.t_limit : std::max<std::size_t>(1, traces.t_max());
    const LikelihoodTable table = surrogate_likelihood_table(*gamma, n, *f, a.surrogate_cascades, a.common.seed,
                                                             a.step_cap, t_limit, a.common.threads,
                                                             a.surrogate_graphs);
    auto post = std::make_shared<EdgePosterior>(infer_semiempirical(traces, table, omega, a.common.threads));
    predicted = select_edges(*post, e);
    dump = [post](std::ostream& out) { write_score_dump(out, "semiempirical", *post); };
    break;
  }
  }
  if (!a.dump.empty()) emit(a.dump, dump);
  const DirectedGraph out_graph = DirectedGraph::from_edges(n, predicted);
  emit(a.common.output, [&](std::ostream& out) { write_edge_list(out, out_graph); });
  if (truth) std::fprintf(stderr, "accuracy=%s\n", detail::format_double(accuracy(predicted, truth->edges())).c_str());
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  std::string output;
  std::string predicted;
  std::string truth;
};

void run_eval(const EvalArgs& a) {
  const DirectedGraph pred = load_edge_list(a.predicted);
  const DirectedGraph truth = load_edge_list(a.truth);
  if (pred.n_nodes() != truth.n_nodes()) {
    throw ValidationError("predicted graph has " + std::to_string(pred.n_nodes()) + " nodes, truth has " +
                          std::to_string(truth.n_nodes()));
  }
  const double acc = accuracy(pred.edges(), truth.edges());
  std::size_t hits = 0;
  for (const Edge& x : pred.edges()) hits += truth.has_edge(x.src, x.dst) ? 1 : 0;
  emit(a.output, [&](std::ostream& out) {
    out << "accuracy=" << detail::format_double(acc) << " correct=" << hits << " predicted=" << pred.n_edges()
        << " truth=" << truth.n_edges() << '\n';
  });
}

// sweep ---------------------------------------------------------------------

struct SweepArgs {
  Common common;
  std::string config;
  std::vector<std::string> sets;
  bool timing = false;
  bool seed_given = false;
};

void run_sweep_cmd(const SweepArgs& a) {
  KeyValueConfig cfg = a.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(a.config);
  for (const auto& s : a.sets) cfg.set(s);
  if (a.seed_given) cfg.set("seed=" + std::to_string(a.common.seed));
  const SweepSpec spec = sweep_spec_from(cfg);
  std::cerr << describe(spec.base) << "sweep = " << to_string(spec.parameter) << "\nreplicates = " << spec.replicates
            << '\n';
  const SweepResult result = run_sweep(spec, a.common.threads);
  emit(a.common.output, [&](std::ostream& out) { write_sweep_csv(out, result, a.timing); });
  for (const SweepSummary& s : result.summary) {
    std::fprintf(stderr, "%s=%s %s mean=%.4f stderr=%.4f n=%zu\n", std::string(to_string(spec.parameter)).c_str(),
                 detail::format_double(s.value).c_str(), std::string(to_string(s.method)).c_str(), s.mean,
                 s.stderr_, s.replicates);
  }
}

int fail(std::string_view kind, std::string_view msg, int code) {
  std::cerr << "cascinv: error[" << kind << "]: " << msg << '\n';
  return code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascade simulation and network inference from activation times"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "uniform random directed graph");
  add_common(g, gen.common);
  g->add_option("--nodes", gen.nodes, "number of nodes")->required();
  g->add_option("--edges", gen.edges, "number of directed edges");
  g->add_option("--density", gen.density, "edges as a fraction of N(N-1)");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run cascades on a graph");
  add_common(s, sim.common);
  s->add_option("--graph", sim.graph, "edge-list file")->required();
  s->add_option("--model", sim.model, "activation function, e.g. threshold:0.04,0.6,0.4")->required();
  s->add_option("--cascades", sim.cascades, "number of cascades")->required()->check(CLI::PositiveNumber);
  s->add_option("--step-cap", sim.step_cap, "steps before remaining nodes are censored");

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "infer edges from cascade traces");
  add_common(i, inf.common);
  i->add_option("--traces", inf.traces, "trace file")->required();
  i->add_option("--method", inf.method, "theoretical | semiempirical | heuristic")->required();
  i->add_option("--model", inf.model, "activation function used by the likelihood methods");
  i->add_option("--edges", inf.edges, "number of edges to select");
  i->add_option("--gamma-from", inf.gamma_from, "in-degree distribution: truth | bootstrap | file");
  i->add_option("--truth", inf.truth, "true edge list (for --gamma-from truth, E, and accuracy)");
  i->add_option("--gamma-file", inf.gamma_file, "degree-distribution file");
  i->add_option("--surrogate-cascades", inf.surrogate_cascades, "cascades simulated on the surrogates");
  i->add_option("--surrogate-graphs", inf.surrogate_graphs, "surrogate graphs pooled into the table");
  i->add_option("--t-limit", inf.t_limit, "last time with its own table row (0: largest observed)");
  i->add_option("--heuristic-cascades", inf.heuristic_cascades, "cascades used by the heuristic (0: all)");
  i->add_option("--step-cap", inf.step_cap, "surrogate simulation step cap");
  i->add_option("--dump", inf.dump, "write the full score matrix here");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "accuracy of a predicted edge list");
  e->add_option("-o,--output", ev.output, "report file (default: stdout)");
  e->add_option("--predicted", ev.predicted, "predicted edge list")->required();
  e->add_option("--truth", ev.truth, "true edge list")->required();

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "parameter sweep to CSV");
  add_common(w, sw.common);
  w->add_option("--config", sw.config, "key = value sweep config");
  w->add_option("--set", sw.sets, "override a config key (key=value)");
  w->add_flag("--timing", sw.timing, "record wall-clock seconds instead of NA");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::Success& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    return fail("usage", ex.what(), 2);
  }

  try {
    if (*g) run_generate(gen);
    if (*s) run_simulate(sim);
    if (*i) run_infer(inf);
    if (*e) run_eval(ev);
    if (*w) {
      sw.seed_given = w->count("--seed") > 0;
      run_sweep_cmd(sw);
    }
  } catch (const UsageError& ex) {
    return fail(ex.kind(), ex.what(), 2);
  } catch (const Error& ex) {
    return fail(ex.kind(), ex.what(), 1);
  } catch (const std::exception& ex) {
    return fail("internal", ex.what(), 1);
  }
  return 0;
}
