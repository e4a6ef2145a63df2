#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace cascinv;
using testing_support::TempDir;

namespace {

EdgeList relabel(const EdgeList& edges, const std::vector<NodeId>& perm) {
  EdgeList out;
  for (const Edge& e : edges) out.push_back({perm[e.src], perm[e.dst]});
  normalize(out);
  return out;
}

TrialConfig small_trial() {
  TrialConfig c;
  c.graph.n_nodes = 60;
  c.graph.n_edges = 240;
  c.n_cascades = 150;
  c.surrogate_cascades = 300;
  c.seed = 9;
  return c;
}

} // namespace

TEST(Accuracy, Examples) {
  const auto truth = generate_random_graph(30, 100, 1).edges();
  EXPECT_EQ(accuracy(truth, truth), 1.0);

  EdgeList predicted(truth.begin(), truth.begin() + 90);
  const auto complement = [&] {
    EdgeList out;
    for (NodeId i = 0; i < 30 && out.size() < 10; ++i)
      for (NodeId j = 0; j < 30 && out.size() < 10; ++j)
        if (i != j && !std::binary_search(truth.begin(), truth.end(), Edge{i, j})) out.push_back({i, j});
    return out;
  }();
  predicted.insert(predicted.end(), complement.begin(), complement.end());
  EXPECT_EQ(predicted.size(), 100u);
  EXPECT_DOUBLE_EQ(accuracy(predicted, truth), 0.9);
  EXPECT_EQ(accuracy(complement, truth), 0.0);
  EXPECT_THROW(accuracy(truth, EdgeList{}), ValidationError);
}

TEST(Accuracy, SymmetricUnderRelabeling) {
  for (Seed s = 0; s < 10; ++s) {
    const auto truth = generate_random_graph(40, 150, s).edges();
    const auto predicted = generate_random_graph(40, 150, s + 100).edges();
    std::vector<NodeId> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = make_rng(s);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_below(rng, i)]);
    EXPECT_EQ(accuracy(relabel(predicted, perm), relabel(truth, perm)), accuracy(predicted, truth));
  }
}

// Selecting E pairs at random from N(N-1) has expected accuracy E/(N(N-1));
// the hit count is hypergeometric.
TEST(Accuracy, ChanceBaseline) {
  const std::size_t n = 50;
  const std::size_t e = 200;
  const double slots = static_cast<double>(max_edges(n));
  const double p = static_cast<double>(e) / slots;
  const double var_one = p * (1 - p) / static_cast<double>(e) * (slots - static_cast<double>(e)) / (slots - 1);
  const std::size_t reps = 100;
  double mean = 0.0;
  for (Seed s = 0; s < reps; ++s) {
    const auto truth = generate_random_graph(n, e, derive_seed(s, 0)).edges();
    PairMatrix<double> noise(n, 0.0);
    Rng rng = make_rng(derive_seed(s, 1));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) noise(i, j) = uniform01(rng);
    mean += accuracy(select_edges(noise, e), truth);
  }
  mean /= static_cast<double>(reps);
  EXPECT_NEAR(mean, p, 3.0 * std::sqrt(var_one / static_cast<double>(reps)));
}

TEST(Method, Names) {
  for (Method m : {Method::theoretical, Method::semiempirical, Method::heuristic}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("oracle"), UsageError);
}

TEST(RunTrial, DeterministicReports) {
  const auto a = run_trial(small_trial());
  auto threaded = small_trial();
  threaded.threads = 3;
  const auto b = run_trial(threaded);
  ASSERT_EQ(a.size(), 3u);
  ASSERT_EQ(b.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].method, b[i].method);
    EXPECT_EQ(a[i].predicted_edges, b[i].predicted_edges);
    EXPECT_EQ(a[i].accuracy, b[i].accuracy);
    EXPECT_EQ(a[i].params, b[i].params);
    EXPECT_EQ(a[i].predicted_edges.size(), 240u);
  }
}

TEST(RunTrial, EchoCarriesSeedAndModel) {
  const auto reports = run_trial(small_trial());
  const std::string& p = reports.front().params;
  EXPECT_NE(p.find("seed = 9"), std::string::npos);
  EXPECT_NE(p.find("model = threshold:0.04,0.6,0.4"), std::string::npos);
  EXPECT_NE(p.find("graph = random:60,240"), std::string::npos);
}

TEST(RunTrial, SingleCascadeIsLegal) {
  auto c = small_trial();
  c.n_cascades = 1;
  for (const auto& r : run_trial(c)) {
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 0.5);
  }
}

TEST(RunTrial, BootstrapVariantRuns) {
  auto c = small_trial();
  c.gamma_source = GammaSource::bootstrap;
  c.methods = {Method::theoretical};
  const auto r = run_trial(c);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NE(r[0].params.find("gamma_from = bootstrap"), std::string::npos);
}

TEST(RunTrial, FileGraph) {
  TrialConfig c;
  c.graph.file = CASCINV_DATA_DIR "/karate.tsv";
  c.n_cascades = 50;
  c.methods = {Method::heuristic};
  const auto r = run_trial(c);
  EXPECT_EQ(r[0].predicted_edges.size(), 156u);
}

TEST(Sweep, SingleValueEqualsRunTrial) {
  SweepSpec spec;
  spec.base = small_trial();
  spec.parameter = SweepParameter::n_experiments;
  spec.values = {150};
  spec.replicates = 1;
  const auto result = run_sweep(spec);
  const auto direct = run_trial(sweep_point(spec, 150, 0));
  ASSERT_EQ(result.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(result.rows[i].accuracy, direct[i].accuracy);
  EXPECT_EQ(result.summary.size(), 3u);
  EXPECT_EQ(result.summary[0].stderr_, 0.0);
}

TEST(Sweep, OutputIsSortedAndThreadIndependent) {
  SweepSpec spec;
  spec.base = small_trial();
  spec.base.methods = {Method::heuristic, Method::theoretical};
  spec.parameter = SweepParameter::gamma;
  spec.values = {0.08, 0.02, 0.05};
  spec.replicates = 2;
  const auto a = run_sweep(spec, 1);
  const auto b = run_sweep(spec, 4);
  std::ostringstream ca, cb;
  write_sweep_csv(ca, a);
  write_sweep_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(a.rows.size(), 3u * 2u * 2u);
  for (std::size_t i = 1; i < a.rows.size(); ++i) EXPECT_LE(a.rows[i - 1].value, a.rows[i].value);
  EXPECT_EQ(ca.str().substr(0, ca.str().find('\n')), "param,value,method,replicate,accuracy,seconds");
  EXPECT_NE(ca.str().find("gamma,0.02,heuristic,0,"), std::string::npos);
  EXPECT_NE(ca.str().find(",NA\n"), std::string::npos);
}

TEST(Sweep, CascadePolicies) {
  SweepSpec spec;
  spec.base = small_trial();
  spec.parameter = SweepParameter::n_nodes;
  spec.policy = CascadePolicy::equal_edges;
  EXPECT_EQ(sweep_point(spec, 60, 0).n_cascades, 240u);
  spec.policy = CascadePolicy::pair_fraction;
  spec.pair_fraction = 0.4;
  EXPECT_EQ(sweep_point(spec, 60, 0).n_cascades, 1416u);
  spec.parameter = SweepParameter::density;
  spec.policy = CascadePolicy::fixed;
  const auto c = sweep_point(spec, 0.1, 0);
  EXPECT_EQ(resolve_graph(c).n_edges(), 354u);
}

TEST(Sweep, Errors) {
  SweepSpec spec;
  spec.base = small_trial();
  EXPECT_THROW(run_sweep(spec), ValidationError);
  spec.values = {1};
  spec.replicates = 0;
  EXPECT_THROW(run_sweep(spec), ValidationError);
  spec.replicates = 1;
  spec.parameter = SweepParameter::gamma;
  spec.base.model = AffineG{};
  EXPECT_THROW(sweep_point(spec, 0.1, 0), ValidationError);
}

// Replicate-averaged accuracy of the theoretical method rises with the
// number of cascades up to 500.
TEST(Sweep, MoreCascadesHelpTheTheoreticalMethod) {
  SweepSpec spec;
  spec.base.graph.n_nodes = 67;
  spec.base.graph.n_edges = 182;
  spec.base.methods = {Method::theoretical};
  spec.parameter = SweepParameter::n_experiments;
  spec.values = {20, 50, 100, 200, 500};
  spec.replicates = 5;
  const auto r = run_sweep(spec, default_thread_count());
  for (std::size_t i = 1; i < r.summary.size(); ++i) {
    EXPECT_GE(r.summary[i].mean, r.summary[i - 1].mean) << r.summary[i].value;
  }
}

// configuration -------------------------------------------------------------

TEST(Config, ParsesKeysAndComments) {
  std::istringstream in("# sweep\nsweep = n_experiments\nvalues = 20, 50 ,100  # trailing\n\nreplicates=5\n");
  const auto cfg = KeyValueConfig::parse(in);
  const auto spec = sweep_spec_from(cfg);
  EXPECT_EQ(spec.parameter, SweepParameter::n_experiments);
  EXPECT_EQ(spec.values, (std::vector<double>{20, 50, 100}));
  EXPECT_EQ(spec.replicates, 5u);
}

TEST(Config, RangesAndOverrides) {
  std::istringstream in("sweep = gamma\nvalues = 0.01:0.05:0.01\nmodel = threshold:0.04,0.6,0.4\nseed = 3\n");
  auto cfg = KeyValueConfig::parse(in);
  cfg.set("seed=11");
  cfg.set("graph = random:100,400");
  cfg.set("cascade_policy=pairs:0.4");
  const auto spec = sweep_spec_from(cfg);
  ASSERT_EQ(spec.values.size(), 5u);
  EXPECT_NEAR(spec.values.back(), 0.05, 1e-12);
  EXPECT_EQ(spec.base.seed, 11u);
  EXPECT_EQ(spec.base.graph.n_nodes, 100u);
  EXPECT_EQ(spec.policy, CascadePolicy::pair_fraction);
}

TEST(Config, RelativeGraphPathsResolveAgainstTheFile) {
  TempDir dir("cfg");
  {
    std::ofstream out(dir / "sweep.cfg");
    out << "graph = file:net.tsv\nsweep = n_experiments\nvalues = 10\n";
  }
  const auto spec = sweep_spec_from(KeyValueConfig::load(dir / "sweep.cfg"));
  EXPECT_EQ(*spec.base.graph.file, dir / "net.tsv");
}

TEST(Config, Errors) {
  std::istringstream bad("sweep gamma\n");
  EXPECT_THROW(KeyValueConfig::parse(bad), ParseError);
  std::istringstream missing("values = 1\n");
  EXPECT_THROW(sweep_spec_from(KeyValueConfig::parse(missing)), UsageError);
  std::istringstream method("sweep = gamma\nvalues = 1\nmethods = magic\n");
  EXPECT_THROW(sweep_spec_from(KeyValueConfig::parse(method)), UsageError);
  std::istringstream count("sweep = gamma\nvalues = 1\ncascades = 2.5\n");
  EXPECT_THROW(sweep_spec_from(KeyValueConfig::parse(count)), UsageError);
  KeyValueConfig cfg;
  EXPECT_THROW(cfg.set("novalue"), UsageError);
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/cascinv.cfg"), IoError);
}

TEST(Sweep, CsvValuesUsePlainNotation) {
  SweepResult r{SweepParameter::n_experiments, {{100, Method::heuristic, 0, 0.5, 0.0}, {2000, Method::heuristic, 0, 0.25, 0.0}}, {}};
  std::ostringstream out;
  write_sweep_csv(out, r);
  EXPECT_NE(out.str().find("n_experiments,100,heuristic,0,0.5,NA\n"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("n_experiments,2000,heuristic,0,0.25,NA\n"), std::string::npos) << out.str();
}
