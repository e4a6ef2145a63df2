#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"

using namespace cascinv;
using testing_support::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
protected:
  TempDir dir{"cli"};

  Result run(const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = "cd '" + dir.path.string() + "' && '" CASCINV_CLI "' " + args + " > '" + out.string() +
                            "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  std::string file(const std::string& name) { return slurp(dir / name); }
};

std::size_t body_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty() && line[0] != '#';
  return n;
}

} // namespace

TEST_F(Cli, GenerateWritesRequestedEdges) {
  const auto r = run("generate --nodes 200 --edges 1484 --seed 7 -o net.tsv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(body_lines(file("net.tsv")), 1484u);
  EXPECT_NE(r.err.find("nodes=200 edges=1484 mean_in_degree=7.42"), std::string::npos);
}

TEST_F(Cli, GenerateEmptyAndTooMany) {
  ASSERT_EQ(run("generate --nodes 5 --edges 0 -o empty.tsv").code, 0);
  EXPECT_EQ(file("empty.tsv"), "# nodes=5 edges=0\n");
  const auto r = run("generate --nodes 3 --edges 7");
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("cascinv: error[capacity]:", 0), 0u) << r.err;
}

TEST_F(Cli, SimulateIsDeterministic) {
  ASSERT_EQ(run("generate --nodes 40 --edges 150 --seed 2 -o g.tsv").code, 0);
  ASSERT_EQ(run("simulate --graph g.tsv --model threshold:0.04,0.6,0.4 --cascades 30 --seed 5 -o a.txt").code, 0);
  ASSERT_EQ(run("simulate --graph g.tsv --model threshold:0.04,0.6,0.4 --cascades 30 --seed 5 --threads 1 -o b.txt")
                .code,
            0);
  EXPECT_EQ(file("a.txt"), file("b.txt"));
  ASSERT_EQ(run("simulate --graph g.tsv --model affine:linear --cascades 1 -o one.txt").code, 0);
  EXPECT_EQ(body_lines(file("one.txt")), 1u);
}

TEST_F(Cli, SimulateRejectsUnknownModel) {
  ASSERT_EQ(run("generate --nodes 10 --edges 20 -o g.tsv").code, 0);
  const auto r = run("simulate --graph g.tsv --model sigmoid:2 --cascades 3");
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("cascinv: error[usage]:", 0), 0u) << r.err;
}

TEST_F(Cli, HeuristicRecoversChain) {
  {
    std::ofstream t(dir / "chain.txt");
    t << "# nodes=4 cascades=3\n1 2 3 4\n1 2 3 4\n1 2 3 4\n";
  }
  const auto r = run("infer --traces chain.txt --method heuristic --edges 3 -o pred.tsv --dump scores.txt");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(file("pred.tsv"), "# nodes=4 edges=3\n0\t1\n1\t2\n2\t3\n");
  EXPECT_EQ(file("scores.txt").rfind("# method=heuristic omega=0.25\n", 0), 0u);
}

TEST_F(Cli, InferPipelineAndEval) {
  ASSERT_EQ(run("generate --nodes 60 --edges 240 --seed 3 -o g.tsv").code, 0);
  ASSERT_EQ(run("simulate --graph g.tsv --model threshold:0.04,0.6,0.4 --cascades 200 --seed 4 -o tr.txt").code, 0);
  for (const char* method : {"theoretical", "semiempirical"}) {
    const std::string m(method);
    const auto r = run("infer --traces tr.txt --method " + m +
                       " --model threshold:0.04,0.6,0.4 --gamma-from truth --truth g.tsv --surrogate-cascades 300"
                       " -o " + m + ".tsv --dump " + m + ".dump");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(body_lines(file(m + ".tsv")), 240u);
    EXPECT_EQ(file(m + ".dump").rfind("# method=" + m + " omega=", 0), 0u);
    const auto e = run("eval --predicted " + m + ".tsv --truth g.tsv");
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(e.out.rfind("accuracy=", 0), 0u);
  }
  // rerun at a different thread count: identical files
  ASSERT_EQ(run("infer --traces tr.txt --method theoretical --model threshold:0.04,0.6,0.4 --gamma-from truth"
                " --truth g.tsv --threads 1 -o again.tsv --dump again.dump")
                .code,
            0);
  EXPECT_EQ(file("again.tsv"), file("theoretical.tsv"));
  EXPECT_EQ(file("again.dump"), file("theoretical.dump"));
}

TEST_F(Cli, InferNamesMissingInputs) {
  {
    std::ofstream t(dir / "tr.txt");
    t << "# nodes=3 cascades=1\n1 2 3\n";
  }
  auto r = run("infer --traces tr.txt --method semiempirical --edges 2 --gamma-from bootstrap");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--model"), std::string::npos) << r.err;
  r = run("infer --traces tr.txt --method theoretical --edges 2 --model constant:0.5");
  EXPECT_NE(r.err.find("--gamma-from"), std::string::npos) << r.err;
  r = run("infer --traces tr.txt --method heuristic");
  EXPECT_NE(r.err.find("--edges"), std::string::npos) << r.err;
}

TEST_F(Cli, EvalExamples) {
  ASSERT_EQ(run("generate --nodes 20 --edges 50 --seed 1 -o a.tsv").code, 0);
  auto r = run("eval --predicted a.tsv --truth a.tsv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "accuracy=1 correct=50 predicted=50 truth=50\n");
  ASSERT_EQ(run("generate --nodes 20 --edges 0 -o empty.tsv").code, 0);
  r = run("eval --predicted a.tsv --truth empty.tsv");
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("cascinv: error[validation]:", 0), 0u) << r.err;
  ASSERT_EQ(run("generate --nodes 21 --edges 50 -o b.tsv").code, 0);
  r = run("eval --predicted b.tsv --truth a.tsv");
  EXPECT_EQ(r.err.rfind("cascinv: error[validation]:", 0), 0u) << r.err;
}

TEST_F(Cli, SweepFromConfig) {
  {
    std::ofstream c(dir / "prison.cfg");
    c << "graph = file:" CASCINV_DATA_DIR "/prison_standin.tsv\nmodel = threshold:0.04,0.6,0.4\n"
         "sweep = n_experiments\nvalues = 20,50,100,200,500\nreplicates = 1\nmethods = heuristic\n";
  }
  const auto a = run("sweep --config prison.cfg -o a.csv");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(body_lines(file("a.csv")), 6u); // header + five rows
  ASSERT_EQ(run("sweep --config prison.cfg --threads 1 -o b.csv").code, 0);
  EXPECT_EQ(file("a.csv"), file("b.csv"));
  const auto c = run("sweep --config prison.cfg --set replicates=2 --seed 4 -o c.csv");
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(body_lines(file("c.csv")), 11u);
  EXPECT_NE(c.err.find("seed = 4"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  auto r = run("");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("cascinv: error[usage]:", 0), 0u) << r.err;
  r = run("generate --edges 3");
  EXPECT_EQ(r.code, 2);
  r = run("simulate --graph missing.tsv --model constant:1 --cascades 1");
  EXPECT_EQ(r.err.rfind("cascinv: error[io]:", 0), 0u) << r.err;
  EXPECT_EQ(run("--help").code, 0);
}
