#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "nnk");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = nnk::run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nnk_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("spec round trips through the config format") {
  for (const char* sub : {"run", "adaptive", "histogram", "logistic", "analyze"}) {
    nnk::ExperimentSpec spec = nnk::default_spec(sub);
    spec.alpha = 1.0 / 3.0;
    spec.alpha0 = {0.3, 7e-5};
    spec.orders = {4, 0};
    spec.methods = {"nn"};
    spec.seed = 1234567890123ULL;
    spec.sigma_minus = 0.1;
    std::stringstream ss;
    nnk::to_key_value(spec).write(ss);
    nnk::ExperimentSpec back = nnk::default_spec(sub);
    nnk::apply(back, netnewton::KeyValueFile::parse(ss));
    CHECK(back == spec);
  }
}

TEST_CASE("config errors") {
  nnk::ExperimentSpec spec = nnk::default_spec("run");
  netnewton::KeyValueFile kv;
  kv.set("bogus", "1");
  CHECK_THROWS_AS(nnk::apply(spec, kv), std::invalid_argument);
  netnewton::KeyValueFile other;
  other.set("subcommand", "histogram");
  CHECK_THROWS_AS(nnk::apply(spec, other), std::invalid_argument);
  spec.methods = {"sgd"};
  CHECK_THROWS_AS(nnk::validate(spec), std::invalid_argument);
  CHECK_THROWS_AS(nnk::default_spec("plot"), std::invalid_argument);
}

TEST_CASE("run writes one trace per method") {
  const auto dir = scratch("run");
  const auto r = invoke({"run", "--n", "20", "--max-iters", "50", "--out", dir.string()});
  CHECK(r.code == 0);
  for (const char* f : {"dgd.csv", "nn-0.csv", "nn-1.csv", "nn-2.csv", "config.txt"}) CHECK(fs::exists(dir / f));
  CHECK(slurp(dir / "nn-1.csv").rfind("t,e_t,F,grad_inf,alpha,comm\n0,", 0) == 0);
  CHECK(r.out.find("NN-2") != std::string::npos);

  const auto single = scratch("single");
  CHECK(invoke({"run", "--n", "20", "--max-iters", "5", "--methods", "nn", "--K", "0", "--out", single.string()}).code ==
        0);
  long csv = 0;
  for (const auto& entry : fs::directory_iterator(single)) csv += entry.path().extension() == ".csv";
  CHECK(csv == 1);
}

TEST_CASE("seeded reruns are byte identical") {
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  const auto ra = invoke({"run", "--n", "16", "--max-iters", "40", "--seed", "7", "--out", a.string()});
  const auto rb = invoke({"run", "--n", "16", "--max-iters", "40", "--seed", "7", "--out", b.string()});
  CHECK(ra.out == rb.out);
  for (const char* f : {"dgd.csv", "nn-0.csv", "nn-1.csv", "nn-2.csv"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("flags override the config file which overrides defaults") {
  const auto dir = scratch("precedence");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "in.cfg");
    cfg << "# experiment\nn = 12\nmax_iters = 7\nalpha = 0.02\n";
  }
  const auto out = dir / "out";
  CHECK(invoke({"run", "--config", (dir / "in.cfg").string(), "--max-iters", "9", "--out", out.string()}).code == 0);
  std::ifstream used(out / "config.txt");
  const auto kv = netnewton::KeyValueFile::parse(used);
  CHECK(kv.get("n") == "12");
  CHECK(kv.get("max_iters") == "9");
  CHECK(kv.get("alpha") == "0.02");
  CHECK(kv.get("p") == "4");
}

TEST_CASE("exit codes") {
  CHECK(invoke({"run", "--alpha", "-1", "--out", scratch("bad").string()}).code == 1);
  CHECK(invoke({"run", "--no-such-flag"}).code == 1);
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"run", "--config", "/nonexistent/file.cfg"}).code == 1);
  const auto diverge = invoke({"run", "--n", "10", "--alpha", "1", "--methods", "dgd", "--max-iters", "3000", "--out",
                               scratch("div").string()});
  CHECK(diverge.code == 2);
  CHECK(diverge.out.find("diverged") != std::string::npos);

  const auto help = invoke({"run", "--help"});
  CHECK(help.code == 0);
  for (const char* flag : {"--n", "--p", "--xi", "--alpha", "--d", "--eps", "--K", "--methods", "--seed",
                           "--max-iters", "--target", "--out", "--config"}) {
    CHECK(help.out.find(flag) != std::string::npos);
  }
  const auto adaptive_help = invoke({"adaptive", "--help"});
  for (const char* flag : {"--tol", "--eta", "--alpha0"}) CHECK(adaptive_help.out.find(flag) != std::string::npos);
  CHECK(invoke({"histogram", "--help"}).out.find("--trials") != std::string::npos);
  CHECK(invoke({"logistic", "--help"}).out.find("--sigma-plus") != std::string::npos);
  CHECK(invoke({"analyze", "--help"}).out.find("--break-weights") != std::string::npos);
}

TEST_CASE("analyze") {
  const auto good = scratch("analyze");
  const auto r = invoke({"analyze", "--K", "2", "--out", good.string()});
  CHECK(r.code == 0);
  const std::string report = slurp(good / "analysis_K2.csv");
  for (const char* key : {"# rho = ", "# lambda = ", "# Lambda = ", "# zeta = ", "# epsilon = "}) {
    CHECK(report.find(key) != std::string::npos);
  }
  CHECK(report.find(",0\n") == std::string::npos);

  const auto broken = scratch("analyze_broken");
  const auto b = invoke({"analyze", "--K", "1", "--break-weights", "--out", broken.string()});
  CHECK(b.code == 2);
  CHECK(slurp(broken / "analysis_K1.csv").find("weights: row sum") != std::string::npos);
}

TEST_CASE("histogram and adaptive and logistic smoke runs") {
  const auto h = scratch("hist");
  const auto rh = invoke({"histogram", "--trials", "3", "--n", "12", "--max-iters", "3000", "--target", "0.05",
                          "--out", h.string()});
  CHECK(rh.code == 0);
  CHECK(slurp(h / "histogram.csv").rfind("trial,method,d,exchanges,censored\n", 0) == 0);
  CHECK(rh.out.find("mean exchanges") != std::string::npos);

  const auto a = scratch("adaptive");
  const auto ra = invoke({"adaptive", "--n", "12", "--methods", "nn", "--K", "1", "--max-iters", "200", "--out",
                          a.string()});
  CHECK(ra.code == 0);
  CHECK(fs::exists(a / "ann-1_alpha0_0.1.csv"));
  CHECK(fs::exists(a / "ann-1_alpha0_0.01.csv"));

  const auto l = scratch("logistic");
  const auto rl = invoke({"logistic", "--n", "6", "--q", "10", "--max-iters", "30", "--out", l.string()});
  CHECK(rl.code == 0);
  CHECK(fs::exists(l / "dgd.csv"));
  CHECK(rl.out.find("t(F<=DGD)") != std::string::npos);
}
