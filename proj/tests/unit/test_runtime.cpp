#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "netnewton/analysis.hpp"
#include "netnewton/runtime.hpp"
#include "netnewton/trace_io.hpp"

using namespace netnewton;

namespace {

Problem quadratic_problem(Index n, Index d, double alpha, std::uint64_t seed, Index p = 4) {
  return Problem(make_cycle_network(n, d), build_objectives<double>(make_quadratic(n, p, 2, seed)), alpha);
}

Problem logistic_problem(Index n, double alpha, std::uint64_t seed) {
  LogisticParams params;
  params.agents = n;
  params.dim = 3;
  params.samples_per_agent = 5;
  params.seed = seed;
  return Problem(make_cycle_network(n, 2), build_objectives<double>(make_logistic(params)), alpha);
}

Problem single_agent(ObjectivePtr<double> f, double alpha) {
  const auto net = make_network(NetworkTopology(std::vector<std::vector<Index>>(1)),
                                WeightMatrix(Eigen::MatrixXd::Ones(1, 1)));
  return Problem(net, {std::move(f)}, alpha);
}

Stacked random_stacked(std::mt19937_64& rng, Index n, Index p) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Stacked y(n, p);
  for (Index k = 0; k < y.flat().size(); ++k) y.flat()(k) = normal(rng);
  return y;
}

SolverConfig dgd(double alpha, long iters) {
  SolverConfig c;
  c.method = Method::Dgd;
  c.alpha = alpha;
  c.max_iters = iters;
  return c;
}

SolverConfig nn(int k, double alpha, long iters) {
  SolverConfig c;
  c.method = Method::NetworkNewton;
  c.order = k;
  c.alpha = alpha;
  c.max_iters = iters;
  return c;
}

bool same_records(const RunTrace& a, const RunTrace& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    const auto& x = a.records[k];
    const auto& y = b.records[k];
    if (x.t != y.t || x.error != y.error || x.value != y.value || x.grad_inf != y.grad_inf || x.alpha != y.alpha ||
        x.comm != y.comm || x.alpha_changed != y.alpha_changed) {
      return false;
    }
  }
  return a.final_iterate.flat() == b.final_iterate.flat();
}

}  // namespace

TEST_CASE("solver config") {
  CHECK(dgd(0.1, 5).label() == "DGD");
  CHECK(nn(2, 0.1, 5).label() == "NN-2");
  auto a = nn(1, 0.1, 5);
  a.adaptive = AdaptiveSchedule{};
  CHECK(a.label() == "ANN-1");
  CHECK(a.exchanges_per_iteration() == 2);
  CHECK(dgd(0.1, 1).exchanges_per_iteration() == 1);

  auto bad = nn(0, 0.1, 5);
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.epsilon = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = nn(-1, 0.1, 5);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = nn(0, 0.1, 5);
  bad.adaptive = AdaptiveSchedule{1e-3, 0.5, 1e-8, false};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(run(quadratic_problem(5, 2, 0.2, 1), nn(0, 0.1, 5)), std::invalid_argument);
}

TEST_CASE("DGD step") {
  std::mt19937_64 rng(1);
  SUBCASE("consensus form equals y - g") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto problem = seed % 2 ? quadratic_problem(4, 2, 0.1, seed) : logistic_problem(4, 0.1, seed);
      const Stacked y = random_stacked(rng, 4, problem.dim());
      Simulator sim(problem, y);
      sim.step_dgd();
      const Stacked want = y - problem.gradient(y);
      CHECK((sim.iterate().flat() - want.flat()).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + want.flat().norm()));
    }
  }
  SUBCASE("fixed point at a common stationary consensus") {
    const Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
    std::vector<ObjectivePtr<double>> objs;
    for (int i = 0; i < 5; ++i) {
      const Eigen::VectorXd a = Eigen::VectorXd::Constant(3, 1.0 + i);
      objs.push_back(std::make_shared<QuadraticObjective<double>>(a, Eigen::VectorXd(-a.cwiseProduct(c))));
    }
    const Problem problem(make_cycle_network(5, 2), objs, 0.3);
    Simulator sim(problem, Stacked::replicate(c, 5));
    for (int t = 0; t < 5; ++t) sim.step_dgd();
    CHECK((sim.iterate().flat() - Stacked::replicate(c, 5).flat()).norm() < 1e-15);
  }
  SUBCASE("single agent is gradient descent") {
    const auto f = build_objectives<double>(make_quadratic(1, 4, 1, 3)).front();
    const auto problem = single_agent(f, 0.2);
    const Stacked y = random_stacked(rng, 1, 4);
    Simulator sim(problem, y);
    sim.step_dgd();
    CHECK((sim.iterate().flat() - (y.flat() - 0.2 * f->gradient(y.flat()))).norm() < 1e-15);
  }
}

TEST_CASE("NN step") {
  std::mt19937_64 rng(2);
  SUBCASE("K = 0 uses one round and the block-diagonal direction") {
    const auto problem = quadratic_problem(6, 2, 0.1, 2);
    const Stacked y = random_stacked(rng, 6, 4);
    Simulator sim(problem, y);
    sim.step_nn(0, 1.0);
    CHECK(sim.rounds() == 1);
    const Eigen::VectorXd want = -dense::block_diagonal(problem, y).ldlt().solve(problem.gradient(y).flat());
    CHECK((sim.direction().flat() - want).norm() < 1e-13 * want.norm());
  }
  SUBCASE("K + 1 rounds per iteration") {
    const auto problem = quadratic_problem(4, 2, 0.1, 3);
    Simulator sim(problem, problem.zeros());
    sim.step_nn(2, 1.0);
    CHECK(sim.rounds() == 3);
    sim.step_nn(2, 1.0);
    CHECK(sim.rounds() == 6);
    sim.step_dgd();
    CHECK(sim.rounds() == 7);
  }
  SUBCASE("matches the whole-vector update") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      const auto problem = seed % 3 == 0 ? logistic_problem(5, 0.2, seed) : quadratic_problem(5, 2, 0.1, seed);
      const Stacked y = random_stacked(rng, 5, problem.dim());
      const int k = int(seed % 5);
      const double eps = seed % 2 ? 1.0 : 0.5;
      Simulator sim(problem, y);
      sim.step_nn(k, eps);
      const Stacked want = y + eps * nn_direction(problem, y, problem.gradient(y), k);
      CHECK((sim.iterate().flat() - want.flat()).norm() <= 1e-12 * (1.0 + want.flat().norm()));
    }
  }
}

TEST_CASE("locality audit") {
  const auto problem = quadratic_problem(7, 4, 0.1, 4);
  Simulator sim(problem, problem.zeros(), true);
  sim.step_nn(2, 1.0);
  sim.step_dgd();
  const auto& topology = problem.network().topology;
  const auto& log = sim.log();
  CHECK(log.messages.size() == 4 * 2 * std::size_t(topology.edge_count()));
  std::set<std::tuple<long, Index, Index>> delivered;
  for (const auto& m : log.messages) {
    CHECK(topology.has_edge(m.from, m.to));
    delivered.insert({m.round, m.from, m.to});
  }
  REQUIRE_FALSE(log.reads.empty());
  for (const auto& r : log.reads) {
    CHECK(topology.has_edge(r.node, r.from));
    // the slot was filled by a message from that neighbor in this round's exchange
    CHECK(delivered.count({r.round - 1, r.from, r.node}) == 1);
  }
  for (const auto& node : sim.nodes()) CHECK(node.inbox.size() == std::size_t(topology.degree(node.id)));
}

TEST_CASE("run traces") {
  const auto inst = make_quadratic(10, 4, 2, 6);
  const Problem problem(make_cycle_network(10, 4), build_objectives<double>(inst), 0.01);
  const Eigen::VectorXd x_star = quadratic_optimum(inst);

  SUBCASE("communication accounting") {
    for (const auto& config : {dgd(0.01, 30), nn(0, 0.01, 30), nn(1, 0.01, 30), nn(3, 0.01, 30)}) {
      const auto trace = run(problem, config, std::nullopt, x_star);
      REQUIRE(trace.records.size() == 31);
      for (const auto& r : trace.records) CHECK(r.comm == r.t * config.exchanges_per_iteration());
      CHECK(trace.reason == Termination::MaxIterations);
    }
  }
  SUBCASE("bitwise deterministic") {
    const auto a = run(problem, nn(2, 0.01, 40), std::nullopt, x_star);
    const auto b = run(problem, nn(2, 0.01, 40), std::nullopt, x_star);
    CHECK(same_records(a, b));
  }
  SUBCASE("first record is the initial point") {
    const auto trace = run(problem, dgd(0.01, 3), std::nullopt, x_star);
    CHECK(trace.records.front().error == doctest::Approx(1.0));
    CHECK(trace.records.front().value == 0.0);
    CHECK(trace.records.front().alpha == 0.01);
  }
  SUBCASE("F never increases along NN runs with unit step on quadratics") {
    for (int k = 0; k <= 2; ++k) {
      const auto trace = run(problem, nn(k, 0.01, 200), std::nullopt, x_star);
      for (std::size_t t = 1; t < trace.records.size(); ++t) {
        CHECK(trace.records[t].value <= trace.records[t - 1].value + 1e-15);
      }
    }
  }
  SUBCASE("stops at the target") {
    auto config = nn(1, 0.01, 5000);
    config.target_error = 0.2;
    const auto trace = run(problem, config, std::nullopt, x_star);
    CHECK(trace.reason == Termination::TargetReached);
    CHECK(trace.last().error < 0.2);
    CHECK(trace.records[trace.records.size() - 2].error >= 0.2);
    CHECK(trace.first_error_below(0.2) == trace.last().t);
  }
  SUBCASE("explicit initial point") {
    const Stacked y0 = Stacked::replicate(x_star, 10);
    const auto trace = run(problem, nn(0, 0.01, 0), y0, x_star);
    CHECK(trace.records.size() == 1);
    CHECK(trace.records.front().error == 0.0);
  }
  SUBCASE("divergence is reported") {
    const auto big = problem.with_alpha(1.0);
    const auto trace = run(big, dgd(1.0, 2000), std::nullopt, x_star);
    CHECK(trace.reason == Termination::Diverged);
    CHECK_FALSE(trace.diagnostic.empty());
    CHECK(trace.records.size() < 2000);
  }
}

TEST_CASE("single agent NN-0 is Newton's method") {
  LogisticParams params;
  params.agents = 1;
  params.dim = 3;
  params.samples_per_agent = 20;
  params.mu = 1.0;
  params.sigma_plus = params.sigma_minus = 2.0;
  params.lambda = 1.0;
  const auto inst = make_logistic(params);
  const auto f = build_objectives<double>(inst).front();
  const auto problem = single_agent(f, 1.0);
  const Eigen::VectorXd x_star = logistic_optimum_oracle(inst);
  const auto trace = run(problem, nn(0, 1.0, 8), std::nullopt, x_star);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  for (const auto& r : trace.records) {
    const double e = (x - x_star).squaredNorm() / x_star.squaredNorm();
    CHECK(r.error == doctest::Approx(e).epsilon(1e-9).scale(1e-20));
    x -= f->hessian(x).llt().solve(f->gradient(x));
  }
  CHECK(trace.last().error < 1e-20);
}

TEST_CASE("adaptive penalty") {
  const auto inst = make_quadratic(10, 4, 2, 3);
  const Problem problem(make_cycle_network(10, 4), build_objectives<double>(inst), 1e-2);
  const Eigen::VectorXd x_star = quadratic_optimum(inst);

  SUBCASE("staircase of alpha values") {
    auto config = nn(1, 1e-2, 3000);
    config.adaptive = AdaptiveSchedule{1e-3, 10.0, 1e-6, false};
    const auto trace = run_adaptive(problem, config, std::nullopt, x_star);
    const auto changes = trace.alpha_change_iterations();
    REQUIRE(changes.size() >= 2);
    double expected = 1e-2;
    for (const auto& r : trace.records) {
      if (r.alpha_changed) expected /= 10.0;
      CHECK(r.alpha == doctest::Approx(expected).epsilon(1e-14));
    }
    for (long t : changes) CHECK(trace.records[std::size_t(t)].grad_inf <= 1e-3);
  }
  SUBCASE("tol = 0 reproduces the fixed-alpha run") {
    auto adaptive = nn(2, 1e-2, 300);
    adaptive.adaptive = AdaptiveSchedule{0.0, 10.0, 1e-8, false};
    const auto a = run_adaptive(problem, adaptive, std::nullopt, x_star);
    const auto b = run(problem, nn(2, 1e-2, 300), std::nullopt, x_star);
    CHECK(a.alpha_change_iterations().empty());
    CHECK(same_records(a, b));
  }
  SUBCASE("alpha floor ends the run") {
    auto config = dgd(1e-2, 100000);
    config.adaptive = AdaptiveSchedule{1e-3, 10.0, 5e-4, false};
    const auto trace = run_adaptive(problem, config, std::nullopt, x_star);
    CHECK(trace.reason == Termination::AlphaFloor);
    CHECK(trace.last().alpha >= 5e-4);
  }
  SUBCASE("recomputed step size keeps unit steps on quadratics") {
    auto config = nn(0, 1e-2, 1500);
    config.adaptive = AdaptiveSchedule{1e-3, 10.0, 1e-8, true};
    const auto recomputed = run_adaptive(problem, config, std::nullopt, x_star);
    config.adaptive->recompute_epsilon = false;
    const auto fixed = run_adaptive(problem, config, std::nullopt, x_star);
    CHECK_FALSE(recomputed.alpha_change_iterations().empty());
    CHECK(same_records(recomputed, fixed));
  }
  CHECK_THROWS_AS(run_adaptive(problem, nn(0, 1e-2, 10)), std::invalid_argument);
}

TEST_CASE("trace csv") {
  const auto inst = make_quadratic(5, 4, 2, 1);
  const Problem problem(make_cycle_network(5, 2), build_objectives<double>(inst), 0.1);
  auto config = nn(1, 0.1, 400);
  config.adaptive = AdaptiveSchedule{};
  const auto trace = run(problem, config, std::nullopt, quadratic_optimum(inst));
  std::stringstream ss;
  write_trace_csv(ss, trace);
  CHECK(ss.str().rfind("t,e_t,F,grad_inf,alpha,comm\n", 0) == 0);
  const auto back = read_trace_csv(ss);
  REQUIRE(back.size() == trace.records.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].t == trace.records[k].t);
    CHECK(back[k].error == trace.records[k].error);
    CHECK(back[k].value == trace.records[k].value);
    CHECK(back[k].grad_inf == trace.records[k].grad_inf);
    CHECK(back[k].alpha == trace.records[k].alpha);
    CHECK(back[k].comm == trace.records[k].comm);
  }
  std::istringstream bad("t,e_t\n1,2\n");
  CHECK_THROWS_AS(read_trace_csv(bad), std::invalid_argument);
  CHECK(trace_summary(trace).rfind("ANN-1", 0) == 0);
}
