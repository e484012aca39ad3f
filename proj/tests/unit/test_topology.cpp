#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "netnewton/topology.hpp"

using namespace netnewton;

namespace {

std::vector<Index> neighbor_list(const NetworkTopology& t, Index i) {
  return {t.neighbors(i).begin(), t.neighbors(i).end()};
}

bool mentions(const std::vector<WeightIssue>& issues, WeightIssue::Kind kind) {
  return std::any_of(issues.begin(), issues.end(), [&](const WeightIssue& w) { return w.kind == kind; });
}

}  // namespace

TEST_CASE("d-regular cycle neighborhoods") {
  SUBCASE("plain cycle") {
    const auto t = build_d_regular_cycle(5, 2);
    for (Index i = 0; i < 5; ++i) {
      std::vector<Index> expect{(i + 4) % 5, (i + 1) % 5};
      std::sort(expect.begin(), expect.end());
      CHECK(neighbor_list(t, i) == expect);
    }
  }
  SUBCASE("n=100, d=4") {
    const auto t = build_d_regular_cycle(100, 4);
    CHECK(neighbor_list(t, 0) == std::vector<Index>{1, 2, 98, 99});
    CHECK(t.edge_count() == 200);
    CHECK(t.is_regular());
  }
  SUBCASE("n=6, d=4") {
    const auto t = build_d_regular_cycle(6, 4);
    CHECK(neighbor_list(t, 0) == std::vector<Index>{1, 2, 4, 5});
    for (Index i = 0; i < 6; ++i) {
      for (Index j : t.neighbors(i)) CHECK(t.has_edge(j, i));
    }
  }
}

TEST_CASE("cycle builder rejects bad degrees") {
  CHECK_THROWS_AS(build_d_regular_cycle(6, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_d_regular_cycle(6, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_d_regular_cycle(6, 6), std::invalid_argument);
  CHECK_THROWS_AS(build_d_regular_cycle(2, 2), std::invalid_argument);
}

TEST_CASE("topology constructor validates") {
  CHECK_THROWS_AS(NetworkTopology({{1}, {}}), std::invalid_argument);          // asymmetric
  CHECK_THROWS_AS(NetworkTopology({{0, 1}, {0}}), std::invalid_argument);      // self loop
  CHECK_THROWS_AS(NetworkTopology({{1}, {0}, {3}, {2}}), std::invalid_argument);  // disconnected
  CHECK_THROWS_AS(NetworkTopology({{5}, {0}}), std::invalid_argument);         // out of range
  const NetworkTopology path({{1}, {0, 2}, {1}});
  CHECK_FALSE(path.is_regular());
  CHECK(path.edge_count() == 2);
}

TEST_CASE("cycle weight recipe") {
  SUBCASE("d=4") {
    const auto w = build_paper_weights(build_d_regular_cycle(10, 4));
    CHECK(w(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(w(0, 1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(w(0, 5) == 0.0);
    CHECK(w.entries().row(3).sum() == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("d=2") {
    const auto w = build_paper_weights(build_d_regular_cycle(7, 2));
    CHECK(w(2, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(w(2, 3) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  }
  SUBCASE("delta equals Delta") {
    for (Index d : {2, 4, 6, 8, 10}) {
      const auto w = build_paper_weights(build_d_regular_cycle(30, d));
      const double expect = 0.5 + 1.0 / (2.0 * double(d + 1));
      CHECK(w.delta() == doctest::Approx(expect).epsilon(1e-15));
      CHECK(w.big_delta() == w.delta());
      CHECK(w.big_delta() < 1.0);
    }
  }
  CHECK_THROWS_AS(build_paper_weights(NetworkTopology({{1}, {0, 2}, {1}})), std::invalid_argument);
}

TEST_CASE("generated weights satisfy the consensus conditions") {
  for (Index n : {5, 12, 40}) {
    for (Index d = 2; d < std::min<Index>(n, 11); d += 2) {
      const auto t = build_d_regular_cycle(n, d);
      const auto w = build_paper_weights(t);
      CAPTURE(n);
      CAPTURE(d);
      CHECK(validate_weights(w, t).empty());
      const Eigen::MatrixXd& m = w.entries();
      CHECK((m * Eigen::VectorXd::Ones(n) - Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
      const auto& ev = eig.eigenvalues();
      CHECK(ev.minCoeff() >= -1.0 - 1e-12);
      CHECK(ev(n - 1) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(ev(n - 2) < 1.0 - 1e-10);
      // spectrum of I - W inside [0, 2(1 - delta)]
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> lap(Eigen::MatrixXd::Identity(n, n) - m);
      CHECK(lap.eigenvalues().minCoeff() >= -1e-12);
      CHECK(lap.eigenvalues().maxCoeff() <= 2.0 * (1.0 - w.delta()) + 1e-12);
    }
  }
}

TEST_CASE("metropolis weights on an irregular graph") {
  const NetworkTopology star({{1, 2, 3}, {0}, {0}, {0}});
  const auto w = build_metropolis_weights(star);
  CHECK(validate_weights(w, star).empty());
  CHECK(w(0, 1) == doctest::Approx(0.25));
  CHECK(w(1, 1) == doctest::Approx(0.75));
}

TEST_CASE("validation reports forced violations") {
  const auto t = build_d_regular_cycle(8, 4);
  const Eigen::MatrixXd good = build_paper_weights(t).entries();

  SUBCASE("row scaled by 0.9") {
    Eigen::MatrixXd m = good;
    m.row(3) *= 0.9;
    const auto issues = validate_weights(WeightMatrix(m), t);
    REQUIRE(has_failures(issues));
    const bool row3 = std::any_of(issues.begin(), issues.end(), [](const WeightIssue& w) {
      return w.kind == WeightIssue::Kind::RowSum && w.row == 3 && w.message.find("row sum") != std::string::npos;
    });
    CHECK(row3);
  }
  SUBCASE("identity") {
    const auto issues = validate_weights(WeightMatrix(Eigen::MatrixXd::Identity(8, 8)), t);
    CHECK(mentions(issues, WeightIssue::Kind::RankDeficient));
    const bool text = std::any_of(issues.begin(), issues.end(), [](const WeightIssue& w) {
      return w.message.find("rank(I-W) != n-1") != std::string::npos;
    });
    CHECK(text);
  }
  SUBCASE("weight outside the sparsity pattern") {
    Eigen::MatrixXd m = good;
    m(0, 4) = m(4, 0) = 0.05;
    m(0, 0) -= 0.05;
    m(4, 4) -= 0.05;
    CHECK(mentions(validate_weights(WeightMatrix(m), t), WeightIssue::Kind::Pattern));
  }
  SUBCASE("asymmetric and negative") {
    Eigen::MatrixXd m = good;
    m(0, 1) += 0.2;
    m(0, 2) -= 0.2;
    const auto issues = validate_weights(WeightMatrix(m), t);
    CHECK(mentions(issues, WeightIssue::Kind::Asymmetric));
    CHECK(mentions(issues, WeightIssue::Kind::Negative));
  }
  SUBCASE("zero diagonal only warns") {
    // complete graph K4 with w_ii = 0, w_ij = 1/3
    const NetworkTopology k4({{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}});
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 1.0 / 3.0);
    m.diagonal().setZero();
    const auto issues = validate_weights(WeightMatrix(m), k4);
    CHECK(mentions(issues, WeightIssue::Kind::ZeroDiagonal));
    CHECK_FALSE(has_failures(issues));
  }
  SUBCASE("size mismatch") {
    CHECK(mentions(validate_weights(WeightMatrix(Eigen::MatrixXd::Identity(3, 3)), t), WeightIssue::Kind::Dimension));
  }
}

TEST_CASE("weights csv round trip is exact") {
  const auto w = build_paper_weights(build_d_regular_cycle(9, 4));
  std::stringstream ss;
  write_weights_csv(ss, w);
  const auto back = read_weights_csv(ss);
  CHECK((back.entries() - w.entries()).cwiseAbs().maxCoeff() == 0.0);

  std::stringstream adj;
  write_adjacency_csv(adj, build_d_regular_cycle(5, 2));
  std::string first;
  std::getline(adj, first);
  CHECK(first == "0,1,0,0,1");
}

TEST_CASE("network bundles topology and weights") {
  const auto net = make_cycle_network(20, 6);
  CHECK(net->size() == 20);
  CHECK(net->topology.degree(7) == 6);
  CHECK(net->weights(7, 7) == doctest::Approx(0.5 + 1.0 / 14.0));
  CHECK_THROWS_AS(make_network(build_d_regular_cycle(5, 2), WeightMatrix(Eigen::MatrixXd::Identity(4, 4))),
                  std::invalid_argument);
}
