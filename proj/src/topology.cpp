#include "netnewton/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

namespace netnewton {

namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr double kSpectralGapTolerance = 1e-10;

}  // namespace

NetworkTopology::NetworkTopology(std::vector<std::vector<Index>> lists) : neighbors_(std::move(lists)) {
  const auto n = static_cast<Index>(neighbors_.size());
  require(n >= 1, "topology: at least one agent required");
  for (auto& list : neighbors_) {
    std::sort(list.begin(), list.end());
    require(std::adjacent_find(list.begin(), list.end()) == list.end(), "topology: duplicate neighbor entry");
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j : neighbors(i)) {
      require(j >= 0 && j < n, fmt::format("topology: neighbor {} of node {} out of range", j, i));
      require(j != i, fmt::format("topology: self-loop at node {}", i));
      require(has_edge(j, i), fmt::format("topology: edge {}->{} has no reverse edge", i, j));
    }
  }
  require(is_connected(neighbors_), "topology: graph is not connected");
}

bool NetworkTopology::has_edge(Index i, Index j) const {
  const auto list = neighbors(i);
  return std::binary_search(list.begin(), list.end(), j);
}

bool NetworkTopology::is_regular() const {
  return std::all_of(neighbors_.begin(), neighbors_.end(),
                     [&](const auto& list) { return list.size() == neighbors_.front().size(); });
}

Index NetworkTopology::edge_count() const {
  Index total = 0;
  for (const auto& list : neighbors_) total += static_cast<Index>(list.size());
  return total / 2;
}

bool is_connected(const std::vector<std::vector<Index>>& neighbors) {
  if (neighbors.empty()) return false;
  std::vector<bool> seen(neighbors.size(), false);
  std::queue<Index> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const Index i = frontier.front();
    frontier.pop();
    for (Index j : neighbors[static_cast<std::size_t>(i)]) {
      const auto u = static_cast<std::size_t>(j);
      if (u < seen.size() && !seen[u]) {
        seen[u] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == neighbors.size();
}

NetworkTopology build_d_regular_cycle(Index n, Index d) {
  require(n >= 3, "d-regular cycle: need n >= 3");
  require(d >= 2 && d % 2 == 0, "d-regular cycle: d must be even and >= 2");
  require(d < n, "d-regular cycle: need d < n");
  std::vector<std::vector<Index>> neighbors(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& list = neighbors[static_cast<std::size_t>(i)];
    for (Index k = 1; k <= d / 2; ++k) {
      list.push_back((i + k) % n);
      list.push_back((i - k + n) % n);
    }
  }
  return NetworkTopology(std::move(neighbors));
}

WeightMatrix::WeightMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols() && entries_.rows() > 0, "weights: matrix must be square and nonempty");
}

WeightMatrix build_paper_weights(const NetworkTopology& topology) {
  require(topology.is_regular(), "build weights: topology must be regular");
  const Index n = topology.size();
  const double d = static_cast<double>(topology.degree(0));
  const double off = 1.0 / (2.0 * (d + 1.0));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    w(i, i) = 0.5 + off;
    for (Index j : topology.neighbors(i)) w(i, j) = off;
  }
  return WeightMatrix(std::move(w));
}

WeightMatrix build_metropolis_weights(const NetworkTopology& topology) {
  const Index n = topology.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j : topology.neighbors(i)) {
      w(i, j) = 1.0 / (1.0 + static_cast<double>(std::max(topology.degree(i), topology.degree(j))));
    }
    w(i, i) = 1.0 - w.row(i).sum();
  }
  return WeightMatrix(std::move(w));
}

std::vector<WeightIssue> validate_weights(const WeightMatrix& weights, const NetworkTopology& topology) {
  using Kind = WeightIssue::Kind;
  std::vector<WeightIssue> issues;
  const Index n = weights.size();
  if (n != topology.size()) {
    issues.push_back({Kind::Dimension, -1, -1, std::abs(static_cast<double>(n - topology.size())), false,
                      fmt::format("dimension mismatch: W is {}x{}, topology has {} nodes", n, n, topology.size())});
    return issues;
  }
  const auto& w = weights.entries();

  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (w(i, j) != w(j, i)) {
        issues.push_back({Kind::Asymmetric, i, j, std::abs(w(i, j) - w(j, i)), false,
                          fmt::format("W not symmetric at ({}, {})", i, j)});
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (w(i, j) < 0.0) {
        issues.push_back({Kind::Negative, i, j, -w(i, j), false, fmt::format("negative weight at ({}, {})", i, j)});
      }
      if (i != j && w(i, j) != 0.0 && !topology.has_edge(i, j)) {
        issues.push_back({Kind::Pattern, i, j, std::abs(w(i, j)), false,
                          fmt::format("nonzero weight at ({}, {}) but nodes are not neighbors", i, j)});
      }
    }
    const double row_error = std::abs(w.row(i).sum() - 1.0);
    if (!(row_error < kRowSumTolerance)) {
      issues.push_back({Kind::RowSum, i, -1, row_error, false, fmt::format("row sum != 1 at row {}", i)});
    }
    const double wii = w(i, i);
    if (wii < 0.0 || wii >= 1.0) {
      issues.push_back({Kind::DiagonalBound, i, i, wii, false, fmt::format("diagonal w_ii outside [0, 1) at {}", i)});
    } else if (wii == 0.0) {
      issues.push_back({Kind::ZeroDiagonal, i, i, 0.0, true, fmt::format("zero diagonal weight at {} (delta = 0)", i)});
    }
  }

  // Spectral condition on the symmetric part; asymmetry is reported above.
  const Eigen::MatrixXd sym = 0.5 * (w + w.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  const auto& eig = solver.eigenvalues();  // ascending
  if (n >= 2) {
    const double second = eig(n - 2);
    if (!(second < 1.0 - kSpectralGapTolerance)) {
      issues.push_back({Kind::RankDeficient, -1, -1, second, false,
                        fmt::format("rank(I-W) != n-1: second largest eigenvalue {:.17g}", second)});
    }
  }
  return issues;
}

bool has_failures(const std::vector<WeightIssue>& issues) {
  return std::any_of(issues.begin(), issues.end(), [](const WeightIssue& issue) { return !issue.warning; });
}

std::shared_ptr<const Network> make_network(NetworkTopology topology, WeightMatrix weights) {
  require(topology.size() == weights.size(), "network: weights and topology sizes differ");
  return std::make_shared<const Network>(Network{std::move(topology), std::move(weights)});
}

std::shared_ptr<const Network> make_cycle_network(Index n, Index d) {
  auto topology = build_d_regular_cycle(n, d);
  auto weights = build_paper_weights(topology);
  return make_network(std::move(topology), std::move(weights));
}

void write_weights_csv(std::ostream& out, const WeightMatrix& weights) {
  const auto& w = weights.entries();
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < w.cols(); ++j) {
      if (j > 0) out << ',';
      out << fmt::format("{:.17g}", w(i, j));
    }
    out << '\n';
  }
}

WeightMatrix read_weights_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  require(n > 0, "weights csv: empty input");
  Eigen::MatrixXd w(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    require(static_cast<Index>(row.size()) == n, fmt::format("weights csv: row {} has {} entries, expected {}", i, row.size(), n));
    for (Index j = 0; j < n; ++j) w(i, j) = row[static_cast<std::size_t>(j)];
  }
  return WeightMatrix(std::move(w));
}

void write_adjacency_csv(std::ostream& out, const NetworkTopology& topology) {
  const Index n = topology.size();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (j > 0) out << ',';
      out << (topology.has_edge(i, j) ? 1 : 0);
    }
    out << '\n';
  }
}

}  // namespace netnewton
