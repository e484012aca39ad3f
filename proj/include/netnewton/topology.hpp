#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "netnewton/types.hpp"

namespace netnewton {

/// Undirected, connected, loop-free agent graph. Neighbor lists are sorted.
/// The constructor rejects anything else, so every instance is valid.
class NetworkTopology {
 public:
  explicit NetworkTopology(std::vector<std::vector<Index>> lists);

  Index size() const { return static_cast<Index>(neighbors_.size()); }
  std::span<const Index> neighbors(Index i) const { return neighbors_[static_cast<std::size_t>(i)]; }
  Index degree(Index i) const { return static_cast<Index>(neighbors(i).size()); }
  bool has_edge(Index i, Index j) const;
  bool is_regular() const;
  Index edge_count() const;

 private:
  std::vector<std::vector<Index>> neighbors_;
};

/// Cycle on n nodes where each node also links to its d/2 nearest nodes in
/// each direction. Requires d even, 2 <= d < n, n >= 3.
NetworkTopology build_d_regular_cycle(Index n, Index d);

bool is_connected(const std::vector<std::vector<Index>>& neighbors);

/// Symmetric consensus weights W. Construction does not validate; use
/// validate_weights() for the doubly stochastic / rank conditions.
class WeightMatrix {
 public:
  explicit WeightMatrix(Eigen::MatrixXd entries);

  Index size() const { return entries_.rows(); }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  const Eigen::MatrixXd& entries() const { return entries_; }

  /// Smallest diagonal entry.
  double delta() const { return entries_.diagonal().minCoeff(); }
  /// Largest diagonal entry.
  double big_delta() const { return entries_.diagonal().maxCoeff(); }

 private:
  Eigen::MatrixXd entries_;
};

/// w_ii = 1/2 + 1/(2(d+1)), w_ij = 1/(2(d+1)) on edges. Regular graphs only.
WeightMatrix build_paper_weights(const NetworkTopology& topology);

/// Metropolis-Hastings weights, w_ij = 1/(1 + max(deg_i, deg_j)); any graph.
WeightMatrix build_metropolis_weights(const NetworkTopology& topology);

struct WeightIssue {
  enum class Kind { Dimension, Asymmetric, Negative, RowSum, Pattern, DiagonalBound, ZeroDiagonal, RankDeficient };
  Kind kind;
  Index row = -1;
  Index col = -1;
  double magnitude = 0.0;
  bool warning = false;
  std::string message;
};

/// Checks symmetry, unit row sums, sparsity against the topology, the
/// diagonal bounds 0 <= w_ii < 1 and lambda_2(W) < 1 - 1e-10. A zero
/// diagonal is reported as a warning only.
std::vector<WeightIssue> validate_weights(const WeightMatrix& weights, const NetworkTopology& topology);

bool has_failures(const std::vector<WeightIssue>& issues);

/// Topology together with its weights; shared by every problem built on it.
struct Network {
  NetworkTopology topology;
  WeightMatrix weights;

  Index size() const { return topology.size(); }
};

std::shared_ptr<const Network> make_network(NetworkTopology topology, WeightMatrix weights);

/// Convenience: d-regular cycle with w_ij = 1/(2(d+1)) on edges.
std::shared_ptr<const Network> make_cycle_network(Index n, Index d);

// Plain CSV matrix dumps (one row per line, 17 significant digits).
void write_weights_csv(std::ostream& out, const WeightMatrix& weights);
WeightMatrix read_weights_csv(std::istream& in);
void write_adjacency_csv(std::ostream& out, const NetworkTopology& topology);

}  // namespace netnewton
