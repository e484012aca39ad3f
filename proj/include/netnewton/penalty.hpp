#pragma once

#include <memory>
#include <string>
#include <vector>

#include "netnewton/objectives.hpp"
#include "netnewton/topology.hpp"
#include "netnewton/types.hpp"

namespace netnewton {

/// F(y) = 1/2 y^T (I - Z) y + alpha sum_i f_i(x_i), Z = W (x) I_p.
///
/// Every evaluation is block-wise over neighbor lists; the np x np matrices
/// only exist in dense.hpp.
template <typename Scalar>
class PenalizedProblem {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;
  using Stacked = StackedVector<Scalar>;

  PenalizedProblem(std::shared_ptr<const Network> network, std::vector<ObjectivePtr<Scalar>> objectives, Scalar alpha)
      : network_(std::move(network)), objectives_(std::move(objectives)), alpha_(alpha) {
    require(network_ != nullptr, "penalized problem: null network");
    require(alpha_ > Scalar(0), "penalized problem: alpha must be positive");
    require(static_cast<Index>(objectives_.size()) == network_->size(),
            "penalized problem: need one objective per agent");
    dim_ = objectives_.front()->dim();
    for (const auto& f : objectives_) require(f->dim() == dim_, "penalized problem: objective dimensions differ");
  }

  PenalizedProblem with_alpha(Scalar alpha) const { return PenalizedProblem(network_, objectives_, alpha); }

  Scalar alpha() const { return alpha_; }
  Index agents() const { return network_->size(); }
  Index dim() const { return dim_; }
  const Network& network() const { return *network_; }
  const std::shared_ptr<const Network>& network_ptr() const { return network_; }
  const LocalObjective<Scalar>& objective(Index i) const { return *objectives_[static_cast<std::size_t>(i)]; }
  const std::vector<ObjectivePtr<Scalar>>& objectives() const { return objectives_; }
  Scalar weight(Index i, Index j) const { return Scalar(network_->weights(i, j)); }

  /// Network-wide m, M, L from the objectives' declared curvature.
  CurvatureBounds<Scalar> curvature() const { return combined_curvature<Scalar>(objectives_); }

  Stacked zeros() const { return Stacked(agents(), dim_); }

  Scalar value(const Stacked& y) const {
    check_shape(y);
    Scalar quadratic(0);
    Scalar local(0);
    VectorType mixed(dim_);
    for (Index i = 0; i < agents(); ++i) {
      mixed = weight(i, i) * y.block(i);
      for (Index j : network_->topology.neighbors(i)) mixed += weight(i, j) * y.block(j);
      quadratic += y.block(i).squaredNorm() - y.block(i).dot(mixed);
      local += objective(i).value(y.block(i));
    }
    return Scalar(0.5) * quadratic + alpha_ * local;
  }

  /// g_i = (1 - w_ii) x_i - sum_{j in N_i} w_ij x_j + alpha grad f_i(x_i).
  VectorType local_gradient(const Stacked& y, Index i) const {
    check_shape(y);
    require(i >= 0 && i < agents(), "local_gradient: agent index out of range");
    VectorType g = objective(i).gradient(y.block(i));
    g *= alpha_;
    g += (Scalar(1) - weight(i, i)) * y.block(i);
    for (Index j : network_->topology.neighbors(i)) g -= weight(i, j) * y.block(j);
    return g;
  }

  Stacked gradient(const Stacked& y) const {
    Stacked g(agents(), dim_);
    for (Index i = 0; i < agents(); ++i) g.block(i) = local_gradient(y, i);
    return g;
  }

  void check_shape(const Stacked& y) const {
    require(y.agents() == agents() && y.dim() == dim_, "penalized problem: stacked vector shape mismatch");
  }

 private:
  std::shared_ptr<const Network> network_;
  std::vector<ObjectivePtr<Scalar>> objectives_;
  Scalar alpha_;
  Index dim_ = 0;
};

/// H = D - B with D_ii = alpha grad^2 f_i(x_i) + 2(1 - w_ii) I,
/// B_ii = (1 - w_ii) I and B_ij = w_ij I on edges.
template <typename Scalar>
struct SplittingBlocks {
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;

  std::shared_ptr<const Network> network;
  std::vector<MatrixType> d_blocks;
  std::vector<Eigen::LLT<MatrixType>> d_factors;
  VectorType b_diagonal;

  Index agents() const { return static_cast<Index>(d_blocks.size()); }

  Scalar b_block(Index i, Index j) const {
    return i == j ? b_diagonal(i) : Scalar(network->weights(i, j));
  }

  /// (B d)_i using only agent i and its neighbors.
  VectorType apply_b(const StackedVector<Scalar>& d, Index i) const {
    VectorType out = b_diagonal(i) * d.block(i);
    for (Index j : network->topology.neighbors(i)) out += Scalar(network->weights(i, j)) * d.block(j);
    return out;
  }
};

/// Builds D_t blocks and their Cholesky factors at y.
template <typename Scalar>
SplittingBlocks<Scalar> splitting_blocks(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y) {
  problem.check_shape(y);
  const Index n = problem.agents();
  SplittingBlocks<Scalar> out;
  out.network = problem.network_ptr();
  out.d_blocks.reserve(static_cast<std::size_t>(n));
  out.d_factors.reserve(static_cast<std::size_t>(n));
  out.b_diagonal.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar off = Scalar(1) - problem.weight(i, i);
    Matrix<Scalar> d = problem.objective(i).hessian(y.block(i));
    d *= problem.alpha();
    d.diagonal().array() += Scalar(2) * off;
    Eigen::LLT<Matrix<Scalar>> factor(d);
    if (factor.info() != Eigen::Success) {
      throw NumericalError("splitting_blocks: D block of agent " + std::to_string(i) + " is not positive definite");
    }
    out.d_blocks.push_back(std::move(d));
    out.d_factors.push_back(std::move(factor));
    out.b_diagonal(i) = off;
  }
  return out;
}

/// NN-K direction by the node-local recursion
///   d^(0)_i = -D_ii^{-1} g_i,
///   d^(k+1)_i = D_ii^{-1} (sum_{j in N_i + i} B_ij d^(k)_j - g_i).
template <typename Scalar>
StackedVector<Scalar> nn_direction(const SplittingBlocks<Scalar>& blocks, const StackedVector<Scalar>& g, int order) {
  require(order >= 0, "nn_direction: K must be nonnegative");
  require(g.agents() == blocks.agents(), "nn_direction: gradient shape mismatch");
  const Index n = blocks.agents();
  StackedVector<Scalar> d(n, g.dim());
  for (Index i = 0; i < n; ++i) d.block(i) = -blocks.d_factors[static_cast<std::size_t>(i)].solve(g.block(i));
  StackedVector<Scalar> next(n, g.dim());
  for (int k = 0; k < order; ++k) {
    for (Index i = 0; i < n; ++i) {
      next.block(i) = blocks.d_factors[static_cast<std::size_t>(i)].solve(blocks.apply_b(d, i) - g.block(i));
    }
    std::swap(d, next);
  }
  return d;
}

template <typename Scalar>
StackedVector<Scalar> nn_direction(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y,
                                   const StackedVector<Scalar>& g, int order) {
  return nn_direction(splitting_blocks(problem, y), g, order);
}

}  // namespace netnewton
