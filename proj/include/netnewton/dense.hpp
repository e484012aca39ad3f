#pragma once

#include <limits>
#include <string>

#include "netnewton/penalty.hpp"

// Dense np x np assemblies used as independent oracles and by the spectral
// analysis. Never called from the solver path.

namespace netnewton::dense {

template <typename Scalar>
void guard(const PenalizedProblem<Scalar>& problem) {
  require(problem.agents() * problem.dim() <= kDenseGuard,
          "dense oracle: np = " + std::to_string(problem.agents() * problem.dim()) + " exceeds the dense guard");
}

/// M (x) I_p for an n x n matrix M.
template <typename Scalar>
Matrix<Scalar> kron_identity(const Matrix<Scalar>& m, Index p) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(m.rows() * p, m.cols() * p);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != Scalar(0)) out.block(i * p, j * p, p, p).diagonal().setConstant(m(i, j));
    }
  }
  return out;
}

/// Z = W (x) I_p.
template <typename Scalar>
Matrix<Scalar> coupling(const PenalizedProblem<Scalar>& problem) {
  guard(problem);
  return kron_identity<Scalar>(problem.network().weights.entries().template cast<Scalar>(), problem.dim());
}

/// G = blockdiag(grad^2 f_i(x_i)).
template <typename Scalar>
Matrix<Scalar> local_hessians(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y) {
  guard(problem);
  problem.check_shape(y);
  const Index p = problem.dim();
  const Index np = problem.agents() * p;
  Matrix<Scalar> g = Matrix<Scalar>::Zero(np, np);
  for (Index i = 0; i < problem.agents(); ++i) g.block(i * p, i * p, p, p) = problem.objective(i).hessian(y.block(i));
  return g;
}

/// H = I - Z + alpha G.
template <typename Scalar>
Matrix<Scalar> hessian(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y) {
  const Matrix<Scalar> z = coupling(problem);
  Matrix<Scalar> h = Matrix<Scalar>::Identity(z.rows(), z.cols()) - z;
  h += problem.alpha() * local_hessians(problem, y);
  return h;
}

/// D = alpha G + 2 (I - Z_d).
template <typename Scalar>
Matrix<Scalar> block_diagonal(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y) {
  const Matrix<Scalar> z = coupling(problem);
  Matrix<Scalar> d = problem.alpha() * local_hessians(problem, y);
  d.diagonal() += Scalar(2) * (Vector<Scalar>::Ones(z.rows()) - z.diagonal());
  return d;
}

/// B = I - 2 Z_d + Z.
template <typename Scalar>
Matrix<Scalar> coupling_part(const PenalizedProblem<Scalar>& problem) {
  Matrix<Scalar> b = coupling(problem);
  b.diagonal() = Vector<Scalar>::Ones(b.rows()) - b.diagonal();
  return b;
}

/// Symmetric S^{-1/2} for a symmetric positive definite S.
template <typename Scalar>
Matrix<Scalar> inverse_sqrt(const Matrix<Scalar>& s) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(s);
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

template <typename Scalar>
Matrix<Scalar> sqrt_psd(const Matrix<Scalar>& s) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(s);
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

/// D^{-1/2} B D^{-1/2}.
template <typename Scalar>
Matrix<Scalar> scaled_coupling(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y) {
  const Matrix<Scalar> d_inv_half = inverse_sqrt<Scalar>(block_diagonal(problem, y));
  return d_inv_half * coupling_part(problem) * d_inv_half;
}

/// Truncated series D^{-1/2} sum_{k=0}^{K} (D^{-1/2} B D^{-1/2})^k D^{-1/2}.
template <typename Scalar>
Matrix<Scalar> truncated_inverse(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y, int order) {
  require(order >= 0, "truncated_inverse: K must be nonnegative");
  const Matrix<Scalar> d_inv_half = inverse_sqrt<Scalar>(block_diagonal(problem, y));
  const Matrix<Scalar> x = d_inv_half * coupling_part(problem) * d_inv_half;
  Matrix<Scalar> power = Matrix<Scalar>::Identity(x.rows(), x.cols());
  Matrix<Scalar> sum = power;
  for (int k = 1; k <= order; ++k) {
    power = power * x;
    sum += power;
  }
  return d_inv_half * sum * d_inv_half;
}

template <typename Scalar>
StackedVector<Scalar> nn_direction(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y,
                                   const StackedVector<Scalar>& g, int order) {
  return StackedVector<Scalar>(problem.agents(), problem.dim(), -(truncated_inverse(problem, y, order) * g.flat()));
}

/// d = -H^{-1} g by dense Cholesky; checks ||H d + g|| < 1e-9 ||g||.
template <typename Scalar>
StackedVector<Scalar> exact_newton_direction(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y,
                                             const StackedVector<Scalar>& g) {
  const Matrix<Scalar> h = hessian(problem, y);
  Eigen::LLT<Matrix<Scalar>> factor(h);
  if (factor.info() != Eigen::Success) throw NumericalError("exact_newton_direction: Hessian not positive definite");
  Vector<Scalar> d = -factor.solve(g.flat());
  const Scalar residual = (h * d + g.flat()).norm();
  if (!(residual <= Scalar(1e-9) * g.flat().norm() + std::numeric_limits<Scalar>::min())) {
    throw NumericalError("exact_newton_direction: residual " + std::to_string(double(residual)) + " too large");
  }
  return StackedVector<Scalar>(problem.agents(), problem.dim(), std::move(d));
}

template <typename Scalar>
StackedVector<Scalar> exact_newton_direction(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y) {
  return exact_newton_direction(problem, y, problem.gradient(y));
}

/// argmin F. Constant-Hessian objectives: one linear solve H y = -grad F(0).
/// Otherwise damped Newton on F until ||grad F|| < tolerance.
template <typename Scalar>
StackedVector<Scalar> penalized_optimum(const PenalizedProblem<Scalar>& problem, Scalar tolerance = Scalar(1e-10),
                                        int max_iters = 200) {
  guard(problem);
  StackedVector<Scalar> y = problem.zeros();
  bool quadratic = true;
  for (const auto& f : problem.objectives()) quadratic = quadratic && f->has_constant_hessian();
  if (quadratic) {
    const Matrix<Scalar> h = hessian(problem, y);
    y.flat() = -h.llt().solve(problem.gradient(y).flat());
    return y;
  }
  for (int it = 0; it < max_iters; ++it) {
    const StackedVector<Scalar> g = problem.gradient(y);
    if (g.flat().norm() < tolerance) return y;
    const StackedVector<Scalar> d = exact_newton_direction(problem, y, g);
    const Scalar slope = g.flat().dot(d.flat());
    const Scalar current = problem.value(y);
    using std::abs;
    if (-slope <= Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + abs(current))) {
      y.flat() += d.flat();
      continue;
    }
    Scalar t(1);
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      StackedVector<Scalar> trial = y;
      trial.flat() += t * d.flat();
      const Scalar next = problem.value(trial);
      if (next <= current + Scalar(1e-4) * t * slope || (t == Scalar(1) && next <= current)) {
        y = std::move(trial);
        accepted = true;
        break;
      }
      t *= Scalar(0.5);
    }
    if (!accepted) {
      if (d.flat().norm() > Scalar(1e-8) * (Scalar(1) + y.flat().norm())) {
        throw NumericalError("penalized_optimum: line search stalled");
      }
      y.flat() += d.flat();
    }
  }
  if (!(problem.gradient(y).flat().norm() < tolerance)) {
    throw NumericalError("penalized_optimum: no convergence within the iteration budget");
  }
  return y;
}

}  // namespace netnewton::dense
