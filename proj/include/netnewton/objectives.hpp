#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "netnewton/types.hpp"

namespace netnewton {

/// Hessian eigenvalue bounds m, M and Hessian Lipschitz constant L.
template <typename Scalar>
struct CurvatureBounds {
  Scalar m{};
  Scalar M{};
  Scalar L{};
};

/// A strongly convex, twice differentiable local cost f_i.
template <typename Scalar>
class LocalObjective {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;
  using ConstVectorRef = Eigen::Ref<const VectorType>;

  virtual ~LocalObjective() = default;

  virtual Index dim() const = 0;
  virtual Scalar value(ConstVectorRef x) const = 0;
  virtual void gradient_into(ConstVectorRef x, Eigen::Ref<VectorType> out) const = 0;
  virtual void hessian_into(ConstVectorRef x, Eigen::Ref<MatrixType> out) const = 0;

  /// Declared bounds valid over all of R^p.
  virtual CurvatureBounds<Scalar> curvature() const = 0;

  virtual bool has_constant_hessian() const { return false; }

  VectorType gradient(ConstVectorRef x) const {
    VectorType g(dim());
    gradient_into(x, g);
    return g;
  }

  MatrixType hessian(ConstVectorRef x) const {
    MatrixType h(dim(), dim());
    hessian_into(x, h);
    return h;
  }
};

template <typename Scalar>
using ObjectivePtr = std::shared_ptr<const LocalObjective<Scalar>>;

/// f(x) = 1/2 x^T diag(a) x + b^T x with a > 0.
template <typename Scalar>
class QuadraticObjective final : public LocalObjective<Scalar> {
 public:
  using typename LocalObjective<Scalar>::VectorType;
  using typename LocalObjective<Scalar>::MatrixType;
  using typename LocalObjective<Scalar>::ConstVectorRef;

  QuadraticObjective(VectorType diagonal, VectorType linear) : a_(std::move(diagonal)), b_(std::move(linear)) {
    require(a_.size() == b_.size(), "quadratic: diagonal and linear term sizes differ");
    require((a_.array() > Scalar(0)).all(), "quadratic: diagonal must be positive");
  }

  Index dim() const override { return a_.size(); }

  Scalar value(ConstVectorRef x) const override {
    return Scalar(0.5) * x.dot(a_.cwiseProduct(x)) + b_.dot(x);
  }

  void gradient_into(ConstVectorRef x, Eigen::Ref<VectorType> out) const override {
    out = a_.cwiseProduct(x) + b_;
  }

  void hessian_into(ConstVectorRef, Eigen::Ref<MatrixType> out) const override {
    out.setZero();
    out.diagonal() = a_;
  }

  CurvatureBounds<Scalar> curvature() const override { return {a_.minCoeff(), a_.maxCoeff(), Scalar(0)}; }

  bool has_constant_hessian() const override { return true; }

  const VectorType& diagonal() const { return a_; }
  const VectorType& linear() const { return b_; }

 private:
  VectorType a_;
  VectorType b_;
};

namespace detail {

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(t)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar t) {
  using std::exp;
  using std::log1p;
  return t > Scalar(0) ? t + log1p(exp(-t)) : log1p(exp(t));
}

}  // namespace detail

/// f(x) = (reg/2)||x||^2 + sum_l log(1 + exp(-v_l u_l^T x)), labels v_l in {-1, +1}.
/// Rows of `features` are the samples u_l.
template <typename Scalar>
class LogisticObjective final : public LocalObjective<Scalar> {
 public:
  using typename LocalObjective<Scalar>::VectorType;
  using typename LocalObjective<Scalar>::MatrixType;
  using typename LocalObjective<Scalar>::ConstVectorRef;

  LogisticObjective(MatrixType features, VectorType labels, Scalar regularizer)
      : u_(std::move(features)), v_(std::move(labels)), reg_(regularizer) {
    require(u_.rows() == v_.size() && u_.rows() >= 1, "logistic: need one label per sample and >= 1 sample");
    require(reg_ > Scalar(0), "logistic: regularizer must be positive");
    require((v_.array().abs() == Scalar(1)).all(), "logistic: labels must be -1 or +1");
    const VectorType norms = u_.rowwise().norm();
    // sup |sigma''| = 1 / (6 sqrt 3)
    using std::sqrt;
    lipschitz_ = norms.array().cube().sum() / (Scalar(6) * sqrt(Scalar(3)));
    Eigen::SelfAdjointEigenSolver<MatrixType> gram(u_.transpose() * u_, Eigen::EigenvaluesOnly);
    upper_ = reg_ + Scalar(0.25) * gram.eigenvalues().maxCoeff();
  }

  Index dim() const override { return u_.cols(); }

  Scalar value(ConstVectorRef x) const override {
    const VectorType margins = v_.cwiseProduct(u_ * x);
    Scalar loss(0);
    for (Index l = 0; l < margins.size(); ++l) loss += detail::softplus<Scalar>(-margins(l));
    return Scalar(0.5) * reg_ * x.squaredNorm() + loss;
  }

  void gradient_into(ConstVectorRef x, Eigen::Ref<VectorType> out) const override {
    const VectorType margins = v_.cwiseProduct(u_ * x);
    VectorType weights(margins.size());
    for (Index l = 0; l < margins.size(); ++l) weights(l) = v_(l) * detail::sigmoid<Scalar>(-margins(l));
    out = reg_ * x - u_.transpose() * weights;
  }

  void hessian_into(ConstVectorRef x, Eigen::Ref<MatrixType> out) const override {
    const VectorType z = u_ * x;
    VectorType s(z.size());
    for (Index l = 0; l < z.size(); ++l) {
      const Scalar sig = detail::sigmoid<Scalar>(z(l));
      s(l) = sig * (Scalar(1) - sig);
    }
    out.noalias() = u_.transpose() * s.asDiagonal() * u_;
    out.diagonal().array() += reg_;
  }

  /// m = reg, M = reg + lambda_max(U^T U)/4, L = sum ||u_l||^3 / (6 sqrt 3).
  CurvatureBounds<Scalar> curvature() const override { return {reg_, upper_, lipschitz_}; }

  const MatrixType& features() const { return u_; }
  const VectorType& labels() const { return v_; }
  Scalar regularizer() const { return reg_; }

 private:
  MatrixType u_;
  VectorType v_;
  Scalar reg_;
  Scalar lipschitz_{};
  Scalar upper_{};
};

// ---------------------------------------------------------------------------
// Seeded experiment instances. Data is generated in double and converted to
// the requested scalar type when objectives are built.

struct QuadraticInstance {
  Index agents = 0;
  Index dim = 0;
  int xi = 0;
  std::uint64_t seed = 0;
  std::vector<Eigen::VectorXd> diagonals;
  std::vector<Eigen::VectorXd> linear_terms;
};

/// Diagonals: first p/2 entries from {1, 1e-1, ..., 1e-xi}, last p/2 from
/// {1, 1e1, ..., 1e xi}, uniformly with replacement; b_i uniform on [0, 1]^p.
QuadraticInstance make_quadratic(Index agents, Index dim, int xi, std::uint64_t seed);

/// x* = -(sum A_i)^{-1} sum b_i.
Eigen::VectorXd quadratic_optimum(const QuadraticInstance& instance);

struct LogisticParams {
  Index agents = 100;
  Index dim = 10;
  Index samples_per_agent = 50;
  double mu = 3.0;
  double sigma_plus = 1.0;
  double sigma_minus = 1.0;
  double lambda = 1e-4;
  std::uint64_t seed = 1;
};

struct LogisticInstance {
  LogisticParams params;
  std::vector<Eigen::MatrixXd> features;  // q_i x p per agent
  std::vector<Eigen::VectorXd> labels;    // q_i per agent
};

/// Labels by fair coin per sample; feature components ~ N(+mu, sigma_+^2)
/// for v = +1 and N(-mu, sigma_-^2) for v = -1.
LogisticInstance make_logistic(const LogisticParams& params);

template <typename Scalar>
std::vector<ObjectivePtr<Scalar>> build_objectives(const QuadraticInstance& instance) {
  std::vector<ObjectivePtr<Scalar>> out;
  out.reserve(instance.diagonals.size());
  for (std::size_t i = 0; i < instance.diagonals.size(); ++i) {
    out.push_back(std::make_shared<QuadraticObjective<Scalar>>(instance.diagonals[i].cast<Scalar>(),
                                                               instance.linear_terms[i].cast<Scalar>()));
  }
  return out;
}

template <typename Scalar>
std::vector<ObjectivePtr<Scalar>> build_objectives(const LogisticInstance& instance) {
  std::vector<ObjectivePtr<Scalar>> out;
  out.reserve(instance.features.size());
  const Scalar reg = Scalar(instance.params.lambda) / Scalar(instance.params.agents);
  for (std::size_t i = 0; i < instance.features.size(); ++i) {
    out.push_back(std::make_shared<LogisticObjective<Scalar>>(instance.features[i].cast<Scalar>(),
                                                              instance.labels[i].cast<Scalar>(), reg));
  }
  return out;
}

/// Minimizer of sum_i f_i by damped Newton with Armijo backtracking. Throws
/// NumericalError if the line search stalls before ||grad|| < tolerance.
template <typename Scalar>
Vector<Scalar> centralized_optimum(std::span<const ObjectivePtr<Scalar>> objectives, Scalar tolerance = Scalar(1e-10),
                                   int max_iters = 200) {
  require(!objectives.empty(), "centralized_optimum: no objectives");
  const Index p = objectives.front()->dim();
  Vector<Scalar> x = Vector<Scalar>::Zero(p);
  Vector<Scalar> g(p), gi(p);
  Matrix<Scalar> h(p, p), hi(p, p);

  auto total_value = [&](const Vector<Scalar>& point) {
    Scalar sum(0);
    for (const auto& f : objectives) sum += f->value(point);
    return sum;
  };
  auto assemble = [&](const Vector<Scalar>& point) {
    g.setZero();
    h.setZero();
    for (const auto& f : objectives) {
      f->gradient_into(point, gi);
      f->hessian_into(point, hi);
      g += gi;
      h += hi;
    }
  };

  for (int it = 0; it < max_iters; ++it) {
    assemble(x);
    if (g.norm() < tolerance) return x;
    const Vector<Scalar> step = -h.llt().solve(g);
    const Scalar slope = g.dot(step);
    const Scalar current = total_value(x);
    using std::abs;
    // Predicted decrease below the rounding level of F: the line search can
    // no longer tell steps apart, take the full Newton step.
    if (-slope <= Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + abs(current))) {
      x += step;
      continue;
    }
    Scalar t(1);
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      const Vector<Scalar> trial = x + t * step;
      const Scalar next = total_value(trial);
      // Near the optimum the decrease is below rounding; accept unit steps.
      if (next <= current + Scalar(1e-4) * t * slope || (t == Scalar(1) && next <= current)) {
        x = trial;
        accepted = true;
        break;
      }
      t *= Scalar(0.5);
    }
    if (!accepted) {
      // Rounding hides the decrease once the step is tiny.
      if (step.norm() > Scalar(1e-8) * (Scalar(1) + x.norm())) {
        throw NumericalError("centralized_optimum: line search stalled at gradient norm " +
                             std::to_string(double(g.norm())));
      }
      x += step;
    }
  }
  assemble(x);
  if (!(g.norm() < tolerance)) {
    throw NumericalError("centralized_optimum: stalled with gradient norm " + std::to_string(double(g.norm())));
  }
  return x;
}

/// Reference optimum of a logistic instance, ||grad|| < 1e-10.
Eigen::VectorXd logistic_optimum_oracle(const LogisticInstance& instance);

/// Extreme Hessian eigenvalues over the sample points and the largest
/// observed ||H(x) - H(x')|| / ||x - x'|| over all sample pairs.
template <typename Scalar>
CurvatureBounds<Scalar> curvature_metadata(const LocalObjective<Scalar>& objective,
                                           std::span<const Vector<Scalar>> samples) {
  require(samples.size() >= 2, "curvature_metadata: need at least two sample points");
  CurvatureBounds<Scalar> out{std::numeric_limits<Scalar>::infinity(), Scalar(0), Scalar(0)};
  std::vector<Matrix<Scalar>> hessians;
  hessians.reserve(samples.size());
  for (const auto& x : samples) {
    hessians.push_back(objective.hessian(x));
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(hessians.back(), Eigen::EigenvaluesOnly);
    out.m = std::min(out.m, eig.eigenvalues().minCoeff());
    out.M = std::max(out.M, eig.eigenvalues().maxCoeff());
  }
  for (std::size_t a = 0; a < samples.size(); ++a) {
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      const Scalar dx = (samples[a] - samples[b]).norm();
      if (dx == Scalar(0)) continue;
      const Matrix<Scalar> dh = hessians[a] - hessians[b];
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(dh, Eigen::EigenvaluesOnly);
      const Scalar spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
      out.L = std::max(out.L, spectral / dx);
    }
  }
  return out;
}

/// Network-wide bounds: min m_i, max M_i, max L_i of the declared curvatures.
template <typename Scalar>
CurvatureBounds<Scalar> combined_curvature(std::span<const ObjectivePtr<Scalar>> objectives) {
  CurvatureBounds<Scalar> out{std::numeric_limits<Scalar>::infinity(), Scalar(0), Scalar(0)};
  for (const auto& f : objectives) {
    const auto c = f->curvature();
    out.m = std::min(out.m, c.m);
    out.M = std::max(out.M, c.M);
    out.L = std::max(out.L, c.L);
  }
  return out;
}

}  // namespace netnewton
