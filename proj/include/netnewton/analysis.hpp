#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netnewton/dense.hpp"
#include "netnewton/penalty.hpp"

namespace netnewton {

/// Absolute slack applied to every eigenvalue inequality.
inline constexpr double kBoundSlack = 1e-9;
/// Entrywise tolerance for the I - H Hhat^{-1} = (B D^{-1})^{K+1} identity.
inline constexpr double kIdentityTolerance = 1e-10;

template <typename Scalar>
struct RateConstants {
  Scalar rho{};     // 2(1-delta) / (2(1-delta) + alpha m)
  Scalar lambda{};  // 1 / (2(1-delta) + alpha M)
  Scalar Lambda{};  // (1 - rho^{K+1}) / ((1-rho)(2(1-Delta) + alpha m))
};

template <typename Scalar>
RateConstants<Scalar> rate_constants(Scalar delta, Scalar big_delta, Scalar m, Scalar M, Scalar alpha, int order) {
  require(Scalar(0) <= delta && delta <= big_delta && big_delta < Scalar(1),
          "rate_constants: need 0 <= delta <= Delta < 1");
  require(Scalar(0) < m && m <= M, "rate_constants: need 0 < m <= M");
  require(alpha > Scalar(0), "rate_constants: alpha must be positive");
  require(order >= 0, "rate_constants: K must be nonnegative");
  using std::pow;
  RateConstants<Scalar> out;
  const Scalar spread = Scalar(2) * (Scalar(1) - delta);
  out.rho = spread / (spread + alpha * m);
  out.lambda = Scalar(1) / (spread + alpha * M);
  out.Lambda = (Scalar(1) - pow(out.rho, order + 1)) /
               ((Scalar(1) - out.rho) * (Scalar(2) * (Scalar(1) - big_delta) + alpha * m));
  return out;
}

/// Constants plugged into the bounds, plus where m, M, L came from.
struct AnalysisInputs {
  double delta = 0;
  double big_delta = 0;
  double m = 0;
  double M = 0;
  double L = 0;
  double alpha = 0;
  int order = 0;
  std::string curvature_source;

  RateConstants<double> rates() const { return rate_constants(delta, big_delta, m, M, alpha, order); }
};

/// delta, Delta from W; m, M, L from the objectives' declared curvature.
template <typename Scalar>
AnalysisInputs analysis_inputs(const PenalizedProblem<Scalar>& problem, int order) {
  AnalysisInputs in;
  in.delta = problem.network().weights.delta();
  in.big_delta = problem.network().weights.big_delta();
  const auto c = problem.curvature();
  in.m = double(c.m);
  in.M = double(c.M);
  in.L = double(c.L);
  in.alpha = double(problem.alpha());
  in.order = order;
  bool constant = true;
  for (const auto& f : problem.objectives()) constant = constant && f->has_constant_hessian();
  in.curvature_source = constant ? "exact (constant Hessians)" : "regularizer floor m, analytic M and L bounds";
  return in;
}

struct BoundRecord {
  std::string name;
  double theoretical = 0;
  double measured = 0;
  double margin = 0;  // distance to the bound, positive when satisfied
  bool pass = false;
};

inline BoundRecord upper_bound_record(std::string name, double bound, double measured, double slack = kBoundSlack) {
  return {std::move(name), bound, measured, bound - measured, measured <= bound + slack};
}

inline BoundRecord lower_bound_record(std::string name, double bound, double measured, double slack = kBoundSlack) {
  return {std::move(name), bound, measured, measured - bound, measured >= bound - slack};
}

namespace detail {

template <typename Scalar>
Vector<Scalar> symmetric_eigenvalues(const Matrix<Scalar>& m) {
  const Matrix<Scalar> sym = Scalar(0.5) * (m + m.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>(sym, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace detail

/// alpha m I <= H <= (2(1-delta) + alpha M) I,
/// (2(1-Delta) + alpha m) I <= D <= (2(1-delta) + alpha M) I, 0 <= B <= 2(1-delta) I.
template <typename Scalar>
std::vector<BoundRecord> check_hessian_bounds(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y,
                                              const AnalysisInputs& in) {
  const auto h = detail::symmetric_eigenvalues<Scalar>(dense::hessian(problem, y));
  const auto d = detail::symmetric_eigenvalues<Scalar>(dense::block_diagonal(problem, y));
  const auto b = detail::symmetric_eigenvalues<Scalar>(dense::coupling_part(problem));
  const double top = 2.0 * (1.0 - in.delta) + in.alpha * in.M;
  return {
      lower_bound_record("H_min >= alpha*m", in.alpha * in.m, double(h.minCoeff())),
      upper_bound_record("H_max <= 2(1-delta)+alpha*M", top, double(h.maxCoeff())),
      lower_bound_record("D_min >= 2(1-Delta)+alpha*m", 2.0 * (1.0 - in.big_delta) + in.alpha * in.m,
                         double(d.minCoeff())),
      upper_bound_record("D_max <= 2(1-delta)+alpha*M", top, double(d.maxCoeff())),
      lower_bound_record("B_min >= 0", 0.0, double(b.minCoeff())),
      upper_bound_record("B_max <= 2(1-delta)", 2.0 * (1.0 - in.delta), double(b.maxCoeff())),
  };
}

/// 0 <= D^{-1/2} B D^{-1/2} <= rho I.
template <typename Scalar>
std::vector<BoundRecord> check_dbd_bound(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y,
                                         const AnalysisInputs& in) {
  const auto e = detail::symmetric_eigenvalues<Scalar>(dense::scaled_coupling(problem, y));
  return {lower_bound_record("DBD_min >= 0", 0.0, double(e.minCoeff())),
          upper_bound_record("DBD_max <= rho", in.rates().rho, double(e.maxCoeff()))};
}

/// 0 <= E = I - Hhat^{-1/2} H Hhat^{-1/2} <= rho^{K+1} I and the identity
/// I - H Hhat^{-1} = (B D^{-1})^{K+1}.
template <typename Scalar>
std::vector<BoundRecord> check_error_matrix(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y,
                                            const AnalysisInputs& in) {
  const Matrix<Scalar> h = dense::hessian(problem, y);
  const Matrix<Scalar> hhat_inv = dense::truncated_inverse(problem, y, in.order);
  const Matrix<Scalar> s = dense::sqrt_psd<Scalar>(Scalar(0.5) * (hhat_inv + hhat_inv.transpose()));
  const Index np = h.rows();
  const Matrix<Scalar> e = Matrix<Scalar>::Identity(np, np) - s * h * s;
  const auto eig = detail::symmetric_eigenvalues<Scalar>(e);

  const Matrix<Scalar> d = dense::block_diagonal(problem, y);
  const Matrix<Scalar> d_inv = d.llt().solve(Matrix<Scalar>::Identity(np, np));
  const Matrix<Scalar> bd = dense::coupling_part(problem) * d_inv;
  Matrix<Scalar> power = Matrix<Scalar>::Identity(np, np);
  for (int k = 0; k <= in.order; ++k) power = power * bd;
  const Matrix<Scalar> lhs = Matrix<Scalar>::Identity(np, np) - h * hhat_inv;
  const double identity_error = double((lhs - power).cwiseAbs().maxCoeff());

  using std::pow;
  return {lower_bound_record("E_min >= 0", 0.0, double(eig.minCoeff())),
          upper_bound_record("E_max <= rho^(K+1)", pow(in.rates().rho, in.order + 1), double(eig.maxCoeff())),
          upper_bound_record("|I - H*Hhat_inv - (B*D_inv)^(K+1)|_max", kIdentityTolerance, identity_error, 0.0)};
}

/// lambda I <= Hhat^{-1} <= Lambda I.
template <typename Scalar>
std::vector<BoundRecord> check_hhat_inverse_bounds(const PenalizedProblem<Scalar>& problem,
                                                   const StackedVector<Scalar>& y, const AnalysisInputs& in) {
  const auto eig = detail::symmetric_eigenvalues<Scalar>(dense::truncated_inverse(problem, y, in.order));
  const auto rates = in.rates();
  return {lower_bound_record("Hhat_inv_min >= lambda", rates.lambda, double(eig.minCoeff())),
          upper_bound_record("Hhat_inv_max <= Lambda", rates.Lambda, double(eig.maxCoeff()))};
}

/// ||H(y) - H(y')||_2 <= alpha L ||y - y'|| over the sampled pairs; the
/// record holds the pair with the smallest margin.
template <typename Scalar>
std::vector<BoundRecord> check_hessian_lipschitz(
    const PenalizedProblem<Scalar>& problem,
    std::span<const std::pair<StackedVector<Scalar>, StackedVector<Scalar>>> pairs, const AnalysisInputs& in) {
  require(!pairs.empty(), "check_hessian_lipschitz: need at least one pair");
  BoundRecord worst{"H_lipschitz <= alpha*L*|dy|", 0, 0, std::numeric_limits<double>::infinity(), true};
  for (const auto& [a, b] : pairs) {
    const Matrix<Scalar> diff = dense::hessian(problem, a) - dense::hessian(problem, b);
    const double measured = double(detail::symmetric_eigenvalues<Scalar>(diff).cwiseAbs().maxCoeff());
    const double bound = in.alpha * in.L * double((a.flat() - b.flat()).norm());
    auto record = upper_bound_record(worst.name, bound, measured);
    if (record.margin < worst.margin) worst = record;
  }
  return {worst};
}

struct StepsizeRule {
  double epsilon = 1;
  double zeta = 0;
  double gap = 0;  // F(y0) - F(y*)
};

/// eps = min{1, [3 m lambda^{5/2} / (L Lambda^3 gap^{1/2})]^{1/2}} with the
/// bracket read as +inf when L = 0 or gap = 0, and
/// zeta = (2 - eps) eps alpha m lambda - alpha eps^3 L Lambda^3 gap^{1/2} / (6 lambda^{3/2}).
inline StepsizeRule theoretical_stepsize(const AnalysisInputs& in, double gap) {
  require(gap >= 0.0, "theoretical_stepsize: F(y0) - F(y*) must be nonnegative");
  const auto r = in.rates();
  StepsizeRule out;
  out.gap = gap;
  const double denom = in.L * std::pow(r.Lambda, 3) * std::sqrt(gap);
  if (denom > 0.0) {
    out.epsilon = std::min(1.0, std::sqrt(3.0 * in.m * std::pow(r.lambda, 2.5) / denom));
  }
  const double eps = out.epsilon;
  out.zeta = (2.0 - eps) * eps * in.alpha * in.m * r.lambda -
             in.alpha * eps * eps * eps * in.L * std::pow(r.Lambda, 3) * std::sqrt(gap) / (6.0 * std::pow(r.lambda, 1.5));
  if (!(out.zeta > 0.0 && out.zeta < 1.0)) {
    throw NumericalError("theoretical_stepsize: zeta = " + std::to_string(out.zeta) + " outside (0, 1)");
  }
  return out;
}

template <typename Scalar>
StepsizeRule theoretical_stepsize(const PenalizedProblem<Scalar>& problem, const StackedVector<Scalar>& y0, int order) {
  const auto y_star = dense::penalized_optimum(problem);
  const double gap = std::max(0.0, double(problem.value(y0) - problem.value(y_star)));
  return theoretical_stepsize(analysis_inputs(problem, order), gap);
}

/// e = (1/n) sum_i ||x_i - x*||^2 / ||x*||^2.
template <typename Scalar>
Scalar relative_error(const StackedVector<Scalar>& y, const Vector<Scalar>& x_star) {
  const Scalar norm2 = x_star.squaredNorm();
  require(norm2 > Scalar(0), "relative_error: x* = 0 makes the normalization undefined");
  require(y.dim() == x_star.size(), "relative_error: dimension mismatch");
  Scalar sum(0);
  for (Index i = 0; i < y.agents(); ++i) sum += (y.block(i) - x_star).squaredNorm();
  return sum / (Scalar(y.agents()) * norm2);
}

struct SpectralReport {
  AnalysisInputs inputs;
  RateConstants<double> rates;
  double rho_k1 = 0;
  StepsizeRule stepsize;
  std::vector<BoundRecord> records;

  bool passed() const {
    for (const auto& r : records) {
      if (!r.pass) return false;
    }
    return true;
  }
};

/// Every bound at every sampled iterate, plus the Lipschitz check over
/// consecutive sample pairs.
template <typename Scalar>
SpectralReport spectral_report(const PenalizedProblem<Scalar>& problem, std::span<const StackedVector<Scalar>> samples,
                               int order) {
  require(!samples.empty(), "spectral_report: need at least one sample iterate");
  SpectralReport report;
  report.inputs = analysis_inputs(problem, order);
  report.rates = report.inputs.rates();
  report.rho_k1 = std::pow(report.rates.rho, order + 1);
  report.stepsize = theoretical_stepsize(problem, samples.front(), order);
  for (const auto& y : samples) {
    for (auto&& group : {check_hessian_bounds(problem, y, report.inputs), check_dbd_bound(problem, y, report.inputs),
                         check_error_matrix(problem, y, report.inputs),
                         check_hhat_inverse_bounds(problem, y, report.inputs)}) {
      report.records.insert(report.records.end(), group.begin(), group.end());
    }
  }
  if (samples.size() >= 2) {
    std::vector<std::pair<StackedVector<Scalar>, StackedVector<Scalar>>> pairs;
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) pairs.emplace_back(samples[k], samples[k + 1]);
    const auto lip = check_hessian_lipschitz<Scalar>(problem, pairs, report.inputs);
    report.records.insert(report.records.end(), lip.begin(), lip.end());
  }
  return report;
}

/// `# key = value` header block followed by `bound,theoretical,measured,margin,pass`.
void write_report_csv(std::ostream& out, const SpectralReport& report);
std::string report_summary(const SpectralReport& report);

}  // namespace netnewton
