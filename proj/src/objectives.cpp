#include "netnewton/objectives.hpp"

#include <cmath>
#include <random>

namespace netnewton {

QuadraticInstance make_quadratic(Index agents, Index dim, int xi, std::uint64_t seed) {
  require(agents >= 1, "make_quadratic: need at least one agent");
  require(dim >= 2 && dim % 2 == 0, "make_quadratic: dimension p must be even and positive");
  require(xi >= 0, "make_quadratic: xi must be a nonnegative integer");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> exponent(0, xi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  QuadraticInstance out;
  out.agents = agents;
  out.dim = dim;
  out.xi = xi;
  out.seed = seed;
  out.diagonals.reserve(static_cast<std::size_t>(agents));
  out.linear_terms.reserve(static_cast<std::size_t>(agents));
  const Index half = dim / 2;
  for (Index i = 0; i < agents; ++i) {
    Eigen::VectorXd a(dim);
    for (Index k = 0; k < half; ++k) a(k) = std::pow(10.0, -exponent(rng));
    for (Index k = half; k < dim; ++k) a(k) = std::pow(10.0, exponent(rng));
    Eigen::VectorXd b(dim);
    for (Index k = 0; k < dim; ++k) b(k) = unit(rng);
    out.diagonals.push_back(std::move(a));
    out.linear_terms.push_back(std::move(b));
  }
  return out;
}

Eigen::VectorXd quadratic_optimum(const QuadraticInstance& instance) {
  require(!instance.diagonals.empty(), "quadratic_optimum: empty instance");
  Eigen::VectorXd a_sum = Eigen::VectorXd::Zero(instance.dim);
  Eigen::VectorXd b_sum = Eigen::VectorXd::Zero(instance.dim);
  for (std::size_t i = 0; i < instance.diagonals.size(); ++i) {
    a_sum += instance.diagonals[i];
    b_sum += instance.linear_terms[i];
  }
  return -b_sum.cwiseQuotient(a_sum);
}

LogisticInstance make_logistic(const LogisticParams& params) {
  require(params.agents >= 1 && params.dim >= 1, "make_logistic: need n >= 1 and p >= 1");
  require(params.samples_per_agent >= 1, "make_logistic: need q_i >= 1");
  require(params.lambda > 0.0, "make_logistic: lambda must be positive");
  require(params.sigma_plus > 0.0 && params.sigma_minus > 0.0, "make_logistic: standard deviations must be positive");

  std::mt19937_64 rng(params.seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> positive(params.mu, params.sigma_plus);
  std::normal_distribution<double> negative(-params.mu, params.sigma_minus);

  LogisticInstance out;
  out.params = params;
  for (Index i = 0; i < params.agents; ++i) {
    Eigen::MatrixXd u(params.samples_per_agent, params.dim);
    Eigen::VectorXd v(params.samples_per_agent);
    for (Index l = 0; l < params.samples_per_agent; ++l) {
      const bool plus = coin(rng);
      v(l) = plus ? 1.0 : -1.0;
      for (Index k = 0; k < params.dim; ++k) u(l, k) = plus ? positive(rng) : negative(rng);
    }
    out.features.push_back(std::move(u));
    out.labels.push_back(std::move(v));
  }
  return out;
}

Eigen::VectorXd logistic_optimum_oracle(const LogisticInstance& instance) {
  const auto objectives = build_objectives<double>(instance);
  return centralized_optimum<double>(objectives);
}

}  // namespace netnewton
