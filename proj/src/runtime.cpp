#include "netnewton/runtime.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "netnewton/analysis.hpp"

namespace netnewton {

void SolverConfig::validate() const {
  require(epsilon > 0.0 && epsilon <= 1.0, "solver config: epsilon must lie in (0, 1]");
  require(alpha > 0.0, "solver config: alpha must be positive");
  require(order >= 0, "solver config: K must be nonnegative");
  require(max_iters >= 0, "solver config: max_iters must be nonnegative");
  if (adaptive) {
    require(adaptive->tol >= 0.0, "solver config: tol must be nonnegative");
    require(adaptive->eta > 1.0, "solver config: eta must be > 1 (alpha is divided by eta)");
    require(adaptive->min_alpha > 0.0, "solver config: min_alpha must be positive");
  }
}

std::string SolverConfig::label() const {
  const std::string prefix = adaptive ? "A" : "";
  if (method == Method::Dgd) return prefix + "DGD";
  return fmt::format("{}NN-{}", prefix, order);
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::MaxIterations: return "max iterations";
    case Termination::TargetReached: return "target reached";
    case Termination::AlphaFloor: return "alpha floor";
    case Termination::Diverged: return "diverged";
  }
  return "unknown";
}

std::optional<long> RunTrace::first_error_below(double target) const {
  for (const auto& r : records) {
    if (r.error < target) return r.t;
  }
  return std::nullopt;
}

std::optional<long> RunTrace::first_value_at_most(double target) const {
  for (const auto& r : records) {
    if (r.value <= target) return r.t;
  }
  return std::nullopt;
}

std::vector<long> RunTrace::alpha_change_iterations() const {
  std::vector<long> out;
  for (const auto& r : records) {
    if (r.alpha_changed) out.push_back(r.t);
  }
  return out;
}

const Eigen::VectorXd& NodeState::received(std::size_t slot) const {
  if (log != nullptr) log->reads.push_back({*round, id, neighbors[slot]});
  return inbox[slot];
}

Simulator::Simulator(const Problem& problem, const Stacked& y0, bool audit) : audit_(audit) {
  problem.check_shape(y0);
  const Index n = problem.agents();
  const Index p = problem.dim();
  const auto& topology = problem.network().topology;
  nodes_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    node.id = i;
    node.neighbors.assign(topology.neighbors(i).begin(), topology.neighbors(i).end());
    node.self_weight = problem.weight(i, i);
    for (Index j : node.neighbors) node.neighbor_weights.push_back(problem.weight(i, j));
    node.objective = &problem.objective(i);
    node.alpha = problem.alpha();
    node.x = y0.block(i);
    node.local_grad = Eigen::VectorXd::Zero(p);
    node.g = Eigen::VectorXd::Zero(p);
    node.d = Eigen::VectorXd::Zero(p);
    node.outgoing = Eigen::VectorXd::Zero(p);
    node.inbox.assign(node.neighbors.size(), Eigen::VectorXd::Zero(p));
    node.d_block = Eigen::MatrixXd::Zero(p, p);
    if (audit_) {
      node.log = &log_;
      node.round = &round_;
    }
  }
}

void Simulator::set_alpha(double alpha) {
  require(alpha > 0.0, "simulator: alpha must be positive");
  for (auto& node : nodes_) node.alpha = alpha;
}

namespace {

/// Delivers every node's `outgoing` vector to its neighbors' inboxes.
void deliver(std::vector<NodeState>& nodes, long round, AccessLog* log) {
  for (auto& node : nodes) {
    for (std::size_t s = 0; s < node.neighbors.size(); ++s) {
      const auto& sender = nodes[static_cast<std::size_t>(node.neighbors[s])];
      node.inbox[s] = sender.outgoing;
      if (log != nullptr) log->messages.push_back({round, sender.id, node.id});
    }
  }
}

void local_gradient(NodeState& node) {
  node.objective->gradient_into(node.x, node.local_grad);
  node.g.noalias() = (1.0 - node.self_weight) * node.x;
  for (std::size_t s = 0; s < node.neighbors.size(); ++s) node.g -= node.neighbor_weights[s] * node.received(s);
  node.g += node.alpha * node.local_grad;
}

void local_dgd_update(NodeState& node) {
  // consensus form, deliberately not x - g
  Eigen::VectorXd mixed = node.self_weight * node.x;
  for (std::size_t s = 0; s < node.neighbors.size(); ++s) mixed += node.neighbor_weights[s] * node.received(s);
  node.x = mixed - node.alpha * node.local_grad;
}

void local_factor(NodeState& node) {
  node.objective->hessian_into(node.x, node.d_block);
  node.d_block *= node.alpha;
  node.d_block.diagonal().array() += 2.0 * (1.0 - node.self_weight);
  node.d_factor.compute(node.d_block);
  if (node.d_factor.info() != Eigen::Success) {
    throw NumericalError(fmt::format("node {}: D block factorization failed", node.id));
  }
}

void local_initial_direction(NodeState& node) { node.d = -node.d_factor.solve(node.g); }

void local_direction_update(NodeState& node) {
  // d_i <- D_ii^{-1} ((1 - w_ii) d_i + sum_j w_ij d_j - g_i)
  Eigen::VectorXd rhs = (1.0 - node.self_weight) * node.d - node.g;
  for (std::size_t s = 0; s < node.neighbors.size(); ++s) rhs += node.neighbor_weights[s] * node.received(s);
  node.d = node.d_factor.solve(rhs);
}

}  // namespace

void Simulator::exchange_iterates() {
  for (auto& node : nodes_) node.outgoing = node.x;
  deliver(nodes_, round_, audit_ ? &log_ : nullptr);
  ++round_;
}

void Simulator::exchange_directions() {
  for (auto& node : nodes_) node.outgoing = node.d;
  deliver(nodes_, round_, audit_ ? &log_ : nullptr);
  ++round_;
}

void Simulator::compute_gradients() {
  for (auto& node : nodes_) local_gradient(node);
}

void Simulator::dgd_update() {
  for (auto& node : nodes_) local_dgd_update(node);
  check_finite();
}

void Simulator::nn_update(int order, double epsilon) {
  require(order >= 0, "nn_update: K must be nonnegative");
  for (auto& node : nodes_) {
    local_factor(node);
    local_initial_direction(node);
  }
  for (int k = 0; k < order; ++k) {
    exchange_directions();
    for (auto& node : nodes_) local_direction_update(node);
  }
  for (auto& node : nodes_) node.x += epsilon * node.d;
  check_finite();
}

void Simulator::step_dgd() {
  exchange_iterates();
  compute_gradients();
  dgd_update();
}

void Simulator::step_nn(int order, double epsilon) {
  exchange_iterates();
  compute_gradients();
  nn_update(order, epsilon);
}

double Simulator::max_gradient_norm() const {
  double out = 0.0;
  for (const auto& node : nodes_) out = std::max(out, node.g.norm());
  return out;
}

Stacked Simulator::iterate() const {
  Stacked y(static_cast<Index>(nodes_.size()), nodes_.front().x.size());
  for (const auto& node : nodes_) y.block(node.id) = node.x;
  return y;
}

Stacked Simulator::gradient() const {
  Stacked y(static_cast<Index>(nodes_.size()), nodes_.front().x.size());
  for (const auto& node : nodes_) y.block(node.id) = node.g;
  return y;
}

Stacked Simulator::direction() const {
  Stacked y(static_cast<Index>(nodes_.size()), nodes_.front().x.size());
  for (const auto& node : nodes_) y.block(node.id) = node.d;
  return y;
}

void Simulator::check_finite() const {
  for (const auto& node : nodes_) {
    if (!node.x.allFinite()) throw NumericalError(fmt::format("node {}: non-finite iterate", node.id));
  }
}

RunTrace run(const Problem& problem, const SolverConfig& config, const std::optional<Stacked>& x_init,
             const std::optional<Eigen::VectorXd>& x_star) {
  config.validate();
  require(std::abs(problem.alpha() - config.alpha) <= 1e-15 * config.alpha,
          "run: problem alpha and config alpha differ");
  const Stacked y0 = x_init ? *x_init : problem.zeros();
  Simulator sim(problem, y0);
  Problem current = problem;
  double epsilon = config.epsilon;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  RunTrace trace;
  trace.label = config.label();
  for (long t = 0;; ++t) {
    const Stacked y = sim.iterate();
    TraceRecord rec;
    rec.t = t;
    rec.comm = sim.rounds();
    rec.alpha = current.alpha();
    rec.error = x_star ? relative_error(y, *x_star) : nan;
    rec.value = config.record_objective ? current.value(y) : nan;
    rec.grad_inf = nan;

    auto finish = [&](Termination reason, std::string diagnostic = {}) {
      if (config.record_objective && std::isnan(rec.grad_inf)) {
        double worst = 0.0;
        for (Index i = 0; i < current.agents(); ++i) worst = std::max(worst, current.local_gradient(y, i).norm());
        rec.grad_inf = worst;
      }
      trace.records.push_back(rec);
      trace.reason = reason;
      trace.diagnostic = std::move(diagnostic);
      trace.final_iterate = y;
    };

    const bool finite = y.flat().allFinite() && !std::isinf(rec.error) && !std::isinf(rec.value);
    if (!finite || (x_star && !(rec.error <= kDivergenceThreshold))) {
      finish(Termination::Diverged, fmt::format("iteration {}: e_t = {:g}, F = {:g}", t, rec.error, rec.value));
      return trace;
    }
    if ((config.target_error && rec.error < *config.target_error) ||
        (config.target_value && rec.value <= *config.target_value)) {
      finish(Termination::TargetReached);
      return trace;
    }
    if (t >= config.max_iters) {
      finish(Termination::MaxIterations);
      return trace;
    }

    try {
      sim.exchange_iterates();
      sim.compute_gradients();
      rec.grad_inf = sim.max_gradient_norm();
      if (config.adaptive && rec.grad_inf <= config.adaptive->tol) {
        const double next = current.alpha() / config.adaptive->eta;
        if (next < config.adaptive->min_alpha) {
          finish(Termination::AlphaFloor, fmt::format("alpha {:g} would drop below floor {:g}", next,
                                                      config.adaptive->min_alpha));
          return trace;
        }
        current = current.with_alpha(next);
        sim.set_alpha(next);
        sim.compute_gradients();
        rec.alpha = next;
        rec.alpha_changed = true;
        if (config.adaptive->recompute_epsilon && config.method == Method::NetworkNewton) {
          epsilon = theoretical_stepsize(current, y, config.order).epsilon;
        }
      }
      trace.records.push_back(rec);
      if (config.method == Method::Dgd) {
        sim.dgd_update();
      } else {
        sim.nn_update(config.order, epsilon);
      }
    } catch (const NumericalError& error) {
      if (!trace.records.empty() && trace.records.back().t == t) trace.records.pop_back();
      finish(Termination::Diverged, error.what());
      trace.final_iterate = sim.iterate();
      return trace;
    }
  }
}

RunTrace run_adaptive(const Problem& problem, const SolverConfig& config, const std::optional<Stacked>& x_init,
                      const std::optional<Eigen::VectorXd>& x_star) {
  require(config.adaptive.has_value(), "run_adaptive: config has no adaptive schedule");
  return run(problem, config, x_init, x_star);
}

}  // namespace netnewton
