#pragma once

#include <optional>
#include <string>
#include <vector>

#include "netnewton/penalty.hpp"

namespace netnewton {

using Problem = PenalizedProblem<double>;
using Stacked = StackedVector<double>;

enum class Method { Dgd, NetworkNewton };

/// Divide alpha by eta each time every ||g_i|| <= tol.
struct AdaptiveSchedule {
  double tol = 1e-3;
  double eta = 10.0;
  double min_alpha = 1e-8;
  /// Re-evaluate the theoretical step size after every alpha change (dense, small n only).
  bool recompute_epsilon = false;
};

struct SolverConfig {
  Method method = Method::NetworkNewton;
  int order = 0;  // K
  double epsilon = 1.0;
  double alpha = 1e-2;
  std::optional<AdaptiveSchedule> adaptive;
  long max_iters = 1000;
  std::optional<double> target_error;  // stop at the first t with e_t < target
  std::optional<double> target_value;  // stop at the first t with F(y_t) <= target
  /// Evaluate F(y_t) and max ||g_i|| at every record (observer cost only).
  bool record_objective = true;

  void validate() const;
  std::string label() const;
  long exchanges_per_iteration() const { return method == Method::Dgd ? 1 : order + 1; }
};

/// State y_t after t iterations. `alpha` is the penalty used for the step
/// leaving y_t (after any adaptive change, flagged by `alpha_changed`).
struct TraceRecord {
  long t = 0;
  double error = 0;     // e_t, NaN without a reference optimum
  double value = 0;     // F(y_t) under the alpha in effect on arrival
  double grad_inf = 0;  // max_i ||g_i,t||
  double alpha = 0;
  long comm = 0;  // cumulative exchange rounds
  bool alpha_changed = false;
};

enum class Termination { MaxIterations, TargetReached, AlphaFloor, Diverged };

std::string to_string(Termination reason);

struct RunTrace {
  std::string label;
  std::vector<TraceRecord> records;
  Stacked final_iterate;
  Termination reason = Termination::MaxIterations;
  std::string diagnostic;

  std::optional<long> first_error_below(double target) const;
  std::optional<long> first_value_at_most(double target) const;
  std::vector<long> alpha_change_iterations() const;
  const TraceRecord& last() const { return records.back(); }
};

// ---------------------------------------------------------------------------
// Synchronous simulator. Each node owns its iterate, gradient, direction and
// an inbox with one slot per neighbor; node computations only see that state.

struct InboxRead {
  long round;
  Index node;
  Index from;
};

struct Message {
  long round;
  Index from;
  Index to;
};

/// Message and inbox-read log kept in audit mode.
struct AccessLog {
  std::vector<Message> messages;
  std::vector<InboxRead> reads;
};

struct NodeState {
  Index id = 0;
  std::vector<Index> neighbors;
  double self_weight = 0;              // w_ii
  std::vector<double> neighbor_weights;  // w_ij per inbox slot
  const LocalObjective<double>* objective = nullptr;
  double alpha = 0;

  Eigen::VectorXd x;
  Eigen::VectorXd local_grad;  // grad f_i(x_i)
  Eigen::VectorXd g;           // g_i
  Eigen::VectorXd d;           // current direction component
  Eigen::VectorXd outgoing;    // vector published in the current round
  std::vector<Eigen::VectorXd> inbox;
  Eigen::MatrixXd d_block;
  Eigen::LLT<Eigen::MatrixXd> d_factor;

  AccessLog* log = nullptr;
  const long* round = nullptr;

  const Eigen::VectorXd& received(std::size_t slot) const;
};

class Simulator {
 public:
  Simulator(const Problem& problem, const Stacked& y0, bool audit = false);

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Broadcast of a new penalty; each node rebuilds its own alpha.
  void set_alpha(double alpha);

  /// One round: every node sends x_i to its neighbors.
  void exchange_iterates();
  /// Local: grad f_i(x_i) and g_i from the inbox.
  void compute_gradients();
  /// Local: x_i <- w_ii x_i + sum_j w_ij x_j - alpha grad f_i(x_i).
  void dgd_update();
  /// d^(0), K direction-exchange rounds, then x_i <- x_i + eps d^(K)_i.
  void nn_update(int order, double epsilon);

  void step_dgd();
  void step_nn(int order, double epsilon);

  double max_gradient_norm() const;
  Stacked iterate() const;
  Stacked gradient() const;
  Stacked direction() const;
  long rounds() const { return round_; }
  const std::vector<NodeState>& nodes() const { return nodes_; }
  const AccessLog& log() const { return log_; }

 private:
  void exchange_directions();
  void check_finite() const;

  std::vector<NodeState> nodes_;
  long round_ = 0;
  bool audit_ = false;
  AccessLog log_;
};

/// Runs config.method from x_init (zeros when empty). e_t is measured
/// against x_star when given. Divergence (e_t > 1e12 or non-finite values)
/// ends the run with Termination::Diverged and a diagnostic.
RunTrace run(const Problem& problem, const SolverConfig& config, const std::optional<Stacked>& x_init = std::nullopt,
             const std::optional<Eigen::VectorXd>& x_star = std::nullopt);

/// As run(), requiring config.adaptive.
RunTrace run_adaptive(const Problem& problem, const SolverConfig& config,
                      const std::optional<Stacked>& x_init = std::nullopt,
                      const std::optional<Eigen::VectorXd>& x_star = std::nullopt);

inline constexpr double kDivergenceThreshold = 1e12;

}  // namespace netnewton
