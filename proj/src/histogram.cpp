#include "netnewton/histogram.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "netnewton/analysis.hpp"
#include "netnewton/runtime.hpp"

namespace netnewton {

void HistogramConfig::validate() const {
  require(trials >= 1, "histogram: trials must be positive");
  require(!degrees.empty(), "histogram: need at least one degree");
  require(include_dgd || !orders.empty(), "histogram: no methods selected");
  require(target > 0.0, "histogram: target must be positive");
  require(max_iters >= 1, "histogram: max_iters must be positive");
  require(alpha > 0.0, "histogram: alpha must be positive");
  for (Index d : degrees) require(d >= 2 && d % 2 == 0 && d < agents, "histogram: degrees must be even, >= 2 and < n");
  for (int k : orders) require(k >= 0, "histogram: K must be nonnegative");
}

std::uint64_t trial_seed(std::uint64_t master, long trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(static_cast<std::uint64_t>(trial) >> 32)};
  std::mt19937_64 rng(seq);
  return rng();
}

namespace {

std::vector<SolverConfig> method_configs(const HistogramConfig& config) {
  std::vector<SolverConfig> out;
  SolverConfig base;
  base.alpha = config.alpha;
  base.max_iters = config.max_iters;
  base.target_error = config.target;
  base.record_objective = false;
  if (config.include_dgd) {
    base.method = Method::Dgd;
    out.push_back(base);
  }
  base.method = Method::NetworkNewton;
  for (int k : config.orders) {
    base.order = k;
    out.push_back(base);
  }
  return out;
}

std::vector<HistogramEntry> run_trial(const HistogramConfig& config, const std::vector<SolverConfig>& methods,
                                      long trial) {
  std::mt19937_64 rng(trial_seed(config.seed, trial));
  std::uniform_int_distribution<std::size_t> pick(0, config.degrees.size() - 1);
  const Index degree = config.degrees[pick(rng)];
  const std::uint64_t instance_seed = rng();
  const auto instance = make_quadratic(config.agents, config.dim, config.xi, instance_seed);
  const Problem problem(make_cycle_network(config.agents, degree), build_objectives<double>(instance), config.alpha);
  const Eigen::VectorXd x_star = quadratic_optimum(instance);

  std::vector<HistogramEntry> out;
  for (const auto& method : methods) {
    const RunTrace trace = run(problem, method, std::nullopt, x_star);
    HistogramEntry entry{trial, method.label(), degree, 0, false};
    if (trace.reason == Termination::TargetReached) {
      entry.exchanges = trace.last().comm;
    } else {
      entry.censored = true;
      entry.exchanges = config.max_iters * method.exchanges_per_iteration();
    }
    out.push_back(entry);
  }
  return out;
}

}  // namespace

HistogramResult histogram_experiment(const HistogramConfig& config) {
  config.validate();
  const auto methods = method_configs(config);
  std::vector<std::vector<HistogramEntry>> per_trial(static_cast<std::size_t>(config.trials));

  unsigned workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.workers;
  workers = static_cast<unsigned>(std::min<long>(workers, config.trials));
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (long t = next++; t < config.trials; t = next++) {
      try {
        per_trial[static_cast<std::size_t>(t)] = run_trial(config, methods, t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.trials;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  HistogramResult result;
  for (auto& entries : per_trial) result.entries.insert(result.entries.end(), entries.begin(), entries.end());
  std::vector<std::string> labels;
  for (const auto& m : methods) labels.push_back(m.label());
  result.summaries = summarize(result.entries, labels);
  return result;
}

std::vector<MethodSummary> summarize(const std::vector<HistogramEntry>& entries, const std::vector<std::string>& methods,
                                     int bins) {
  require(bins >= 1, "summarize: need at least one bin");
  std::vector<MethodSummary> out;
  for (const auto& label : methods) {
    MethodSummary s;
    s.method = label;
    std::vector<long> done;
    for (const auto& e : entries) {
      if (e.method != label) continue;
      if (e.censored) {
        ++s.censored;
      } else {
        done.push_back(e.exchanges);
      }
    }
    s.completed = static_cast<long>(done.size());
    s.mean_exchanges = std::numeric_limits<double>::quiet_NaN();
    if (!done.empty()) {
      double sum = 0;
      for (long v : done) sum += double(v);
      s.mean_exchanges = sum / double(done.size());
      const auto [lo_it, hi_it] = std::minmax_element(done.begin(), done.end());
      const double lo = double(*lo_it);
      const double hi = double(*hi_it) > lo ? double(*hi_it) : lo + 1.0;
      const double width = (hi - lo) / bins;
      for (int b = 0; b <= bins; ++b) s.bin_edges.push_back(lo + b * width);
      s.bin_counts.assign(static_cast<std::size_t>(bins), 0);
      for (long v : done) {
        auto b = static_cast<int>((double(v) - lo) / width);
        ++s.bin_counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))];
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace netnewton
