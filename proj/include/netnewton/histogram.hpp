#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netnewton/types.hpp"

namespace netnewton {

/// Random-graph trials on quadratic instances: each trial draws a degree d,
/// builds the d-regular cycle, draws an instance and runs every method until
/// e_t < target.
struct HistogramConfig {
  long trials = 1000;
  Index agents = 100;
  Index dim = 4;
  int xi = 2;
  double alpha = 1e-2;
  std::vector<Index> degrees{2, 4, 6, 8, 10};
  bool include_dgd = true;
  std::vector<int> orders{0, 1, 2};
  double target = 1e-2;
  long max_iters = 20000;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency

  void validate() const;
};

struct HistogramEntry {
  long trial = 0;
  std::string method;
  Index degree = 0;
  long exchanges = 0;  // max_iters * exchanges-per-iteration when censored
  bool censored = false;
};

struct MethodSummary {
  std::string method;
  long completed = 0;
  long censored = 0;
  double mean_exchanges = 0;  // over completed trials, NaN if none
  std::vector<double> bin_edges;
  std::vector<long> bin_counts;
};

struct HistogramResult {
  std::vector<HistogramEntry> entries;  // ordered by trial, then method
  std::vector<MethodSummary> summaries;
};

/// Seed of trial `trial`, independent of worker count and scheduling.
std::uint64_t trial_seed(std::uint64_t master, long trial);

HistogramResult histogram_experiment(const HistogramConfig& config);

/// Equal-width bins over the completed exchange counts of each method.
std::vector<MethodSummary> summarize(const std::vector<HistogramEntry>& entries, const std::vector<std::string>& methods,
                                     int bins = 20);

}  // namespace netnewton
