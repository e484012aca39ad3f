#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "netnewton/key_value.hpp"

namespace nnk {

/// Everything one subcommand needs. Resolved as built-in defaults for the
/// subcommand, then config-file values, then command-line flags.
struct ExperimentSpec {
  std::string subcommand = "run";
  long n = 100;
  long p = 4;
  int xi = 2;
  std::uint64_t seed = 1;
  long d = 4;
  // logistic
  long q = 50;
  double mu = 3.0;
  double sigma_plus = 1.0;
  double sigma_minus = 1.0;
  double lambda = 1e-4;
  // solver
  std::vector<std::string> methods{"dgd", "nn"};
  std::vector<int> orders{0, 1, 2};
  double eps = 1.0;
  double alpha = 1e-2;
  double tol = 1e-3;
  double eta = 10.0;
  double min_alpha = 1e-8;
  std::vector<double> alpha0{1e-1, 1e-2};
  long max_iters = 2000;
  double target = 1.9e-1;
  // histogram
  long trials = 1000;
  unsigned workers = 0;
  // analyze
  bool break_weights = false;
  std::string out = "out";

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

ExperimentSpec default_spec(const std::string& subcommand);

netnewton::KeyValueFile to_key_value(const ExperimentSpec& spec);
/// Overlays every key present in `file`; unknown keys are rejected.
void apply(ExperimentSpec& spec, const netnewton::KeyValueFile& file);
void validate(const ExperimentSpec& spec);

/// Parses argv, runs the subcommand and returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nnk
