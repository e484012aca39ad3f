#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "netnewton/analysis.hpp"
#include "netnewton/histogram.hpp"
#include "netnewton/instance_spec.hpp"
#include "netnewton/runtime.hpp"
#include "netnewton/trace_io.hpp"

namespace nnk {

using namespace netnewton;

namespace {

const std::vector<std::string> kSubcommands{"run", "adaptive", "histogram", "logistic", "analyze"};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw std::invalid_argument("empty element in list '" + text + "'");
    out.push_back(item.substr(first, last - first + 1));
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ",";
    out += format(items[i]);
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& text) {
  KeyValueFile kv;
  kv.set(key, text);
  return *kv.get_int(key);
}

double parse_double(const std::string& key, const std::string& text) {
  KeyValueFile kv;
  kv.set(key, text);
  return *kv.get_double(key);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument(fmt::format("key '{}': expected true or false, got '{}'", key, text));
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

ExperimentSpec default_spec(const std::string& subcommand) {
  require(std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) != kSubcommands.end(),
          "unknown subcommand '" + subcommand + "'");
  ExperimentSpec spec;
  spec.subcommand = subcommand;
  if (subcommand == "adaptive") {
    spec.target = 1e-1;
  } else if (subcommand == "histogram") {
    spec.max_iters = 20000;
    spec.target = 1e-2;
  } else if (subcommand == "logistic") {
    spec.p = 10;
    spec.max_iters = 500;
  } else if (subcommand == "analyze") {
    spec.n = 10;
    spec.max_iters = 10;
  }
  return spec;
}

KeyValueFile to_key_value(const ExperimentSpec& spec) {
  KeyValueFile kv;
  kv.set("subcommand", spec.subcommand);
  kv.set("n", std::to_string(spec.n));
  kv.set("p", std::to_string(spec.p));
  kv.set("xi", std::to_string(spec.xi));
  kv.set("seed", std::to_string(spec.seed));
  kv.set("d", std::to_string(spec.d));
  kv.set("q", std::to_string(spec.q));
  kv.set("mu", format_exact(spec.mu));
  kv.set("sigma_plus", format_exact(spec.sigma_plus));
  kv.set("sigma_minus", format_exact(spec.sigma_minus));
  kv.set("lambda", format_exact(spec.lambda));
  kv.set("methods", join(spec.methods, [](const std::string& s) { return s; }));
  kv.set("K", join(spec.orders, [](int k) { return std::to_string(k); }));
  kv.set("eps", format_exact(spec.eps));
  kv.set("alpha", format_exact(spec.alpha));
  kv.set("tol", format_exact(spec.tol));
  kv.set("eta", format_exact(spec.eta));
  kv.set("min_alpha", format_exact(spec.min_alpha));
  kv.set("alpha0", join(spec.alpha0, [](double a) { return format_exact(a); }));
  kv.set("max_iters", std::to_string(spec.max_iters));
  kv.set("target", format_exact(spec.target));
  kv.set("trials", std::to_string(spec.trials));
  kv.set("workers", std::to_string(spec.workers));
  kv.set("break_weights", spec.break_weights ? "true" : "false");
  kv.set("out", spec.out);
  return kv;
}

void apply(ExperimentSpec& spec, const KeyValueFile& file) {
  for (const auto& [key, value] : file.entries()) {
    if (key == "subcommand") {
      require(value == spec.subcommand,
              fmt::format("config is for subcommand '{}', not '{}'", value, spec.subcommand));
    } else if (key == "n") {
      spec.n = static_cast<long>(parse_int(key, value));
    } else if (key == "p") {
      spec.p = static_cast<long>(parse_int(key, value));
    } else if (key == "xi") {
      spec.xi = static_cast<int>(parse_int(key, value));
    } else if (key == "seed") {
      const long long s = parse_int(key, value);
      require(s >= 0, "key 'seed': must be nonnegative");
      spec.seed = static_cast<std::uint64_t>(s);
    } else if (key == "d") {
      spec.d = static_cast<long>(parse_int(key, value));
    } else if (key == "q") {
      spec.q = static_cast<long>(parse_int(key, value));
    } else if (key == "mu") {
      spec.mu = parse_double(key, value);
    } else if (key == "sigma_plus") {
      spec.sigma_plus = parse_double(key, value);
    } else if (key == "sigma_minus") {
      spec.sigma_minus = parse_double(key, value);
    } else if (key == "lambda") {
      spec.lambda = parse_double(key, value);
    } else if (key == "methods") {
      spec.methods.clear();
      for (const auto& m : split_list(value)) spec.methods.push_back(lowercase(m));
    } else if (key == "K") {
      spec.orders.clear();
      for (const auto& k : split_list(value)) spec.orders.push_back(static_cast<int>(parse_int(key, k)));
    } else if (key == "eps") {
      spec.eps = parse_double(key, value);
    } else if (key == "alpha") {
      spec.alpha = parse_double(key, value);
    } else if (key == "tol") {
      spec.tol = parse_double(key, value);
    } else if (key == "eta") {
      spec.eta = parse_double(key, value);
    } else if (key == "min_alpha") {
      spec.min_alpha = parse_double(key, value);
    } else if (key == "alpha0") {
      spec.alpha0.clear();
      for (const auto& a : split_list(value)) spec.alpha0.push_back(parse_double(key, a));
    } else if (key == "max_iters") {
      spec.max_iters = static_cast<long>(parse_int(key, value));
    } else if (key == "target") {
      spec.target = parse_double(key, value);
    } else if (key == "trials") {
      spec.trials = static_cast<long>(parse_int(key, value));
    } else if (key == "workers") {
      const long long w = parse_int(key, value);
      require(w >= 0, "key 'workers': must be nonnegative");
      spec.workers = static_cast<unsigned>(w);
    } else if (key == "break_weights") {
      spec.break_weights = parse_bool(key, value);
    } else if (key == "out") {
      spec.out = value;
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
}

void validate(const ExperimentSpec& spec) {
  require(spec.n >= 3, "n must be at least 3");
  require(spec.p >= 1, "p must be positive");
  require(spec.xi >= 0, "xi must be nonnegative");
  require(spec.q >= 1, "q must be positive");
  require(!spec.methods.empty(), "no methods selected");
  for (const auto& m : spec.methods) require(m == "dgd" || m == "nn", "unknown method '" + m + "' (use dgd, nn)");
  for (int k : spec.orders) require(k >= 0, "K must be nonnegative");
  require(spec.eps > 0.0 && spec.eps <= 1.0, "eps must lie in (0, 1]");
  require(spec.alpha > 0.0, "alpha must be positive");
  require(spec.tol >= 0.0, "tol must be nonnegative");
  require(spec.eta > 1.0, "eta must be greater than 1");
  require(spec.min_alpha > 0.0, "min_alpha must be positive");
  for (double a : spec.alpha0) require(a > 0.0, "alpha0 values must be positive");
  require(spec.max_iters >= 1, "max_iters must be positive");
  require(spec.target > 0.0, "target must be positive");
  require(spec.trials >= 1, "trials must be positive");
  require(!spec.out.empty(), "out must not be empty");
}

namespace {

bool wants(const ExperimentSpec& spec, const std::string& method) {
  return std::find(spec.methods.begin(), spec.methods.end(), method) != spec.methods.end();
}

std::vector<SolverConfig> solver_configs(const ExperimentSpec& spec, double alpha) {
  std::vector<SolverConfig> out;
  SolverConfig base;
  base.alpha = alpha;
  base.epsilon = spec.eps;
  base.max_iters = spec.max_iters;
  if (wants(spec, "dgd")) {
    base.method = Method::Dgd;
    out.push_back(base);
  }
  if (wants(spec, "nn")) {
    require(!spec.orders.empty(), "method nn needs at least one K");
    base.method = Method::NetworkNewton;
    for (int k : spec.orders) {
      base.order = k;
      out.push_back(base);
    }
  }
  return out;
}

std::filesystem::path prepare_out(const ExperimentSpec& spec) {
  const std::filesystem::path dir(spec.out);
  std::filesystem::create_directories(dir);
  std::ofstream cfg(dir / "config.txt");
  if (!cfg) throw std::runtime_error("cannot write " + (dir / "config.txt").string());
  to_key_value(spec).write(cfg);
  return dir;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer writer) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  writer(file);
}

std::string iterations_or_dash(const std::optional<long>& t) { return t ? std::to_string(*t) : std::string("-"); }

QuadraticInstance quadratic_from(const ExperimentSpec& spec) {
  return make_quadratic(spec.n, spec.p, spec.xi, spec.seed);
}

int cmd_run(const ExperimentSpec& spec, std::ostream& out) {
  const auto dir = prepare_out(spec);
  const auto instance = quadratic_from(spec);
  const Problem problem(make_cycle_network(spec.n, spec.d), build_objectives<double>(instance), spec.alpha);
  const Eigen::VectorXd x_star = quadratic_optimum(instance);

  bool diverged = false;
  out << fmt::format("{:<8}{:>12}{:>12}{:>16}  {}\n", "method", fmt::format("t(e<{:g})", spec.target), "exchanges",
                     "final e_t", "status");
  for (const auto& config : solver_configs(spec, spec.alpha)) {
    const RunTrace trace = run(problem, config, std::nullopt, x_star);
    write_file(dir / (lowercase(trace.label) + ".csv"), [&](std::ostream& f) { write_trace_csv(f, trace); });
    const auto hit = trace.first_error_below(spec.target);
    const std::string comm = hit ? std::to_string(*hit * config.exchanges_per_iteration()) : "-";
    out << fmt::format("{:<8}{:>12}{:>12}{:>16.6e}  {}\n", trace.label, iterations_or_dash(hit), comm,
                       trace.last().error, to_string(trace.reason));
    if (trace.reason == Termination::Diverged) {
      diverged = true;
      out << "  " << trace.diagnostic << "\n";
    }
  }
  return diverged ? kExitNumerical : kExitOk;
}

int cmd_adaptive(const ExperimentSpec& spec, std::ostream& out) {
  const auto dir = prepare_out(spec);
  const auto instance = quadratic_from(spec);
  const auto network = make_cycle_network(spec.n, spec.d);
  const auto objectives = build_objectives<double>(instance);
  const Eigen::VectorXd x_star = quadratic_optimum(instance);

  bool diverged = false;
  out << fmt::format("{:<8}{:>10}{:>12}{:>10}{:>14}{:>16}  {}\n", "method", "alpha0",
                     fmt::format("t(e<{:g})", spec.target), "changes", "final alpha", "final e_t", "status");
  for (double alpha0 : spec.alpha0) {
    const Problem problem(network, objectives, alpha0);
    for (auto config : solver_configs(spec, alpha0)) {
      config.adaptive = AdaptiveSchedule{spec.tol, spec.eta, spec.min_alpha, false};
      const RunTrace trace = run_adaptive(problem, config, std::nullopt, x_star);
      const std::string name = fmt::format("{}_alpha0_{}.csv", lowercase(trace.label), format_exact(alpha0));
      write_file(dir / name, [&](std::ostream& f) { write_trace_csv(f, trace); });
      out << fmt::format("{:<8}{:>10g}{:>12}{:>10}{:>14g}{:>16.6e}  {}\n", trace.label, alpha0,
                         iterations_or_dash(trace.first_error_below(spec.target)),
                         trace.alpha_change_iterations().size(), trace.last().alpha, trace.last().error,
                         to_string(trace.reason));
      if (trace.reason == Termination::Diverged) {
        diverged = true;
        out << "  " << trace.diagnostic << "\n";
      }
    }
  }
  return diverged ? kExitNumerical : kExitOk;
}

int cmd_histogram(const ExperimentSpec& spec, std::ostream& out) {
  const auto dir = prepare_out(spec);
  HistogramConfig config;
  config.trials = spec.trials;
  config.agents = spec.n;
  config.dim = spec.p;
  config.xi = spec.xi;
  config.alpha = spec.alpha;
  config.include_dgd = wants(spec, "dgd");
  config.orders = wants(spec, "nn") ? spec.orders : std::vector<int>{};
  config.target = spec.target;
  config.max_iters = spec.max_iters;
  config.seed = spec.seed;
  config.workers = spec.workers;
  const auto result = histogram_experiment(config);
  write_file(dir / "histogram.csv", [&](std::ostream& f) { write_histogram_csv(f, result.entries); });
  out << fmt::format("{} trials, target e_t < {:g}, censored at {} iterations\n", spec.trials, spec.target,
                     spec.max_iters);
  out << histogram_summary(result.summaries);
  return kExitOk;
}

int cmd_logistic(const ExperimentSpec& spec, std::ostream& out) {
  const auto dir = prepare_out(spec);
  LogisticParams params;
  params.agents = spec.n;
  params.dim = spec.p;
  params.samples_per_agent = spec.q;
  params.mu = spec.mu;
  params.sigma_plus = spec.sigma_plus;
  params.sigma_minus = spec.sigma_minus;
  params.lambda = spec.lambda;
  params.seed = spec.seed;
  const auto instance = make_logistic(params);
  const Problem problem(make_cycle_network(spec.n, spec.d), build_objectives<double>(instance), spec.alpha);
  std::optional<Eigen::VectorXd> x_star;
  try {
    x_star = logistic_optimum_oracle(instance);
  } catch (const NumericalError& e) {
    out << "note: no centralized optimum (" << e.what() << "); e_t left empty\n";
  }

  std::vector<RunTrace> traces;
  bool diverged = false;
  for (const auto& config : solver_configs(spec, spec.alpha)) {
    traces.push_back(run(problem, config, std::nullopt, x_star));
    const auto& trace = traces.back();
    write_file(dir / (lowercase(trace.label) + ".csv"), [&](std::ostream& f) { write_trace_csv(f, trace); });
    diverged = diverged || trace.reason == Termination::Diverged;
  }
  std::optional<double> reference;
  for (const auto& trace : traces) {
    if (trace.label == "DGD") reference = trace.last().value;
  }
  out << fmt::format("{:<8}{:>16}{:>16}  {}\n", "method", fmt::format("F(t={})", spec.max_iters),
                     "t(F<=DGD)", "status");
  for (const auto& trace : traces) {
    const std::string match = reference ? iterations_or_dash(trace.first_value_at_most(*reference)) : "-";
    out << fmt::format("{:<8}{:>16.6e}{:>16}  {}\n", trace.label, trace.last().value, match, to_string(trace.reason));
    if (trace.reason == Termination::Diverged) out << "  " << trace.diagnostic << "\n";
  }
  return diverged ? kExitNumerical : kExitOk;
}

std::string csv_safe(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  return text;
}

int cmd_analyze(const ExperimentSpec& spec, std::ostream& out) {
  const auto dir = prepare_out(spec);
  const auto instance = quadratic_from(spec);
  auto topology = build_d_regular_cycle(spec.n, spec.d);
  Eigen::MatrixXd w = build_paper_weights(topology).entries();
  if (spec.break_weights) w(0, 0) += 0.05;  // row 0 no longer sums to one
  WeightMatrix weights(w);
  const auto issues = validate_weights(weights, topology);
  const auto network = make_network(std::move(topology), std::move(weights));
  const Problem problem(network, build_objectives<double>(instance), spec.alpha);

  std::vector<BoundRecord> weight_records;
  for (const auto& issue : issues) {
    weight_records.push_back({csv_safe("weights: " + issue.message), 0.0, issue.magnitude, -issue.magnitude,
                              issue.warning});
  }

  bool failed = has_failures(issues);
  for (int order : spec.orders) {
    Simulator sim(problem, problem.zeros());
    std::vector<Stacked> samples{sim.iterate()};
    for (long t = 0; t < spec.max_iters; ++t) {
      sim.step_nn(order, spec.eps);
      samples.push_back(sim.iterate());
    }
    SpectralReport report = spectral_report<double>(problem, samples, order);
    report.records.insert(report.records.begin(), weight_records.begin(), weight_records.end());
    write_file(dir / fmt::format("analysis_K{}.csv", order), [&](std::ostream& f) { write_report_csv(f, report); });
    out << fmt::format("K={} ({} sampled iterates)\n", order, samples.size()) << report_summary(report);
    failed = failed || !report.passed();
  }
  return failed ? kExitNumerical : kExitOk;
}

struct FlagInfo {
  const char* flag;
  const char* key;
  const char* help;
  std::vector<std::string> subcommands;
};

const std::vector<FlagInfo>& flag_table() {
  static const std::vector<FlagInfo> table{
      {"--n", "n", "number of agents", {"run", "adaptive", "histogram", "logistic", "analyze"}},
      {"--p", "p", "decision dimension", {"run", "adaptive", "histogram", "logistic", "analyze"}},
      {"--xi", "xi", "condition parameter: diagonal entries span 10^-xi .. 10^xi",
       {"run", "adaptive", "histogram", "analyze"}},
      {"--seed", "seed", "instance seed (histogram: master seed)",
       {"run", "adaptive", "histogram", "logistic", "analyze"}},
      {"--d", "d", "degree of the d-regular cycle (even)", {"run", "adaptive", "logistic", "analyze"}},
      {"--q", "q", "samples per agent", {"logistic"}},
      {"--mu", "mu", "feature mean magnitude, +mu for label 1 and -mu for label -1", {"logistic"}},
      {"--sigma-plus", "sigma_plus", "feature standard deviation for label 1", {"logistic"}},
      {"--sigma-minus", "sigma_minus", "feature standard deviation for label -1", {"logistic"}},
      {"--lambda", "lambda", "l2 regularization of the global logistic loss", {"logistic"}},
      {"--methods", "methods", "comma list from {dgd, nn}", {"run", "adaptive", "histogram", "logistic"}},
      {"--K", "K", "comma list of NN orders", {"run", "adaptive", "histogram", "logistic", "analyze"}},
      {"--eps", "eps", "NN step size in (0, 1]", {"run", "adaptive", "logistic", "analyze"}},
      {"--alpha", "alpha", "penalty coefficient", {"run", "histogram", "logistic", "analyze"}},
      {"--tol", "tol", "divide alpha by eta once every ||g_i|| <= tol", {"adaptive"}},
      {"--eta", "eta", "alpha reduction factor", {"adaptive"}},
      {"--min-alpha", "min_alpha", "stop once alpha would drop below this", {"adaptive"}},
      {"--alpha0", "alpha0", "comma list of initial penalties", {"adaptive"}},
      {"--max-iters", "max_iters", "iterations per run (analyze: sampled NN iterations)",
       {"run", "adaptive", "histogram", "logistic", "analyze"}},
      {"--target", "target", "e_t threshold (run/adaptive: reported, histogram: stopping)",
       {"run", "adaptive", "histogram"}},
      {"--trials", "trials", "number of random trials", {"histogram"}},
      {"--workers", "workers", "worker threads, 0 for one per core", {"histogram"}},
      {"--out", "out", "output directory", {"run", "adaptive", "histogram", "logistic", "analyze"}},
  };
  return table;
}

const std::map<std::string, std::string> kDescriptions{
    {"run", "DGD and NN-K on one quadratic instance; one trace CSV per method"},
    {"adaptive", "adaptive-penalty DGD and NN-K for each initial alpha"},
    {"histogram", "exchanges to reach the target over random graphs and instances"},
    {"logistic", "DGD and NN-K on the separable logistic regression instance"},
    {"analyze", "spectral bound report at iterates of a short NN-K run"},
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network Newton and decentralized gradient descent on simulated agent networks", "nnk"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, CLI::Option*> break_flags;
  for (const auto& name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name, kDescriptions.at(name));
    sub->add_option("--config", config_paths[name], "key = value file; flags take precedence");
    for (const auto& info : flag_table()) {
      if (std::find(info.subcommands.begin(), info.subcommands.end(), name) == info.subcommands.end()) continue;
      options[name][info.key] = sub->add_option(info.flag, raw[name][info.key], info.help);
    }
    if (name == "analyze") {
      break_flags[name] = sub->add_flag("--break-weights", "perturb W so row 0 does not sum to one");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    ExperimentSpec spec = default_spec(name);
    if (!config_paths[name].empty()) apply(spec, KeyValueFile::load(config_paths[name]));
    KeyValueFile flags;
    for (const auto& [key, option] : options[name]) {
      if (option->count() > 0) flags.set(key, raw[name][key]);
    }
    if (break_flags.count(name) && break_flags[name]->count() > 0) flags.set("break_weights", "true");
    apply(spec, flags);
    validate(spec);

    if (name == "run") return cmd_run(spec, out);
    if (name == "adaptive") return cmd_adaptive(spec, out);
    if (name == "histogram") return cmd_histogram(spec, out);
    if (name == "logistic") return cmd_logistic(spec, out);
    return cmd_analyze(spec, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace nnk
