#include "netnewton/trace_io.hpp"

#include <fmt/format.h>

#include <istream>
#include <ostream>
#include <sstream>

#include "netnewton/analysis.hpp"

namespace netnewton {

namespace {

double parse_field(const std::string& text, long line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("trace csv line {}: bad number '{}'", line, text));
  }
}

}  // namespace

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "t,e_t,F,grad_inf,alpha,comm\n";
  for (const auto& r : trace.records) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.t, r.error, r.value, r.grad_inf, r.alpha, r.comm);
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "t,e_t,F,grad_inf,alpha,comm",
          "trace csv: missing header");
  std::vector<TraceRecord> out;
  long number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    require(fields.size() == 6, fmt::format("trace csv line {}: expected 6 fields", number));
    TraceRecord r;
    r.t = static_cast<long>(parse_field(fields[0], number));
    r.error = parse_field(fields[1], number);
    r.value = parse_field(fields[2], number);
    r.grad_inf = parse_field(fields[3], number);
    r.alpha = parse_field(fields[4], number);
    r.comm = static_cast<long>(parse_field(fields[5], number));
    if (!out.empty()) r.alpha_changed = r.alpha != out.back().alpha;
    out.push_back(r);
  }
  return out;
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramEntry>& entries) {
  out << "trial,method,d,exchanges,censored\n";
  for (const auto& e : entries) {
    out << fmt::format("{},{},{},{},{}\n", e.trial, e.method, e.degree, e.exchanges, e.censored ? 1 : 0);
  }
}

std::string histogram_summary(const std::vector<MethodSummary>& summaries) {
  std::string out;
  for (const auto& s : summaries) {
    out += fmt::format("{:<6} completed {:>5}  censored {:>5}  mean exchanges {:.1f}\n", s.method, s.completed,
                       s.censored, s.mean_exchanges);
  }
  return out;
}

std::string trace_summary(const RunTrace& trace) {
  const auto& r = trace.last();
  std::string out = fmt::format("{:<6} t={:<6} comm={:<7} e_t={:.6e} F={:.6e} alpha={:g} [{}]", trace.label, r.t,
                                r.comm, r.error, r.value, r.alpha, to_string(trace.reason));
  if (!trace.diagnostic.empty()) out += " " + trace.diagnostic;
  return out;
}

void write_report_csv(std::ostream& out, const SpectralReport& report) {
  const auto& in = report.inputs;
  out << fmt::format("# delta = {:.17g}\n# Delta = {:.17g}\n", in.delta, in.big_delta);
  out << fmt::format("# m = {:.17g}\n# M = {:.17g}\n# L = {:.17g}\n# curvature = {}\n", in.m, in.M, in.L,
                     in.curvature_source);
  out << fmt::format("# alpha = {:.17g}\n# K = {}\n", in.alpha, in.order);
  out << fmt::format("# rho = {:.17g}\n# rho^(K+1) = {:.17g}\n", report.rates.rho, report.rho_k1);
  out << fmt::format("# lambda = {:.17g}\n# Lambda = {:.17g}\n", report.rates.lambda, report.rates.Lambda);
  out << fmt::format("# epsilon = {:.17g}\n# zeta = {:.17g}\n# gap = {:.17g}\n", report.stepsize.epsilon,
                     report.stepsize.zeta, report.stepsize.gap);
  out << "bound,theoretical,measured,margin,pass\n";
  for (const auto& r : report.records) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{}\n", r.name, r.theoretical, r.measured, r.margin,
                       r.pass ? 1 : 0);
  }
}

std::string report_summary(const SpectralReport& report) {
  std::string out = fmt::format("rho={:.6g} rho^(K+1)={:.6g} lambda={:.6g} Lambda={:.6g} epsilon={:.6g} zeta={:.6g}\n",
                                report.rates.rho, report.rho_k1, report.rates.lambda, report.rates.Lambda,
                                report.stepsize.epsilon, report.stepsize.zeta);
  long failed = 0;
  for (const auto& r : report.records) {
    if (!r.pass) {
      ++failed;
      out += fmt::format("FAIL {}: theoretical {:.6g} measured {:.6g}\n", r.name, r.theoretical, r.measured);
    }
  }
  out += fmt::format("{} of {} bound checks passed\n", long(report.records.size()) - failed, report.records.size());
  return out;
}

}  // namespace netnewton
