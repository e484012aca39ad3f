#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "netnewton/histogram.hpp"
#include "netnewton/runtime.hpp"

namespace netnewton {

/// `t,e_t,F,grad_inf,alpha,comm`, full precision.
void write_trace_csv(std::ostream& out, const RunTrace& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

/// `trial,method,d,exchanges,censored`.
void write_histogram_csv(std::ostream& out, const std::vector<HistogramEntry>& entries);
std::string histogram_summary(const std::vector<MethodSummary>& summaries);

/// One line per run: label, iterations, final e_t and F, termination.
std::string trace_summary(const RunTrace& trace);

}  // namespace netnewton
