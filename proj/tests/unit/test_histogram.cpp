#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "netnewton/histogram.hpp"
#include "netnewton/trace_io.hpp"

using namespace netnewton;

namespace {

HistogramConfig small_config() {
  HistogramConfig c;
  c.trials = 6;
  c.agents = 12;
  c.degrees = {2, 4, 6};
  c.max_iters = 4000;
  c.target = 5e-2;
  c.seed = 3;
  c.workers = 1;
  return c;
}

}  // namespace

TEST_CASE("trial seeds") {
  CHECK(trial_seed(1, 0) == trial_seed(1, 0));
  std::set<std::uint64_t> seen;
  for (long t = 0; t < 200; ++t) seen.insert(trial_seed(1, t));
  CHECK(seen.size() == 200);
  CHECK(trial_seed(1, 5) != trial_seed(2, 5));
}

TEST_CASE("one trial") {
  auto c = small_config();
  c.trials = 1;
  const auto result = histogram_experiment(c);
  REQUIRE(result.entries.size() == 4);
  REQUIRE(result.summaries.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& e = result.entries[k];
    const auto& s = result.summaries[k];
    CHECK(e.method == s.method);
    if (!e.censored) CHECK(s.mean_exchanges == double(e.exchanges));
    CHECK(s.completed + s.censored == 1);
  }
  CHECK(result.entries[0].method == "DGD");
  CHECK(result.entries[3].method == "NN-2");
}

TEST_CASE("results do not depend on the worker count") {
  auto c = small_config();
  const auto serial = histogram_experiment(c);
  c.workers = 3;
  const auto parallel = histogram_experiment(c);
  REQUIRE(serial.entries.size() == parallel.entries.size());
  for (std::size_t k = 0; k < serial.entries.size(); ++k) {
    CHECK(serial.entries[k].trial == parallel.entries[k].trial);
    CHECK(serial.entries[k].degree == parallel.entries[k].degree);
    CHECK(serial.entries[k].exchanges == parallel.entries[k].exchanges);
    CHECK(serial.entries[k].censored == parallel.entries[k].censored);
  }
}

TEST_CASE("exchange counts") {
  const auto result = histogram_experiment(small_config());
  for (const auto& e : result.entries) {
    const long per = e.method == "DGD" ? 1 : std::stol(e.method.substr(3)) + 1;
    CHECK(e.exchanges % per == 0);
    if (e.censored) CHECK(e.exchanges == 4000 * per);
  }
  // NN beats DGD on every trial of this small setting
  for (std::size_t k = 0; k < result.entries.size(); k += 4) {
    for (std::size_t j = 1; j < 4; ++j) CHECK(result.entries[k + j].exchanges < result.entries[k].exchanges);
  }
}

TEST_CASE("censoring and summaries") {
  auto c = small_config();
  c.trials = 2;
  c.max_iters = 5;  // nothing gets there
  const auto result = histogram_experiment(c);
  for (const auto& e : result.entries) CHECK(e.censored);
  for (const auto& s : result.summaries) {
    CHECK(s.completed == 0);
    CHECK(std::isnan(s.mean_exchanges));
  }

  std::vector<HistogramEntry> entries{{0, "X", 2, 10, false}, {1, "X", 2, 30, false}, {2, "X", 4, 99, true}};
  const auto s = summarize(entries, {"X"}, 4).front();
  CHECK(s.completed == 2);
  CHECK(s.censored == 1);
  CHECK(s.mean_exchanges == 20.0);
  CHECK(s.bin_edges.front() == 10.0);
  CHECK(s.bin_edges.back() == 30.0);
  CHECK(s.bin_counts == std::vector<long>{1, 0, 0, 1});
}

TEST_CASE("histogram csv") {
  std::vector<HistogramEntry> entries{{0, "DGD", 4, 700, false}, {0, "NN-1", 4, 40000, true}};
  std::ostringstream out;
  write_histogram_csv(out, entries);
  CHECK(out.str() == "trial,method,d,exchanges,censored\n0,DGD,4,700,0\n0,NN-1,4,40000,1\n");
}

TEST_CASE("histogram config validation") {
  auto c = small_config();
  c.trials = 0;
  CHECK_THROWS_AS(histogram_experiment(c), std::invalid_argument);
  c = small_config();
  c.degrees = {3};
  CHECK_THROWS_AS(histogram_experiment(c), std::invalid_argument);
  c = small_config();
  c.include_dgd = false;
  c.orders.clear();
  CHECK_THROWS_AS(histogram_experiment(c), std::invalid_argument);
}
