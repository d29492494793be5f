#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <sstream>

#include "edgecoop/sim/scenario.hpp"
#include "edgecoop/sim/simulator.hpp"

using namespace edgecoop;
using namespace edgecoop::sim;

namespace {

Scenario small() {
  Scenario s;
  s.num_tasks = 600;
  s.ticks = 200;
  s.num_kinds = 20;
  s.num_bs = 6;
  s.num_groups = 3;
  s.seed = 7;
  return s;
}

std::string dump(const MetricsFrame& m) {
  std::ostringstream os;
  write_metrics_csv(os, m);
  write_events_csv(os, m);
  write_summary_csv(os, m.summary);
  migration::write_trace_csv(os, m.migration_trace);
  return os.str();
}

// Delay plus energy summed station by station, tasks visited in service order.
double utility_by_hand(const AllocationRecord& r) {
  const auto& p = r.problem;
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.num_stations(); ++i) {
    double before = 0.0;
    for (Eigen::Index j = 0; j < p.num_tasks(); ++j) {
      if (r.assignment[static_cast<std::size_t>(j)] != i) continue;
      const double delay = before + p.upload(i, j) + p.exec(i, j) + p.download(i, j);
      total += p.coe * delay + (1.0 - p.coe) * p.energy(i, j);
      before += p.upload(i, j) + p.exec(i, j);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("scenario text round trips and rejects unknown keys") {
  Scenario s = small();
  s.cache = CacheStrategy::Random;
  s.migration = false;
  s.zipf_xi = 1.25;
  std::stringstream ss;
  write_scenario(ss, s);
  const Scenario back = read_scenario(ss);
  std::stringstream again;
  write_scenario(again, back);
  CHECK(again.str() == ss.str());

  std::istringstream bad("bogus=1\n");
  CHECK_THROWS_AS(read_scenario(bad), std::invalid_argument);
  std::istringstream comment("# nothing\n  seed = 9  # trailing\n");
  CHECK(read_scenario(comment).seed == 9);
}

TEST_CASE("invalid scenarios fail before any work") {
  Scenario s = small();
  s.buffer_fraction = 1.5;
  CHECK_THROWS_AS(run_scenario(s), std::invalid_argument);
  s = small();
  s.num_groups = 0;
  CHECK_THROWS_AS(run_scenario(s), std::invalid_argument);
  s = small();
  s.num_bs = 2;
  CHECK_THROWS_AS(run_scenario(s), std::invalid_argument);
}

TEST_CASE("zero tasks gives empty metrics") {
  Scenario s = small();
  s.num_tasks = 0;
  const auto m = run_scenario(s);
  CHECK(m.summary.arrivals == 0);
  CHECK(m.summary.hit_ratio == 0.0);
  CHECK(m.summary.utility == 0.0);
  CHECK(m.events.empty());
  CHECK(m.ticks.size() == s.ticks);
}

TEST_CASE("same seed gives identical output, different seed does not") {
  const auto a = run_scenario(small());
  const auto b = run_scenario(small());
  CHECK(dump(a) == dump(b));
  Scenario other = small();
  other.seed = 8;
  CHECK(dump(run_scenario(other)) != dump(a));
}

TEST_CASE("every task is accounted for") {
  for (auto cache : {CacheStrategy::Cooperative, CacheStrategy::Random, CacheStrategy::None}) {
    for (bool mig : {true, false}) {
      Scenario s = small();
      s.cache = cache;
      s.migration = mig;
      const auto m = run_scenario(s);
      const auto& x = m.summary;
      CHECK(x.arrivals == x.hits + x.neighbor_hits + x.processed + x.dropped + x.held_at_end);
      std::size_t held = 0;
      for (const auto& t : m.ticks) {
        CHECK(t.arrivals == t.hits + t.neighbor_hits + t.misses);
        held += t.misses;
        held -= t.processed + t.dropped;
        CHECK(held == t.held);
      }
      if (!mig) CHECK(x.migrated == 0);
    }
  }
}

TEST_CASE("hit ratio matches the event trace exactly") {
  Scenario s = small();
  const auto m = run_scenario(s);
  std::size_t lookups = 0, served = 0;
  std::map<std::size_t, int> seen;
  for (const auto& e : m.events) {
    if (e.what == EventKind::Hit || e.what == EventKind::NeighborHit || e.what == EventKind::Miss) {
      ++lookups;
      ++seen[e.task];
      if (e.what != EventKind::Miss) ++served;
    }
  }
  for (const auto& [task, n] : seen) CHECK(n == 1);
  REQUIRE(lookups == m.summary.lookups);
  CHECK(m.summary.hit_ratio == static_cast<double>(served) / static_cast<double>(lookups));
  CHECK(m.summary.hit_ratio >= 0.0);
  CHECK(m.summary.hit_ratio <= 1.0);
}

TEST_CASE("reported utility equals the objective of the realized assignment") {
  for (auto alloc : {AllocStrategy::Admm, AllocStrategy::Greedy}) {
    Scenario s = small();
    s.alloc = alloc;
    RunOptions opts;
    opts.keep_allocations = true;
    const auto m = run_scenario(s, opts);
    REQUIRE(!m.allocations.empty());
    std::map<std::size_t, double> per_tick;
    for (const auto& r : m.allocations) {
      const double hand = utility_by_hand(r);
      CHECK(r.utility == doctest::Approx(hand).epsilon(1e-9));
      CHECK(r.utility >= 0.0);
      per_tick[r.t] += hand;
    }
    for (const auto& t : m.ticks) {
      const double expect = per_tick.count(t.t) ? per_tick[t.t] : 0.0;
      CHECK(std::abs(t.utility - expect) <= 1e-6 * std::max(1.0, expect));
    }
  }
}

TEST_CASE("one group without migration keeps every task at home") {
  Scenario s = small();
  s.num_groups = 1;
  s.num_bs = 3;
  s.migration = false;
  const auto m = run_scenario(s);
  CHECK(m.summary.migrated == 0);
  for (const auto& r : m.migration_trace) CHECK(r.action != migration::Action::Transmit);
  for (const auto& e : m.events) CHECK(e.group == 0);
  for (const auto& t : m.ticks) {
    if (t.held > 0) {
      REQUIRE(t.entropy.has_value());
      CHECK(*t.entropy == 0.0);
    }
  }
}

TEST_CASE("no cache means every lookup misses") {
  Scenario s = small();
  s.cache = CacheStrategy::None;
  const auto m = run_scenario(s);
  CHECK(m.summary.hits + m.summary.neighbor_hits == 0);
  CHECK(m.summary.hit_ratio == 0.0);
}

TEST_CASE("a buffer holding the whole catalog serves everything after warm-up") {
  Scenario s = small();
  s.buffer_fraction = 1.0;
  s.num_bs = 3;
  const auto m = run_scenario(s);
  std::size_t late_miss = 0;
  for (const auto& t : m.ticks) {
    if (t.t > s.delta_t) late_miss += t.misses;
  }
  CHECK(late_miss == 0);

  s.cache = CacheStrategy::Random;
  CHECK(run_scenario(s).summary.hit_ratio == 1.0);
}

TEST_CASE("baseline handles flip exactly one switch") {
  const Scenario s = small();
  CHECK(baseline_random_cache(s).cache == CacheStrategy::Random);
  CHECK(baseline_no_migration(s).migration == false);
  CHECK(baseline_greedy_assign(s).alloc == AllocStrategy::Greedy);
  std::ostringstream a, b;
  Scenario back = baseline_no_migration(s);
  back.migration = true;
  write_scenario(a, s);
  write_scenario(b, back);
  CHECK(a.str() == b.str());
}

TEST_CASE("fitted popularity models rarely clamp inside the simulator") {
  const auto m = run_scenario(small());
  REQUIRE(m.summary.clamp_evaluations > 0);
  CHECK(static_cast<double>(m.summary.clamped) / static_cast<double>(m.summary.clamp_evaluations) < 0.01);
}
