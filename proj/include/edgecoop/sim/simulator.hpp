#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "edgecoop/admm.hpp"
#include "edgecoop/caching.hpp"
#include "edgecoop/migration.hpp"
#include "edgecoop/sim/scenario.hpp"

namespace edgecoop::sim {

struct TickMetrics {
  std::size_t t = 0;
  std::size_t arrivals = 0;
  std::size_t hits = 0;           // served from the origin station's cache
  std::size_t neighbor_hits = 0;  // served from another station in the group
  std::size_t misses = 0;
  std::size_t migrated = 0;
  std::size_t processed = 0;
  std::size_t dropped = 0;
  std::size_t held = 0;  // waiting in some group at the end of the tick
  std::size_t detect_actions = 0;
  std::size_t process_actions = 0;
  std::size_t transmit_actions = 0;
  double utility = 0.0;  // weighted delay plus energy of this tick's assignments
  double energy = 0.0;
  double delay = 0.0;    // summed over processed tasks
  std::optional<double> entropy;
};

struct Summary {
  std::size_t arrivals = 0;
  std::size_t lookups = 0;
  std::size_t hits = 0;
  std::size_t neighbor_hits = 0;
  std::size_t processed = 0;
  std::size_t dropped = 0;
  std::size_t migrated = 0;
  std::size_t held_at_end = 0;
  double hit_ratio = 0.0;
  double utility = 0.0;
  double energy = 0.0;
  double mean_delay = 0.0;
  double mean_entropy = 0.0;
  std::size_t entropy_ticks = 0;
  std::size_t clamped = 0;
  std::size_t clamp_evaluations = 0;
  std::size_t solves = 0;
  std::size_t solves_converged = 0;
};

enum class EventKind { Hit, NeighborHit, Miss, Detect, Migrate, Process, Drop };
const char* to_string(EventKind k);

struct Event {
  std::size_t t = 0;
  std::size_t task = 0;
  std::size_t group = 0;
  std::size_t station = 0;  // origin, holder, or serving station
  std::size_t kind = 0;
  EventKind what = EventKind::Miss;
};

/// One allocation round of one group, kept for auditing.
struct AllocationRecord {
  std::size_t t = 0;
  std::size_t group = 0;
  admm::AllocationProblem problem;
  std::vector<Eigen::Index> assignment;
  double utility = 0.0;
};

struct RunOptions {
  bool keep_events = true;
  bool keep_allocations = false;
  bool keep_migration_trace = true;
};

struct MetricsFrame {
  std::vector<TickMetrics> ticks;
  Summary summary;
  std::vector<Event> events;
  std::vector<migration::TraceRow> migration_trace;
  std::vector<AllocationRecord> allocations;
};

/// Runs the scenario tick by tick: arrivals and cache lookups, the group
/// migration controllers, then allocation of the tasks each group processes.
/// Cache plans are rebuilt at every window boundary.
MetricsFrame run_scenario(const Scenario& s, const RunOptions& opts = {});

/// Baseline handles: copies of the scenario with one strategy swapped.
Scenario baseline_random_cache(Scenario s);
Scenario baseline_no_migration(Scenario s);
Scenario baseline_greedy_assign(Scenario s);

void write_metrics_csv(std::ostream& out, const MetricsFrame& m);
void write_events_csv(std::ostream& out, const MetricsFrame& m);
void write_summary_csv(std::ostream& out, const Summary& s);

/// Writes metrics.csv, events.csv, migration.csv, summary.csv and
/// scenario.txt into `dir`, creating it if needed.
void write_run(const std::filesystem::path& dir, const Scenario& s, const MetricsFrame& m);

}  // namespace edgecoop::sim
