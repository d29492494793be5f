#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edgecoop/admm.hpp"
#include "edgecoop/sim/scenario.hpp"

namespace edgecoop::sim {

struct HitRatioRow {
  double x = 0.0;  // buffer fraction or Zipf exponent
  double coop = 0.0;
  double random = 0.0;
};

/// 0.1, 0.2, ..., 0.8
std::vector<double> default_buffer_fractions();
/// 0.2, 0.4, ..., 2.0
std::vector<double> default_zipf_values();

/// Setup used by the cache sweeps: no migration and greedy assignment, since
/// neither touches lookups.
Scenario cache_sweep_scenario();

/// Runs the scenario once with cooperative caching and once with random
/// caching per buffer fraction; everything else stays fixed.
std::vector<HitRatioRow> hit_ratio_vs_buffer(const Scenario& base, const std::vector<double>& fractions);
std::vector<HitRatioRow> hit_ratio_vs_zipf(const Scenario& base, const std::vector<double>& xis);

struct CapacityRow {
  double capacity = 0.0;  // cycles per station per round
  double utility = 0.0;   // solver objective at the returned x
  double max_violation = 0.0;
  admm::SolveStatus status = admm::SolveStatus::IterationCap;
  std::size_t iterations = 0;
};

struct CapacitySweep {
  std::vector<CapacityRow> rows;
  /// First capacity after which every further step lowers utility by less
  /// than 1% of the current value.
  std::optional<double> plateau;
};

/// One fixed allocation batch solved at evenly spaced per-station compute
/// budgets from `lo` to `hi` times the batch's total cycle demand.
CapacitySweep utility_vs_capacity(std::uint64_t seed, std::size_t stations, std::size_t tasks,
                                  std::size_t points, double lo = 0.4, double hi = 4.0,
                                  admm::SolverConfig cfg = {});

struct ConvergenceRun {
  std::size_t tasks = 0;
  admm::SolveTrace trace;
  admm::SolveStatus status = admm::SolveStatus::IterationCap;
  double objective = 0.0;
  /// First iteration (1-based) at which the stopping residual fell below tol.
  std::optional<std::size_t> settled_at;
};

/// max of the consensus, assignment and capacity residuals; the solver stops
/// once this drops below its tolerance.
double combined_residual(const admm::IterationRecord& r);

std::vector<ConvergenceRun> admm_convergence(std::uint64_t seed, std::size_t stations,
                                             const std::vector<std::size_t>& task_counts,
                                             admm::SolverConfig cfg = {});

struct EntropyPair {
  std::uint64_t seed = 0;
  double with_migration = 0.0;
  double without_migration = 0.0;
  std::size_t migrated = 0;
};

/// Setup where the hotspot group's queue outgrows its service rate, so the
/// migration controller has something to move.
Scenario congested_scenario();

std::vector<EntropyPair> entropy_pairs(const Scenario& base, const std::vector<std::uint64_t>& seeds);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

void write_hit_ratio_csv(std::ostream& out, const std::vector<HitRatioRow>& rows, const std::string& x_name);
void write_capacity_csv(std::ostream& out, const CapacitySweep& sweep);
/// Columns h,k,objective,primal_residual,constraint_residual,dual_residual.
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRun>& runs);
void write_entropy_csv(std::ostream& out, const std::vector<EntropyPair>& pairs);

}  // namespace edgecoop::sim
