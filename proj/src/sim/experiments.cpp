#include "edgecoop/sim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "edgecoop/csv.hpp"
#include "edgecoop/sim/instances.hpp"
#include "edgecoop/sim/simulator.hpp"

namespace edgecoop::sim {

std::vector<double> default_buffer_fractions() {
  std::vector<double> v;
  for (int k = 1; k <= 8; ++k) v.push_back(k / 10.0);
  return v;
}

std::vector<double> default_zipf_values() {
  std::vector<double> v;
  for (int k = 1; k <= 10; ++k) v.push_back(k / 5.0);
  return v;
}

Scenario cache_sweep_scenario() {
  Scenario s;
  s.migration = false;
  s.alloc = AllocStrategy::Greedy;
  return s;
}

namespace {

RunOptions lean() {
  RunOptions o;
  o.keep_events = false;
  o.keep_migration_trace = false;
  return o;
}

HitRatioRow paired(Scenario s, double x) {
  HitRatioRow row;
  row.x = x;
  s.cache = CacheStrategy::Cooperative;
  row.coop = run_scenario(s, lean()).summary.hit_ratio;
  row.random = run_scenario(baseline_random_cache(s), lean()).summary.hit_ratio;
  return row;
}

}  // namespace

std::vector<HitRatioRow> hit_ratio_vs_buffer(const Scenario& base, const std::vector<double>& fractions) {
  std::vector<HitRatioRow> out;
  for (double f : fractions) {
    Scenario s = base;
    s.buffer_fraction = f;
    out.push_back(paired(s, f));
  }
  return out;
}

std::vector<HitRatioRow> hit_ratio_vs_zipf(const Scenario& base, const std::vector<double>& xis) {
  std::vector<HitRatioRow> out;
  for (double xi : xis) {
    Scenario s = base;
    s.zipf_xi = xi;
    out.push_back(paired(s, xi));
  }
  return out;
}

CapacitySweep utility_vs_capacity(std::uint64_t seed, std::size_t stations, std::size_t tasks,
                                  std::size_t points, double lo, double hi, admm::SolverConfig cfg) {
  if (points < 2) throw std::invalid_argument("capacity sweep needs at least two points");
  if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("capacity sweep range invalid");
  auto problem = random_allocation_problem(seed, stations, tasks);
  double demand = 0.0;
  for (const auto& t : problem.tasks) demand += t.c;

  CapacitySweep sweep;
  for (std::size_t k = 0; k < points; ++k) {
    const double share = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    for (auto& st : problem.stations) st.compute_cap = share * demand;
    const auto res = admm::solve(problem, cfg);
    sweep.rows.push_back({share * demand, problem.objective(res.primal.x), res.max_violation, res.status,
                          res.trace.records.size()});
  }
  for (std::size_t k = 0; k + 1 < sweep.rows.size(); ++k) {
    bool flat = true;
    for (std::size_t m = k; m + 1 < sweep.rows.size(); ++m) {
      const double drop = sweep.rows[m].utility - sweep.rows[m + 1].utility;
      flat = flat && drop < 0.01 * std::abs(sweep.rows[m].utility);
    }
    if (flat) {
      sweep.plateau = sweep.rows[k].capacity;
      break;
    }
  }
  return sweep;
}

double combined_residual(const admm::IterationRecord& r) {
  return std::max({r.primal_residual, r.constraint_residual, r.capacity_violation});
}

std::vector<ConvergenceRun> admm_convergence(std::uint64_t seed, std::size_t stations,
                                             const std::vector<std::size_t>& task_counts,
                                             admm::SolverConfig cfg) {
  std::vector<ConvergenceRun> out;
  for (auto h : task_counts) {
    const auto problem = random_allocation_problem(seed, stations, h);
    auto res = admm::solve(problem, cfg);
    ConvergenceRun run;
    run.tasks = h;
    run.status = res.status;
    run.objective = problem.objective(res.primal.x);
    for (const auto& r : res.trace.records) {
      if (combined_residual(r) < cfg.tol) {
        run.settled_at = r.k;
        break;
      }
    }
    run.trace = std::move(res.trace);
    out.push_back(std::move(run));
  }
  return out;
}

Scenario congested_scenario() {
  Scenario s;
  s.hotspot = 0.6;
  s.bs_compute = 3e8;
  return s;
}

std::vector<EntropyPair> entropy_pairs(const Scenario& base, const std::vector<std::uint64_t>& seeds) {
  std::vector<EntropyPair> out;
  for (auto seed : seeds) {
    Scenario s = base;
    s.seed = seed;
    s.migration = true;
    const auto on = run_scenario(s, lean()).summary;
    const auto off = run_scenario(baseline_no_migration(s), lean()).summary;
    out.push_back({seed, on.mean_entropy, off.mean_entropy, on.migrated});
  }
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t e = k;
    while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
    const double avg = (static_cast<double>(k) + static_cast<double>(e)) / 2.0 + 1.0;
    for (std::size_t m = k; m <= e; ++m) r[idx[m]] = avg;
    k = e + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman needs paired samples");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    num += (ra[k] - ma) * (rb[k] - mb);
    da += (ra[k] - ma) * (ra[k] - ma);
    db += (rb[k] - mb) * (rb[k] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

void write_hit_ratio_csv(std::ostream& out, const std::vector<HitRatioRow>& rows, const std::string& x_name) {
  csv::write_row(out, {x_name, "coop_hit", "random_hit"});
  for (const auto& r : rows) csv::write_row(out, {csv::fmt(r.x), csv::fmt(r.coop), csv::fmt(r.random)});
}

void write_capacity_csv(std::ostream& out, const CapacitySweep& sweep) {
  csv::write_row(out, {"capacity", "utility", "max_violation", "status", "iterations", "plateau"});
  for (const auto& r : sweep.rows) {
    const bool at_plateau = sweep.plateau && r.capacity >= *sweep.plateau;
    csv::write_row(out, {csv::fmt(r.capacity), csv::fmt(r.utility), csv::fmt(r.max_violation),
                         admm::to_string(r.status), std::to_string(r.iterations), at_plateau ? "1" : "0"});
  }
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRun>& runs) {
  csv::write_row(out, {"h", "k", "objective", "primal_residual", "constraint_residual", "dual_residual"});
  for (const auto& run : runs) {
    for (const auto& r : run.trace.records) {
      csv::write_row(out, {std::to_string(run.tasks), std::to_string(r.k), csv::fmt(r.objective),
                           csv::fmt(r.primal_residual), csv::fmt(r.constraint_residual),
                           csv::fmt(r.dual_residual)});
    }
  }
}

void write_entropy_csv(std::ostream& out, const std::vector<EntropyPair>& pairs) {
  csv::write_row(out, {"seed", "entropy_migration", "entropy_no_migration", "migrated"});
  for (const auto& p : pairs) {
    csv::write_row(out, {std::to_string(p.seed), csv::fmt(p.with_migration), csv::fmt(p.without_migration),
                         std::to_string(p.migrated)});
  }
}

}  // namespace edgecoop::sim
