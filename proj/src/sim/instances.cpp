#include "edgecoop/sim/instances.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace edgecoop::sim {

admm::AllocationProblem random_allocation_problem(std::uint64_t seed, std::size_t num_stations,
                                                  std::size_t num_tasks,
                                                  const InstanceOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<admm::StationSpec> stations(num_stations);
  std::vector<core::Position> where(num_stations);
  for (std::size_t i = 0; i < num_stations; ++i) {
    stations[i].id = static_cast<core::StationId>(i);
    // Station 0 is the macro station and gets the largest frequency.
    stations[i].f = i == 0 ? opts.f_max : between(opts.f_min, opts.f_max);
    stations[i].storage_cap = opts.storage_cap;
    where[i] = {between(0.0, opts.area), between(0.0, opts.area)};
  }
  where[0] = {opts.area / 2.0, opts.area / 2.0};

  struct Drawn {
    core::Task task;
    core::Position origin;
  };
  std::vector<Drawn> drawn(num_tasks);
  double demand = 0.0;
  for (std::size_t j = 0; j < num_tasks; ++j) {
    auto& t = drawn[j].task;
    t.id = static_cast<core::TaskId>(j);
    t.u = between(opts.u_min, opts.u_max);
    t.c = opts.cycles_per_bit * t.u;
    t.r = t.u * between(opts.result_fraction_min, opts.result_fraction_max);
    t.t_max = between(opts.t_max_min, opts.t_max_max);
    drawn[j].origin = {between(0.0, opts.area), between(0.0, opts.area)};
    demand += t.c;
  }

  double total_cap = 0.0;
  for (auto& s : stations) {
    s.compute_cap = opts.tight_capacity
                        ? demand * between(opts.capacity_fraction_min, opts.capacity_fraction_max)
                        : opts.compute_cap;
    total_cap += s.compute_cap;
  }
  if (opts.tight_capacity && total_cap < opts.capacity_slack * demand) {
    const double scale = opts.capacity_slack * demand / total_cap;
    for (auto& s : stations) s.compute_cap *= scale;
  }

  auto rate_to = [&](const core::Position& from, std::size_t i) {
    const double d = std::max(1.0, core::distance(from, where[i]));
    return core::shannon_rate(opts.channel, opts.channel.tx_power_user, d);
  };

  // Service order: priority against the nearest station.
  std::vector<core::PrioritizedTask> pri;
  for (const auto& d : drawn) {
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < num_stations; ++i) {
      if (core::distance(d.origin, where[i]) < core::distance(d.origin, where[nearest])) nearest = i;
    }
    pri.push_back({d.task, rate_to(d.origin, nearest), stations[nearest].f});
  }
  core::CostWeights w;
  w.coe = opts.coe;
  const auto ordered = core::order_by_priority(pri, opts.channel, w);

  Eigen::MatrixXd rates(static_cast<Eigen::Index>(num_stations), static_cast<Eigen::Index>(num_tasks));
  for (std::size_t j = 0; j < ordered.size(); ++j) {
    const auto& origin = drawn[ordered[j].id].origin;
    for (std::size_t i = 0; i < num_stations; ++i) {
      rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rate_to(origin, i);
    }
  }
  return admm::build_problem(stations, ordered, rates, opts.channel, opts.coe);
}

}  // namespace edgecoop::sim
