#pragma once

#include <cstddef>
#include <cstdint>

#include "edgecoop/admm.hpp"
#include "edgecoop/core_model.hpp"

namespace edgecoop::sim {

/// Knobs for synthetic single-group allocation instances drawn from the
/// reference parameter ranges.
struct InstanceOptions {
  double coe = 0.5;
  double f_min = 10e9;
  double f_max = 100e9;
  double u_min = 5e3;
  double u_max = 10e3;
  double cycles_per_bit = 18000.0;
  double result_fraction_min = 0.1;
  double result_fraction_max = 0.5;
  double t_max_min = 15.0;
  double t_max_max = 30.0;
  double area = 200.0;
  /// Compute budget per station in cycles over a one-second window.
  double compute_cap = 5e9;
  /// Tight mode draws each station's budget as a fraction of the total demand
  /// instead, rescaled so the stations together hold `capacity_slack` times
  /// the demand. Capacity then binds on most instances.
  bool tight_capacity = false;
  double capacity_fraction_min = 0.25;
  double capacity_fraction_max = 1.5;
  double capacity_slack = 1.2;
  double storage_cap = 100e6;
  core::ChannelModel channel;
};

admm::AllocationProblem random_allocation_problem(std::uint64_t seed, std::size_t num_stations,
                                                  std::size_t num_tasks,
                                                  const InstanceOptions& opts = {});

}  // namespace edgecoop::sim
