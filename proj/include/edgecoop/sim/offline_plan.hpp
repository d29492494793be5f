#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "edgecoop/caching.hpp"
#include "edgecoop/core_model.hpp"
#include "edgecoop/popularity.hpp"

namespace edgecoop::sim {

struct OfflinePlanOptions {
  std::size_t delta_t = 50;
  std::size_t model_horizon = 5;
  std::size_t prediction_steps = 1;
  double cycles_per_bit = 18000.0;
  double reference_distance = 50.0;  // user-to-station distance behind the miss cost
  core::ChannelModel channel;
};

struct OfflinePlan {
  caching::Plan plan;
  std::vector<popularity::SemiMarkovModel> models;
  Eigen::MatrixXd p;
  std::size_t windows = 0;
};

/// Plans one cooperating set of stations from a stats file with sections
///   [stations] id,x,y,space,f
///   [kinds]    id,size
///   [uploads]  tick,bs,kind,count
/// Ids must be 0..n-1. Every window up to the last upload is closed in turn,
/// and the placement uses the metric from the final window.
OfflinePlan plan_from_stats(std::istream& in, const OfflinePlanOptions& opts = {});

}  // namespace edgecoop::sim
