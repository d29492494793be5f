#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "edgecoop/core_model.hpp"

namespace edgecoop::caching {

/// Binary placement of task kinds at stations plus per-station space use.
class CacheMatrix {
 public:
  CacheMatrix() = default;
  CacheMatrix(std::size_t num_stations, std::size_t num_kinds, std::vector<double> space);

  std::size_t num_stations() const { return space_.size(); }
  std::size_t num_kinds() const { return kinds_; }
  bool cached(std::size_t i, std::size_t j) const { return ca_[i * kinds_ + j] != 0; }
  double used(std::size_t i) const { return used_[i]; }
  double space(std::size_t i) const { return space_[i]; }
  bool fits(std::size_t i, double size) const { return used_[i] + size <= space_[i]; }

  /// Throws std::invalid_argument if already cached or over capacity.
  void place(std::size_t i, std::size_t j, double size);
  std::size_t count() const;

 private:
  std::size_t kinds_ = 0;
  std::vector<std::uint8_t> ca_;
  std::vector<double> used_;
  std::vector<double> space_;
};

/// Inter-station distances (m) and transfer rates (bits/s).
struct TransferGraph {
  Eigen::MatrixXd dis;
  Eigen::MatrixXd rate;

  std::size_t size() const { return static_cast<std::size_t>(dis.rows()); }
  void validate() const;

  /// Rates from the Shannon model at the station transmit power.
  static TransferGraph from_positions(std::span<const core::Position> where,
                                      const core::ChannelModel& channel);
};

/// Everything the planner needs for one cooperating set of stations.
struct PlanningInput {
  TransferGraph graph;
  std::vector<double> kind_size;  // u_j, bits
  Eigen::MatrixXd p;              // caching metric, stations x kinds
  Eigen::MatrixXd miss_cost;      // seconds when no station holds the kind
  std::vector<double> space;      // s_i, bits

  std::size_t num_stations() const { return space.size(); }
  std::size_t num_kinds() const { return kind_size.size(); }
  void validate() const;
};

enum class TransferCase { Local = 1, Neighbor = 2, Uncached = 3 };

struct TransferCost {
  TransferCase kind = TransferCase::Uncached;
  double seconds = 0.0;
  std::optional<std::size_t> holder;
};

/// Closest station other than i that holds kind j; ties go to the lower id.
std::optional<std::size_t> nearest_holder(const CacheMatrix& ca, const TransferGraph& graph,
                                          std::size_t j, std::size_t i);

TransferCost transfer_cost(const CacheMatrix& ca, const TransferGraph& graph, double kind_size,
                           double miss_cost, std::size_t j, std::size_t i);

/// Expected transfer time sum_i sum_j p_ij * d_ij under the placement.
double objective(const CacheMatrix& ca, const PlanningInput& in);

/// Decrease of `objective` from adding kind j at station i; zero when the
/// kind is already there or does not fit.
double placement_benefit(const CacheMatrix& ca, const PlanningInput& in, std::size_t j,
                         std::size_t i);

struct CacheBenefit {
  Eigen::MatrixXd g;                            // stations x kinds
  std::vector<std::vector<std::size_t>> b_sets; // per kind, stations not holding it
};

CacheBenefit benefits(const CacheMatrix& ca, const PlanningInput& in);

struct Placement {
  std::size_t station = 0;
  std::size_t kind = 0;
  double benefit = 0.0;
};

struct Plan {
  CacheMatrix cache;
  std::vector<Placement> steps;
};

/// Repeatedly places the largest-benefit (station, kind) pair, ties to the
/// lowest (station, kind), until no benefit is positive or no space is left.
Plan greedy_plan(const PlanningInput& in);

enum class LookupKind { Hit, NeighborHit, Miss };

struct LookupResult {
  LookupKind kind = LookupKind::Miss;
  std::optional<std::size_t> holder;
};

LookupResult lookup(const CacheMatrix& ca, const TransferGraph& graph, std::size_t j, std::size_t i);

/// Baseline placement: each station draws kinds uniformly at random and keeps
/// those that fit, until nothing else can.
CacheMatrix random_fill(std::span<const double> space, std::span<const double> kind_size,
                        std::mt19937_64& rng);

void write_cache_csv(std::ostream& out, const CacheMatrix& ca);
/// Rebuilds a placement from (bs_id, kind_id) rows.
CacheMatrix read_cache_csv(std::istream& in, std::span<const double> space,
                           std::span<const double> kind_size);

}  // namespace edgecoop::caching
