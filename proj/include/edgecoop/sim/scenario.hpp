#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "edgecoop/admm.hpp"
#include "edgecoop/core_model.hpp"
#include "edgecoop/migration.hpp"

namespace edgecoop::sim {

enum class CacheStrategy { Cooperative, Random, None };
enum class AllocStrategy { Admm, Greedy };

const char* to_string(CacheStrategy s);
const char* to_string(AllocStrategy s);

/// One simulation setup. Ticks are one second long; sizes are in bits.
struct Scenario {
  std::size_t num_tasks = 5000;  // expected arrivals over the whole run
  std::size_t num_kinds = 50;
  std::size_t num_bs = 10;
  std::size_t num_groups = 3;
  double buffer_fraction = 0.3;  // of the catalog, per group
  double zipf_xi = 0.8;
  double coe = 0.5;
  std::uint64_t seed = 1;
  std::size_t ticks = 1000;

  std::size_t delta_t = 50;          // popularity window, ticks
  std::size_t prediction_steps = 1;  // windows ahead for the caching metric
  std::size_t model_horizon = 5;     // semi-Markov horizon, windows
  double hotspot = 0.5;              // share of arrivals landing in group 0

  double cell_size = 200.0;
  double f_min = 10e9;
  double f_max = 100e9;
  double bs_compute = 5e9;  // M_c per station per tick
  double storage_cap = 100e6;
  double u_min = 5e3;
  double u_max = 10e3;
  double cycles_per_bit = 18000.0;
  double result_fraction_min = 0.1;
  double result_fraction_max = 0.5;
  double t_max_min = 15.0;
  double t_max_max = 30.0;

  core::ChannelModel channel;
  double alpha1 = 0.5;
  migration::RewardConfig rewards;
  double q_beta = 0.1;
  double q_gamma = 0.8;
  double congestion_alpha = 1.0;
  migration::EpsilonSchedule epsilon;
  admm::SolverConfig solver;

  CacheStrategy cache = CacheStrategy::Cooperative;
  bool migration = true;
  AllocStrategy alloc = AllocStrategy::Admm;

  void validate() const;
};

/// Applies one key=value setting. Keys match the CLI flag names without the
/// leading dashes. Throws std::invalid_argument for unknown keys or bad values.
void set_field(Scenario& s, std::string_view key, std::string_view value);

/// Reads key=value lines; '#' starts a comment.
Scenario read_scenario(std::istream& in, Scenario base = {});

/// Writes every key in the order read_scenario accepts them.
void write_scenario(std::ostream& out, const Scenario& s);

}  // namespace edgecoop::sim
