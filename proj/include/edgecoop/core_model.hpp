#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace edgecoop::core {

using TaskId = std::uint32_t;
using StationId = std::uint32_t;
using GroupId = std::uint32_t;
using KindId = std::uint32_t;

/// An offloadable job. Sizes in bits, work in CPU cycles, deadline in seconds.
struct Task {
  TaskId id = 0;
  double u = 0.0;      // input size
  double c = 0.0;      // required cycles
  double r = 0.0;      // result size
  double t_max = 0.0;  // deadline
  KindId kind = 0;

  bool valid() const noexcept { return u > 0.0 && c > 0.0 && r >= 0.0 && t_max > 0.0; }
};

enum class StationRole { Macro, Small };

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double distance(Position a, Position b) noexcept;

struct BaseStation {
  StationId id = 0;
  StationRole role = StationRole::Small;
  double f = 0.0;           // CPU frequency, cycles/s
  double compute_cap = 0.0; // M_c, cycles available per allocation round
  double storage_cap = 0.0; // M_u, bits
  double cache_space = 0.0; // s, bits
  double cache_used = 0.0;  // r, bits
  Position position;
  std::vector<TaskId> queue;
};

struct Group {
  GroupId id = 0;
  StationId mbs = 0;
  std::vector<StationId> sbs;
  std::size_t num_tasks = 0;
};

/// Radio and device constants. Defaults follow the reference parameter table
/// (20 MHz, 0.1 W user, 40 W station, -172 dBm/Hz, exponent 4, kappa 1e-26).
struct ChannelModel {
  double bandwidth = 20e6;
  double tx_power_user = 0.1;
  double tx_power_bs = 40.0;
  double noise_psd = 6.309573444801943e-21;  // -172 dBm/Hz in W/Hz
  double path_loss_exp = 4.0;
  double kappa = 1e-26;
  double f_local = 1e9;

  void validate() const;
};

struct CostWeights {
  double coe = 0.5;
  double alpha1 = 0.5;

  void validate() const;
};

/// Converts a power spectral density from dBm/Hz to W/Hz.
double dbm_per_hz_to_watts(double dbm) noexcept;

/// Shannon rate B*log2(1 + P*d^-n / (N0*B)) in bits/s.
double shannon_rate(const ChannelModel& ch, double tx_power, double distance);

double exec_time(const Task& task, double f);
double upload_time(const Task& task, double rate);
double down_time(const Task& task, double rate);

/// Waiting time behind `ahead`: their execution plus their uploads.
/// `rates[k]` is the upload rate of `ahead[k]`.
double queue_time(std::span<const Task> ahead, std::span<const double> rates, double f);

/// queue + execute + download for a task served at `bs`. The last entry of
/// `rates` belongs to `task`; the preceding ones match `ahead`.
double total_delay(const Task& task, std::span<const Task> ahead, const BaseStation& bs,
                   std::span<const double> rates);

/// Upload energy plus computation energy, P_U*u/rate + kappa*f^2*c.
double energy(const Task& task, double rate, double f, const ChannelModel& ch);

/// Offloading priority: weighted local-vs-remote speedup plus inverse upload
/// time. Larger values are served first.
double priority(const Task& task, double rate, double f_remote, const ChannelModel& ch,
                const CostWeights& w);

struct PrioritizedTask {
  Task task;
  double rate = 0.0;
  double f_remote = 0.0;
};

/// Sorts by descending priority, ties by ascending task id.
std::vector<Task> order_by_priority(std::span<const PrioritizedTask> tasks,
                                    const ChannelModel& ch, const CostWeights& w);

}  // namespace edgecoop::core
