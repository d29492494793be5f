#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace edgecoop::migration {

enum class Phase : std::uint8_t { Detect = 0, Process = 1, Transmit = 2 };
enum class Action : std::uint8_t { Detect = 0, Process = 1, Transmit = 2 };

inline constexpr std::size_t kNumActions = 3;
inline constexpr std::size_t kNumStates = 6;

/// Phase of the group's last action plus its congestion flag.
struct GroupState {
  Phase phase = Phase::Detect;
  bool congested = false;

  std::size_t index() const { return static_cast<std::size_t>(phase) * 2 + (congested ? 1 : 0); }
  static GroupState from_index(std::size_t index);
  std::string name() const;
  bool operator==(const GroupState&) const = default;
};

const char* to_string(Action a);

/// Reward magnitudes; signs are applied per action outcome.
struct RewardConfig {
  double r_detect = 1.0;
  double r_transmit = 1.0;
  double r_process = 2.0;
  double r_process1 = 1.0;
  double r_process2 = 1.0;

  void validate() const;
  double max_abs() const;
};

/// Per-group Q tables with cooperative value sharing weights.
struct QPolicy {
  double beta = 0.1;
  double gamma = 0.8;
  /// weights[g][n]: weight group g puts on group n's value.
  std::vector<std::vector<double>> weights;
  std::vector<std::array<double, kNumStates * kNumActions>> q;

  /// Zero tables; each group weighs the other groups equally (itself when alone).
  static QPolicy uniform(std::size_t num_groups, double beta = 0.1, double gamma = 0.8);

  std::size_t num_groups() const { return q.size(); }
  double& at(std::size_t g, GroupState s, Action a) {
    return q[g][s.index() * kNumActions + static_cast<std::size_t>(a)];
  }
  double at(std::size_t g, GroupState s, Action a) const {
    return q[g][s.index() * kNumActions + static_cast<std::size_t>(a)];
  }
  /// max_a Q_g(s, a).
  double value(std::size_t g, GroupState s) const;
  /// argmax_a Q_g(s, a), ties to the lowest action.
  Action greedy(std::size_t g, GroupState s) const;
  void validate() const;
};

/// num_g / sum(num). Throws std::domain_error on an all-zero load.
double task_share(std::span<const double> load, std::size_t g);

/// Natural-log entropy of the load shares. Throws std::domain_error on an all-zero load.
double entropy(std::span<const double> load);

/// Q_g(s,a) <- (1-beta) Q_g(s,a) + beta (r + gamma sum_n f_g(n) V_n(s)).
/// `values[n]` is V_n(s) for every group n. Returns the new entry.
double q_update(QPolicy& policy, std::size_t g, GroupState s, Action a, double reward,
                std::span<const double> values);

/// V_n(s) for every group n.
std::vector<double> values_at(const QPolicy& policy, GroupState s);

/// Which side of the delta draw picks the learned action. The default branch
/// takes the learned action when delta <= eps_t; the conventional one explores
/// when delta <= eps_t.
enum class GreedyBranch { DeltaBelowEpsilon, DeltaAboveEpsilon };

struct ActionChoice {
  Action action = Action::Detect;
  bool greedy = false;
};

ActionChoice select_action(const QPolicy& policy, std::size_t g, GroupState s, double epsilon_t,
                           std::mt19937_64& rng,
                           GreedyBranch branch = GreedyBranch::DeltaBelowEpsilon);

/// Linear ramp from eps_min at t=0 to eps_max at t=T.
struct EpsilonSchedule {
  double eps_min = 0.1;
  double eps_max = 0.95;
  double at(std::size_t t, std::size_t horizon) const;
};

/// Task counts of one group, in tasks. `incoming` have arrived but are not
/// yet detected; `queued` wait for processing.
struct GroupLoad {
  std::size_t incoming = 0;
  std::size_t queued = 0;
  std::size_t capacity = 1;  // tasks processed per tick
  std::size_t held() const { return incoming + queued; }
};

struct World {
  std::vector<GroupLoad> groups;
  std::vector<GroupState> states;
  double alpha = 1.0;            // congestion threshold multiplier
  double deadline_ticks = 20.0;  // processing succeeds if the queue drains in time

  explicit World(std::size_t num_groups = 0) : groups(num_groups), states(num_groups) {}
  bool congested(std::size_t g) const;
  std::vector<double> load() const;
  std::size_t total() const;
  /// Recomputes every group's congestion flag, keeping phases.
  void refresh();
};

struct Outcome {
  Action action = Action::Detect;
  double reward = 0.0;
  GroupState next;
  std::size_t moved = 0;
  std::optional<std::size_t> target;
  std::size_t processed = 0;
  bool success = false;
};

/// Executes one action for group g. Transmit picks, among the other groups
/// that are not congested, the one with the largest `feedback` value (ties to
/// the lower id) and sends it the group's excess above alpha * capacity.
Outcome apply_action(World& world, std::size_t g, Action action, const RewardConfig& rewards,
                     std::span<const double> feedback);

struct MigrationConfig {
  RewardConfig rewards;
  EpsilonSchedule schedule;
  GreedyBranch branch = GreedyBranch::DeltaBelowEpsilon;
  bool enabled = true;  // false replaces transmit with process
};

struct TraceRow {
  std::size_t t = 0;
  std::size_t group = 0;
  GroupState state;
  Action action = Action::Detect;
  double reward = 0.0;
  std::size_t num_tasks = 0;
  std::optional<double> entropy;  // absent when no group holds tasks
  double f_max = 0.0;
};

/// One controller per group sharing a policy. Each tick reads a snapshot of
/// every group's values, acts in ascending group order, then learns.
class Controller {
 public:
  Controller(QPolicy policy, MigrationConfig config);

  /// Acts for every group once. Arrivals for tick t must already be in the world.
  std::vector<Outcome> step(World& world, std::size_t t, std::size_t horizon, std::mt19937_64& rng,
                            std::vector<TraceRow>* trace = nullptr);

  const QPolicy& policy() const { return policy_; }
  double f_max() const { return f_max_; }

 private:
  QPolicy policy_;
  MigrationConfig config_;
  double f_max_ = 0.0;
};

struct Episode {
  std::vector<TraceRow> trace;
  QPolicy policy;
  World world;
};

/// Ticks 1..T with Poisson arrivals of the given per-group means.
Episode run_migration_episode(World world, QPolicy policy, std::size_t horizon,
                              std::span<const double> arrival_means, const MigrationConfig& config,
                              std::uint64_t seed);

/// Mean entropy over the ticks that had any load.
double mean_entropy(std::span<const TraceRow> trace);

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace);

}  // namespace edgecoop::migration
