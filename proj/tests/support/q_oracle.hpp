#pragma once

// Scalar replay of the cooperative Q recurrence: keeps its own map of entries
// and applies q <- (1-b) q + b (r + g * sum_n w_n v_n) one step at a time.

#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "edgecoop/migration.hpp"

namespace oracle {

struct QStep {
  std::size_t group;
  std::size_t state;
  std::size_t action;
  double reward;
  std::vector<double> values;
};

struct QReplay {
  double beta;
  double gamma;
  std::vector<std::vector<double>> weights;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> q;

  double apply(const QStep& s) {
    double shared = 0.0;
    for (std::size_t n = 0; n < s.values.size(); ++n) shared += weights[s.group][n] * s.values[n];
    double& e = q[{s.group, s.state, s.action}];
    e = (1.0 - beta) * e + beta * (s.reward + gamma * shared);
    return e;
  }
};

/// Runs `steps` random updates through both implementations. Values fed to
/// each step are the library's current V_n(s), so the replay follows the
/// same trajectory. Returns the worst absolute gap and the largest |Q|.
inline std::pair<double, double> compare_q_replay(std::uint64_t seed, std::size_t groups,
                                                  std::size_t steps, double r_max) {
  using namespace edgecoop::migration;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> reward(-r_max, r_max);
  std::uniform_int_distribution<std::size_t> pick_g(0, groups - 1), pick_s(0, kNumStates - 1),
      pick_a(0, kNumActions - 1);
  QPolicy policy = QPolicy::uniform(groups);
  QReplay replay{policy.beta, policy.gamma, policy.weights, {}};
  double worst = 0.0, largest = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    QStep st{pick_g(rng), pick_s(rng), pick_a(rng), reward(rng), {}};
    const auto s = GroupState::from_index(st.state);
    st.values = values_at(policy, s);
    const double lib = q_update(policy, st.group, s, static_cast<Action>(st.action), st.reward, st.values);
    const double ref = replay.apply(st);
    worst = std::max(worst, std::abs(lib - ref));
    for (const auto& table : policy.q) {
      for (double v : table) largest = std::max(largest, std::abs(v));
    }
  }
  return {worst, largest};
}

}  // namespace oracle
