#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "edgecoop/migration.hpp"
#include "q_oracle.hpp"

using namespace edgecoop::migration;

TEST_CASE("task share and entropy") {
  const std::vector<double> load{2, 2, 4};
  CHECK(task_share(load, 2) == 0.5);
  const std::vector<double> one{0, 5, 0};
  CHECK(task_share(one, 1) == 1.0);
  CHECK(task_share(one, 0) == 0.0);
  CHECK(entropy(one) == 0.0);
  const std::vector<double> flat{3, 3, 3};
  CHECK(entropy(flat) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  const std::vector<double> mixed{1, 1, 2};
  const double by_hand = -(0.25 * std::log(0.25) * 2 + 0.5 * std::log(0.5));
  CHECK(entropy(mixed) == doctest::Approx(by_hand).epsilon(1e-15));
  CHECK(entropy(mixed) == doctest::Approx(1.0397).epsilon(1e-4));
  const std::vector<double> none{0, 0};
  CHECK_THROWS_AS(entropy(none), std::domain_error);
  CHECK_THROWS_AS(task_share(none, 0), std::domain_error);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> l(4);
    for (auto& v : l) v = static_cast<double>(rng() % 20);
    l[0] += 1;
    double s = 0;
    for (std::size_t g = 0; g < 4; ++g) s += task_share(l, g);
    CHECK(s == doctest::Approx(1.0));
    CHECK(entropy(l) >= 0.0);
    CHECK(entropy(l) <= std::log(4.0) + 1e-12);
  }
}

TEST_CASE("q_update first step and decay") {
  auto p = QPolicy::uniform(2);
  const GroupState s{Phase::Process, true};
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(q_update(p, 0, s, Action::Transmit, 3.0, zeros) == doctest::Approx(0.1 * 3.0));
  p.at(1, s, Action::Detect) = 5.0;
  CHECK(q_update(p, 1, s, Action::Detect, 0.0, zeros) == doctest::Approx(0.9 * 5.0));
  p.weights[0] = {0.3, 0.3};
  CHECK_THROWS_AS(q_update(p, 0, s, Action::Detect, 1.0, zeros), std::invalid_argument);
}

TEST_CASE("q_update: two groups, three steps by hand") {
  auto p = QPolicy::uniform(2, 0.1, 0.8);
  const GroupState s{Phase::Detect, false};
  double q0 = 0.0, q1 = 0.0;
  // Group 0 rewarded twice, group 1 once, each looking at the other's value.
  q_update(p, 0, s, Action::Detect, 1.0, values_at(p, s));
  q0 = 0.1 * 1.0;
  q_update(p, 1, s, Action::Process, 2.0, values_at(p, s));
  q1 = 0.1 * (2.0 + 0.8 * q0);
  q_update(p, 0, s, Action::Detect, 1.0, values_at(p, s));
  q0 = 0.9 * q0 + 0.1 * (1.0 + 0.8 * q1);
  CHECK(p.at(0, s, Action::Detect) == doctest::Approx(q0).epsilon(1e-15));
  CHECK(p.at(1, s, Action::Process) == doctest::Approx(q1).epsilon(1e-15));
}

TEST_CASE("q_update matches the scalar replay and stays bounded") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto [gap, largest] = oracle::compare_q_replay(seed, 3, 1000, 2.0);
    CHECK(gap <= 1e-12);
    CHECK(largest <= 2.0 / (1.0 - 0.8) + 1e-12);
  }
}

TEST_CASE("select_action branch frequencies") {
  auto p = QPolicy::uniform(1);
  const GroupState s{};
  p.at(0, s, Action::Transmit) = 1.0;
  std::mt19937_64 rng(9);
  for (int k = 0; k < 200; ++k) {
    const auto c = select_action(p, 0, s, 1.0, rng);
    CHECK(c.greedy);
    CHECK(c.action == Action::Transmit);
    CHECK_FALSE(select_action(p, 0, s, 0.0, rng).greedy);
  }
  std::size_t greedy = 0;
  for (int k = 0; k < 10000; ++k) greedy += select_action(p, 0, s, 0.7, rng).greedy;
  CHECK(std::abs(greedy / 10000.0 - 0.7) <= 0.02);
  std::size_t flipped = 0;
  for (int k = 0; k < 10000; ++k) {
    flipped += select_action(p, 0, s, 0.7, rng, GreedyBranch::DeltaAboveEpsilon).greedy;
  }
  CHECK(std::abs(flipped / 10000.0 - 0.3) <= 0.02);
  CHECK_THROWS_AS(select_action(p, 0, s, 1.5, rng), std::invalid_argument);
}

TEST_CASE("greedy action ties go to the lowest action") {
  auto p = QPolicy::uniform(1);
  CHECK(p.greedy(0, {}) == Action::Detect);
  p.at(0, {}, Action::Process) = 1.0;
  p.at(0, {}, Action::Transmit) = 1.0;
  CHECK(p.greedy(0, {}) == Action::Process);
}

TEST_CASE("epsilon ramp") {
  EpsilonSchedule e;
  CHECK(e.at(0, 100) == doctest::Approx(0.1));
  CHECK(e.at(100, 100) == doctest::Approx(0.95));
  CHECK(e.at(50, 100) == doctest::Approx(0.525));
}

TEST_CASE("apply_action reward cases") {
  const RewardConfig r;
  World w(2);
  w.deadline_ticks = 5;
  w.groups[0] = {0, 4, 10};
  auto o = apply_action(w, 0, Action::Process, r, {});
  CHECK(o.reward == r.r_process);
  CHECK(o.processed == 4);
  CHECK(o.next == GroupState{Phase::Process, false});

  // Congested but drains within the deadline: success is penalised.
  w.groups[0] = {0, 30, 10};
  o = apply_action(w, 0, Action::Process, r, {});
  CHECK(o.success);
  CHECK(o.reward == -r.r_process2);

  // Congested and too long to drain.
  w.groups[0] = {0, 100, 10};
  o = apply_action(w, 0, Action::Process, r, {});
  CHECK_FALSE(o.success);
  CHECK(o.reward == 0.0);

  // Not congested, nothing to process.
  w.groups[0] = {3, 0, 10};
  o = apply_action(w, 0, Action::Process, r, {});
  CHECK(o.reward == -r.r_process1);

  o = apply_action(w, 0, Action::Detect, r, {});
  CHECK(o.reward == r.r_detect);
  CHECK(w.groups[0].queued == 3);
  CHECK(w.groups[0].incoming == 0);

  w.groups[0] = {30, 0, 10};
  o = apply_action(w, 0, Action::Detect, r, {});
  CHECK(o.reward == -r.r_detect);
  CHECK(o.next.congested);
}

TEST_CASE("transmit conserves tasks and picks the best uncongested neighbour") {
  const RewardConfig r;
  World w(3);
  w.groups[0] = {8, 17, 10};
  w.groups[1] = {0, 2, 10};
  w.groups[2] = {0, 1, 10};
  const std::vector<double> feedback{0.0, 0.5, 0.9};
  const auto before = w.total();
  auto o = apply_action(w, 0, Action::Transmit, r, feedback);
  CHECK(o.reward == r.r_transmit);
  REQUIRE(o.target.has_value());
  CHECK(*o.target == 2);
  CHECK(o.moved == 15);
  CHECK(w.groups[0].held() == 10);
  CHECK(w.groups[2].incoming == 15);
  CHECK(w.total() == before);

  // Nothing above the threshold: nothing moves and no reward.
  o = apply_action(w, 1, Action::Transmit, r, feedback);
  CHECK(o.moved == 0);
  CHECK(o.reward == 0.0);

  // Every neighbour congested.
  World full(2);
  full.groups[0] = {50, 0, 10};
  full.groups[1] = {50, 0, 10};
  o = apply_action(full, 0, Action::Transmit, r, {});
  CHECK_FALSE(o.target.has_value());
  CHECK(full.total() == 100);
}

TEST_CASE("episode basics") {
  World w(3);
  for (auto& g : w.groups) g.capacity = 5;
  const std::vector<double> means{3, 1, 1};
  MigrationConfig cfg;
  auto ep = run_migration_episode(w, QPolicy::uniform(3), 1, means, cfg, 1);
  CHECK(ep.trace.size() == 3);

  cfg.rewards = {0, 0, 0, 0, 0};
  ep = run_migration_episode(w, QPolicy::uniform(3), 200, means, cfg, 2);
  for (const auto& t : ep.policy.q) {
    for (double v : t) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(run_migration_episode(w, QPolicy::uniform(3), 0, means, cfg, 2), std::invalid_argument);
}

TEST_CASE("episode invariants: conservation, bounded entropy and Q, monotone F_max") {
  World w(3);
  for (auto& g : w.groups) g.capacity = 6;
  const std::vector<double> means{9, 2, 2};
  MigrationConfig cfg;
  const auto ep = run_migration_episode(w, QPolicy::uniform(3), 600, means, cfg, 7);
  double last_fmax = 0.0;
  for (const auto& row : ep.trace) {
    if (row.entropy) {
      CHECK(*row.entropy >= 0.0);
      CHECK(*row.entropy <= std::log(3.0) + 1e-12);
    }
    CHECK(row.f_max >= last_fmax);
    last_fmax = row.f_max;
  }
  const double bound = cfg.rewards.max_abs() / (1.0 - ep.policy.gamma);
  for (const auto& t : ep.policy.q) {
    for (double v : t) CHECK(std::abs(v) <= bound);
  }

  // Conservation across one tick without arrivals: only processing removes tasks.
  World c(3);
  c.groups = {{12, 20, 5}, {0, 3, 5}, {4, 0, 5}};
  Controller ctl(QPolicy::uniform(3), cfg);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto before = c.total();
    const auto out = ctl.step(c, static_cast<std::size_t>(t), 50, rng);
    std::size_t processed = 0;
    for (const auto& o : out) processed += o.processed;
    CHECK(c.total() + processed == before);
  }
}

TEST_CASE("always processing while congested drives that Q negative") {
  auto p = QPolicy::uniform(2);
  World w(2);
  w.groups[0] = {0, 1000, 10};
  w.groups[1] = {0, 1000, 10};
  w.deadline_ticks = 1000;
  const RewardConfig r;
  for (int k = 0; k < 50; ++k) {
    w.refresh();
    const auto s = w.states[0];
    const auto vals = values_at(p, s);
    const auto o = apply_action(w, 0, Action::Process, r, {});
    REQUIRE(o.success);
    q_update(p, 0, s, Action::Process, o.reward, vals);
    w.groups[0].queued += 10;
  }
  CHECK(p.at(0, {Phase::Process, true}, Action::Process) < 0.0);
}

TEST_CASE("migration balances a hotspot") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    World w(3);
    for (auto& g : w.groups) g.capacity = 6;
    const std::vector<double> means{8, 2, 2};
    MigrationConfig on;
    MigrationConfig off;
    off.enabled = false;
    const auto a = run_migration_episode(w, QPolicy::uniform(3), 1000, means, on, seed);
    const auto b = run_migration_episode(w, QPolicy::uniform(3), 1000, means, off, seed);
    wins += mean_entropy(a.trace) >= mean_entropy(b.trace);
  }
  CHECK(wins >= 9);
}

TEST_CASE("trace CSV header") {
  World w(2);
  const std::vector<double> means{1, 1};
  const auto ep = run_migration_episode(w, QPolicy::uniform(2), 2, means, MigrationConfig{}, 1);
  std::ostringstream os;
  write_trace_csv(os, ep.trace);
  CHECK(os.str().rfind("t,group_id,state,action,reward,num_tasks,entropy,f_max\n", 0) == 0);
}
