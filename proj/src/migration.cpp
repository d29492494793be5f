#include "edgecoop/migration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "edgecoop/csv.hpp"

namespace edgecoop::migration {

GroupState GroupState::from_index(std::size_t index) {
  if (index >= kNumStates) throw std::invalid_argument("group state index out of range");
  return {static_cast<Phase>(index / 2), index % 2 == 1};
}

std::string GroupState::name() const {
  static const char* phases[] = {"detect", "process", "transmit"};
  std::string s = phases[static_cast<std::size_t>(phase)];
  if (congested) s += "+congested";
  return s;
}

const char* to_string(Action a) {
  switch (a) {
    case Action::Detect: return "detect";
    case Action::Process: return "process";
    case Action::Transmit: return "transmit";
  }
  return "?";
}

void RewardConfig::validate() const {
  for (double r : {r_detect, r_transmit, r_process, r_process1, r_process2}) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("reward magnitudes must be finite and >= 0");
  }
}

double RewardConfig::max_abs() const {
  return std::max({r_detect, r_transmit, r_process, r_process1, r_process2});
}

QPolicy QPolicy::uniform(std::size_t num_groups, double beta, double gamma) {
  if (num_groups == 0) throw std::invalid_argument("QPolicy needs at least one group");
  QPolicy p;
  p.beta = beta;
  p.gamma = gamma;
  p.q.assign(num_groups, {});
  p.weights.assign(num_groups, std::vector<double>(num_groups, 0.0));
  for (std::size_t g = 0; g < num_groups; ++g) {
    for (std::size_t n = 0; n < num_groups; ++n) {
      if (num_groups == 1) p.weights[g][n] = 1.0;
      else if (n != g) p.weights[g][n] = 1.0 / static_cast<double>(num_groups - 1);
    }
  }
  p.validate();
  return p;
}

double QPolicy::value(std::size_t g, GroupState s) const {
  double best = at(g, s, Action::Detect);
  for (std::size_t a = 1; a < kNumActions; ++a) best = std::max(best, at(g, s, static_cast<Action>(a)));
  return best;
}

Action QPolicy::greedy(std::size_t g, GroupState s) const {
  std::size_t best = 0;
  for (std::size_t a = 1; a < kNumActions; ++a) {
    if (at(g, s, static_cast<Action>(a)) > at(g, s, static_cast<Action>(best))) best = a;
  }
  return static_cast<Action>(best);
}

void QPolicy::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must be in (0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0,1)");
  if (weights.size() != q.size()) throw std::invalid_argument("one weight row per group required");
  for (const auto& row : weights) {
    if (row.size() != q.size()) throw std::invalid_argument("weight row has wrong length");
    double sum = 0.0;
    for (double w : row) {
      if (!(w >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to 1");
  }
}

double task_share(std::span<const double> load, std::size_t g) {
  if (g >= load.size()) throw std::invalid_argument("task_share: group out of range");
  const double total = std::accumulate(load.begin(), load.end(), 0.0);
  if (!(total > 0.0)) throw std::domain_error("task_share: no tasks in any group");
  return load[g] / total;
}

double entropy(std::span<const double> load) {
  const double total = std::accumulate(load.begin(), load.end(), 0.0);
  if (!(total > 0.0)) throw std::domain_error("entropy: no tasks in any group");
  double h = 0.0;
  for (double n : load) {
    if (n < 0.0) throw std::invalid_argument("entropy: negative load");
    if (n > 0.0) {
      const double p = n / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

double q_update(QPolicy& policy, std::size_t g, GroupState s, Action a, double reward,
                std::span<const double> values) {
  if (g >= policy.num_groups()) throw std::invalid_argument("q_update: group out of range");
  if (values.size() != policy.num_groups()) throw std::invalid_argument("q_update: one value per group required");
  const auto& w = policy.weights.at(g);
  double sum_w = 0.0;
  double shared = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    if (!(w[n] >= 0.0)) throw std::invalid_argument("q_update: negative weight");
    sum_w += w[n];
    shared += w[n] * values[n];
  }
  if (std::abs(sum_w - 1.0) > 1e-9) throw std::invalid_argument("q_update: weights must sum to 1");
  double& entry = policy.at(g, s, a);
  entry = (1.0 - policy.beta) * entry + policy.beta * (reward + policy.gamma * shared);
  return entry;
}

std::vector<double> values_at(const QPolicy& policy, GroupState s) {
  std::vector<double> v(policy.num_groups());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = policy.value(n, s);
  return v;
}

ActionChoice select_action(const QPolicy& policy, std::size_t g, GroupState s, double epsilon_t,
                           std::mt19937_64& rng, GreedyBranch branch) {
  if (!(epsilon_t >= 0.0 && epsilon_t <= 1.0)) throw std::invalid_argument("epsilon_t must be in [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double delta = unit(rng);
  while (delta == 0.0) delta = unit(rng);
  const bool low = delta <= epsilon_t;
  const bool greedy = branch == GreedyBranch::DeltaBelowEpsilon ? low : !low;
  if (greedy) return {policy.greedy(g, s), true};
  std::uniform_int_distribution<std::size_t> pick(0, kNumActions - 1);
  return {static_cast<Action>(pick(rng)), false};
}

double EpsilonSchedule::at(std::size_t t, std::size_t horizon) const {
  if (horizon == 0) return eps_max;
  const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(horizon));
  return eps_min + (eps_max - eps_min) * frac;
}

bool World::congested(std::size_t g) const {
  const auto& l = groups.at(g);
  return static_cast<double>(l.held()) > alpha * static_cast<double>(l.capacity);
}

std::vector<double> World::load() const {
  std::vector<double> v(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) v[g] = static_cast<double>(groups[g].held());
  return v;
}

std::size_t World::total() const {
  std::size_t n = 0;
  for (const auto& l : groups) n += l.held();
  return n;
}

void World::refresh() {
  states.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) states[g].congested = congested(g);
}

Outcome apply_action(World& world, std::size_t g, Action action, const RewardConfig& rewards,
                     std::span<const double> feedback) {
  if (g >= world.groups.size()) throw std::invalid_argument("apply_action: group out of range");
  auto& me = world.groups[g];
  const bool congested = world.congested(g);
  Outcome out;
  out.action = action;

  switch (action) {
    case Action::Detect:
      me.queued += me.incoming;
      me.incoming = 0;
      out.reward = congested ? -rewards.r_detect : rewards.r_detect;
      break;
    case Action::Transmit: {
      const auto keep = static_cast<std::size_t>(std::floor(world.alpha * static_cast<double>(me.capacity)));
      const std::size_t excess = me.held() > keep ? me.held() - keep : 0;
      std::optional<std::size_t> target;
      double best = 0.0;
      for (std::size_t n = 0; n < world.groups.size(); ++n) {
        if (n == g || world.congested(n)) continue;
        const double fb = n < feedback.size() ? feedback[n] : 0.0;
        if (!target || fb > best) {
          target = n;
          best = fb;
        }
      }
      if (excess > 0 && target) {
        const std::size_t from_incoming = std::min(excess, me.incoming);
        me.incoming -= from_incoming;
        me.queued -= excess - from_incoming;
        world.groups[*target].incoming += excess;
        out.moved = excess;
        out.target = target;
        out.reward = rewards.r_transmit;
      }
      break;
    }
    case Action::Process: {
      const std::size_t before = me.queued;
      out.processed = std::min(me.queued, me.capacity);
      me.queued -= out.processed;
      const double drain = std::ceil(static_cast<double>(before) / static_cast<double>(me.capacity));
      out.success = out.processed > 0 && drain <= world.deadline_ticks;
      if (!congested) out.reward = out.success ? rewards.r_process : -rewards.r_process1;
      else out.reward = out.success ? -rewards.r_process2 : 0.0;
      break;
    }
  }
  out.next = {static_cast<Phase>(action), world.congested(g)};
  world.states.resize(world.groups.size());
  world.states[g] = out.next;
  return out;
}

Controller::Controller(QPolicy policy, MigrationConfig config)
    : policy_(std::move(policy)), config_(config) {
  policy_.validate();
  config_.rewards.validate();
}

std::vector<Outcome> Controller::step(World& world, std::size_t t, std::size_t horizon,
                                      std::mt19937_64& rng, std::vector<TraceRow>* trace) {
  const std::size_t n = world.groups.size();
  if (n != policy_.num_groups()) throw std::invalid_argument("world and policy disagree on group count");
  world.refresh();
  const std::vector<GroupState> observed = world.states;
  // Snapshot of every group's values before anyone acts this tick.
  std::vector<std::vector<double>> shared(n);
  std::vector<double> feedback(n);
  for (std::size_t g = 0; g < n; ++g) {
    shared[g] = values_at(policy_, observed[g]);
    feedback[g] = policy_.value(g, observed[g]);
  }

  const double eps = config_.schedule.at(t, horizon);
  std::vector<Outcome> outcomes(n);
  for (std::size_t g = 0; g < n; ++g) {
    auto choice = select_action(policy_, g, observed[g], eps, rng, config_.branch);
    if (!config_.enabled && choice.action == Action::Transmit) choice.action = Action::Process;
    outcomes[g] = apply_action(world, g, choice.action, config_.rewards, feedback);
  }

  std::optional<double> f_cur;
  if (world.total() > 0) {
    const auto load = world.load();
    f_cur = entropy(load);
    f_max_ = std::max(f_max_, *f_cur);
  }
  for (std::size_t g = 0; g < n; ++g) {
    q_update(policy_, g, observed[g], outcomes[g].action, outcomes[g].reward, shared[g]);
    if (trace != nullptr) {
      trace->push_back({t, g, observed[g], outcomes[g].action, outcomes[g].reward,
                        world.groups[g].held(), f_cur, f_max_});
    }
  }
  return outcomes;
}

Episode run_migration_episode(World world, QPolicy policy, std::size_t horizon,
                              std::span<const double> arrival_means, const MigrationConfig& config,
                              std::uint64_t seed) {
  if (horizon == 0) throw std::invalid_argument("episode needs T >= 1");
  if (arrival_means.size() != world.groups.size()) throw std::invalid_argument("one arrival mean per group required");
  std::mt19937_64 rng(seed);
  Controller ctl(std::move(policy), config);
  Episode ep;
  for (std::size_t t = 1; t <= horizon; ++t) {
    for (std::size_t g = 0; g < world.groups.size(); ++g) {
      if (arrival_means[g] > 0.0) {
        std::poisson_distribution<std::size_t> arrivals(arrival_means[g]);
        world.groups[g].incoming += arrivals(rng);
      }
    }
    ctl.step(world, t, horizon, rng, &ep.trace);
  }
  ep.policy = ctl.policy();
  ep.world = std::move(world);
  return ep;
}

double mean_entropy(std::span<const TraceRow> trace) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : trace) {
    // One row per group per tick carries the same entropy; count group 0 only.
    if (row.group == 0 && row.entropy) {
      sum += *row.entropy;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
  csv::write_row(out, {"t", "group_id", "state", "action", "reward", "num_tasks", "entropy", "f_max"});
  for (const auto& r : trace) {
    csv::write_row(out, {std::to_string(r.t), std::to_string(r.group), r.state.name(), to_string(r.action),
                         csv::fmt(r.reward), std::to_string(r.num_tasks),
                         r.entropy ? csv::fmt(*r.entropy) : std::string{}, csv::fmt(r.f_max)});
  }
}

}  // namespace edgecoop::migration
