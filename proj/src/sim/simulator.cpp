#include "edgecoop/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "edgecoop/csv.hpp"
#include "edgecoop/error.hpp"
#include "edgecoop/popularity.hpp"

namespace edgecoop::sim {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Hit: return "hit";
    case EventKind::NeighborHit: return "neighbor_hit";
    case EventKind::Miss: return "miss";
    case EventKind::Detect: return "detect";
    case EventKind::Migrate: return "migrate";
    case EventKind::Process: return "process";
    case EventKind::Drop: return "drop";
  }
  return "?";
}

Scenario baseline_random_cache(Scenario s) {
  s.cache = CacheStrategy::Random;
  return s;
}

Scenario baseline_no_migration(Scenario s) {
  s.migration = false;
  return s;
}

Scenario baseline_greedy_assign(Scenario s) {
  s.alloc = AllocStrategy::Greedy;
  return s;
}

namespace {

constexpr std::size_t kLadderClasses = 4;

struct Waiting {
  core::Task task;
  std::size_t origin = 0;  // global station id
  core::Position user;
  std::size_t arrived = 0;
};

struct GroupRuntime {
  std::vector<std::size_t> stations;  // global ids; front is the macro station
  caching::TransferGraph graph;
  caching::CacheMatrix cache;
  std::deque<Waiting> incoming;
  std::deque<Waiting> queue;
  std::size_t capacity = 1;
};

class Simulation {
 public:
  Simulation(const Scenario& s, const RunOptions& opts)
      : s_(s), opts_(opts), predictor_(s.num_bs, s.num_kinds, s.delta_t, s.model_horizon, kLadderClasses) {
    build_topology();
    build_kinds();
    init_caches();
    arrival_rng_.seed(stream(2));
    migration_rng_.seed(stream(4));
    world_ = migration::World(s.num_groups);
    world_.alpha = s.congestion_alpha;
    world_.deadline_ticks = 0.5 * (s.t_max_min + s.t_max_max);
    migration::MigrationConfig mc;
    mc.rewards = s.rewards;
    mc.schedule = s.epsilon;
    mc.enabled = s.migration;
    controller_.emplace(migration::QPolicy::uniform(s.num_groups, s.q_beta, s.q_gamma), mc);
  }

  MetricsFrame run() {
    for (std::size_t t = 1; t <= s_.ticks; ++t) tick(t);
    finish();
    return std::move(out_);
  }

 private:
  std::uint64_t stream(std::uint64_t k) const {
    std::seed_seq seq{static_cast<std::uint32_t>(s_.seed), static_cast<std::uint32_t>(s_.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::uint64_t v[1];
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    v[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return v[0];
  }

  void build_topology() {
    std::mt19937_64 rng(stream(1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    groups_.resize(s_.num_groups);
    stations_.resize(s_.num_bs);
    for (std::size_t i = 0; i < s_.num_bs; ++i) {
      const std::size_t g = i % s_.num_groups;
      auto& bs = stations_[i];
      bs.id = static_cast<core::StationId>(i);
      const double x0 = static_cast<double>(g) * s_.cell_size;
      if (i < s_.num_groups) {
        bs.role = core::StationRole::Macro;
        bs.f = s_.f_max;
        bs.position = {x0 + s_.cell_size / 2.0, s_.cell_size / 2.0};
      } else {
        bs.role = core::StationRole::Small;
        bs.f = s_.f_min + (s_.f_max - s_.f_min) * unit(rng);
        bs.position = {x0 + s_.cell_size * unit(rng), s_.cell_size * unit(rng)};
      }
      bs.compute_cap = s_.bs_compute;
      bs.storage_cap = s_.storage_cap;
      groups_[g].stations.push_back(i);
    }
    for (auto& g : groups_) {
      std::vector<core::Position> where;
      for (auto i : g.stations) where.push_back(stations_[i].position);
      g.graph = caching::TransferGraph::from_positions(where, s_.channel);
    }
  }

  void build_kinds() {
    std::mt19937_64 rng(stream(5));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    kind_size_.resize(s_.num_kinds);
    double mean_cycles = 0.0;
    for (auto& u : kind_size_) {
      u = std::round(s_.u_min + (s_.u_max - s_.u_min) * unit(rng));  // whole bits keep sums exact
      catalog_bits_ += u;
      mean_cycles += s_.cycles_per_bit * u / static_cast<double>(s_.num_kinds);
    }
    zipf_ = popularity::zipf_pmf(s_.zipf_xi, s_.num_kinds);
    for (auto& g : groups_) {
      const double cycles = s_.bs_compute * static_cast<double>(g.stations.size());
      g.capacity = std::max<std::size_t>(1, static_cast<std::size_t>(cycles / mean_cycles));
    }
  }

  std::vector<double> group_space(const GroupRuntime& g) const {
    const double per = s_.cache == CacheStrategy::None
                           ? 0.0
                           : s_.buffer_fraction * catalog_bits_ / static_cast<double>(g.stations.size());
    return std::vector<double>(g.stations.size(), per);
  }

  void init_caches() {
    std::mt19937_64 rng(stream(3));
    for (auto& g : groups_) {
      const auto space = group_space(g);
      if (s_.cache == CacheStrategy::Random) g.cache = caching::random_fill(space, kind_size_, rng);
      else g.cache = caching::CacheMatrix(g.stations.size(), s_.num_kinds, space);
    }
  }

  double rate(const core::Position& user, std::size_t station) const {
    const double d = std::max(1.0, core::distance(user, stations_[station].position));
    return core::shannon_rate(s_.channel, s_.channel.tx_power_user, d);
  }

  void event(std::size_t t, const Waiting& w, std::size_t group, std::size_t station, EventKind k) {
    if (opts_.keep_events) out_.events.push_back({t, w.task.id, group, station, w.task.kind, k});
  }

  void tick(std::size_t t) {
    TickMetrics m;
    m.t = t;
    drop_expired(t, m);
    arrive(t, m);
    migrate_and_process(t, m);
    if (s_.cache == CacheStrategy::Cooperative && t % s_.delta_t == 0) replan(t);

    std::vector<double> load(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      load[g] = static_cast<double>(groups_[g].incoming.size() + groups_[g].queue.size());
      m.held += groups_[g].incoming.size() + groups_[g].queue.size();
    }
    if (m.held > 0) m.entropy = migration::entropy(load);
    out_.ticks.push_back(m);
  }

  void drop_expired(std::size_t t, TickMetrics& m) {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      for (auto* dq : {&groups_[g].incoming, &groups_[g].queue}) {
        std::deque<Waiting> keep;
        for (auto& w : *dq) {
          if (static_cast<double>(t - w.arrived) >= w.task.t_max) {
            event(t, w, g, w.origin, EventKind::Drop);
            ++m.dropped;
          } else {
            keep.push_back(std::move(w));
          }
        }
        dq->swap(keep);
      }
    }
  }

  void arrive(std::size_t t, TickMetrics& m) {
    if (s_.num_tasks == 0) return;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::poisson_distribution<std::size_t> count(static_cast<double>(s_.num_tasks) /
                                                 static_cast<double>(s_.ticks));
    std::vector<double> share(groups_.size(), 1.0);
    if (groups_.size() > 1) {
      share.assign(groups_.size(), (1.0 - s_.hotspot) / static_cast<double>(groups_.size() - 1));
      share[0] = s_.hotspot;
    }
    std::discrete_distribution<std::size_t> pick_group(share.begin(), share.end());
    std::discrete_distribution<std::size_t> pick_kind(zipf_.begin(), zipf_.end());

    const std::size_t n = count(arrival_rng_);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t g = groups_.size() > 1 ? pick_group(arrival_rng_) : 0;
      Waiting w;
      w.arrived = t;
      w.user = {static_cast<double>(g) * s_.cell_size + s_.cell_size * unit(arrival_rng_),
                s_.cell_size * unit(arrival_rng_)};
      const auto kind = pick_kind(arrival_rng_);
      w.task.id = static_cast<core::TaskId>(next_task_++);
      w.task.kind = static_cast<core::KindId>(kind);
      w.task.u = kind_size_[kind];
      w.task.c = s_.cycles_per_bit * w.task.u;
      w.task.r = w.task.u * (s_.result_fraction_min +
                             (s_.result_fraction_max - s_.result_fraction_min) * unit(arrival_rng_));
      w.task.t_max = s_.t_max_min + (s_.t_max_max - s_.t_max_min) * unit(arrival_rng_);

      auto& grp = groups_[g];
      std::size_t local = 0;
      for (std::size_t q = 1; q < grp.stations.size(); ++q) {
        if (core::distance(w.user, stations_[grp.stations[q]].position) <
            core::distance(w.user, stations_[grp.stations[local]].position)) {
          local = q;
        }
      }
      w.origin = grp.stations[local];
      predictor_.record(w.origin, kind, t);
      ++m.arrivals;

      const auto found = caching::lookup(grp.cache, grp.graph, kind, local);
      if (found.kind == caching::LookupKind::Hit) {
        ++m.hits;
        event(t, w, g, w.origin, EventKind::Hit);
      } else if (found.kind == caching::LookupKind::NeighborHit) {
        ++m.neighbor_hits;
        event(t, w, g, grp.stations[*found.holder], EventKind::NeighborHit);
      } else {
        ++m.misses;
        event(t, w, g, w.origin, EventKind::Miss);
        grp.incoming.push_back(std::move(w));
      }
    }
  }

  void migrate_and_process(std::size_t t, TickMetrics& m) {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      world_.groups[g] = {groups_[g].incoming.size(), groups_[g].queue.size(), groups_[g].capacity};
    }
    auto* trace = opts_.keep_migration_trace ? &out_.migration_trace : nullptr;
    const auto outcomes = controller_->step(world_, t, s_.ticks, migration_rng_, trace);

    std::vector<std::vector<Waiting>> batches(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const auto& o = outcomes[g];
      auto& grp = groups_[g];
      switch (o.action) {
        case migration::Action::Detect:
          ++m.detect_actions;
          for (auto& w : grp.incoming) {
            event(t, w, g, w.origin, EventKind::Detect);
            grp.queue.push_back(std::move(w));
          }
          grp.incoming.clear();
          break;
        case migration::Action::Transmit: {
          ++m.transmit_actions;
          if (o.moved == 0) break;
          auto& dest = groups_[*o.target];
          for (std::size_t k = 0; k < o.moved; ++k) {
            auto& src = grp.incoming.empty() ? grp.queue : grp.incoming;
            Waiting w = std::move(src.back());
            src.pop_back();
            event(t, w, *o.target, w.origin, EventKind::Migrate);
            dest.incoming.push_back(std::move(w));
          }
          m.migrated += o.moved;
          break;
        }
        case migration::Action::Process:
          ++m.process_actions;
          for (std::size_t k = 0; k < o.processed; ++k) {
            batches[g].push_back(std::move(grp.queue.front()));
            grp.queue.pop_front();
          }
          break;
      }
    }
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (world_.groups[g].incoming != groups_[g].incoming.size() ||
          world_.groups[g].queued != groups_[g].queue.size()) {
        throw std::logic_error("simulator lost track of a group's tasks");
      }
      if (!batches[g].empty()) allocate(t, g, batches[g], m);
    }
  }

  void allocate(std::size_t t, std::size_t g, std::vector<Waiting>& batch, TickMetrics& m) {
    const auto& grp = groups_[g];
    std::vector<admm::StationSpec> specs;
    for (std::size_t q = 0; q < grp.stations.size(); ++q) {
      const auto& bs = stations_[grp.stations[q]];
      specs.push_back({static_cast<core::StationId>(q), bs.f, bs.compute_cap, bs.storage_cap});
    }
    // Deadlines shrink by the time already spent waiting.
    std::vector<core::PrioritizedTask> pri;
    std::vector<std::size_t> by_id_index;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      core::Task task = batch[k].task;
      task.t_max -= static_cast<double>(t - batch[k].arrived);
      pri.push_back({task, rate(batch[k].user, batch[k].origin), stations_[batch[k].origin].f});
    }
    core::CostWeights w;
    w.coe = s_.coe;
    w.alpha1 = s_.alpha1;
    const auto ordered = core::order_by_priority(pri, s_.channel, w);

    std::vector<const Waiting*> who(ordered.size());
    for (std::size_t j = 0; j < ordered.size(); ++j) {
      for (const auto& b : batch) {
        if (b.task.id == ordered[j].id) who[j] = &b;
      }
    }
    Eigen::MatrixXd rates(static_cast<Eigen::Index>(specs.size()), static_cast<Eigen::Index>(ordered.size()));
    for (std::size_t j = 0; j < ordered.size(); ++j) {
      for (std::size_t q = 0; q < specs.size(); ++q) {
        rates(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = rate(who[j]->user, grp.stations[q]);
      }
    }
    auto problem = admm::build_problem(specs, ordered, rates, s_.channel, s_.coe);

    std::vector<Eigen::Index> assignment;
    if (s_.alloc == AllocStrategy::Admm) {
      const auto res = admm::solve(problem, s_.solver);
      ++out_.summary.solves;
      if (res.status != admm::SolveStatus::IterationCap) ++out_.summary.solves_converged;
      assignment = admm::round_assignment(problem, res.primal.x);
    } else {
      assignment = admm::greedy_assign(problem);
    }
    const double utility = problem.objective(admm::assignment_matrix(problem, assignment));
    m.utility += utility;

    std::vector<double> carry(specs.size(), 0.0);
    for (std::size_t j = 0; j < ordered.size(); ++j) {
      const auto i = assignment[j];
      const auto jj = static_cast<Eigen::Index>(j);
      m.energy += problem.energy(i, jj);
      m.delay += carry[static_cast<std::size_t>(i)] + problem.upload(i, jj) + problem.exec(i, jj) +
                 problem.download(i, jj);
      carry[static_cast<std::size_t>(i)] += problem.exec(i, jj) + problem.upload(i, jj);
      event(t, *who[j], g, grp.stations[static_cast<std::size_t>(i)], EventKind::Process);
      ++m.processed;
    }
    if (opts_.keep_allocations) {
      out_.allocations.push_back({t, g, std::move(problem), std::move(assignment), utility});
    }
  }

  void replan(std::size_t t) {
    const std::size_t k = s_.num_kinds;
    popularity::ClampCounter clamps;
    const auto p = predictor_.close_window(t, s_.prediction_steps, &clamps);
    const double v_ref = core::shannon_rate(s_.channel, s_.channel.tx_power_user, s_.cell_size / 4.0);
    for (auto& grp : groups_) {
      caching::PlanningInput in;
      in.graph = grp.graph;
      in.kind_size = kind_size_;
      in.space = group_space(grp);
      const auto n = static_cast<Eigen::Index>(grp.stations.size());
      in.p.resize(n, static_cast<Eigen::Index>(k));
      in.miss_cost.resize(n, static_cast<Eigen::Index>(k));
      for (Eigen::Index q = 0; q < n; ++q) {
        const auto i = grp.stations[static_cast<std::size_t>(q)];
        const double wait = queue_wait(grp, i);
        for (std::size_t j = 0; j < k; ++j) {
          in.p(q, static_cast<Eigen::Index>(j)) = p[i * k + j];
          in.miss_cost(q, static_cast<Eigen::Index>(j)) =
              wait + kind_size_[j] / v_ref + s_.cycles_per_bit * kind_size_[j] / stations_[i].f;
        }
      }
      grp.cache = caching::greedy_plan(in).cache;
      fill_leftover(grp.cache, in.p);
    }
    out_.summary.clamped += clamps.clamped;
    out_.summary.clamp_evaluations += clamps.evaluations;
  }

  // The planner stops once no placement lowers the objective, which leaves
  // kinds with zero predicted demand out even when space remains. Spare space
  // takes kinds absent from the whole group, most demanded first.
  void fill_leftover(caching::CacheMatrix& ca, const Eigen::MatrixXd& p) const {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < s_.num_kinds; ++j) {
      bool held = false;
      for (std::size_t q = 0; q < ca.num_stations(); ++q) held = held || ca.cached(q, j);
      if (!held) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return p.col(static_cast<Eigen::Index>(a)).sum() > p.col(static_cast<Eigen::Index>(b)).sum();
    });
    for (auto j : order) {
      for (std::size_t q = 0; q < ca.num_stations(); ++q) {
        if (ca.fits(q, kind_size_[j])) {
          ca.place(q, j, kind_size_[j]);
          break;
        }
      }
    }
  }

  // Waiting time at station i if the group's queue were spread evenly.
  double queue_wait(const GroupRuntime& grp, std::size_t i) const {
    if (grp.queue.empty()) return 0.0;
    std::vector<core::Task> ahead;
    std::vector<double> rates;
    for (const auto& w : grp.queue) {
      ahead.push_back(w.task);
      rates.push_back(rate(w.user, i));
    }
    return core::queue_time(ahead, rates, stations_[i].f) / static_cast<double>(grp.stations.size());
  }

  void finish() {
    auto& sum = out_.summary;
    double entropy_sum = 0.0;
    for (const auto& m : out_.ticks) {
      sum.arrivals += m.arrivals;
      sum.hits += m.hits;
      sum.neighbor_hits += m.neighbor_hits;
      sum.processed += m.processed;
      sum.dropped += m.dropped;
      sum.migrated += m.migrated;
      sum.utility += m.utility;
      sum.energy += m.energy;
      sum.mean_delay += m.delay;
      if (m.entropy) {
        entropy_sum += *m.entropy;
        ++sum.entropy_ticks;
      }
    }
    sum.lookups = sum.arrivals;
    sum.held_at_end = out_.ticks.empty() ? 0 : out_.ticks.back().held;
    sum.hit_ratio = sum.lookups == 0 ? 0.0
                                     : static_cast<double>(sum.hits + sum.neighbor_hits) /
                                           static_cast<double>(sum.lookups);
    sum.mean_delay = sum.processed == 0 ? 0.0 : sum.mean_delay / static_cast<double>(sum.processed);
    sum.mean_entropy = sum.entropy_ticks == 0 ? 0.0 : entropy_sum / static_cast<double>(sum.entropy_ticks);
  }

  const Scenario& s_;
  RunOptions opts_;
  popularity::DemandPredictor predictor_;
  std::vector<core::BaseStation> stations_;
  std::vector<GroupRuntime> groups_;
  std::vector<double> kind_size_;
  std::vector<double> zipf_;
  double catalog_bits_ = 0.0;
  std::mt19937_64 arrival_rng_;
  std::mt19937_64 migration_rng_;
  migration::World world_;
  std::optional<migration::Controller> controller_;
  std::size_t next_task_ = 0;
  MetricsFrame out_;
};

}  // namespace

MetricsFrame run_scenario(const Scenario& s, const RunOptions& opts) {
  s.validate();
  Simulation sim(s, opts);
  return sim.run();
}

void write_metrics_csv(std::ostream& out, const MetricsFrame& m) {
  csv::write_row(out, {"t", "arrivals", "hits", "neighbor_hits", "misses", "migrated", "processed",
                       "dropped", "held", "detect", "process", "transmit", "utility", "energy",
                       "delay", "entropy"});
  for (const auto& r : m.ticks) {
    csv::write_row(out, {std::to_string(r.t), std::to_string(r.arrivals), std::to_string(r.hits),
                         std::to_string(r.neighbor_hits), std::to_string(r.misses),
                         std::to_string(r.migrated), std::to_string(r.processed),
                         std::to_string(r.dropped), std::to_string(r.held),
                         std::to_string(r.detect_actions), std::to_string(r.process_actions),
                         std::to_string(r.transmit_actions), csv::fmt(r.utility), csv::fmt(r.energy),
                         csv::fmt(r.delay), r.entropy ? csv::fmt(*r.entropy) : std::string{}});
  }
}

void write_events_csv(std::ostream& out, const MetricsFrame& m) {
  csv::write_row(out, {"t", "task_id", "group_id", "bs_id", "kind_id", "event"});
  for (const auto& e : m.events) {
    csv::write_row(out, {std::to_string(e.t), std::to_string(e.task), std::to_string(e.group),
                         std::to_string(e.station), std::to_string(e.kind), to_string(e.what)});
  }
}

void write_summary_csv(std::ostream& out, const Summary& s) {
  csv::write_row(out, {"metric", "value"});
  auto row = [&](const char* k, const std::string& v) { csv::write_row(out, {k, v}); };
  row("arrivals", std::to_string(s.arrivals));
  row("lookups", std::to_string(s.lookups));
  row("hits", std::to_string(s.hits));
  row("neighbor_hits", std::to_string(s.neighbor_hits));
  row("processed", std::to_string(s.processed));
  row("dropped", std::to_string(s.dropped));
  row("migrated", std::to_string(s.migrated));
  row("held_at_end", std::to_string(s.held_at_end));
  row("hit_ratio", csv::fmt(s.hit_ratio));
  row("utility", csv::fmt(s.utility));
  row("energy", csv::fmt(s.energy));
  row("mean_delay", csv::fmt(s.mean_delay));
  row("mean_entropy", csv::fmt(s.mean_entropy));
  row("clamped", std::to_string(s.clamped));
  row("clamp_evaluations", std::to_string(s.clamp_evaluations));
  row("solves", std::to_string(s.solves));
  row("solves_converged", std::to_string(s.solves_converged));
}

void write_run(const std::filesystem::path& dir, const Scenario& s, const MetricsFrame& m) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("metrics.csv");
    write_metrics_csv(f, m);
  }
  {
    auto f = open("events.csv");
    write_events_csv(f, m);
  }
  {
    auto f = open("migration.csv");
    migration::write_trace_csv(f, m.migration_trace);
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, m.summary);
  }
  {
    auto f = open("scenario.txt");
    write_scenario(f, s);
  }
}

}  // namespace edgecoop::sim
