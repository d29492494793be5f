// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// argv[1] is the path of the edgecoop command-line binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edgecoop/admm.hpp"
#include "edgecoop/caching.hpp"
#include "edgecoop/lp_oracle.hpp"
#include "edgecoop/migration.hpp"
#include "edgecoop/popularity.hpp"
#include "edgecoop/sim/experiments.hpp"
#include "edgecoop/sim/instances.hpp"
#include "edgecoop/sim/simulator.hpp"
#include "q_oracle.hpp"
#include "semi_markov_oracle.hpp"

using namespace edgecoop;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("%s criterion %d (%s): %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str(), secs);
  std::fflush(stdout);
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Verdict admm_convergence_rate() {
  const std::size_t sizes[] = {5, 10, 20};
  admm::SolverConfig cfg;
  cfg.rho = 2.0;
  cfg.max_iters = 50;
  const auto t0 = std::chrono::steady_clock::now();
  int settled = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = sim::random_allocation_problem(s, 3, sizes[s % 3]);
    const auto res = admm::solve(p, cfg);
    const bool ok = std::any_of(res.trace.records.begin(), res.trace.records.end(),
                                [&](const auto& r) { return sim::combined_residual(r) < 1e-3; });
    settled += ok ? 1 : 0;
  }
  const double secs = elapsed_since(t0);

  // Same count on instances where compute capacity binds, for information.
  sim::InstanceOptions tight;
  tight.tight_capacity = true;
  int settled_tight = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto res = admm::solve(sim::random_allocation_problem(s, 3, sizes[s % 3], tight), cfg);
    settled_tight += res.status == admm::SolveStatus::Converged ? 1 : 0;
  }
  return {settled >= 95 && secs < 5.0,
          std::to_string(settled) + "/100 settled within 50 iterations in " + fmt(secs, 3) +
              " s (capacity-bound instances: " + std::to_string(settled_tight) + "/100)"};
}

Verdict admm_vs_lp() {
  sim::InstanceOptions tight;
  tight.tight_capacity = true;
  admm::SolverConfig cfg;
  cfg.max_iters = 2000;
  const auto t0 = std::chrono::steady_clock::now();
  int compared = 0, close = 0;
  double worst_gap = 0.0, worst_res = 0.0;
  for (std::uint64_t s = 500; compared < 50 && s < 1000; ++s) {
    const std::size_t b = 2 + s % 2;
    const std::size_t h = b == 2 ? 2 + s % 5 : 2 + s % 3;
    const auto p = sim::random_allocation_problem(s, b, h, tight);
    const auto lp = admm::lp_oracle(p);
    if (!lp.feasible) continue;
    ++compared;
    const auto res = admm::solve(p, cfg);
    const auto& last = res.trace.records.back();
    const double residual = std::max({last.primal_residual, last.constraint_residual, res.max_violation});
    const double gap = (p.objective(res.primal.x) - lp.objective) / lp.objective;
    worst_gap = std::max(worst_gap, std::abs(gap));
    worst_res = std::max(worst_res, residual);
    close += (res.status == admm::SolveStatus::Converged && std::abs(gap) <= 0.05 && residual <= 1e-3) ? 1 : 0;
  }
  const double secs = elapsed_since(t0);
  return {compared == 50 && close == 50 && secs < 10.0,
          std::to_string(close) + "/" + std::to_string(compared) + " within 5% of the exact optimum, worst gap " +
              fmt(worst_gap) + ", worst residual " + fmt(worst_res) + ", " + fmt(secs, 3) + " s"};
}

Verdict back_substitution() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> pos(0.2, 4.0), step(0.05, 0.95);
  bool noop = true;
  double closed = 0.0, linear = 0.0;
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + t % 6;
    Eigen::VectorXd v(n), vp(n);
    for (auto& e : v) e = g(rng);
    for (auto& e : vp) e = g(rng);
    std::vector<double> a(static_cast<std::size_t>(n - 1));
    for (auto& e : a) e = pos(rng);
    const double rho = pos(rng);
    noop = noop && admm::gaussian_back_substitution(v, v, step(rng), rho, a) == v;

    const Eigen::VectorXd base = admm::gaussian_back_substitution(v, vp, 0.1, rho, a) - v;
    const double alpha = step(rng);
    const Eigen::VectorXd scaled = admm::gaussian_back_substitution(v, vp, alpha, rho, a) - v;
    linear = std::max(linear, (scaled - alpha / 0.1 * base).cwiseAbs().maxCoeff());

    const double a1 = pos(rng), a2 = pos(rng);
    const Eigen::VectorXd w{{g(rng), g(rng), g(rng)}};
    const Eigen::VectorXd wp{{g(rng), g(rng), g(rng)}};
    const std::vector<double> two = {a1, a2};
    const auto out = admm::gaussian_back_substitution(w, wp, alpha, rho, two);
    const double d2 = alpha * (wp(1) - w(1));
    const double d1 = alpha * (wp(0) - w(0)) - a2 / a1 * d2;
    const double d3 = alpha * (wp(2) - w(2));
    closed = std::max({closed, std::abs(out(0) - w(0) - d1), std::abs(out(1) - w(1) - d2),
                       std::abs(out(2) - w(2) - d3)});
  }
  return {noop && closed <= 1e-12 && linear <= 1e-9,
          std::string("no-op exact: ") + (noop ? "yes" : "no") + ", closed-form error " + fmt(closed) +
              ", alpha2-linearity error " + fmt(linear)};
}

Verdict buffer_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = sim::hit_ratio_vs_buffer(sim::cache_sweep_scenario(), sim::default_buffer_fractions());
  const double secs = elapsed_since(t0);
  bool above = true;
  int inversions = 0;
  bool small = true;
  std::string trail;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    above = above && rows[k].coop > rows[k].random;
    trail += (k ? " " : "") + fmt(rows[k].coop, 3) + "/" + fmt(rows[k].random, 3);
    if (k > 0 && rows[k].coop < rows[k - 1].coop) {
      ++inversions;
      small = small && rows[k - 1].coop - rows[k].coop <= 0.02;
    }
  }
  const double ratio = rows.back().coop / rows.front().coop;
  return {above && inversions <= 1 && small && ratio >= 3.0 && secs < 30.0,
          "coop/random " + trail + "; inversions " + std::to_string(inversions) + ", end/start " + fmt(ratio, 3) +
              ", " + fmt(secs, 3) + " s"};
}

Verdict zipf_trend() {
  const auto xis = sim::default_zipf_values();
  std::vector<double> mean(xis.size(), 0.0);
  std::string per_seed;
  double lowest = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = sim::cache_sweep_scenario();
    s.seed = seed;
    const auto rows = sim::hit_ratio_vs_zipf(s, xis);
    std::vector<double> coop;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      coop.push_back(rows[k].coop);
      mean[k] += rows[k].coop / 5.0;
    }
    const double rs = sim::spearman(xis, coop);
    lowest = std::min(lowest, rs);
    per_seed += (seed > 1 ? " " : "") + fmt(rs, 3);
  }
  const double pooled = sim::spearman(xis, mean);
  return {pooled >= 0.9, "Spearman of the 5-seed mean " + fmt(pooled, 4) + "; per seed " + per_seed +
                              " (lowest " + fmt(lowest, 3) + ")"};
}

Verdict entropy_balance() {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
  const auto pairs = sim::entropy_pairs(sim::congested_scenario(), seeds);
  int wins = 0;
  double on = 0.0, off = 0.0;
  std::size_t moved = 0;
  for (const auto& p : pairs) {
    wins += p.with_migration >= p.without_migration ? 1 : 0;
    on += p.with_migration / 10.0;
    off += p.without_migration / 10.0;
    moved += p.migrated;
  }
  // The default scenario, for information: its queues rarely congest.
  const auto base = sim::entropy_pairs(sim::Scenario{}, {1, 2, 3});
  std::size_t base_moved = 0;
  int base_wins = 0;
  for (const auto& p : base) {
    base_moved += p.migrated;
    base_wins += p.with_migration >= p.without_migration ? 1 : 0;
  }
  return {wins >= 9 && moved > 0,
          std::to_string(wins) + "/10 seeds, mean entropy " + fmt(on) + " vs " + fmt(off) + ", " +
              std::to_string(moved) + " tasks migrated; default setup: " + std::to_string(base_wins) +
              "/3 seeds with " + std::to_string(base_moved) + " migrated"};
}

Verdict capacity_trend() {
  admm::SolverConfig cfg;
  cfg.max_iters = 2000;
  const auto sweep = sim::utility_vs_capacity(1, 3, 20, 13, 0.4, 4.0, cfg);
  const auto& r = sweep.rows;
  bool monotone = true;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) monotone = monotone && r[k + 1].utility <= r[k].utility * 1.01;
  const std::size_t q = r.size() - (r.size() - 1) / 4 - 1;  // first point of the last quarter of the range
  const double tail = std::abs(r.back().utility - r[q].utility) / r.back().utility;
  std::string trail;
  for (const auto& row : r) trail += (trail.empty() ? "" : " ") + fmt(row.utility, 4);
  return {monotone && tail <= 0.01,
          "utility " + trail + "; final-quarter change " + fmt(100.0 * tail, 3) + "%, plateau from " +
              (sweep.plateau ? fmt(*sweep.plateau / r.front().capacity * 0.4, 3) + "x demand" : "none")};
}

Verdict semi_markov() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t n = 2; n <= 4; ++n) {
    for (std::size_t h = 1; h <= 5; ++h) {
      for (int rep = 0; rep < 8; ++rep) {
        const auto c = oracle::random_chain(rng, n, h);
        for (std::size_t dt = 0; dt <= h; ++dt) {
          for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t t = 0; t < n; ++t) {
              worst = std::max(worst, std::abs(popularity::first_passage_prob(c, s, t, dt) -
                                               oracle::enumerate_paths(c, s, t, dt)));
              ++checked;
            }
          }
        }
      }
    }
  }
  sim::Scenario s;
  s.ticks = 500;
  s.num_tasks = 2500;
  const auto m = sim::run_scenario(s);
  const double rate = m.summary.clamp_evaluations == 0
                          ? 1.0
                          : static_cast<double>(m.summary.clamped) / static_cast<double>(m.summary.clamp_evaluations);
  return {worst <= 1e-10 && rate < 0.01 && m.summary.clamp_evaluations > 0,
          std::to_string(checked) + " values, max error " + fmt(worst) + "; clamped " +
              std::to_string(m.summary.clamped) + " of " + std::to_string(m.summary.clamp_evaluations) +
              " evaluations on fitted models"};
}

caching::PlanningInput random_planning_input(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(2, 4);
  const std::size_t b = pick(rng), k = pick(rng);
  std::vector<core::Position> where(b);
  for (auto& w : where) w = {200.0 * unit(rng), 200.0 * unit(rng)};
  caching::PlanningInput in;
  in.graph = caching::TransferGraph::from_positions(where, core::ChannelModel{});
  in.kind_size.resize(k);
  for (auto& u : in.kind_size) u = 5e3 + 5e3 * unit(rng);
  in.p = Eigen::MatrixXd(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k));
  in.miss_cost = in.p;
  for (Eigen::Index i = 0; i < in.p.rows(); ++i) {
    for (Eigen::Index j = 0; j < in.p.cols(); ++j) {
      in.p(i, j) = unit(rng) < 0.2 ? 0.0 : unit(rng);
      in.miss_cost(i, j) = 0.01 + 0.05 * unit(rng);
    }
  }
  in.space.resize(b);
  for (auto& s : in.space) s = 5e3 + 2.5e4 * unit(rng);
  return in;
}

Verdict greedy_steps() {
  std::mt19937_64 rng(909);
  std::size_t steps = 0, suboptimal = 0, overfull = 0;
  for (int t = 0; t < 200; ++t) {
    const auto in = random_planning_input(rng);
    const auto plan = caching::greedy_plan(in);
    const std::size_t b = in.num_stations(), k = in.num_kinds();
    caching::CacheMatrix replay(b, k, in.space);
    for (const auto& st : plan.steps) {
      const double obj = caching::objective(replay, in);
      double best = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          if (replay.cached(i, j) || !replay.fits(i, in.kind_size[j])) continue;
          auto after = replay;
          after.place(i, j, in.kind_size[j]);
          best = std::max(best, obj - caching::objective(after, in));
        }
      }
      ++steps;
      if (std::abs(st.benefit - best) > 1e-12 * std::max(1.0, best)) ++suboptimal;
      replay.place(st.station, st.kind, in.kind_size[st.kind]);
      for (std::size_t i = 0; i < b; ++i) overfull += replay.used(i) > replay.space(i) ? 1 : 0;
    }
    for (std::size_t i = 0; i < b; ++i) overfull += plan.cache.used(i) > plan.cache.space(i) ? 1 : 0;
  }
  return {suboptimal == 0 && overfull == 0 && steps > 0,
          std::to_string(steps) + " placements over 200 instances, " + std::to_string(suboptimal) +
              " not maximal, " + std::to_string(overfull) + " capacity violations"};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Verdict determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given"};
  const fs::path root = fs::temp_directory_path() / ("edgecoop_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  sim::Scenario s;
  s.ticks = 300;
  s.num_tasks = 1500;
  s.seed = 42;
  {
    std::ofstream f(root / "fixed.scenario");
    sim::write_scenario(f, s);
  }
  for (const char* out : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" run --scenario \"" + (root / "fixed.scenario").string() +
                            "\" --out \"" + (root / out).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
  }
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    ++files;
    const auto other = root / "b" / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
  }
  std::size_t files_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(root / "b")) ++files_b;
  fs::remove_all(root);
  return {files > 0 && differ == 0 && files == files_b,
          std::to_string(files) + " files compared, " + std::to_string(differ) + " differ"};
}

Verdict q_recurrence() {
  const double gamma = migration::QPolicy::uniform(3).gamma;
  const double r_max = 5.0;
  const double bound = r_max / (1.0 - gamma);
  double worst = 0.0, largest = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto [gap, big] = oracle::compare_q_replay(seed, 1 + seed % 4, 1000, r_max);
    worst = std::max(worst, gap);
    largest = std::max(largest, big);
  }
  return {worst <= 1e-12 && largest <= bound,
          "20 traces of 1000 steps, max gap " + fmt(worst) + ", max |Q| " + fmt(largest) + " <= " + fmt(bound)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  report(1, "ADMM settles quickly", admm_convergence_rate);
  report(2, "ADMM near the exact optimum", admm_vs_lp);
  report(3, "Gaussian back substitution", back_substitution);
  report(4, "hit ratio vs buffer", buffer_trend);
  report(5, "hit ratio vs Zipf exponent", zipf_trend);
  report(6, "entropy with migration", entropy_balance);
  report(7, "utility vs capacity", capacity_trend);
  report(8, "semi-Markov first passage", semi_markov);
  report(9, "greedy placement steps", greedy_steps);
  report(10, "deterministic CLI output", [&] { return determinism(cli); });
  report(11, "Q recurrence replay", q_recurrence);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
