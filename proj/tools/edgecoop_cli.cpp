#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "edgecoop/admm.hpp"
#include "edgecoop/csv.hpp"
#include "edgecoop/sim/experiments.hpp"
#include "edgecoop/sim/offline_plan.hpp"
#include "edgecoop/sim/scenario.hpp"
#include "edgecoop/sim/simulator.hpp"
#include "edgecoop/sim/svg.hpp"

namespace fs = std::filesystem;
using namespace edgecoop;

namespace {

// Flags that map one-to-one onto scenario keys.
const std::vector<std::string> kScenarioFlags = {"seed", "tasks", "kinds", "bs", "groups", "zipf",
                                                 "buffer-frac", "coe", "rho", "alpha2", "iters",
                                                 "tol", "migration", "cache"};

struct ScenarioArgs {
  std::string file;
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;  // key=value for any other scenario key

  void attach(CLI::App* app) {
    app->add_option("--scenario", file, "key=value scenario file")->check(CLI::ExistingFile);
    for (const auto& f : kScenarioFlags) app->add_option("--" + f, flags[f], "scenario key " + f);
    app->add_option("--set", sets, "extra scenario setting, key=value (repeatable)");
  }

  // File first, then flags, so flags win.
  sim::Scenario build(sim::Scenario base) const {
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw std::runtime_error("cannot read " + file);
      base = sim::read_scenario(in, base);
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
      sim::set_field(base, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [key, value] : flags) {
      if (!value.empty()) sim::set_field(base, key, value);
    }
    base.validate();
    return base;
  }
};

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  return f;
}

void write_svg(const fs::path& dir, const std::string& name, const sim::LinePlot& plot) {
  open_out(dir, name) << sim::render_svg(plot);
}

sim::LinePlot hit_plot(const std::vector<sim::HitRatioRow>& rows, const std::string& title,
                       const std::string& x_label) {
  sim::LinePlot plot{title, x_label, "hit ratio", {}, false};
  sim::Series coop{"cooperative", {}, {}}, rnd{"random", {}, {}};
  for (const auto& r : rows) {
    coop.x.push_back(r.x);
    coop.y.push_back(r.coop);
    rnd.x.push_back(r.x);
    rnd.y.push_back(r.random);
  }
  plot.series = {coop, rnd};
  return plot;
}

void sweep_buffer(const ScenarioArgs& args, const fs::path& out) {
  const auto s = args.build(sim::cache_sweep_scenario());
  const auto rows = sim::hit_ratio_vs_buffer(s, sim::default_buffer_fractions());
  auto f = open_out(out, "hit_ratio_vs_buffer.csv");
  sim::write_hit_ratio_csv(f, rows, "fraction");
  write_svg(out, "hit_ratio_vs_buffer.svg", hit_plot(rows, "Hit ratio vs buffer size", "buffer fraction"));
}

void sweep_zipf(const ScenarioArgs& args, const fs::path& out) {
  const auto s = args.build(sim::cache_sweep_scenario());
  const auto rows = sim::hit_ratio_vs_zipf(s, sim::default_zipf_values());
  auto f = open_out(out, "hit_ratio_vs_zipf.csv");
  sim::write_hit_ratio_csv(f, rows, "xi");
  write_svg(out, "hit_ratio_vs_zipf.svg", hit_plot(rows, "Hit ratio vs Zipf exponent", "zipf exponent"));
}

void sweep_capacity(const ScenarioArgs& args, const fs::path& out, std::size_t stations, std::size_t tasks,
                    std::size_t points) {
  auto s = args.build({});
  s.solver.max_iters = std::max<std::size_t>(s.solver.max_iters, 2000);
  const auto sweep = sim::utility_vs_capacity(s.seed, stations, tasks, points, 0.4, 4.0, s.solver);
  auto f = open_out(out, "utility_vs_capacity.csv");
  sim::write_capacity_csv(f, sweep);
  sim::Series u{"utility", {}, {}};
  for (const auto& r : sweep.rows) {
    u.x.push_back(r.capacity / 1e9);
    u.y.push_back(r.utility);
  }
  write_svg(out, "utility_vs_capacity.svg",
            {"Utility vs compute capacity", "capacity per station (Gcycles)", "utility", {u}, false});
}

void sweep_convergence(const ScenarioArgs& args, const fs::path& out, std::size_t stations) {
  const auto s = args.build({});
  const auto runs = sim::admm_convergence(s.seed, stations, {1, 5, 10, 20}, s.solver);
  auto f = open_out(out, "admm_convergence.csv");
  sim::write_convergence_csv(f, runs);
  auto g = open_out(out, "admm_convergence_summary.csv");
  csv::write_row(g, {"h", "status", "iterations", "settled_at", "objective"});
  sim::LinePlot obj{"ADMM objective by iteration", "iteration", "objective", {}, false};
  sim::LinePlot res{"ADMM stopping residual", "iteration", "residual", {}, true};
  for (const auto& r : runs) {
    csv::write_row(g, {std::to_string(r.tasks), admm::to_string(r.status), std::to_string(r.trace.records.size()),
                       r.settled_at ? std::to_string(*r.settled_at) : std::string{}, csv::fmt(r.objective)});
    sim::Series so{"H=" + std::to_string(r.tasks), {}, {}}, sr = so;
    for (const auto& rec : r.trace.records) {
      so.x.push_back(static_cast<double>(rec.k));
      so.y.push_back(rec.objective);
      sr.x.push_back(static_cast<double>(rec.k));
      sr.y.push_back(std::max(sim::combined_residual(rec), 1e-12));
    }
    obj.series.push_back(so);
    res.series.push_back(sr);
  }
  write_svg(out, "admm_convergence_objective.svg", obj);
  write_svg(out, "admm_convergence_residual.svg", res);
}

void sweep_entropy(const ScenarioArgs& args, const fs::path& out, std::size_t seeds) {
  const auto s = args.build(sim::congested_scenario());
  std::vector<std::uint64_t> list;
  for (std::size_t k = 0; k < seeds; ++k) list.push_back(s.seed + k);
  const auto pairs = sim::entropy_pairs(s, list);
  auto f = open_out(out, "entropy_migration.csv");
  sim::write_entropy_csv(f, pairs);

  // Per-tick entropy of the first seed, for the time plot.
  sim::RunOptions lean;
  lean.keep_events = false;
  lean.keep_migration_trace = false;
  const auto on = sim::run_scenario(s, lean);
  const auto off = sim::run_scenario(sim::baseline_no_migration(s), lean);
  sim::LinePlot plot{"Entropy over time", "tick", "entropy", {}, false};
  for (const auto* m : {&on, &off}) {
    sim::Series ser{m == &on ? "migration" : "no migration", {}, {}};
    for (const auto& t : m->ticks) {
      if (!t.entropy) continue;
      ser.x.push_back(static_cast<double>(t.t));
      ser.y.push_back(*t.entropy);
    }
    plot.series.push_back(ser);
  }
  write_svg(out, "entropy_migration.svg", plot);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge caching, migration and allocation simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "simulate one scenario and write its CSV files");
  ScenarioArgs run_args;
  run_args.attach(run);
  std::string run_out = "out";
  run->add_option("--out", run_out, "output directory");

  auto* sweep = app.add_subcommand("sweep", "run one experiment sweep");
  ScenarioArgs sweep_args;
  sweep_args.attach(sweep);
  std::string experiment = "all";
  std::string sweep_out = "out";
  std::size_t batch_bs = 3, batch_tasks = 20, points = 13, seeds = 10;
  sweep->add_option("--experiment", experiment, "buffer, zipf, capacity, convergence, entropy or all")
      ->check(CLI::IsMember({"buffer", "zipf", "capacity", "convergence", "entropy", "all"}));
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--batch-bs", batch_bs, "stations in the capacity and convergence instances");
  sweep->add_option("--batch-tasks", batch_tasks, "tasks in the capacity instance");
  sweep->add_option("--points", points, "capacity sweep points");
  sweep->add_option("--seeds", seeds, "seeds for the entropy comparison");

  auto* solve = app.add_subcommand("solve", "solve one allocation problem file");
  std::string problem_file;
  std::string solve_out = "out";
  admm::SolverConfig solver;
  solve->add_option("--problem", problem_file, "problem file")->required()->check(CLI::ExistingFile);
  solve->add_option("--rho", solver.rho, "penalty");
  solve->add_option("--alpha2", solver.alpha2, "correction step");
  solve->add_option("--iters", solver.max_iters, "iteration cap");
  solve->add_option("--tol", solver.tol, "stopping tolerance");
  solve->add_option("--out", solve_out, "output directory");

  auto* plan = app.add_subcommand("cache-plan", "plan a cache placement from upload statistics");
  std::string stats_file;
  std::string plan_out = "out";
  sim::OfflinePlanOptions plan_opts;
  plan->add_option("--stats", stats_file, "stats file")->required()->check(CLI::ExistingFile);
  plan->add_option("--delta-t", plan_opts.delta_t, "window length in ticks");
  plan->add_option("--model-horizon", plan_opts.model_horizon, "semi-Markov horizon in windows");
  plan->add_option("--prediction-steps", plan_opts.prediction_steps, "windows ahead");
  plan->add_option("--out", plan_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto s = run_args.build({});
      sim::write_run(run_out, s, sim::run_scenario(s));
    } else if (*sweep) {
      const fs::path out = sweep_out;
      const bool all = experiment == "all";
      if (all || experiment == "buffer") sweep_buffer(sweep_args, out);
      if (all || experiment == "zipf") sweep_zipf(sweep_args, out);
      if (all || experiment == "capacity") sweep_capacity(sweep_args, out, batch_bs, batch_tasks, points);
      if (all || experiment == "convergence") sweep_convergence(sweep_args, out, batch_bs);
      if (all || experiment == "entropy") sweep_entropy(sweep_args, out, seeds);
    } else if (*solve) {
      std::ifstream in(problem_file);
      const auto problem = admm::read_problem_csv(in);
      const auto res = admm::solve(problem, solver);
      const fs::path out = solve_out;
      auto t = open_out(out, "trace.csv");
      admm::write_trace_csv(t, res.trace);
      auto x = open_out(out, "solution.csv");
      csv::write_row(x, {"bs", "task", "x"});
      for (Eigen::Index j = 0; j < res.primal.x.cols(); ++j) {
        for (Eigen::Index i = 0; i < res.primal.x.rows(); ++i) {
          csv::write_row(x, {std::to_string(i), std::to_string(j), csv::fmt(res.primal.x(i, j))});
        }
      }
      const auto assignment = admm::round_assignment(problem, res.primal.x);
      auto a = open_out(out, "assignment.csv");
      csv::write_row(a, {"task", "bs"});
      for (std::size_t j = 0; j < assignment.size(); ++j) {
        csv::write_row(a, {std::to_string(j), std::to_string(assignment[j])});
      }
      std::cout << "status=" << admm::to_string(res.status) << " iterations=" << res.trace.records.size()
                << " objective=" << csv::fmt(res.objective) << '\n';
    } else if (*plan) {
      std::ifstream in(stats_file);
      const auto result = sim::plan_from_stats(in, plan_opts);
      auto c = open_out(plan_out, "cache.csv");
      caching::write_cache_csv(c, result.plan.cache);
      auto m = open_out(plan_out, "models.csv");
      popularity::write_models_csv(m, result.models);
      std::cout << "windows=" << result.windows << " placements=" << result.plan.steps.size() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
