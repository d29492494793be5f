#include "edgecoop/sim/offline_plan.hpp"

#include <algorithm>
#include <istream>
#include <stdexcept>
#include <string>

#include "edgecoop/csv.hpp"

namespace edgecoop::sim {

namespace {

const csv::Table& section(const std::map<std::string, csv::Table>& all, const std::string& name) {
  const auto it = all.find(name);
  if (it == all.end()) throw std::invalid_argument("stats file lacks a [" + name + "] section");
  return it->second;
}

std::size_t index_of(const std::string& field, std::size_t limit, const char* what) {
  const auto v = csv::to_int(field);
  if (v < 0 || static_cast<std::size_t>(v) >= limit) {
    throw std::invalid_argument(std::string(what) + " id out of range: " + field);
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

OfflinePlan plan_from_stats(std::istream& in, const OfflinePlanOptions& opts) {
  if (opts.delta_t == 0 || opts.prediction_steps == 0) throw std::invalid_argument("window settings must be >= 1");
  const auto all = csv::read_sections(in);
  const auto& st = section(all, "stations");
  const auto& kd = section(all, "kinds");
  const auto& up = section(all, "uploads");

  const std::size_t b = st.rows.size();
  const std::size_t k = kd.rows.size();
  if (b == 0 || k == 0) throw std::invalid_argument("stats file needs stations and kinds");

  std::vector<core::Position> where(b);
  std::vector<double> space(b), freq(b);
  std::vector<bool> seen(b, false);
  for (const auto& row : st.rows) {
    const auto i = index_of(row.at(st.column("id")), b, "station");
    if (seen[i]) throw std::invalid_argument("duplicate station id");
    seen[i] = true;
    where[i] = {csv::to_double(row.at(st.column("x"))), csv::to_double(row.at(st.column("y")))};
    space[i] = csv::to_double(row.at(st.column("space")));
    freq[i] = csv::to_double(row.at(st.column("f")));
    if (space[i] < 0.0 || !(freq[i] > 0.0)) throw std::invalid_argument("station space or f invalid");
  }
  std::vector<double> size(k, 0.0);
  for (const auto& row : kd.rows) {
    const auto j = index_of(row.at(kd.column("id")), k, "kind");
    size[j] = csv::to_double(row.at(kd.column("size")));
  }

  popularity::DemandPredictor predictor(b, k, opts.delta_t, opts.model_horizon);
  std::size_t last_tick = 0;
  for (const auto& row : up.rows) {
    const auto tick = csv::to_int(row.at(up.column("tick")));
    const auto count = csv::to_int(row.at(up.column("count")));
    if (tick < 1 || count < 0) throw std::invalid_argument("upload rows need tick >= 1 and count >= 0");
    predictor.record(index_of(row.at(up.column("bs")), b, "station"),
                     index_of(row.at(up.column("kind")), k, "kind"), static_cast<std::size_t>(tick),
                     static_cast<std::uint64_t>(count));
    last_tick = std::max(last_tick, static_cast<std::size_t>(tick));
  }
  if (last_tick == 0) throw std::invalid_argument("stats file has no uploads");

  const std::size_t windows = (last_tick + opts.delta_t - 1) / opts.delta_t;
  std::vector<double> p;
  for (std::size_t w = 1; w <= windows; ++w) p = predictor.close_window(w * opts.delta_t, opts.prediction_steps);

  caching::PlanningInput input;
  input.graph = caching::TransferGraph::from_positions(where, opts.channel);
  input.kind_size = size;
  input.space = space;
  const auto nb = static_cast<Eigen::Index>(b);
  const auto nk = static_cast<Eigen::Index>(k);
  input.p.resize(nb, nk);
  input.miss_cost.resize(nb, nk);
  const double v = core::shannon_rate(opts.channel, opts.channel.tx_power_user, opts.reference_distance);
  for (Eigen::Index i = 0; i < nb; ++i) {
    for (Eigen::Index j = 0; j < nk; ++j) {
      input.p(i, j) = p[static_cast<std::size_t>(i) * k + static_cast<std::size_t>(j)];
      input.miss_cost(i, j) = size[j] / v + opts.cycles_per_bit * size[j] / freq[i];
    }
  }

  OfflinePlan out;
  out.plan = caching::greedy_plan(input);
  out.models = predictor.models();
  out.p = input.p;
  out.windows = windows;
  return out;
}

}  // namespace edgecoop::sim
