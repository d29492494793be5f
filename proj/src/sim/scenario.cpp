#include "edgecoop/sim/scenario.hpp"

#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgecoop/csv.hpp"

namespace edgecoop::sim {

const char* to_string(CacheStrategy s) {
  switch (s) {
    case CacheStrategy::Cooperative: return "coop";
    case CacheStrategy::Random: return "random";
    case CacheStrategy::None: return "none";
  }
  return "?";
}

const char* to_string(AllocStrategy s) { return s == AllocStrategy::Admm ? "admm" : "greedy"; }

void Scenario::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("scenario: ") + what);
  };
  require(num_kinds >= 1 && num_bs >= 1 && num_groups >= 1 && ticks >= 1, "counts must be >= 1");
  require(num_bs >= num_groups, "every group needs a station");
  require(buffer_fraction >= 0.0 && buffer_fraction <= 1.0, "buffer fraction must be in [0,1]");
  require(hotspot >= 0.0 && hotspot <= 1.0, "hotspot share must be in [0,1]");
  require(zipf_xi >= 0.0, "zipf exponent must be >= 0");
  require(coe >= 0.0 && coe <= 1.0, "coe must be in [0,1]");
  require(alpha1 >= 0.0 && alpha1 <= 1.0, "alpha1 must be in [0,1]");
  require(delta_t >= 1 && prediction_steps >= 1 && model_horizon >= 1, "window settings must be >= 1");
  require(cell_size > 0.0, "cell size must be positive");
  require(f_min > 0.0 && f_max >= f_min, "frequency range invalid");
  require(bs_compute > 0.0 && storage_cap > 0.0, "capacities must be positive");
  require(u_min > 0.0 && u_max >= u_min, "input size range invalid");
  require(cycles_per_bit > 0.0, "cycles per bit must be positive");
  require(result_fraction_min >= 0.0 && result_fraction_max >= result_fraction_min, "result fraction range invalid");
  require(t_max_min > 0.0 && t_max_max >= t_max_min, "deadline range invalid");
  require(congestion_alpha > 0.0, "congestion alpha must be positive");
  require(epsilon.eps_min >= 0.0 && epsilon.eps_max <= 1.0 && epsilon.eps_min <= epsilon.eps_max,
          "epsilon schedule invalid");
  channel.validate();
  rewards.validate();
  solver.validate();
  migration::QPolicy::uniform(num_groups, q_beta, q_gamma);  // validates beta and gamma
}

namespace {

bool parse_bool(std::string_view v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument("expected on/off, got '" + std::string(v) + "'");
}

std::size_t parse_count(std::string_view v) {
  const auto n = csv::to_int(v);
  if (n < 0) throw std::invalid_argument("expected a nonnegative integer, got '" + std::string(v) + "'");
  return static_cast<std::size_t>(n);
}

using Setter = std::function<void(Scenario&, std::string_view)>;
using Getter = std::function<std::string(const Scenario&)>;

struct Field {
  const char* key;
  Setter set;
  Getter get;
};

#define EC_COUNT(k, m) \
  Field{k, [](Scenario& s, std::string_view v) { s.m = parse_count(v); }, [](const Scenario& s) { return std::to_string(s.m); }}
#define EC_REAL(k, m) \
  Field{k, [](Scenario& s, std::string_view v) { s.m = csv::to_double(v); }, [](const Scenario& s) { return csv::fmt(s.m); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      EC_COUNT("seed", seed),
      EC_COUNT("tasks", num_tasks),
      EC_COUNT("kinds", num_kinds),
      EC_COUNT("bs", num_bs),
      EC_COUNT("groups", num_groups),
      EC_REAL("zipf", zipf_xi),
      EC_REAL("buffer-frac", buffer_fraction),
      EC_REAL("coe", coe),
      EC_REAL("rho", solver.rho),
      EC_REAL("alpha2", solver.alpha2),
      EC_COUNT("iters", solver.max_iters),
      EC_REAL("tol", solver.tol),
      Field{"migration", [](Scenario& s, std::string_view v) { s.migration = parse_bool(v); },
            [](const Scenario& s) { return std::string(s.migration ? "on" : "off"); }},
      Field{"cache",
            [](Scenario& s, std::string_view v) {
              if (v == "coop") s.cache = CacheStrategy::Cooperative;
              else if (v == "random") s.cache = CacheStrategy::Random;
              else if (v == "none") s.cache = CacheStrategy::None;
              else throw std::invalid_argument("cache must be coop, random or none");
            },
            [](const Scenario& s) { return std::string(to_string(s.cache)); }},
      Field{"alloc",
            [](Scenario& s, std::string_view v) {
              if (v == "admm") s.alloc = AllocStrategy::Admm;
              else if (v == "greedy") s.alloc = AllocStrategy::Greedy;
              else throw std::invalid_argument("alloc must be admm or greedy");
            },
            [](const Scenario& s) { return std::string(to_string(s.alloc)); }},
      EC_COUNT("ticks", ticks),
      EC_COUNT("delta-t", delta_t),
      EC_COUNT("prediction-steps", prediction_steps),
      EC_COUNT("model-horizon", model_horizon),
      EC_REAL("hotspot", hotspot),
      EC_REAL("cell-size", cell_size),
      EC_REAL("f-min", f_min),
      EC_REAL("f-max", f_max),
      EC_REAL("bs-compute", bs_compute),
      EC_REAL("storage-cap", storage_cap),
      EC_REAL("u-min", u_min),
      EC_REAL("u-max", u_max),
      EC_REAL("cycles-per-bit", cycles_per_bit),
      EC_REAL("result-min", result_fraction_min),
      EC_REAL("result-max", result_fraction_max),
      EC_REAL("tmax-min", t_max_min),
      EC_REAL("tmax-max", t_max_max),
      EC_REAL("alpha1", alpha1),
      EC_REAL("q-beta", q_beta),
      EC_REAL("q-gamma", q_gamma),
      EC_REAL("congestion-alpha", congestion_alpha),
      EC_REAL("eps-min", epsilon.eps_min),
      EC_REAL("eps-max", epsilon.eps_max),
      EC_REAL("r-detect", rewards.r_detect),
      EC_REAL("r-transmit", rewards.r_transmit),
      EC_REAL("r-process", rewards.r_process),
      EC_REAL("r-process1", rewards.r_process1),
      EC_REAL("r-process2", rewards.r_process2),
  };
  return all;
}

#undef EC_COUNT
#undef EC_REAL

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void set_field(Scenario& s, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(s, trim(value));
      return;
    }
  }
  throw std::invalid_argument("unknown scenario key '" + std::string(key) + "'");
}

Scenario read_scenario(std::istream& in, Scenario base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": expected key=value");
    }
    set_field(base, trim(v.substr(0, eq)), trim(v.substr(eq + 1)));
  }
  return base;
}

void write_scenario(std::ostream& out, const Scenario& s) {
  for (const auto& f : fields()) out << f.key << '=' << f.get(s) << '\n';
}

}  // namespace edgecoop::sim
