#include "edgecoop/popularity.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "edgecoop/csv.hpp"
#include "edgecoop/error.hpp"

namespace edgecoop::popularity {

UploadStats::UploadStats(std::size_t num_stations, std::size_t num_kinds, std::size_t delta_t)
    : stations_(num_stations), kinds_(num_kinds), delta_t_(delta_t) {
  if (num_stations == 0 || num_kinds == 0) throw std::invalid_argument("UploadStats: empty shape");
  if (delta_t == 0) throw std::invalid_argument("UploadStats: delta_t must be positive");
}

void UploadStats::record(std::size_t station, std::size_t kind, std::size_t tick,
                         std::uint64_t count) {
  if (station >= stations_ || kind >= kinds_) throw std::invalid_argument("UploadStats: index out of range");
  if (tick == 0) throw std::invalid_argument("UploadStats: ticks start at 1");
  const std::size_t bucket = (tick + delta_t_ - 1) / delta_t_;
  auto& counts = buckets_[bucket];
  if (counts.empty()) counts.assign(stations_ * kinds_, 0);
  counts[station * kinds_ + kind] += count;
  last_bucket_ = std::max(last_bucket_, bucket);
}

std::size_t UploadStats::bucket_of_window(std::size_t t_end) const {
  if (t_end == 0 || t_end % delta_t_ != 0) {
    throw std::invalid_argument("window end " + std::to_string(t_end) +
                                " is not aligned to delta_t " + std::to_string(delta_t_));
  }
  return t_end / delta_t_;
}

std::uint64_t UploadStats::uploads(std::size_t station, std::size_t kind, std::size_t t_end) const {
  if (station >= stations_ || kind >= kinds_) throw std::invalid_argument("UploadStats: index out of range");
  const auto it = buckets_.find(bucket_of_window(t_end));
  return it == buckets_.end() ? 0 : it->second[station * kinds_ + kind];
}

std::uint64_t UploadStats::total(std::size_t station, std::size_t t_end) const {
  if (station >= stations_) throw std::invalid_argument("UploadStats: index out of range");
  const auto it = buckets_.find(bucket_of_window(t_end));
  if (it == buckets_.end()) return 0;
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < kinds_; ++k) sum += it->second[station * kinds_ + k];
  return sum;
}

double static_popularity(const UploadStats& stats, std::size_t station, std::size_t kind,
                         std::size_t t_end) {
  const auto all = stats.total(station, t_end);
  if (all == 0) return 0.0;
  return static_cast<double>(stats.uploads(station, kind, t_end)) / static_cast<double>(all);
}

double retention_rate(const UploadStats& stats, std::size_t station, std::size_t kind,
                      std::size_t t_end, double cap) {
  stats.bucket_of_window(t_end);
  if (t_end < 2 * stats.delta_t()) {
    throw NotEnoughData("retention_rate needs two full windows before tick " + std::to_string(t_end));
  }
  const auto now = stats.uploads(station, kind, t_end);
  const auto before = stats.uploads(station, kind, t_end - stats.delta_t());
  if (before == 0) return now == 0 ? 1.0 : cap;
  return static_cast<double>(now) / static_cast<double>(before);
}

void StateLadder::validate() const {
  for (const auto* lv : {&pop_levels, &rop_levels}) {
    for (std::size_t k = 1; k < lv->size(); ++k) {
      if (!((*lv)[k] < (*lv)[k - 1])) throw std::invalid_argument("ladder thresholds must strictly decrease");
    }
  }
}

std::vector<double> quantile_levels(std::vector<double> values, const std::vector<double>& quantiles) {
  std::vector<double> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  for (double q : quantiles) {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile outside [0,1]");
    // Linear interpolation between order statistics.
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double v = values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    if (v > 0.0 && (out.empty() || v < out.back())) out.push_back(v);
  }
  return out;
}

std::size_t classify(double value, const StateLadder& ladder, Ladder which) {
  const auto& lv = ladder.levels(which);
  std::size_t k = 0;
  while (k < lv.size() && value < lv[k]) ++k;
  return k;
}

SemiMarkovChain::SemiMarkovChain(std::size_t states, std::size_t horizon_)
    : num_states(states), horizon(horizon_), z(states * states * horizon_, 0.0) {
  if (states == 0 || horizon_ == 0) throw std::invalid_argument("SemiMarkovChain: empty shape");
}

double SemiMarkovChain::cumulative(std::size_t p, std::size_t q, std::size_t dt) const {
  if (p >= num_states || q >= num_states) throw std::invalid_argument("unknown semi-Markov state");
  if (dt == 0) return 0.0;
  dt = std::min(dt, horizon);
  return z[(p * num_states + q) * horizon + dt - 1];
}

void SemiMarkovChain::set(std::size_t p, std::size_t q, std::size_t dt, double value) {
  if (p >= num_states || q >= num_states) throw std::invalid_argument("unknown semi-Markov state");
  if (dt == 0 || dt > horizon) throw std::invalid_argument("dt outside 1..horizon");
  z[(p * num_states + q) * horizon + dt - 1] = value;
}

void SemiMarkovChain::validate() const {
  if (z.size() != num_states * num_states * horizon) throw std::invalid_argument("Z table has wrong size");
  for (std::size_t p = 0; p < num_states; ++p) {
    double row = 0.0;
    for (std::size_t q = 0; q < num_states; ++q) {
      double prev = 0.0;
      for (std::size_t dt = 1; dt <= horizon; ++dt) {
        const double v = cumulative(p, q, dt);
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("Z outside [0,1]");
        if (v + 1e-12 < prev) throw std::invalid_argument("Z decreasing in dt");
        prev = v;
      }
      row += prev;
    }
    if (row > 1.0 + 1e-9) throw std::invalid_argument("Z row sum exceeds 1");
  }
}

SemiMarkovChain fit_chain(const std::vector<std::vector<std::size_t>>& trajectories,
                          std::size_t num_states, std::size_t horizon) {
  SemiMarkovChain chain(num_states, horizon);
  // counts[p][q][tau], tau in 1..horizon; longer sojourns count toward N_p only.
  std::vector<double> counts(num_states * num_states * horizon, 0.0);
  std::vector<double> leaving(num_states, 0.0);
  for (const auto& seq : trajectories) {
    std::size_t start = 0;
    for (std::size_t k = 1; k < seq.size(); ++k) {
      if (seq[k] >= num_states || seq[start] >= num_states) throw std::invalid_argument("state out of range");
      if (seq[k] == seq[k - 1]) continue;
      const std::size_t p = seq[k - 1];
      const std::size_t tau = k - start;
      leaving[p] += 1.0;
      if (tau <= horizon) counts[(p * num_states + seq[k]) * horizon + tau - 1] += 1.0;
      start = k;
    }
  }
  if (num_states == 1) return chain;
  const double pseudo = 1.0 / static_cast<double>(horizon);
  for (std::size_t p = 0; p < num_states; ++p) {
    const double denom = leaving[p] + static_cast<double>(num_states - 1);
    for (std::size_t q = 0; q < num_states; ++q) {
      if (q == p) continue;
      double cum = 0.0;
      for (std::size_t dt = 1; dt <= horizon; ++dt) {
        cum += counts[(p * num_states + q) * horizon + dt - 1] + pseudo;
        chain.set(p, q, dt, cum / denom);
      }
    }
  }
  return chain;
}

double first_transition_prob(const SemiMarkovChain& chain, std::size_t p, std::size_t q,
                             std::size_t dt) {
  if (dt == 0) throw std::invalid_argument("first_transition_prob: dt must be >= 1");
  return chain.cumulative(p, q, dt) - chain.cumulative(p, q, dt - 1);
}

double first_passage_prob(const SemiMarkovChain& chain, std::size_t cur, std::size_t target,
                          std::size_t dt, ClampCounter* counter) {
  const std::size_t n = chain.num_states;
  if (cur >= n || target >= n) throw std::invalid_argument("unknown semi-Markov state");

  // q[d * n + s]: value of the recursion started in s with d steps left.
  std::vector<double> q((dt + 1) * n, 0.0);
  q[target] = 1.0;
  for (std::size_t d = 1; d <= dt; ++d) {
    for (std::size_t s = 0; s < n; ++s) {
      double conv = 0.0;
      double left = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        if (s == target && r == s) continue;
        for (std::size_t x = 1; x <= d; ++x) {
          conv += first_transition_prob(chain, s, r, x) * q[(d - x) * n + r];
        }
        if (r != s) left += chain.cumulative(s, r, d);
      }
      double value = s == target ? 1.0 - left + conv : conv;
      if (counter != nullptr) ++counter->evaluations;
      if (value < 0.0 || value > 1.0) {
        value = std::clamp(value, 0.0, 1.0);
        if (counter != nullptr) ++counter->clamped;
      }
      q[d * n + s] = value;
    }
  }
  return q[dt * n + cur];
}

double caching_metric(const SemiMarkovModel& model, std::size_t pop_state, std::size_t rop_state,
                      std::size_t dt, ClampCounter* counter) {
  if (dt == 0) throw std::invalid_argument("caching_metric: dt must be positive");
  return first_passage_prob(model.pop, pop_state, 0, dt, counter) *
         first_passage_prob(model.rop, rop_state, 0, dt, counter);
}

std::vector<double> zipf_pmf(double xi, std::size_t num_kinds) {
  if (!(xi >= 0.0)) throw std::invalid_argument("zipf exponent must be >= 0");
  if (num_kinds == 0) throw std::invalid_argument("zipf needs at least one kind");
  std::vector<double> p(num_kinds);
  double sum = 0.0;
  for (std::size_t k = 0; k < num_kinds; ++k) {
    p[k] = std::pow(static_cast<double>(k + 1), -xi);
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<std::size_t> zipf_sample(const ZipfWorkload& workload, std::size_t n) {
  const auto pmf = zipf_pmf(workload.xi, workload.num_kinds);
  std::mt19937_64 rng(workload.rng_seed);
  std::discrete_distribution<std::size_t> pick(pmf.begin(), pmf.end());
  std::vector<std::size_t> out(n);
  for (auto& k : out) k = pick(rng);
  return out;
}

namespace {

void write_chain_rows(std::ostream& out, std::size_t kind, const SemiMarkovChain& c) {
  for (std::size_t p = 0; p < c.num_states; ++p) {
    for (std::size_t q = 0; q < c.num_states; ++q) {
      for (std::size_t dt = 1; dt <= c.horizon; ++dt) {
        csv::write_row(out, {std::to_string(kind), std::to_string(p), std::to_string(q),
                             std::to_string(dt), csv::fmt(c.cumulative(p, q, dt))});
      }
    }
  }
}

std::vector<SemiMarkovChain> read_chains(const csv::Table& t) {
  const auto ck = t.column("kind"), cp = t.column("p"), cq = t.column("q"), cd = t.column("dt"),
             cz = t.column("Z");
  std::size_t kinds = 0, states = 0, horizon = 0;
  for (const auto& row : t.rows) {
    kinds = std::max(kinds, static_cast<std::size_t>(csv::to_int(row[ck])) + 1);
    states = std::max({states, static_cast<std::size_t>(csv::to_int(row[cp])) + 1,
                       static_cast<std::size_t>(csv::to_int(row[cq])) + 1});
    horizon = std::max(horizon, static_cast<std::size_t>(csv::to_int(row[cd])));
  }
  std::vector<SemiMarkovChain> chains(kinds, SemiMarkovChain(std::max<std::size_t>(states, 1),
                                                             std::max<std::size_t>(horizon, 1)));
  for (const auto& row : t.rows) {
    chains[static_cast<std::size_t>(csv::to_int(row[ck]))].set(
        static_cast<std::size_t>(csv::to_int(row[cp])), static_cast<std::size_t>(csv::to_int(row[cq])),
        static_cast<std::size_t>(csv::to_int(row[cd])), csv::to_double(row[cz]));
  }
  for (const auto& c : chains) c.validate();
  return chains;
}

}  // namespace

void write_models_csv(std::ostream& out, const std::vector<SemiMarkovModel>& models) {
  const std::vector<std::string> header{"kind", "p", "q", "dt", "Z"};
  out << "[pop]\n";
  csv::write_row(out, header);
  for (std::size_t k = 0; k < models.size(); ++k) write_chain_rows(out, k, models[k].pop);
  out << "[rop]\n";
  csv::write_row(out, header);
  for (std::size_t k = 0; k < models.size(); ++k) write_chain_rows(out, k, models[k].rop);
}

std::vector<SemiMarkovModel> read_models_csv(std::istream& in) {
  const auto sections = csv::read_sections(in);
  const auto pop_it = sections.find("pop");
  const auto rop_it = sections.find("rop");
  if (pop_it == sections.end() || rop_it == sections.end()) {
    throw std::invalid_argument("model file needs [pop] and [rop] sections");
  }
  auto pop = read_chains(pop_it->second);
  auto rop = read_chains(rop_it->second);
  if (pop.size() != rop.size()) throw std::invalid_argument("pop and rop sections cover different kinds");
  std::vector<SemiMarkovModel> models(pop.size());
  for (std::size_t k = 0; k < pop.size(); ++k) models[k] = {std::move(pop[k]), std::move(rop[k])};
  return models;
}

DemandPredictor::DemandPredictor(std::size_t num_stations, std::size_t num_kinds, std::size_t delta_t,
                                 std::size_t model_horizon, std::size_t classes)
    : stats_(num_stations, num_kinds, delta_t), horizon_(model_horizon), classes_(classes) {
  if (model_horizon == 0) throw std::invalid_argument("model horizon must be >= 1");
  if (classes < 2 || classes > 4) throw std::invalid_argument("ladders support 2 to 4 classes");
  pop_traj_.assign(num_kinds, std::vector<std::vector<std::size_t>>(num_stations));
  rop_traj_ = pop_traj_;
}

std::vector<double> DemandPredictor::close_window(std::size_t t, std::size_t prediction_steps,
                                                  ClampCounter* counter) {
  stats_.bucket_of_window(t);
  const std::size_t b = stats_.num_stations();
  const std::size_t k = stats_.num_kinds();
  const bool have_rop = t >= 2 * stats_.delta_t();
  std::vector<double> qs;
  for (std::size_t c = 1; c < classes_; ++c) qs.push_back(1.0 - static_cast<double>(c) / classes_);

  std::vector<double> pop(b * k), rop(b * k, 1.0), pop_seen, rop_seen;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      pop[i * k + j] = static_popularity(stats_, i, j, t);
      if (pop[i * k + j] > 0.0) pop_seen.push_back(pop[i * k + j]);
      if (have_rop && stats_.uploads(i, j, t - stats_.delta_t()) > 0) {
        rop_seen.push_back(retention_rate(stats_, i, j, t, 0.0));
      }
    }
  }
  ladder_ = {quantile_levels(pop_seen, qs), quantile_levels(rop_seen, qs)};
  const double rop_cap = ladder_.rop_levels.empty() ? 1.0 : ladder_.rop_levels.front();
  if (have_rop) {
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < k; ++j) rop[i * k + j] = retention_rate(stats_, i, j, t, rop_cap);
    }
  }

  std::vector<std::size_t> pop_cls(b * k), rop_cls(b * k);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      pop_cls[i * k + j] = classify(pop[i * k + j], ladder_, Ladder::Pop);
      rop_cls[i * k + j] = classify(rop[i * k + j], ladder_, Ladder::Rop);
      pop_traj_[j][i].push_back(pop_cls[i * k + j]);
      rop_traj_[j][i].push_back(rop_cls[i * k + j]);
    }
  }
  ++windows_;

  models_.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    models_[j].pop = fit_chain(pop_traj_[j], classes_, horizon_);
    models_[j].rop = fit_chain(rop_traj_[j], classes_, horizon_);
  }

  std::vector<double> p(b * k);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      p[i * k + j] = caching_metric(models_[j], pop_cls[i * k + j], rop_cls[i * k + j], prediction_steps, counter);
    }
  }
  return p;
}

}  // namespace edgecoop::popularity
