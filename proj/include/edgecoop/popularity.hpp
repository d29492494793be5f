#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

namespace edgecoop::popularity {

/// Upload counts per (station, kind) in buckets of `delta_t` ticks. Ticks are
/// 1-based; bucket k >= 1 covers ticks ((k-1)*delta_t, k*delta_t]. A window
/// (t - delta_t, t] is aligned when t is a positive multiple of delta_t.
class UploadStats {
 public:
  UploadStats(std::size_t num_stations, std::size_t num_kinds, std::size_t delta_t);

  void record(std::size_t station, std::size_t kind, std::size_t tick, std::uint64_t count = 1);

  /// Uploads of `kind` at `station` in the window ending at `t_end`.
  std::uint64_t uploads(std::size_t station, std::size_t kind, std::size_t t_end) const;
  std::uint64_t total(std::size_t station, std::size_t t_end) const;

  std::size_t num_stations() const { return stations_; }
  std::size_t num_kinds() const { return kinds_; }
  std::size_t delta_t() const { return delta_t_; }
  /// Index of the last bucket that received a record (0 when empty).
  std::size_t last_bucket() const { return last_bucket_; }

  /// Throws std::invalid_argument unless t_end is a positive multiple of delta_t.
  std::size_t bucket_of_window(std::size_t t_end) const;

 private:
  std::size_t stations_;
  std::size_t kinds_;
  std::size_t delta_t_;
  std::size_t last_bucket_ = 0;
  // bucket -> counts laid out station-major
  std::map<std::size_t, std::vector<std::uint64_t>> buckets_;
};

/// Share of the station's uploads in the window that belong to `kind`.
/// Zero when the station saw no uploads at all.
double static_popularity(const UploadStats& stats, std::size_t station, std::size_t kind,
                         std::size_t t_end);

/// Uploads in the window ending at t_end over uploads in the window before it.
/// 0/0 gives 1; k/0 gives `cap`. Throws NotEnoughData when t_end < 2*delta_t.
double retention_rate(const UploadStats& stats, std::size_t station, std::size_t kind,
                      std::size_t t_end, double cap);

enum class Ladder { Pop, Rop };

/// Class thresholds, strictly decreasing. With k thresholds there are k+1
/// classes; class 0 is the top class (l_1 / w_1).
struct StateLadder {
  std::vector<double> pop_levels;
  std::vector<double> rop_levels;

  const std::vector<double>& levels(Ladder which) const {
    return which == Ladder::Pop ? pop_levels : rop_levels;
  }
  std::size_t num_states(Ladder which) const { return levels(which).size() + 1; }
  void validate() const;
};

/// Thresholds at the given quantiles of `values` (descending quantile order
/// gives descending thresholds). Non-positive and repeated thresholds are
/// dropped so that zero always lands in the bottom class.
std::vector<double> quantile_levels(std::vector<double> values,
                                    const std::vector<double>& quantiles = {0.75, 0.5, 0.25});

/// Class of `value`; a value equal to a threshold goes to the higher class.
std::size_t classify(double value, const StateLadder& ladder, Ladder which);

/// Cumulative transition table Z(p, q, dt) for dt = 1..horizon of one chain.
/// Beyond the horizon Z is taken as flat.
struct SemiMarkovChain {
  std::size_t num_states = 0;
  std::size_t horizon = 0;
  std::vector<double> z;  // index (p * num_states + q) * horizon + (dt - 1)

  SemiMarkovChain() = default;
  SemiMarkovChain(std::size_t states, std::size_t horizon);

  double cumulative(std::size_t p, std::size_t q, std::size_t dt) const;
  void set(std::size_t p, std::size_t q, std::size_t dt, double value);
  void validate() const;
};

/// Fits Z from state sequences sampled once per window. Each completed run of
/// state p followed by q != p is one (p, q, sojourn) observation; the last run
/// of every sequence is censored and ignored. Every target q != p receives one
/// extra pseudo-observation spread evenly over dt = 1..horizon.
SemiMarkovChain fit_chain(const std::vector<std::vector<std::size_t>>& trajectories,
                          std::size_t num_states, std::size_t horizon);

/// POP and ROP chains of one task kind.
struct SemiMarkovModel {
  SemiMarkovChain pop;
  SemiMarkovChain rop;
};

/// Probability that the first jump out of p goes to q exactly dt steps later.
double first_transition_prob(const SemiMarkovChain& chain, std::size_t p, std::size_t q,
                             std::size_t dt);

struct ClampCounter {
  std::size_t evaluations = 0;
  std::size_t clamped = 0;
  double rate() const {
    return evaluations == 0 ? 0.0 : static_cast<double>(clamped) / static_cast<double>(evaluations);
  }
};

/// Convolution recursion for reaching `target` from `cur` in dt steps. Every
/// intermediate value is clamped to [0,1]; clamps are tallied in `counter`.
double first_passage_prob(const SemiMarkovChain& chain, std::size_t cur, std::size_t target,
                          std::size_t dt, ClampCounter* counter = nullptr);

/// Product of the POP and ROP probabilities of reaching class 0 within dt.
double caching_metric(const SemiMarkovModel& model, std::size_t pop_state, std::size_t rop_state,
                      std::size_t dt, ClampCounter* counter = nullptr);

struct ZipfWorkload {
  double xi = 0.8;
  std::size_t num_kinds = 1;
  std::uint64_t rng_seed = 0;
};

/// P(kind k) proportional to (k+1)^-xi for 0-based k.
std::vector<double> zipf_pmf(double xi, std::size_t num_kinds);

std::vector<std::size_t> zipf_sample(const ZipfWorkload& workload, std::size_t n);

/// Per-kind models as CSV: a [pop] and a [rop] section, each with columns
/// kind,p,q,dt,Z.
void write_models_csv(std::ostream& out, const std::vector<SemiMarkovModel>& models);
std::vector<SemiMarkovModel> read_models_csv(std::istream& in);

/// Rolling predictor: windowed upload statistics, per-window POP/ROP ladders,
/// class trajectories per (station, kind) and per-kind fitted chains.
/// Ladders use quantiles of the positive popularities seen in the window and
/// of the retention rates with a nonzero denominator; every ladder has at
/// most `classes` classes, so chains always have that many states.
class DemandPredictor {
 public:
  DemandPredictor(std::size_t num_stations, std::size_t num_kinds, std::size_t delta_t,
                  std::size_t model_horizon, std::size_t classes = 4);

  void record(std::size_t station, std::size_t kind, std::size_t tick, std::uint64_t count = 1) {
    stats_.record(station, kind, tick, count);
  }

  /// Closes the window ending at t (a multiple of delta_t), appends each
  /// pair's classes and refits. Returns the caching metric per pair, laid
  /// out station-major.
  std::vector<double> close_window(std::size_t t, std::size_t prediction_steps,
                                   ClampCounter* counter = nullptr);

  const UploadStats& stats() const { return stats_; }
  const StateLadder& ladder() const { return ladder_; }
  const std::vector<SemiMarkovModel>& models() const { return models_; }
  std::size_t windows() const { return windows_; }

 private:
  UploadStats stats_;
  std::size_t horizon_;
  std::size_t classes_;
  std::size_t windows_ = 0;
  StateLadder ladder_;
  // [kind][station] -> class per window
  std::vector<std::vector<std::vector<std::size_t>>> pop_traj_;
  std::vector<std::vector<std::vector<std::size_t>>> rop_traj_;
  std::vector<SemiMarkovModel> models_;
};

}  // namespace edgecoop::popularity
