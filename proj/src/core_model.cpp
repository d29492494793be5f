#include "edgecoop/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace edgecoop::core {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

double distance(Position a, Position b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

void ChannelModel::validate() const {
  require_positive(bandwidth, "bandwidth");
  require_positive(tx_power_user, "tx_power_user");
  require_positive(tx_power_bs, "tx_power_bs");
  require_positive(noise_psd, "noise_psd");
  require_positive(path_loss_exp, "path_loss_exp");
  require_positive(kappa, "kappa");
  require_positive(f_local, "f_local");
}

void CostWeights::validate() const {
  if (!(coe >= 0.0 && coe <= 1.0)) throw std::invalid_argument("coe must lie in [0,1]");
  if (!(alpha1 >= 0.0 && alpha1 <= 1.0)) throw std::invalid_argument("alpha1 must lie in [0,1]");
}

double dbm_per_hz_to_watts(double dbm) noexcept { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double shannon_rate(const ChannelModel& ch, double tx_power, double distance) {
  require_positive(distance, "distance");
  if (!(tx_power >= 0.0)) throw std::invalid_argument("tx_power must be nonnegative");
  const double snr =
      tx_power * std::pow(distance, -ch.path_loss_exp) / (ch.noise_psd * ch.bandwidth);
  return ch.bandwidth * std::log2(1.0 + snr);
}

double exec_time(const Task& task, double f) {
  require_positive(f, "cpu frequency");
  return task.c / f;
}

double upload_time(const Task& task, double rate) {
  require_positive(rate, "rate");
  return task.u / rate;
}

double down_time(const Task& task, double rate) {
  require_positive(rate, "rate");
  return task.r / rate;
}

double queue_time(std::span<const Task> ahead, std::span<const double> rates, double f) {
  if (ahead.size() != rates.size()) {
    throw std::invalid_argument("queue_time: one rate per queued task is required");
  }
  require_positive(f, "cpu frequency");
  double wait_execute = 0.0;
  double wait_upload = 0.0;
  for (std::size_t k = 0; k < ahead.size(); ++k) {
    wait_execute += exec_time(ahead[k], f);
    wait_upload += upload_time(ahead[k], rates[k]);
  }
  return wait_upload + wait_execute;
}

double total_delay(const Task& task, std::span<const Task> ahead, const BaseStation& bs,
                   std::span<const double> rates) {
  if (rates.size() != ahead.size() + 1) {
    throw std::invalid_argument("total_delay: rates must cover the queue and the task");
  }
  const double own_rate = rates.back();
  return queue_time(ahead, rates.first(ahead.size()), bs.f) + exec_time(task, bs.f) +
         down_time(task, own_rate);
}

double energy(const Task& task, double rate, double f, const ChannelModel& ch) {
  require_positive(rate, "rate");
  require_positive(f, "cpu frequency");
  return ch.tx_power_user * task.u / rate + ch.kappa * f * f * task.c;
}

double priority(const Task& task, double rate, double f_remote, const ChannelModel& ch,
                const CostWeights& w) {
  require_positive(rate, "rate");
  require_positive(f_remote, "remote cpu frequency");
  require_positive(ch.f_local, "local cpu frequency");
  require_positive(task.u, "task input size");
  const double speedup = task.c / ch.f_local - task.c / f_remote;
  return (1.0 - w.alpha1) * speedup + w.alpha1 * (rate / task.u);
}

std::vector<Task> order_by_priority(std::span<const PrioritizedTask> tasks,
                                    const ChannelModel& ch, const CostWeights& w) {
  std::vector<std::pair<double, Task>> scored;
  scored.reserve(tasks.size());
  for (const auto& t : tasks) scored.emplace_back(priority(t.task, t.rate, t.f_remote, ch, w), t.task);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second.id < b.second.id;
  });
  std::vector<Task> out;
  out.reserve(scored.size());
  for (auto& [score, task] : scored) out.push_back(task);
  return out;
}

}  // namespace edgecoop::core
