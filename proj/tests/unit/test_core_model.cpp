#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "edgecoop/core_model.hpp"

using namespace edgecoop::core;

namespace {

Task make(double u, double c, double r, double t_max = 20.0, TaskId id = 0) {
  Task t;
  t.id = id;
  t.u = u;
  t.c = c;
  t.r = r;
  t.t_max = t_max;
  return t;
}

}  // namespace

TEST_CASE("task validity") {
  CHECK(make(1, 1, 0).valid());
  CHECK_FALSE(make(0, 1, 0).valid());
  CHECK_FALSE(make(1, 0, 0).valid());
  CHECK_FALSE(make(1, 1, -1).valid());
  CHECK_FALSE(make(1, 1, 0, 0.0).valid());
}

TEST_CASE("channel and weights validation") {
  ChannelModel ch;
  CHECK_NOTHROW(ch.validate());
  ch.bandwidth = 0;
  CHECK_THROWS_AS(ch.validate(), std::invalid_argument);
  CostWeights w;
  w.coe = 1.5;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w.coe = 1.0;
  w.alpha1 = -0.1;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}

TEST_CASE("noise conversion") {
  CHECK(dbm_per_hz_to_watts(-172.0) == doctest::Approx(6.3095734448019436e-21).epsilon(1e-12));
  CHECK(ChannelModel{}.noise_psd == doctest::Approx(dbm_per_hz_to_watts(-172.0)).epsilon(1e-14));
}

TEST_CASE("shannon rate") {
  const ChannelModel ch;
  // Frozen from a separate evaluation of the closed form at 100 m.
  CHECK(shannon_rate(ch, 0.1, 100.0) == doctest::Approx(259045600.8569464).epsilon(1e-12));
  CHECK(shannon_rate(ch, 0.1, 50.0) > shannon_rate(ch, 0.1, 100.0));
  CHECK(shannon_rate(ch, 0.2, 100.0) > shannon_rate(ch, 0.1, 100.0));
  CHECK(shannon_rate(ch, 0.0, 100.0) == 0.0);
  CHECK(shannon_rate(ch, 0.1, 1e7) < 1e-3);
  CHECK_THROWS_AS(shannon_rate(ch, 0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(shannon_rate(ch, 0.1, -5.0), std::invalid_argument);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(1.0, 500.0);
  for (int k = 0; k < 500; ++k) {
    const double a = d(rng), b = d(rng);
    if (a == b) continue;
    CHECK((shannon_rate(ch, 0.1, std::min(a, b)) > shannon_rate(ch, 0.1, std::max(a, b))));
  }
}

TEST_CASE("execution, upload and download times") {
  CHECK(exec_time(make(1, 10, 0), 10.0) == 1.0);
  CHECK(exec_time(make(1, 18000.0 * 5000.0, 0), 10e9) == doctest::Approx(0.009).epsilon(1e-14));
  CHECK_THROWS_AS(exec_time(make(1, 1, 0), 0.0), std::invalid_argument);
  CHECK(down_time(make(1, 1, 0), 5.0) == 0.0);
  CHECK(down_time(make(1, 1, 2000), 1000.0) == 2.0);
  const double v = shannon_rate(ChannelModel{}, 0.1, 100.0);
  CHECK(down_time(make(5000, 1, 1500), v) == doctest::Approx(5.7904862890466525e-06).epsilon(1e-12));
  CHECK_THROWS_AS(down_time(make(1, 1, 1), -1.0), std::invalid_argument);
  CHECK(upload_time(make(3000, 1, 0), 1000.0) == 3.0);
}

TEST_CASE("queue time sums the tasks ahead") {
  const std::vector<Task> none;
  const std::vector<double> no_rates;
  CHECK(queue_time(none, no_rates, 1.0) == 0.0);

  // exec 1 s, upload 2 s
  const std::vector<Task> one = {make(2000, 10, 0)};
  const std::vector<double> r1 = {1000.0};
  CHECK(queue_time(one, r1, 10.0) == 3.0);

  const std::vector<Task> three = {make(1000, 5e8, 10), make(7000, 2e8, 0), make(4000, 9e8, 5)};
  const std::vector<double> r3 = {1e6, 3e6, 2.5e5};
  const double f = 2e9;
  double by_hand = 0.0;
  for (std::size_t k = 0; k < 3; ++k) by_hand += three[k].c / f + three[k].u / r3[k];
  CHECK(queue_time(three, r3, f) == doctest::Approx(by_hand).epsilon(1e-15));

  CHECK_THROWS_AS(queue_time(three, r1, f), std::invalid_argument);
}

TEST_CASE("total delay is the sum of its parts") {
  BaseStation bs;
  bs.f = 10.0;
  // queue 3 s (exec 1 + upload 2), own exec 1 s, download 2 s
  const std::vector<Task> ahead = {make(2000, 10, 0)};
  const std::vector<double> rates = {1000.0, 1000.0};
  CHECK(total_delay(make(1, 10, 2000), ahead, bs, rates) == 6.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Task> q;
    std::vector<double> r;
    const int n = static_cast<int>(unit(rng) * 6);
    for (int k = 0; k < n; ++k) {
      q.push_back(make(5e3 + 5e3 * unit(rng), 1e8 * (1 + unit(rng)), 1e3 * unit(rng)));
      r.push_back(1e6 + 1e8 * unit(rng));
    }
    const Task me = make(5e3 + 5e3 * unit(rng), 1e8 * (1 + unit(rng)), 1e3 * unit(rng));
    bs.f = 1e10 + 9e10 * unit(rng);
    const double own = 1e6 + 1e8 * unit(rng);
    std::vector<double> all = r;
    all.push_back(own);
    const double parts = queue_time(q, r, bs.f) + exec_time(me, bs.f) + down_time(me, own);
    CHECK(total_delay(me, q, bs, all) == doctest::Approx(parts).epsilon(1e-14));
    CHECK(total_delay(me, q, bs, all) >= 0.0);
  }
  CHECK_THROWS_AS(total_delay(make(1, 1, 1), ahead, bs, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("energy") {
  ChannelModel ch;
  ch.tx_power_user = 0.0;
  ch.kappa = 0.0;
  CHECK(energy(make(1000, 1e9, 0), 1000.0, 1e9, ch) == 0.0);
  ch.tx_power_user = 0.1;
  CHECK(energy(make(1000, 1e9, 0), 1000.0, 1e9, ch) == doctest::Approx(0.1).epsilon(1e-15));
  ch = ChannelModel{};
  ch.tx_power_user = 0.0;
  CHECK(energy(make(1, 9e7, 0), 1.0, 10e9, ch) == doctest::Approx(90.0).epsilon(1e-12));
  CHECK_THROWS_AS(energy(make(1, 1, 0), 0.0, 1.0, ch), std::invalid_argument);
  CHECK_THROWS_AS(energy(make(1, 1, 0), 1.0, 0.0, ch), std::invalid_argument);
}

TEST_CASE("priority score") {
  ChannelModel ch;
  CostWeights w;
  w.alpha1 = 0.0;
  CHECK(priority(make(7500, 1.35e8, 0), 1e6, ch.f_local, ch, w) == 0.0);
  w.alpha1 = 1.0;
  CHECK(priority(make(7500, 1.35e8, 0), 3e6, 50e9, ch, w) == 3e6 / 7500.0);
  w.alpha1 = 0.5;
  const double v = shannon_rate(ch, 0.1, 100.0);
  CHECK(priority(make(7500, 1.35e8, 0), v, 50e9, ch, w) == doctest::Approx(17269.772873796424).epsilon(1e-12));
  CHECK_THROWS_AS(priority(make(7500, 1, 0), 0.0, 1.0, ch, w), std::invalid_argument);
}

TEST_CASE("priority order: descending score, ties by id") {
  ChannelModel ch;
  CostWeights w;
  w.alpha1 = 1.0;
  std::vector<PrioritizedTask> ts = {
      {make(1000, 1, 0, 20, 5), 2000.0, 1e9},  // score 2
      {make(1000, 1, 0, 20, 2), 4000.0, 1e9},  // score 4
      {make(1000, 1, 0, 20, 1), 2000.0, 1e9},  // score 2, lower id
  };
  const auto order = order_by_priority(ts, ch, w);
  REQUIRE(order.size() == 3);
  CHECK(order[0].id == 2);
  CHECK(order[1].id == 1);
  CHECK(order[2].id == 5);
}

TEST_CASE("with alpha1 = 0 the ranking ignores a common scale on cycles") {
  ChannelModel ch;
  CostWeights w;
  w.alpha1 = 0.0;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PrioritizedTask> ts, scaled;
    for (TaskId id = 0; id < 8; ++id) {
      const Task t = make(5e3 + 5e3 * unit(rng), 1e8 * (1 + unit(rng)), 0, 20, id);
      ts.push_back({t, 1e6 + 1e8 * unit(rng), 1e10 + 9e10 * unit(rng)});
      Task big = t;
      big.c *= 7.5;
      scaled.push_back({big, ts.back().rate, ts.back().f_remote});
    }
    const auto a = order_by_priority(ts, ch, w);
    const auto b = order_by_priority(scaled, ch, w);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].id == b[k].id);
  }
}
