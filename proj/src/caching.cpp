#include "edgecoop/caching.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "edgecoop/csv.hpp"

namespace edgecoop::caching {

CacheMatrix::CacheMatrix(std::size_t num_stations, std::size_t num_kinds, std::vector<double> space)
    : kinds_(num_kinds), ca_(num_stations * num_kinds, 0), used_(num_stations, 0.0),
      space_(std::move(space)) {
  if (space_.size() != num_stations) throw std::invalid_argument("CacheMatrix: space size mismatch");
  for (double s : space_) {
    if (!(s >= 0.0)) throw std::invalid_argument("CacheMatrix: negative space");
  }
}

void CacheMatrix::place(std::size_t i, std::size_t j, double size) {
  if (i >= num_stations() || j >= kinds_) throw std::invalid_argument("CacheMatrix: index out of range");
  if (cached(i, j)) throw std::invalid_argument("CacheMatrix: kind already cached");
  if (!fits(i, size)) throw std::invalid_argument("CacheMatrix: placement exceeds space");
  ca_[i * kinds_ + j] = 1;
  used_[i] += size;
}

std::size_t CacheMatrix::count() const {
  return static_cast<std::size_t>(std::count(ca_.begin(), ca_.end(), std::uint8_t{1}));
}

void TransferGraph::validate() const {
  if (dis.rows() != dis.cols() || rate.rows() != dis.rows() || rate.cols() != dis.cols()) {
    throw std::invalid_argument("TransferGraph: matrices must be square and equal in size");
  }
  for (Eigen::Index a = 0; a < dis.rows(); ++a) {
    if (dis(a, a) != 0.0) throw std::invalid_argument("TransferGraph: nonzero self distance");
    for (Eigen::Index b = 0; b < dis.cols(); ++b) {
      if (a == b) continue;
      if (!(dis(a, b) > 0.0) || dis(a, b) != dis(b, a)) {
        throw std::invalid_argument("TransferGraph: distances must be positive and symmetric");
      }
      if (!(rate(a, b) > 0.0)) throw std::invalid_argument("TransferGraph: rates must be positive");
    }
  }
}

TransferGraph TransferGraph::from_positions(std::span<const core::Position> where,
                                            const core::ChannelModel& channel) {
  const auto n = static_cast<Eigen::Index>(where.size());
  TransferGraph g{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (a == b) continue;
      // Co-located stations are kept one metre apart so the rate stays finite.
      const double d = std::max(1.0, core::distance(where[a], where[b]));
      g.dis(a, b) = d;
      g.rate(a, b) = core::shannon_rate(channel, channel.tx_power_bs, d);
    }
  }
  return g;
}

void PlanningInput::validate() const {
  graph.validate();
  const auto b = static_cast<Eigen::Index>(num_stations());
  const auto k = static_cast<Eigen::Index>(num_kinds());
  if (graph.dis.rows() != b) throw std::invalid_argument("PlanningInput: graph size mismatch");
  if (p.rows() != b || p.cols() != k || miss_cost.rows() != b || miss_cost.cols() != k) {
    throw std::invalid_argument("PlanningInput: matrix shape mismatch");
  }
  if ((p.array() < 0.0).any() || (p.array() > 1.0).any()) {
    throw std::invalid_argument("PlanningInput: metric outside [0,1]");
  }
  if ((miss_cost.array() < 0.0).any()) throw std::invalid_argument("PlanningInput: negative miss cost");
  for (double u : kind_size) {
    if (!(u > 0.0)) throw std::invalid_argument("PlanningInput: kind sizes must be positive");
  }
}

std::optional<std::size_t> nearest_holder(const CacheMatrix& ca, const TransferGraph& graph,
                                          std::size_t j, std::size_t i) {
  std::optional<std::size_t> best;
  for (std::size_t m = 0; m < ca.num_stations(); ++m) {
    if (m == i || !ca.cached(m, j)) continue;
    if (!best || graph.dis(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) <
                     graph.dis(static_cast<Eigen::Index>(*best), static_cast<Eigen::Index>(i))) {
      best = m;
    }
  }
  return best;
}

TransferCost transfer_cost(const CacheMatrix& ca, const TransferGraph& graph, double kind_size,
                           double miss_cost, std::size_t j, std::size_t i) {
  if (i >= ca.num_stations() || j >= ca.num_kinds()) throw std::invalid_argument("transfer_cost: index out of range");
  if (ca.cached(i, j)) return {TransferCase::Local, 0.0, i};
  if (const auto m = nearest_holder(ca, graph, j, i)) {
    return {TransferCase::Neighbor,
            kind_size / graph.rate(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*m)), m};
  }
  return {TransferCase::Uncached, miss_cost, std::nullopt};
}

namespace {

double kind_cost(const CacheMatrix& ca, const PlanningInput& in, std::size_t j) {
  double sum = 0.0;
  for (std::size_t i = 0; i < in.num_stations(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    if (in.p(ii, jj) == 0.0) continue;
    sum += in.p(ii, jj) * transfer_cost(ca, in.graph, in.kind_size[j], in.miss_cost(ii, jj), j, i).seconds;
  }
  return sum;
}

}  // namespace

double objective(const CacheMatrix& ca, const PlanningInput& in) {
  double total = 0.0;
  for (std::size_t j = 0; j < in.num_kinds(); ++j) total += kind_cost(ca, in, j);
  return total;
}

double placement_benefit(const CacheMatrix& ca, const PlanningInput& in, std::size_t j,
                         std::size_t i) {
  if (ca.cached(i, j) || !ca.fits(i, in.kind_size[j])) return 0.0;
  // Only column j changes. Before any holder exists every station pays its
  // miss cost; otherwise each pays the trip from its nearest holder, and the
  // new copy at i can only shorten those trips.
  double saved = 0.0;
  const auto jj = static_cast<Eigen::Index>(j);
  for (std::size_t m = 0; m < in.num_stations(); ++m) {
    const auto mm = static_cast<Eigen::Index>(m);
    if (in.p(mm, jj) == 0.0) continue;
    const double before = transfer_cost(ca, in.graph, in.kind_size[j], in.miss_cost(mm, jj), j, m).seconds;
    const double via_i =
        m == i ? 0.0 : in.kind_size[j] / in.graph.rate(mm, static_cast<Eigen::Index>(i));
    if (via_i < before) saved += in.p(mm, jj) * (before - via_i);
  }
  return saved;
}

CacheBenefit benefits(const CacheMatrix& ca, const PlanningInput& in) {
  CacheBenefit out;
  const auto b = in.num_stations();
  const auto k = in.num_kinds();
  out.g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k));
  out.b_sets.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < b; ++i) {
      if (!ca.cached(i, j)) out.b_sets[j].push_back(i);
      out.g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = placement_benefit(ca, in, j, i);
    }
  }
  return out;
}

Plan greedy_plan(const PlanningInput& in) {
  in.validate();
  Plan plan{CacheMatrix(in.num_stations(), in.num_kinds(), in.space), {}};
  auto& ca = plan.cache;
  for (;;) {
    bool room = false;
    for (std::size_t i = 0; i < ca.num_stations(); ++i) room = room || ca.used(i) < ca.space(i);
    if (!room) break;

    Placement best;
    for (std::size_t i = 0; i < in.num_stations(); ++i) {
      for (std::size_t j = 0; j < in.num_kinds(); ++j) {
        const double g = placement_benefit(ca, in, j, i);
        if (g > best.benefit) best = {i, j, g};
      }
    }
    if (!(best.benefit > 0.0)) break;
    ca.place(best.station, best.kind, in.kind_size[best.kind]);
    plan.steps.push_back(best);
  }
  return plan;
}

LookupResult lookup(const CacheMatrix& ca, const TransferGraph& graph, std::size_t j, std::size_t i) {
  if (i >= ca.num_stations() || j >= ca.num_kinds()) throw std::invalid_argument("lookup: index out of range");
  if (ca.cached(i, j)) return {LookupKind::Hit, i};
  if (const auto m = nearest_holder(ca, graph, j, i)) return {LookupKind::NeighborHit, m};
  return {};
}

CacheMatrix random_fill(std::span<const double> space, std::span<const double> kind_size,
                        std::mt19937_64& rng) {
  CacheMatrix ca(space.size(), kind_size.size(), {space.begin(), space.end()});
  std::vector<std::size_t> order(kind_size.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (auto j : order) {
      if (ca.fits(i, kind_size[j])) ca.place(i, j, kind_size[j]);
    }
  }
  return ca;
}

void write_cache_csv(std::ostream& out, const CacheMatrix& ca) {
  csv::write_row(out, {"bs_id", "kind_id"});
  for (std::size_t i = 0; i < ca.num_stations(); ++i) {
    for (std::size_t j = 0; j < ca.num_kinds(); ++j) {
      if (ca.cached(i, j)) csv::write_row(out, {std::to_string(i), std::to_string(j)});
    }
  }
}

CacheMatrix read_cache_csv(std::istream& in, std::span<const double> space,
                           std::span<const double> kind_size) {
  const auto t = csv::read_table(in);
  const auto cb = t.column("bs_id");
  const auto ck = t.column("kind_id");
  CacheMatrix ca(space.size(), kind_size.size(), {space.begin(), space.end()});
  for (const auto& row : t.rows) {
    const auto i = csv::to_int(row[cb]);
    const auto j = csv::to_int(row[ck]);
    if (i < 0 || j < 0 || static_cast<std::size_t>(j) >= kind_size.size()) {
      throw std::invalid_argument("cache CSV: index out of range");
    }
    ca.place(static_cast<std::size_t>(i), static_cast<std::size_t>(j), kind_size[static_cast<std::size_t>(j)]);
  }
  return ca;
}

}  // namespace edgecoop::caching
