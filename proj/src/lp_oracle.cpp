#include "edgecoop/lp_oracle.hpp"

#include <bit>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "edgecoop/error.hpp"

namespace edgecoop::admm {

namespace {

struct Row {
  Eigen::VectorXd a;  // over flattened cells, index i + j*b
  double rhs = 0.0;
};

// Inequality rows a.x <= rhs of the allocation polytope.
std::vector<Row> inequality_rows(const AllocationProblem& p) {
  const auto b = p.num_stations();
  const auto h = p.num_tasks();
  const auto n = b * h;
  std::vector<Row> rows;
  for (Eigen::Index i = 0; i < b; ++i) {
    Row cap{Eigen::VectorXd::Zero(n), p.stations[i].compute_cap};
    Row sto{Eigen::VectorXd::Zero(n), p.stations[i].storage_cap};
    for (Eigen::Index j = 0; j < h; ++j) {
      cap.a(i + j * b) = p.tasks[j].c;
      sto.a(i + j * b) = p.tasks[j].u;
    }
    rows.push_back(std::move(cap));
    rows.push_back(std::move(sto));
  }
  for (Eigen::Index j = 0; j < h; ++j) {
    Row dl{Eigen::VectorXd::Zero(n), p.tasks[j].t_max};
    for (Eigen::Index i = 0; i < b; ++i) {
      for (Eigen::Index jj = 0; jj < j; ++jj) dl.a(i + jj * b) += p.exec(i, jj) + p.upload(i, jj);
      dl.a(i + j * b) += p.upload(i, j) + p.exec(i, j) + p.download(i, j);
    }
    rows.push_back(std::move(dl));
  }
  return rows;
}

}  // namespace

LpSolution lp_oracle(const AllocationProblem& problem, std::size_t max_cells) {
  problem.validate();
  const auto b = problem.num_stations();
  const auto h = problem.num_tasks();
  const auto n = b * h;
  if (static_cast<std::size_t>(n) > max_cells || n > 30) {
    throw SizeLimitError("lp_oracle: " + std::to_string(n) + " cells exceed the limit of " +
                         std::to_string(max_cells));
  }

  const auto all_rows = inequality_rows(problem);
  // Over x in [0,1]^n the largest value of a row is the sum of its
  // (nonnegative) coefficients; rows that stay strictly below rhs never bind.
  std::vector<const Row*> candidates;
  for (const auto& r : all_rows) {
    if (r.a.sum() >= r.rhs * (1.0 - 1e-12)) candidates.push_back(&r);
  }

  Eigen::MatrixXd g = problem.cost_gradient();
  Eigen::VectorXd cost(n);
  for (Eigen::Index j = 0; j < h; ++j) {
    for (Eigen::Index i = 0; i < b; ++i) cost(i + j * b) = g(i, j);
  }

  // Supports that give every task at least one basic cell, bucketed by size.
  std::vector<std::uint32_t> task_mask(static_cast<std::size_t>(h), 0);
  for (Eigen::Index j = 0; j < h; ++j) {
    for (Eigen::Index i = 0; i < b; ++i) task_mask[j] |= 1u << (i + j * b);
  }
  std::vector<std::vector<std::uint32_t>> supports(static_cast<std::size_t>(n) + 1);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    bool covers = true;
    for (auto tm : task_mask) {
      if (!(mask & tm)) {
        covers = false;
        break;
      }
    }
    if (covers) supports[std::popcount(mask)].push_back(mask);
  }

  LpSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  const auto k = candidates.size();
  const std::size_t max_tight = std::min<std::size_t>(k, static_cast<std::size_t>(n - h));
  const double feas_tol = 1e-9;

  std::vector<std::size_t> tight;
  // Enumerate tight subsets in increasing bitmask order.
  for (std::uint64_t tmask = 0; tmask < (std::uint64_t{1} << k); ++tmask) {
    const auto t_count = static_cast<std::size_t>(std::popcount(tmask));
    if (t_count > max_tight) continue;
    tight.clear();
    for (std::size_t r = 0; r < k; ++r) {
      if (tmask & (std::uint64_t{1} << r)) tight.push_back(r);
    }
    const auto m = static_cast<Eigen::Index>(h + static_cast<Eigen::Index>(t_count));
    for (auto smask : supports[static_cast<std::size_t>(m)]) {
      std::vector<Eigen::Index> cols;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (smask & (1u << c)) cols.push_back(c);
      }
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
      Eigen::VectorXd rhs(m);
      for (Eigen::Index j = 0; j < h; ++j) {
        for (Eigen::Index q = 0; q < m; ++q) {
          if (cols[q] / b == j) a(j, q) = 1.0;
        }
        rhs(j) = 1.0;
      }
      for (std::size_t t = 0; t < t_count; ++t) {
        const Row& row = *candidates[tight[t]];
        const auto r = h + static_cast<Eigen::Index>(t);
        for (Eigen::Index q = 0; q < m; ++q) a(r, q) = row.a(cols[q]) / row.rhs;
        rhs(r) = 1.0;
      }
      ++best.bases_tried;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd sol = lu.solve(rhs);
      if ((sol.array() < -feas_tol).any()) continue;
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      for (Eigen::Index q = 0; q < m; ++q) x(cols[q]) = std::max(0.0, sol(q));
      bool feasible = (x.array() <= 1.0 + feas_tol).all();
      for (std::size_t r = 0; feasible && r < all_rows.size(); ++r) {
        if (all_rows[r].a.dot(x) > all_rows[r].rhs * (1.0 + feas_tol) + feas_tol) feasible = false;
      }
      if (!feasible) continue;
      const double obj = cost.dot(x);
      if (obj < best.objective) {
        best.objective = obj;
        best.feasible = true;
        best.x = Eigen::Map<const Eigen::MatrixXd>(x.data(), b, h);
      }
    }
  }
  if (best.feasible) best.objective = problem.objective(best.x);
  return best;
}

}  // namespace edgecoop::admm
