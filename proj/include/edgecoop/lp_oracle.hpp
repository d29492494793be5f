#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "edgecoop/admm.hpp"

namespace edgecoop::admm {

struct LpSolution {
  bool feasible = false;
  double objective = 0.0;
  Eigen::MatrixXd x;
  std::size_t bases_tried = 0;
};

/// Exact optimum of the linear utility over the allocation polytope by
/// enumerating basic feasible solutions. Inequality rows that cannot be
/// tight anywhere on the box are skipped. Throws SizeLimitError when
/// stations*tasks exceeds `max_cells`.
LpSolution lp_oracle(const AllocationProblem& problem, std::size_t max_cells = 24);

}  // namespace edgecoop::admm
