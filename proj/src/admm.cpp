#include "edgecoop/admm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "edgecoop/csv.hpp"
#include "edgecoop/error.hpp"

namespace edgecoop::admm {

namespace {

void check_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(std::string("coefficient matrix '") + name + "' has the wrong shape");
  }
  if (!m.allFinite() || (m.array() < 0.0).any()) {
    throw std::invalid_argument(std::string("coefficient matrix '") + name +
                                "' must be finite and nonnegative");
  }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void AllocationProblem::validate() const {
  if (tasks.empty()) throw std::invalid_argument("allocation problem has no tasks");
  if (stations.empty()) throw std::invalid_argument("allocation problem has no stations");
  if (!(coe >= 0.0 && coe <= 1.0)) throw std::invalid_argument("coe must lie in [0,1]");
  for (const auto& s : stations) {
    if (!(s.f > 0.0) || !(s.compute_cap > 0.0) || !(s.storage_cap > 0.0)) {
      throw std::invalid_argument("station frequency and capacities must be positive");
    }
  }
  for (const auto& t : tasks) {
    if (!t.valid()) throw std::invalid_argument("invalid task in allocation problem");
  }
  const auto b = num_stations();
  const auto h = num_tasks();
  check_shape(exec, b, h, "exec");
  check_shape(upload, b, h, "upload");
  check_shape(download, b, h, "download");
  check_shape(energy, b, h, "energy");
}

Eigen::MatrixXd AllocationProblem::cost_gradient() const {
  const auto b = num_stations();
  const auto h = num_tasks();
  Eigen::MatrixXd g(b, h);
  for (Eigen::Index j = 0; j < h; ++j) {
    const double multiplicity = static_cast<double>(h - j);
    for (Eigen::Index i = 0; i < b; ++i) {
      g(i, j) = coe * (multiplicity * (exec(i, j) + upload(i, j)) + download(i, j)) +
                (1.0 - coe) * energy(i, j);
    }
  }
  return g;
}

double AllocationProblem::objective(const Eigen::MatrixXd& x) const {
  const auto b = num_stations();
  const auto h = num_tasks();
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    double waiting_exec = 0.0;  // sum over j' < j
    double waiting_up = 0.0;    // sum over j' <= j
    for (Eigen::Index j = 0; j < h; ++j) {
      waiting_up += upload(i, j) * x(i, j);
      const double delay = waiting_exec + waiting_up + (exec(i, j) + download(i, j)) * x(i, j);
      total += coe * delay + (1.0 - coe) * energy(i, j) * x(i, j);
      waiting_exec += exec(i, j) * x(i, j);
    }
  }
  return total;
}

Eigen::VectorXd AllocationProblem::deadline_load(const Eigen::MatrixXd& x) const {
  const auto b = num_stations();
  const auto h = num_tasks();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(h);
  for (Eigen::Index i = 0; i < b; ++i) {
    double waiting_exec = 0.0;
    double waiting_up = 0.0;
    for (Eigen::Index j = 0; j < h; ++j) {
      waiting_up += upload(i, j) * x(i, j);
      load(j) += waiting_exec + waiting_up + (exec(i, j) + download(i, j)) * x(i, j);
      waiting_exec += exec(i, j) * x(i, j);
    }
  }
  return load;
}

Eigen::VectorXd AllocationProblem::compute_load(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(num_stations());
  for (Eigen::Index i = 0; i < num_stations(); ++i) {
    for (Eigen::Index j = 0; j < num_tasks(); ++j) load(i) += tasks[j].c * x(i, j);
  }
  return load;
}

Eigen::VectorXd AllocationProblem::storage_load(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(num_stations());
  for (Eigen::Index i = 0; i < num_stations(); ++i) {
    for (Eigen::Index j = 0; j < num_tasks(); ++j) load(i) += tasks[j].u * x(i, j);
  }
  return load;
}

AllocationProblem build_problem(std::span<const StationSpec> stations,
                                std::span<const core::Task> tasks, const Eigen::MatrixXd& rates,
                                const core::ChannelModel& channel, double coe) {
  if (tasks.empty()) throw std::invalid_argument("build_problem: empty task set");
  if (stations.empty()) throw std::invalid_argument("build_problem: no stations");
  const auto b = static_cast<Eigen::Index>(stations.size());
  const auto h = static_cast<Eigen::Index>(tasks.size());
  if (rates.rows() != b || rates.cols() != h) {
    throw std::invalid_argument("build_problem: rates must be stations x tasks");
  }
  AllocationProblem p;
  p.tasks.assign(tasks.begin(), tasks.end());
  p.stations.assign(stations.begin(), stations.end());
  p.coe = coe;
  p.exec.resize(b, h);
  p.upload.resize(b, h);
  p.download.resize(b, h);
  p.energy.resize(b, h);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < h; ++j) {
      const auto& t = tasks[j];
      const double f = stations[i].f;
      p.exec(i, j) = core::exec_time(t, f);
      p.upload(i, j) = core::upload_time(t, rates(i, j));
      p.download(i, j) = core::down_time(t, rates(i, j));
      p.energy(i, j) = core::energy(t, rates(i, j), f, channel);
    }
  }
  p.validate();
  return p;
}

void SolverConfig::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(alpha2 > 0.0 && alpha2 < 1.0)) throw std::invalid_argument("alpha2 must lie in (0,1)");
  if (max_iters < 1) throw std::invalid_argument("iteration cap must be at least 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (multiplier_step < 0.0) throw std::invalid_argument("multiplier step must be nonnegative");
}

PrimalState initial_primal(const AllocationProblem& problem) {
  const auto b = problem.num_stations();
  const auto h = problem.num_tasks();
  const double share = 1.0 / static_cast<double>(b);
  return {Eigen::MatrixXd::Constant(b, h, share), Eigen::MatrixXd::Constant(b, h, share)};
}

DualState initial_duals(const AllocationProblem& problem) {
  const auto b = problem.num_stations();
  const auto h = problem.num_tasks();
  DualState d;
  d.lambda = Eigen::MatrixXd::Zero(b, h);
  d.v = Eigen::VectorXd::Zero(h);
  d.z = Eigen::VectorXd::Zero(h);
  d.beta = Eigen::MatrixXd::Zero(b, h);
  d.gamma = Eigen::MatrixXd::Zero(b, h);
  d.eps = Eigen::VectorXd::Zero(h);
  d.delta = Eigen::VectorXd::Zero(b);
  d.mu = Eigen::MatrixXd::Zero(b, h);
  d.varsigma = Eigen::MatrixXd::Zero(b, h);
  d.vartheta = Eigen::VectorXd::Zero(b);
  return d;
}

ScaledProblem scale_problem(const AllocationProblem& problem, bool normalize_cost) {
  const auto b = problem.num_stations();
  const auto h = problem.num_tasks();
  ScaledProblem sp;
  sp.cost = problem.cost_gradient();
  if (normalize_cost) {
    // Every column of x sums to one, so subtracting a per-task constant from
    // the cost leaves the minimizer unchanged.
    for (Eigen::Index j = 0; j < h; ++j) sp.cost.col(j).array() -= sp.cost.col(j).minCoeff();
    std::vector<double> positive;
    for (Eigen::Index q = 0; q < sp.cost.size(); ++q) {
      if (sp.cost.data()[q] > 0.0) positive.push_back(sp.cost.data()[q]);
    }
    double scale = 0.0;
    if (!positive.empty()) {
      auto mid = positive.begin() + static_cast<std::ptrdiff_t>((positive.size() - 1) / 2);
      std::nth_element(positive.begin(), mid, positive.end());
      scale = *mid;
    }
    // When capacity pushes tasks onto expensive stations the multipliers have
    // to reach that cost; keep it at unit size.
    const auto greedy = greedy_assign(problem);
    for (Eigen::Index j = 0; j < h; ++j) scale = std::max(scale, sp.cost(greedy[j], j));
    if (scale > 0.0) sp.cost_scale = scale;
    sp.cost /= sp.cost_scale;
  }

  double mean_cycles = 0.0;
  for (const auto& t : problem.tasks) mean_cycles += t.c;
  mean_cycles /= static_cast<double>(h);

  sp.compute_row.resize(b, h);
  sp.compute_rhs.resize(b);
  sp.storage_row.resize(b, h);
  sp.own_delay.resize(b, h);
  sp.carry_delay.resize(b, h);
  sp.inv_deadline.resize(h);
  for (Eigen::Index j = 0; j < h; ++j) sp.inv_deadline(j) = 1.0 / problem.tasks[j].t_max;
  for (Eigen::Index i = 0; i < b; ++i) {
    sp.compute_rhs(i) = problem.stations[i].compute_cap / mean_cycles;
    for (Eigen::Index j = 0; j < h; ++j) {
      const auto& t = problem.tasks[j];
      sp.compute_row(i, j) = t.c / mean_cycles;
      sp.storage_row(i, j) = t.u / problem.stations[i].storage_cap;
      sp.own_delay(i, j) =
          (problem.upload(i, j) + problem.exec(i, j) + problem.download(i, j)) * sp.inv_deadline(j);
      sp.carry_delay(i, j) = problem.exec(i, j) + problem.upload(i, j);
    }
  }
  return sp;
}

Eigen::MatrixXd deadline_gradient(const ScaledProblem& sp, const Eigen::VectorXd& eps) {
  const auto b = sp.own_delay.rows();
  const auto h = sp.own_delay.cols();
  Eigen::MatrixXd grad(b, h);
  double later = 0.0;  // sum of eps_j / t_max_j over j > k
  for (Eigen::Index k = h - 1; k >= 0; --k) {
    for (Eigen::Index i = 0; i < b; ++i) {
      grad(i, k) = eps(k) * sp.own_delay(i, k) + sp.carry_delay(i, k) * later;
    }
    later += eps(k) * sp.inv_deadline(k);
  }
  return grad;
}

double x_block_update(const ScaledProblem& sp, const SolverConfig& cfg, const PrimalState& state,
                      DualState& duals, const Eigen::MatrixXd& deadline_grad,
                      std::span<const double> column, Eigen::Index i, Eigen::Index j) {
  if (!(cfg.rho > 0.0)) throw std::invalid_argument("rho must be positive");
  const double rho = cfg.rho;
  double others = 0.0;
  for (std::size_t m = 0; m < column.size(); ++m) {
    if (static_cast<Eigen::Index>(m) != i) others += column[m];
  }
  const double numerator = -sp.cost(i, j) - duals.lambda(i, j) + rho * state.y(i, j) - duals.v(j) -
                           rho * (others - 1.0) + duals.beta(i, j) - duals.gamma(i, j) -
                           deadline_grad(i, j);

  // Compute capacity enters as (rho/2) * max(0, delta/rho + load - rhs)^2, so
  // the subproblem is piecewise quadratic in x_ij with a kink where the
  // shifted load crosses zero.
  const double r = sp.compute_row(i, j);
  double rest = 0.0;
  for (Eigen::Index q = 0; q < state.x.cols(); ++q) {
    if (q != j) rest += sp.compute_row(i, q) * state.x(i, q);
  }
  const double shift = rest - sp.compute_rhs(i) + duals.delta(i) / rho;
  double x = clamp01(numerator / (2.0 * rho));
  if (r * x + shift > 0.0) x = clamp01((numerator - rho * r * shift) / (2.0 * rho + rho * r * r));

  const double eta = cfg.step();
  duals.beta(i, j) = std::max(0.0, duals.beta(i, j) - eta * x);
  duals.gamma(i, j) = std::max(0.0, duals.gamma(i, j) + eta * (x - 1.0));
  return x;
}

double y_block_update(const ScaledProblem& sp, const SolverConfig& cfg, const PrimalState& state,
                      DualState& duals, std::span<const double> column, Eigen::Index i,
                      Eigen::Index j) {
  if (!(cfg.rho > 0.0)) throw std::invalid_argument("rho must be positive");
  const double rho = cfg.rho;
  double others = 0.0;
  for (std::size_t m = 0; m < column.size(); ++m) {
    if (static_cast<Eigen::Index>(m) != i) others += column[m];
  }
  const double numerator = duals.lambda(i, j) + rho * state.x(i, j) - duals.z(j) -
                           rho * (others - 1.0) + duals.mu(i, j) - duals.varsigma(i, j) -
                           duals.vartheta(i) * sp.storage_row(i, j);
  const double y = clamp01(numerator / (2.0 * rho));
  const double eta = cfg.step();
  duals.mu(i, j) = std::max(0.0, duals.mu(i, j) - eta * y);
  duals.varsigma(i, j) = std::max(0.0, duals.varsigma(i, j) + eta * (y - 1.0));
  return y;
}

Eigen::MatrixXd correction_matrix(std::span<const double> a_coeffs, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  const auto n = static_cast<Eigen::Index>(a_coeffs.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd o(n + 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (a_coeffs[r] == 0.0) throw std::invalid_argument("block coefficients must be nonzero");
    for (Eigen::Index c = 0; c <= r; ++c) m(r, c) = rho * a_coeffs[r] * a_coeffs[c];
    o(r) = rho * a_coeffs[r] * a_coeffs[r];
  }
  m(n, n) = 1.0 / rho;
  o(n) = 1.0 / rho;
  return o.cwiseInverse().asDiagonal() * m.transpose();
}

Eigen::VectorXd gaussian_back_substitution(const Eigen::VectorXd& v, const Eigen::VectorXd& v_pred,
                                           double alpha2, double rho,
                                           std::span<const double> a_coeffs) {
  if (v.size() != v_pred.size() || v.size() < 1) {
    throw std::invalid_argument("gaussian_back_substitution: shape mismatch");
  }
  if (!(alpha2 > 0.0 && alpha2 < 1.0)) throw std::invalid_argument("alpha2 must lie in (0,1)");
  const auto n = v.size();
  std::vector<double> ones;
  if (a_coeffs.empty()) {
    ones.assign(static_cast<std::size_t>(n - 1), 1.0);
    a_coeffs = ones;
  }
  if (static_cast<Eigen::Index>(a_coeffs.size()) != n - 1) {
    throw std::invalid_argument("gaussian_back_substitution: one coefficient per corrected block");
  }
  const Eigen::MatrixXd u = correction_matrix(a_coeffs, rho);
  Eigen::VectorXd step(n);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    double rhs = alpha2 * (v_pred(r) - v(r));
    for (Eigen::Index c = r + 1; c < n; ++c) rhs -= u(r, c) * step(c);
    step(r) = rhs / u(r, r);
  }
  return v + step;
}

Eigen::MatrixXd dual_update(const PrimalState& state, const Eigen::MatrixXd& lambda, double rho) {
  return lambda + rho * (state.x - state.y);
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::ConvergedInfeasible: return "converged_infeasible";
    case SolveStatus::IterationCap: return "iteration_cap";
  }
  return "unknown";
}

namespace {

double capacity_violation(const AllocationProblem& p, const Eigen::MatrixXd& x) {
  double worst = 0.0;
  const auto compute = p.compute_load(x);
  const auto storage = p.storage_load(x);
  for (Eigen::Index i = 0; i < p.num_stations(); ++i) {
    worst = std::max(worst, compute(i) / p.stations[i].compute_cap - 1.0);
    worst = std::max(worst, storage(i) / p.stations[i].storage_cap - 1.0);
  }
  return worst;
}

double max_violation(const AllocationProblem& p, const Eigen::MatrixXd& x) {
  double worst = capacity_violation(p, x);
  const auto deadline = p.deadline_load(x);
  for (Eigen::Index j = 0; j < p.num_tasks(); ++j) {
    worst = std::max(worst, deadline(j) / p.tasks[j].t_max - 1.0);
  }
  return worst;
}

// One side (x or y) of an iteration: Gauss-Seidel predictor over stations,
// multiplier predictor, then the back-substitution correction. Returns the
// squared predictor/corrector gap.
template <typename BlockFn>
double sweep_and_correct(Eigen::MatrixXd& var, Eigen::VectorXd& multiplier, Eigen::Index j,
                         const SolverConfig& cfg, BlockFn&& block) {
  const auto b = var.rows();
  std::vector<double> column(var.col(j).data(), var.col(j).data() + b);
  for (Eigen::Index i = 0; i < b; ++i) column[static_cast<std::size_t>(i)] = block(column, i);
  const double col_sum = std::accumulate(column.begin(), column.end(), 0.0);
  const double multiplier_pred = multiplier(j) + cfg.rho * (col_sum - 1.0);

  Eigen::VectorXd current(b);
  Eigen::VectorXd predicted(b);
  for (Eigen::Index i = 1; i < b; ++i) {
    current(i - 1) = var(i, j);
    predicted(i - 1) = column[static_cast<std::size_t>(i)];
  }
  current(b - 1) = multiplier(j);
  predicted(b - 1) = multiplier_pred;
  const Eigen::VectorXd corrected = gaussian_back_substitution(current, predicted, cfg.alpha2, cfg.rho);

  var(0, j) = column[0];
  for (Eigen::Index i = 1; i < b; ++i) var(i, j) = clamp01(corrected(i - 1));
  multiplier(j) = corrected(b - 1);
  return (current - predicted).squaredNorm();
}

}  // namespace

SolveResult solve(const AllocationProblem& problem, const SolverConfig& cfg) {
  problem.validate();
  cfg.validate();
  const auto b = problem.num_stations();
  const auto h = problem.num_tasks();
  const ScaledProblem sp = scale_problem(problem, cfg.normalize_cost);
  const double eta = cfg.step();

  SolveResult result;
  result.primal = initial_primal(problem);
  result.duals = initial_duals(problem);
  auto& st = result.primal;
  auto& du = result.duals;

  for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
    const Eigen::MatrixXd y_prev = st.y;
    const Eigen::MatrixXd dgrad = deadline_gradient(sp, du.eps);
    double gap = 0.0;

    for (Eigen::Index j = 0; j < h; ++j) {
      gap += sweep_and_correct(st.x, du.v, j, cfg, [&](std::span<const double> col, Eigen::Index i) {
        return x_block_update(sp, cfg, st, du, dgrad, col, i, j);
      });
      // Deadline row j only involves columns <= j, which are final for this sweep.
      double row = 0.0;
      for (Eigen::Index i = 0; i < b; ++i) {
        for (Eigen::Index jj = 0; jj < j; ++jj) row += sp.carry_delay(i, jj) * st.x(i, jj);
        row += (problem.upload(i, j) + problem.exec(i, j) + problem.download(i, j)) * st.x(i, j);
      }
      du.eps(j) = std::max(0.0, du.eps(j) + eta * (row * sp.inv_deadline(j) - 1.0));
    }
    for (Eigen::Index i = 0; i < b; ++i) {
      const double load = sp.compute_row.row(i).dot(st.x.row(i));
      du.delta(i) = std::max(0.0, du.delta(i) + eta * (load - sp.compute_rhs(i)));
    }

    for (Eigen::Index j = 0; j < h; ++j) {
      gap += sweep_and_correct(st.y, du.z, j, cfg, [&](std::span<const double> col, Eigen::Index i) {
        return y_block_update(sp, cfg, st, du, col, i, j);
      });
    }
    for (Eigen::Index i = 0; i < b; ++i) {
      const double load = sp.storage_row.row(i).dot(st.y.row(i));
      du.vartheta(i) = std::max(0.0, du.vartheta(i) + eta * (load - 1.0));
    }

    du.lambda = dual_update(st, du.lambda, cfg.rho);

    IterationRecord rec;
    rec.k = k;
    rec.objective = problem.objective(st.x);
    rec.primal_residual = (st.x - st.y).cwiseAbs().maxCoeff();
    rec.constraint_residual = (st.x.colwise().sum().array() - 1.0).abs().maxCoeff();
    rec.dual_residual = cfg.rho * (st.y - y_prev).cwiseAbs().maxCoeff();
    rec.correction_gap = std::sqrt(gap);
    rec.capacity_violation = capacity_violation(problem, st.x);
    if (!std::isfinite(rec.objective) || !du.lambda.allFinite() || !du.v.allFinite() ||
        !du.z.allFinite() || !std::isfinite(rec.correction_gap)) {
      throw NumericalFailure("ADMM produced a non-finite value", k);
    }
    result.trace.records.push_back(rec);
    if (cfg.record_iterates) result.trace.iterates.push_back({st.x, du.lambda, du.v, du.z});

    if (rec.primal_residual < cfg.tol && rec.constraint_residual < cfg.tol &&
        rec.capacity_violation <= cfg.tol) {
      result.status = SolveStatus::Converged;
      break;
    }
  }

  result.objective = problem.objective(st.x);
  result.max_violation = max_violation(problem, st.x);
  if (result.status == SolveStatus::Converged && result.max_violation > cfg.tol) {
    result.status = SolveStatus::ConvergedInfeasible;
  }
  return result;
}

std::vector<Eigen::Index> round_assignment(const AllocationProblem& problem, const Eigen::MatrixXd& x) {
  const auto b = problem.num_stations();
  const auto h = problem.num_tasks();
  std::vector<double> compute_left(static_cast<std::size_t>(b));
  std::vector<double> storage_left(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) {
    compute_left[i] = problem.stations[i].compute_cap;
    storage_left[i] = problem.stations[i].storage_cap;
  }
  std::vector<Eigen::Index> out(static_cast<std::size_t>(h));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(b));
  for (Eigen::Index j = 0; j < h; ++j) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index c) { return x(a, j) > x(c, j); });
    Eigen::Index chosen = order.front();
    for (auto i : order) {
      if (compute_left[i] >= problem.tasks[j].c && storage_left[i] >= problem.tasks[j].u) {
        chosen = i;
        break;
      }
    }
    compute_left[chosen] -= problem.tasks[j].c;
    storage_left[chosen] -= problem.tasks[j].u;
    out[j] = chosen;
  }
  return out;
}

Eigen::MatrixXd assignment_matrix(const AllocationProblem& problem,
                                  std::span<const Eigen::Index> assignment) {
  if (static_cast<Eigen::Index>(assignment.size()) != problem.num_tasks()) {
    throw std::invalid_argument("assignment must name one station per task");
  }
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(problem.num_stations(), problem.num_tasks());
  for (std::size_t j = 0; j < assignment.size(); ++j) {
    if (assignment[j] < 0 || assignment[j] >= problem.num_stations()) {
      throw std::invalid_argument("assignment names an unknown station");
    }
    x(assignment[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return x;
}

std::vector<Eigen::Index> greedy_assign(const AllocationProblem& problem) {
  problem.validate();
  const Eigen::MatrixXd g = problem.cost_gradient();
  const auto b = problem.num_stations();
  std::vector<double> compute_left(static_cast<std::size_t>(b));
  std::vector<double> storage_left(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) {
    compute_left[i] = problem.stations[i].compute_cap;
    storage_left[i] = problem.stations[i].storage_cap;
  }
  std::vector<Eigen::Index> out;
  out.reserve(problem.tasks.size());
  for (Eigen::Index j = 0; j < problem.num_tasks(); ++j) {
    const auto& t = problem.tasks[j];
    Eigen::Index best = -1;
    Eigen::Index cheapest = 0;
    for (Eigen::Index i = 0; i < b; ++i) {
      if (g(i, j) < g(cheapest, j)) cheapest = i;
      const bool fits = compute_left[i] >= t.c && storage_left[i] >= t.u;
      if (fits && (best < 0 || g(i, j) < g(best, j))) best = i;
    }
    if (best < 0) best = cheapest;
    compute_left[best] -= t.c;
    storage_left[best] -= t.u;
    out.push_back(best);
  }
  return out;
}

ConvergenceReport empirical_convergence_check(const SolveTrace& trace,
                                              const ConvergenceCheckConfig& cfg) {
  ConvergenceReport report;
  const auto& rec = trace.records;
  if (rec.empty()) {
    report.violations.emplace_back("empty trace");
    return report;
  }
  const auto& last = rec.back();

  double peak_gap = 0.0;
  for (const auto& r : rec) peak_gap = std::max(peak_gap, r.correction_gap);
  report.correction_vanishes =
      last.correction_gap < std::max(cfg.tol, cfg.gap_reduction * peak_gap);
  if (!report.correction_vanishes) {
    report.violations.push_back("predictor/corrector gap stagnates at " + csv::fmt(last.correction_gap));
  }
  report.constraints_vanish = last.constraint_residual < cfg.tol && last.primal_residual < cfg.tol;
  if (!report.constraints_vanish) {
    report.violations.push_back("residual stagnation: primal " + csv::fmt(last.primal_residual) +
                                ", constraint " + csv::fmt(last.constraint_residual));
  }

  report.residual_stable_after_burn_in = true;
  if (rec.size() > cfg.burn_in) {
    const double anchor =
        std::max(cfg.burn_in_factor * rec[cfg.burn_in - 1].primal_residual, cfg.tol);
    for (std::size_t k = cfg.burn_in; k < rec.size(); ++k) {
      if (rec[k].primal_residual > anchor) {
        report.residual_stable_after_burn_in = false;
        report.violations.push_back("primal residual grows after burn-in at iteration " +
                                    std::to_string(rec[k].k));
        break;
      }
    }
  }

  const auto& it = trace.iterates;
  if (it.size() != rec.size()) {
    report.violations.emplace_back("iterates not recorded; Lyapunov check skipped");
    return report;
  }
  const auto& star = it.back();
  std::vector<double> surrogate(it.size());
  for (std::size_t k = 0; k < it.size(); ++k) {
    surrogate[k] = 0.5 * ((it[k].x - star.x).squaredNorm() + (it[k].lambda - star.lambda).squaredNorm() +
                          (it[k].v - star.v).squaredNorm() + (it[k].z - star.z).squaredNorm());
  }
  const std::size_t w = std::max<std::size_t>(1, cfg.smoothing_window);
  std::vector<double> smooth;
  for (std::size_t k = 0; k + w <= surrogate.size(); ++k) {
    double s = 0.0;
    for (std::size_t l = 0; l < w; ++l) s += surrogate[k + l];
    smooth.push_back(s / static_cast<double>(w));
  }
  report.lyapunov_nonincreasing = true;
  if (!smooth.empty()) {
    const double scale = std::max(1.0, smooth.front());
    for (std::size_t k = smooth.size() / 2 + 1; k < smooth.size(); ++k) {
      if (smooth[k] > smooth[k - 1] + cfg.lyapunov_slack * scale) {
        report.lyapunov_nonincreasing = false;
        report.violations.push_back("Lyapunov surrogate increases at iteration " +
                                    std::to_string(rec[k].k));
        break;
      }
    }
  }
  return report;
}

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
  out << "k,objective,primal_residual,constraint_residual,dual_residual\n";
  for (const auto& r : trace.records) {
    csv::write_row(out, {std::to_string(r.k), csv::fmt(r.objective), csv::fmt(r.primal_residual),
                         csv::fmt(r.constraint_residual), csv::fmt(r.dual_residual)});
  }
}

void write_problem_csv(std::ostream& out, const AllocationProblem& p) {
  out << "[problem]\nkey,value\ncoe," << csv::fmt(p.coe) << "\n";
  out << "[tasks]\nid,u,c,r,t_max,kind\n";
  for (const auto& t : p.tasks) {
    csv::write_row(out, {std::to_string(t.id), csv::fmt(t.u), csv::fmt(t.c), csv::fmt(t.r),
                         csv::fmt(t.t_max), std::to_string(t.kind)});
  }
  out << "[stations]\nid,f,compute_cap,storage_cap\n";
  for (const auto& s : p.stations) {
    csv::write_row(out, {std::to_string(s.id), csv::fmt(s.f), csv::fmt(s.compute_cap),
                         csv::fmt(s.storage_cap)});
  }
  out << "[coefficients]\nstation,task,exec,upload,download,energy\n";
  for (Eigen::Index i = 0; i < p.num_stations(); ++i) {
    for (Eigen::Index j = 0; j < p.num_tasks(); ++j) {
      csv::write_row(out, {std::to_string(i), std::to_string(j), csv::fmt(p.exec(i, j)),
                           csv::fmt(p.upload(i, j)), csv::fmt(p.download(i, j)),
                           csv::fmt(p.energy(i, j))});
    }
  }
}

AllocationProblem read_problem_csv(std::istream& in) {
  auto sections = csv::read_sections(in);
  for (const char* name : {"problem", "tasks", "stations", "coefficients"}) {
    if (!sections.count(name)) throw std::invalid_argument(std::string("missing [") + name + "] block");
  }
  AllocationProblem p;
  const auto& prob = sections["problem"];
  for (const auto& row : prob.rows) {
    if (row.at(0) == "coe") p.coe = csv::to_double(row.at(1));
  }
  const auto& tasks = sections["tasks"];
  for (const auto& row : tasks.rows) {
    core::Task t;
    t.id = static_cast<core::TaskId>(csv::to_int(row[tasks.column("id")]));
    t.u = csv::to_double(row[tasks.column("u")]);
    t.c = csv::to_double(row[tasks.column("c")]);
    t.r = csv::to_double(row[tasks.column("r")]);
    t.t_max = csv::to_double(row[tasks.column("t_max")]);
    t.kind = static_cast<core::KindId>(csv::to_int(row[tasks.column("kind")]));
    p.tasks.push_back(t);
  }
  const auto& st = sections["stations"];
  for (const auto& row : st.rows) {
    StationSpec s;
    s.id = static_cast<core::StationId>(csv::to_int(row[st.column("id")]));
    s.f = csv::to_double(row[st.column("f")]);
    s.compute_cap = csv::to_double(row[st.column("compute_cap")]);
    s.storage_cap = csv::to_double(row[st.column("storage_cap")]);
    p.stations.push_back(s);
  }
  const auto b = p.num_stations();
  const auto h = p.num_tasks();
  p.exec = Eigen::MatrixXd::Constant(b, h, -1.0);
  p.upload = p.exec;
  p.download = p.exec;
  p.energy = p.exec;
  const auto& co = sections["coefficients"];
  for (const auto& row : co.rows) {
    const auto i = static_cast<Eigen::Index>(csv::to_int(row[co.column("station")]));
    const auto j = static_cast<Eigen::Index>(csv::to_int(row[co.column("task")]));
    if (i < 0 || i >= b || j < 0 || j >= h) throw std::invalid_argument("coefficient index out of range");
    p.exec(i, j) = csv::to_double(row[co.column("exec")]);
    p.upload(i, j) = csv::to_double(row[co.column("upload")]);
    p.download(i, j) = csv::to_double(row[co.column("download")]);
    p.energy(i, j) = csv::to_double(row[co.column("energy")]);
  }
  p.validate();  // rejects any coefficient left at -1
  return p;
}

}  // namespace edgecoop::admm
