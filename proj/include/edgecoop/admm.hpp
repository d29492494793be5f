#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edgecoop/core_model.hpp"

namespace edgecoop::admm {

/// Station data the allocation program needs.
struct StationSpec {
  core::StationId id = 0;
  double f = 0.0;            // cycles/s
  double compute_cap = 0.0;  // cycles per allocation round
  double storage_cap = 0.0;  // bits
};

/// Weighted delay+energy allocation program for one group. Rows of every
/// coefficient matrix index stations, columns index tasks in service order.
struct AllocationProblem {
  std::vector<core::Task> tasks;
  std::vector<StationSpec> stations;
  double coe = 0.5;
  Eigen::MatrixXd exec;      // c_j / f_i
  Eigen::MatrixXd upload;    // u_j / v_ij
  Eigen::MatrixXd download;  // r_j / v_ij
  Eigen::MatrixXd energy;    // P_U u_j / v_ij + kappa f_i^2 c_j

  Eigen::Index num_stations() const { return static_cast<Eigen::Index>(stations.size()); }
  Eigen::Index num_tasks() const { return static_cast<Eigen::Index>(tasks.size()); }

  void validate() const;

  /// Coefficient of x_ij in the utility: the queue coupling makes task j's
  /// execution and upload count once for itself and once for every later task.
  Eigen::MatrixXd cost_gradient() const;

  /// Utility (weighted total delay plus energy) evaluated term by term.
  double objective(const Eigen::MatrixXd& x) const;

  /// Expected delay of each task summed over stations, the left-hand side of
  /// the deadline constraints.
  Eigen::VectorXd deadline_load(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd compute_load(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd storage_load(const Eigen::MatrixXd& x) const;
};

/// Builds the program from per-(station, task) upload rates. `tasks` must
/// already be in service (priority) order.
AllocationProblem build_problem(std::span<const StationSpec> stations,
                                std::span<const core::Task> tasks, const Eigen::MatrixXd& rates,
                                const core::ChannelModel& channel, double coe);

struct SolverConfig {
  double rho = 2.0;
  double alpha2 = 0.5;         // Gaussian back substitution corrector
  std::size_t max_iters = 200; // kappa
  double tol = 1e-3;
  /// Step of the projected multiplier ascent. Zero means "use rho".
  double multiplier_step = 0.0;
  /// Shift each task's cost so its cheapest station costs zero, then divide by
  /// a reference gap so rho acts on a unit scale.
  bool normalize_cost = true;
  bool record_iterates = false;

  void validate() const;
  double step() const { return multiplier_step > 0.0 ? multiplier_step : rho; }
};

struct PrimalState {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
};

/// Multipliers. Box and capacity multipliers are kept nonnegative.
struct DualState {
  Eigen::MatrixXd lambda;  // x = y
  Eigen::VectorXd v;       // sum_i x_ij = 1
  Eigen::VectorXd z;       // sum_i y_ij = 1
  Eigen::MatrixXd beta;    // x >= 0
  Eigen::MatrixXd gamma;   // x <= 1
  Eigen::VectorXd eps;     // deadline, per task
  Eigen::VectorXd delta;   // compute capacity, per station
  Eigen::MatrixXd mu;      // y >= 0
  Eigen::MatrixXd varsigma;// y <= 1
  Eigen::VectorXd vartheta;// storage capacity, per station
};

PrimalState initial_primal(const AllocationProblem& problem);
DualState initial_duals(const AllocationProblem& problem);

/// Scaled quantities the block updates work with. Compute rows are measured
/// in mean-task units, storage and deadline rows have unit right-hand sides.
struct ScaledProblem {
  Eigen::MatrixXd cost;         // (cost gradient - per-task minimum) / cost_scale
  double cost_scale = 1.0;
  Eigen::MatrixXd compute_row;  // c_j / mean task cycles
  Eigen::VectorXd compute_rhs;  // M_c_i / mean task cycles
  Eigen::MatrixXd storage_row;  // u_j / M_u_i
  Eigen::MatrixXd own_delay;    // (upload + exec + download) / t_max_j
  Eigen::MatrixXd carry_delay;  // exec + upload, carried into later tasks' rows
  Eigen::VectorXd inv_deadline; // 1 / t_max_j
};

ScaledProblem scale_problem(const AllocationProblem& problem, bool normalize_cost);

/// Gradient of sum_j eps_j * (deadline row j) with respect to x_ij, in scaled units.
Eigen::MatrixXd deadline_gradient(const ScaledProblem& sp, const Eigen::VectorXd& eps);

/// Closed-form minimizer of the (i,j) x-subproblem, projected to [0,1].
/// `column` holds the current sweep values of x_.j (updated entries for
/// stations before i, previous-iteration entries after i). The box
/// multipliers beta_ij and gamma_ij take one projected ascent step.
double x_block_update(const ScaledProblem& sp, const SolverConfig& cfg, const PrimalState& state,
                      DualState& duals, const Eigen::MatrixXd& deadline_grad,
                      std::span<const double> column, Eigen::Index i, Eigen::Index j);

/// Same for y, using the freshly computed x.
double y_block_update(const ScaledProblem& sp, const SolverConfig& cfg, const PrimalState& state,
                      DualState& duals, std::span<const double> column, Eigen::Index i,
                      Eigen::Index j);

/// Builds O^{-1} M^T for blocks 2..n with scalar coefficients A_l and the
/// trailing multiplier coordinate. Upper triangular.
Eigen::MatrixXd correction_matrix(std::span<const double> a_coeffs, double rho);

/// Solves correction_matrix * (V_next - V) = alpha2 * (V_pred - V) by back
/// substitution and returns V_next. `a_coeffs` empty means all ones.
Eigen::VectorXd gaussian_back_substitution(const Eigen::VectorXd& v, const Eigen::VectorXd& v_pred,
                                           double alpha2, double rho,
                                           std::span<const double> a_coeffs = {});

/// lambda + rho * (x - y).
Eigen::MatrixXd dual_update(const PrimalState& state, const Eigen::MatrixXd& lambda, double rho);

struct IterationRecord {
  std::size_t k = 0;
  double objective = 0.0;
  double primal_residual = 0.0;      // max |x - y|
  double constraint_residual = 0.0;  // max_j |sum_i x_ij - 1|
  double dual_residual = 0.0;        // rho * max |y^{k+1} - y^k|
  double correction_gap = 0.0;       // ||V - V_pred|| over x and y sides
  double capacity_violation = 0.0;   // worst relative compute/storage overload
};

struct Iterate {
  Eigen::MatrixXd x;
  Eigen::MatrixXd lambda;
  Eigen::VectorXd v;
  Eigen::VectorXd z;
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  std::vector<Iterate> iterates;  // filled when record_iterates is set
};

enum class SolveStatus { Converged, ConvergedInfeasible, IterationCap };

const char* to_string(SolveStatus status);

struct SolveResult {
  PrimalState primal;
  DualState duals;
  SolveTrace trace;
  SolveStatus status = SolveStatus::IterationCap;
  double objective = 0.0;
  /// Largest relative capacity or deadline violation at the returned x.
  double max_violation = 0.0;
};

/// Multi-block ADMM with Gaussian back substitution on both the x and y sides.
SolveResult solve(const AllocationProblem& problem, const SolverConfig& cfg = {});

/// Integral assignment from a fractional x: each task goes to its largest
/// x_ij station that still has compute room, falling back to the largest x_ij.
std::vector<Eigen::Index> round_assignment(const AllocationProblem& problem, const Eigen::MatrixXd& x);

Eigen::MatrixXd assignment_matrix(const AllocationProblem& problem,
                                  std::span<const Eigen::Index> assignment);

/// Baseline: tasks in order, each to the cheapest station by its own cost
/// coefficient among stations with compute room left.
std::vector<Eigen::Index> greedy_assign(const AllocationProblem& problem);

struct ConvergenceReport {
  bool correction_vanishes = false;
  bool constraints_vanish = false;
  bool lyapunov_nonincreasing = false;
  bool residual_stable_after_burn_in = false;
  std::vector<std::string> violations;

  bool ok() const {
    return correction_vanishes && constraints_vanish && lyapunov_nonincreasing &&
           residual_stable_after_burn_in;
  }
};

struct ConvergenceCheckConfig {
  double tol = 1e-3;
  /// The correction gap is a Euclidean norm over every block, so it is also
  /// accepted once it has shrunk to this share of its largest value.
  double gap_reduction = 1e-2;
  std::size_t burn_in = 30;
  double burn_in_factor = 1.5;
  std::size_t smoothing_window = 5;
  double lyapunov_slack = 1e-9;
};

/// Empirical convergence diagnostics: the constraint residuals fall below
/// tolerance, the predictor-corrector gap falls below tolerance or well under
/// its peak, a smoothed Lyapunov
/// surrogate does not increase over the trailing half of the run, and the
/// primal residual stays bounded after burn-in.
ConvergenceReport empirical_convergence_check(const SolveTrace& trace,
                                              const ConvergenceCheckConfig& cfg = {});

void write_trace_csv(std::ostream& out, const SolveTrace& trace);

/// Problem fixture format: [problem], [tasks], [stations], [coefficients]
/// blocks of comma-separated rows with a header line each.
void write_problem_csv(std::ostream& out, const AllocationProblem& problem);
AllocationProblem read_problem_csv(std::istream& in);

}  // namespace edgecoop::admm
