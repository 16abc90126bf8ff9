#pragma once

#include "hocurve/functional.hpp"
#include "hocurve/geometry.hpp"
#include "hocurve/linsolve.hpp"
#include "hocurve/mesh.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hocurve {

struct NewtonOptions {
  /// Relative mode stops at |g|_inf <= rel_tol * |g_0|_inf; absolute mode at
  /// |g|_inf < abs_tol. Both stop once |g|_inf < abs_tol.
  bool relative = true;
  double rel_tol = 0.1;
  double abs_tol = 1e-8;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
  int max_iterations = 50;
};

struct NewtonStats {
  int iterations = 0;
  int outer_linear_iterations = 0;
  int inner_linear_iterations = 0;
  /// Iterations that used -g because the Newton direction was not a descent
  /// direction.
  int gradient_steps = 0;
  /// Linear solves that stopped at the iteration cap.
  int unconverged_solves = 0;
  double initial_grad_inf = 0.0;
  double grad_inf = 0.0;
  double value = 0.0;
  bool converged = false;
};

/// Smooth objective with a linear solver for its Hessian. value returns
/// +infinity outside the domain.
struct NewtonProblem {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  /// Approximate solution of H(x) d = rhs; adds to the linear counters.
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& rhs, SolveStats& stats)> solve;
};

/// Thrown when the line search finds no acceptable step; carries the last
/// accepted iterate.
class StagnationError : public Error {
 public:
  StagnationError(const std::string& message, Eigen::VectorXd x)
      : Error(ErrorCategory::Stagnation, message), x_(std::move(x)) {}
  const Eigen::VectorXd& iterate() const { return x_; }

 private:
  Eigen::VectorXd x_;
};

struct NewtonResult {
  Eigen::VectorXd x;
  NewtonStats stats;
};

/// Newton's method with Armijo backtracking. Non-descent directions are
/// replaced by the negative gradient. Hitting max_iterations is reported in
/// the stats, not thrown.
NewtonResult newton_minimize(const NewtonProblem& problem, Eigen::VectorXd x0, const NewtonOptions& options);

struct LinearSolverOptions {
  /// Matrix-free products preconditioned by block SOR; otherwise the Hessian
  /// is assembled and preconditioned by SSOR(2).
  bool block_sor = true;
  int restart = 20;
  int max_iter = 1000;
  /// Lower bound for the relative tolerance of the block solves.
  double inner_tol_floor = 1e-10;
};

struct MeshNewtonResult {
  HighOrderMesh mesh;
  /// Displacement from the reference configuration, component-major.
  Eigen::VectorXd displacement;
  NewtonStats stats;
};

/// Minimizes the penalty functional for fixed mu and frozen target from the
/// displacement u0, solving each Newton system to relative tolerance delta.
MeshNewtonResult newton_solve(const PenaltyProblem& problem, const Eigen::VectorXd& u0,
                              const NewtonOptions& options, const LinearSolverOptions& linear, double delta,
                              std::shared_ptr<const NodeGraph> graph = nullptr);

/// Same, starting from the mesh coordinates.
MeshNewtonResult newton_solve(const HighOrderMesh& mesh, double mu, const BoundaryTarget& target,
                              const NewtonOptions& options, const LinearSolverOptions& linear,
                              double delta, std::shared_ptr<const NodeGraph> graph = nullptr);

/// alpha * error_p < error_next (unnormalized boundary errors).
bool early_termination(double error_p, double error_next, double alpha = 2.0);

/// epsilon < epsilon_star and grad_inf < omega_star.
bool final_convergence(double epsilon, double grad_inf, double epsilon_star, double omega_star);

/// mu for the first problem of the next degree, mu_p * eps_p / eps_next;
/// mu_p when eps_next is zero.
double first_iteration_penalty_parameter(double eps_p, double eps_next, double mu_p);

struct PenaltyAdaption {
  double mu_next = 0.0;
  /// mu_next / mu_k.
  double factor = 0.0;
  double ratio = 0.0;          ///< s_k
  double indicator = 0.0;      ///< e_k
  double default_factor = 0.0; ///< m_k
  double optimal_factor = 0.0; ///< m*
};

/// Penalty growth at the last degree. `literal_optimal_factor` uses
/// m* = 1.01 eps*/eps_k instead of 1.01 eps_k/eps*, and `quotient_ratio`
/// uses s_k = (mu_{k-1}/mu_k) / (eps_{k-1}/eps_k) instead of the product.
PenaltyAdaption penalty_parameter_adaption(double mu_prev, double mu_k, double eps_prev, double eps_k,
                                           double eps_star, bool literal_optimal_factor = false,
                                           bool quotient_ratio = false);

/// Relative tolerance delta_max^(1-t) delta_min^t with
/// t = log(eps_0 / (eps_k / m)) / log(eps_0 / eps_star) clamped to [0, 1].
double compute_forcing_term(double eps_k, double eps_0, double eps_star, double m, double delta_max = 1e-3,
                            double delta_min = 1e-8);

/// One row per penalty iteration.
struct LogRow {
  int degree = 0;
  int k = 0;  ///< iteration within the degree, from 1
  double mu = 0.0;
  double epsilon = 0.0;
  double grad_inf = 0.0;
  double delta = 0.0;
  int newton_iterations = 0;
  int outer_linear_iterations = 0;
  int inner_linear_iterations = 0;
};

struct ConvergenceLog {
  std::vector<LogRow> rows;

  static const char* csv_header();
  static std::string csv_row(const LogRow& row);
  std::string to_csv() const;

  /// Rows of one degree.
  int iterations(int degree) const;
  long total_outer(int from_degree = 0, int to_degree = 99) const;
  long total_inner(int from_degree = 0, int to_degree = 99) const;
};

struct CurvingConfig {
  int p_max = 4;
  /// false: start directly at p_max from the identity map.
  bool p_continuation = true;
  /// Constraint tolerance relative to the characteristic length.
  double epsilon_star_relative = 1e-12;
  double omega_star = 1e-8;
  double alpha = 2.0;
  double mu0 = 10.0;
  double m0 = 10.0;
  bool adapt_mu = true;
  bool adapt_delta = true;
  double fixed_delta = 1e-8;
  double delta_max = 1e-3;
  double delta_min = 1e-8;
  bool literal_optimal_factor = false;
  bool quotient_ratio = false;
  int max_penalty_iterations = 100;
  NewtonOptions newton;
  LinearSolverOptions linear;
  /// Called after every penalty iteration.
  std::function<void(const LogRow&)> on_iteration;
};

struct CurvingSummary {
  bool converged = false;
  int degree = 0;
  double epsilon = 0.0;
  double epsilon_star = 0.0;
  double grad_inf = 0.0;
  double omega_star = 0.0;
  double min_quality = 0.0;
  double mean_quality = 0.0;
  double max_quality = 0.0;
  double min_jacobian = 0.0;
  double wall_time = 0.0;
  int penalty_iterations = 0;
  int newton_iterations = 0;
  long outer_linear_iterations = 0;
  long inner_linear_iterations = 0;

  std::string to_json() const;
};

struct CurvingResult {
  HighOrderMesh mesh;
  ConvergenceLog log;
  CurvingSummary summary;
};

/// Failure of the curving driver with the last mesh and the log so far.
class CurvingError : public Error {
 public:
  CurvingError(ErrorCategory category, const std::string& message, HighOrderMesh mesh, ConvergenceLog log)
      : Error(category, message), mesh_(std::move(mesh)), log_(std::move(log)) {}
  const HighOrderMesh& mesh() const { return mesh_; }
  const ConvergenceLog& log() const { return log_; }

 private:
  HighOrderMesh mesh_;
  ConvergenceLog log_;
};

/// Curves a linear mesh onto the model with p-continuation from degree 2
/// to config.p_max.
CurvingResult curve_mesh(const HighOrderMesh& linear_mesh, const GeometryModel& model,
                         const CurvingConfig& config);

}  // namespace hocurve
