#include "hocurve/optimizer.hpp"

#include "hocurve/distortion.hpp"
#include "hocurve/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace hocurve {

NewtonResult newton_minimize(const NewtonProblem& problem, Eigen::VectorXd x, const NewtonOptions& options) {
  NewtonStats st;
  double F = problem.value(x);
  if (!std::isfinite(F))
    throw Error(ErrorCategory::InvalidConfiguration, "Newton: starting point is not valid");
  Eigen::VectorXd g = problem.gradient(x);
  double gi = g.lpNorm<Eigen::Infinity>();
  st.initial_grad_inf = gi;
  const double tol = options.relative ? options.rel_tol * gi : options.abs_tol;
  auto done = [&] { return gi < options.abs_tol || (options.relative && gi <= tol); };

  // Steps whose change in F is lost in rounding are still accepted when they
  // reduce the gradient.
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon();

  while (!done() && st.iterations < options.max_iterations) {
    SolveStats ls;
    Eigen::VectorXd d = problem.solve(x, -g, ls);
    st.outer_linear_iterations += ls.outer_iterations;
    st.inner_linear_iterations += ls.inner_iterations;
    double slope = g.dot(d);
    if (!d.allFinite() || !(slope < 0.0)) {
      d = -g;
      slope = -g.squaredNorm();
      ++st.gradient_steps;
    }
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn, gn;
    double Fn = 0.0;
    for (int bt = 0; bt <= options.max_backtracks; ++bt, t *= options.backtrack) {
      xn = x + t * d;
      Fn = problem.value(xn);
      if (!std::isfinite(Fn)) continue;
      if (Fn <= F + options.armijo * t * slope) {
        gn = problem.gradient(xn);
        accepted = true;
        break;
      }
      if (Fn - F <= roundoff * std::abs(F)) {
        gn = problem.gradient(xn);
        if (gn.lpNorm<Eigen::Infinity>() < gi) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted)
      throw StagnationError("line search found no acceptable step (gradient norm " + std::to_string(gi) + ")", x);
    x = std::move(xn);
    F = Fn;
    g = std::move(gn);
    gi = g.lpNorm<Eigen::Infinity>();
    ++st.iterations;
  }
  st.converged = done();
  st.grad_inf = gi;
  st.value = F;
  return {std::move(x), st};
}

MeshNewtonResult newton_solve(const PenaltyProblem& penalty, const Eigen::VectorXd& u0,
                              const NewtonOptions& options, const LinearSolverOptions& linear, double delta,
                              std::shared_ptr<const NodeGraph> graph) {
  if (!graph) graph = std::make_shared<NodeGraph>(penalty.mesh_at(u0));
  int unconverged = 0;

  NewtonProblem problem;
  problem.value = [&](const Eigen::VectorXd& u) { return penalty.value(u).value; };
  problem.gradient = [&](const Eigen::VectorXd& u) { return penalty.gradient(u); };
  problem.solve = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& rhs, SolveStats& stats) {
    const HessianOperator H(penalty.mesh_at(u), penalty.mu(), graph);
    const GmresOptions outer{delta, linear.restart, linear.max_iter};
    try {
      if (linear.block_sor) {
        GmresOptions inner = outer;
        inner.rel_tol = std::max(delta, linear.inner_tol_floor);
        const BlockSorPreconditioner P(H.assemble_diagonal_blocks(), H, inner);
        return gmres(H, &P, rhs, outer, stats);
      }
      const SparseMatrixR A = H.assemble();
      const MatrixOperator op(A);
      const SsorPreconditioner P(A);
      return gmres(op, &P, rhs, outer, stats);
    } catch (const NoConvergenceError& e) {
      ++unconverged;
      if (e.best_iterate().size() == rhs.size()) return Eigen::VectorXd(e.best_iterate());
      // An inner block solve failed; fall back to the gradient direction.
      return Eigen::VectorXd(rhs);
    }
  };

  NewtonResult r = newton_minimize(problem, u0, options);
  r.stats.unconverged_solves = unconverged;
  MeshNewtonResult out;
  out.mesh = penalty.mesh_at(r.x);
  out.displacement = std::move(r.x);
  out.stats = r.stats;
  return out;
}

MeshNewtonResult newton_solve(const HighOrderMesh& mesh, double mu, const BoundaryTarget& target,
                              const NewtonOptions& options, const LinearSolverOptions& linear,
                              double delta, std::shared_ptr<const NodeGraph> graph) {
  const PenaltyProblem penalty(mesh, target, mu);
  return newton_solve(penalty, penalty.displacement(mesh), options, linear, delta, std::move(graph));
}

bool early_termination(double error_p, double error_next, double alpha) {
  return alpha * error_p < error_next;
}

bool final_convergence(double epsilon, double grad_inf, double epsilon_star, double omega_star) {
  return epsilon < epsilon_star && grad_inf < omega_star;
}

double first_iteration_penalty_parameter(double eps_p, double eps_next, double mu_p) {
  if (!(eps_next > 0.0)) return mu_p;
  return mu_p * eps_p / eps_next;
}

PenaltyAdaption penalty_parameter_adaption(double mu_prev, double mu_k, double eps_prev, double eps_k,
                                           double eps_star, bool literal_optimal_factor, bool quotient_ratio) {
  PenaltyAdaption a;
  if (!(eps_k > 0.0)) {
    a.mu_next = mu_k;
    a.factor = 1.0;
    return a;
  }
  const double mu_ratio = mu_prev / mu_k;
  const double eps_ratio = eps_prev / eps_k;
  a.ratio = quotient_ratio ? mu_ratio / eps_ratio : mu_ratio * eps_ratio;
  a.indicator = std::max(a.ratio, 1.0 / a.ratio) - 1.0;
  a.default_factor = a.indicator < 1e-12 ? std::numeric_limits<double>::infinity()
                                         : std::max(10.0, 1.0 / a.indicator);
  a.optimal_factor = literal_optimal_factor ? 1.01 * eps_star / eps_k : 1.01 * eps_k / eps_star;
  a.mu_next = std::max(mu_k, std::min(a.optimal_factor * mu_k, a.default_factor * mu_k));
  a.factor = a.mu_next / mu_k;
  return a;
}

double compute_forcing_term(double eps_k, double eps_0, double eps_star, double m, double delta_max,
                            double delta_min) {
  double t = 1.0;
  if (eps_0 > eps_star && eps_k > 0.0) t = std::log(eps_0 / (eps_k / m)) / std::log(eps_0 / eps_star);
  t = std::clamp(t, 0.0, 1.0);
  return std::pow(delta_max, 1.0 - t) * std::pow(delta_min, t);
}

const char* ConvergenceLog::csv_header() {
  return "degree,k,mu,epsilon,grad_inf,delta,newton_iterations,outer_linear_iterations,inner_linear_iterations";
}

std::string ConvergenceLog::csv_row(const LogRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%.10e,%.10e,%.10e,%.10e,%d,%d,%d", r.degree, r.k, r.mu, r.epsilon,
                r.grad_inf, r.delta, r.newton_iterations, r.outer_linear_iterations, r.inner_linear_iterations);
  return buf;
}

std::string ConvergenceLog::to_csv() const {
  std::string out = std::string(csv_header()) + "\n";
  for (const auto& r : rows) out += csv_row(r) + "\n";
  return out;
}

int ConvergenceLog::iterations(int degree) const {
  return int(std::count_if(rows.begin(), rows.end(), [&](const LogRow& r) { return r.degree == degree; }));
}

long ConvergenceLog::total_outer(int from_degree, int to_degree) const {
  long s = 0;
  for (const auto& r : rows)
    if (r.degree >= from_degree && r.degree <= to_degree) s += r.outer_linear_iterations;
  return s;
}

long ConvergenceLog::total_inner(int from_degree, int to_degree) const {
  long s = 0;
  for (const auto& r : rows)
    if (r.degree >= from_degree && r.degree <= to_degree) s += r.inner_linear_iterations;
  return s;
}

std::string CurvingSummary::to_json() const {
  nlohmann::json j;
  j["converged"] = converged;
  j["degree"] = degree;
  j["epsilon"] = epsilon;
  j["epsilon_star"] = epsilon_star;
  j["grad_inf"] = grad_inf;
  j["omega_star"] = omega_star;
  j["min_quality"] = min_quality;
  j["mean_quality"] = mean_quality;
  j["max_quality"] = max_quality;
  j["min_jacobian"] = min_jacobian;
  j["wall_time_seconds"] = wall_time;
  j["penalty_iterations"] = penalty_iterations;
  j["newton_iterations"] = newton_iterations;
  j["outer_linear_iterations"] = outer_linear_iterations;
  j["inner_linear_iterations"] = inner_linear_iterations;
  return j.dump(2) + "\n";
}

namespace {

void check_config(const CurvingConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCategory::Parameter, std::string(name) + " must be positive");
  };
  if (c.p_max < 2 || c.p_max > 4) throw Error(ErrorCategory::Parameter, "target degree must be 2, 3 or 4");
  positive(c.epsilon_star_relative, "constraint tolerance");
  positive(c.omega_star, "gradient tolerance");
  positive(c.alpha, "early termination factor");
  positive(c.mu0, "initial penalty parameter");
  if (!(c.m0 > 1.0)) throw Error(ErrorCategory::Parameter, "penalty increase factor must exceed 1");
  positive(c.fixed_delta, "linear tolerance");
  positive(c.delta_max, "maximum linear tolerance");
  positive(c.delta_min, "minimum linear tolerance");
  if (c.delta_min > c.delta_max || c.delta_max >= 1.0 || c.fixed_delta >= 1.0)
    throw Error(ErrorCategory::Parameter, "linear tolerances must satisfy delta_min <= delta_max < 1");
  if (c.max_penalty_iterations < 1) throw Error(ErrorCategory::Parameter, "penalty iteration cap must be positive");
  if (c.linear.restart < 1 || c.linear.max_iter < 1)
    throw Error(ErrorCategory::Parameter, "linear solver restart and iteration cap must be positive");
}

}  // namespace

CurvingResult curve_mesh(const HighOrderMesh& linear_mesh, const GeometryModel& model, const CurvingConfig& cfg) {
  check_config(cfg);
  if (linear_mesh.degree() != 1) throw Error(ErrorCategory::Parameter, "curving starts from a linear mesh");
  model.validate(linear_mesh);
  const auto start = std::chrono::steady_clock::now();

  const double eps_star = cfg.epsilon_star_relative * linear_mesh.characteristic_length();
  int p = cfg.p_continuation ? 2 : cfg.p_max;
  HighOrderMesh mesh = interpolate_to_degree(linear_mesh, p);
  auto projector = std::make_unique<BoundaryProjector>(model, mesh);
  auto graph = std::make_shared<const NodeGraph>(mesh);
  BoundaryTarget target = projector->evaluate(mesh);
  Eigen::VectorXd u = PenaltyProblem(mesh, target, 0.0).displacement(mesh);
  const double eps0 = constraint_norm(mesh, target);
  double eps_cur = eps0;
  double mu = cfg.mu0;
  double m = cfg.m0;
  bool has_prev = false;
  double mu_prev = 0.0, eps_prev = 0.0;
  bool final_mode = false;

  ConvergenceLog log;
  int total = 0;
  int k = 0;
  double grad = 0.0, eps_k = eps0;
  while (true) {
    if (++total > cfg.max_penalty_iterations)
      throw CurvingError(ErrorCategory::NotConverged,
                         "penalty method did not converge in " + std::to_string(cfg.max_penalty_iterations) +
                             " iterations",
                         mesh, log);
    ++k;
    const double delta = cfg.adapt_delta
                             ? compute_forcing_term(eps_cur, eps0, eps_star, m, cfg.delta_max, cfg.delta_min)
                             : cfg.fixed_delta;
    if (p == cfg.p_max) {
      const double predicted = has_prev ? eps_cur * mu_prev / mu : eps_cur / m;
      if (eps_cur < eps_star || predicted < eps_star) final_mode = true;
    }
    NewtonOptions nopt = cfg.newton;
    nopt.abs_tol = cfg.omega_star;
    nopt.relative = !final_mode;

    const PenaltyProblem penalty(mesh, target, mu);
    MeshNewtonResult res;
    try {
      res = newton_solve(penalty, u, nopt, cfg.linear, delta, graph);
    } catch (const StagnationError& e) {
      throw CurvingError(ErrorCategory::Stagnation,
                         std::string(e.what()) + " at degree " + std::to_string(p) + ", penalty iteration " +
                             std::to_string(k) + ", mu " + std::to_string(mu),
                         penalty.mesh_at(e.iterate()), log);
    }
    mesh = std::move(res.mesh);
    u = std::move(res.displacement);
    const BoundaryTarget projected = projector->evaluate(mesh);
    const double error_k = PenaltyProblem(mesh, projected, mu).boundary_error(u);
    eps_k = error_k / std::sqrt(mesh.boundary_measure());
    grad = res.stats.grad_inf;

    LogRow row;
    row.degree = p;
    row.k = k;
    row.mu = mu;
    row.epsilon = eps_k;
    row.grad_inf = grad;
    row.delta = delta;
    row.newton_iterations = res.stats.iterations;
    row.outer_linear_iterations = res.stats.outer_linear_iterations;
    row.inner_linear_iterations = res.stats.inner_linear_iterations;
    log.rows.push_back(row);
    if (cfg.on_iteration) cfg.on_iteration(row);

    const bool done_here = final_convergence(eps_k, grad, eps_star, cfg.omega_star);
    if (p == cfg.p_max) {
      if (done_here) break;
      if (cfg.adapt_mu && has_prev)
        m = penalty_parameter_adaption(mu_prev, mu, eps_prev, eps_k, eps_star, cfg.literal_optimal_factor,
                                       cfg.quotient_ratio)
                .factor;
      mu_prev = mu;
      eps_prev = eps_k;
      has_prev = true;
      mu *= m;
      target = projected;
      eps_cur = eps_k;
      continue;
    }

    HighOrderMesh next = interpolate_to_degree(mesh, p + 1);
    auto next_projector = std::make_unique<BoundaryProjector>(model, next);
    BoundaryTarget next_target = next_projector->evaluate(next);
    const bool converged =
        done_here || early_termination(error_k, boundary_error(next, next_target), cfg.alpha);
    mu_prev = mu;
    eps_prev = eps_k;
    has_prev = true;
    if (converged) {
      const double eps_next = constraint_norm(next, next_target);
      mu = first_iteration_penalty_parameter(eps_k, eps_next, mu);
      ++p;
      k = 0;
      mesh = std::move(next);
      projector = std::move(next_projector);
      graph = std::make_shared<const NodeGraph>(mesh);
      target = std::move(next_target);
      u = PenaltyProblem(mesh, target, mu).displacement(mesh);
      eps_cur = eps_next;
    } else {
      mu *= m;
      target = projected;
      eps_cur = eps_k;
    }
  }

  const QualityReport q = quality_report(mesh);
  if (q.invalid_elements > 0)
    throw CurvingError(ErrorCategory::InvalidConfiguration,
                       std::to_string(q.invalid_elements) + " elements have non-positive Jacobians", mesh, log);

  CurvingResult out;
  out.summary.converged = true;
  out.summary.degree = p;
  out.summary.epsilon = eps_k;
  out.summary.epsilon_star = eps_star;
  out.summary.grad_inf = grad;
  out.summary.omega_star = cfg.omega_star;
  out.summary.min_quality = q.min_quality;
  out.summary.mean_quality = q.mean_quality;
  out.summary.max_quality = q.max_quality;
  out.summary.min_jacobian = q.min_jacobian;
  out.summary.penalty_iterations = int(log.rows.size());
  for (const auto& r : log.rows) out.summary.newton_iterations += r.newton_iterations;
  out.summary.outer_linear_iterations = log.total_outer();
  out.summary.inner_linear_iterations = log.total_inner();
  out.summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.mesh = std::move(mesh);
  out.log = std::move(log);
  return out;
}

}  // namespace hocurve
