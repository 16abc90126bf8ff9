#include "support.hpp"

#include "hocurve/distortion.hpp"
#include "hocurve/generators.hpp"
#include "hocurve/geometry.hpp"
#include "hocurve/optimizer.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

using namespace hocurve;
using namespace hocurve::testing;

TEST_CASE("early termination and final convergence") {
  CHECK(early_termination(1e-5, 3e-5));
  CHECK_FALSE(early_termination(1e-5, 1.5e-5));
  CHECK_FALSE(early_termination(1e-5, 2e-5));
  CHECK(final_convergence(0.0, 0.0, 1e-12, 1e-8));
  CHECK_FALSE(final_convergence(2e-12, 0.0, 1e-12, 1e-8));
  CHECK_FALSE(final_convergence(0.0, 1e-8, 1e-12, 1e-8));
}

TEST_CASE("first penalty parameter of a new degree") {
  CHECK(first_iteration_penalty_parameter(3e-4, 3e-4, 77.0) == 77.0);
  CHECK(first_iteration_penalty_parameter(1e-6, 1e-4, 1e3) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(first_iteration_penalty_parameter(2e-3, 1e-3, 10.0) == 20.0);
  CHECK(first_iteration_penalty_parameter(2e-3, 0.0, 10.0) == 10.0);
}

TEST_CASE("penalty parameter adaption") {
  SUBCASE("convergence region") {
    const PenaltyAdaption a = penalty_parameter_adaption(10, 100, 1e-4, 1e-5, 1e-12);
    CHECK(a.ratio == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a.indicator < 1e-12);
    CHECK(std::isinf(a.default_factor));
    CHECK(a.optimal_factor == doctest::Approx(1.01e7).epsilon(1e-14));
    CHECK(a.mu_next == doctest::Approx(1.01e9).epsilon(1e-14));
  }
  SUBCASE("s = 2 gives the default factor") {
    // mu doubled while the error stayed: s = (mu_prev/mu_k)(eps_prev/eps_k) = 2 with mu ratio 1, eps ratio 2.
    const PenaltyAdaption a = penalty_parameter_adaption(100, 100, 2e-6, 1e-6, 1e-12);
    CHECK(a.ratio == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a.indicator == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a.default_factor == 10.0);
    CHECK(a.mu_next == doctest::Approx(1000.0).epsilon(1e-15));
  }
  SUBCASE("s = 1.05") {
    const PenaltyAdaption a = penalty_parameter_adaption(100, 100, 1.05e-6, 1e-6, 1e-12);
    CHECK(a.indicator == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(a.default_factor == doctest::Approx(20.0).epsilon(1e-10));
    CHECK(a.mu_next == doctest::Approx(2000.0).epsilon(1e-10));
    const PenaltyAdaption b = penalty_parameter_adaption(100, 100, 1.05e-11, 1e-11, 1e-12);
    CHECK(b.optimal_factor == doctest::Approx(10.1).epsilon(1e-14));
    CHECK(b.mu_next == doctest::Approx(1010.0).epsilon(1e-12));
  }
  SUBCASE("never decreases") {
    const PenaltyAdaption a = penalty_parameter_adaption(10, 100, 1e-4, 1e-5, 1e-12, true);
    CHECK(a.optimal_factor < 1.0);
    CHECK(a.mu_next == 100.0);
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> lg(-12.0, 3.0);
    for (int t = 0; t < 200; ++t) {
      const double mu_k = std::pow(10.0, lg(rng) + 12), mu_prev = mu_k / std::pow(10.0, lg(rng) / 4 + 4);
      const PenaltyAdaption r = penalty_parameter_adaption(mu_prev, mu_k, std::pow(10.0, lg(rng)),
                                                           std::pow(10.0, lg(rng)), 1e-12, t % 2, t % 3 == 0);
      CHECK(r.mu_next >= mu_k);
    }
  }
  SUBCASE("quotient form of the ratio") {
    const PenaltyAdaption a = penalty_parameter_adaption(10, 100, 1e-4, 1e-5, 1e-12, false, true);
    CHECK(a.ratio == doctest::Approx(0.01).epsilon(1e-14));
  }
}

TEST_CASE("forcing term") {
  CHECK(compute_forcing_term(1e-2, 1e-2, 1e-12, 1.0) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(compute_forcing_term(1e-10, 1e-2, 1e-12, 100.0) == doctest::Approx(1e-8).epsilon(1e-12));
  // t = 0.5: eps_k / m = 1e-7 halfway between 1e-2 and 1e-12 on a log scale.
  CHECK(compute_forcing_term(1e-6, 1e-2, 1e-12, 10.0) == doctest::Approx(std::pow(10.0, -5.5)).epsilon(1e-12));
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> lg(-14.0, 0.0), lm(0.0, 10.0);
  for (int t = 0; t < 1000; ++t) {
    const double d = compute_forcing_term(std::pow(10.0, lg(rng)), 1e-1, 1e-12, std::pow(10.0, lm(rng)));
    CHECK(d >= 1e-8 * (1 - 1e-14));
    CHECK(d <= 1e-3 * (1 + 1e-14));
  }
}

TEST_CASE("Newton on a quadratic takes one full step") {
  std::mt19937_64 rng(109);
  const Eigen::MatrixXd R = random_matrix(20, 20, rng);
  const Eigen::MatrixXd A = R * R.transpose() + 20.0 * Eigen::MatrixXd::Identity(20, 20);
  const Eigen::VectorXd b = random_vector(20, rng);
  NewtonProblem p;
  p.value = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(A * x) - b.dot(x); };
  p.gradient = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x - b); };
  p.solve = [&](const Eigen::VectorXd&, const Eigen::VectorXd& rhs, SolveStats& st) {
    st.outer_iterations += 1;
    return Eigen::VectorXd(A.ldlt().solve(rhs));
  };
  NewtonOptions opt;
  opt.relative = false;
  opt.abs_tol = 1e-10;
  const NewtonResult r = newton_minimize(p, Eigen::VectorXd::Zero(20), opt);
  CHECK(r.stats.iterations == 1);
  CHECK(r.stats.converged);
  CHECK((A * r.x - b).norm() < 1e-10);
}

TEST_CASE("Newton never increases the value") {
  // Rosenbrock function with its exact Hessian: the Hessian is indefinite
  // away from the valley.
  auto f = [](const Eigen::VectorXd& x) { return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2); };
  auto grad = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(2);
    g << -400 * x(0) * (x(1) - x(0) * x(0)) - 2 * (1 - x(0)), 200 * (x(1) - x(0) * x(0));
    return g;
  };
  std::vector<double> accepted;
  NewtonProblem p;
  p.value = f;
  p.gradient = [&](const Eigen::VectorXd& x) {
    accepted.push_back(f(x));
    return grad(x);
  };
  p.solve = [](const Eigen::VectorXd& x, const Eigen::VectorXd& rhs, SolveStats&) {
    Eigen::Matrix2d H;
    H << 1200 * x(0) * x(0) - 400 * x(1) + 2, -400 * x(0), -400 * x(0), 200;
    return Eigen::VectorXd(H.inverse() * rhs);
  };
  NewtonOptions opt;
  opt.relative = false;
  opt.abs_tol = 1e-9;
  opt.max_iterations = 200;
  Eigen::VectorXd x0(2);
  x0 << 0.0, 3.0;  // indefinite Hessian here
  const NewtonResult r = newton_minimize(p, x0, opt);
  CHECK(r.stats.converged);
  CHECK((r.x - Eigen::Vector2d(1, 1)).norm() < 1e-6);
  for (size_t i = 1; i < accepted.size(); ++i) CHECK(accepted[i] <= accepted[i - 1]);
}

TEST_CASE("Newton falls back to steepest descent when the solve points uphill") {
  NewtonProblem p;
  p.value = [](const Eigen::VectorXd& x) { return 0.5 * x(0) * x(0) + 1.5 * x(1) * x(1); };
  p.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(Eigen::Vector2d(x(0), 3 * x(1))); };
  p.solve = [](const Eigen::VectorXd&, const Eigen::VectorXd& rhs, SolveStats&) { return Eigen::VectorXd(-rhs); };
  NewtonOptions opt;
  opt.relative = false;
  opt.abs_tol = 1e-9;
  opt.max_iterations = 500;
  const NewtonResult r = newton_minimize(p, Eigen::Vector2d(1.0, -2.0), opt);
  CHECK(r.stats.converged);
  CHECK(r.stats.gradient_steps == r.stats.iterations);
  CHECK(r.x.norm() < 1e-8);
}

TEST_CASE("Newton reports stagnation") {
  NewtonProblem p;
  p.value = [](const Eigen::VectorXd& x) {
    return x.norm() == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  };
  p.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(Eigen::VectorXd::Ones(x.size())); };
  p.solve = [](const Eigen::VectorXd&, const Eigen::VectorXd& rhs, SolveStats&) { return rhs; };
  try {
    newton_minimize(p, Eigen::VectorXd::Zero(3), NewtonOptions{});
    FAIL("expected stagnation");
  } catch (const StagnationError& e) {
    CHECK(e.category() == ErrorCategory::Stagnation);
    CHECK(e.iterate().norm() == 0.0);
  }
}

TEST_CASE("mesh Newton solves") {
  SUBCASE("nothing to do at the identity with a satisfied target") {
    const HighOrderMesh m = interpolate_to_degree(generate_box_mesh(1.0, 2, 3), 2);
    const BoundaryTarget g = evaluate_boundary_target(m, box_model(1.0, 3));
    const MeshNewtonResult r = newton_solve(m, 10.0, g, NewtonOptions{}, LinearSolverOptions{}, 1e-6);
    CHECK(r.stats.iterations == 0);
    CHECK((r.mesh.coords() - m.coords()).norm() == 0.0);
  }
  SUBCASE("first penalty problem of a shell reduces the gradient tenfold") {
    const HighOrderMesh m = interpolate_to_degree(generate_shell_mesh(1.0, 4.0, 1, 3), 2);
    const BoundaryTarget g = evaluate_boundary_target(m, shell_model(1.0, 4.0, 3));
    for (bool block : {true, false}) {
      LinearSolverOptions lin;
      lin.block_sor = block;
      const MeshNewtonResult r = newton_solve(m, 10.0, g, NewtonOptions{}, lin, 1e-3);
      CHECK(r.stats.initial_grad_inf > 0.0);
      CHECK(r.stats.grad_inf <= 0.1 * r.stats.initial_grad_inf);
      CHECK(r.stats.value < penalty_value(m, g, 10.0).value);
      CHECK(quality_report(r.mesh).invalid_elements == 0);
    }
  }
}

TEST_CASE("curving a box whose boundary already lies on its planes") {
  const HighOrderMesh lin = generate_box_mesh(1.0, 2, 3);
  CurvingConfig cfg;
  cfg.p_max = 3;
  const CurvingResult r = curve_mesh(lin, box_model(1.0, 3), cfg);
  CHECK(r.summary.converged);
  CHECK(r.summary.epsilon < 1e-14);
  CHECK((r.mesh.coords() - r.mesh.reference_coords()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.summary.min_quality == doctest::Approx(1.0));
}

TEST_CASE("curving an annulus") {
  const HighOrderMesh lin = generate_shell_mesh(1.0, 4.0, 1, 2);
  const GeometryModel model = shell_model(1.0, 4.0, 2);
  CurvingConfig cfg;
  cfg.p_max = 4;
  std::vector<LogRow> seen;
  cfg.on_iteration = [&](const LogRow& row) { seen.push_back(row); };
  const CurvingResult r = curve_mesh(lin, model, cfg);

  CHECK(r.summary.converged);
  CHECK(r.summary.epsilon < r.summary.epsilon_star);
  CHECK(r.summary.grad_inf < 1e-8);
  CHECK(r.summary.min_jacobian > 0.0);
  CHECK(r.mesh.degree() == 4);
  REQUIRE(seen.size() == r.log.rows.size());

  for (size_t i = 0; i < r.log.rows.size(); ++i) {
    const LogRow& row = r.log.rows[i];
    CHECK(row.delta >= cfg.delta_min * (1 - 1e-14));
    CHECK(row.delta <= cfg.delta_max * (1 + 1e-14));
    if (i > 0 && r.log.rows[i - 1].degree == row.degree) {
      CHECK(row.k == r.log.rows[i - 1].k + 1);
      CHECK(row.mu >= r.log.rows[i - 1].mu);
      CHECK(row.epsilon < r.log.rows[i - 1].epsilon);
    }
  }
  for (int p = 2; p <= 4; ++p) CHECK(r.log.iterations(p) >= 1);

  std::istringstream csv(r.log.to_csv());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "degree,k,mu,epsilon,grad_inf,delta,newton_iterations,outer_linear_iterations,"
                  "inner_linear_iterations");

  SUBCASE("repeat runs give identical logs") {
    const CurvingResult again = curve_mesh(lin, model, cfg);
    CHECK(again.log.to_csv() == r.log.to_csv());
    CHECK((again.mesh.coords().array() == r.mesh.coords().array()).all());
  }
}

TEST_CASE("fixed penalty growth multiplies by ten") {
  const HighOrderMesh lin = generate_shell_mesh(1.0, 4.0, 1, 2);
  CurvingConfig cfg;
  cfg.p_max = 3;
  cfg.adapt_mu = false;
  const CurvingResult r = curve_mesh(lin, shell_model(1.0, 4.0, 2), cfg);
  CHECK(r.summary.converged);
  CHECK(r.log.rows.front().mu == 10.0);
  for (size_t i = 1; i < r.log.rows.size(); ++i)
    if (r.log.rows[i].degree == r.log.rows[i - 1].degree) CHECK(r.log.rows[i].mu == 10.0 * r.log.rows[i - 1].mu);
  double mu = 10.0;
  for (const LogRow& row : r.log.rows) {
    if (row.degree != 2) break;
    CHECK(row.mu == mu);
    mu *= 10.0;
  }
}

TEST_CASE("penalty iteration cap") {
  const HighOrderMesh lin = generate_shell_mesh(1.0, 4.0, 1, 2);
  CurvingConfig cfg;
  cfg.p_max = 2;
  cfg.max_penalty_iterations = 2;
  try {
    curve_mesh(lin, shell_model(1.0, 4.0, 2), cfg);
    FAIL("expected non-convergence");
  } catch (const CurvingError& e) {
    CHECK(e.category() == ErrorCategory::NotConverged);
    CHECK(e.log().rows.size() == 2);
  }
}

TEST_CASE("periodic sector") {
  const double angle = std::numbers::pi / 6;
  const HighOrderMesh lin = generate_sector_mesh(1.0, 4.0, angle, 2);
  const GeometryModel model = sector_model(1.0, 4.0, angle);
  CurvingConfig cfg;
  cfg.p_max = 3;
  const CurvingResult r = curve_mesh(lin, model, cfg);
  CHECK(r.summary.converged);
  const BoundaryProjector projector(model, r.mesh);
  const PeriodicPair& pp = model.periodic()[0];
  double worst = 0;
  for (const auto& [s, t] : projector.periodic_nodes(0)) {
    Eigen::Vector3d xs = Eigen::Vector3d::Zero();
    xs.head<2>() = r.mesh.coords().col(r.mesh.boundary_nodes()[s]);
    worst = std::max(worst, (pp.apply(xs).head<2>() - r.mesh.coords().col(r.mesh.boundary_nodes()[t])).norm());
  }
  CHECK(worst < 1e-10 * r.mesh.characteristic_length());
}
