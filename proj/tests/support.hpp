#pragma once

#include "hocurve/functional.hpp"
#include "hocurve/generators.hpp"
#include "hocurve/geometry.hpp"
#include "hocurve/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace hocurve::testing {

/// Box mesh of the given degree with every node moved by a random amount of
/// relative size `amplitude`, small enough to keep all elements valid.
inline HighOrderMesh perturbed_box(int dim, int degree, int n, double amplitude, std::uint64_t seed) {
  HighOrderMesh m = generate_box_mesh(1.0, n, dim);
  if (degree > 1) m = interpolate_to_degree(m, degree);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd x = m.coords();
  const double h = amplitude / (n * degree);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += h * u(rng);
  return m.with_coords(x);
}

/// Penalty problem at a random valid configuration: perturbed box, its plane
/// targets, and a random penalty parameter.
struct RandomConfiguration {
  HighOrderMesh mesh;
  BoundaryTarget target;
  double mu = 0.0;
};

inline RandomConfiguration random_configuration(int dim, int degree, std::uint64_t seed) {
  RandomConfiguration c;
  c.mesh = perturbed_box(dim, degree, dim == 2 ? 2 : 1, 0.1, seed);
  c.target = evaluate_boundary_target(c.mesh, box_model(1.0, dim));
  std::mt19937_64 rng(seed + 7);
  c.mu = std::pow(10.0, std::uniform_real_distribution<double>(0.0, 4.0)(rng));
  return c;
}

/// Random matrix with entries in [-1, 1].
inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
  return a;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

/// Central difference of the penalty functional along each coordinate.
inline Eigen::VectorXd fd_penalty_gradient(const HighOrderMesh& mesh, const BoundaryTarget& target, double mu,
                                           double h) {
  const Eigen::VectorXd x = flatten_coords(mesh.coords());
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fp = penalty_value(mesh.with_coords(unflatten_coords(xp, mesh.dim())), target, mu).value;
    const double fm = penalty_value(mesh.with_coords(unflatten_coords(xm, mesh.dim())), target, mu).value;
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

}  // namespace hocurve::testing
