#include "support.hpp"

#include "hocurve/distortion.hpp"
#include "hocurve/error.hpp"
#include "hocurve/generators.hpp"
#include "hocurve/quadrature.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <random>

using namespace hocurve;
using namespace hocurve::testing;

namespace {

Eigen::MatrixXd random_rotation(int n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(n, n, rng));
  Eigen::MatrixXd q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

Eigen::MatrixXd random_positive_matrix(int n, std::mt19937_64& rng) {
  Eigen::MatrixXd a;
  do {
    a = random_matrix(n, n, rng);
  } while (a.determinant() <= 1e-3);
  return a;
}

// One quadratic triangle with its edge-midpoint node moved by (dx, dy).
HighOrderMesh bent_triangle(double dx, double dy) {
  Eigen::MatrixXd v(2, 3);
  v << 0, 1, 0, 0, 0, 1;
  IndexMatrix s(3, 1);
  s << 0, 1, 2;
  HighOrderMesh m = interpolate_to_degree(HighOrderMesh::from_linear(v, s, {}), 2);
  Eigen::MatrixXd x = m.coords();
  // Node 1 of the lattice sits at (1/2, 0).
  x(0, 1) += dx;
  x(1, 1) += dy;
  return m.with_coords(x);
}

// (integral of eta^2 / integral of 1)^(-1/2) with a high-order rule.
double quality_oracle(const HighOrderMesh& m, Index e) {
  const QuadratureRule& q = cached_simplex_rule(m.dim(), 16);
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double eta = pointwise_distortion(evaluate_map(m, e, q.points.col(i)).jacobian);
    num += q.weights(i) * eta * eta;
    den += q.weights(i);
  }
  return 1.0 / std::sqrt(num / den);
}

// Energy of an element as a function of its flattened local coordinates.
double local_energy(const HighOrderMesh& m, Index e, const Eigen::MatrixXd& local) {
  Eigen::MatrixXd x = m.coords();
  for (int a = 0; a < local.rows(); ++a) x.col(m.elements()(a, e)) = local.row(a).transpose();
  return element_energy(m.with_coords(x), e);
}

}  // namespace

TEST_CASE("regularized determinant") {
  CHECK(regularized_det(3.0) == 3.0);
  CHECK(regularized_det(-1.0) == 0.0);
  CHECK(regularized_det(0.0) == 0.0);
}

TEST_CASE("pointwise distortion examples") {
  CHECK(pointwise_distortion(Eigen::Matrix3d::Identity()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pointwise_distortion(Eigen::Matrix3d(2.0 * Eigen::Matrix3d::Identity())) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pointwise_distortion(Eigen::Matrix3d(Eigen::Vector3d(2, 1, 1).asDiagonal())) ==
        doctest::Approx(std::cbrt(2.0)).epsilon(1e-14));
  CHECK(pointwise_distortion(Eigen::Matrix3d(Eigen::Vector3d(1, 1, -1).asDiagonal())) ==
        std::numeric_limits<double>::infinity());
  CHECK(pointwise_distortion(Eigen::Matrix2d::Zero()) == std::numeric_limits<double>::infinity());
}

TEST_CASE("distortion is at least one and invariant under similarities") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int n = 2; n <= 3; ++n)
    for (int t = 0; t < 1000; ++t) {
      const Eigen::MatrixXd J = random_positive_matrix(n, rng);
      const double eta = pointwise_distortion(J);
      CHECK(eta >= 1.0 - 1e-15);
      const Eigen::MatrixXd S = scale(rng) * random_rotation(n, rng);
      CHECK(pointwise_distortion(S) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(pointwise_distortion(Eigen::MatrixXd(S * J)) == doctest::Approx(eta).epsilon(1e-12));
    }
}

TEST_CASE("pointwise derivatives match finite differences") {
  std::mt19937_64 rng(29);
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Matrix3d J = random_positive_matrix(3, rng) + 2.0 * Eigen::Matrix3d::Identity();
    const DistortionPoint<double, 3> p(J);
    REQUIRE(p.valid);
    CHECK(p.f == doctest::Approx(std::pow(pointwise_distortion(J), 2)).epsilon(1e-13));
    const Eigen::Matrix3d V = random_matrix(3, 3, rng);
    const DistortionPoint<double, 3> a(J + h * V), b(J - h * V);
    const double fd = (a.f - b.f) / (2 * h);
    CHECK(fd == doctest::Approx((p.gradient().array() * V.array()).sum()).epsilon(1e-7));
    const Eigen::Matrix3d fd2 = (a.gradient() - b.gradient()) / (2 * h);
    CHECK((fd2 - p.hessian_action(V)).norm() <= 1e-6 * fd2.norm());
    // Blocks reproduce the action.
    Eigen::Matrix3d act = Eigen::Matrix3d::Zero();
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) act.row(k) += (p.hessian_block(k, l) * V.row(l).transpose()).transpose();
    CHECK((act - p.hessian_action(V)).norm() <= 1e-12 * act.norm());
  }
}

TEST_CASE("element quality") {
  const HighOrderMesh shell = interpolate_to_degree(generate_shell_mesh(1.0, 4.0, 1, 3), 2);
  for (Index e = 0; e < shell.num_elements(); e += 37) CHECK(element_quality(shell, e) == doctest::Approx(1.0));

  const HighOrderMesh inverted = bent_triangle(0.0, 0.8);
  CHECK(element_min_jacobian(inverted, 0) <= 0.0);
  CHECK(element_quality(inverted, 0) == 0.0);

  const HighOrderMesh mild = bent_triangle(0.03, 0.05);
  const double q = element_quality(mild, 0);
  CHECK(q > 0.0);
  CHECK(q < 1.0);
  CHECK(q == doctest::Approx(quality_oracle(mild, 0)).epsilon(1e-6));

  const HighOrderMesh box = perturbed_box(3, 3, 2, 0.03, 31);
  const QualityReport r = quality_report(box);
  CHECK(r.invalid_elements == 0);
  CHECK(r.quality.minCoeff() >= 0.0);
  CHECK(r.quality.maxCoeff() <= 1.0);
  for (Index e = 0; e < box.num_elements(); e += 7)
    CHECK(element_quality(box, e) == doctest::Approx(quality_oracle(box, e)).epsilon(1e-4));
}

TEST_CASE("element kernel: invalid elements") {
  const HighOrderMesh inverted = bent_triangle(0.0, 0.8);
  CHECK(element_kernel(inverted, 0, 0).energy == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(element_kernel(inverted, 0, 1), Error);
  try {
    element_kernel(inverted, 0, 2);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::InvalidConfiguration);
  }
}

TEST_CASE("element kernel: identity map") {
  for (int dim = 2; dim <= 3; ++dim)
    for (int p = 1; p <= 4; ++p) {
      HighOrderMesh m = generate_box_mesh(1.0, 1, dim);
      if (p > 1) m = interpolate_to_degree(m, p);
      double energy = 0;
      for (Index e = 0; e < m.num_elements(); ++e) {
        const ElementKernelResult r = element_kernel(m, e, 1);
        CHECK(r.gradient.cwiseAbs().maxCoeff() < 1e-12);
        energy += r.energy;
      }
      CHECK(energy == doctest::Approx(m.volume()).epsilon(1e-10));
    }
}

TEST_CASE("element kernel derivatives match finite differences") {
  std::mt19937_64 rng(37);
  for (int dim = 2; dim <= 3; ++dim)
    for (int p = 1; p <= 4; ++p) {
      const HighOrderMesh m = perturbed_box(dim, p, dim == 2 ? 5 : 3, 0.05, 41 + 10 * dim + p);
      const Index samples = std::min<Index>(50, m.num_elements());
      double grad_err = 0, hess_err = 0, sym_err = 0;
      for (Index s = 0; s < samples; ++s) {
        const Index e = (s * 7919) % m.num_elements();
        const ElementKernelResult r = element_kernel(m, e, 2);
        const Eigen::MatrixXd X = m.element_coords(e);
        const double h = 1e-6;
        Eigen::MatrixXd fd(X.rows(), X.cols());
        for (Eigen::Index a = 0; a < X.rows(); ++a)
          for (int k = 0; k < dim; ++k) {
            Eigen::MatrixXd xp = X, xm = X;
            xp(a, k) += h;
            xm(a, k) -= h;
            fd(a, k) = (local_energy(m, e, xp) - local_energy(m, e, xm)) / (2 * h);
          }
        grad_err = std::max(grad_err, (fd - r.gradient).norm() / r.gradient.norm());

        // Hessian along a random direction vs differences of the gradient.
        const Eigen::MatrixXd V = random_matrix(int(X.rows()), dim, rng);
        auto grad_at = [&](const Eigen::MatrixXd& local) {
          Eigen::MatrixXd x = m.coords();
          for (int a = 0; a < local.rows(); ++a) x.col(m.elements()(a, e)) = local.row(a).transpose();
          return element_kernel(m.with_coords(x), e, 1).gradient;
        };
        const Eigen::MatrixXd dg = (grad_at(X + h * V) - grad_at(X - h * V)) / (2 * h);
        // Local unknowns are component-major.
        Eigen::VectorXd v(V.size()), fdv(V.size());
        for (int k = 0; k < dim; ++k) {
          v.segment(k * X.rows(), X.rows()) = V.col(k);
          fdv.segment(k * X.rows(), X.rows()) = dg.col(k);
        }
        const Eigen::VectorXd hv = r.hessian * v;
        hess_err = std::max(hess_err, (fdv - hv).norm() / hv.norm());
        sym_err = std::max(sym_err, (r.hessian - r.hessian.transpose()).norm() / r.hessian.norm());
      }
      INFO("dim " << dim << " degree " << p);
      CHECK(grad_err < 1e-6);
      CHECK(hess_err < 1e-5);
      CHECK(sym_err < 1e-10);
    }
}

TEST_CASE("diagonal-block kernel matches the full kernel") {
  const HighOrderMesh m = perturbed_box(3, 2, 1, 0.2, 43);
  const ElementKernelResult full = element_kernel(m, 2, 2);
  const ElementKernelResult diag = element_kernel(m, 2, 2, HessianBlocks::Diagonal);
  const Eigen::Index n = m.reference().num_nodes();
  for (int k = 0; k < 3; ++k)
    CHECK((full.hessian.block(k * n, k * n, n, n) - diag.hessian.block(k * n, k * n, n, n)).norm() <
          1e-12 * full.hessian.norm());
}
