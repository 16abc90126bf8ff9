#include "hocurve/linsolve.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace hocurve {

void MatrixOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  y.noalias() = A_ * x;
}

Eigen::VectorXd gmres(const LinearOperator& op, const Preconditioner* precond,
                      const Eigen::VectorXd& b, const GmresOptions& options, SolveStats& stats) {
  const Eigen::Index n = op.size();
  if (b.size() != n) throw Error(ErrorCategory::Parameter, "gmres: right-hand side has the wrong size");
  if (!(options.rel_tol > 0.0 && options.rel_tol < 1.0))
    throw Error(ErrorCategory::Parameter, "gmres: relative tolerance must lie in (0, 1)");
  if (options.restart < 1 || options.max_iter < 1)
    throw Error(ErrorCategory::Parameter, "gmres: restart and max_iter must be positive");
  if (!b.allFinite()) throw Error(ErrorCategory::Parameter, "gmres: right-hand side is not finite");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  stats.relative_residual = 0.0;
  if (bnorm == 0.0) return x;
  const double target = options.rel_tol * bnorm;
  const int m = options.restart;

  Eigen::MatrixXd V(n, m + 1), Z(n, m), H = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd cs(m), sn(m), g(m + 1), w(n), z(n);
  Eigen::VectorXd r = b;
  double beta = bnorm;
  Eigen::VectorXd best = x;
  double best_res = beta;
  int its = 0;

  while (true) {
    stats.relative_residual = beta / bnorm;
    if (beta <= target) return x;
    if (its >= options.max_iter) break;

    V.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    H.setZero();
    int j = 0;
    for (; j < m && its < options.max_iter;) {
      if (precond) precond->apply(V.col(j), z, stats);
      else z = V.col(j);
      Z.col(j) = z;
      op.apply(z, w);
      ++stats.matvecs;
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w.noalias() -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      const bool breakdown = !(H(j + 1, j) > 1e-14 * std::abs(H(0, 0)));
      if (!breakdown) V.col(j + 1) = w / H(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
        H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
        H(i, j) = t;
      }
      const double rho = std::hypot(H(j, j), H(j + 1, j));
      cs(j) = rho > 0.0 ? H(j, j) / rho : 1.0;
      sn(j) = rho > 0.0 ? H(j + 1, j) / rho : 0.0;
      H(j, j) = rho;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      ++j;
      ++its;
      ++stats.outer_iterations;
      stats.residual_history.push_back(std::abs(g(j)) / bnorm);
      if (std::abs(g(j)) <= target || breakdown) break;
    }
    const Eigen::VectorXd y =
        H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    x.noalias() += Z.leftCols(j) * y;
    op.apply(x, w);
    ++stats.matvecs;
    r = b - w;
    const double prev = beta;
    beta = r.norm();
    if (beta < best_res) {
      best_res = beta;
      best = x;
    }
    if (!(beta < prev) && beta > target && std::abs(g(j)) <= target) {
      // The flexible basis no longer reduces the true residual.
      break;
    }
  }
  stats.relative_residual = best_res / bnorm;
  throw NoConvergenceError("gmres: no convergence after " + std::to_string(its) +
                               " iterations (relative residual " +
                               std::to_string(best_res / bnorm) + ")",
                           best, stats);
}

namespace {

void check_diagonal(const SparseMatrixR& A, Eigen::VectorXd& inv_diag, Eigen::VectorXi& pos) {
  const Eigen::Index n = A.rows();
  inv_diag.resize(n);
  pos.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = 0.0;
    int p = -1;
    for (int k = A.outerIndexPtr()[i]; k < A.outerIndexPtr()[i + 1]; ++k)
      if (A.innerIndexPtr()[k] == i) {
        d = A.valuePtr()[k];
        p = k;
        break;
      }
    if (d == 0.0)
      throw Error(ErrorCategory::SingularSmoother,
                  "SSOR: zero diagonal entry in row " + std::to_string(i));
    inv_diag(i) = 1.0 / d;
    pos(i) = p;
  }
}

void ssor_sweeps(const SparseMatrixR& A, const Eigen::VectorXd& inv_diag, const Eigen::VectorXd& r,
                 Eigen::VectorXd& z, int sweeps, double omega) {
  const Eigen::Index n = A.rows();
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  const double* val = A.valuePtr();
  z.setZero(n);
  auto relax = [&](Eigen::Index i) {
    double s = r(i);
    for (int k = outer[i]; k < outer[i + 1]; ++k) s -= val[k] * z(inner[k]);
    z(i) += omega * s * inv_diag(i);
  };
  for (int s = 0; s < sweeps; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) relax(i);
    for (Eigen::Index i = n - 1; i >= 0; --i) relax(i);
  }
}

}  // namespace

Eigen::VectorXd ssor_apply(const SparseMatrixR& A, const Eigen::VectorXd& r, int sweeps, double omega) {
  if (A.rows() != A.cols() || r.size() != A.rows())
    throw Error(ErrorCategory::Parameter, "ssor_apply: dimension mismatch");
  Eigen::VectorXd inv_diag;
  Eigen::VectorXi pos;
  check_diagonal(A, inv_diag, pos);
  Eigen::VectorXd z;
  ssor_sweeps(A, inv_diag, r, z, sweeps, omega);
  return z;
}

SsorPreconditioner::SsorPreconditioner(const SparseMatrixR& A, int sweeps, double omega)
    : A_(A), sweeps_(sweeps), omega_(omega) {
  if (sweeps < 1) throw Error(ErrorCategory::Parameter, "SSOR needs at least one sweep");
  if (!(omega > 0.0 && omega < 2.0)) throw Error(ErrorCategory::Parameter, "SSOR relaxation must lie in (0, 2)");
  check_diagonal(A, inv_diag_, diag_pos_);
}

void SsorPreconditioner::apply(const Eigen::VectorXd& r, Eigen::VectorXd& z, SolveStats&) const {
  ssor_sweeps(A_, inv_diag_, r, z, sweeps_, omega_);
}

BlockSorPreconditioner::BlockSorPreconditioner(std::vector<SparseMatrixR> blocks,
                                               const LinearOperator& full, GmresOptions inner)
    : blocks_(std::move(blocks)), full_(full), inner_(inner) {
  Eigen::Index total = 0;
  for (const auto& B : blocks_) {
    if (B.rows() != B.cols()) throw Error(ErrorCategory::Parameter, "block-SOR: diagonal blocks must be square");
    total += B.rows();
  }
  if (total != full.size()) throw Error(ErrorCategory::Parameter, "block-SOR: blocks do not cover the operator");
  for (const auto& B : blocks_) smoothers_.push_back(std::make_unique<SsorPreconditioner>(B));
}

void BlockSorPreconditioner::apply(const Eigen::VectorXd& r, Eigen::VectorXd& z,
                                   SolveStats& stats) const {
  z.setZero(r.size());
  Eigen::VectorXd coupled;
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Eigen::Index ni = blocks_[i].rows();
    Eigen::VectorXd rhs = r.segment(offset, ni);
    if (i > 0) {
      // Only the blocks solved so far are non-zero in z.
      full_.apply(z, coupled);
      ++stats.matvecs;
      rhs -= coupled.segment(offset, ni);
    }
    SolveStats inner;
    const MatrixOperator op(blocks_[i]);
    z.segment(offset, ni) = gmres(op, smoothers_[i].get(), rhs, inner_, inner);
    stats.inner_iterations += inner.outer_iterations;
    offset += ni;
  }
}

Eigen::Index BlockSorPreconditioner::stored_nonzeros() const {
  Eigen::Index nnz = 0;
  for (const auto& B : blocks_) nnz += B.nonZeros();
  return nnz;
}

}  // namespace hocurve
