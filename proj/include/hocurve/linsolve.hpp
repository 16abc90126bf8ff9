#pragma once

#include "hocurve/error.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <vector>

namespace hocurve {

using SparseMatrixR = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct SolveStats {
  int outer_iterations = 0;
  /// Iterations of inner solves done by the preconditioner, summed.
  int inner_iterations = 0;
  int matvecs = 0;
  /// True relative residual |b - A x| / |b| of the returned iterate.
  double relative_residual = 0.0;
  /// Estimated preconditioned-space residual after each outer iteration,
  /// relative to |b|.
  std::vector<double> residual_history;
};

/// Square linear map.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Eigen::Index size() const = 0;
  virtual void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const = 0;
};

class MatrixOperator final : public LinearOperator {
 public:
  explicit MatrixOperator(const SparseMatrixR& A) : A_(A) {}
  Eigen::Index size() const override { return A_.rows(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override;

 private:
  const SparseMatrixR& A_;
};

class FunctionOperator final : public LinearOperator {
 public:
  using Fn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
  FunctionOperator(Eigen::Index n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  Eigen::Index size() const override { return n_; }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { fn_(x, y); }

 private:
  Eigen::Index n_;
  Fn fn_;
};

/// z = M^{-1} r. Preconditioners that run inner solves add their iteration
/// counts to stats.inner_iterations.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z, SolveStats& stats) const = 0;
};

struct GmresOptions {
  double rel_tol = 1e-8;
  int restart = 20;
  int max_iter = 1000;
};

/// Thrown when GMRES exhausts max_iter; carries the iterate with the smallest
/// true residual seen and the statistics.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& message, Eigen::VectorXd best, SolveStats stats)
      : Error(ErrorCategory::NoConvergence, message), best_(std::move(best)), stats_(std::move(stats)) {}
  const Eigen::VectorXd& best_iterate() const { return best_; }
  const SolveStats& stats() const { return stats_; }

 private:
  Eigen::VectorXd best_;
  SolveStats stats_;
};

/// Restarted, right-preconditioned flexible GMRES started from x = 0.
/// Converged when |b - A x| <= rel_tol |b|, checked on the true residual at
/// every restart.
Eigen::VectorXd gmres(const LinearOperator& op, const Preconditioner* precond,
                      const Eigen::VectorXd& b, const GmresOptions& options, SolveStats& stats);

/// `sweeps` symmetric Gauss-Seidel sweeps (forward then backward, relaxation
/// omega) on A z = r from z = 0. Throws a singular-smoother error on a zero
/// diagonal.
Eigen::VectorXd ssor_apply(const SparseMatrixR& A, const Eigen::VectorXd& r, int sweeps = 2,
                           double omega = 1.0);

class SsorPreconditioner final : public Preconditioner {
 public:
  explicit SsorPreconditioner(const SparseMatrixR& A, int sweeps = 2, double omega = 1.0);
  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z, SolveStats& stats) const override;

 private:
  const SparseMatrixR& A_;
  Eigen::VectorXd inv_diag_;
  Eigen::VectorXi diag_pos_;
  int sweeps_;
  double omega_;
};

/// One forward block-SOR step over the component blocks of a matrix whose
/// unknowns are ordered block by block. Diagonal blocks are stored; the
/// coupling to previously solved blocks comes from the full operator applied
/// to a partially filled vector. Each block is solved by GMRES + SSOR(2).
class BlockSorPreconditioner final : public Preconditioner {
 public:
  BlockSorPreconditioner(std::vector<SparseMatrixR> blocks, const LinearOperator& full,
                         GmresOptions inner);

  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z, SolveStats& stats) const override;

  void set_inner_tolerance(double tol) { inner_.rel_tol = tol; }
  const GmresOptions& inner_options() const { return inner_; }
  const std::vector<SparseMatrixR>& blocks() const { return blocks_; }
  /// Nonzeros held by the diagonal blocks.
  Eigen::Index stored_nonzeros() const;

 private:
  std::vector<SparseMatrixR> blocks_;
  std::vector<std::unique_ptr<SsorPreconditioner>> smoothers_;
  const LinearOperator& full_;
  GmresOptions inner_;
};

}  // namespace hocurve
