#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ldsim/errors.hpp"

namespace ldsim {

struct LinearSolution {
  Eigen::VectorXd x;
  /// ‖R(A·x − b)‖₂ / ‖R·b‖₂ with R the row equilibration.
  double relative_residual = 0.0;
  int refinement_steps = 0;
};

/// Direct sparse solve with row/column equilibration and iterative refinement.
///
/// Deterministic: the factorization is sequential and the refinement loop has a
/// fixed stopping rule. Throws LinearSolveError on (structural or numerical)
/// singularity with the factorization's diagnostic.
inline LinearSolution solve_linear_detailed(const Eigen::SparseMatrix<double>& a,
                                            const Eigen::VectorXd& b) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw LinearSolveError("matrix/vector dimension mismatch");
  LinearSolution out;
  if (n == 0) return out;

  Eigen::VectorXd row(n), col(n);
  row.setZero();
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      row[it.row()] = std::max(row[it.row()], std::abs(it.value()));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(row[i] > 0.0) || !std::isfinite(row[i]))
      throw LinearSolveError("singular matrix: row " + std::to_string(i) +
                             " is zero or non-finite");
    row[i] = 1.0 / row[i];
  }
  col.setZero();
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      col[it.col()] = std::max(col[it.col()], std::abs(row[it.row()] * it.value()));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(col[j] > 0.0))
      throw LinearSolveError("singular matrix: column " + std::to_string(j) + " is zero");
    col[j] = 1.0 / col[j];
  }

  Eigen::SparseMatrix<double> scaled = row.asDiagonal() * a * col.asDiagonal();
  scaled.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(scaled);
  lu.factorize(scaled);
  if (lu.info() != Eigen::Success)
    throw LinearSolveError("sparse LU failed: " + lu.lastErrorMessage());

  const Eigen::VectorXd rb = row.asDiagonal() * b;
  Eigen::VectorXd y = lu.solve(rb);
  const double bnorm = std::max(rb.norm(), 1e-300);
  double rel = (rb - scaled * y).norm() / bnorm;
  for (int step = 0; step < 3 && rel > 1e-14; ++step) {
    const Eigen::VectorXd r = rb - scaled * y;
    const Eigen::VectorXd candidate = y + lu.solve(r);
    const double next = (rb - scaled * candidate).norm() / bnorm;
    if (!(next < rel)) break;
    y = candidate;
    rel = next;
    ++out.refinement_steps;
  }
  out.x = col.asDiagonal() * y;
  out.relative_residual = rel;
  if (!out.x.allFinite()) throw LinearSolveError("sparse LU produced non-finite solution");
  return out;
}

inline Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b) {
  return solve_linear_detailed(a, b).x;
}

}  // namespace ldsim
