#pragma once

// Dense hot loops shared by the solver and the game evaluators. Each kernel
// has a serial reference and an OpenMP version that produce bitwise identical
// results (every output entry is computed by one thread in a fixed order).

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "combforge/tensor.hpp"

namespace combforge {

using SparseBlock = Eigen::SparseMatrix<double>;

/// One block of a sparse-by-block constraint row.
struct RowBlock {
  int block = 0;
  SparseBlock matrix;
};

/// <a, b> for a sparse a.
double sparse_inner(const SparseBlock& a, const Eigen::MatrixXd& b);

using ConstraintRows = std::vector<std::vector<RowBlock>>;

/// M_ij = sum_b <A_ib, W_b A_jb W_b>; symmetric.
Eigen::MatrixXd schur_complement_serial(const ConstraintRows& rows, const std::vector<Eigen::MatrixXd>& w);
Eigen::MatrixXd schur_complement_parallel(const ConstraintRows& rows, const std::vector<Eigen::MatrixXd>& w);

/// table(i, j) = Re Tr[a_i b_j].
Eigen::MatrixXd overlap_table_serial(const std::vector<HermitianOperator>& a, const std::vector<HermitianOperator>& b);
Eigen::MatrixXd overlap_table_parallel(const std::vector<HermitianOperator>& a,
                                       const std::vector<HermitianOperator>& b);

/// Thread budget from COMBFORGE_THREADS (unset or invalid: OpenMP default).
int thread_budget();

}  // namespace combforge
