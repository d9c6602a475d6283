#pragma once

// Primal-dual interior point method for real block-diagonal SDPs in
// standard form:
//   min <C, X>  s.t.  <A_i, X> = b_i,  X >= 0
//   max b^T y   s.t.  sum_i y_i A_i + S = C,  S >= 0
// Nesterov-Todd scaling with Mehrotra predictor-corrector; infeasible start.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "combforge/kernels.hpp"

namespace combforge {

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(SolveStatus s);

struct RealSdp {
  std::vector<int> block_sizes;
  ConstraintRows rows;
  Eigen::VectorXd b;
  std::vector<Eigen::MatrixXd> c;
};

struct IpmOptions {
  double tolerance = 1e-9;
  /// Accepted as optimal when the method stalls within these bounds.
  double accept_gap = 1e-7;
  double accept_infeasibility = 1e-8;
  int max_iterations = 200;
  bool parallel_schur = true;
  /// Ratio that declares a primal/dual infeasibility certificate.
  double certificate_ratio = 1e8;
};

struct IpmResult {
  SolveStatus status = SolveStatus::numerical_failure;
  std::vector<Eigen::MatrixXd> x;
  std::vector<Eigen::MatrixXd> s;
  Eigen::VectorXd y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  std::string message;
};

IpmResult solve_real_sdp(const RealSdp& problem, const IpmOptions& options = {});

/// Linear map and adjoint of a standard-form problem.
Eigen::VectorXd apply_constraints(const RealSdp& problem, const std::vector<Eigen::MatrixXd>& x);
std::vector<Eigen::MatrixXd> apply_adjoint(const RealSdp& problem, const Eigen::VectorXd& y);

}  // namespace combforge
