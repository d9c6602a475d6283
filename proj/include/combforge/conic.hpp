#pragma once

// Hermitian block SDP model compiled onto the real interior point solver.
//
// A linear term maps block X (on signature B) to
//   L(X) = weight * embed_identity(partial_trace(X, traced), target)
// where target is the signature of the constraint it appears in.

#include <memory>
#include <string>
#include <vector>

#include "combforge/interior_point.hpp"
#include "combforge/tensor.hpp"

namespace combforge {

enum class Sense { minimize, maximize };

struct BlockSpec {
  std::string name;
  Signature signature;
};

struct LinearTerm {
  int block = 0;
  double weight = 1.0;
  std::vector<int> traced;
};

/// sum_t L_t(X) = rhs
struct EqualityConstraint {
  std::string name;
  std::vector<LinearTerm> terms;
  HermitianOperator rhs;
};

/// sum_t L_t(X) >= rhs
struct LmiConstraint {
  std::string name;
  std::vector<LinearTerm> terms;
  HermitianOperator rhs;
};

struct ObjectiveTerm {
  int block = 0;
  HermitianOperator weight;
};

class SdpProblem {
 public:
  int add_block(std::string name, Signature signature);
  int add_equality(std::string name, std::vector<LinearTerm> terms, HermitianOperator rhs);
  int add_lmi(std::string name, std::vector<LinearTerm> terms, HermitianOperator rhs);
  /// Adds Tr[weight X_block] to the objective.
  void add_objective(int block, HermitianOperator weight);
  void set_sense(Sense sense) { sense_ = sense; }

  const std::vector<BlockSpec>& blocks() const noexcept { return blocks_; }
  const std::vector<EqualityConstraint>& equalities() const noexcept { return equalities_; }
  const std::vector<LmiConstraint>& lmis() const noexcept { return lmis_; }
  const std::vector<ObjectiveTerm>& objective() const noexcept { return objective_; }
  Sense sense() const noexcept { return sense_; }
  int block_index(const std::string& name) const;

  /// Signature of L_t(X) before identity embedding.
  Signature reduced_signature(const LinearTerm& term) const;
  HermitianOperator apply_term(const LinearTerm& term, const HermitianOperator& x, const Signature& target) const;
  HermitianOperator adjoint_term(const LinearTerm& term, const HermitianOperator& g) const;

 private:
  void check_terms(const std::vector<LinearTerm>& terms, const Signature& target) const;

  std::vector<BlockSpec> blocks_;
  std::vector<EqualityConstraint> equalities_;
  std::vector<LmiConstraint> lmis_;
  std::vector<ObjectiveTerm> objective_;
  Sense sense_ = Sense::minimize;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  /// Objective values in the problem's own sense.
  double primal_value = 0.0;
  double dual_value = 0.0;
  /// |primal - dual| / (1 + |primal|).
  double gap = 0.0;
  std::vector<HermitianOperator> block_values;
  /// Dual slack of each block: A_j -/+ sum L^dagger(multipliers), PSD at optimum.
  std::vector<HermitianOperator> block_duals;
  /// PSD multiplier of each LMI.
  std::vector<HermitianOperator> lmi_duals;
  /// sum L(X) - rhs for each LMI (PSD at optimum).
  std::vector<HermitianOperator> lmi_slacks;
  /// Hermitian multiplier per equality; dual value = sum Tr[multiplier rhs].
  std::vector<HermitianOperator> equality_duals;
  /// |Tr[slack * multiplier]| per LMI.
  std::vector<double> complementary_slackness;
  /// Largest Frobenius residual over all constraints (Hermitian form).
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double min_block_eigenvalue = 0.0;
  int iterations = 0;
  std::size_t dropped_rows = 0;
  std::string message;

  const HermitianOperator& block(const SdpProblem& p, const std::string& name) const {
    return block_values[static_cast<std::size_t>(p.block_index(name))];
  }
  double max_complementary_slackness() const;
};

/// Adapter seam for substituting another conic solver behind the same contract.
class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual IpmResult solve(const RealSdp& problem, const IpmOptions& options) const = 0;
  virtual const char* name() const = 0;
};

class InteriorPointBackend final : public SdpBackend {
 public:
  IpmResult solve(const RealSdp& problem, const IpmOptions& options) const override;
  const char* name() const override { return "combforge-ipm"; }
};

struct SolverOptions {
  IpmOptions ipm;
  /// Relative pivot threshold on the row Gram matrix for discarding dependent constraint rows.
  double dependency_threshold = 1e-10;
  const SdpBackend* backend = nullptr;
};

/// Real standard form of a problem plus the bookkeeping needed to map results back.
struct CompiledSdp {
  RealSdp real;
  /// For each kept real row: (constraint index over equalities then LMIs, Hermitian functional).
  std::vector<std::size_t> row_constraint;
  std::vector<Matrix> row_functional;
  std::vector<double> row_scale;
  std::size_t total_rows = 0;
};

CompiledSdp compile_sdp(const SdpProblem& problem, double dependency_threshold = 1e-10);

SdpSolution solve_sdp(const SdpProblem& problem, const SolverOptions& options = {});

enum class Feasibility { feasible, infeasible, undecided };
const char* to_string(Feasibility f);

struct FeasibilityResult {
  Feasibility verdict = Feasibility::undecided;
  /// Block assignment from the elastic phase-1 solve (problem blocks only).
  std::vector<HermitianOperator> witness;
  /// Smallest eigenvalue over witness blocks and LMI slacks.
  double interior_margin = 0.0;
  bool strictly_interior = false;
  /// Optimal total constraint violation of the elastic problem.
  double violation = 0.0;
  double threshold_feasible = 0.0;
  double threshold_infeasible = 0.0;
  /// Multipliers of the elastic problem; a separating certificate when infeasible.
  std::vector<HermitianOperator> equality_certificate;
  std::vector<HermitianOperator> lmi_certificate;
  SolveStatus solver_status = SolveStatus::numerical_failure;
  double gap = 0.0;
};

/// Elastic phase-1: adds PSD violation blocks to every constraint and minimizes
/// their total trace. The objective of `problem` is ignored.
FeasibilityResult check_feasibility(const SdpProblem& problem, const SolverOptions& options = {});

/// Evaluates a candidate primal point: smallest eigenvalue over blocks and
/// LMI slacks, largest equality residual.
struct PointCheck {
  double min_eigenvalue = 0.0;
  double residual = 0.0;
};
PointCheck check_primal_point(const SdpProblem& problem, const std::vector<HermitianOperator>& blocks);
/// Candidate dual point: equality multipliers and PSD LMI multipliers, in the
/// sign convention of SdpSolution. Reports the smallest eigenvalue over the
/// implied block dual slacks and the LMI multipliers.
PointCheck check_dual_point(const SdpProblem& problem, const std::vector<HermitianOperator>& equality_multipliers,
                            const std::vector<HermitianOperator>& lmi_multipliers);

}  // namespace combforge
