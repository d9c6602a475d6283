#pragma once

#include <optional>
#include <string>
#include <vector>

#include "combforge/conic.hpp"
#include "combforge/tester.hpp"

namespace combforge {

/// Deterministic post-processing vector (a_1, ..., a_m), entries 0-based.
using DeterministicVector = std::vector<int>;

/// All vectors in [outcomes]^members in lexicographic order (first entry most
/// significant). Throws CapExceeded when outcomes^members > cap.
std::vector<DeterministicVector> deterministic_vectors(std::size_t members, std::size_t outcomes, std::size_t cap);

struct IncompatOptions {
  std::size_t cap = 64;
  SolverOptions solver;
};

/// Maximally mixed normalization chain Xi^(n), ..., Xi^(1) for a tester signature.
std::vector<HermitianOperator> maximally_mixed_chain(const Signature& tester_signature);

/// SDP skeleton shared by every parent-tester optimization: blocks Q[i]
/// (i < outcomes) on the tester signature, PSD blocks Theta[k] for the
/// normalization chain, sum_i Q[i] = 1 (x) Theta^(n) and the chain conditions.
struct ParentSkeleton {
  SdpProblem problem;
  std::vector<int> parent_blocks;
  /// chain_blocks[k-1] holds Theta^(k).
  std::vector<int> chain_blocks;
  int sum_equality = 0;
};

ParentSkeleton parent_skeleton(const Signature& tester_signature, std::size_t outcomes);

/// sup Tr[x (1 (x) Theta^(n))] over normalized chains (Tr Theta^(1) = 1).
double max_normalization_pairing(const HermitianOperator& x, const Signature& tester_signature,
                                 const SolverOptions& options = {});

enum class CompatibilityVerdict { compatible, incompatible, undecided };
const char* to_string(CompatibilityVerdict v);

struct CompatibilityResult {
  CompatibilityVerdict verdict = CompatibilityVerdict::undecided;
  /// "normalization" when decided by chain disagreement, "feasibility" otherwise.
  std::string stage;
  double chain_disagreement = 0.0;
  std::optional<QuantumTester> parent;
  bool parent_validated = false;
  std::vector<DeterministicVector> postprocessing;
  FeasibilityResult feasibility;
};

CompatibilityResult is_compatible_collection(const TesterCollection& collection, const IncompatOptions& options = {});

struct SdpHealth {
  SolveStatus status = SolveStatus::numerical_failure;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementary_slackness = 0.0;
  int iterations = 0;
  std::string message;
};

struct RobustnessCertificate {
  double value = 0.0;
  /// s* = Tr Theta^(1) at the optimum.
  double scale = 1.0;
  std::vector<DeterministicVector> vectors;
  std::vector<HermitianOperator> parent_blocks;
  /// Theta^(n), ..., Theta^(1).
  std::vector<HermitianOperator> chain_blocks;
  /// dual_effects[alpha][a] = omega_{a alpha}.
  std::vector<std::vector<HermitianOperator>> dual_effects;
  /// Multiplier X with sum_alpha omega_{v_alpha alpha} <= X for every v.
  HermitianOperator dual_bound;
  /// sum Tr[omega T], equal to 1 + R at optimum.
  double dual_objective = 0.0;
  /// sup over normalized chains of Tr[X (1 (x) Theta)]; at most 1 for a feasible dual.
  double dual_bound_pairing = 0.0;
  /// Smallest eigenvalue of sum_alpha omega_{v_alpha alpha} subtracted from X.
  double dual_constraint_margin = 0.0;
  std::optional<TesterCollection> noise_testers;
  bool noise_testers_valid = false;
  bool noise_testers_coincide = false;
  std::string diagnostics;
  SdpHealth health;
  std::size_t slots = 0;
  double total_dimension = 1.0;

  bool solved() const { return health.status == SolveStatus::optimal; }
};

RobustnessCertificate robustness(const TesterCollection& collection, const IncompatOptions& options = {});

/// N_{a|alpha} = (sum_v d_v(a|alpha) Q_v - T_{a|alpha}) / R, validated as testers.
TesterCollection reconstruct_noise_testers(const TesterCollection& collection, const RobustnessCertificate& cert);

struct WeightCertificate {
  double value = 0.0;
  /// (1/D) sum_v Tr G_v at the optimum = 1 - W before clamping.
  double free_fraction = 0.0;
  std::vector<DeterministicVector> vectors;
  std::vector<HermitianOperator> generators;
  std::vector<HermitianOperator> chain_blocks;
  /// free_part[alpha][a] = sum_v d_v(a|alpha) G_v.
  std::vector<std::vector<HermitianOperator>> free_part;
  /// witness[alpha][a] = Y_{a|alpha}.
  std::vector<std::vector<HermitianOperator>> witness;
  double witness_objective = 0.0;
  double min_remainder_eigenvalue = 0.0;
  std::string diagnostics;
  SdpHealth health;
  double total_dimension = 1.0;

  bool solved() const { return health.status == SolveStatus::optimal; }
};

WeightCertificate convex_weight(const TesterCollection& collection, const IncompatOptions& options = {});

/// Constructive strictly feasible points for an SDP family.
struct SlaterReport {
  std::string family;
  bool primal_strict = false;
  bool dual_strict = false;
  double primal_margin = 0.0;
  double primal_residual = 0.0;
  double dual_margin = 0.0;
  double dual_residual = 0.0;
};

SlaterReport robustness_slater(const TesterCollection& collection, std::size_t cap = 64);
SlaterReport weight_slater(const TesterCollection& collection, std::size_t cap = 64);

}  // namespace combforge
