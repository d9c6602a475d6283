#pragma once

// Discrimination (QCD) and exclusion games played with comb ensembles against
// tester collections, and the numerical checks of the two advantage theorems.

#include <cstdint>
#include <string>
#include <vector>

#include "combforge/comb.hpp"
#include "combforge/incompat.hpp"
#include "combforge/tester.hpp"

namespace combforge {

struct GameOptions {
  /// Cap on o^m parent outcomes (robustness, weight, compatible exclusion).
  std::size_t cap_outcomes = 64;
  /// Cap on m^s guess vectors in the compatible discrimination value.
  std::size_t cap_guesses = 81;
  SolverOptions solver;
  /// Random ensembles drawn for the bound-direction checks.
  std::size_t random_ensembles = 20;
  std::uint64_t seed = 1;
  /// Exclusion lets the player pick the tester per ensemble (min over alpha).
  bool relaxed_exclusion = false;
  bool parallel = true;
  double ratio_tolerance = 1e-4;
};

/// Deterministic optimal strategy of the incompatible discrimination scenario.
struct QcdStrategy {
  /// choice[beta] = tester index used for ensemble beta.
  std::vector<int> choice;
  /// guess[beta][a] = comb guessed on outcome a.
  std::vector<std::vector<int>> guess;
};

/// table(b + beta * combs, a + alpha * outcomes) = w(b, beta) Tr[C_{b|beta} T_{a|alpha}].
Eigen::MatrixXd payoff_table(const EnsembleCollection& games, const TesterCollection& testers, bool parallel = true);

double qcd_value_incompatible(const EnsembleCollection& games, const TesterCollection& testers,
                              QcdStrategy* strategy = nullptr);

/// Best single tester with one outcome per guess vector (one guess per ensemble).
double qcd_value_compatible(const EnsembleCollection& games, const GameOptions& options = {});

/// Error probability sum_beta w(beta) sum_b w(b|beta) Tr[T_{b|beta} C_{b|beta}];
/// tester beta answers ensemble beta unless `relaxed`.
double exclusion_value(const EnsembleCollection& games, const TesterCollection& testers, bool relaxed = false);

/// Minimum exclusion error over compatible collections.
double exclusion_value_compatible(const EnsembleCollection& games, const GameOptions& options = {});

/// Chain residuals of one witness operator read as a comb.
struct WitnessCheck {
  bool valid = false;
  double min_eigenvalue = 0.0;
  double max_chain_residual = 0.0;
  bool placeholder = false;
};

struct WitnessEnsemble {
  EnsembleCollection games;
  bool witness_valid = false;
  /// checks[beta][b].
  std::vector<std::vector<WitnessCheck>> checks;
  /// Sum of traces of the dual operators it was built from.
  double dual_trace = 0.0;
};

/// Witness ensemble C*_{a|alpha} proportional to omega_{a alpha}, weights q(a, alpha) = Tr omega / sum Tr omega.
/// Throws ZeroDual when the multipliers vanish.
WitnessEnsemble ensemble_from_robustness_dual(const RobustnessCertificate& cert, const Signature& tester_signature);
WitnessEnsemble ensemble_from_weight_dual(const WeightCertificate& cert, const Signature& tester_signature);

struct BoundCheck {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double incompatible_value = 0.0;
  double compatible_value = 0.0;
  double ratio = 0.0;
  bool violated = false;
  /// Fixed-collection to best-compatible ratio for exclusion (informational).
  double side_ratio = 0.0;
};

struct GameReport {
  std::string theorem;
  /// R or W.
  double measure = 0.0;
  double incompatible_value = 0.0;
  double compatible_value = 0.0;
  double ratio = 0.0;
  double predicted_ratio = 0.0;
  bool degenerate = false;
  bool exact_checked = false;
  bool exact_ok = false;
  bool witness_valid = false;
  WitnessEnsemble witness;
  std::vector<BoundCheck> bounds;
  std::size_t bound_violations = 0;
  /// Worst signed excess over the bound (positive means violated).
  double worst_bound_margin = 0.0;
  SdpHealth health;
  std::string exclusion_convention;
  std::string diagnostics;
};

GameReport verify_theorem1(const TesterCollection& testers, const GameOptions& options = {});
GameReport verify_theorem2(const TesterCollection& testers, const GameOptions& options = {});

/// Comb signature measured by the testers of `tester_signature`.
Signature comb_signature_for(const Signature& tester_signature);

}  // namespace combforge
