#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "combforge/comb.hpp"
#include "combforge/random.hpp"
#include "combforge/tensor.hpp"

namespace combforge {

/// n-slot tester on systems 0..2n-1. Measures (n-1)-slot combs.
struct QuantumTester {
  std::vector<HermitianOperator> effects;
  int slots = 0;
  /// Xi^(n), ..., Xi^(1); Xi^(k) lives on systems 0..2k-2.
  std::vector<HermitianOperator> normalization_chain;

  const Signature& signature() const { return effects.front().signature(); }
  std::size_t outcomes() const noexcept { return effects.size(); }
  HermitianOperator effect_sum() const;
  const HermitianOperator& top_normalization() const { return normalization_chain.front(); }
};

struct TesterResiduals {
  std::vector<double> effect_min_eigenvalues;
  /// levels[k-1]: residual of the level-k condition (k = n is the effect sum).
  std::vector<double> levels;
  double probe_trace_error = 0.0;
  std::vector<HermitianOperator> chain;
};

TesterResiduals tester_residuals(const std::vector<HermitianOperator>& effects, int slots);

QuantumTester validate_tester(const std::vector<HermitianOperator>& effects, int slots, const Tolerances& tol = {});

struct Povm {
  std::vector<HermitianOperator> elements;

  std::size_t size() const noexcept { return elements.size(); }
  const Signature& signature() const { return elements.front().signature(); }
};

/// PSD elements on one signature summing to the identity within `tolerance`.
Povm make_povm(std::vector<HermitianOperator> elements, double tolerance = 1e-7);

/// Column-stochastic table p(b|a): rows b, columns a.
struct PostProcessing {
  Eigen::MatrixXd matrix;
};

PostProcessing make_postprocessing(Eigen::MatrixXd matrix);
PostProcessing identity_postprocessing(std::size_t outcomes);

struct TesterCollection {
  std::vector<QuantumTester> testers;

  std::size_t size() const noexcept { return testers.size(); }
  std::size_t outcomes() const { return testers.front().outcomes(); }
  int slots() const { return testers.front().slots; }
  const Signature& signature() const { return testers.front().signature(); }
  const HermitianOperator& effect(std::size_t a, std::size_t alpha) const { return testers[alpha].effects[a]; }
  /// Product of odd dimensions, i.e. Tr of every member's effect sum.
  double total_dimension() const { return static_cast<double>(signature().output_dim()); }
};

/// Checks shared signatures and pads every member with zero effects up to the
/// largest outcome count.
TesterCollection make_collection(std::vector<QuantumTester> testers);

/// Probe state on {0, memory_label(1)}, channel k on {2k-1, memory_label(k)}
/// -> {2k, memory_label(k+1)}, POVM on {2n-1, memory_label(n)}. Memory wires
/// may be omitted where trivial.
QuantumTester tester_from_network(const HermitianOperator& probe, const std::vector<HermitianOperator>& channels,
                                  const Povm& povm);

std::vector<double> born_probabilities(const QuantumTester& tester, const QuantumComb& comb);

Povm canonical_povm(const QuantumTester& tester);

QuantumTester mix_testers(const QuantumTester& t1, const QuantumTester& t2, double p);

/// Effects T'_b = sum_a p(b|a) T_a.
QuantumTester postprocess_tester(const QuantumTester& tester, const PostProcessing& post);

/// Classical simulation of a collection: shared randomness p(lambda), tester
/// choice p(alpha|beta,lambda) and relabelings p(b|a,beta,lambda).
struct Simulation {
  std::vector<double> lambda_weights;
  /// choice[lambda]: rows alpha (source member), columns beta (output member).
  std::vector<Eigen::MatrixXd> choice;
  /// relabel[lambda][beta]: rows b (output outcome), columns a (source outcome).
  std::vector<std::vector<PostProcessing>> relabel;
};

TesterCollection simulate_collection(const TesterCollection& source, const Simulation& sim);

Simulation random_simulation(std::size_t source_members, std::size_t source_outcomes, std::size_t members,
                             std::size_t outcomes, std::size_t lambdas, Rng& rng);

// Random generators.

/// Random mixed state from a square Ginibre matrix.
HermitianOperator random_state(const Signature& signature, Rng& rng);
/// Random POVM from a Haar isometry d -> outcomes * d.
Povm random_povm(const Signature& signature, std::size_t outcomes, Rng& rng);
/// Rank-1 projectors onto a Haar-random orthonormal basis.
Povm random_projective_povm(const Signature& signature, Rng& rng);
/// eta * P + (1 - eta) * Tr(P)/d * 1 for each element.
Povm unsharp(const Povm& povm, double eta);

/// 1-slot tester with a one-dimensional input wire: effects are the POVM on system 1.
QuantumTester probe_trivial_tester(const Povm& povm);

/// Random network tester: dims gives the 2n open dimensions, memory_dims one
/// dimension per wire 1..n (size n, entries >= 1).
QuantumTester random_tester(const std::vector<int>& dims, std::size_t outcomes, const std::vector<int>& memory_dims,
                            Rng& rng);

}  // namespace combforge
