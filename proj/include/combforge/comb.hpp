#pragma once

#include <cstdint>
#include <vector>

#include "combforge/random.hpp"
#include "combforge/tensor.hpp"

namespace combforge {

/// Labels for internal memory wires of a network; kept clear of open system indices.
inline constexpr int kMemoryLabelBase = 1000;
inline int memory_label(int k) { return kMemoryLabelBase + k; }

/// Choi operator of an n-slot causal network on systems 0..2n+1
/// (even = input, odd = output).
struct QuantumComb {
  HermitianOperator choi;
  int slots = 0;
  /// Reduced combs C^(n-1), ..., C^(0) followed by the scalar C^(-1) = 1.
  std::vector<HermitianOperator> chain;
  /// False only for operators wrapped without validation (game witnesses).
  bool validated = false;

  const Signature& signature() const noexcept { return choi.signature(); }
};

/// Residuals of the recursive trace conditions; `levels[k]` is the Frobenius
/// distance of Tr_(2k+1) C^(k) from 1_(2k) (x) C^(k-1) (C^(-1) = 1).
struct CombResiduals {
  double min_eigenvalue = 0.0;
  std::vector<double> levels;
  std::vector<HermitianOperator> chain;
};

CombResiduals comb_residuals(const HermitianOperator& op, int slots);

QuantumComb validate_comb(const HermitianOperator& op, int slots, const Tolerances& tol = {});

/// Wraps an operator as a comb without checking the chain.
QuantumComb unchecked_comb(const HermitianOperator& op, int slots);

/// Choi operator of rho -> Tr_env V rho V^dagger, on `inputs` then `outputs`
/// (canonically reordered). `v` has prod(inputs) columns and prod(outputs)*env rows.
HermitianOperator channel_from_isometry(const Matrix& v, const std::vector<System>& inputs,
                                        const std::vector<System>& outputs);

/// Channel induced by a Haar-random isometry with environment dimension d_in*d_out.
HermitianOperator random_channel(const std::vector<System>& inputs, const std::vector<System>& outputs, Rng& rng);

/// Choi operator of the identity channel from `input` to `output` (equal dims).
HermitianOperator identity_channel(const System& input, const System& output);

/// Residual ||Tr_out J - 1_in||_F of a channel Choi operator.
double channel_residual(const HermitianOperator& choi, const std::vector<int>& inputs);

/// Contracts n+1 teeth over memory wires. Tooth k acts on open systems 2k
/// (input) and 2k+1 (output), receives memory_label(k) for k > 0 and emits
/// memory_label(k+1) for k < n; memory_dims[k] is the dimension of wire k+1.
QuantumComb comb_from_network(const std::vector<HermitianOperator>& teeth, const std::vector<int>& memory_dims);

QuantumComb random_comb(const Signature& signature, const std::vector<int>& memory_dims, std::uint64_t seed);
QuantumComb random_comb(const Signature& signature, const std::vector<int>& memory_dims, Rng& rng);

struct CombEnsemble {
  std::vector<QuantumComb> combs;
  std::vector<double> weights;

  std::size_t size() const noexcept { return combs.size(); }
  const Signature& signature() const { return combs.front().signature(); }
};

struct EnsembleCollection {
  std::vector<CombEnsemble> ensembles;
  std::vector<double> weights;

  std::size_t size() const noexcept { return ensembles.size(); }
  std::size_t combs_per_ensemble() const { return ensembles.front().size(); }
  const Signature& signature() const { return ensembles.front().signature(); }
  /// w(b, beta) = w(beta) w(b | beta).
  double joint_weight(std::size_t b, std::size_t beta) const { return weights[beta] * ensembles[beta].weights[b]; }
};

void check_distribution(const std::vector<double>& weights, const char* what);

CombEnsemble make_ensemble(std::vector<QuantumComb> combs, std::vector<double> weights);
EnsembleCollection make_ensemble_collection(std::vector<CombEnsemble> ensembles, std::vector<double> weights);

/// `ensembles` ensembles of `combs` random combs each, Dirichlet(1,...,1) weights.
EnsembleCollection random_ensemble_collection(const Signature& comb_signature, std::size_t ensembles,
                                              std::size_t combs, std::uint64_t seed,
                                              const std::vector<int>& memory_dims = {});

}  // namespace combforge
