#include "combforge/comb.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace combforge {

namespace {

constexpr int kEnvironmentLabel = 999999;

std::size_t dim_product(const std::vector<System>& systems) {
  std::size_t d = 1;
  for (const auto& s : systems) d *= static_cast<std::size_t>(s.dim);
  return d;
}

void check_comb_signature(const Signature& sig, int slots) {
  if (slots < 0) throw Error(ErrorKind::invalid_input, "slot count must be >= 0");
  const auto expected = static_cast<std::size_t>(2 * (slots + 1));
  if (sig.size() != expected) {
    throw Error(ErrorKind::signature_mismatch, "a " + std::to_string(slots) + "-slot comb needs " +
                                                   std::to_string(expected) + " systems, got " +
                                                   std::to_string(sig.size()));
  }
  for (std::size_t k = 0; k < sig.size(); ++k) {
    if (sig.systems()[k].index != static_cast<int>(k)) {
      throw Error(ErrorKind::signature_mismatch, "comb systems must be indexed 0..2n+1");
    }
  }
}

}  // namespace

CombResiduals comb_residuals(const HermitianOperator& op, int slots) {
  check_comb_signature(op.signature(), slots);
  CombResiduals out;
  out.min_eigenvalue = min_eigenvalue(op);
  out.levels.assign(static_cast<std::size_t>(slots + 1), 0.0);

  HermitianOperator current = op;
  for (int k = slots; k >= 0; --k) {
    const int out_sys = 2 * k + 1;
    const int in_sys = 2 * k;
    const int outs[] = {out_sys};
    const int ins[] = {in_sys};
    const auto marginal = partial_trace(current, outs);
    const double din = current.signature().dim_of(in_sys);
    HermitianOperator reduced = partial_trace(marginal, ins) / din;
    // C^(-1) is the scalar 1, not whatever the marginal says
    const HermitianOperator target_lower = k == 0 ? HermitianOperator::scalar(1.0) : reduced;
    const auto target = embed_identity(target_lower, marginal.signature());
    out.levels[static_cast<std::size_t>(k)] = marginal.frobenius_distance(target);
    out.chain.push_back(k == 0 ? HermitianOperator::scalar(1.0) : reduced);
    current = std::move(reduced);
  }
  return out;
}

QuantumComb validate_comb(const HermitianOperator& op, int slots, const Tolerances& tol) {
  auto res = comb_residuals(op, slots);
  if (res.min_eigenvalue < -tol.psd) {
    throw Error(ErrorKind::not_positive, "comb Choi operator has eigenvalue " + std::to_string(res.min_eigenvalue));
  }
  for (int k = slots; k >= 0; --k) {
    const double r = res.levels[static_cast<std::size_t>(k)];
    if (r > tol.chain) {
      throw Error(ErrorKind::causality_violation,
                  "trace condition fails at level " + std::to_string(k) + " (residual " + std::to_string(r) + ")", k);
    }
  }
  QuantumComb comb{op.with_signature(op.signature().with_role(Role::comb)), slots, std::move(res.chain), true};
  return comb;
}

QuantumComb unchecked_comb(const HermitianOperator& op, int slots) {
  check_comb_signature(op.signature(), slots);
  return QuantumComb{op.with_signature(op.signature().with_role(Role::comb)), slots, {}, false};
}

HermitianOperator channel_from_isometry(const Matrix& v, const std::vector<System>& inputs,
                                        const std::vector<System>& outputs) {
  const auto din = static_cast<Eigen::Index>(dim_product(inputs));
  const auto dout = static_cast<Eigen::Index>(dim_product(outputs));
  if (v.cols() != din || v.rows() % dout != 0) {
    throw Error(ErrorKind::signature_mismatch, "isometry shape does not match channel systems");
  }
  const Eigen::Index denv = v.rows() / dout;
  // |V>> = sum_i |i> (x) V|i>, on factors [inputs..., outputs..., env]
  Eigen::VectorXcd vec(din * v.rows());
  for (Eigen::Index i = 0; i < din; ++i) vec.segment(i * v.rows(), v.rows()) = v.col(i);
  const Matrix full = vec * vec.adjoint();

  std::vector<System> order = inputs;
  order.insert(order.end(), outputs.begin(), outputs.end());
  order.push_back({kEnvironmentLabel, static_cast<int>(denv)});
  const auto joint = HermitianOperator::from_factors(full, order);
  const int env[] = {kEnvironmentLabel};
  return partial_trace(joint, env);
}

HermitianOperator random_channel(const std::vector<System>& inputs, const std::vector<System>& outputs, Rng& rng) {
  const std::size_t din = dim_product(inputs);
  const std::size_t dout = dim_product(outputs);
  const std::size_t denv = din * dout;
  const Matrix v = haar_isometry(dout * denv, din, rng);
  return channel_from_isometry(v, inputs, outputs);
}

HermitianOperator identity_channel(const System& input, const System& output) {
  if (input.dim != output.dim) throw Error(ErrorKind::signature_mismatch, "identity channel needs equal dims");
  const auto d = static_cast<Eigen::Index>(input.dim);
  Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(d * d);
  for (Eigen::Index i = 0; i < d; ++i) phi(i * d + i) = 1.0;
  return HermitianOperator::from_factors(phi * phi.adjoint(), {input, output});
}

double channel_residual(const HermitianOperator& choi, const std::vector<int>& inputs) {
  std::vector<int> outputs;
  for (const auto& s : choi.signature().systems()) {
    if (std::find(inputs.begin(), inputs.end(), s.index) == inputs.end()) outputs.push_back(s.index);
  }
  const auto marginal = partial_trace(choi, outputs);
  return marginal.frobenius_distance(HermitianOperator::identity(marginal.signature()));
}

QuantumComb comb_from_network(const std::vector<HermitianOperator>& teeth, const std::vector<int>& memory_dims) {
  if (teeth.empty()) throw Error(ErrorKind::invalid_input, "comb_from_network needs at least one tooth");
  const int n = static_cast<int>(teeth.size()) - 1;
  if (memory_dims.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorKind::signature_mismatch, "need one memory dimension between consecutive teeth");
  }
  for (int k = 0; k <= n; ++k) {
    const auto& sig = teeth[static_cast<std::size_t>(k)].signature();
    std::vector<int> inputs{2 * k};
    if (!sig.contains(2 * k) || !sig.contains(2 * k + 1)) {
      throw Error(ErrorKind::signature_mismatch, "tooth " + std::to_string(k) + " must act on systems 2k and 2k+1");
    }
    for (const auto& s : sig.systems()) {
      if (s.index == 2 * k || s.index == 2 * k + 1) continue;
      if (k > 0 && s.index == memory_label(k)) {
        if (s.dim != memory_dims[static_cast<std::size_t>(k - 1)]) {
          throw Error(ErrorKind::signature_mismatch, "incoming memory dimension mismatch at tooth " + std::to_string(k));
        }
        inputs.push_back(s.index);
      } else if (k < n && s.index == memory_label(k + 1)) {
        if (s.dim != memory_dims[static_cast<std::size_t>(k)]) {
          throw Error(ErrorKind::signature_mismatch, "outgoing memory dimension mismatch at tooth " + std::to_string(k));
        }
      } else {
        throw Error(ErrorKind::signature_mismatch,
                    "tooth " + std::to_string(k) + " has unexpected system " + std::to_string(s.index));
      }
    }
    // a missing memory wire is only acceptable when it is trivial
    if (k > 0 && !sig.contains(memory_label(k)) && memory_dims[static_cast<std::size_t>(k - 1)] != 1) {
      throw Error(ErrorKind::signature_mismatch, "tooth " + std::to_string(k) + " lacks its incoming memory");
    }
    if (k < n && !sig.contains(memory_label(k + 1)) && memory_dims[static_cast<std::size_t>(k)] != 1) {
      throw Error(ErrorKind::signature_mismatch, "tooth " + std::to_string(k) + " lacks its outgoing memory");
    }
    const double r = channel_residual(teeth[static_cast<std::size_t>(k)], inputs);
    if (r > 1e-8) {
      throw Error(ErrorKind::not_a_channel,
                  "tooth " + std::to_string(k) + " is not trace preserving (residual " + std::to_string(r) + ")", k);
    }
  }
  HermitianOperator c = teeth.front();
  for (std::size_t k = 1; k < teeth.size(); ++k) c = link_product(c, teeth[k]);
  return validate_comb(c.with_signature(c.signature().with_role(Role::comb)), n);
}

QuantumComb random_comb(const Signature& signature, const std::vector<int>& memory_dims, Rng& rng) {
  const int n = static_cast<int>(signature.size() / 2) - 1;
  check_comb_signature(signature, n);
  if (memory_dims.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorKind::signature_mismatch, "random_comb needs one memory dimension per internal wire");
  }
  std::vector<HermitianOperator> teeth;
  teeth.reserve(static_cast<std::size_t>(n + 1));
  for (int k = 0; k <= n; ++k) {
    std::vector<System> inputs{{2 * k, signature.dim_of(2 * k)}};
    std::vector<System> outputs{{2 * k + 1, signature.dim_of(2 * k + 1)}};
    if (k > 0) inputs.push_back({memory_label(k), memory_dims[static_cast<std::size_t>(k - 1)]});
    if (k < n) outputs.push_back({memory_label(k + 1), memory_dims[static_cast<std::size_t>(k)]});
    teeth.push_back(random_channel(inputs, outputs, rng));
  }
  return comb_from_network(teeth, memory_dims);
}

QuantumComb random_comb(const Signature& signature, const std::vector<int>& memory_dims, std::uint64_t seed) {
  Rng rng(seed);
  return random_comb(signature, memory_dims, rng);
}

void check_distribution(const std::vector<double>& weights, const char* what) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorKind::bad_probability, std::string(what) + ": negative weight");
    total += w;
  }
  if (weights.empty() || std::abs(total - 1.0) > 1e-10) {
    throw Error(ErrorKind::bad_probability, std::string(what) + ": weights must sum to 1");
  }
}

CombEnsemble make_ensemble(std::vector<QuantumComb> combs, std::vector<double> weights) {
  if (combs.empty() || combs.size() != weights.size()) {
    throw Error(ErrorKind::invalid_input, "ensemble needs one weight per comb");
  }
  check_distribution(weights, "ensemble");
  for (const auto& c : combs) {
    if (!(c.signature() == combs.front().signature())) {
      throw Error(ErrorKind::signature_mismatch, "ensemble combs must share a signature");
    }
  }
  return CombEnsemble{std::move(combs), std::move(weights)};
}

EnsembleCollection make_ensemble_collection(std::vector<CombEnsemble> ensembles, std::vector<double> weights) {
  if (ensembles.empty() || ensembles.size() != weights.size()) {
    throw Error(ErrorKind::invalid_input, "collection needs one weight per ensemble");
  }
  check_distribution(weights, "ensemble collection");
  for (const auto& e : ensembles) {
    if (!(e.signature() == ensembles.front().signature()) || e.size() != ensembles.front().size()) {
      throw Error(ErrorKind::signature_mismatch, "ensembles must share signature and comb count");
    }
  }
  return EnsembleCollection{std::move(ensembles), std::move(weights)};
}

EnsembleCollection random_ensemble_collection(const Signature& comb_signature, std::size_t ensembles,
                                              std::size_t combs, std::uint64_t seed,
                                              const std::vector<int>& memory_dims) {
  Rng rng(seed);
  const int n = static_cast<int>(comb_signature.size() / 2) - 1;
  std::vector<int> mem = memory_dims;
  if (mem.empty()) mem.assign(static_cast<std::size_t>(std::max(n, 0)), 2);
  std::vector<CombEnsemble> list;
  for (std::size_t beta = 0; beta < ensembles; ++beta) {
    std::vector<QuantumComb> cs;
    for (std::size_t b = 0; b < combs; ++b) cs.push_back(random_comb(comb_signature, mem, rng));
    list.push_back(make_ensemble(std::move(cs), dirichlet_uniform(combs, rng)));
  }
  return make_ensemble_collection(std::move(list), dirichlet_uniform(ensembles, rng));
}

}  // namespace combforge
