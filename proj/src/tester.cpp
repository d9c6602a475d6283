#include "combforge/tester.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace combforge {

namespace {

void check_tester_signature(const Signature& sig, int slots) {
  if (slots < 1) throw Error(ErrorKind::invalid_input, "a tester needs at least one slot");
  if (sig.size() != static_cast<std::size_t>(2 * slots)) {
    throw Error(ErrorKind::signature_mismatch, "a " + std::to_string(slots) + "-slot tester needs " +
                                                   std::to_string(2 * slots) + " systems");
  }
  for (std::size_t k = 0; k < sig.size(); ++k) {
    if (sig.systems()[k].index != static_cast<int>(k)) {
      throw Error(ErrorKind::signature_mismatch, "tester systems must be indexed 0..2n-1");
    }
  }
}

HermitianOperator sum_of(const std::vector<HermitianOperator>& ops) {
  HermitianOperator s = ops.front();
  for (std::size_t i = 1; i < ops.size(); ++i) s += ops[i];
  return s;
}

std::vector<System> memory_systems(const Signature& sig) {
  std::vector<System> out;
  for (const auto& s : sig.systems()) {
    if (s.index >= kMemoryLabelBase) out.push_back(s);
  }
  return out;
}

}  // namespace

HermitianOperator QuantumTester::effect_sum() const { return sum_of(effects); }

TesterResiduals tester_residuals(const std::vector<HermitianOperator>& effects, int slots) {
  if (effects.empty()) throw Error(ErrorKind::invalid_input, "tester needs at least one effect");
  const Signature sig = effects.front().signature();
  check_tester_signature(sig, slots);
  TesterResiduals res;
  for (const auto& e : effects) {
    if (!(e.signature() == sig)) throw Error(ErrorKind::signature_mismatch, "effects must share one signature");
    res.effect_min_eigenvalues.push_back(min_eigenvalue(e));
  }
  res.levels.assign(static_cast<std::size_t>(slots), 0.0);

  // current = sum at level k, on systems 0..2k-1
  HermitianOperator current = sum_of(effects);
  for (int k = slots; k >= 1; --k) {
    const int last[] = {2 * k - 1};
    const double d = current.signature().dim_of(2 * k - 1);
    HermitianOperator xi = partial_trace(current, last) / d;
    res.levels[static_cast<std::size_t>(k - 1)] =
        current.frobenius_distance(embed_identity(xi, current.signature()));
    res.chain.push_back(xi);
    if (k > 1) {
      const int in[] = {2 * k - 2};
      current = partial_trace(xi, in);
    } else {
      res.probe_trace_error = std::abs(xi.trace() - 1.0);
    }
  }
  return res;
}

QuantumTester validate_tester(const std::vector<HermitianOperator>& effects, int slots, const Tolerances& tol) {
  auto res = tester_residuals(effects, slots);
  for (std::size_t x = 0; x < res.effect_min_eigenvalues.size(); ++x) {
    if (res.effect_min_eigenvalues[x] < -tol.psd) {
      throw Error(ErrorKind::not_positive, "effect " + std::to_string(x) + " has eigenvalue " +
                                               std::to_string(res.effect_min_eigenvalues[x]),
                  static_cast<int>(x));
    }
  }
  for (int k = slots; k >= 1; --k) {
    const double r = res.levels[static_cast<std::size_t>(k - 1)];
    if (r > tol.chain) {
      throw Error(ErrorKind::normalization_violation,
                  "normalization fails at level " + std::to_string(k) + " (residual " + std::to_string(r) + ")", k);
    }
  }
  if (res.probe_trace_error > tol.chain) {
    throw Error(ErrorKind::probe_not_normalized,
                "probe trace differs from 1 by " + std::to_string(res.probe_trace_error));
  }
  std::vector<HermitianOperator> eff;
  eff.reserve(effects.size());
  for (const auto& e : effects) eff.push_back(e.with_signature(e.signature().with_role(Role::tester)));
  return QuantumTester{std::move(eff), slots, std::move(res.chain)};
}

Povm make_povm(std::vector<HermitianOperator> elements, double tolerance) {
  if (elements.empty()) throw Error(ErrorKind::invalid_input, "POVM needs at least one element");
  for (std::size_t x = 0; x < elements.size(); ++x) {
    if (!(elements[x].signature() == elements.front().signature())) {
      throw Error(ErrorKind::signature_mismatch, "POVM elements must share one signature");
    }
    if (min_eigenvalue(elements[x]) < -tolerance) {
      throw Error(ErrorKind::not_positive, "POVM element " + std::to_string(x) + " is not PSD", static_cast<int>(x));
    }
  }
  const auto s = sum_of(elements);
  if (s.frobenius_distance(HermitianOperator::identity(s.signature())) > tolerance) {
    throw Error(ErrorKind::normalization_violation, "POVM elements do not sum to the identity");
  }
  return Povm{std::move(elements)};
}

PostProcessing make_postprocessing(Eigen::MatrixXd matrix) {
  for (Eigen::Index a = 0; a < matrix.cols(); ++a) {
    if ((matrix.col(a).array() < 0.0).any() || std::abs(matrix.col(a).sum() - 1.0) > 1e-12) {
      throw Error(ErrorKind::bad_probability, "post-processing column " + std::to_string(a) + " is not stochastic");
    }
  }
  return PostProcessing{std::move(matrix)};
}

PostProcessing identity_postprocessing(std::size_t outcomes) {
  const auto o = static_cast<Eigen::Index>(outcomes);
  return PostProcessing{Eigen::MatrixXd::Identity(o, o)};
}

TesterCollection make_collection(std::vector<QuantumTester> testers) {
  if (testers.empty()) throw Error(ErrorKind::invalid_input, "collection needs at least one tester");
  std::size_t o = 0;
  for (const auto& t : testers) {
    if (!(t.signature() == testers.front().signature()) || t.slots != testers.front().slots) {
      throw Error(ErrorKind::signature_mismatch, "collection members must share a signature");
    }
    o = std::max(o, t.outcomes());
  }
  for (auto& t : testers) {
    while (t.effects.size() < o) t.effects.push_back(HermitianOperator::zero(t.signature()));
  }
  return TesterCollection{std::move(testers)};
}

QuantumTester tester_from_network(const HermitianOperator& probe, const std::vector<HermitianOperator>& channels,
                                  const Povm& povm) {
  const int n = static_cast<int>(channels.size()) + 1;
  if (!probe.signature().contains(0)) throw Error(ErrorKind::signature_mismatch, "probe must act on system 0");
  for (const auto& s : probe.signature().systems()) {
    if (s.index != 0 && s.index != memory_label(1)) {
      throw Error(ErrorKind::signature_mismatch, "probe has unexpected system " + std::to_string(s.index));
    }
  }
  if (min_eigenvalue(probe) < -1e-8 || std::abs(probe.trace() - 1.0) > 1e-8) {
    throw Error(ErrorKind::not_a_state, "probe is not a density operator");
  }
  for (int k = 1; k < n; ++k) {
    const auto& j = channels[static_cast<std::size_t>(k - 1)];
    std::vector<int> inputs;
    for (const auto& s : j.signature().systems()) {
      if (s.index == 2 * k - 1 || s.index == memory_label(k)) {
        inputs.push_back(s.index);
      } else if (s.index != 2 * k && s.index != memory_label(k + 1)) {
        throw Error(ErrorKind::signature_mismatch,
                    "channel " + std::to_string(k) + " has unexpected system " + std::to_string(s.index));
      }
    }
    if (!j.signature().contains(2 * k - 1) || !j.signature().contains(2 * k)) {
      throw Error(ErrorKind::signature_mismatch, "channel " + std::to_string(k) + " must map 2k-1 to 2k");
    }
    if (channel_residual(j, inputs) > 1e-8) {
      throw Error(ErrorKind::not_a_channel, "channel " + std::to_string(k) + " is not trace preserving", k);
    }
  }
  for (const auto& s : povm.signature().systems()) {
    if (s.index != 2 * n - 1 && s.index != memory_label(n)) {
      throw Error(ErrorKind::signature_mismatch, "POVM has unexpected system " + std::to_string(s.index));
    }
  }
  if (!povm.signature().contains(2 * n - 1)) {
    throw Error(ErrorKind::signature_mismatch, "POVM must act on the last output system");
  }

  HermitianOperator r = probe;
  for (const auto& j : channels) r = link_product(r, j);
  // every memory wire must be consumed by the time the POVM is applied
  const auto dangling = memory_systems(r.signature());
  for (const auto& m : dangling) {
    if (!povm.signature().contains(m.index)) {
      throw Error(ErrorKind::signature_mismatch, "memory wire " + std::to_string(m.index) + " is left open");
    }
  }
  std::vector<HermitianOperator> effects;
  effects.reserve(povm.size());
  for (const auto& m : povm.elements) {
    const auto rx = link_product(r, m.transpose());
    if (!memory_systems(rx.signature()).empty()) {
      throw Error(ErrorKind::signature_mismatch, "POVM acts on a memory wire the network does not carry");
    }
    effects.push_back(rx.transpose());
  }
  return validate_tester(effects, n);
}

std::vector<double> born_probabilities(const QuantumTester& tester, const QuantumComb& comb) {
  if (tester.slots != comb.slots + 1 || !(tester.signature() == comb.signature())) {
    throw Error(ErrorKind::signature_mismatch, "tester and comb do not pair");
  }
  std::vector<double> p;
  p.reserve(tester.outcomes());
  for (const auto& t : tester.effects) p.push_back(std::clamp(inner(t, comb.choi), 0.0, 1.0));
  return p;
}

Povm canonical_povm(const QuantumTester& tester) {
  const auto& sig = tester.signature();
  const auto k = embed_identity(inv_sqrt_support(tester.top_normalization(), 1e-10), sig);
  Povm out;
  out.elements.reserve(tester.outcomes());
  for (const auto& t : tester.effects) out.elements.push_back(conjugate(t, k.matrix()));
  return out;
}

QuantumTester mix_testers(const QuantumTester& t1, const QuantumTester& t2, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::bad_probability, "mixing weight outside [0,1]");
  if (!(t1.signature() == t2.signature()) || t1.outcomes() != t2.outcomes()) {
    throw Error(ErrorKind::signature_mismatch, "mixed testers must share signature and outcomes");
  }
  if (p == 1.0) return t1;
  if (p == 0.0) return t2;
  std::vector<HermitianOperator> eff;
  for (std::size_t x = 0; x < t1.outcomes(); ++x) eff.push_back(p * t1.effects[x] + (1.0 - p) * t2.effects[x]);
  std::vector<HermitianOperator> chain;
  for (std::size_t k = 0; k < t1.normalization_chain.size(); ++k) {
    chain.push_back(p * t1.normalization_chain[k] + (1.0 - p) * t2.normalization_chain[k]);
  }
  return QuantumTester{std::move(eff), t1.slots, std::move(chain)};
}

QuantumTester postprocess_tester(const QuantumTester& tester, const PostProcessing& post) {
  if (static_cast<std::size_t>(post.matrix.cols()) != tester.outcomes()) {
    throw Error(ErrorKind::invalid_input, "post-processing columns must match tester outcomes");
  }
  std::vector<HermitianOperator> eff;
  for (Eigen::Index b = 0; b < post.matrix.rows(); ++b) {
    HermitianOperator e = HermitianOperator::zero(tester.signature());
    for (Eigen::Index a = 0; a < post.matrix.cols(); ++a) {
      const double w = post.matrix(b, a);
      if (w != 0.0) e += w * tester.effects[static_cast<std::size_t>(a)];
    }
    eff.push_back(std::move(e));
  }
  return QuantumTester{std::move(eff), tester.slots, tester.normalization_chain};
}

TesterCollection simulate_collection(const TesterCollection& source, const Simulation& sim) {
  check_distribution(sim.lambda_weights, "simulation p(lambda)");
  const std::size_t nl = sim.lambda_weights.size();
  if (sim.choice.size() != nl || sim.relabel.size() != nl) {
    throw Error(ErrorKind::invalid_input, "simulation tables must cover every lambda");
  }
  const auto members = static_cast<std::size_t>(sim.choice.front().cols());
  std::size_t outcomes = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& c = sim.choice[l];
    if (static_cast<std::size_t>(c.rows()) != source.size() || static_cast<std::size_t>(c.cols()) != members) {
      throw Error(ErrorKind::invalid_input, "tester-choice table has the wrong shape");
    }
    make_postprocessing(c);
    if (sim.relabel[l].size() != members) throw Error(ErrorKind::invalid_input, "one relabeling per output member");
    for (const auto& p : sim.relabel[l]) {
      make_postprocessing(p.matrix);
      if (static_cast<std::size_t>(p.matrix.cols()) != source.outcomes()) {
        throw Error(ErrorKind::invalid_input, "relabeling columns must match source outcomes");
      }
      if (outcomes == 0) outcomes = static_cast<std::size_t>(p.matrix.rows());
      if (static_cast<std::size_t>(p.matrix.rows()) != outcomes) {
        throw Error(ErrorKind::invalid_input, "relabelings must share an output size");
      }
    }
  }
  std::vector<QuantumTester> out;
  for (std::size_t beta = 0; beta < members; ++beta) {
    std::vector<HermitianOperator> eff(outcomes, HermitianOperator::zero(source.signature()));
    std::vector<HermitianOperator> chain;
    for (const auto& xi : source.testers.front().normalization_chain) chain.push_back(xi * 0.0);
    for (std::size_t l = 0; l < nl; ++l) {
      const auto& rel = sim.relabel[l][beta].matrix;
      for (std::size_t alpha = 0; alpha < source.size(); ++alpha) {
        const double w = sim.lambda_weights[l] * sim.choice[l](static_cast<Eigen::Index>(alpha),
                                                               static_cast<Eigen::Index>(beta));
        if (w == 0.0) continue;
        const auto& src = source.testers[alpha];
        for (std::size_t k = 0; k < chain.size(); ++k) chain[k] += w * src.normalization_chain[k];
        for (std::size_t b = 0; b < outcomes; ++b) {
          for (std::size_t a = 0; a < source.outcomes(); ++a) {
            const double wb = w * rel(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a));
            if (wb != 0.0) eff[b] += wb * src.effects[a];
          }
        }
      }
    }
    out.push_back(QuantumTester{std::move(eff), source.slots(), std::move(chain)});
  }
  return TesterCollection{std::move(out)};
}

Simulation random_simulation(std::size_t source_members, std::size_t source_outcomes, std::size_t members,
                             std::size_t outcomes, std::size_t lambdas, Rng& rng) {
  Simulation sim;
  sim.lambda_weights = dirichlet_uniform(lambdas, rng);
  for (std::size_t l = 0; l < lambdas; ++l) {
    sim.choice.push_back(random_stochastic(source_members, members, rng));
    std::vector<PostProcessing> rel;
    for (std::size_t beta = 0; beta < members; ++beta) {
      rel.push_back(PostProcessing{random_stochastic(outcomes, source_outcomes, rng)});
    }
    sim.relabel.push_back(std::move(rel));
  }
  return sim;
}

HermitianOperator random_state(const Signature& signature, Rng& rng) {
  const auto d = signature.total_dim();
  const Matrix g = ginibre(d, d, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return HermitianOperator::trusted(signature, rho);
}

Povm random_povm(const Signature& signature, std::size_t outcomes, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(signature.total_dim());
  const Matrix v = haar_isometry(outcomes * static_cast<std::size_t>(d), static_cast<std::size_t>(d), rng);
  Povm p;
  for (std::size_t x = 0; x < outcomes; ++x) {
    const auto block = v.middleRows(static_cast<Eigen::Index>(x) * d, d);
    p.elements.push_back(HermitianOperator::trusted(signature, block.adjoint() * block));
  }
  return p;
}

Povm random_projective_povm(const Signature& signature, Rng& rng) {
  const auto d = signature.total_dim();
  const Matrix u = haar_unitary(d, rng);
  Povm p;
  for (std::size_t x = 0; x < d; ++x) {
    const auto col = u.col(static_cast<Eigen::Index>(x));
    p.elements.push_back(HermitianOperator::trusted(signature, col * col.adjoint()));
  }
  return p;
}

Povm unsharp(const Povm& povm, double eta) {
  Povm out;
  const double d = static_cast<double>(povm.signature().total_dim());
  for (const auto& e : povm.elements) {
    out.elements.push_back(eta * e + ((1.0 - eta) * e.trace() / d) * HermitianOperator::identity(e.signature()));
  }
  return out;
}

QuantumTester probe_trivial_tester(const Povm& povm) {
  if (povm.signature().size() != 1) throw Error(ErrorKind::signature_mismatch, "probe-trivial POVM acts on one system");
  const int d = povm.signature().systems().front().dim;
  const Signature sig({{0, 1}, {1, d}}, Role::tester);
  std::vector<HermitianOperator> eff;
  for (const auto& e : povm.elements) eff.push_back(HermitianOperator::trusted(sig, e.matrix()));
  return validate_tester(eff, 1);
}

QuantumTester random_tester(const std::vector<int>& dims, std::size_t outcomes, const std::vector<int>& memory_dims,
                            Rng& rng) {
  if (dims.empty() || dims.size() % 2 != 0) throw Error(ErrorKind::signature_mismatch, "tester needs 2n dimensions");
  const int n = static_cast<int>(dims.size() / 2);
  if (memory_dims.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorKind::signature_mismatch, "random_tester needs one memory dimension per wire");
  }
  auto mem = [&](int k) { return System{memory_label(k), memory_dims[static_cast<std::size_t>(k - 1)]}; };
  auto open = [&](int i) { return System{i, dims[static_cast<std::size_t>(i)]}; };

  const HermitianOperator probe = random_state(Signature({open(0), mem(1)}), rng);
  std::vector<HermitianOperator> channels;
  for (int k = 1; k < n; ++k) channels.push_back(random_channel({open(2 * k - 1), mem(k)}, {open(2 * k), mem(k + 1)}, rng));
  const Povm povm = random_povm(Signature({open(2 * n - 1), mem(n)}), outcomes, rng);
  return tester_from_network(probe, channels, povm);
}

}  // namespace combforge
