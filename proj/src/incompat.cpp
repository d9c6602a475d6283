#include "combforge/incompat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace combforge {

std::vector<DeterministicVector> deterministic_vectors(std::size_t members, std::size_t outcomes, std::size_t cap) {
  if (members == 0 || outcomes == 0) throw Error(ErrorKind::invalid_input, "need at least one member and outcome");
  std::size_t count = 1;
  for (std::size_t i = 0; i < members; ++i) {
    count *= outcomes;
    if (count > cap) {
      throw Error(ErrorKind::cap_exceeded, std::to_string(outcomes) + "^" + std::to_string(members) +
                                               " vector outcomes exceed the cap of " + std::to_string(cap));
    }
  }
  std::vector<DeterministicVector> out;
  out.reserve(count);
  DeterministicVector v(members, 0);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(v);
    for (std::size_t pos = members; pos-- > 0;) {
      if (++v[pos] < static_cast<int>(outcomes)) break;
      v[pos] = 0;
    }
  }
  return out;
}

std::vector<HermitianOperator> maximally_mixed_chain(const Signature& sig) {
  const int n = static_cast<int>(sig.size() / 2);
  std::vector<HermitianOperator> up;  // Xi^(1), ..., Xi^(n)
  up.push_back(HermitianOperator::identity(sig.prefix(1)) / sig.dim_of(0));
  for (int k = 2; k <= n; ++k) {
    up.push_back(embed_identity(up.back(), sig.prefix(static_cast<std::size_t>(2 * k - 1))) / sig.dim_of(2 * k - 2));
  }
  std::reverse(up.begin(), up.end());
  return up;
}

ParentSkeleton parent_skeleton(const Signature& tester_signature, std::size_t outcomes) {
  ParentSkeleton sk;
  const Signature sig = tester_signature.with_role(Role::generic);
  const int n = static_cast<int>(sig.size() / 2);
  for (std::size_t i = 0; i < outcomes; ++i) sk.parent_blocks.push_back(sk.problem.add_block("Q" + std::to_string(i), sig));
  for (int k = 1; k <= n; ++k) {
    sk.chain_blocks.push_back(
        sk.problem.add_block("Theta" + std::to_string(k), sig.prefix(static_cast<std::size_t>(2 * k - 1))));
  }
  std::vector<LinearTerm> terms;
  for (int b : sk.parent_blocks) terms.push_back({b, 1.0, {}});
  terms.push_back({sk.chain_blocks.back(), -1.0, {}});
  sk.sum_equality = sk.problem.add_equality("parent sum", std::move(terms), HermitianOperator::zero(sig));
  for (int k = 2; k <= n; ++k) {
    sk.problem.add_equality("chain" + std::to_string(k),
                            {{sk.chain_blocks[static_cast<std::size_t>(k - 1)], 1.0, {2 * k - 2}},
                             {sk.chain_blocks[static_cast<std::size_t>(k - 2)], -1.0, {}}},
                            HermitianOperator::zero(sig.prefix(static_cast<std::size_t>(2 * k - 2))));
  }
  return sk;
}

double max_normalization_pairing(const HermitianOperator& x, const Signature& tester_signature,
                                 const SolverOptions& options) {
  const Signature sig = tester_signature.with_role(Role::generic);
  const int n = static_cast<int>(sig.size() / 2);
  SdpProblem p;
  std::vector<int> theta;
  for (int k = 1; k <= n; ++k) {
    theta.push_back(p.add_block("Theta" + std::to_string(k), sig.prefix(static_cast<std::size_t>(2 * k - 1))));
  }
  for (int k = 2; k <= n; ++k) {
    p.add_equality("chain" + std::to_string(k),
                   {{theta[static_cast<std::size_t>(k - 1)], 1.0, {2 * k - 2}}, {theta[static_cast<std::size_t>(k - 2)], -1.0, {}}},
                   HermitianOperator::zero(sig.prefix(static_cast<std::size_t>(2 * k - 2))));
  }
  p.add_equality("normalization", {{theta.front(), 1.0, {0}}}, HermitianOperator::scalar(1.0));
  const int last[] = {2 * n - 1};
  p.add_objective(theta.back(), partial_trace(x.with_signature(sig), last));
  p.set_sense(Sense::maximize);
  const auto sol = solve_sdp(p, options);
  if (sol.status != SolveStatus::optimal) return std::numeric_limits<double>::quiet_NaN();
  return sol.primal_value;
}

const char* to_string(CompatibilityVerdict v) {
  switch (v) {
    case CompatibilityVerdict::compatible: return "compatible";
    case CompatibilityVerdict::incompatible: return "incompatible";
    case CompatibilityVerdict::undecided: return "undecided";
  }
  return "unknown";
}

namespace {

double chain_disagreement(const TesterCollection& c) {
  double worst = 0.0;
  const auto& ref = c.testers.front().normalization_chain;
  for (const auto& t : c.testers) {
    for (std::size_t k = 0; k < ref.size(); ++k) {
      worst = std::max(worst, t.normalization_chain[k].frobenius_distance(ref[k]));
    }
  }
  return worst;
}

std::vector<std::size_t> vectors_with(const std::vector<DeterministicVector>& vs, std::size_t alpha, std::size_t a) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i][alpha] == static_cast<int>(a)) out.push_back(i);
  }
  return out;
}

SdpHealth health_of(const SdpSolution& sol) {
  return SdpHealth{sol.status, sol.gap, sol.primal_residual, sol.dual_residual, sol.max_complementary_slackness(),
                   sol.iterations, sol.message};
}

struct RobustnessProblem {
  ParentSkeleton sk;
  std::vector<DeterministicVector> vectors;
};

RobustnessProblem robustness_problem(const TesterCollection& c, std::size_t cap) {
  auto vectors = deterministic_vectors(c.size(), c.outcomes(), cap);
  RobustnessProblem rp{parent_skeleton(c.signature(), vectors.size()), std::move(vectors)};
  for (std::size_t alpha = 0; alpha < c.size(); ++alpha) {
    for (std::size_t a = 0; a < c.outcomes(); ++a) {
      std::vector<LinearTerm> terms;
      for (std::size_t i : vectors_with(rp.vectors, alpha, a)) terms.push_back({rp.sk.parent_blocks[i], 1.0, {}});
      rp.sk.problem.add_lmi("T[" + std::to_string(a) + "|" + std::to_string(alpha) + "]", std::move(terms),
                            c.effect(a, alpha));
    }
  }
  const int theta1 = rp.sk.chain_blocks.front();
  rp.sk.problem.add_objective(theta1, HermitianOperator::identity(rp.sk.problem.blocks()[static_cast<std::size_t>(theta1)].signature));
  rp.sk.problem.set_sense(Sense::minimize);
  return rp;
}

RobustnessProblem weight_problem(const TesterCollection& c, std::size_t cap) {
  auto vectors = deterministic_vectors(c.size(), c.outcomes(), cap);
  RobustnessProblem rp{parent_skeleton(c.signature(), vectors.size()), std::move(vectors)};
  for (std::size_t alpha = 0; alpha < c.size(); ++alpha) {
    for (std::size_t a = 0; a < c.outcomes(); ++a) {
      std::vector<LinearTerm> terms;
      for (std::size_t i : vectors_with(rp.vectors, alpha, a)) terms.push_back({rp.sk.parent_blocks[i], -1.0, {}});
      rp.sk.problem.add_lmi("T[" + std::to_string(a) + "|" + std::to_string(alpha) + "]", std::move(terms),
                            c.effect(a, alpha) * -1.0);
    }
  }
  const double d = c.total_dimension();
  for (int b : rp.sk.parent_blocks) {
    rp.sk.problem.add_objective(b, HermitianOperator::identity(rp.sk.problem.blocks()[static_cast<std::size_t>(b)].signature) / d);
  }
  rp.sk.problem.set_sense(Sense::maximize);
  return rp;
}

/// Chain Theta^(n), ..., Theta^(1) induced by a parent sum 1 (x) Theta^(n).
std::vector<HermitianOperator> induced_chain(const HermitianOperator& parent_sum) {
  const auto& sig = parent_sum.signature();
  const int n = static_cast<int>(sig.size() / 2);
  std::vector<HermitianOperator> out;
  const int last[] = {2 * n - 1};
  out.push_back(partial_trace(parent_sum, last) / sig.dim_of(2 * n - 1));
  for (int k = n; k >= 2; --k) {
    const int tr[] = {2 * k - 3, 2 * k - 2};
    out.push_back(partial_trace(out.back(), tr) / sig.dim_of(2 * k - 3));
  }
  return out;
}

bool testers_coincide(const TesterCollection& c) {
  for (std::size_t alpha = 1; alpha < c.size(); ++alpha) {
    for (std::size_t a = 0; a < c.outcomes(); ++a) {
      if (c.effect(a, alpha).frobenius_distance(c.effect(a, 0)) > 1e-7) return false;
    }
  }
  return true;
}

}  // namespace

CompatibilityResult is_compatible_collection(const TesterCollection& collection, const IncompatOptions& options) {
  CompatibilityResult out;
  out.chain_disagreement = chain_disagreement(collection);
  if (out.chain_disagreement > 1e-7) {
    out.verdict = CompatibilityVerdict::incompatible;
    out.stage = "normalization";
    return out;
  }
  out.stage = "feasibility";
  const auto vectors = deterministic_vectors(collection.size(), collection.outcomes(), options.cap);
  const Signature sig = collection.signature().with_role(Role::generic);
  SdpProblem p;
  std::vector<int> g;
  for (std::size_t i = 0; i < vectors.size(); ++i) g.push_back(p.add_block("G" + std::to_string(i), sig));
  std::vector<LinearTerm> all;
  for (int b : g) all.push_back({b, 1.0, {}});
  p.add_equality("parent sum", all, embed_identity(collection.testers.front().top_normalization(), sig));
  for (std::size_t alpha = 0; alpha < collection.size(); ++alpha) {
    for (std::size_t a = 0; a < collection.outcomes(); ++a) {
      std::vector<LinearTerm> terms;
      for (std::size_t i : vectors_with(vectors, alpha, a)) terms.push_back({g[i], 1.0, {}});
      p.add_equality("marginal[" + std::to_string(a) + "|" + std::to_string(alpha) + "]", std::move(terms),
                     collection.effect(a, alpha).with_signature(sig));
    }
  }
  out.feasibility = check_feasibility(p, options.solver);
  switch (out.feasibility.verdict) {
    case Feasibility::feasible: out.verdict = CompatibilityVerdict::compatible; break;
    case Feasibility::infeasible: out.verdict = CompatibilityVerdict::incompatible; break;
    case Feasibility::undecided: out.verdict = CompatibilityVerdict::undecided; break;
  }
  if (out.verdict == CompatibilityVerdict::compatible) {
    out.postprocessing = vectors;
    std::vector<HermitianOperator> effects;
    for (const auto& w : out.feasibility.witness) effects.push_back(w.with_signature(collection.signature()));
    Tolerances tol;
    tol.psd = 1e-7;
    tol.chain = 1e-6;
    try {
      out.parent = validate_tester(effects, collection.slots(), tol);
      out.parent_validated = true;
    } catch (const Error&) {
      out.parent = QuantumTester{effects, collection.slots(), collection.testers.front().normalization_chain};
    }
  }
  return out;
}

RobustnessCertificate robustness(const TesterCollection& collection, const IncompatOptions& options) {
  auto rp = robustness_problem(collection, options.cap);
  const auto& p = rp.sk.problem;
  const auto sol = solve_sdp(p, options.solver);

  RobustnessCertificate cert;
  cert.vectors = rp.vectors;
  cert.health = health_of(sol);
  cert.slots = static_cast<std::size_t>(collection.slots());
  cert.total_dimension = collection.total_dimension();
  if (sol.block_values.empty()) {
    cert.diagnostics = "solver returned no iterate: " + sol.message;
    return cert;
  }
  for (int b : rp.sk.parent_blocks) cert.parent_blocks.push_back(sol.block_values[static_cast<std::size_t>(b)]);
  for (auto it = rp.sk.chain_blocks.rbegin(); it != rp.sk.chain_blocks.rend(); ++it) {
    cert.chain_blocks.push_back(sol.block_values[static_cast<std::size_t>(*it)]);
  }
  cert.scale = sol.primal_value;
  if (cert.scale - 1.0 < -1e-8) cert.diagnostics += "optimal scale below 1 by " + std::to_string(1.0 - cert.scale) + "; ";
  cert.value = std::max(0.0, cert.scale - 1.0);

  const std::size_t o = collection.outcomes();
  cert.dual_effects.assign(collection.size(), {});
  cert.dual_objective = 0.0;
  for (std::size_t alpha = 0; alpha < collection.size(); ++alpha) {
    for (std::size_t a = 0; a < o; ++a) {
      const auto& w = sol.lmi_duals[alpha * o + a];
      cert.dual_effects[alpha].push_back(w);
      cert.dual_objective += inner(w, collection.effect(a, alpha));
    }
  }
  cert.dual_bound = sol.equality_duals[static_cast<std::size_t>(rp.sk.sum_equality)] * -1.0;
  cert.dual_constraint_margin = std::numeric_limits<double>::infinity();
  for (const auto& v : rp.vectors) {
    HermitianOperator s = cert.dual_bound;
    for (std::size_t alpha = 0; alpha < collection.size(); ++alpha) {
      s -= cert.dual_effects[alpha][static_cast<std::size_t>(v[alpha])];
    }
    cert.dual_constraint_margin = std::min(cert.dual_constraint_margin, min_eigenvalue(s));
  }
  cert.dual_bound_pairing = max_normalization_pairing(cert.dual_bound, collection.signature(), options.solver);

  if (cert.solved() && cert.value > 1e-6) {
    try {
      cert.noise_testers = reconstruct_noise_testers(collection, cert);
      cert.noise_testers_valid = true;
      cert.noise_testers_coincide = testers_coincide(*cert.noise_testers);
    } catch (const Error& e) {
      cert.diagnostics += std::string("noise testers failed validation: ") + e.what() + "; ";
    }
  }
  return cert;
}

TesterCollection reconstruct_noise_testers(const TesterCollection& collection, const RobustnessCertificate& cert) {
  if (!(cert.value > 1e-6)) {
    throw Error(ErrorKind::degenerate_robustness, "robustness " + std::to_string(cert.value) + " is too small to reconstruct noise");
  }
  const double r = cert.value;
  Tolerances tol;
  tol.psd = 1e-7;
  tol.chain = std::max(1e-6, 10.0 * cert.health.primal_residual / r);
  std::vector<QuantumTester> noise;
  for (std::size_t alpha = 0; alpha < collection.size(); ++alpha) {
    std::vector<HermitianOperator> eff;
    for (std::size_t a = 0; a < collection.outcomes(); ++a) {
      HermitianOperator mixed = HermitianOperator::zero(collection.signature());
      for (std::size_t i = 0; i < cert.vectors.size(); ++i) {
        if (cert.vectors[i][alpha] == static_cast<int>(a)) mixed += cert.parent_blocks[i].with_signature(collection.signature());
      }
      eff.push_back((mixed - collection.effect(a, alpha)) / r);
    }
    noise.push_back(validate_tester(eff, collection.slots(), tol));
  }
  return TesterCollection{std::move(noise)};
}

WeightCertificate convex_weight(const TesterCollection& collection, const IncompatOptions& options) {
  auto wp = weight_problem(collection, options.cap);
  const auto& p = wp.sk.problem;
  const auto sol = solve_sdp(p, options.solver);

  WeightCertificate cert;
  cert.vectors = wp.vectors;
  cert.health = health_of(sol);
  cert.total_dimension = collection.total_dimension();
  if (sol.block_values.empty()) {
    cert.diagnostics = "solver returned no iterate: " + sol.message;
    return cert;
  }
  for (int b : wp.sk.parent_blocks) cert.generators.push_back(sol.block_values[static_cast<std::size_t>(b)]);
  for (auto it = wp.sk.chain_blocks.rbegin(); it != wp.sk.chain_blocks.rend(); ++it) {
    cert.chain_blocks.push_back(sol.block_values[static_cast<std::size_t>(*it)]);
  }
  cert.free_fraction = sol.primal_value;
  if (cert.free_fraction > 1.0 + 1e-8) cert.diagnostics += "free fraction exceeds 1; ";
  cert.value = std::clamp(1.0 - cert.free_fraction, 0.0, 1.0);

  const std::size_t o = collection.outcomes();
  cert.free_part.assign(collection.size(), {});
  cert.witness.assign(collection.size(), {});
  cert.min_remainder_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t alpha = 0; alpha < collection.size(); ++alpha) {
    for (std::size_t a = 0; a < o; ++a) {
      HermitianOperator q = HermitianOperator::zero(collection.signature());
      for (std::size_t i : vectors_with(wp.vectors, alpha, a)) q += cert.generators[i].with_signature(collection.signature());
      cert.min_remainder_eigenvalue = std::min(cert.min_remainder_eigenvalue, min_eigenvalue(collection.effect(a, alpha) - q));
      cert.free_part[alpha].push_back(std::move(q));
      const auto& y = sol.lmi_duals[alpha * o + a];
      cert.witness[alpha].push_back(y);
      cert.witness_objective += inner(y, collection.effect(a, alpha));
    }
  }
  return cert;
}

SlaterReport robustness_slater(const TesterCollection& c, std::size_t cap) {
  const auto rp = robustness_problem(c, cap);
  const auto& p = rp.sk.problem;
  const auto& sig = p.blocks().front().signature;
  const int n = static_cast<int>(sig.size() / 2);
  const double m = static_cast<double>(c.size());
  const double o = static_cast<double>(c.outcomes());
  const double nv = static_cast<double>(rp.vectors.size());

  SlaterReport rep;
  rep.family = "robustness";
  // primal: Q_v = c I large enough to dominate every effect
  double top = 0.0;
  for (std::size_t alpha = 0; alpha < c.size(); ++alpha)
    for (std::size_t a = 0; a < c.outcomes(); ++a) top = std::max(top, max_eigenvalue(c.effect(a, alpha)));
  const double q = (2.0 * top + 1.0) * o / nv;
  std::vector<HermitianOperator> blocks;
  for (std::size_t i = 0; i < rp.vectors.size(); ++i) blocks.push_back(HermitianOperator::identity(sig) * q);
  HermitianOperator total = HermitianOperator::identity(sig) * (q * nv);
  auto chain = induced_chain(total);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) blocks.push_back(*it);
  const auto pc = check_primal_point(p, blocks);
  rep.primal_margin = pc.min_eigenvalue;
  rep.primal_residual = pc.residual;
  rep.primal_strict = pc.min_eigenvalue > 0.0 && pc.residual < 1e-9;

  // dual: omega = gamma 1 with gamma < 1/(mD)
  const double d = c.total_dimension();
  const double gamma = 0.25 / (m * d);
  const double x = 0.5 / d;
  const double r = std::pow(2.0, 1.0 / n);
  std::vector<HermitianOperator> eq(p.equalities().size());
  eq[static_cast<std::size_t>(rp.sk.sum_equality)] = HermitianOperator::identity(sig) * -x;
  double y = x * sig.dim_of(2 * n - 1) * r;
  for (int k = n; k >= 2; --k) {
    // equality index k-1 holds chain k
    eq[static_cast<std::size_t>(k - 1)] = HermitianOperator::identity(sig.prefix(static_cast<std::size_t>(2 * k - 2))) * -y;
    y *= sig.dim_of(2 * k - 3) * r;
  }
  std::vector<HermitianOperator> lm;
  for (const auto& l : p.lmis()) lm.push_back(HermitianOperator::identity(l.rhs.signature()) * gamma);
  const auto dc = check_dual_point(p, eq, lm);
  rep.dual_margin = dc.min_eigenvalue;
  rep.dual_strict = dc.min_eigenvalue > 0.0;
  return rep;
}

SlaterReport weight_slater(const TesterCollection& c, std::size_t cap) {
  const auto wp = weight_problem(c, cap);
  const auto& p = wp.sk.problem;
  const auto& sig = p.blocks().front().signature;
  const int n = static_cast<int>(sig.size() / 2);
  const double m = static_cast<double>(c.size());
  const double o = static_cast<double>(c.outcomes());
  const double nv = static_cast<double>(wp.vectors.size());

  SlaterReport rep;
  rep.family = "convex weight";
  // primal: G_v = c I below every effect; strict only when every effect is full rank
  double bottom = std::numeric_limits<double>::infinity();
  for (std::size_t alpha = 0; alpha < c.size(); ++alpha)
    for (std::size_t a = 0; a < c.outcomes(); ++a) bottom = std::min(bottom, min_eigenvalue(c.effect(a, alpha)));
  const double g = std::max(bottom, 1e-12) * 0.5 * o / nv;
  std::vector<HermitianOperator> blocks;
  for (std::size_t i = 0; i < wp.vectors.size(); ++i) blocks.push_back(HermitianOperator::identity(sig) * g);
  auto chain = induced_chain(HermitianOperator::identity(sig) * (g * nv));
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) blocks.push_back(*it);
  const auto pc = check_primal_point(p, blocks);
  rep.primal_margin = pc.min_eigenvalue;
  rep.primal_residual = pc.residual;
  rep.primal_strict = pc.min_eigenvalue > 0.0 && pc.residual < 1e-9;

  // dual: Y = gamma 1 with gamma > 1/(mD)
  const double d = c.total_dimension();
  const double eps = 1.0;
  const double gamma = 2.0 * (1.0 / d + eps) / m;
  std::vector<HermitianOperator> eq(p.equalities().size());
  eq[static_cast<std::size_t>(wp.sk.sum_equality)] = HermitianOperator::identity(sig) * -eps;
  double y = 0.5 * eps * sig.dim_of(2 * n - 1);
  for (int k = n; k >= 2; --k) {
    eq[static_cast<std::size_t>(k - 1)] = HermitianOperator::identity(sig.prefix(static_cast<std::size_t>(2 * k - 2))) * -y;
    y *= 0.5 * sig.dim_of(2 * k - 3);
  }
  std::vector<HermitianOperator> lm;
  for (const auto& l : p.lmis()) lm.push_back(HermitianOperator::identity(l.rhs.signature()) * gamma);
  const auto dc = check_dual_point(p, eq, lm);
  rep.dual_margin = dc.min_eigenvalue;
  rep.dual_strict = dc.min_eigenvalue > 0.0;
  return rep;
}

}  // namespace combforge
