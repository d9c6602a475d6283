#include "combforge/games.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "combforge/kernels.hpp"

namespace combforge {

Signature comb_signature_for(const Signature& tester_signature) {
  return Signature(tester_signature.systems(), Role::comb);
}

namespace {

void check_pairing(const EnsembleCollection& games, const Signature& tester_signature) {
  if (!(games.signature() == tester_signature)) {
    throw Error(ErrorKind::signature_mismatch, "ensemble combs do not pair with the testers");
  }
}

std::vector<HermitianOperator> weighted_combs(const EnsembleCollection& games) {
  std::vector<HermitianOperator> out;
  for (std::size_t beta = 0; beta < games.size(); ++beta) {
    for (std::size_t b = 0; b < games.combs_per_ensemble(); ++b) {
      out.push_back(games.ensembles[beta].combs[b].choi * games.joint_weight(b, beta));
    }
  }
  return out;
}

/// Optimizes over one tester whose outcomes are guess vectors (one guess per ensemble).
double best_vector_tester(const EnsembleCollection& games, std::size_t cap, Sense sense, const SolverOptions& solver) {
  const auto& sig = games.signature();
  const auto vectors = deterministic_vectors(games.size(), games.combs_per_ensemble(), cap);
  auto sk = parent_skeleton(sig, vectors.size());
  sk.problem.add_equality("normalization", {{sk.chain_blocks.front(), 1.0, {0}}}, HermitianOperator::scalar(1.0));
  const Signature generic = sig.with_role(Role::generic);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    HermitianOperator w = HermitianOperator::zero(generic);
    for (std::size_t beta = 0; beta < games.size(); ++beta) {
      const auto b = static_cast<std::size_t>(vectors[i][beta]);
      w += games.ensembles[beta].combs[b].choi.with_signature(generic) * games.joint_weight(b, beta);
    }
    sk.problem.add_objective(sk.parent_blocks[i], std::move(w));
  }
  sk.problem.set_sense(sense);
  const auto sol = solve_sdp(sk.problem, solver);
  if (sol.status != SolveStatus::optimal) {
    throw Error(ErrorKind::numerical_failure, std::string("game SDP: ") + to_string(sol.status) + " (" + sol.message + ")");
  }
  return sol.primal_value;
}

HermitianOperator placeholder_comb(const Signature& comb_sig) {
  return HermitianOperator::identity(comb_sig) / static_cast<double>(comb_sig.output_dim());
}

WitnessEnsemble witness_from_duals(const std::vector<std::vector<HermitianOperator>>& duals, const Signature& tsig) {
  const Signature csig = comb_signature_for(tsig);
  const int slots = static_cast<int>(csig.size() / 2) - 1;
  const double din = static_cast<double>(csig.input_dim());

  std::vector<std::vector<double>> traces(duals.size());
  double total = 0.0;
  for (std::size_t alpha = 0; alpha < duals.size(); ++alpha) {
    for (const auto& w : duals[alpha]) {
      traces[alpha].push_back(std::max(0.0, w.trace()));
      total += traces[alpha].back();
    }
  }
  if (!(total > 1e-12)) throw Error(ErrorKind::zero_dual, "dual multipliers have vanishing total trace");

  WitnessEnsemble out;
  out.dual_trace = total;
  out.witness_valid = true;
  Tolerances tol;
  tol.psd = 1e-7;
  tol.chain = 1e-6;
  std::vector<CombEnsemble> ensembles;
  std::vector<double> beta_weights;
  for (std::size_t alpha = 0; alpha < duals.size(); ++alpha) {
    double wb = 0.0;
    for (double t : traces[alpha]) wb += t;
    std::vector<QuantumComb> combs;
    std::vector<double> weights;
    std::vector<WitnessCheck> checks;
    for (std::size_t a = 0; a < duals[alpha].size(); ++a) {
      const double t = traces[alpha][a];
      WitnessCheck chk;
      HermitianOperator c;
      if (t <= 1e-14 * total) {
        c = placeholder_comb(csig);
        chk.placeholder = true;
      } else {
        c = (duals[alpha][a] * (din / t)).with_signature(csig);
      }
      const auto res = comb_residuals(c, slots);
      chk.min_eigenvalue = res.min_eigenvalue;
      for (double l : res.levels) chk.max_chain_residual = std::max(chk.max_chain_residual, l);
      try {
        combs.push_back(validate_comb(c, slots, tol));
        chk.valid = true;
      } catch (const Error&) {
        combs.push_back(unchecked_comb(c, slots));
        chk.valid = false;
        if (!chk.placeholder) out.witness_valid = false;
      }
      checks.push_back(chk);
      weights.push_back(wb > 0.0 ? t / wb : 1.0 / static_cast<double>(duals[alpha].size()));
    }
    double s = 0.0;
    for (double w : weights) s += w;
    for (double& w : weights) w /= s;
    ensembles.push_back(make_ensemble(std::move(combs), std::move(weights)));
    out.checks.push_back(std::move(checks));
    beta_weights.push_back(wb / total);
  }
  double s = 0.0;
  for (double w : beta_weights) s += w;
  for (double& w : beta_weights) w /= s;
  out.games = make_ensemble_collection(std::move(ensembles), std::move(beta_weights));
  return out;
}

std::uint64_t derived_seed(std::uint64_t seed, std::size_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(k) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <class Eval>
void run_bound_checks(GameReport& report, const TesterCollection& testers, const GameOptions& options, Eval eval) {
  const Signature csig = comb_signature_for(testers.signature());
  const std::size_t count = options.random_ensembles;
  report.bounds.assign(count, {});
  std::vector<std::string> errors(count);
  const long total = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic) num_threads(options.parallel ? thread_budget() : 1)
  for (long k = 0; k < total; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    try {
      BoundCheck& bc = report.bounds[idx];
      bc.index = idx;
      bc.seed = derived_seed(options.seed, idx);
      const auto games = random_ensemble_collection(csig, testers.size(), testers.outcomes(), bc.seed);
      eval(games, bc);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (std::size_t k = 0; k < count; ++k) {
    if (!errors[k].empty()) throw Error(ErrorKind::numerical_failure, "bound check " + std::to_string(k) + ": " + errors[k]);
  }
  report.worst_bound_margin = -std::numeric_limits<double>::infinity();
  for (const auto& bc : report.bounds) {
    if (bc.violated) ++report.bound_violations;
  }
}

}  // namespace

Eigen::MatrixXd payoff_table(const EnsembleCollection& games, const TesterCollection& testers, bool parallel) {
  check_pairing(games, testers.signature());
  std::vector<HermitianOperator> effects;
  for (std::size_t alpha = 0; alpha < testers.size(); ++alpha)
    for (std::size_t a = 0; a < testers.outcomes(); ++a) effects.push_back(testers.effect(a, alpha));
  const auto combs = weighted_combs(games);
  return parallel ? overlap_table_parallel(combs, effects) : overlap_table_serial(combs, effects);
}

double qcd_value_incompatible(const EnsembleCollection& games, const TesterCollection& testers, QcdStrategy* strategy) {
  const auto t = payoff_table(games, testers);
  const std::size_t mc = games.combs_per_ensemble();
  const std::size_t o = testers.outcomes();
  QcdStrategy best;
  double value = 0.0;
  for (std::size_t beta = 0; beta < games.size(); ++beta) {
    double top = -std::numeric_limits<double>::infinity();
    int top_alpha = 0;
    std::vector<int> top_guess;
    for (std::size_t alpha = 0; alpha < testers.size(); ++alpha) {
      double sum = 0.0;
      std::vector<int> guess(o, 0);
      for (std::size_t a = 0; a < o; ++a) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < mc; ++b) {
          const double v = t(static_cast<Eigen::Index>(beta * mc + b), static_cast<Eigen::Index>(alpha * o + a));
          if (v > m) {
            m = v;
            guess[a] = static_cast<int>(b);
          }
        }
        sum += m;
      }
      if (sum > top) {
        top = sum;
        top_alpha = static_cast<int>(alpha);
        top_guess = guess;
      }
    }
    value += top;
    best.choice.push_back(top_alpha);
    best.guess.push_back(std::move(top_guess));
  }
  if (strategy) *strategy = std::move(best);
  return value;
}

double qcd_value_compatible(const EnsembleCollection& games, const GameOptions& options) {
  return best_vector_tester(games, options.cap_guesses, Sense::maximize, options.solver);
}

double exclusion_value(const EnsembleCollection& games, const TesterCollection& testers, bool relaxed) {
  if (games.combs_per_ensemble() != testers.outcomes()) {
    throw Error(ErrorKind::signature_mismatch, "exclusion needs one tester outcome per comb");
  }
  if (!relaxed && games.size() != testers.size()) {
    throw Error(ErrorKind::signature_mismatch, "exclusion needs one tester per ensemble");
  }
  const auto t = payoff_table(games, testers);
  const std::size_t o = testers.outcomes();
  double err = 0.0;
  for (std::size_t beta = 0; beta < games.size(); ++beta) {
    auto member_error = [&](std::size_t alpha) {
      double s = 0.0;
      for (std::size_t b = 0; b < o; ++b) s += t(static_cast<Eigen::Index>(beta * o + b), static_cast<Eigen::Index>(alpha * o + b));
      return s;
    };
    if (!relaxed) {
      err += member_error(beta);
    } else {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t alpha = 0; alpha < testers.size(); ++alpha) m = std::min(m, member_error(alpha));
      err += m;
    }
  }
  return err;
}

double exclusion_value_compatible(const EnsembleCollection& games, const GameOptions& options) {
  return best_vector_tester(games, options.cap_outcomes, Sense::minimize, options.solver);
}

WitnessEnsemble ensemble_from_robustness_dual(const RobustnessCertificate& cert, const Signature& tester_signature) {
  return witness_from_duals(cert.dual_effects, tester_signature);
}

WitnessEnsemble ensemble_from_weight_dual(const WeightCertificate& cert, const Signature& tester_signature) {
  return witness_from_duals(cert.witness, tester_signature);
}

GameReport verify_theorem1(const TesterCollection& testers, const GameOptions& options) {
  GameReport rep;
  rep.theorem = "discrimination";
  IncompatOptions io;
  io.cap = options.cap_outcomes;
  io.solver = options.solver;
  const auto cert = robustness(testers, io);
  rep.health = cert.health;
  rep.measure = cert.value;
  rep.predicted_ratio = 1.0 + cert.value;
  if (!cert.solved()) {
    rep.diagnostics = "robustness SDP not solved: " + cert.health.message;
    return rep;
  }
  if (cert.value > 1e-6) {
    rep.witness = ensemble_from_robustness_dual(cert, testers.signature());
    rep.witness_valid = rep.witness.witness_valid;
    rep.incompatible_value = qcd_value_incompatible(rep.witness.games, testers);
    rep.compatible_value = qcd_value_compatible(rep.witness.games, options);
    rep.ratio = rep.compatible_value > 1e-12 ? rep.incompatible_value / rep.compatible_value
                                             : std::numeric_limits<double>::quiet_NaN();
    rep.exact_checked = rep.witness_valid;
    rep.exact_ok = std::abs(rep.ratio - rep.predicted_ratio) <= options.ratio_tolerance;
    if (!rep.witness_valid) rep.diagnostics += "witness operators violate comb constraints; exact ratio not asserted; ";
  } else {
    rep.degenerate = true;
    rep.ratio = std::numeric_limits<double>::quiet_NaN();
    rep.diagnostics += "compatible collection: witness construction skipped; ";
  }
  const double bound = rep.predicted_ratio;
  run_bound_checks(rep, testers, options, [&](const EnsembleCollection& games, BoundCheck& bc) {
    bc.incompatible_value = qcd_value_incompatible(games, testers);
    bc.compatible_value = qcd_value_compatible(games, options);
    bc.ratio = bc.incompatible_value / bc.compatible_value;
    bc.violated = bc.ratio > bound + options.ratio_tolerance;
  });
  for (const auto& bc : rep.bounds) rep.worst_bound_margin = std::max(rep.worst_bound_margin, bc.ratio - bound);
  return rep;
}

GameReport verify_theorem2(const TesterCollection& testers, const GameOptions& options) {
  GameReport rep;
  rep.theorem = "exclusion";
  rep.exclusion_convention = options.relaxed_exclusion
                                 ? "relaxed: player picks the tester per ensemble (exploratory, bound not guaranteed)"
                                 : "matched: tester beta answers ensemble beta; error when outcome b names the comb sent";
  IncompatOptions io;
  io.cap = options.cap_outcomes;
  io.solver = options.solver;
  const auto cert = convex_weight(testers, io);
  rep.health = cert.health;
  rep.measure = cert.value;
  rep.predicted_ratio = 1.0 - cert.value;
  if (!cert.solved()) {
    rep.diagnostics = "convex weight SDP not solved: " + cert.health.message;
    return rep;
  }
  if (cert.value > 1e-6) {
    rep.witness = ensemble_from_weight_dual(cert, testers.signature());
    rep.witness_valid = rep.witness.witness_valid;
    rep.incompatible_value = exclusion_value(rep.witness.games, testers, options.relaxed_exclusion);
    rep.compatible_value = exclusion_value_compatible(rep.witness.games, options);
    rep.ratio = rep.compatible_value > 1e-12 ? rep.incompatible_value / rep.compatible_value
                                             : std::numeric_limits<double>::quiet_NaN();
    rep.exact_checked = rep.witness_valid;
    rep.exact_ok = std::abs(rep.ratio - rep.predicted_ratio) <= options.ratio_tolerance;
    if (!rep.witness_valid) rep.diagnostics += "witness operators violate comb constraints; exact ratio not asserted; ";
  } else {
    rep.degenerate = true;
    rep.ratio = std::numeric_limits<double>::quiet_NaN();
    rep.diagnostics += "compatible collection: witness construction skipped; ";
  }
  const double bound = rep.predicted_ratio;
  run_bound_checks(rep, testers, options, [&](const EnsembleCollection& games, BoundCheck& bc) {
    bc.incompatible_value = exclusion_value(games, testers, options.relaxed_exclusion);
    bc.compatible_value = exclusion_value_compatible(games, options);
    bc.ratio = bc.incompatible_value / bc.compatible_value;
    bc.violated = bc.ratio < bound - options.ratio_tolerance;
    bc.side_ratio = (1.0 - bc.incompatible_value) / (1.0 - bc.compatible_value);
  });
  for (const auto& bc : rep.bounds) rep.worst_bound_margin = std::max(rep.worst_bound_margin, bound - bc.ratio);
  return rep;
}

}  // namespace combforge
