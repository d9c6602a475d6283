#include "combforge/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace combforge {

// ---------------------------------------------------------------- model

int SdpProblem::add_block(std::string name, Signature signature) {
  for (const auto& b : blocks_) {
    if (b.name == name) throw Error(ErrorKind::invalid_input, "duplicate block name " + name);
  }
  blocks_.push_back({std::move(name), signature.with_role(Role::generic)});
  return static_cast<int>(blocks_.size()) - 1;
}

int SdpProblem::block_index(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return static_cast<int>(i);
  }
  throw Error(ErrorKind::invalid_input, "no block named " + name);
}

Signature SdpProblem::reduced_signature(const LinearTerm& term) const {
  return blocks_.at(static_cast<std::size_t>(term.block)).signature.without(term.traced);
}

void SdpProblem::check_terms(const std::vector<LinearTerm>& terms, const Signature& target) const {
  if (terms.empty()) throw Error(ErrorKind::invalid_input, "constraint without terms");
  for (const auto& t : terms) {
    if (t.block < 0 || static_cast<std::size_t>(t.block) >= blocks_.size()) {
      throw Error(ErrorKind::invalid_input, "term references unknown block");
    }
    const auto& bsig = blocks_[static_cast<std::size_t>(t.block)].signature;
    for (int idx : t.traced) (void)bsig.position(idx);
    const Signature reduced = reduced_signature(t);
    for (const auto& s : reduced.systems()) {
      if (!target.contains(s.index) || target.dim_of(s.index) != s.dim) {
        throw Error(ErrorKind::signature_mismatch, "term of block " + blocks_[static_cast<std::size_t>(t.block)].name +
                                                       " does not fit the constraint signature");
      }
    }
  }
}

int SdpProblem::add_equality(std::string name, std::vector<LinearTerm> terms, HermitianOperator rhs) {
  const Signature target = rhs.signature().with_role(Role::generic);
  check_terms(terms, target);
  equalities_.push_back({std::move(name), std::move(terms), rhs.with_signature(target)});
  return static_cast<int>(equalities_.size()) - 1;
}

int SdpProblem::add_lmi(std::string name, std::vector<LinearTerm> terms, HermitianOperator rhs) {
  const Signature target = rhs.signature().with_role(Role::generic);
  check_terms(terms, target);
  lmis_.push_back({std::move(name), std::move(terms), rhs.with_signature(target)});
  return static_cast<int>(lmis_.size()) - 1;
}

void SdpProblem::add_objective(int block, HermitianOperator weight) {
  if (block < 0 || static_cast<std::size_t>(block) >= blocks_.size()) {
    throw Error(ErrorKind::invalid_input, "objective references unknown block");
  }
  if (!(weight.signature() == blocks_[static_cast<std::size_t>(block)].signature)) {
    throw Error(ErrorKind::signature_mismatch, "objective weight must live on the block signature");
  }
  objective_.push_back({block, weight.with_signature(blocks_[static_cast<std::size_t>(block)].signature)});
}

HermitianOperator SdpProblem::apply_term(const LinearTerm& term, const HermitianOperator& x,
                                         const Signature& target) const {
  return embed_identity(partial_trace(x, term.traced), target) * term.weight;
}

HermitianOperator SdpProblem::adjoint_term(const LinearTerm& term, const HermitianOperator& g) const {
  const auto& bsig = blocks_[static_cast<std::size_t>(term.block)].signature;
  const auto reduced = reduced_signature(term);
  std::vector<int> extra;
  for (const auto& s : g.signature().systems()) {
    if (!reduced.contains(s.index)) extra.push_back(s.index);
  }
  return embed_identity(partial_trace(g, extra), bsig) * term.weight;
}

double SdpSolution::max_complementary_slackness() const {
  double m = 0.0;
  for (double c : complementary_slackness) m = std::max(m, c);
  return m;
}

IpmResult InteriorPointBackend::solve(const RealSdp& problem, const IpmOptions& options) const {
  return solve_real_sdp(problem, options);
}

// ---------------------------------------------------------------- compile

namespace {

struct HermConstraint {
  const std::vector<LinearTerm>* terms;
  const HermitianOperator* rhs;
  int slack_block;  // -1 for equalities
};

Eigen::MatrixXd real_embed(const Matrix& h) {
  const auto d = h.rows();
  Eigen::MatrixXd r(2 * d, 2 * d);
  r.topLeftCorner(d, d) = h.real();
  r.topRightCorner(d, d) = -h.imag();
  r.bottomLeftCorner(d, d) = h.imag();
  r.bottomRightCorner(d, d) = h.real();
  return r;
}

Matrix from_real_primal(const Eigen::MatrixXd& z) {
  const auto d = z.rows() / 2;
  Matrix x(d, d);
  x.real() = (z.topLeftCorner(d, d) + z.bottomRightCorner(d, d)) / 2.0;
  x.imag() = (z.bottomLeftCorner(d, d) - z.topRightCorner(d, d)) / 2.0;
  return x;
}

Matrix from_real_dual(const Eigen::MatrixXd& s) {
  const auto d = s.rows() / 2;
  Matrix x(d, d);
  x.real() = s.topLeftCorner(d, d) + s.bottomRightCorner(d, d);
  x.imag() = s.bottomLeftCorner(d, d) - s.topRightCorner(d, d);
  return x;
}

std::vector<HermConstraint> hermitian_constraints(const SdpProblem& p) {
  std::vector<HermConstraint> out;
  for (const auto& e : p.equalities()) out.push_back({&e.terms, &e.rhs, -1});
  int slack = static_cast<int>(p.blocks().size());
  for (const auto& l : p.lmis()) out.push_back({&l.terms, &l.rhs, slack++});
  return out;
}

}  // namespace

CompiledSdp compile_sdp(const SdpProblem& problem, double dependency_threshold) {
  CompiledSdp out;
  std::vector<Signature> block_sigs;
  for (const auto& b : problem.blocks()) block_sigs.push_back(b.signature);
  for (const auto& l : problem.lmis()) block_sigs.push_back(l.rhs.signature());
  for (const auto& s : block_sigs) out.real.block_sizes.push_back(2 * static_cast<int>(s.total_dim()));

  // objective
  for (const auto& s : block_sigs) {
    const auto n = static_cast<Eigen::Index>(2 * s.total_dim());
    out.real.c.push_back(Eigen::MatrixXd::Zero(n, n));
  }
  const double sign = problem.sense() == Sense::minimize ? 1.0 : -1.0;
  for (const auto& t : problem.objective()) {
    out.real.c[static_cast<std::size_t>(t.block)] += (0.5 * sign) * real_embed(t.weight.matrix());
  }

  // rows
  const auto cons = hermitian_constraints(problem);
  ConstraintRows rows;
  std::vector<double> bvals;
  std::vector<std::size_t> row_cons;
  std::vector<Matrix> row_func;
  for (std::size_t ci = 0; ci < cons.size(); ++ci) {
    const auto& c = cons[ci];
    const Signature& target = c.rhs->signature();
    const auto d = static_cast<Eigen::Index>(target.total_dim());
    std::vector<LinearTerm> terms = *c.terms;
    if (c.slack_block >= 0) terms.push_back({c.slack_block, -1.0, {}});
    auto adjoint = [&](const LinearTerm& t, const HermitianOperator& g) {
      if (t.block >= static_cast<int>(problem.blocks().size())) return g * t.weight;
      return problem.adjoint_term(t, g);
    };
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index s = r; s < d; ++s) {
        for (int part = 0; part < (r == s ? 1 : 2); ++part) {
          Matrix g = Matrix::Zero(d, d);
          double bv = 0.0;
          if (r == s) {
            g(r, r) = 1.0;
            bv = c.rhs->matrix()(r, r).real();
          } else if (part == 0) {
            g(r, s) = 0.5;
            g(s, r) = 0.5;
            bv = c.rhs->matrix()(r, s).real();
          } else {
            g(s, r) = Complex(0.0, -0.5);
            g(r, s) = Complex(0.0, 0.5);
            bv = c.rhs->matrix()(r, s).imag();
          }
          const auto gop = HermitianOperator::trusted(target, g);
          std::map<int, Matrix> acc;
          for (const auto& t : terms) {
            const auto h = adjoint(t, gop);
            auto it = acc.find(t.block);
            if (it == acc.end()) {
              acc.emplace(t.block, h.matrix());
            } else {
              it->second += h.matrix();
            }
          }
          std::vector<RowBlock> row;
          for (const auto& [blk, h] : acc) {
            if (h.cwiseAbs().maxCoeff() == 0.0) continue;
            row.push_back({blk, (0.5 * real_embed(h)).sparseView()});
          }
          rows.push_back(std::move(row));
          bvals.push_back(bv);
          row_cons.push_back(ci);
          row_func.push_back(std::move(g));
        }
      }
    }
  }
  out.total_rows = rows.size();

  // normalize rows
  std::vector<double> scale(rows.size(), 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double nrm = 0.0;
    for (const auto& e : rows[i]) nrm += e.matrix.squaredNorm();
    nrm = std::sqrt(nrm);
    if (nrm > 0.0) {
      scale[i] = nrm;
      for (auto& e : rows[i]) e.matrix /= nrm;
      bvals[i] /= nrm;
    }
  }

  // drop linearly dependent rows
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (int n : out.real.block_sizes) {
    offsets.push_back(total);
    total += static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  }
  std::vector<std::size_t> keep;
  if (!rows.empty()) {
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (const auto& e : rows[i]) {
        const auto off = static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(e.block)]);
        const Eigen::Index n = e.matrix.rows();
        for (Eigen::Index k = 0; k < e.matrix.outerSize(); ++k)
          for (SparseBlock::InnerIterator it(e.matrix, k); it; ++it)
            entries.emplace_back(off + it.col() * n + it.row(), static_cast<Eigen::Index>(i), it.value());
      }
    }
    SparseBlock at(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(rows.size()));
    at.setFromTriplets(entries.begin(), entries.end());
    at.makeCompressed();
    // diagonally pivoted LDL^T of the row Gram matrix reveals the rank
    const Eigen::MatrixXd gram = Eigen::MatrixXd(SparseBlock(at.transpose() * at));
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    Eigen::VectorXi order = Eigen::VectorXi::LinSpaced(gram.rows(), 0, static_cast<int>(gram.rows()) - 1);
    const auto& tr = ldlt.transpositionsP();
    for (Eigen::Index k = 0; k < tr.size(); ++k) std::swap(order(k), order(tr.coeff(k)));
    const Eigen::VectorXd piv = ldlt.vectorD();
    const double top = std::max(1.0, piv.maxCoeff());
    for (Eigen::Index k = 0; k < piv.size(); ++k) {
      if (piv(k) > dependency_threshold * top) keep.push_back(static_cast<std::size_t>(order(k)));
    }
    std::sort(keep.begin(), keep.end());
  }
  out.real.b.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = keep[k];
    out.real.rows.push_back(std::move(rows[i]));
    out.real.b(static_cast<Eigen::Index>(k)) = bvals[i];
    out.row_constraint.push_back(row_cons[i]);
    out.row_functional.push_back(std::move(row_func[i]));
    out.row_scale.push_back(scale[i]);
  }
  return out;
}

// ---------------------------------------------------------------- solve

SdpSolution solve_sdp(const SdpProblem& problem, const SolverOptions& options) {
  const CompiledSdp compiled = compile_sdp(problem, options.dependency_threshold);
  static const InteriorPointBackend default_backend;
  const SdpBackend& backend = options.backend ? *options.backend : default_backend;
  const IpmResult r = backend.solve(compiled.real, options.ipm);

  SdpSolution sol;
  sol.status = r.status;
  sol.iterations = r.iterations;
  sol.message = r.message;
  sol.dropped_rows = compiled.total_rows - compiled.real.rows.size();
  if (r.x.empty()) return sol;

  const std::size_t nu = problem.blocks().size();
  const double sign = problem.sense() == Sense::minimize ? 1.0 : -1.0;

  for (std::size_t j = 0; j < nu; ++j) {
    const auto& sig = problem.blocks()[j].signature;
    sol.block_values.push_back(HermitianOperator::trusted(sig, from_real_primal(r.x[j])));
    sol.block_duals.push_back(HermitianOperator::trusted(sig, from_real_dual(r.s[j])));
  }
  sol.min_block_eigenvalue = 0.0;
  for (std::size_t j = 0; j < nu; ++j) {
    const double e = min_eigenvalue(sol.block_values[j]);
    sol.min_block_eigenvalue = j == 0 ? e : std::min(sol.min_block_eigenvalue, e);
  }

  // Hermitian multipliers per constraint, in the problem's own sign convention
  const auto cons = hermitian_constraints(problem);
  std::vector<Matrix> mult;
  for (const auto& c : cons) {
    const auto d = static_cast<Eigen::Index>(c.rhs->signature().total_dim());
    mult.push_back(Matrix::Zero(d, d));
  }
  for (std::size_t k = 0; k < compiled.real.rows.size(); ++k) {
    const double yk = r.y(static_cast<Eigen::Index>(k)) / compiled.row_scale[k];
    mult[compiled.row_constraint[k]] += (sign * yk) * compiled.row_functional[k];
  }
  const std::size_t neq = problem.equalities().size();
  for (std::size_t c = 0; c < cons.size(); ++c) {
    const auto op = HermitianOperator::trusted(cons[c].rhs->signature(), mult[c]);
    if (c < neq) {
      sol.equality_duals.push_back(op);
    }
  }
  for (std::size_t l = 0; l < problem.lmis().size(); ++l) {
    const auto& sig = problem.lmis()[l].rhs.signature();
    sol.lmi_duals.push_back(HermitianOperator::trusted(sig, from_real_dual(r.s[nu + l])));
  }

  // values
  double pv = 0.0;
  for (const auto& t : problem.objective()) pv += inner(t.weight, sol.block_values[static_cast<std::size_t>(t.block)]);
  sol.primal_value = pv;
  sol.dual_value = sign * r.dual_objective;
  sol.gap = std::abs(sol.primal_value - sol.dual_value) / (1.0 + std::abs(sol.primal_value));

  // primal residuals and LMI slacks
  auto lhs = [&](const std::vector<LinearTerm>& terms, const Signature& target) {
    HermitianOperator acc = HermitianOperator::zero(target);
    for (const auto& t : terms) acc += problem.apply_term(t, sol.block_values[static_cast<std::size_t>(t.block)], target);
    return acc;
  };
  double pres = 0.0;
  for (const auto& e : problem.equalities()) {
    pres = std::max(pres, lhs(e.terms, e.rhs.signature()).frobenius_distance(e.rhs));
  }
  for (std::size_t l = 0; l < problem.lmis().size(); ++l) {
    const auto& c = problem.lmis()[l];
    auto slack = lhs(c.terms, c.rhs.signature()) - c.rhs;
    const auto svar = HermitianOperator::trusted(c.rhs.signature(), from_real_primal(r.x[nu + l]));
    pres = std::max(pres, slack.frobenius_distance(svar));
    sol.complementary_slackness.push_back(std::abs(inner(slack, sol.lmi_duals[l])));
    sol.lmi_slacks.push_back(std::move(slack));
  }
  sol.primal_residual = pres;

  // dual residuals: S_j = sign * (A_j - sum L^dagger(Lambda)) with Lambda in solver sign
  std::vector<HermitianOperator> expected;
  for (std::size_t j = 0; j < nu; ++j) expected.push_back(HermitianOperator::zero(problem.blocks()[j].signature));
  for (const auto& t : problem.objective()) expected[static_cast<std::size_t>(t.block)] += sign * t.weight;
  for (std::size_t c = 0; c < cons.size(); ++c) {
    const auto op = HermitianOperator::trusted(cons[c].rhs->signature(), mult[c]);
    for (const auto& t : *cons[c].terms) expected[static_cast<std::size_t>(t.block)] -= sign * problem.adjoint_term(t, op);
  }
  double dres = 0.0;
  for (std::size_t j = 0; j < nu; ++j) {
    dres = std::max(dres, expected[j].frobenius_distance(sol.block_duals[j]));
  }
  for (std::size_t l = 0; l < problem.lmis().size(); ++l) {
    // slack block: S = sign * Lambda (solver sign), i.e. the multiplier itself
    const auto op = HermitianOperator::trusted(problem.lmis()[l].rhs.signature(), mult[neq + l]);
    dres = std::max(dres, (op * sign).frobenius_distance(sol.lmi_duals[l]));
  }
  sol.dual_residual = dres;
  return sol;
}

// ---------------------------------------------------------------- feasibility

const char* to_string(Feasibility f) {
  switch (f) {
    case Feasibility::feasible: return "feasible";
    case Feasibility::infeasible: return "infeasible";
    case Feasibility::undecided: return "undecided";
  }
  return "unknown";
}

FeasibilityResult check_feasibility(const SdpProblem& problem, const SolverOptions& options) {
  SdpProblem elastic;
  for (const auto& b : problem.blocks()) elastic.add_block(b.name, b.signature);
  double scale = 1.0;
  for (std::size_t e = 0; e < problem.equalities().size(); ++e) {
    const auto& c = problem.equalities()[e];
    const auto& sig = c.rhs.signature();
    const int plus = elastic.add_block("elastic+" + std::to_string(e), sig);
    const int minus = elastic.add_block("elastic-" + std::to_string(e), sig);
    auto terms = c.terms;
    terms.push_back({plus, 1.0, {}});
    terms.push_back({minus, -1.0, {}});
    elastic.add_equality(c.name, std::move(terms), c.rhs);
    elastic.add_objective(plus, HermitianOperator::identity(sig));
    elastic.add_objective(minus, HermitianOperator::identity(sig));
    scale = std::max(scale, c.rhs.frobenius_norm());
  }
  for (std::size_t l = 0; l < problem.lmis().size(); ++l) {
    const auto& c = problem.lmis()[l];
    const auto& sig = c.rhs.signature();
    const int e = elastic.add_block("elastic-lmi" + std::to_string(l), sig);
    auto terms = c.terms;
    terms.push_back({e, 1.0, {}});
    elastic.add_lmi(c.name, std::move(terms), c.rhs);
    elastic.add_objective(e, HermitianOperator::identity(sig));
    scale = std::max(scale, c.rhs.frobenius_norm());
  }
  elastic.set_sense(Sense::minimize);

  const auto sol = solve_sdp(elastic, options);
  FeasibilityResult out;
  out.solver_status = sol.status;
  out.gap = sol.gap;
  out.threshold_feasible = 1e-7 * scale;
  out.threshold_infeasible = 1e-6 * scale;
  if (sol.block_values.empty()) return out;

  out.violation = std::max(0.0, sol.primal_value);
  const std::size_t nu = problem.blocks().size();
  out.witness.assign(sol.block_values.begin(), sol.block_values.begin() + static_cast<std::ptrdiff_t>(nu));
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& w : out.witness) margin = std::min(margin, min_eigenvalue(w));
  for (const auto& s : sol.lmi_slacks) margin = std::min(margin, min_eigenvalue(s));
  out.interior_margin = margin;
  out.strictly_interior = margin > 1e-7;
  out.equality_certificate = sol.equality_duals;
  out.lmi_certificate = sol.lmi_duals;

  if (sol.status != SolveStatus::optimal) {
    out.verdict = Feasibility::undecided;
  } else if (out.violation <= out.threshold_feasible) {
    out.verdict = Feasibility::feasible;
  } else if (out.violation >= out.threshold_infeasible) {
    out.verdict = Feasibility::infeasible;
  } else {
    out.verdict = Feasibility::undecided;
  }
  return out;
}

// ---------------------------------------------------------------- point checks

PointCheck check_primal_point(const SdpProblem& problem, const std::vector<HermitianOperator>& blocks) {
  PointCheck out;
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(b));
  auto lhs = [&](const std::vector<LinearTerm>& terms, const Signature& target) {
    HermitianOperator acc = HermitianOperator::zero(target);
    for (const auto& t : terms) acc += problem.apply_term(t, blocks[static_cast<std::size_t>(t.block)], target);
    return acc;
  };
  for (const auto& e : problem.equalities()) {
    out.residual = std::max(out.residual, lhs(e.terms, e.rhs.signature()).frobenius_distance(e.rhs));
  }
  for (const auto& l : problem.lmis()) {
    out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(lhs(l.terms, l.rhs.signature()) - l.rhs));
  }
  return out;
}

PointCheck check_dual_point(const SdpProblem& problem, const std::vector<HermitianOperator>& equality_multipliers,
                            const std::vector<HermitianOperator>& lmi_multipliers) {
  const double sign = problem.sense() == Sense::minimize ? 1.0 : -1.0;
  std::vector<HermitianOperator> slack;
  for (const auto& b : problem.blocks()) slack.push_back(HermitianOperator::zero(b.signature));
  for (const auto& t : problem.objective()) slack[static_cast<std::size_t>(t.block)] += sign * t.weight;
  for (std::size_t e = 0; e < problem.equalities().size(); ++e) {
    for (const auto& t : problem.equalities()[e].terms) {
      slack[static_cast<std::size_t>(t.block)] -= sign * problem.adjoint_term(t, equality_multipliers[e]);
    }
  }
  PointCheck out;
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < problem.lmis().size(); ++l) {
    for (const auto& t : problem.lmis()[l].terms) {
      slack[static_cast<std::size_t>(t.block)] -= problem.adjoint_term(t, lmi_multipliers[l]);
    }
    out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(lmi_multipliers[l]));
  }
  for (const auto& s : slack) out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(s));
  return out;
}

}  // namespace combforge
