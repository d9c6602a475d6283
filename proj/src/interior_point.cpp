#include "combforge/interior_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace combforge {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

using Blocks = std::vector<Eigen::MatrixXd>;

double block_inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j].cwiseProduct(b[j]).sum();
  return s;
}

double block_norm(const Blocks& a) { return std::sqrt(block_inner(a, a)); }

Blocks operator_sub(const Blocks& a, const Blocks& b) {
  Blocks r = a;
  for (std::size_t j = 0; j < a.size(); ++j) r[j] -= b[j];
  return r;
}

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

struct Scaling {
  Eigen::MatrixXd g;     // W = G G^T
  Eigen::MatrixXd ginv;  // G^{-1}
  Eigen::MatrixXd w;
  Eigen::VectorXd lambda;
};

bool nt_scaling(const Eigen::MatrixXd& x, const Eigen::MatrixXd& s, Scaling& out) {
  Eigen::LLT<Eigen::MatrixXd> cx(x);
  if (cx.info() != Eigen::Success) return false;
  const Eigen::MatrixXd l = cx.matrixL();
  Eigen::MatrixXd lsl = l.transpose() * s * l;
  symmetrize(lsl);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lsl);
  if (es.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = es.eigenvalues();
  if (d.minCoeff() <= 0.0) return false;
  const Eigen::MatrixXd& u = es.eigenvectors();
  const Eigen::VectorXd q = d.array().pow(0.25);
  out.g = l * u * q.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd linv = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(x.rows(), x.cols()));
  out.ginv = q.asDiagonal() * u.transpose() * linv;
  out.w = out.g * out.g.transpose();
  symmetrize(out.w);
  out.lambda = d.cwiseSqrt();
  return true;
}

/// Largest alpha with V + alpha * D >= 0 for V = diag(lambda).
double max_step(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& d) {
  const Eigen::VectorXd r = lambda.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd m = r.asDiagonal() * d * r.asDiagonal();
  symmetrize(m);
  const double e = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return e >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / e;
}

struct Direction {
  Blocks dx, ds;
  Eigen::VectorXd dy;
};

class SchurSolver {
 public:
  bool factor(Eigen::MatrixXd m) {
    const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) return true;
    for (double reg = 1e-14; reg <= 1e-6; reg *= 100.0) {
      Eigen::MatrixXd r = m;
      r.diagonal().array() += reg * scale;
      llt_.compute(r);
      if (llt_.info() == Eigen::Success) return true;
    }
    return false;
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace

Eigen::VectorXd apply_constraints(const RealSdp& problem, const std::vector<Eigen::MatrixXd>& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(problem.rows.size()));
  for (std::size_t i = 0; i < problem.rows.size(); ++i) {
    double v = 0.0;
    for (const auto& e : problem.rows[i]) v += sparse_inner(e.matrix, x[static_cast<std::size_t>(e.block)]);
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

std::vector<Eigen::MatrixXd> apply_adjoint(const RealSdp& problem, const Eigen::VectorXd& y) {
  Blocks out;
  for (int n : problem.block_sizes) out.push_back(Eigen::MatrixXd::Zero(n, n));
  for (std::size_t i = 0; i < problem.rows.size(); ++i) {
    const double yi = y(static_cast<Eigen::Index>(i));
    if (yi == 0.0) continue;
    for (const auto& e : problem.rows[i]) out[static_cast<std::size_t>(e.block)] += yi * e.matrix;
  }
  return out;
}

IpmResult solve_real_sdp(const RealSdp& problem, const IpmOptions& options) {
  const std::size_t nb = problem.block_sizes.size();
  const auto m = static_cast<Eigen::Index>(problem.rows.size());
  IpmResult res;

  double n_total = 0.0;
  for (int n : problem.block_sizes) n_total += n;
  const double norm_b = problem.b.norm();
  const double norm_c = block_norm(problem.c);

  // starting point in the style of SDPT3
  Blocks x(nb), s(nb);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  {
    std::vector<double> row_block_norm_max(nb, 0.0);
    std::vector<double> xi_term(nb, 0.0);
    for (std::size_t i = 0; i < problem.rows.size(); ++i) {
      for (const auto& e : problem.rows[i]) {
        const auto bj = static_cast<std::size_t>(e.block);
        const double an = e.matrix.norm();
        row_block_norm_max[bj] = std::max(row_block_norm_max[bj], an);
        xi_term[bj] = std::max(xi_term[bj], (1.0 + std::abs(problem.b(static_cast<Eigen::Index>(i)))) / (1.0 + an));
      }
    }
    for (std::size_t j = 0; j < nb; ++j) {
      const double n = problem.block_sizes[j];
      const double xi = std::max({10.0, std::sqrt(n), n * xi_term[j]});
      const double eta = std::max({10.0, std::sqrt(n), problem.c[j].norm(), row_block_norm_max[j]});
      x[j] = xi * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      s[j] = eta * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    }
  }

  auto record = [&](const Eigen::VectorXd& rp, const Blocks& rd) {
    res.x = x;
    res.s = s;
    res.y = y;
    res.primal_objective = block_inner(problem.c, x);
    res.dual_objective = problem.b.dot(y);
    res.primal_infeasibility = rp.norm() / (1.0 + norm_b);
    res.dual_infeasibility = block_norm(rd) / (1.0 + norm_c);
    res.relative_gap = std::abs(res.primal_objective - res.dual_objective) /
                       (1.0 + std::abs(res.primal_objective) + std::abs(res.dual_objective));
  };
  auto acceptable = [&]() {
    return res.relative_gap <= options.accept_gap && res.primal_infeasibility <= options.accept_infeasibility &&
           res.dual_infeasibility <= options.accept_infeasibility;
  };

  SchurSolver schur;
  std::vector<Scaling> sc(nb);
  IpmResult best;
  double best_merit = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double prev_mu = std::numeric_limits<double>::infinity();
  int stagnant = 0;

  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    res.iterations = iter;
    const Eigen::VectorXd rp = problem.b - apply_constraints(problem, x);
    const Blocks aty = apply_adjoint(problem, y);
    Blocks rd(nb);
    for (std::size_t j = 0; j < nb; ++j) rd[j] = problem.c[j] - aty[j] - s[j];
    record(rp, rd);
    if (acceptable()) {
      const double merit = std::max({res.relative_gap, res.primal_infeasibility, res.dual_infeasibility});
      if (merit < 0.5 * best_merit) since_best = 0;
      if (merit < best_merit) {
        best_merit = merit;
        best = res;
      }
    }
    if (std::isfinite(best_merit) && ++since_best > 5) {
      res.message = "no progress near the optimum";
      break;
    }

    if (res.relative_gap <= options.tolerance && res.primal_infeasibility <= options.tolerance &&
        res.dual_infeasibility <= options.tolerance) {
      res.status = SolveStatus::optimal;
      res.message = "converged";
      return res;
    }
    // infeasibility certificates
    {
      const double by = res.dual_objective;
      double aty_s = 0.0;
      for (std::size_t j = 0; j < nb; ++j) aty_s += (aty[j] + s[j]).squaredNorm();
      aty_s = std::sqrt(aty_s);
      if (by > 0.0 && by > options.certificate_ratio * std::max(aty_s, 1e-300) && y.norm() > 1e6) {
        res.status = SolveStatus::infeasible;
        res.message = "primal infeasibility certificate";
        return res;
      }
      const double cx = res.primal_objective;
      const double ax = apply_constraints(problem, x).norm();
      if (cx < 0.0 && -cx > options.certificate_ratio * std::max(ax, 1e-300) && block_norm(x) > 1e6) {
        res.status = SolveStatus::unbounded;
        res.message = "dual infeasibility certificate";
        return res;
      }
    }
    if (iter == options.max_iterations) break;

    const double mu = block_inner(x, s) / n_total;
    bool ok = true;
    for (std::size_t j = 0; j < nb && ok; ++j) ok = nt_scaling(x[j], s[j], sc[j]);
    if (!ok) {
      res.message = "lost positive definiteness";
      break;
    }
    Blocks w(nb);
    for (std::size_t j = 0; j < nb; ++j) w[j] = sc[j].w;
    const Eigen::MatrixXd mm = options.parallel_schur ? schur_complement_parallel(problem.rows, w)
                                                      : schur_complement_serial(problem.rows, w);
    if (!schur.factor(mm)) {
      res.message = "Schur complement factorization failed";
      break;
    }

    Blocks wrdw(nb);
    for (std::size_t j = 0; j < nb; ++j) wrdw[j] = w[j] * rd[j] * w[j];

    auto solve_direction = [&](const Blocks& rc) {
      Direction dir;
      const Blocks t = operator_sub(rc, wrdw);
      dir.dy = schur.solve(rp - apply_constraints(problem, t));
      const Blocks atdy = apply_adjoint(problem, dir.dy);
      dir.ds.resize(nb);
      dir.dx.resize(nb);
      for (std::size_t j = 0; j < nb; ++j) {
        dir.ds[j] = rd[j] - atdy[j];
        dir.dx[j] = t[j] + w[j] * atdy[j] * w[j];
        symmetrize(dir.dx[j]);
        symmetrize(dir.ds[j]);
      }
      return dir;
    };
    auto steps = [&](const Direction& dir, Blocks& dxs, Blocks& dss) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = ap;
      dxs.resize(nb);
      dss.resize(nb);
      for (std::size_t j = 0; j < nb; ++j) {
        dxs[j] = sc[j].ginv * dir.dx[j] * sc[j].ginv.transpose();
        dss[j] = sc[j].g.transpose() * dir.ds[j] * sc[j].g;
        symmetrize(dxs[j]);
        symmetrize(dss[j]);
        ap = std::min(ap, max_step(sc[j].lambda, dxs[j]));
        ad = std::min(ad, max_step(sc[j].lambda, dss[j]));
      }
      return std::pair<double, double>{ap, ad};
    };

    // predictor
    Blocks rc(nb);
    for (std::size_t j = 0; j < nb; ++j) rc[j] = -x[j];
    const Direction pred = solve_direction(rc);
    Blocks pdx, pds;
    const auto [ap_max, ad_max] = steps(pred, pdx, pds);
    const double ap_aff = std::min(1.0, ap_max);
    const double ad_aff = std::min(1.0, ad_max);
    double mu_aff = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      mu_aff += (x[j] + ap_aff * pred.dx[j]).cwiseProduct(s[j] + ad_aff * pred.ds[j]).sum();
    }
    mu_aff /= n_total;
    const double ratio = std::clamp(mu_aff / mu, 0.0, 1.0);
    double sigma = ratio * ratio * ratio;
    const double feasibility = std::max(res.primal_infeasibility, res.dual_infeasibility);
    if (feasibility > 1e-4) sigma = std::max(sigma, 0.1 * std::min(1.0, feasibility));

    // corrector
    for (std::size_t j = 0; j < nb; ++j) {
      const Eigen::VectorXd& lam = sc[j].lambda;
      Eigen::MatrixXd r = -(pdx[j] * pds[j] + pds[j] * pdx[j]) / 2.0;
      r.diagonal().array() += sigma * mu - lam.array().square();
      for (Eigen::Index a = 0; a < r.rows(); ++a)
        for (Eigen::Index b = 0; b < r.cols(); ++b) r(a, b) *= 2.0 / (lam(a) + lam(b));
      rc[j] = sc[j].g * r * sc[j].g.transpose();
      symmetrize(rc[j]);
    }
    const Direction corr = solve_direction(rc);
    Blocks cdx, cds;
    const auto [cp_max, cd_max] = steps(corr, cdx, cds);
    const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    double ap = std::min(1.0, gamma * cp_max);
    double ad = std::min(1.0, gamma * cd_max);
    if (!(ap > 0.0) || !(ad > 0.0) || !std::isfinite(ap) || !std::isfinite(ad)) {
      res.message = "degenerate step";
      break;
    }
    // rounding can push a nearly singular iterate out of the cone; shorten the step until it is back in
    Blocks xn(nb), sn(nb);
    bool inside = false;
    for (int tries = 0; tries < 30 && !inside; ++tries) {
      inside = true;
      for (std::size_t j = 0; j < nb && inside; ++j) {
        xn[j] = x[j] + ap * corr.dx[j];
        sn[j] = s[j] + ad * corr.ds[j];
        symmetrize(xn[j]);
        symmetrize(sn[j]);
        inside = Eigen::LLT<Eigen::MatrixXd>(xn[j]).info() == Eigen::Success &&
                 Eigen::LLT<Eigen::MatrixXd>(sn[j]).info() == Eigen::Success;
      }
      if (!inside) {
        ap *= 0.7;
        ad *= 0.7;
      }
    }
    if (!inside) {
      res.message = "lost positive definiteness";
      break;
    }
    x = std::move(xn);
    s = std::move(sn);
    y += ad * corr.dy;

    if (std::max(ap, ad) < 1e-9) {
      res.message = "step length collapsed";
      break;
    }
    const double new_mu = block_inner(x, s) / n_total;
    stagnant = new_mu > 0.9 * prev_mu && std::max(ap, ad) < 1e-3 ? stagnant + 1 : 0;
    prev_mu = std::min(prev_mu, new_mu);
    if (stagnant >= 8) {
      res.message = "stalled";
      break;
    }
  }

  // final assessment of the last iterate
  {
    const Eigen::VectorXd rp = problem.b - apply_constraints(problem, x);
    const Blocks aty = apply_adjoint(problem, y);
    Blocks rd(nb);
    for (std::size_t j = 0; j < nb; ++j) rd[j] = problem.c[j] - aty[j] - s[j];
    record(rp, rd);
  }
  if (acceptable()) {
    res.status = SolveStatus::optimal;
    if (res.message.empty()) res.message = "iteration cap reached within acceptance tolerances";
  } else if (std::isfinite(best_merit)) {
    const std::string why = res.message.empty() ? "iteration cap reached" : res.message;
    const int iterations = res.iterations;
    res = std::move(best);
    res.status = SolveStatus::optimal;
    res.iterations = iterations;
    res.message = why + "; best iterate within acceptance tolerances returned";
  } else {
    res.status = SolveStatus::numerical_failure;
    if (res.message.empty()) res.message = "iteration cap reached";
  }
  return res;
}

}  // namespace combforge
