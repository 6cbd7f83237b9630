#include "biogds/vi_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace biogds {

SparseMatrix add_scaled(const SparseMatrix& a, double ca, const SparseMatrix& b, double cb) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("add_scaled: dimension mismatch");
  std::vector<Triplet> t;
  t.reserve(a.nnz() + b.nnz());
  for (int r = 0; r < a.rows(); ++r)
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k)
      t.push_back({r, a.col_idx()[k], ca * a.values()[k]});
  for (int r = 0; r < b.rows(); ++r)
    for (int k = b.row_ptr()[r]; k < b.row_ptr()[r + 1]; ++k)
      t.push_back({r, b.col_idx()[k], cb * b.values()[k]});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), t);
}

namespace {

double comp_residual_scaled(const std::vector<double>& lambda, const std::vector<double>& u,
                            const std::vector<double>& lower, const std::vector<double>& diag) {
  double worst = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (lower[i] == kUnconstrained) continue;
    const double d = diag[i] > 0.0 ? diag[i] : 1.0;
    worst = std::max(worst, std::abs(std::min(lambda[i] / d, u[i] - lower[i])));
  }
  return worst;
}

}  // namespace

ObstacleSolution solve_obstacle_qp(const SparseMatrix& a, const std::vector<double>& b,
                                   const std::vector<double>& lower,
                                   const std::vector<double>& u0, const ObstacleOptions& opts) {
  const int n = a.rows();
  if (static_cast<int>(b.size()) != n || static_cast<int>(lower.size()) != n)
    throw std::invalid_argument("solve_obstacle_qp: size mismatch");

  ObstacleSolution sol;
  sol.u = u0;
  sol.u.resize(static_cast<std::size_t>(n), 0.0);
  const std::vector<double> diag = a.diagonal();

  std::vector<char> active(static_cast<std::size_t>(n), 0);
  // Feasible start; the initially violated set begins active.
  for (int i = 0; i < n; ++i) {
    if (lower[i] == kUnconstrained) continue;
    if (sol.u[i] <= lower[i]) {
      sol.u[i] = lower[i];
      active[i] = 1;
    }
  }

  CgOptions cg;
  cg.tol = opts.cg_tol;

  std::vector<double> lambda(static_cast<std::size_t>(n), 0.0);
  bool solved = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    sol.iterations = it + 1;
    for (int i = 0; i < n; ++i)
      if (active[i]) sol.u[i] = lower[i];
    const CgResult r = cg_solve(a, b, sol.u, cg, &active);
    if (!r.converged)
      throw SolverError("solve_obstacle_qp: inner CG failed (residual " +
                        std::to_string(r.rel_residual) + ")");
    const std::vector<double> au = a.multiply(sol.u);
    for (int i = 0; i < n; ++i) lambda[i] = au[i] - b[i];

    // Semismooth Newton update of the active set for min(lambda, c(u - lo)) = 0.
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      if (lower[i] == kUnconstrained) continue;
      const double c = diag[i] > 0.0 ? diag[i] : 1.0;
      const char want = (lambda[i] - c * (sol.u[i] - lower[i]) > 0.0) ? 1 : 0;
      if (want != active[i]) {
        active[i] = want;
        changed = true;
      }
    }
    sol.comp_residual = comp_residual_scaled(lambda, sol.u, lower, diag);
    if (!changed && sol.comp_residual <= opts.tol) {
      solved = true;
      break;
    }
  }

  if (!solved) {
    // Projected Gauss-Seidel fallback.
    sol.used_fallback = true;
    for (int i = 0; i < n; ++i)
      if (lower[i] != kUnconstrained) sol.u[i] = std::max(sol.u[i], lower[i]);
    int sweep = 0;
    for (; sweep < opts.pgs_max_sweeps; ++sweep) {
      for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
          row += a.values()[k] * sol.u[a.col_idx()[k]];
        const double d = diag[i] > 0.0 ? diag[i] : 1.0;
        double unew = sol.u[i] + (b[i] - row) / d;
        if (lower[i] != kUnconstrained) unew = std::max(unew, lower[i]);
        sol.u[i] = unew;
      }
      if (sweep % 8 == 7) {
        const std::vector<double> au = a.multiply(sol.u);
        for (int i = 0; i < n; ++i) lambda[i] = au[i] - b[i];
        sol.comp_residual = comp_residual_scaled(lambda, sol.u, lower, diag);
        if (sol.comp_residual <= opts.tol) {
          solved = true;
          break;
        }
      }
    }
    sol.iterations += sweep + 1;
    if (!solved)
      throw SolverError("solve_obstacle_qp: no convergence after " +
                        std::to_string(opts.max_iterations) + " active-set iterations and " +
                        std::to_string(opts.pgs_max_sweeps) +
                        " PGS sweeps (complementarity residual " +
                        std::to_string(sol.comp_residual) + ")");
  }

  sol.lambda = lambda;
  sol.active.clear();
  for (int i = 0; i < n; ++i)
    if (lower[i] != kUnconstrained && sol.u[i] <= lower[i] + 1e-14 * (1.0 + std::abs(lower[i])))
      sol.active.push_back(i);
  return sol;
}

std::vector<double> solve_linear_spd(const SparseMatrix& a, const std::vector<double>& b,
                                     const LinearSolveOptions& opts,
                                     const std::vector<double>* x0) {
  std::vector<double> x =
      x0 ? *x0 : std::vector<double>(static_cast<std::size_t>(a.rows()), 0.0);
  CgOptions cg;
  cg.tol = opts.tol;
  cg.max_iter = opts.max_iter;
  cg.direct_fallback = opts.direct_fallback;
  const CgResult r = cg_solve(a, b, x, cg);
  if (!r.converged)
    throw SolverError("solve_linear_spd: CG stagnated (relative residual " +
                      std::to_string(r.rel_residual) + ")");
  return x;
}

LiftedOperator split_operator(SparseMatrix full, int n_interior, int n_lift) {
  LiftedOperator op;
  std::vector<int> ii(static_cast<std::size_t>(n_interior));
  for (int i = 0; i < n_interior; ++i) ii[i] = i;
  std::vector<int> bb(static_cast<std::size_t>(n_lift));
  for (int i = 0; i < n_lift; ++i) bb[i] = n_interior + i;
  op.ii = full.block(ii, ii);
  op.ib = full.block(ii, bb);
  op.full = std::move(full);
  return op;
}

namespace {

double mass_norm(const SparseMatrix& mass_full, const std::vector<double>& v) {
  return std::sqrt(std::max(0.0, mass_full.quad_form(v)));
}

}  // namespace

StepResult advance_step(const StepSystem& sys, const AdvanceOptions& opts) {
  const int ni = sys.n_interior;
  const int nl = sys.n_lift;
  const int nt = ni + nl;
  const double dt = sys.dt;
  if (!(dt > 0.0)) throw std::invalid_argument("advance_step: dt must be positive");

  StepResult out;
  out.report.contraction_ok = sys.m_lip > 0.0 ? (dt < 0.5 / sys.m_lip) : true;

  // Current iterate over all dofs; the lift is pinned at the new time level.
  std::vector<double> wp = opts.start_from_zero ? std::vector<double>(nt, 0.0) : *sys.p_prev;
  std::vector<double> wq = opts.start_from_zero ? std::vector<double>(nt, 0.0) : *sys.q_prev;
  for (int i = 0; i < nl; ++i) {
    wp[ni + i] = sys.p_lift.empty() ? 0.0 : sys.p_lift[i];
    wq[ni + i] = sys.q_lift.empty() ? 0.0 : sys.q_lift[i];
  }

  // Contributions independent of the Picard iterate.
  const std::vector<double> mp_prev = sys.mass_p->full.multiply(*sys.p_prev);
  const std::vector<double> mq_prev = sys.mass_q->full.multiply(*sys.q_prev);
  std::vector<double> lift_p(static_cast<std::size_t>(ni), 0.0);
  std::vector<double> lift_q(static_cast<std::size_t>(ni), 0.0);
  if (nl > 0) {
    const std::vector<double> zero_lift(static_cast<std::size_t>(nl), 0.0);
    const std::vector<double>& pl = sys.p_lift.empty() ? zero_lift : sys.p_lift;
    const std::vector<double>& ql = sys.q_lift.empty() ? zero_lift : sys.q_lift;
    const std::vector<double> mb_p = sys.mass_p->ib.multiply(pl);
    const std::vector<double> ab_p = sys.diff_p->ib.multiply(pl);
    const std::vector<double> mb_q = sys.mass_q->ib.multiply(ql);
    const std::vector<double> ab_q = sys.diff_q->ib.multiply(ql);
    for (int i = 0; i < ni; ++i) {
      lift_p[i] = -mb_p[i] / dt - ab_p[i];
      lift_q[i] = -mb_q[i] / dt - ab_q[i];
    }
  }

  std::vector<double> fvec(static_cast<std::size_t>(nt)), gvec(static_cast<std::size_t>(nt));
  std::vector<double> rhs_p(static_cast<std::size_t>(ni)), rhs_q(static_cast<std::size_t>(ni));
  std::vector<double> lower(static_cast<std::size_t>(ni), kUnconstrained);
  if (sys.lower) lower = *sys.lower;

  std::vector<double> delta(static_cast<std::size_t>(nt), 0.0);
  ObstacleSolution obs;
  for (int it = 0; it < opts.max_picard; ++it) {
    out.report.iterations = it + 1;
    for (int i = 0; i < nt; ++i) fvec[i] = sys.f(wp[i], wq[i]);
    for (int i = 0; i < nt; ++i) gvec[i] = sys.g(wp[i], wq[i]);
    const std::vector<double> mf = sys.mass_p->full.multiply(fvec);
    const std::vector<double> mg = sys.mass_q->full.multiply(gvec);
    for (int i = 0; i < ni; ++i) {
      rhs_p[i] = mp_prev[i] / dt + mf[i] + lift_p[i];
      rhs_q[i] = mq_prev[i] / dt + mg[i] + lift_q[i];
      if (!sys.source_p.empty()) rhs_p[i] += sys.source_p[i];
      if (!sys.source_q.empty()) rhs_q[i] += sys.source_q[i];
    }

    std::vector<double> up(wp.begin(), wp.begin() + ni);
    obs = solve_obstacle_qp(*sys.sys_p, rhs_p, lower, up, opts.obstacle);
    std::vector<double> uq(wq.begin(), wq.begin() + ni);
    uq = solve_linear_spd(*sys.sys_q, rhs_q, opts.linear, &uq);

    std::fill(delta.begin(), delta.end(), 0.0);
    for (int i = 0; i < ni; ++i) delta[i] = obs.u[i] - wp[i];
    const double dpn = mass_norm(sys.mass_p->full, delta);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (int i = 0; i < ni; ++i) delta[i] = uq[i] - wq[i];
    const double dqn = mass_norm(sys.mass_q->full, delta);

    for (int i = 0; i < ni; ++i) wp[i] = obs.u[i];
    for (int i = 0; i < ni; ++i) wq[i] = uq[i];

    const double res = dpn + dqn;
    out.report.residuals.push_back(res);
    out.report.final_residual = res;
    if (res <= opts.picard_tol) {
      out.report.converged = true;
      break;
    }
  }

  if (!out.report.converged) {
    std::ostringstream msg;
    msg << "advance_step: Picard iteration did not converge in " << out.report.iterations
        << " iterations (final residual " << out.report.final_residual << ", contraction "
        << (out.report.contraction_ok ? "satisfied" : "violated") << ")";
    throw SolverError(msg.str());
  }

  out.p = wp;
  out.q = wq;

  // Step-level feasibility and complementarity with the mass-scaled multiplier.
  out.feasibility_slack = std::numeric_limits<double>::infinity();
  out.complementarity = 0.0;
  out.multiplier.assign(static_cast<std::size_t>(ni), 0.0);
  const std::vector<double> mlump = lump_mass(sys.mass_p->full);
  for (int i = 0; i < ni; ++i) {
    if (lower[i] == kUnconstrained) continue;
    out.feasibility_slack = std::min(out.feasibility_slack, wp[i] - lower[i]);
    const double m = mlump[i] > 0.0 ? mlump[i] : 1.0;
    out.multiplier[i] = obs.lambda[i] / m;
    out.complementarity =
        std::max(out.complementarity, std::abs(out.multiplier[i] * (wp[i] - lower[i])));
  }
  if (out.feasibility_slack == std::numeric_limits<double>::infinity())
    out.feasibility_slack = 0.0;
  return out;
}

}  // namespace biogds
