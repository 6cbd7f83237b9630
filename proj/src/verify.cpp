#include "biogds/verify.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "biogds/scheme_p1.hpp"

namespace biogds {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

QuadSpec kink_quad(const GradientDiscretisation& gd, const ExactSolution& exact, double t,
                   int degree = 5) {
  QuadSpec qs;
  qs.degree = degree;
  if (exact.has_kink) {
    const Mesh& mesh = gd.mesh();
    const auto kink = exact.has_kink;
    qs.cell_subdivision = [&mesh, kink, t](int c) {
      std::vector<Point2> poly;
      for (int v : mesh.cells()[c].vertices) poly.push_back(mesh.vertices()[v]);
      return kink(poly, t) ? 2 : 0;
    };
  }
  return qs;
}

// 3-point Gauss nodes on [t0, t1] with weights normalized to the average.
void gauss3_time(double t0, double t1, double* tau, double* w) {
  static const double x[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double ww[] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  for (int k = 0; k < 3; ++k) {
    tau[k] = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x[k];
    w[k] = ww[k];
  }
}

}  // namespace

double observed_order(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0) || !(h_coarse > h_fine)) return kNaN;
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

LevelRecord error_norms(const Trajectory& traj, const ExactSolution& exact,
                        const TensorFn& coeff_a, bool check_quadrature) {
  (void)coeff_a;
  const GradientDiscretisation& gd = *traj.gd;
  LevelRecord rec;
  rec.h = mesh_size(gd.mesh());
  rec.dt = traj.grid.dt_max();
  rec.order_p_l2 = rec.order_q_l2 = rec.order_p_h1 = rec.order_q_h1 = kNaN;

  const int nsteps = traj.grid.steps();
  double ep5 = 0.0, ep7 = 0.0, eq = 0.0;
  for (int n = 0; n <= nsteps; ++n) {
    const double t = traj.grid.knots[n];
    auto pexact = [&](const Point2& x) { return exact.p(x, t); };
    auto qexact = [&](const Point2& x) { return exact.q(x, t); };
    ep5 = std::max(ep5, l2_error_value(gd, traj.p[n], pexact, kink_quad(gd, exact, t, 5)));
    if (check_quadrature)
      ep7 = std::max(ep7, l2_error_value(gd, traj.p[n], pexact, kink_quad(gd, exact, t, 7)));
    eq = std::max(eq, l2_error_value(gd, traj.q[n], qexact, kink_quad(gd, exact, t, 5)));
  }
  rec.err_p_l2 = ep5;
  rec.err_q_l2 = eq;
  rec.quad_check = (check_quadrature && ep5 > 0.0) ? std::abs(ep7 - ep5) / ep5 : 0.0;

  double gp = 0.0, gq = 0.0;
  for (int n = 0; n < nsteps; ++n) {
    const double t1 = traj.grid.knots[n + 1];
    const double dt = traj.grid.dt(n);
    gp += dt * l2_error_gradient(
                   gd, traj.p[n + 1], [&](const Point2& x) { return exact.grad_p(x, t1); },
                   kink_quad(gd, exact, t1, 5));
    gq += dt * l2_error_gradient(
                   gd, traj.q[n + 1], [&](const Point2& x) { return exact.grad_q(x, t1); },
                   kink_quad(gd, exact, t1, 5));
  }
  rec.err_p_h1 = gp;
  rec.err_q_h1 = gq;
  return rec;
}

ErrorReport convergence_study(const ModelProblem& model, const std::vector<StudyLevel>& levels,
                              const StudyOptions& opts) {
  if (levels.size() < 2)
    throw std::invalid_argument("convergence_study: need at least two levels");
  if (!model.exact)
    throw std::invalid_argument("convergence_study: the model carries no exact solution");
  ErrorReport report;
  report.scheme = opts.scheme;
  report.mesh_kind = opts.mesh_kind;

  for (std::size_t k = 0; k < levels.size(); ++k) {
    const StudyLevel& lvl = levels[k];
    Mesh mesh = opts.mesh_kind == "hex" ? generate_hex_mesh(model.domain, lvl.resolution)
                                        : generate_rect_mesh(model.domain, lvl.resolution);
    std::unique_ptr<GradientDiscretisation> gd =
        opts.scheme == "p1" ? build_p1(mesh) : build_hmm(mesh, opts.hmm);

    Trajectory traj;
    try {
      traj = run(model, *gd, TimeGrid::uniform(model.T, lvl.steps), opts.run);
    } catch (const SolverError& e) {
      std::ostringstream os;
      os << "convergence_study: level " << k << " (resolution " << lvl.resolution
         << ") failed: " << e.what() << " [completed " << report.levels.size() << " levels]";
      throw SolverError(os.str());
    }

    LevelRecord rec = error_norms(traj, *model.exact, model.coeff_a);
    rec.level = static_cast<int>(k);
    rec.resolution = lvl.resolution;
    if (!report.levels.empty()) {
      const LevelRecord& prev = report.levels.back();
      rec.order_p_l2 = observed_order(prev.err_p_l2, rec.err_p_l2, prev.h, rec.h);
      rec.order_q_l2 = observed_order(prev.err_q_l2, rec.err_q_l2, prev.h, rec.h);
      rec.order_p_h1 = observed_order(prev.err_p_h1, rec.err_p_h1, prev.h, rec.h);
      rec.order_q_h1 = observed_order(prev.err_q_h1, rec.err_q_h1, prev.h, rec.h);
    }
    report.levels.push_back(rec);
  }
  return report;
}

EstimateDiagnostics estimate_diagnostics(const Trajectory& traj, const ModelProblem& model) {
  if (!model.exact) throw std::invalid_argument("estimate_diagnostics: no exact solution");
  const ExactSolution& ex = *model.exact;
  const GradientDiscretisation& gd = *traj.gd;
  EstimateDiagnostics out;

  {
    InitialInterpolation init =
        interpolate_initial(gd, model.p0, model.q0, model.p0_smooth, model.q0_smooth, 2);
    out.r0_p = l2_error_value(gd, init.p, model.p0, kink_quad(gd, ex, 0.0));
    out.r0_q = l2_error_value(gd, init.q, model.q0, kink_quad(gd, ex, 0.0));
  }

  const SparseMatrix mass = assemble_mass(gd);
  const SparseMatrix gram = gradient_gram(gd);
  const auto ii = interior_ids(gd);
  const SparseMatrix gram_ii = gram.block(ii, ii);

  const bool has_barrier = gd.has_barrier();
  const std::vector<double>& chi_cell = gd.barrier_cell();

  for (int n = 0; n < traj.grid.steps(); ++n) {
    const double t0 = traj.grid.knots[n];
    const double t1 = traj.grid.knots[n + 1];
    const double dt = traj.grid.dt(n);
    StepDiagnostics d;
    d.t = t1;

    auto p_t1 = [&](const Point2& x) { return ex.p(x, t1); };
    auto gp_t1 = [&](const Point2& x) { return ex.grad_p(x, t1); };
    auto q_t1 = [&](const Point2& x) { return ex.q(x, t1); };
    auto gq_t1 = [&](const Point2& x) { return ex.grad_q(x, t1); };
    const QuadSpec qs = kink_quad(gd, ex, t1);

    d.s_p = consistency_defect(gd, p_t1, gp_t1, qs);
    d.s_q =
        consistency_defect_of(gd, min_interpolant(gd, mass, gram, q_t1, gq_t1), q_t1, gq_t1, qs);

    // Time averages of the derivatives collapse to difference quotients.
    auto dtp = [&](const Point2& x) { return (ex.p(x, t1) - ex.p(x, t0)) / dt; };
    auto gdtp = [&](const Point2& x) {
      const Point2 g1 = ex.grad_p(x, t1), g0 = ex.grad_p(x, t0);
      return Point2{(g1.x - g0.x) / dt, (g1.y - g0.y) / dt};
    };
    auto dtq = [&](const Point2& x) { return (ex.q(x, t1) - ex.q(x, t0)) / dt; };
    auto gdtq = [&](const Point2& x) {
      const Point2 g1 = ex.grad_q(x, t1), g0 = ex.grad_q(x, t0);
      return Point2{(g1.x - g0.x) / dt, (g1.y - g0.y) / dt};
    };
    d.s_dtp = consistency_defect(gd, dtp, gdtp, qs);
    d.s_dtq =
        consistency_defect_of(gd, min_interpolant(gd, mass, gram, dtq, gdtq), dtq, gdtq, qs);

    double tau[3], w[3];
    gauss3_time(t0, t1, tau, w);
    ConformityOptions copts;
    copts.quad = qs;
    VectorFn flux_a = [&](const Point2& x) {
      Point2 s{0.0, 0.0};
      for (int k = 0; k < 3; ++k) {
        const auto a = model.coeff_a(x);
        const Point2 g = ex.grad_p(x, tau[k]);
        s += w[k] * Point2{a[0] * g.x + a[1] * g.y, a[2] * g.x + a[3] * g.y};
      }
      return s;
    };
    VectorFn flux_b = [&](const Point2& x) {
      Point2 s{0.0, 0.0};
      for (int k = 0; k < 3; ++k) {
        const auto b = model.coeff_b(x);
        const Point2 g = ex.grad_q(x, tau[k]);
        s += w[k] * Point2{b[0] * g.x + b[1] * g.y, b[2] * g.x + b[3] * g.y};
      }
      return s;
    };
    d.w_a = limit_conformity_defect(gd, gram_ii, flux_a, copts);
    d.w_b = limit_conformity_defect(gd, gram_ii, flux_b, copts);

    // Contact-consistency term: int (chi_D - Pi_D P_D pbar(t1)) Fbar, with Fbar
    // the time average of the full reaction-side residual (sources included).
    if (has_barrier) {
      const std::vector<double> w_interp = gd.interpolate(p_t1);
      auto fbar = [&](const Point2& x) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
          double v = model.f(ex.p(x, tau[k]), ex.q(x, tau[k])) + ex.div_a_grad_p(x, tau[k]) -
                     ex.dp_dt(x, tau[k]);
          if (model.source_p) v += model.source_p(x, tau[k]);
          s += w[k] * v;
        }
        return s;
      };
      double md = 0.0;
      const TriRule& rule = tri_rule(qs.degree);
      std::vector<QuadPoint> pts;
      for (int c = 0; c < gd.mesh().n_cells(); ++c) {
        const int lvl = qs.cell_subdivision ? qs.cell_subdivision(c) : 0;
        for (const ReconTri& tri : gd.recon()[c].tris) {
          pts.clear();
          tri_quad_points_subdivided(rule, tri.v0, tri.v1, tri.v2, lvl, pts);
          for (const auto& qp : pts)
            md += qp.w * (chi_cell[c] - tri.value_at(w_interp, qp.x)) * fbar(qp.x);
        }
      }
      d.m_d = md;
    }
    out.steps.push_back(d);
  }
  return out;
}

double estimate_rhs_sum(const EstimateDiagnostics& d, double dt) {
  if (d.steps.empty()) return 0.0;
  const StepDiagnostics& last = d.steps.back();
  double sum_md = 0.0;
  for (const StepDiagnostics& s : d.steps) sum_md += dt * s.m_d;
  return dt + last.s_p + last.s_q + last.s_dtp + last.s_dtq + last.w_a + last.w_b +
         d.steps.front().s_p + d.r0_p + d.steps.front().s_q + d.r0_q +
         std::sqrt(std::max(0.0, sum_md));
}

}  // namespace biogds
