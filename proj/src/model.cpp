#include "biogds/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace biogds {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---- test2 manufactured solution ----
// Moving-disk ingredients: alpha is the distance to the rotating center,
// beta the oscillating contact radius.

double t2_gamma(double t) { return std::cos(4.0 * kPi * t) / 3.0; }
double t2_zeta(double t) { return std::sin(4.0 * kPi * t) / 3.0; }
double t2_beta(double t) { return 1.0 / 3.0 + 0.3 * std::sin(16.0 * kPi * t); }
double t2_dgamma(double t) { return -(4.0 * kPi / 3.0) * std::sin(4.0 * kPi * t); }
double t2_dzeta(double t) { return (4.0 * kPi / 3.0) * std::cos(4.0 * kPi * t); }
double t2_dbeta(double t) { return 4.8 * kPi * std::cos(16.0 * kPi * t); }

double t2_alpha2(const Point2& x, double t) {
  const double dx = x.x - t2_gamma(t);
  const double dy = x.y - t2_zeta(t);
  return dx * dx + dy * dy;
}

// u = alpha^2 - beta^2; the contact set is {u <= 0}.
double t2_u(const Point2& x, double t) {
  const double b = t2_beta(t);
  return t2_alpha2(x, t) - b * b;
}

double t2_p(const Point2& x, double t) {
  const double u = t2_u(x, t);
  return u > 0.0 ? 0.5 * u * u : 0.0;
}

Point2 t2_grad_p(const Point2& x, double t) {
  const double u = t2_u(x, t);
  if (u <= 0.0) return {0.0, 0.0};
  return {2.0 * u * (x.x - t2_gamma(t)), 2.0 * u * (x.y - t2_zeta(t))};
}

double t2_lap_p(const Point2& x, double t) {
  const double u = t2_u(x, t);
  if (u <= 0.0) return 0.0;
  return 8.0 * t2_alpha2(x, t) - 4.0 * t2_beta(t) * t2_beta(t);
}

double t2_dp_dt(const Point2& x, double t) {
  const double u = t2_u(x, t);
  if (u <= 0.0) return 0.0;
  const double ut = -2.0 * t2_dgamma(t) * (x.x - t2_gamma(t)) -
                    2.0 * t2_dzeta(t) * (x.y - t2_zeta(t)) -
                    2.0 * t2_beta(t) * t2_dbeta(t);
  return u * ut;
}

double t2_q(const Point2& x, double t) { return std::exp(x.x + x.y + 0.5 * t); }
Point2 t2_grad_q(const Point2& x, double t) {
  const double e = t2_q(x, t);
  return {e, e};
}
double t2_dq_dt(const Point2& x, double t) { return 0.5 * t2_q(x, t); }
// div(B grad q) with B = 0.25 Id
double t2_div_b_grad_q(const Point2& x, double t) { return 0.5 * t2_q(x, t); }

double t2_f(double p, double q) {
  const double s = p + q;
  return s * s;
}
double t2_g(double p, double q) { return p * (1.0 - p * q); }

// Residual-derived sources: with these, the exact pair solves the constrained
// system with equality everywhere (on the contact disk p sits exactly on the
// barrier, so the complementarity product vanishes).
double t2_source_p(const Point2& x, double t) {
  return t2_dp_dt(x, t) - t2_lap_p(x, t) - t2_f(t2_p(x, t), t2_q(x, t));
}
double t2_source_q(const Point2& x, double t) {
  return t2_dq_dt(x, t) - t2_div_b_grad_q(x, t) - t2_g(t2_p(x, t), t2_q(x, t));
}

bool t2_kink(const std::vector<Point2>& poly, double t) {
  bool pos = false, neg = false;
  for (const Point2& v : poly) {
    if (t2_u(v, t) > 0.0)
      pos = true;
    else
      neg = true;
  }
  Point2 c{0.0, 0.0};
  for (const Point2& v : poly) c += v;
  c = (1.0 / static_cast<double>(poly.size())) * c;
  if (t2_u(c, t) > 0.0)
    pos = true;
  else
    neg = true;
  return pos && neg;
}

// ---- test1 data ----

double t1_f(double p, double q) { return 5.0 * q * p / (q + 0.7); }
double t1_g(double p, double q) { return -0.5 * q * p / (q + 0.7); }

double indicator_ball(const Point2& x, double r) {
  return (x.x * x.x + x.y * x.y < r * r) ? 1.0 : 0.0;
}

}  // namespace

double test2_tabulated_source(const Point2& x, double t) {
  const double a2 = t2_alpha2(x, t);
  const double b = t2_beta(t);
  const double b2 = b * b;
  if (a2 - b2 > 0.0)
    return 4.0 * (b2 - 2.0 * a2 - 0.5 * (a2 - b2) * (t2_gamma(t) + b * t2_dbeta(t)));
  return 4.0 * b2 * (a2 - b2 - 1.0);
}

double evaluate_exact_test2(char which, const Point2& x, double t) {
  switch (which) {
    case 'p':
      return t2_p(x, t);
    case 'q':
      return t2_q(x, t);
    default:
      throw std::invalid_argument("evaluate_exact_test2: which must be 'p' or 'q'");
  }
}

ModelProblem builtin_problem(const std::string& name) {
  ModelProblem m;
  m.name = name;
  m.domain = {-1.0, 1.0};
  if (name == "test1") {
    m.T = 2.0;
    m.coeff_a = isotropic_tensor(0.01);
    m.coeff_b = isotropic_tensor(0.5);
    m.d1 = 0.01;
    m.d2 = 0.5;
    m.f = t1_f;
    m.g = t1_g;
    m.chi = [](const Point2&) { return 0.3; };
    m.p0 = [](const Point2& x) { return indicator_ball(x, 0.3); };
    m.q0 = [](const Point2& x) { return indicator_ball(x, 0.75); };
    m.p0_smooth = false;
    m.q0_smooth = false;
    return m;
  }
  if (name == "test2") {
    m.T = 0.25;
    m.coeff_a = isotropic_tensor(1.0);
    m.coeff_b = isotropic_tensor(0.25);
    m.d1 = 0.25;
    m.d2 = 1.0;
    m.f = t2_f;
    m.g = t2_g;
    m.chi = [](const Point2&) { return 0.0; };
    m.p0 = [](const Point2& x) { return t2_p(x, 0.0); };
    m.q0 = [](const Point2& x) { return t2_q(x, 0.0); };
    m.dirichlet_p = t2_p;
    m.dirichlet_q = t2_q;
    m.source_p = t2_source_p;
    m.source_q = t2_source_q;

    auto exact = std::make_shared<ExactSolution>();
    exact->p = t2_p;
    exact->q = t2_q;
    exact->grad_p = t2_grad_p;
    exact->grad_q = t2_grad_q;
    exact->dp_dt = t2_dp_dt;
    exact->dq_dt = t2_dq_dt;
    exact->div_a_grad_p = t2_lap_p;
    exact->div_b_grad_q = t2_div_b_grad_q;
    exact->has_kink = t2_kink;
    m.exact = exact;
    return m;
  }
  throw std::invalid_argument("builtin_problem: unknown name '" + name + "'");
}

std::vector<std::string> validate_model(const ModelProblem& m) {
  if (!(m.d1 > 0.0)) throw std::invalid_argument("model: d1 must be positive");
  if (!(m.T > 0.0)) throw std::invalid_argument("model: final time must be positive");
  if (!(m.domain.a < m.domain.b)) throw std::invalid_argument("model: empty domain");
  std::vector<std::string> warnings;

  double lo = 1e300, hi = -1e300;
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j) {
      const Point2 x{m.domain.a + (m.domain.b - m.domain.a) * i / 4.0,
                     m.domain.a + (m.domain.b - m.domain.a) * j / 4.0};
      for (const TensorFn* cf : {&m.coeff_a, &m.coeff_b}) {
        const auto a = (*cf)(x);
        const Mat2 sym{a[0], 0.5 * (a[1] + a[2]), a[3]};
        const auto ev = sym.eigenvalues();
        lo = std::min(lo, ev[0]);
        hi = std::max(hi, ev[1]);
      }
    }
  if (lo < m.d1 - 1e-12 || hi > m.d2 + 1e-12) {
    std::ostringstream os;
    os << "model: sampled coefficient eigenvalues [" << lo << ", " << hi
       << "] leave the declared range [" << m.d1 << ", " << m.d2 << "]";
    warnings.push_back(os.str());
  }

  // Barrier sign on the boundary matters when the boundary data are homogeneous.
  if (!m.dirichlet_p && m.chi) {
    double worst = -1e300;
    for (int i = 0; i <= 16; ++i) {
      const double s = m.domain.a + (m.domain.b - m.domain.a) * i / 16.0;
      for (const Point2 x : {Point2{s, m.domain.a}, Point2{s, m.domain.b}, Point2{m.domain.a, s},
                             Point2{m.domain.b, s}})
        worst = std::max(worst, m.chi(x));
    }
    if (worst > 1e-12) {
      std::ostringstream os;
      os << "model '" << m.name << "': barrier reaches " << worst
         << " on the boundary while the boundary data are homogeneous; the discrete problem "
            "remains well-posed (cell/nodal constraints only) but the continuous compatibility "
            "assumption is violated";
      warnings.push_back(os.str());
    }
  }
  return warnings;
}

TimeGrid TimeGrid::uniform(double T, int steps) {
  if (steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
  if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: final time must be positive");
  TimeGrid g;
  g.knots.resize(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) g.knots[n] = T * n / steps;
  g.knots[steps] = T;
  return g;
}

double TimeGrid::dt_max() const {
  double m = 0.0;
  for (std::size_t n = 0; n + 1 < knots.size(); ++n) m = std::max(m, knots[n + 1] - knots[n]);
  return m;
}

std::vector<double> assemble_load(const GradientDiscretisation& gd, const ScalarFn& f,
                                  const QuadSpec& qs) {
  std::vector<double> out(static_cast<std::size_t>(gd.n_total()), 0.0);
  const TriRule& rule = tri_rule(qs.degree);
  std::vector<QuadPoint> pts;
  for (int c = 0; c < gd.mesh().n_cells(); ++c) {
    const int lvl = qs.subdivision + (qs.cell_subdivision ? qs.cell_subdivision(c) : 0);
    for (const ReconTri& t : gd.recon()[c].tris) {
      pts.clear();
      tri_quad_points_subdivided(rule, t.v0, t.v1, t.v2, lvl, pts);
      for (const auto& q : pts) {
        const double v = f(q.x);
        for (std::size_t k = 0; k < t.dofs.size(); ++k) {
          const double shp = t.val[k][0] + t.val[k][1] * q.x.x + t.val[k][2] * q.x.y;
          if (shp != 0.0) out[t.dofs[k]] += q.w * shp * v;
        }
      }
    }
  }
  return out;
}

namespace {

// Lipschitz bound of the reactions sampled over the bounding box of the
// current fields, inflated by 50%.
double estimate_mlip(const ReactionFn& f, const ReactionFn& g, double plo, double phi, double qlo,
                     double qhi) {
  auto inflate = [](double& a, double& b) {
    const double c = 0.5 * (a + b);
    const double half = 0.75 * (b - a) + 1e-3;
    a = c - half;
    b = c + half;
  };
  inflate(plo, phi);
  inflate(qlo, qhi);
  const int n = 16;
  const double hp = 1e-6 * (phi - plo + 1.0);
  const double hq = 1e-6 * (qhi - qlo + 1.0);
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const double p = plo + (phi - plo) * i / n;
      const double q = qlo + (qhi - qlo) * j / n;
      const double fp = std::abs(f(p + hp, q) - f(p - hp, q)) / (2.0 * hp);
      const double fq = std::abs(f(p, q + hq) - f(p, q - hq)) / (2.0 * hq);
      const double gp = std::abs(g(p + hp, q) - g(p - hp, q)) / (2.0 * hp);
      const double gq = std::abs(g(p, q + hq) - g(p, q - hq)) / (2.0 * hq);
      m1 = std::max(m1, fp + fq);
      m2 = std::max(m2, gp + gq);
    }
  return std::max(m1, m2);
}

// Upper-bound runs solve for -p, which obeys the mirrored lower-bound system.
ModelProblem negate_obstacle(const ModelProblem& m) {
  ModelProblem n = m;
  n.obstacle_upper = false;
  const ReactionFn f = m.f, g = m.g;
  n.f = [f](double p, double q) { return -f(-p, q); };
  n.g = [g](double p, double q) { return g(-p, q); };
  const ScalarFn chi = m.chi, p0 = m.p0;
  n.chi = [chi](const Point2& x) { return -chi(x); };
  n.p0 = [p0](const Point2& x) { return -p0(x); };
  if (m.dirichlet_p) {
    const ScalarTimeFn d = m.dirichlet_p;
    n.dirichlet_p = [d](const Point2& x, double t) { return -d(x, t); };
  }
  if (m.source_p) {
    const ScalarTimeFn s = m.source_p;
    n.source_p = [s](const Point2& x, double t) { return -s(x, t); };
  }
  n.exact = nullptr;  // exact evaluators are not mirrored
  return n;
}

}  // namespace

Trajectory run(const ModelProblem& model_in, GradientDiscretisation& gd, const TimeGrid& grid,
               const RunOptions& opts) {
  std::ostream& log = opts.log ? *opts.log : std::cerr;
  const bool flipped = model_in.obstacle_upper;
  const ModelProblem model = flipped ? negate_obstacle(model_in) : model_in;

  for (const std::string& w : validate_model(model)) log << "[model] warning: " << w << "\n";

  gd.set_barrier(model.chi);
  const int ni = gd.n_interior();
  const int nl = gd.n_lift();

  SparseMatrix mass_full = assemble_mass(gd);
  LiftedOperator mass_q = split_operator(mass_full, ni, nl);
  LiftedOperator mass_p;
  if (opts.lump_mass_p) {
    const std::vector<double> d = lump_mass(mass_q.full);
    std::vector<Triplet> t;
    for (int i = 0; i < static_cast<int>(d.size()); ++i)
      if (d[i] != 0.0) t.push_back({i, i, d[i]});
    mass_p = split_operator(SparseMatrix::from_triplets(ni + nl, ni + nl, t), ni, nl);
  } else {
    mass_p = split_operator(mass_q.full, ni, nl);
  }
  LiftedOperator diff_p = split_operator(assemble_diffusion(gd, model.coeff_a), ni, nl);
  LiftedOperator diff_q = split_operator(assemble_diffusion(gd, model.coeff_b), ni, nl);

  std::vector<double> lower(gd.barrier_dof().begin(), gd.barrier_dof().begin() + ni);

  Trajectory traj;
  traj.gd = &gd;
  traj.grid = grid;

  InitialInterpolation init = interpolate_initial(gd, model.p0, model.q0, model.p0_smooth,
                                                  model.q0_smooth, opts.init_subdivision);
  if (!init.p_feasible) {
    if (!opts.project_infeasible_initial)
      throw SolverError("run: interpolated initial datum violates the barrier by " +
                        std::to_string(-init.min_slack));
    log << "[run] WARNING: initial datum is infeasible against the barrier (worst violation "
        << -init.min_slack << "); projecting onto the discrete constraint set\n";
    for (int i = 0; i < ni; ++i)
      if (lower[i] != kUnconstrained) init.p[i] = std::max(init.p[i], lower[i]);
    traj.projected_initial = true;
  }
  traj.p.push_back(std::move(init.p));
  traj.q.push_back(std::move(init.q));

  const QuadSpec source_quad{5, opts.source_quad_subdivision, nullptr};

  bool warned_dt = false;
  SparseMatrix sys_p, sys_q;
  double dt_built = -1.0;
  for (int n = 0; n < grid.steps(); ++n) {
    const double t1 = grid.knots[n + 1];
    const double dt = grid.dt(n);
    if (dt != dt_built) {
      sys_p = add_scaled(mass_p.ii, 1.0 / dt, diff_p.ii, 1.0);
      sys_q = add_scaled(mass_q.ii, 1.0 / dt, diff_q.ii, 1.0);
      dt_built = dt;
    }

    StepSystem sys;
    sys.n_interior = ni;
    sys.n_lift = nl;
    sys.mass_p = &mass_p;
    sys.mass_q = &mass_q;
    sys.diff_p = &diff_p;
    sys.diff_q = &diff_q;
    sys.sys_p = &sys_p;
    sys.sys_q = &sys_q;
    sys.dt = dt;
    sys.p_prev = &traj.p.back();
    sys.q_prev = &traj.q.back();
    sys.f = model.f;
    sys.g = model.g;
    sys.lower = &lower;

    if (model.m_lip > 0.0) {
      sys.m_lip = model.m_lip;
    } else {
      const auto& pv = traj.p.back();
      const auto& qv = traj.q.back();
      sys.m_lip = estimate_mlip(model.f, model.g, *std::min_element(pv.begin(), pv.end()),
                                *std::max_element(pv.begin(), pv.end()),
                                *std::min_element(qv.begin(), qv.end()),
                                *std::max_element(qv.begin(), qv.end()));
    }
    if (!warned_dt && sys.m_lip > 0.0 && dt >= 0.5 / sys.m_lip) {
      log << "[run] warning: dt = " << dt
          << " exceeds the contraction bound 1/(2M) = " << 0.5 / sys.m_lip << " (M = " << sys.m_lip
          << "); proceeding, convergence is not guaranteed\n";
      warned_dt = true;
    }

    if (nl > 0) {
      sys.p_lift = model.dirichlet_p ? gd.dirichlet_values(model.dirichlet_p, t1)
                                     : std::vector<double>(static_cast<std::size_t>(nl), 0.0);
      sys.q_lift = model.dirichlet_q ? gd.dirichlet_values(model.dirichlet_q, t1)
                                     : std::vector<double>(static_cast<std::size_t>(nl), 0.0);
    }
    if (model.source_p) {
      QuadSpec qs = source_quad;
      if (model.exact && model.exact->has_kink) {
        const Mesh& mesh = gd.mesh();
        const auto kink = model.exact->has_kink;
        qs.cell_subdivision = [&mesh, kink, t1](int c) {
          std::vector<Point2> poly;
          for (int v : mesh.cells()[c].vertices) poly.push_back(mesh.vertices()[v]);
          return kink(poly, t1) ? 2 : 0;
        };
      }
      sys.source_p = assemble_load(gd, [&](const Point2& x) { return model.source_p(x, t1); }, qs);
      sys.source_p.resize(static_cast<std::size_t>(ni));
    }
    if (model.source_q) {
      sys.source_q =
          assemble_load(gd, [&](const Point2& x) { return model.source_q(x, t1); }, source_quad);
      sys.source_q.resize(static_cast<std::size_t>(ni));
    }

    StepResult res;
    try {
      res = advance_step(sys, opts.advance);
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(n + 1) + " (t = " + std::to_string(t1) +
                        "): " + e.what());
    }
    traj.p.push_back(std::move(res.p));
    traj.q.push_back(std::move(res.q));
    traj.reports.push_back(std::move(res.report));
    traj.feasibility.push_back(res.feasibility_slack);
    traj.complementarity.push_back(res.complementarity);
  }

  if (flipped) {
    for (auto& v : traj.p)
      for (double& x : v) x = -x;
  }
  return traj;
}

}  // namespace biogds
