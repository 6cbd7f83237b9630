#include "biogds/gdm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "biogds/parallel.hpp"
#include "biogds/rng.hpp"

namespace biogds {

namespace {

// Edge-midpoint rule: degree 2, exact for products of affine reconstructions.
void midpoint_rule_points(const ReconTri& t, std::vector<QuadPoint>& out) {
  const double w = t.area / 3.0;
  out.push_back({0.5 * (t.v0 + t.v1), w});
  out.push_back({0.5 * (t.v1 + t.v2), w});
  out.push_back({0.5 * (t.v2 + t.v0), w});
}

int cell_level(const QuadSpec& q, int cell) {
  return q.subdivision + (q.cell_subdivision ? q.cell_subdivision(cell) : 0);
}

}  // namespace

void GradientDiscretisation::set_barrier(const ScalarFn& chi) {
  barrier_cell_.assign(static_cast<std::size_t>(mesh_->n_cells()), 0.0);
  std::vector<QuadPoint> pts;
  for (int c = 0; c < mesh_->n_cells(); ++c) {
    double integral = 0.0;
    for (const ReconTri& t : recon_[c].tris) {
      pts.clear();
      tri_quad_points(tri_rule_deg5(), t.v0, t.v1, t.v2, pts);
      for (const auto& q : pts) integral += q.w * chi(q.x);
    }
    barrier_cell_[c] = integral / mesh_->cells()[c].area;
  }
  barrier_dof_ = barrier_bounds(chi, barrier_cell_);
  if (static_cast<int>(barrier_dof_.size()) != n_total())
    throw std::logic_error("barrier_bounds: wrong size");
  has_barrier_ = true;
}

SparseMatrix assemble_mass(const GradientDiscretisation& gd) {
  const int n = gd.n_total();
  const auto& recon = gd.recon();
  using Chunk = std::vector<Triplet>;
  Chunk all = parallel_map_reduce<Chunk>(
      recon.size(), 128,
      [&](std::size_t b, std::size_t e) {
        Chunk out;
        std::vector<QuadPoint> pts;
        for (std::size_t c = b; c < e; ++c) {
          for (const ReconTri& t : recon[c].tris) {
            pts.clear();
            midpoint_rule_points(t, pts);
            const std::size_t nd = t.dofs.size();
            for (std::size_t i = 0; i < nd; ++i) {
              if (t.val[i][0] == 0.0 && t.val[i][1] == 0.0 && t.val[i][2] == 0.0) continue;
              for (std::size_t j = 0; j < nd; ++j) {
                if (t.val[j][0] == 0.0 && t.val[j][1] == 0.0 && t.val[j][2] == 0.0) continue;
                double m = 0.0;
                for (const auto& q : pts)
                  m += q.w * (t.val[i][0] + t.val[i][1] * q.x.x + t.val[i][2] * q.x.y) *
                       (t.val[j][0] + t.val[j][1] * q.x.x + t.val[j][2] * q.x.y);
                out.push_back({t.dofs[i], t.dofs[j], m});
              }
            }
          }
        }
        return out;
      },
      [](Chunk& acc, Chunk&& part) {
        acc.insert(acc.end(), part.begin(), part.end());
      },
      Chunk{});
  return SparseMatrix::from_triplets(n, n, all);
}

std::vector<double> lump_mass(const SparseMatrix& mass) {
  std::vector<double> d(static_cast<std::size_t>(mass.rows()), 0.0);
  for (int r = 0; r < mass.rows(); ++r)
    for (int k = mass.row_ptr()[r]; k < mass.row_ptr()[r + 1]; ++k)
      d[r] += mass.values()[k];
  return d;
}

SparseMatrix assemble_diffusion(const GradientDiscretisation& gd, const TensorFn& coeff) {
  const int n = gd.n_total();
  const auto& recon = gd.recon();
  using Chunk = std::vector<Triplet>;
  Chunk all = parallel_map_reduce<Chunk>(
      recon.size(), 128,
      [&](std::size_t b, std::size_t e) {
        Chunk out;
        std::vector<QuadPoint> pts;
        for (std::size_t c = b; c < e; ++c) {
          for (const ReconTri& t : recon[c].tris) {
            pts.clear();
            tri_quad_points(tri_rule_deg5(), t.v0, t.v1, t.v2, pts);
            // Average coefficient over the patch (gradients are constant here).
            double axx = 0.0, axy = 0.0, ayy = 0.0;
            for (const auto& q : pts) {
              const auto a = coeff(q.x);
              const double scale = std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2]),
                                             std::abs(a[3]), 1e-300});
              if (std::abs(a[1] - a[2]) > 1e-12 * scale)
                throw std::invalid_argument(
                    "assemble_diffusion: coefficient matrix is not symmetric");
              const Mat2 sym{a[0], 0.5 * (a[1] + a[2]), a[3]};
              if (sym.eigenvalues()[0] <= 0.0)
                throw std::invalid_argument(
                    "assemble_diffusion: coefficient matrix is not positive definite");
              axx += q.w * sym.xx;
              axy += q.w * sym.xy;
              ayy += q.w * sym.yy;
            }
            const Mat2 abar{axx, axy, ayy};  // already scaled by patch area
            const std::size_t nd = t.dofs.size();
            for (std::size_t i = 0; i < nd; ++i) {
              const Point2 agi = abar.apply(t.grad[i]);
              for (std::size_t j = 0; j < nd; ++j)
                out.push_back({t.dofs[i], t.dofs[j], dot(agi, t.grad[j])});
            }
          }
        }
        return out;
      },
      [](Chunk& acc, Chunk&& part) {
        acc.insert(acc.end(), part.begin(), part.end());
      },
      Chunk{});
  return SparseMatrix::from_triplets(n, n, all);
}

SparseMatrix gradient_gram(const GradientDiscretisation& gd) {
  return assemble_diffusion(gd, isotropic_tensor(1.0));
}

std::vector<int> interior_ids(const GradientDiscretisation& gd) {
  std::vector<int> ids(static_cast<std::size_t>(gd.n_interior()));
  for (int i = 0; i < gd.n_interior(); ++i) ids[i] = i;
  return ids;
}

std::vector<int> lift_ids(const GradientDiscretisation& gd) {
  std::vector<int> ids(static_cast<std::size_t>(gd.n_lift()));
  for (int i = 0; i < gd.n_lift(); ++i) ids[i] = gd.n_interior() + i;
  return ids;
}

namespace {

// Shared worker for the L2 quantities: integrates f(cell, x, value, gradient).
template <typename Integrand>
double integrate_squared(const GradientDiscretisation& gd, const std::vector<double>& v,
                         const QuadSpec& qs, Integrand f) {
  const auto& recon = gd.recon();
  const TriRule& rule = tri_rule(qs.degree);
  return parallel_map_reduce<double>(
      recon.size(), 64,
      [&](std::size_t b, std::size_t e) {
        double acc = 0.0;
        std::vector<QuadPoint> pts;
        for (std::size_t c = b; c < e; ++c) {
          const int lvl = cell_level(qs, static_cast<int>(c));
          for (const ReconTri& t : recon[c].tris) {
            pts.clear();
            tri_quad_points_subdivided(rule, t.v0, t.v1, t.v2, lvl, pts);
            const Point2 g = t.gradient_of(v);
            for (const auto& q : pts) acc += q.w * f(static_cast<int>(c), q.x, t.value_at(v, q.x), g);
          }
        }
        return acc;
      },
      [](double& acc, double&& p) { acc += p; }, 0.0);
}

}  // namespace

double l2_error_value(const GradientDiscretisation& gd, const std::vector<double>& v,
                      const ScalarFn& exact, const QuadSpec& q) {
  const double s = integrate_squared(gd, v, q, [&](int, const Point2& x, double val, const Point2&) {
    const double d = val - exact(x);
    return d * d;
  });
  return std::sqrt(std::max(0.0, s));
}

double l2_error_gradient(const GradientDiscretisation& gd, const std::vector<double>& v,
                         const VectorFn& exact_grad, const QuadSpec& q) {
  const double s =
      integrate_squared(gd, v, q, [&](int, const Point2& x, double, const Point2& g) {
        const Point2 d = g - exact_grad(x);
        return dot(d, d);
      });
  return std::sqrt(std::max(0.0, s));
}

double l2_norm_value(const GradientDiscretisation& gd, const std::vector<double>& v,
                     const QuadSpec& q) {
  const double s = integrate_squared(
      gd, v, q, [](int, const Point2&, double val, const Point2&) { return val * val; });
  return std::sqrt(std::max(0.0, s));
}

double l2_norm_gradient(const GradientDiscretisation& gd, const std::vector<double>& v,
                        const QuadSpec& q) {
  const double s = integrate_squared(
      gd, v, q, [](int, const Point2&, double, const Point2& g) { return dot(g, g); });
  return std::sqrt(std::max(0.0, s));
}

double coercivity_constant(const SparseMatrix& mass_ii, const SparseMatrix& gram_ii,
                           const PowerIterationOptions& opts) {
  const int n = gram_ii.rows();
  if (n == 0) return 0.0;
  std::vector<double> v(static_cast<std::size_t>(n), 1.0);
  double lambda = 0.0;
  CgOptions cg;
  cg.tol = opts.cg_tol;
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::vector<double> mv = mass_ii.multiply(v);
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    const CgResult r = cg_solve(gram_ii, mv, w, cg);
    if (!r.converged)
      throw std::runtime_error("coercivity_constant: gradient Gram solve failed (singular?)");
    const double num = mass_ii.quad_form(w);
    const double den = gram_ii.quad_form(w);
    if (den <= 0.0)
      throw std::runtime_error("coercivity_constant: gradient Gram is not positive definite");
    const double lambda_new = num / den;
    const double knorm = std::sqrt(den);
    for (int i = 0; i < n; ++i) v[i] = w[i] / knorm;
    if (it > 0 && std::abs(lambda_new - lambda) <= opts.tol * std::abs(lambda_new)) {
      lambda = lambda_new;
      break;
    }
    lambda = lambda_new;
  }
  return std::sqrt(std::max(0.0, lambda));
}

double consistency_defect_of(const GradientDiscretisation& gd, const std::vector<double>& w,
                             const ScalarFn& phi, const VectorFn& grad_phi, const QuadSpec& q) {
  return l2_error_value(gd, w, phi, q) + l2_error_gradient(gd, w, grad_phi, q);
}

double consistency_defect(const GradientDiscretisation& gd, const ScalarFn& phi,
                          const VectorFn& grad_phi, const QuadSpec& q) {
  return consistency_defect_of(gd, gd.interpolate(phi), phi, grad_phi, q);
}

std::vector<double> min_interpolant(const GradientDiscretisation& gd, const SparseMatrix& mass,
                                    const SparseMatrix& gram, const ScalarFn& phi,
                                    const VectorFn& grad_phi) {
  const int n = gd.n_total();
  // rhs_i = int (Pi_D e_i phi + grad_D e_i . grad phi)
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  std::vector<QuadPoint> pts;
  for (const CellRecon& cr : gd.recon())
    for (const ReconTri& t : cr.tris) {
      pts.clear();
      tri_quad_points(tri_rule_deg5(), t.v0, t.v1, t.v2, pts);
      for (const auto& q : pts) {
        const double f = phi(q.x);
        const Point2 gf = grad_phi(q.x);
        for (std::size_t k = 0; k < t.dofs.size(); ++k)
          rhs[t.dofs[k]] += q.w * ((t.val[k][0] + t.val[k][1] * q.x.x + t.val[k][2] * q.x.y) * f +
                                   dot(t.grad[k], gf));
      }
    }

  std::vector<Triplet> sum;
  sum.reserve(mass.nnz() + gram.nnz());
  for (int r = 0; r < n; ++r) {
    for (int k = mass.row_ptr()[r]; k < mass.row_ptr()[r + 1]; ++k)
      sum.push_back({r, mass.col_idx()[k], mass.values()[k]});
    for (int k = gram.row_ptr()[r]; k < gram.row_ptr()[r + 1]; ++k)
      sum.push_back({r, gram.col_idx()[k], gram.values()[k]});
  }
  const SparseMatrix mk = SparseMatrix::from_triplets(n, n, sum);

  std::vector<double> x = gd.interpolate(phi);  // lift values kept, interior overwritten
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (int i = gd.n_interior(); i < n; ++i) fixed[i] = 1;
  for (int i = 0; i < gd.n_interior(); ++i) x[i] = 0.0;
  CgOptions cg;
  cg.tol = 1e-12;
  const CgResult r = cg_solve(mk, rhs, x, cg, &fixed);
  if (!r.converged) throw std::runtime_error("min_interpolant: (M+K) solve did not converge");
  return x;
}

std::vector<double> conformity_defect_functional(const GradientDiscretisation& gd,
                                                 const VectorFn& psi,
                                                 const ConformityOptions& opts) {
  const Mesh& mesh = gd.mesh();
  std::vector<double> ell(static_cast<std::size_t>(gd.n_total()), 0.0);

  // Volume part: (grad_D - grad Pi_D) . psi on each patch.
  const TriRule& rule = tri_rule(opts.quad.degree);
  std::vector<QuadPoint> pts;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const int lvl = cell_level(opts.quad, c);
    for (const ReconTri& t : gd.recon()[c].tris) {
      pts.clear();
      tri_quad_points_subdivided(rule, t.v0, t.v1, t.v2, lvl, pts);
      for (const auto& q : pts) {
        const Point2 p = psi(q.x);
        for (std::size_t k = 0; k < t.dofs.size(); ++k) {
          const Point2 nc{t.grad[k].x - t.val[k][1], t.grad[k].y - t.val[k][2]};
          ell[t.dofs[k]] += q.w * dot(nc, p);
        }
      }
    }
  }

  // Face part: the Pi_D div(psi) term written as boundary fluxes of each cell.
  // Both sides of a face use identical sample points and shape values, so a
  // continuous trace cancels exactly.
  const int nq = opts.face_quad_points;
  std::vector<double> s(static_cast<std::size_t>(nq)), fw(static_cast<std::size_t>(nq));
  FaceTrace tr;
  std::vector<std::pair<int, double>> contrib;
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces()[f];
    const Point2 a = mesh.vertices()[face.v0];
    const Point2 b = mesh.vertices()[face.v1];
    std::vector<QuadPoint> seg;
    segment_quad_points(nq, a, b, seg);
    for (int k = 0; k < nq; ++k) {
      const Point2& x = seg[k].x;
      // parameter along v0 -> v1
      s[k] = face.length > 0.0 ? dist(a, x) / face.length : 0.0;
      fw[k] = seg[k].w * dot(psi(x), face.normal);
    }
    contrib.clear();
    for (int side = 0; side < 2; ++side) {
      const int cell = side == 0 ? face.cell_left : face.cell_right;
      if (cell < 0) continue;
      const double orient = side == 0 ? 1.0 : -1.0;
      gd.face_trace(f, cell, std::span<const double>(s.data(), s.size()), tr);
      for (std::size_t d = 0; d < tr.dofs.size(); ++d) {
        double m = 0.0;
        for (int k = 0; k < nq; ++k) m += tr.shape[d][k] * fw[k];
        contrib.push_back({tr.dofs[d], orient * m});
      }
    }
    // Merge per dof before scattering so that opposite sides cancel exactly.
    std::sort(contrib.begin(), contrib.end(),
              [](const auto& u, const auto& v) { return u.first < v.first; });
    for (std::size_t i = 0; i < contrib.size();) {
      std::size_t j = i;
      double sum = 0.0;
      while (j < contrib.size() && contrib[j].first == contrib[i].first) sum += contrib[j++].second;
      ell[contrib[i].first] += sum;
      i = j;
    }
  }
  return ell;
}

double limit_conformity_defect(const GradientDiscretisation& gd, const SparseMatrix& gram_ii,
                               const VectorFn& psi, const ConformityOptions& opts) {
  const std::vector<double> ell = conformity_defect_functional(gd, psi, opts);
  std::vector<double> li(static_cast<std::size_t>(gd.n_interior()));
  double maxa = 0.0;
  for (int i = 0; i < gd.n_interior(); ++i) {
    li[i] = ell[i];
    maxa = std::max(maxa, std::abs(li[i]));
  }
  if (maxa == 0.0) return 0.0;
  std::vector<double> z(li.size(), 0.0);
  CgOptions cg;
  cg.tol = opts.cg_tol;
  const CgResult r = cg_solve(gram_ii, li, z, cg);
  if (!r.converged)
    throw std::runtime_error("limit_conformity_defect: Riesz solve failed (singular Gram?)");
  double s2 = 0.0;
  for (std::size_t i = 0; i < li.size(); ++i) s2 += li[i] * z[i];
  return std::sqrt(std::max(0.0, s2));
}

InitialInterpolation interpolate_initial(const GradientDiscretisation& gd, const ScalarFn& p0,
                                         const ScalarFn& q0, bool p0_smooth, bool q0_smooth,
                                         int subdivision) {
  InitialInterpolation out;
  out.p = p0_smooth ? gd.interpolate(p0) : gd.interpolate_mean(p0, subdivision);
  out.q = q0_smooth ? gd.interpolate(q0) : gd.interpolate_mean(q0, subdivision);
  if (gd.has_barrier()) {
    double slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < gd.n_interior(); ++i) {
      const double lo = gd.barrier_dof()[i];
      if (lo == kUnconstrained) continue;
      slack = std::min(slack, out.p[i] - lo);
    }
    if (slack == std::numeric_limits<double>::infinity()) slack = 0.0;
    out.min_slack = slack;
    out.p_feasible = slack >= -1e-12;
  }
  return out;
}

}  // namespace biogds
