#include "biogds/scheme_hmm.hpp"

#include <cmath>
#include <stdexcept>

#include "biogds/rng.hpp"

namespace biogds {

namespace {

class HmmDiscretisation final : public GradientDiscretisation {
 public:
  HmmDiscretisation(const Mesh& mesh, const HmmOptions& opts) : opts_(opts) {
    mesh_ = &mesh;
    name_ = "hmm";

    face_dof_.assign(static_cast<std::size_t>(mesh.n_faces()), -1);
    const int nc = mesh.n_cells();
    int next_interior = nc;
    for (int f = 0; f < mesh.n_faces(); ++f)
      if (mesh.faces()[f].cell_right != -1) face_dof_[f] = next_interior++;
    n_interior_ = next_interior;
    int next_lift = n_interior_;
    for (int f : mesh.boundary_faces()) face_dof_[f] = next_lift++;
    n_lift_ = next_lift - n_interior_;

    build_recon();
  }

  std::vector<double> interpolate(const ScalarFn& f) const override {
    return means(f, 0);
  }

  std::vector<double> interpolate_mean(const ScalarFn& f, int subdivision) const override {
    return means(f, subdivision);
  }

  std::vector<double> dirichlet_values(const ScalarTimeFn& g, double t) const override {
    std::vector<double> out(static_cast<std::size_t>(n_lift_), 0.0);
    for (int f : mesh_->boundary_faces()) {
      const int d = face_dof_[f] - n_interior_;
      if (opts_.face_value_mean) {
        const Face& face = mesh_->faces()[f];
        std::vector<QuadPoint> pts;
        segment_quad_points(3, mesh_->vertices()[face.v0], mesh_->vertices()[face.v1], pts);
        double s = 0.0;
        for (const auto& q : pts) s += q.w * g(q.x, t);
        out[d] = s / face.length;
      } else {
        out[d] = g(mesh_->faces()[f].midpoint, t);
      }
    }
    return out;
  }

  void face_trace(int face, int cell, std::span<const double> s, FaceTrace& out) const override {
    (void)face;
    out.dofs.assign(1, cell);  // cell dof id equals the cell index
    out.shape.assign(1, std::vector<double>(s.size(), 1.0));
  }

  Visualization visualization() const override {
    Visualization v;
    v.points = mesh_->vertices();
    v.point_data = false;
    for (int c = 0; c < mesh_->n_cells(); ++c) {
      v.cells.push_back(mesh_->cells()[c].vertices);
      v.data_dof.push_back(c);
    }
    return v;
  }

 protected:
  std::vector<double> barrier_bounds(const ScalarFn&,
                                     const std::vector<double>& cell_means) const override {
    std::vector<double> lo(static_cast<std::size_t>(n_total()), kUnconstrained);
    for (int c = 0; c < mesh_->n_cells(); ++c) lo[c] = cell_means[c];
    return lo;
  }

 private:
  void build_recon() {
    const Mesh& mesh = *mesh_;
    recon_.resize(static_cast<std::size_t>(mesh.n_cells()));
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const Cell& cell = mesh.cells()[c];
      const std::size_t m = cell.faces.size();

      // Local dofs: cell first, then its faces in cycle order.
      std::vector<int> dofs(m + 1);
      dofs[0] = c;
      for (std::size_t j = 0; j < m; ++j) dofs[j + 1] = face_dof_[cell.faces[j]];

      // Green-formula gradient coefficients G_K.
      std::vector<Point2> gcoef(m + 1, Point2{0.0, 0.0});
      for (std::size_t j = 0; j < m; ++j) {
        const int fid = cell.faces[j];
        const double len = mesh.faces()[fid].length;
        const Point2 n = mesh.outward_normal(fid, c);
        gcoef[j + 1] = (len / cell.area) * n;
      }
      for (std::size_t j = 0; j < m; ++j) gcoef[0] += -1.0 * gcoef[j + 1];

      CellRecon cr;
      cr.tris.reserve(m);
      for (std::size_t j = 0; j < m; ++j) {
        const int fid = cell.faces[j];
        const Point2 a = mesh.vertices()[cell.vertices[j]];
        const Point2 b = mesh.vertices()[cell.vertices[(j + 1) % m]];
        ReconTri t;
        t.v0 = cell.barycenter;
        t.v1 = a;
        t.v2 = b;
        t.area = tri_signed_area(t.v0, t.v1, t.v2);
        const double len = mesh.faces()[fid].length;
        const double d = 2.0 * t.area / len;  // distance barycenter -> face line
        if (!(d > 1e-14 * len))
          throw std::runtime_error("build_hmm: degenerate cell geometry in cell " +
                                   std::to_string(c) + " (face distance <= 0)");
        const Point2 n = mesh.outward_normal(fid, c);
        const Point2 xs = mesh.faces()[fid].midpoint;
        const Point2 rel = xs - cell.barycenter;

        t.dofs = dofs;
        t.val.assign(m + 1, {0.0, 0.0, 0.0});
        t.val[0] = {1.0, 0.0, 0.0};  // Pi_D is the cell value
        t.grad.resize(m + 1);
        const double sod = opts_.stab / d;
        for (std::size_t k = 0; k <= m; ++k) {
          double r = -dot(gcoef[k], rel);  // residual coefficient v_sigma - v_K - G.(x_s - x_K)
          if (k == j + 1) r += 1.0;
          if (k == 0) r -= 1.0;
          t.grad[k] = gcoef[k] + (sod * r) * n;
        }
        cr.tris.push_back(std::move(t));
      }
      recon_[static_cast<std::size_t>(c)] = std::move(cr);
    }
  }

  std::vector<double> means(const ScalarFn& f, int subdivision) const {
    std::vector<double> out(static_cast<std::size_t>(n_total()), 0.0);
    std::vector<QuadPoint> pts;
    for (int c = 0; c < mesh_->n_cells(); ++c) {
      double s = 0.0;
      for (const ReconTri& t : recon_[c].tris) {
        pts.clear();
        tri_quad_points_subdivided(tri_rule_deg5(), t.v0, t.v1, t.v2, subdivision, pts);
        for (const auto& q : pts) s += q.w * f(q.x);
      }
      out[c] = s / mesh_->cells()[c].area;
    }
    const int pieces = 1 << subdivision;
    for (int fid = 0; fid < mesh_->n_faces(); ++fid) {
      const Face& face = mesh_->faces()[fid];
      const Point2 a = mesh_->vertices()[face.v0];
      const Point2 b = mesh_->vertices()[face.v1];
      double s = 0.0;
      for (int p = 0; p < pieces; ++p) {
        pts.clear();
        const Point2 pa = a + (static_cast<double>(p) / pieces) * (b - a);
        const Point2 pb = a + (static_cast<double>(p + 1) / pieces) * (b - a);
        segment_quad_points(3, pa, pb, pts);
        for (const auto& q : pts) s += q.w * f(q.x);
      }
      out[face_dof_[fid]] = s / face.length;
    }
    return out;
  }

  HmmOptions opts_;
  std::vector<int> face_dof_;
};

// One consistent solve detects a kernel of the gradient Gram: for b = K r the
// CG iterate lives in range(K), so any kernel component of r survives in r - x.
void probe_definiteness(const GradientDiscretisation& gd) {
  const SparseMatrix gram = gradient_gram(gd);
  const SparseMatrix kii = gram.block(interior_ids(gd), interior_ids(gd));
  const int n = kii.rows();
  if (n == 0) return;
  Rng rng(20240517ULL);
  std::vector<double> r(static_cast<std::size_t>(n));
  double rmax = 0.0;
  for (int i = 0; i < n; ++i) {
    r[i] = rng.uniform(-1.0, 1.0);
    rmax = std::max(rmax, std::abs(r[i]));
  }
  const std::vector<double> b = kii.multiply(r);
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  CgOptions cg;
  cg.tol = 1e-11;
  const CgResult res = cg_solve(kii, b, x, cg);
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(r[i] - x[i]));
  if (!res.converged || dmax > 1e-6 * rmax)
    throw std::runtime_error(
        "build_hmm: gradient reconstruction norm is not definite on this mesh "
        "(increase the stabilization parameter)");
}

}  // namespace

std::unique_ptr<GradientDiscretisation> build_hmm(const Mesh& mesh, const HmmOptions& opts) {
  if (opts.stab < 0.0) throw std::invalid_argument("build_hmm: stabilization must be positive");
  auto gd = std::make_unique<HmmDiscretisation>(mesh, opts);
  if (opts.check_definiteness) probe_definiteness(*gd);
  return gd;
}

}  // namespace biogds
