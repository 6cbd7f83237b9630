#include "biogds/scheme_p1.hpp"

#include <cmath>
#include <stdexcept>

namespace biogds {

namespace {

class P1Discretisation final : public GradientDiscretisation {
 public:
  explicit P1Discretisation(const Mesh& mesh) {
    mesh_ = &mesh;
    name_ = "p1";

    std::vector<char> on_boundary(static_cast<std::size_t>(mesh.n_vertices()), 0);
    for (int f : mesh.boundary_faces()) {
      on_boundary[mesh.faces()[f].v0] = 1;
      on_boundary[mesh.faces()[f].v1] = 1;
    }
    vertex_dof_.assign(static_cast<std::size_t>(mesh.n_vertices()), -1);
    int next = 0;
    for (int v = 0; v < mesh.n_vertices(); ++v)
      if (!on_boundary[v]) vertex_dof_[v] = next++;
    center_dof_.resize(static_cast<std::size_t>(mesh.n_cells()));
    for (int c = 0; c < mesh.n_cells(); ++c) center_dof_[c] = next++;
    n_interior_ = next;
    for (int v = 0; v < mesh.n_vertices(); ++v)
      if (on_boundary[v]) vertex_dof_[v] = next++;
    n_lift_ = next - n_interior_;

    vertex_cells_.resize(static_cast<std::size_t>(mesh.n_vertices()));
    for (int c = 0; c < mesh.n_cells(); ++c)
      for (int v : mesh.cells()[c].vertices) vertex_cells_[v].push_back(c);

    build_recon();
  }

  std::vector<double> interpolate(const ScalarFn& f) const override {
    std::vector<double> out(static_cast<std::size_t>(n_total()), 0.0);
    for (int v = 0; v < mesh_->n_vertices(); ++v) out[vertex_dof_[v]] = f(mesh_->vertices()[v]);
    for (int c = 0; c < mesh_->n_cells(); ++c) out[center_dof_[c]] = f(mesh_->cells()[c].barycenter);
    return out;
  }

  std::vector<double> interpolate_mean(const ScalarFn& f, int subdivision) const override {
    // Cell means, then vertex values as area-weighted averages of the adjacent
    // cells. Preserves lower bounds by constants, which nodal evaluation of
    // discontinuous data would not.
    std::vector<double> cell_mean(static_cast<std::size_t>(mesh_->n_cells()), 0.0);
    std::vector<QuadPoint> pts;
    for (int c = 0; c < mesh_->n_cells(); ++c) {
      double s = 0.0;
      for (const ReconTri& t : recon_[c].tris) {
        pts.clear();
        tri_quad_points_subdivided(tri_rule_deg5(), t.v0, t.v1, t.v2, subdivision, pts);
        for (const auto& q : pts) s += q.w * f(q.x);
      }
      cell_mean[c] = s / mesh_->cells()[c].area;
    }
    std::vector<double> out(static_cast<std::size_t>(n_total()), 0.0);
    for (int c = 0; c < mesh_->n_cells(); ++c) out[center_dof_[c]] = cell_mean[c];
    for (int v = 0; v < mesh_->n_vertices(); ++v) {
      double wsum = 0.0, s = 0.0;
      for (int c : vertex_cells_[v]) {
        s += mesh_->cells()[c].area * cell_mean[c];
        wsum += mesh_->cells()[c].area;
      }
      out[vertex_dof_[v]] = wsum > 0.0 ? s / wsum : 0.0;
    }
    return out;
  }

  std::vector<double> dirichlet_values(const ScalarTimeFn& g, double t) const override {
    std::vector<double> out(static_cast<std::size_t>(n_lift_), 0.0);
    for (int v = 0; v < mesh_->n_vertices(); ++v)
      if (vertex_dof_[v] >= n_interior_)
        out[vertex_dof_[v] - n_interior_] = g(mesh_->vertices()[v], t);
    return out;
  }

  void face_trace(int face, int cell, std::span<const double> s, FaceTrace& out) const override {
    (void)cell;  // the trace is continuous: identical from both sides
    const Face& f = mesh_->faces()[face];
    out.dofs.assign({vertex_dof_[f.v0], vertex_dof_[f.v1]});
    out.shape.assign(2, std::vector<double>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) {
      out.shape[0][k] = 1.0 - s[k];
      out.shape[1][k] = s[k];
    }
  }

  Visualization visualization() const override {
    Visualization v;
    v.point_data = true;
    v.points = mesh_->vertices();
    v.data_dof.resize(mesh_->n_vertices() + mesh_->n_cells());
    for (int i = 0; i < mesh_->n_vertices(); ++i) v.data_dof[i] = vertex_dof_[i];
    for (int c = 0; c < mesh_->n_cells(); ++c) {
      v.points.push_back(mesh_->cells()[c].barycenter);
      v.data_dof[mesh_->n_vertices() + c] = center_dof_[c];
    }
    for (int c = 0; c < mesh_->n_cells(); ++c) {
      const Cell& cell = mesh_->cells()[c];
      const int bc = mesh_->n_vertices() + c;
      const int m = static_cast<int>(cell.vertices.size());
      for (int j = 0; j < m; ++j)
        v.cells.push_back({bc, cell.vertices[j], cell.vertices[(j + 1) % m]});
    }
    return v;
  }

 protected:
  std::vector<double> barrier_bounds(const ScalarFn& chi,
                                     const std::vector<double>&) const override {
    // Nodal bounds; for the constant barriers of interest this coincides with
    // the per-cell means.
    std::vector<double> lo(static_cast<std::size_t>(n_total()), kUnconstrained);
    for (int v = 0; v < mesh_->n_vertices(); ++v)
      if (vertex_dof_[v] < n_interior_) lo[vertex_dof_[v]] = chi(mesh_->vertices()[v]);
    for (int c = 0; c < mesh_->n_cells(); ++c)
      lo[center_dof_[c]] = chi(mesh_->cells()[c].barycenter);
    return lo;
  }

 private:
  void build_recon() {
    const Mesh& mesh = *mesh_;
    recon_.resize(static_cast<std::size_t>(mesh.n_cells()));
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const Cell& cell = mesh.cells()[c];
      const std::size_t m = cell.vertices.size();
      CellRecon cr;
      cr.tris.reserve(m);
      for (std::size_t j = 0; j < m; ++j) {
        ReconTri t;
        t.v0 = cell.barycenter;
        t.v1 = mesh.vertices()[cell.vertices[j]];
        t.v2 = mesh.vertices()[cell.vertices[(j + 1) % m]];
        t.area = tri_signed_area(t.v0, t.v1, t.v2);
        if (!(t.area > 0.0))
          throw std::runtime_error("build_p1: degenerate triangle in cell " + std::to_string(c));
        t.dofs = {center_dof_[c], vertex_dof_[cell.vertices[j]],
                  vertex_dof_[cell.vertices[(j + 1) % m]]};
        const Point2 p[3] = {t.v0, t.v1, t.v2};
        t.val.resize(3);
        t.grad.resize(3);
        for (int k = 0; k < 3; ++k) {
          const Point2 e = p[(k + 2) % 3] - p[(k + 1) % 3];
          const double gx = -e.y / (2.0 * t.area);
          const double gy = e.x / (2.0 * t.area);
          const double g0 = 1.0 - (gx * p[k].x + gy * p[k].y);
          t.val[k] = {g0, gx, gy};
          t.grad[k] = {gx, gy};  // grad Pi_D coincides with grad_D (conforming)
        }
        cr.tris.push_back(std::move(t));
      }
      recon_[static_cast<std::size_t>(c)] = std::move(cr);
    }
  }

  std::vector<int> vertex_dof_;
  std::vector<int> center_dof_;
  std::vector<std::vector<int>> vertex_cells_;
};

}  // namespace

std::unique_ptr<GradientDiscretisation> build_p1(const Mesh& mesh) {
  return std::make_unique<P1Discretisation>(mesh);
}

}  // namespace biogds
