// Gradient discretisation: a discrete space with value/gradient reconstruction
// operators, interpolants, and a discrete barrier. Each scheme provides the
// reconstruction as piecewise-affine patches on a fan triangulation of the
// cells; assembly, norms, and the quality functionals (coercivity constant,
// consistency defect, limit-conformity defect) are generic on top of that.
#ifndef BIOGDS_GDM_HPP
#define BIOGDS_GDM_HPP

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "biogds/mesh.hpp"
#include "biogds/quadrature.hpp"
#include "biogds/sparse.hpp"

namespace biogds {

using ScalarFn = std::function<double(const Point2&)>;
using VectorFn = std::function<Point2(const Point2&)>;
using ScalarTimeFn = std::function<double(const Point2&, double)>;
// Row-major 2x2 tensor field {a00, a01, a10, a11}.
using TensorFn = std::function<std::array<double, 4>(const Point2&)>;

inline TensorFn isotropic_tensor(double s) {
  return [s](const Point2&) { return std::array<double, 4>{s, 0.0, 0.0, s}; };
}

constexpr double kUnconstrained = -std::numeric_limits<double>::infinity();

// One affine reconstruction patch. value(x) = sum_k val[k] . (1, x, y) v_dofs[k],
// gradient constant = sum_k grad[k] v_dofs[k].
struct ReconTri {
  Point2 v0, v1, v2;
  double area = 0.0;
  std::vector<int> dofs;
  std::vector<std::array<double, 3>> val;
  std::vector<Point2> grad;

  double value_at(const std::vector<double>& v, const Point2& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < dofs.size(); ++k)
      s += (val[k][0] + val[k][1] * x.x + val[k][2] * x.y) * v[dofs[k]];
    return s;
  }
  Point2 gradient_of(const std::vector<double>& v) const {
    Point2 g{0.0, 0.0};
    for (std::size_t k = 0; k < dofs.size(); ++k) g += v[dofs[k]] * grad[k];
    return g;
  }
};

struct CellRecon {
  std::vector<ReconTri> tris;
};

// Trace of the value reconstruction on a face, sampled at parameters s along
// the face's stored v0->v1 direction.
struct FaceTrace {
  std::vector<int> dofs;
  std::vector<std::vector<double>> shape;  // shape[dof][sample]
};

// Field layout for writers: either one value per cell (piecewise-constant
// reconstructions) or one value per point.
struct Visualization {
  std::vector<Point2> points;
  std::vector<std::vector<int>> cells;
  bool point_data = false;
  std::vector<int> data_dof;  // per cell, or per point when point_data
};

class GradientDiscretisation {
 public:
  virtual ~GradientDiscretisation() = default;

  const Mesh& mesh() const { return *mesh_; }
  const std::string& name() const { return name_; }
  int n_interior() const { return n_interior_; }  // dim X_{D,0}
  int n_lift() const { return n_lift_; }          // Dirichlet boundary dofs
  int n_total() const { return n_interior_ + n_lift_; }
  const std::vector<CellRecon>& recon() const { return recon_; }

  // Canonical interpolant P_D over all dofs including the lift
  // (cell/face means for HMM, nodal values for P1).
  virtual std::vector<double> interpolate(const ScalarFn& f) const = 0;

  // Mean-value interpolation robust to discontinuous data (I_D / J_D for
  // indicator initial conditions); `subdivision` refines the cell quadrature.
  virtual std::vector<double> interpolate_mean(const ScalarFn& f, int subdivision) const = 0;

  // Boundary lift values at time t, ordered by lift dof (offset n_interior()).
  virtual std::vector<double> dirichlet_values(const ScalarTimeFn& g, double t) const = 0;

  virtual void face_trace(int face, int cell, std::span<const double> s, FaceTrace& out) const = 0;

  virtual Visualization visualization() const = 0;

  // Discrete barrier chi_D: per-cell means define the L2 function, and the
  // per-dof bound vector carries the box constraint (-inf where unconstrained).
  void set_barrier(const ScalarFn& chi);
  bool has_barrier() const { return has_barrier_; }
  const std::vector<double>& barrier_dof() const { return barrier_dof_; }
  const std::vector<double>& barrier_cell() const { return barrier_cell_; }

 protected:
  virtual std::vector<double> barrier_bounds(const ScalarFn& chi,
                                             const std::vector<double>& cell_means) const = 0;

  const Mesh* mesh_ = nullptr;
  std::string name_;
  int n_interior_ = 0;
  int n_lift_ = 0;
  std::vector<CellRecon> recon_;
  bool has_barrier_ = false;
  std::vector<double> barrier_dof_;
  std::vector<double> barrier_cell_;
};

// ---- assembly ----

// Gram matrix of Pi_D over all dofs: v^T M v = |Pi_D v|_{L2}^2.
SparseMatrix assemble_mass(const GradientDiscretisation& gd);
// Row-sum lumping of a mass matrix.
std::vector<double> lump_mass(const SparseMatrix& mass);
// Stiffness int A grad_D u . grad_D v over all dofs. Rejects non-symmetric or
// non-positive coefficient samples.
SparseMatrix assemble_diffusion(const GradientDiscretisation& gd, const TensorFn& coeff);
// Unweighted gradient Gram (coeff = identity).
SparseMatrix gradient_gram(const GradientDiscretisation& gd);

std::vector<int> interior_ids(const GradientDiscretisation& gd);
std::vector<int> lift_ids(const GradientDiscretisation& gd);

// ---- quadrature over reconstructions ----

struct QuadSpec {
  int degree = 5;   // 5 or 7
  int subdivision = 0;
  // Optional per-cell extra subdivision (e.g. cells straddling an interface).
  std::function<int(int cell)> cell_subdivision;
};

double l2_error_value(const GradientDiscretisation& gd, const std::vector<double>& v,
                      const ScalarFn& exact, const QuadSpec& q = {});
double l2_error_gradient(const GradientDiscretisation& gd, const std::vector<double>& v,
                         const VectorFn& exact_grad, const QuadSpec& q = {});
double l2_norm_value(const GradientDiscretisation& gd, const std::vector<double>& v,
                     const QuadSpec& q = {});
double l2_norm_gradient(const GradientDiscretisation& gd, const std::vector<double>& v,
                        const QuadSpec& q = {});

// ---- quality functionals ----

struct PowerIterationOptions {
  int max_iterations = 200;
  double tol = 1e-8;
  double cg_tol = 1e-11;
};

// C_D: sqrt of the largest lambda with M v = lambda K v on X_{D,0}.
double coercivity_constant(const SparseMatrix& mass_ii, const SparseMatrix& gram_ii,
                           const PowerIterationOptions& opts = {});

// S_D(phi, w) = |Pi_D w - phi| + |grad_D w - grad phi|.
double consistency_defect_of(const GradientDiscretisation& gd, const std::vector<double>& w,
                             const ScalarFn& phi, const VectorFn& grad_phi,
                             const QuadSpec& q = {});
// Evaluated at the canonical interpolant w = P_D phi.
double consistency_defect(const GradientDiscretisation& gd, const ScalarFn& phi,
                          const VectorFn& grad_phi, const QuadSpec& q = {});

// Minimisation interpolant: argmin of the consistency defect, one SPD solve of
// (M + K) w = rhs(phi); boundary dofs are fixed to the canonical values.
std::vector<double> min_interpolant(const GradientDiscretisation& gd, const SparseMatrix& mass,
                                    const SparseMatrix& gram, const ScalarFn& phi,
                                    const VectorFn& grad_phi);

struct ConformityOptions {
  QuadSpec quad;
  int face_quad_points = 5;
  double cg_tol = 1e-12;
};

// Defect functional ell(phi) = int (grad_D phi . psi + Pi_D phi div psi); the
// div term is integrated exactly by parts cell-by-cell, so psi's divergence is
// never sampled and conforming reconstructions cancel to rounding.
std::vector<double> conformity_defect_functional(const GradientDiscretisation& gd,
                                                 const VectorFn& psi,
                                                 const ConformityOptions& opts = {});

// W_D(psi): dual norm of the defect functional via one Riesz solve.
double limit_conformity_defect(const GradientDiscretisation& gd, const SparseMatrix& gram_ii,
                               const VectorFn& psi, const ConformityOptions& opts = {});

// ---- initial data ----

struct InitialInterpolation {
  std::vector<double> p;
  std::vector<double> q;
  bool p_feasible = true;
  double min_slack = 0.0;  // min over constrained dofs of p_i - chi_i
};

// I_D p0 and J_D q0. Smooth data uses the canonical interpolant, rough data
// mean values with subdivided sampling. Infeasibility versus the barrier is
// reported, never clipped here.
InitialInterpolation interpolate_initial(const GradientDiscretisation& gd, const ScalarFn& p0,
                                         const ScalarFn& q0, bool p0_smooth, bool q0_smooth,
                                         int subdivision = 2);

// Per-level quality measures: the coercivity constant plus consistency and
// limit-conformity defects for a set of probe functions.
struct QualityReport {
  int level = 0;
  double h = 0.0;
  double coercivity = 0.0;
  std::vector<double> s_values;
  std::vector<double> w_values;
};

}  // namespace biogds

#endif
