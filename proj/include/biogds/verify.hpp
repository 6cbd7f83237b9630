// Error measurement against exact solutions: the time-max L2 norms and
// time-summed gradient norms of the error estimate, observed convergence
// orders, and the computable right-hand-side diagnostics (interpolation
// defects, limit-conformity values, contact-consistency term, initial errors).
#ifndef BIOGDS_VERIFY_HPP
#define BIOGDS_VERIFY_HPP

#include <string>
#include <vector>

#include "biogds/model.hpp"
#include "biogds/scheme_hmm.hpp"

namespace biogds {

struct LevelRecord {
  int level = 0;
  int resolution = 0;
  double h = 0.0;
  double dt = 0.0;
  double err_p_l2 = 0.0;  // max_n |Pi_D p^n - pbar(t^n)|_{L2}
  double err_q_l2 = 0.0;
  double err_p_h1 = 0.0;  // sum_n dt |grad_D p^{n+1} - grad pbar(t^{n+1})|_{L2}
  double err_q_h1 = 0.0;
  // observed orders versus the previous level; NaN on the first row
  double order_p_l2, order_q_l2, order_p_h1, order_q_h1;
  // relative disagreement between degree-5 and degree-7 quadrature of err_p_l2
  double quad_check = 0.0;
};

struct ErrorReport {
  std::string scheme;
  std::string mesh_kind;
  std::vector<LevelRecord> levels;
};

double observed_order(double e_coarse, double e_fine, double h_coarse, double h_fine);

// Norms of one trajectory against the exact solution. Cells straddling the
// exact solution's kink get subdivided quadrature.
LevelRecord error_norms(const Trajectory& traj, const ExactSolution& exact,
                        const TensorFn& coeff_a, bool check_quadrature = true);

struct StudyLevel {
  int resolution = 0;
  int steps = 0;
};

struct StudyOptions {
  std::string scheme = "hmm";     // "hmm" | "p1"
  std::string mesh_kind = "rect"; // "rect" | "hex"
  HmmOptions hmm;
  RunOptions run;
};

// Runs the model over a refinement ladder and fills per-level records plus
// observed orders. A solver failure aborts with the partial report attached to
// the thrown message.
ErrorReport convergence_study(const ModelProblem& model, const std::vector<StudyLevel>& levels,
                              const StudyOptions& opts);

struct StepDiagnostics {
  double t = 0.0;
  double s_p = 0.0;    // interpolation defect of pbar(t^{n+1})
  double s_q = 0.0;    // defect of qbar(t^{n+1}) at the minimisation interpolant
  double s_dtp = 0.0;  // defect of the averaged time derivative of pbar
  double s_dtq = 0.0;
  double w_a = 0.0;    // W_D(A grad pbar^{(n+1)}), 3-point Gauss time average
  double w_b = 0.0;
  double m_d = 0.0;    // contact-consistency term of the estimate
};

struct EstimateDiagnostics {
  double r0_p = 0.0;  // |p0 - Pi_D I_D p0|
  double r0_q = 0.0;
  std::vector<StepDiagnostics> steps;
};

EstimateDiagnostics estimate_diagnostics(const Trajectory& traj, const ModelProblem& model);

// Aggregate right-hand side of the error estimate at the final time:
// dt + final-time defects + conformity values + initial terms + sqrt(sum dt M_D).
double estimate_rhs_sum(const EstimateDiagnostics& d, double dt);

}  // namespace biogds

#endif
