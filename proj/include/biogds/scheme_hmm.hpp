// Hybrid mimetic mixed discretisation: one unknown per cell and per face, a
// Green-formula cell gradient with sub-cell stabilization.
#ifndef BIOGDS_SCHEME_HMM_HPP
#define BIOGDS_SCHEME_HMM_HPP

#include <cmath>
#include <memory>

#include "biogds/gdm.hpp"

namespace biogds {

struct HmmOptions {
  double stab = std::sqrt(2.0);   // stabilization coefficient, sqrt(d) by default
  bool face_value_mean = false;   // Dirichlet lift: face means instead of midpoint values
  bool check_definiteness = true; // probe the gradient Gram for a kernel after build
};

// Throws on degenerate cell geometry (non-positive face distance) and when the
// gradient reconstruction fails the definiteness probe.
std::unique_ptr<GradientDiscretisation> build_hmm(const Mesh& mesh, const HmmOptions& opts = {});

}  // namespace biogds

#endif
