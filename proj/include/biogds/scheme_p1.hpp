// Conforming P1 finite elements on the fan triangulation of the polygonal
// mesh (one node per mesh vertex plus one per cell barycenter).
#ifndef BIOGDS_SCHEME_P1_HPP
#define BIOGDS_SCHEME_P1_HPP

#include <memory>

#include "biogds/gdm.hpp"

namespace biogds {

std::unique_ptr<GradientDiscretisation> build_p1(const Mesh& mesh);

}  // namespace biogds

#endif
