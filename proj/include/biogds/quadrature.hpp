// Quadrature rules: symmetric triangle rules of degree 5 and 7, Gauss rules on
// segments, and uniform triangle subdivision for rough integrands.
#ifndef BIOGDS_QUADRATURE_HPP
#define BIOGDS_QUADRATURE_HPP

#include <functional>
#include <vector>

#include "biogds/geometry.hpp"

namespace biogds {

struct QuadPoint {
  Point2 x;
  double w;  // weight, already scaled by the element measure
};

// Barycentric rule on the reference triangle; weights sum to 1.
struct TriRule {
  struct Node {
    double l1, l2, l3, w;
  };
  std::vector<Node> nodes;
};

// Degree-5 exact, 7 points, all weights positive.
const TriRule& tri_rule_deg5();
// Degree-7 exact, 13 points (one negative centroid weight).
const TriRule& tri_rule_deg7();

const TriRule& tri_rule(int degree);  // degree in {5, 7}

// Physical quadrature points on triangle (a,b,c); weights scaled by |T|.
void tri_quad_points(const TriRule& rule, const Point2& a, const Point2& b, const Point2& c,
                     std::vector<QuadPoint>& out);

// Same, but the triangle is first subdivided 4^levels times (midpoint refinement).
void tri_quad_points_subdivided(const TriRule& rule, const Point2& a, const Point2& b,
                                const Point2& c, int levels, std::vector<QuadPoint>& out);

// Gauss-Legendre points on segment [a,b]; npts in {1..5}; weights scaled by length.
void segment_quad_points(int npts, const Point2& a, const Point2& b, std::vector<QuadPoint>& out);

inline double integrate(const std::vector<QuadPoint>& pts,
                        const std::function<double(const Point2&)>& f) {
  double s = 0.0;
  for (const auto& q : pts) s += q.w * f(q.x);
  return s;
}

}  // namespace biogds

#endif
