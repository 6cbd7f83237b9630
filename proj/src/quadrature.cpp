#include "biogds/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace biogds {

const TriRule& tri_rule_deg5() {
  // 7-point symmetric rule (Strang-Fix / Dunavant degree 5).
  static const TriRule rule = [] {
    TriRule r;
    const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    r.nodes.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225});
    r.nodes.push_back({a1, b1, b1, w1});
    r.nodes.push_back({b1, a1, b1, w1});
    r.nodes.push_back({b1, b1, a1, w1});
    r.nodes.push_back({a2, b2, b2, w2});
    r.nodes.push_back({b2, a2, b2, w2});
    r.nodes.push_back({b2, b2, a2, w2});
    return r;
  }();
  return rule;
}

const TriRule& tri_rule_deg7() {
  // 13-point symmetric rule of degree 7 (Strang-Fix); centroid weight is negative.
  static const TriRule rule = [] {
    TriRule r;
    const double w0 = -0.149570044467670;
    const double a1 = 0.479308067841923, b1 = 0.260345966079038, w1 = 0.175615257433204;
    const double a2 = 0.869739794195568, b2 = 0.065130102902216, w2 = 0.053347235608839;
    const double a3 = 0.638444188569809, b3 = 0.312865496004875, c3 = 0.048690315425316,
                 w3 = 0.077113760890257;
    r.nodes.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, w0});
    r.nodes.push_back({a1, b1, b1, w1});
    r.nodes.push_back({b1, a1, b1, w1});
    r.nodes.push_back({b1, b1, a1, w1});
    r.nodes.push_back({a2, b2, b2, w2});
    r.nodes.push_back({b2, a2, b2, w2});
    r.nodes.push_back({b2, b2, a2, w2});
    r.nodes.push_back({a3, b3, c3, w3});
    r.nodes.push_back({a3, c3, b3, w3});
    r.nodes.push_back({b3, a3, c3, w3});
    r.nodes.push_back({b3, c3, a3, w3});
    r.nodes.push_back({c3, a3, b3, w3});
    r.nodes.push_back({c3, b3, a3, w3});
    return r;
  }();
  return rule;
}

const TriRule& tri_rule(int degree) {
  switch (degree) {
    case 5:
      return tri_rule_deg5();
    case 7:
      return tri_rule_deg7();
    default:
      throw std::invalid_argument("tri_rule: only degrees 5 and 7 are provided");
  }
}

void tri_quad_points(const TriRule& rule, const Point2& a, const Point2& b, const Point2& c,
                     std::vector<QuadPoint>& out) {
  const double area = std::abs(tri_signed_area(a, b, c));
  for (const auto& n : rule.nodes) {
    QuadPoint q;
    q.x = {n.l1 * a.x + n.l2 * b.x + n.l3 * c.x, n.l1 * a.y + n.l2 * b.y + n.l3 * c.y};
    q.w = n.w * area;
    out.push_back(q);
  }
}

void tri_quad_points_subdivided(const TriRule& rule, const Point2& a, const Point2& b,
                                const Point2& c, int levels, std::vector<QuadPoint>& out) {
  if (levels <= 0) {
    tri_quad_points(rule, a, b, c, out);
    return;
  }
  const Point2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  tri_quad_points_subdivided(rule, a, ab, ca, levels - 1, out);
  tri_quad_points_subdivided(rule, ab, b, bc, levels - 1, out);
  tri_quad_points_subdivided(rule, ca, bc, c, levels - 1, out);
  tri_quad_points_subdivided(rule, ab, bc, ca, levels - 1, out);
}

void segment_quad_points(int npts, const Point2& a, const Point2& b, std::vector<QuadPoint>& out) {
  // Abscissae/weights on [-1,1].
  static const double x1[] = {0.0};
  static const double w1[] = {2.0};
  static const double x2[] = {-0.5773502691896257, 0.5773502691896257};
  static const double w2[] = {1.0, 1.0};
  static const double x3[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double w3[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  static const double x4[] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                              0.8611363115940526};
  static const double w4[] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                              0.3478548451374538};
  static const double x5[] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                              0.5384693101056831, 0.9061798459386640};
  static const double w5[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                              0.4786286704993665, 0.2369268850561891};
  const double* xs = nullptr;
  const double* ws = nullptr;
  switch (npts) {
    case 1: xs = x1; ws = w1; break;
    case 2: xs = x2; ws = w2; break;
    case 3: xs = x3; ws = w3; break;
    case 4: xs = x4; ws = w4; break;
    case 5: xs = x5; ws = w5; break;
    default: throw std::invalid_argument("segment_quad_points: npts must be in 1..5");
  }
  const double len = dist(a, b);
  const Point2 mid = 0.5 * (a + b);
  const Point2 half = 0.5 * (b - a);
  for (int i = 0; i < npts; ++i) {
    QuadPoint q;
    q.x = mid + xs[i] * half;
    q.w = 0.5 * len * ws[i];
    out.push_back(q);
  }
}

}  // namespace biogds
