// Small 2D geometric primitives shared by the mesh and the schemes.
#ifndef BIOGDS_GEOMETRY_HPP
#define BIOGDS_GEOMETRY_HPP

#include <array>
#include <cmath>

namespace biogds {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2() = default;
  Point2(double x_, double y_) : x(x_), y(y_) {}

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  Point2& operator+=(const Point2& o) { x += o.x; y += o.y; return *this; }
};

inline Point2 operator*(double s, const Point2& p) { return {s * p.x, s * p.y}; }

inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point2& a) { return std::sqrt(dot(a, a)); }
inline double dist(const Point2& a, const Point2& b) { return norm(a - b); }

// Symmetric 2x2 matrix, used for the diffusion tensors.
struct Mat2 {
  double xx = 0.0, xy = 0.0, yy = 0.0;

  static Mat2 identity(double s = 1.0) { return {s, 0.0, s}; }

  Point2 apply(const Point2& v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

  // Eigenvalues of the symmetric matrix, ascending.
  std::array<double, 2> eigenvalues() const {
    const double tr = xx + yy;
    const double det = xx * yy - xy * xy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return {tr / 2.0 - disc, tr / 2.0 + disc};
  }
};

// Signed area of triangle (a,b,c); positive when counter-clockwise.
inline double tri_signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * cross(b - a, c - a);
}

inline Point2 tri_centroid(const Point2& a, const Point2& b, const Point2& c) {
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

}  // namespace biogds

#endif
