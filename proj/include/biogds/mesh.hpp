// Polygonal mesh: vertices, oriented faces, cells with ordered face cycles.
// Meshes are immutable after construction and validated on build and on load.
#ifndef BIOGDS_MESH_HPP
#define BIOGDS_MESH_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "biogds/geometry.hpp"

namespace biogds {

// Square domain (a,b)^2.
struct DomainSpec {
  double a = -1.0;
  double b = 1.0;

  double width() const { return b - a; }
  double area() const { return (b - a) * (b - a); }
};

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Face {
  int v0 = -1, v1 = -1;     // endpoints; v0->v1 is counter-clockwise for cell_left
  int cell_left = -1;       // the normal points out of this cell
  int cell_right = -1;      // -1 on the boundary
  Point2 midpoint;
  double length = 0.0;
  Point2 normal;            // unit, out of cell_left
};

struct Cell {
  std::vector<int> faces;     // counter-clockwise cycle
  std::vector<int> vertices;  // vertices[i] -> vertices[i+1] spans faces[i]
  Point2 barycenter;          // area centroid
  double area = 0.0;
};

class Mesh {
 public:
  // Stitches a polygon soup into a mesh: vertices within `merge_tol` are
  // identified, shared edges become interior faces. Validates on return.
  static Mesh from_polygons(const DomainSpec& domain,
                            const std::vector<std::vector<Point2>>& polygons, double merge_tol);

  const DomainSpec& domain() const { return domain_; }
  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<int>& boundary_faces() const { return boundary_faces_; }

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_faces() const { return static_cast<int>(faces_.size()); }
  int n_cells() const { return static_cast<int>(cells_.size()); }

  // Unit normal of face f pointing out of cell c.
  Point2 outward_normal(int f, int c) const {
    const Face& face = faces_[f];
    return face.cell_left == c ? face.normal : Point2{-face.normal.x, -face.normal.y};
  }
  int neighbor(int f, int c) const {
    const Face& face = faces_[f];
    return face.cell_left == c ? face.cell_right : face.cell_left;
  }

  double cell_diameter(int c) const;

  // Throws MeshError naming the offending cell/face on violation.
  void validate() const;

 private:
  friend Mesh load_mesh(const std::string& path);
  void build_geometry();   // midpoints, normals, areas, centroids from connectivity
  void order_cell_cycles();  // derive ordered vertex cycles from face lists

  DomainSpec domain_;
  std::vector<Point2> vertices_;
  std::vector<Face> faces_;
  std::vector<Cell> cells_;
  std::vector<int> boundary_faces_;
};

// n x n axis-aligned square cells. Throws on n < 1.
Mesh generate_rect_mesh(const DomainSpec& domain, int n);

// Hexagonal tiling clipped to the domain; `resolution` hexagons are of
// circumradius width/(2*resolution). Degenerate slivers are merged into a
// neighbor. Throws on resolution < 1.
Mesh generate_hex_mesh(const DomainSpec& domain, int resolution);

// Largest cell diameter.
double mesh_size(const Mesh& mesh);

// Plain-text format: header "polymesh 2d", vertex count + coordinates, face
// count + "v0 v1 cellL cellR" (-1 for boundary), cell count + face-id lists.
void write_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(const std::string& path);

}  // namespace biogds

#endif
