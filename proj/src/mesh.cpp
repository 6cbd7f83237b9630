#include "biogds/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace biogds {

namespace {

double polygon_signed_area(const std::vector<Point2>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point2& u = p[i];
    const Point2& v = p[(i + 1) % p.size()];
    s += cross(u, v);
  }
  return 0.5 * s;
}

Point2 polygon_centroid(const std::vector<Point2>& p, double area) {
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point2& u = p[i];
    const Point2& v = p[(i + 1) % p.size()];
    const double w = cross(u, v);
    cx += (u.x + v.x) * w;
    cy += (u.y + v.y) * w;
  }
  return {cx / (6.0 * area), cy / (6.0 * area)};
}

// Quantized-coordinate vertex pool for stitching polygon soups.
class VertexPool {
 public:
  explicit VertexPool(double tol) : tol_(tol) {}

  int id_of(const Point2& p, std::vector<Point2>& verts) {
    const long long ix = static_cast<long long>(std::floor(p.x / tol_));
    const long long iy = static_cast<long long>(std::floor(p.y / tol_));
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(key(ix + dx, iy + dy));
        if (it == buckets_.end()) continue;
        for (int id : it->second)
          if (std::abs(verts[id].x - p.x) <= tol_ && std::abs(verts[id].y - p.y) <= tol_)
            return id;
      }
    const int id = static_cast<int>(verts.size());
    verts.push_back(p);
    buckets_[key(ix, iy)].push_back(id);
    return id;
  }

 private:
  static std::uint64_t key(long long ix, long long iy) {
    return static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL ^
           static_cast<std::uint64_t>(iy);
  }
  double tol_;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

}  // namespace

Mesh Mesh::from_polygons(const DomainSpec& domain,
                         const std::vector<std::vector<Point2>>& polygons, double merge_tol) {
  Mesh m;
  m.domain_ = domain;
  VertexPool pool(merge_tol);

  std::map<std::pair<int, int>, int> edge_to_face;
  for (const auto& poly_in : polygons) {
    if (poly_in.size() < 3) throw MeshError("from_polygons: polygon with fewer than 3 vertices");
    std::vector<Point2> poly = poly_in;
    if (polygon_signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());

    const int c = static_cast<int>(m.cells_.size());
    Cell cell;
    for (const Point2& p : poly) cell.vertices.push_back(pool.id_of(p, m.vertices_));
    const std::size_t nv = cell.vertices.size();
    for (std::size_t i = 0; i < nv; ++i) {
      const int a = cell.vertices[i];
      const int b = cell.vertices[(i + 1) % nv];
      if (a == b) throw MeshError("from_polygons: degenerate edge in cell " + std::to_string(c));
      const auto key = std::minmax(a, b);
      auto it = edge_to_face.find(key);
      if (it == edge_to_face.end()) {
        Face f;
        f.v0 = a;
        f.v1 = b;
        f.cell_left = c;
        const int fid = static_cast<int>(m.faces_.size());
        m.faces_.push_back(f);
        edge_to_face.emplace(key, fid);
        cell.faces.push_back(fid);
      } else {
        Face& f = m.faces_[it->second];
        if (f.cell_right != -1)
          throw MeshError("from_polygons: face " + std::to_string(it->second) +
                          " shared by more than two cells");
        if (f.v0 != b || f.v1 != a)
          throw MeshError("from_polygons: face " + std::to_string(it->second) +
                          " traversed twice with the same orientation");
        f.cell_right = c;
        cell.faces.push_back(it->second);
      }
    }
    m.cells_.push_back(std::move(cell));
  }

  m.build_geometry();
  m.validate();
  return m;
}

void Mesh::build_geometry() {
  boundary_faces_.clear();
  for (int fid = 0; fid < n_faces(); ++fid) {
    Face& f = faces_[fid];
    const Point2& a = vertices_[f.v0];
    const Point2& b = vertices_[f.v1];
    f.midpoint = 0.5 * (a + b);
    f.length = dist(a, b);
    if (f.length <= 0.0) throw MeshError("face " + std::to_string(fid) + " has zero length");
    // v0->v1 counter-clockwise around cell_left => outward normal is the right-hand perp
    f.normal = {(b.y - a.y) / f.length, -(b.x - a.x) / f.length};
    if (f.cell_right == -1) boundary_faces_.push_back(fid);
  }
  for (int c = 0; c < n_cells(); ++c) {
    Cell& cell = cells_[c];
    std::vector<Point2> poly;
    poly.reserve(cell.vertices.size());
    for (int v : cell.vertices) poly.push_back(vertices_[v]);
    const double area = polygon_signed_area(poly);
    if (area <= 0.0)
      throw MeshError("cell " + std::to_string(c) + " has non-positive area " +
                      std::to_string(area));
    cell.area = area;
    cell.barycenter = polygon_centroid(poly, area);
  }
}

void Mesh::order_cell_cycles() {
  for (int c = 0; c < n_cells(); ++c) {
    Cell& cell = cells_[c];
    if (cell.faces.empty()) throw MeshError("cell " + std::to_string(c) + " has no faces");
    // Orient each face as seen from this cell, then chain start -> end.
    std::unordered_map<int, std::pair<int, int>> start_to_face_end;
    for (int fid : cell.faces) {
      const Face& f = faces_[fid];
      int s, e;
      if (f.cell_left == c) {
        s = f.v0;
        e = f.v1;
      } else if (f.cell_right == c) {
        s = f.v1;
        e = f.v0;
      } else {
        throw MeshError("cell " + std::to_string(c) + " lists face " + std::to_string(fid) +
                        " which does not reference it back");
      }
      if (!start_to_face_end.emplace(s, std::make_pair(fid, e)).second)
        throw MeshError("cell " + std::to_string(c) + " has a non-simple face cycle");
    }
    std::vector<int> faces_ordered, verts_ordered;
    const Face& f0 = faces_[cell.faces[0]];
    int start = (f0.cell_left == c) ? f0.v0 : f0.v1;
    int cur = start;
    for (std::size_t step = 0; step < cell.faces.size(); ++step) {
      auto it = start_to_face_end.find(cur);
      if (it == start_to_face_end.end())
        throw MeshError("cell " + std::to_string(c) + " face cycle is broken at vertex " +
                        std::to_string(cur));
      verts_ordered.push_back(cur);
      faces_ordered.push_back(it->second.first);
      cur = it->second.second;
    }
    if (cur != start)
      throw MeshError("cell " + std::to_string(c) + " face cycle does not close");
    cell.faces = std::move(faces_ordered);
    cell.vertices = std::move(verts_ordered);
  }
}

double Mesh::cell_diameter(int c) const {
  const Cell& cell = cells_[c];
  double d = 0.0;
  for (std::size_t i = 0; i < cell.vertices.size(); ++i)
    for (std::size_t j = i + 1; j < cell.vertices.size(); ++j)
      d = std::max(d, dist(vertices_[cell.vertices[i]], vertices_[cell.vertices[j]]));
  return d;
}

void Mesh::validate() const {
  double total_area = 0.0;
  for (int c = 0; c < n_cells(); ++c) {
    const Cell& cell = cells_[c];
    if (cell.area <= 0.0)
      throw MeshError("invariant violation: cell " + std::to_string(c) + " has area " +
                      std::to_string(cell.area));
    total_area += cell.area;
    if (cell.faces.size() != cell.vertices.size() || cell.faces.size() < 3)
      throw MeshError("invariant violation: cell " + std::to_string(c) + " has a malformed cycle");

    // Closed-polygon check: sum |sigma| n_{K,sigma} must vanish.
    Point2 closure{0.0, 0.0};
    double perimeter = 0.0;
    for (int fid : cell.faces) {
      const Face& f = faces_[fid];
      closure += f.length * outward_normal(fid, c);
      perimeter += f.length;
    }
    if (norm(closure) > 1e-12 * std::max(1.0, perimeter))
      throw MeshError("invariant violation: cell " + std::to_string(c) +
                      " face cycle is not closed (divergence defect " +
                      std::to_string(norm(closure)) + ")");
  }
  if (std::abs(total_area - domain_.area()) > 1e-12 * domain_.area())
    throw MeshError("invariant violation: cell areas sum to " + std::to_string(total_area) +
                    ", expected " + std::to_string(domain_.area()));

  std::vector<int> face_use(faces_.size(), 0);
  for (int c = 0; c < n_cells(); ++c)
    for (int fid : cells_[c].faces) {
      const Face& f = faces_[fid];
      if (f.cell_left != c && f.cell_right != c)
        throw MeshError("invariant violation: cell " + std::to_string(c) + " lists face " +
                        std::to_string(fid) + " but the face does not list the cell");
      ++face_use[fid];
    }
  for (int fid = 0; fid < n_faces(); ++fid) {
    const Face& f = faces_[fid];
    const int expected = f.cell_right == -1 ? 1 : 2;
    if (face_use[fid] != expected)
      throw MeshError("invariant violation: face " + std::to_string(fid) + " is used by " +
                      std::to_string(face_use[fid]) + " cells, expected " +
                      std::to_string(expected));
    if (f.cell_left < 0 || f.cell_left >= n_cells())
      throw MeshError("invariant violation: face " + std::to_string(fid) + " has no left cell");
    if (std::abs(norm(f.normal) - 1.0) > 1e-14)
      throw MeshError("invariant violation: face " + std::to_string(fid) +
                      " normal is not unit length");
    if (f.v0 < 0 || f.v0 >= n_vertices() || f.v1 < 0 || f.v1 >= n_vertices())
      throw MeshError("invariant violation: face " + std::to_string(fid) +
                      " references a missing vertex");
  }
}

Mesh generate_rect_mesh(const DomainSpec& domain, int n) {
  if (n < 1) throw MeshError("generate_rect_mesh: n must be >= 1");
  const double w = domain.width() / n;
  std::vector<double> coord(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) coord[i] = domain.a + i * w;
  coord[n] = domain.b;

  std::vector<std::vector<Point2>> polys;
  polys.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      polys.push_back({{coord[i], coord[j]},
                       {coord[i + 1], coord[j]},
                       {coord[i + 1], coord[j + 1]},
                       {coord[i], coord[j + 1]}});
  return Mesh::from_polygons(domain, polys, 1e-9 * w);
}

namespace {

std::vector<Point2> clip_halfplane(const std::vector<Point2>& poly, int axis, double bound,
                                   int keep_sign) {
  // keep_sign=+1 keeps coord >= bound, -1 keeps coord <= bound.
  std::vector<Point2> out;
  const std::size_t n = poly.size();
  auto coord = [&](const Point2& p) { return axis == 0 ? p.x : p.y; };
  auto inside = [&](const Point2& p) { return keep_sign * (coord(p) - bound) >= 0.0; };
  auto intersect = [&](const Point2& p, const Point2& q) {
    const double t = (bound - coord(p)) / (coord(q) - coord(p));
    Point2 r = p + t * (q - p);
    if (axis == 0)
      r.x = bound;  // land exactly on the clip line
    else
      r.y = bound;
    return r;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& cur = poly[i];
    const Point2& nxt = poly[(i + 1) % n];
    const bool cin = inside(cur), nin = inside(nxt);
    if (cin) out.push_back(cur);
    if (cin != nin) out.push_back(intersect(cur, nxt));
  }
  return out;
}

void snap_and_clean(std::vector<Point2>& poly, const DomainSpec& dom, double snap_tol,
                    double chain_tol) {
  for (Point2& p : poly) {
    if (std::abs(p.x - dom.a) < snap_tol) p.x = dom.a;
    if (std::abs(p.x - dom.b) < snap_tol) p.x = dom.b;
    if (std::abs(p.y - dom.a) < snap_tol) p.y = dom.a;
    if (std::abs(p.y - dom.b) < snap_tol) p.y = dom.b;
  }
  std::vector<Point2> cleaned;
  for (const Point2& p : poly) {
    if (cleaned.empty() || dist(cleaned.back(), p) > chain_tol) cleaned.push_back(p);
  }
  while (cleaned.size() > 1 && dist(cleaned.front(), cleaned.back()) <= chain_tol)
    cleaned.pop_back();
  poly = std::move(cleaned);
}

std::uint64_t edge_key(const Point2& a, const Point2& b, double tol) {
  auto q = [&](double v) { return static_cast<long long>(std::llround(v / tol)); };
  const long long ax = q(a.x), ay = q(a.y), bx = q(b.x), by = q(b.y);
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](long long v) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ULL;
  };
  if (std::make_pair(ax, ay) <= std::make_pair(bx, by)) {
    mix(ax); mix(ay); mix(bx); mix(by);
  } else {
    mix(bx); mix(by); mix(ax); mix(ay);
  }
  return h;
}

// Merges polygons whose area falls below `threshold` into the neighbor across
// their longest edge. Handles the single shared edge case, which is the only
// way clipping a convex tiling produces slivers.
void merge_sliver_polygons(std::vector<std::vector<Point2>>& polys, double threshold,
                           double tol) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> edges;  // key -> (poly, edge)
    for (int p = 0; p < static_cast<int>(polys.size()); ++p)
      for (int e = 0; e < static_cast<int>(polys[p].size()); ++e)
        edges[edge_key(polys[p][e], polys[p][(e + 1) % polys[p].size()], tol)].push_back({p, e});

    for (int p = 0; p < static_cast<int>(polys.size()); ++p) {
      if (polys[p].empty()) continue;
      if (std::abs(polygon_signed_area(polys[p])) >= threshold) continue;
      // Longest edge shared with another polygon.
      int best_edge = -1, nb = -1, nb_edge = -1;
      double best_len = -1.0;
      const int n = static_cast<int>(polys[p].size());
      for (int e = 0; e < n; ++e) {
        const Point2& a = polys[p][e];
        const Point2& b = polys[p][(e + 1) % n];
        for (const auto& [op, oe] : edges[edge_key(a, b, tol)]) {
          if (op == p || polys[op].empty()) continue;
          const double len = dist(a, b);
          if (len > best_len) {
            best_len = len;
            best_edge = e;
            nb = op;
            nb_edge = oe;
          }
        }
      }
      if (nb < 0) continue;  // isolated sliver; leave for validation to flag
      // Splice: replace the neighbor's shared edge with the sliver's complement path.
      std::vector<Point2> merged;
      const int m = static_cast<int>(polys[nb].size());
      for (int e = 0; e < m; ++e) {
        merged.push_back(polys[nb][e]);
        if (e == nb_edge) {
          // Walk the sliver from its edge end back to its edge start.
          for (int k = 1; k < n - 1; ++k)
            merged.push_back(polys[p][(best_edge + 1 + k) % n]);
        }
      }
      snap_and_clean(merged, DomainSpec{-1e300, 1e300}, 0.0, tol);
      polys[nb] = std::move(merged);
      polys[p].clear();
      changed = true;
    }
    if (changed) {
      std::vector<std::vector<Point2>> kept;
      for (auto& q : polys)
        if (!q.empty()) kept.push_back(std::move(q));
      polys = std::move(kept);
    }
  }
}

}  // namespace

Mesh generate_hex_mesh(const DomainSpec& domain, int resolution) {
  if (resolution < 1) throw MeshError("generate_hex_mesh: resolution must be >= 1");
  const double s = domain.width() / (2.0 * resolution);  // circumradius
  const double dx = std::sqrt(3.0) * s;
  const double dy = 1.5 * s;
  const double cx = 0.5 * (domain.a + domain.b);
  const double cy = cx;

  // Pointy-top hexagon corners, counter-clockwise.
  double vx[6], vy[6];
  for (int k = 0; k < 6; ++k) {
    const double th = (30.0 + 60.0 * k) * (3.14159265358979323846 / 180.0);
    vx[k] = s * std::cos(th);
    vy[k] = s * std::sin(th);
  }

  const int ny = static_cast<int>(std::ceil((domain.width() / 2.0 + s) / dy)) + 1;
  const int nx = static_cast<int>(std::ceil((domain.width() / 2.0 + s) / dx)) + 1;

  std::vector<std::vector<Point2>> polys;
  for (int i = -ny; i <= ny; ++i) {
    const double row_y = cy + i * dy;
    const double row_off = (i % 2 != 0) ? 0.5 * dx : 0.0;
    for (int j = -nx; j <= nx; ++j) {
      const double hx = cx + j * dx + row_off;
      std::vector<Point2> poly;
      poly.reserve(6);
      for (int k = 0; k < 6; ++k) poly.push_back({hx + vx[k], row_y + vy[k]});
      poly = clip_halfplane(poly, 0, domain.a, +1);
      if (poly.size() >= 3) poly = clip_halfplane(poly, 0, domain.b, -1);
      if (poly.size() >= 3) poly = clip_halfplane(poly, 1, domain.a, +1);
      if (poly.size() >= 3) poly = clip_halfplane(poly, 1, domain.b, -1);
      if (poly.size() < 3) continue;
      snap_and_clean(poly, domain, 1e-9 * s, 1e-9 * s);
      if (poly.size() < 3) continue;
      if (std::abs(polygon_signed_area(poly)) < 1e-12 * s * s) continue;
      polys.push_back(std::move(poly));
    }
  }

  double mean_area = 0.0;
  for (const auto& p : polys) mean_area += std::abs(polygon_signed_area(p));
  mean_area /= std::max<std::size_t>(1, polys.size());
  merge_sliver_polygons(polys, 1e-10 * mean_area, 1e-7 * s);

  return Mesh::from_polygons(domain, polys, 1e-7 * s);
}

double mesh_size(const Mesh& mesh) {
  double h = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) h = std::max(h, mesh.cell_diameter(c));
  return h;
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("write_mesh: cannot open " + path);
  char buf[80];
  out << "polymesh 2d\n";
  out << mesh.n_vertices() << "\n";
  for (const Point2& v : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
    out << buf;
  }
  out << mesh.n_faces() << "\n";
  for (const Face& f : mesh.faces())
    out << f.v0 << " " << f.v1 << " " << f.cell_left << " " << f.cell_right << "\n";
  out << mesh.n_cells() << "\n";
  for (const Cell& c : mesh.cells()) {
    out << c.faces.size();
    for (int fid : c.faces) out << " " << fid;
    out << "\n";
  }
  if (!out) throw MeshError("write_mesh: write failed for " + path);
}

namespace {

struct LineReader {
  std::ifstream in;
  std::string path;
  int line_no = 0;

  explicit LineReader(const std::string& p) : in(p), path(p) {
    if (!in) throw MeshError("load_mesh: cannot open " + p);
  }

  std::istringstream next() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw MeshError(path + ":" + std::to_string(line_no) + ": unexpected end of file");
  }

  [[noreturn]] void fail(const std::string& what) {
    throw MeshError(path + ":" + std::to_string(line_no) + ": " + what);
  }
};

}  // namespace

Mesh load_mesh(const std::string& path) {
  LineReader rd(path);
  {
    auto ls = rd.next();
    std::string tag, dim;
    ls >> tag >> dim;
    if (tag != "polymesh" || dim != "2d") rd.fail("expected header 'polymesh 2d'");
  }
  Mesh m;
  int nv = 0;
  {
    auto ls = rd.next();
    if (!(ls >> nv) || nv < 3) rd.fail("invalid vertex count");
  }
  m.vertices_.resize(nv);
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < nv; ++i) {
    auto ls = rd.next();
    if (!(ls >> m.vertices_[i].x >> m.vertices_[i].y)) rd.fail("invalid vertex coordinates");
    lo = std::min({lo, m.vertices_[i].x, m.vertices_[i].y});
    hi = std::max({hi, m.vertices_[i].x, m.vertices_[i].y});
  }
  int nf = 0;
  {
    auto ls = rd.next();
    if (!(ls >> nf) || nf < 3) rd.fail("invalid face count");
  }
  m.faces_.resize(nf);
  for (int i = 0; i < nf; ++i) {
    auto ls = rd.next();
    Face& f = m.faces_[i];
    if (!(ls >> f.v0 >> f.v1 >> f.cell_left >> f.cell_right)) rd.fail("invalid face record");
  }
  int nc = 0;
  {
    auto ls = rd.next();
    if (!(ls >> nc) || nc < 1) rd.fail("invalid cell count");
  }
  m.cells_.resize(nc);
  for (int i = 0; i < nc; ++i) {
    auto ls = rd.next();
    int count = 0;
    if (!(ls >> count) || count < 3) rd.fail("invalid face count for cell " + std::to_string(i));
    m.cells_[i].faces.resize(count);
    for (int k = 0; k < count; ++k)
      if (!(ls >> m.cells_[i].faces[k]) || m.cells_[i].faces[k] < 0 ||
          m.cells_[i].faces[k] >= nf)
        rd.fail("invalid face id in cell " + std::to_string(i));
  }
  m.domain_ = DomainSpec{lo, hi};  // bounding box of a square domain
  m.order_cell_cycles();
  m.build_geometry();
  m.validate();
  return m;
}

}  // namespace biogds
