#include "surveyfuse/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "surveyfuse/types.hpp"

namespace surveyfuse {

namespace {

using Pt = std::array<double, 2>;

double cross(const Pt& o, const Pt& a, const Pt& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double dist(const Pt& a, const Pt& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

// Andrew's monotone chain; returns CCW hull without repeated endpoint.
std::vector<Pt> convex_hull(std::vector<Pt> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const int n = static_cast<int>(pts.size());
  if (n < 3) return pts;
  std::vector<Pt> h(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (int i = n - 2, lower = k + 1; i >= 0; --i) {
    while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

double polygon_area(const std::vector<Pt>& poly) {
  double a = 0.0;
  const int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) {
    const Pt& p = poly[i];
    const Pt& q = poly[(i + 1) % n];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * a;
}

// signed distance of p from the hull boundary, positive inside (CCW hull)
double inside_depth(const std::vector<Pt>& hull, const Pt& p) {
  double depth = std::numeric_limits<double>::max();
  const int n = static_cast<int>(hull.size());
  for (int i = 0; i < n; ++i) {
    const Pt& a = hull[i];
    const Pt& b = hull[(i + 1) % n];
    const double len = dist(a, b);
    if (len <= 0) continue;
    depth = std::min(depth, cross(a, b, p) / len);
  }
  return depth;
}

// Incremental Bowyer-Watson triangulation. Point coordinates are
// translated to the query point inside the incircle predicate to keep it
// well conditioned.
struct Delaunay {
  std::vector<Pt> pts;
  struct Tri {
    int a, b, c;
    bool alive;
  };
  std::vector<Tri> tris;

  static bool in_circumcircle(const Pt& a, const Pt& b, const Pt& c, const Pt& p) {
    const double ax = a[0] - p[0], ay = a[1] - p[1];
    const double bx = b[0] - p[0], by = b[1] - p[1];
    const double cx = c[0] - p[0], cy = c[1] - p[1];
    const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                       (bx * bx + by * by) * (ax * cy - cx * ay) +
                       (cx * cx + cy * cy) * (ax * by - bx * ay);
    const double scale = (ax * ax + ay * ay) + (bx * bx + by * by) + (cx * cx + cy * cy);
    return det > 1e-12 * scale * scale;
  }

  void triangulate(const std::vector<Pt>& input) {
    pts = input;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : pts) {
      xmin = std::min(xmin, p[0]);
      xmax = std::max(xmax, p[0]);
      ymin = std::min(ymin, p[1]);
      ymax = std::max(ymax, p[1]);
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1.0});
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const int s0 = static_cast<int>(pts.size());
    pts.push_back({cx - 40.0 * span, cy - 20.0 * span});
    pts.push_back({cx + 40.0 * span, cy - 20.0 * span});
    pts.push_back({cx, cy + 40.0 * span});
    tris.push_back({s0, s0 + 1, s0 + 2, true});

    std::vector<int> bad;
    std::map<std::pair<int, int>, int> edge_count;
    for (int ip = 0; ip < s0; ++ip) {
      const Pt& p = pts[ip];
      bad.clear();
      for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        if (!tris[t].alive) continue;
        if (in_circumcircle(pts[tris[t].a], pts[tris[t].b], pts[tris[t].c], p))
          bad.push_back(t);
      }
      edge_count.clear();
      auto add_edge = [&](int u, int v) {
        auto key = std::minmax(u, v);
        edge_count[{key.first, key.second}] += 1;
      };
      for (int t : bad) {
        add_edge(tris[t].a, tris[t].b);
        add_edge(tris[t].b, tris[t].c);
        add_edge(tris[t].c, tris[t].a);
        tris[t].alive = false;
      }
      for (int t : bad) {
        // boundary edges of the cavity appear exactly once
        const Tri& tr = tris[t];
        const int e[3][2] = {{tr.a, tr.b}, {tr.b, tr.c}, {tr.c, tr.a}};
        for (auto& uv : e) {
          auto key = std::minmax(uv[0], uv[1]);
          if (edge_count[{key.first, key.second}] == 1) {
            Tri nt{uv[0], uv[1], ip, true};
            if (cross(pts[nt.a], pts[nt.b], pts[nt.c]) < 0) std::swap(nt.a, nt.b);
            tris.push_back(nt);
          }
        }
      }
    }
    // strip super-triangle
    std::vector<Tri> keep;
    for (const auto& t : tris)
      if (t.alive && t.a < s0 && t.b < s0 && t.c < s0) keep.push_back(t);
    tris = std::move(keep);
    pts.resize(s0);
  }
};

double triangle_area(const Pt& a, const Pt& b, const Pt& c) {
  return 0.5 * cross(a, b, c);
}

Mesh triangulate_points(const std::vector<Pt>& vertices) {
  Delaunay dt;
  dt.triangulate(vertices);
  Mesh mesh;
  mesh.vertices = vertices;
  double tri_area = 0.0;
  for (const auto& t : dt.tris) {
    const double a = triangle_area(vertices[t.a], vertices[t.b], vertices[t.c]);
    if (a <= 0) continue;  // degenerate slivers from cocircular ties
    mesh.triangles.push_back({t.a, t.b, t.c});
    tri_area += a;
  }
  const double hull_area = std::abs(polygon_area(convex_hull(vertices)));
  if (mesh.triangles.empty() ||
      std::abs(tri_area - hull_area) > 1e-6 * std::max(hull_area, 1.0))
    throw NumericError("mesh error: triangulation does not cover the hull (area " +
                       std::to_string(tri_area) + " vs " + std::to_string(hull_area) + ")");

  // boundary vertices: endpoints of edges with a single adjacent triangle
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : mesh.triangles) {
    const int e[3][2] = {{t[0], t[1]}, {t[1], t[2]}, {t[2], t[0]}};
    for (auto& uv : e) {
      auto key = std::minmax(uv[0], uv[1]);
      edge_count[{key.first, key.second}] += 1;
    }
  }
  mesh.boundary.assign(vertices.size(), 0);
  for (const auto& [edge, count] : edge_count) {
    if (count == 1) {
      mesh.boundary[edge.first] = 1;
      mesh.boundary[edge.second] = 1;
    }
  }
  return mesh;
}

}  // namespace

std::vector<std::array<double, 2>> convex_hull_of(
    std::vector<std::array<double, 2>> points) {
  return convex_hull(std::move(points));
}

bool inside_hull(const std::vector<std::array<double, 2>>& hull, double x,
                 double y, double tol) {
  const int n = static_cast<int>(hull.size());
  if (n < 3) return false;
  for (int i = 0; i < n; ++i) {
    const double len = dist(hull[i], hull[(i + 1) % n]);
    if (len <= 0) continue;
    if (cross(hull[i], hull[(i + 1) % n], {x, y}) / len < -tol) return false;
  }
  return true;
}

Mesh build_mesh(const std::vector<std::array<double, 2>>& locations,
                double inner_max_edge, double outer_extension,
                double outer_max_edge) {
  if (inner_max_edge <= 0)
    throw ValidationError("mesh error: inner_max_edge must be positive");
  if (outer_extension < 0)
    throw ValidationError("mesh error: outer_extension must be nonnegative");
  if (outer_max_edge <= 0) outer_max_edge = 2.0 * inner_max_edge;

  std::vector<Pt> uniq;
  for (const auto& p : locations) {
    bool dup = false;
    for (const auto& q : uniq)
      if (dist(p, q) < 1e-9) {
        dup = true;
        break;
      }
    if (!dup) uniq.push_back(p);
  }
  auto hull = convex_hull(uniq);
  if (hull.size() < 3 || std::abs(polygon_area(hull)) < 1e-12)
    throw ValidationError("mesh error: need at least 3 non-collinear locations");

  const double h = inner_max_edge;
  std::vector<Pt> verts = hull;
  auto too_close = [&](const Pt& p, double cutoff) {
    for (const auto& q : verts)
      if (dist(p, q) < cutoff) return true;
    return false;
  };

  // densify hull edges to the target inner edge length
  const int nh = static_cast<int>(hull.size());
  for (int i = 0; i < nh; ++i) {
    const Pt& a = hull[i];
    const Pt& b = hull[(i + 1) % nh];
    const double len = dist(a, b);
    const int nseg = static_cast<int>(std::ceil(len / h));
    for (int k = 1; k < nseg; ++k) {
      const double s = static_cast<double>(k) / nseg;
      Pt p{a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])};
      if (!too_close(p, 0.45 * h)) verts.push_back(p);
    }
  }

  // hexagonal lattice fill of the interior
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : hull) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  const double row_h = h * 0.8660254037844386;
  int row = 0;
  for (double y = ymin; y <= ymax + 1e-12; y += row_h, ++row) {
    const double x0 = xmin + ((row % 2) ? 0.5 * h : 0.0);
    for (double x = x0; x <= xmax + 1e-12; x += h) {
      Pt p{x, y};
      if (inside_depth(hull, p) < 0.4 * h) continue;
      if (too_close(p, 0.6 * h)) continue;
      verts.push_back(p);
    }
  }

  // outer extension rings, coarsened toward the exterior boundary
  if (outer_extension > 0) {
    Pt centroid{0, 0};
    for (const auto& p : hull) {
      centroid[0] += p[0] / nh;
      centroid[1] += p[1] / nh;
    }
    const int nrings = outer_extension > outer_max_edge ? 2 : 1;
    for (int ring = 1; ring <= nrings; ++ring) {
      const double d = outer_extension * ring / nrings;
      const double spacing = h + (outer_max_edge - h) * ring / nrings;
      std::vector<Pt> ring_poly;
      for (const auto& p : hull) {
        const double dx = p[0] - centroid[0], dy = p[1] - centroid[1];
        const double len = std::hypot(dx, dy);
        ring_poly.push_back({p[0] + d * dx / len, p[1] + d * dy / len});
      }
      const int nr = static_cast<int>(ring_poly.size());
      for (int i = 0; i < nr; ++i) {
        const Pt& a = ring_poly[i];
        const Pt& b = ring_poly[(i + 1) % nr];
        const double len = dist(a, b);
        const int nseg = std::max(1, static_cast<int>(std::ceil(len / spacing)));
        for (int k = 0; k < nseg; ++k) {
          const double s = static_cast<double>(k) / nseg;
          Pt p{a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])};
          if (!too_close(p, 0.5 * spacing)) verts.push_back(p);
        }
      }
    }
  }

  return triangulate_points(verts);
}

Mesh build_grid_mesh(int nx, int ny, double x0, double y0, double spacing) {
  if (nx < 2 || ny < 2 || spacing <= 0)
    throw ValidationError("mesh error: grid mesh needs nx, ny >= 2 and positive spacing");
  Mesh mesh;
  mesh.vertices.reserve(static_cast<size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      mesh.vertices.push_back({x0 + i * spacing, y0 + j * spacing});
  auto id = [&](int i, int j) { return j * nx + i; };
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j);
      const int v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      } else {
        mesh.triangles.push_back({v00, v10, v01});
        mesh.triangles.push_back({v10, v11, v01});
      }
    }
  }
  mesh.boundary.assign(mesh.vertices.size(), 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) mesh.boundary[id(i, j)] = 1;
  return mesh;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> projection_matrix(
    const Mesh& mesh, const std::vector<std::array<double, 2>>& locations) {
  const int n = static_cast<int>(locations.size());
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(n, mesh.n_vertices());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(3 * n);
  for (int i = 0; i < n; ++i) {
    const Pt p = locations[i];
    bool found = false;
    for (const auto& t : mesh.triangles) {
      const Pt& v0 = mesh.vertices[t[0]];
      const Pt& v1 = mesh.vertices[t[1]];
      const Pt& v2 = mesh.vertices[t[2]];
      const double area2 = cross(v0, v1, v2);
      double l0 = cross({p[0], p[1]}, v1, v2) / area2;
      double l1 = cross(v0, {p[0], p[1]}, v2) / area2;
      double l2 = 1.0 - l0 - l1;
      const double tol = -1e-9;
      if (l0 < tol || l1 < tol || l2 < tol) continue;
      l0 = std::max(l0, 0.0);
      l1 = std::max(l1, 0.0);
      l2 = std::max(l2, 0.0);
      const double s = l0 + l1 + l2;
      trips.emplace_back(i, t[0], l0 / s);
      trips.emplace_back(i, t[1], l1 / s);
      trips.emplace_back(i, t[2], l2 / s);
      found = true;
      break;  // edge ties resolved by first triangle in iteration order
    }
    if (!found)
      throw ValidationError("projection error: location " + std::to_string(i) +
                            " (" + std::to_string(p[0]) + ", " +
                            std::to_string(p[1]) + ") outside mesh hull");
  }
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

FemMatrices fem_matrices(const Mesh& mesh) {
  const int m = mesh.n_vertices();
  FemMatrices fem;
  fem.c_diag = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::Triplet<double>> gt;
  gt.reserve(9 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Pt& v0 = mesh.vertices[t[0]];
    const Pt& v1 = mesh.vertices[t[1]];
    const Pt& v2 = mesh.vertices[t[2]];
    const double area = triangle_area(v0, v1, v2);
    if (area <= 1e-14)
      throw NumericError("assembly error: zero-area triangle");
    for (int k = 0; k < 3; ++k) fem.c_diag[t[k]] += area / 3.0;
    // gradients of the linear basis functions on this element
    const double grads[3][2] = {
        {(v1[1] - v2[1]) / (2 * area), (v2[0] - v1[0]) / (2 * area)},
        {(v2[1] - v0[1]) / (2 * area), (v0[0] - v2[0]) / (2 * area)},
        {(v0[1] - v1[1]) / (2 * area), (v1[0] - v0[0]) / (2 * area)}};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        gt.emplace_back(t[r], t[c],
                        area * (grads[r][0] * grads[c][0] + grads[r][1] * grads[c][1]));
  }
  fem.g.resize(m, m);
  fem.g.setFromTriplets(gt.begin(), gt.end());
  fem.c.resize(m, m);
  std::vector<Eigen::Triplet<double>> ct;
  for (int i = 0; i < m; ++i) ct.emplace_back(i, i, fem.c_diag[i]);
  fem.c.setFromTriplets(ct.begin(), ct.end());
  return fem;
}

void save_mesh(const Mesh& mesh, std::ostream& out) {
  out << "surveyfuse-mesh 1\n";
  out << mesh.n_vertices() << " " << mesh.n_triangles() << "\n";
  out.precision(17);
  for (int i = 0; i < mesh.n_vertices(); ++i)
    out << mesh.vertices[i][0] << " " << mesh.vertices[i][1] << " "
        << static_cast<int>(mesh.boundary[i]) << "\n";
  for (const auto& t : mesh.triangles)
    out << t[0] << " " << t[1] << " " << t[2] << "\n";
}

Mesh load_mesh(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "surveyfuse-mesh" || version != 1)
    throw ValidationError("mesh error: unrecognized mesh file header");
  int nv = 0, nt = 0;
  in >> nv >> nt;
  if (!in || nv < 3 || nt < 1)
    throw ValidationError("mesh error: malformed mesh file");
  Mesh mesh;
  mesh.vertices.resize(nv);
  mesh.boundary.resize(nv);
  for (int i = 0; i < nv; ++i) {
    int b = 0;
    in >> mesh.vertices[i][0] >> mesh.vertices[i][1] >> b;
    mesh.boundary[i] = static_cast<char>(b);
  }
  mesh.triangles.resize(nt);
  for (int i = 0; i < nt; ++i) {
    auto& t = mesh.triangles[i];
    in >> t[0] >> t[1] >> t[2];
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= nv)
        throw ValidationError("mesh error: triangle vertex index out of range");
  }
  if (!in) throw ValidationError("mesh error: truncated mesh file");
  return mesh;
}

void save_mesh_file(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open mesh file for writing: " + path);
  save_mesh(mesh, out);
}

Mesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mesh file: " + path);
  return load_mesh(in);
}

}  // namespace surveyfuse
