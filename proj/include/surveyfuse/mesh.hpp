#ifndef SURVEYFUSE_MESH_HPP
#define SURVEYFUSE_MESH_HPP

#include <Eigen/Sparse>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace surveyfuse {

// Triangulation of the study domain in planar km.
struct Mesh {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW vertex triples
  std::vector<char> boundary;                 // 1 if vertex lies on the hull

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }
};

// Delaunay mesh over the convex hull of `locations`, refined to triangle
// edges of roughly `inner_max_edge` km, extended outward by
// `outer_extension` km with coarser triangles (edge ~ outer_max_edge) to
// buffer boundary effects. Data locations need not be vertices but always
// lie inside the mesh hull.
Mesh build_mesh(const std::vector<std::array<double, 2>>& locations,
                double inner_max_edge, double outer_extension,
                double outer_max_edge);

// Structured nx x ny lattice with alternating cell diagonals; used for
// regular-domain studies and simulation scenarios.
Mesh build_grid_mesh(int nx, int ny, double x0, double y0, double spacing);

// Row per location: barycentric coordinates within the containing
// triangle (at most 3 nonzeros, row sum 1). Throws if a location falls
// outside the mesh hull.
Eigen::SparseMatrix<double, Eigen::RowMajor> projection_matrix(
    const Mesh& mesh, const std::vector<std::array<double, 2>>& locations);

// Piecewise-linear FEM ingredients: lumped mass C (diagonal) and
// stiffness G, both M x M.
struct FemMatrices {
  Eigen::VectorXd c_diag;
  Eigen::SparseMatrix<double> c;
  Eigen::SparseMatrix<double> g;
};

FemMatrices fem_matrices(const Mesh& mesh);

// CCW convex hull (no repeated endpoint) and point-in-hull test used for
// prediction-grid clipping.
std::vector<std::array<double, 2>> convex_hull_of(
    std::vector<std::array<double, 2>> points);
bool inside_hull(const std::vector<std::array<double, 2>>& hull, double x,
                 double y, double tol = 1e-9);

// Plain-text mesh persistence for reproducible runs.
void save_mesh(const Mesh& mesh, std::ostream& out);
Mesh load_mesh(std::istream& in);
void save_mesh_file(const Mesh& mesh, const std::string& path);
Mesh load_mesh_file(const std::string& path);

}  // namespace surveyfuse

#endif
