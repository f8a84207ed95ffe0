#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "surveyfuse/mesh.hpp"
#include "surveyfuse/types.hpp"

using namespace surveyfuse;
using SpMat = Eigen::SparseMatrix<double>;

namespace {

double mesh_area(const Mesh& mesh) {
  double area = 0.0;
  for (const auto& t : mesh.triangles) {
    const auto& a = mesh.vertices[t[0]];
    const auto& b = mesh.vertices[t[1]];
    const auto& c = mesh.vertices[t[2]];
    area += 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
  }
  return area;
}

std::vector<std::array<double, 2>> ring_locations(int n, double radius) {
  std::vector<std::array<double, 2>> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    pts.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return pts;
}

}  // namespace

TEST_SUITE("mesh") {

TEST_CASE("three non-collinear points give a single triangle") {
  const Mesh mesh = build_mesh({{0, 0}, {10, 0}, {0, 10}}, 100.0, 0.0, 0.0);
  CHECK(mesh.n_vertices() == 3);
  CHECK(mesh.n_triangles() == 1);
  CHECK(mesh_area(mesh) == doctest::Approx(50.0));
  for (char b : mesh.boundary) CHECK(b == 1);
}

TEST_CASE("collinear locations are a mesh error") {
  CHECK_THROWS_AS(build_mesh({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 1.0, 0.0, 0.0),
                  ValidationError);
}

TEST_CASE("halving the inner edge strictly increases the vertex count") {
  const auto locs = ring_locations(16, 50.0);
  const Mesh coarse = build_mesh(locs, 20.0, 0.0, 0.0);
  const Mesh fine = build_mesh(locs, 10.0, 0.0, 0.0);
  CHECK(fine.n_vertices() > coarse.n_vertices());
  CHECK(coarse.n_vertices() >= 16);
}

TEST_CASE("outer extension adds coarser exterior vertices") {
  const auto locs = ring_locations(12, 30.0);
  const Mesh plain = build_mesh(locs, 12.0, 0.0, 0.0);
  const Mesh extended = build_mesh(locs, 12.0, 30.0, 24.0);
  CHECK(extended.n_vertices() > plain.n_vertices());
  // data locations stay strictly inside the extended hull
  const auto hull_pts = convex_hull_of(extended.vertices);
  for (const auto& p : locs) CHECK(inside_hull(hull_pts, p[0], p[1]));
}

TEST_CASE("triangulation covers the hull of its vertices") {
  const auto locs = ring_locations(20, 40.0);
  const Mesh mesh = build_mesh(locs, 15.0, 20.0, 30.0);
  const auto hull = convex_hull_of(mesh.vertices);
  double hull_area = 0.0;
  for (size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    hull_area += 0.5 * (a[0] * b[1] - b[0] * a[1]);
  }
  CHECK(mesh_area(mesh) == doctest::Approx(hull_area).epsilon(1e-9));
}

TEST_CASE("projection rows are barycentric coordinates") {
  const Mesh mesh = build_mesh({{0, 0}, {3, 0}, {0, 3}}, 100.0, 0.0, 0.0);

  SUBCASE("vertex location gives a unit row") {
    const auto a = projection_matrix(mesh, {{0, 0}});
    CHECK(a.coeff(0, 0) == doctest::Approx(1.0));
    CHECK(a.row(0).sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("centroid gives three entries of 1/3") {
    const auto a = projection_matrix(mesh, {{1.0, 1.0}});
    for (int m = 0; m < 3; ++m)
      CHECK(a.coeff(0, m) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("edge midpoint gives two entries of 1/2") {
    const auto a = projection_matrix(mesh, {{1.5, 0.0}});
    CHECK(a.coeff(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.coeff(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.coeff(0, 2) == doctest::Approx(0.0));
  }
  SUBCASE("outside location raises a projection error") {
    CHECK_THROWS_AS(projection_matrix(mesh, {{5.0, 5.0}}), ValidationError);
  }
}

TEST_CASE("projection reproduces constants and affine functions") {
  const auto locs = ring_locations(24, 25.0);
  const Mesh mesh = build_mesh(locs, 8.0, 10.0, 16.0);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  std::vector<std::array<double, 2>> targets;
  for (int i = 0; i < 50; ++i) targets.push_back({unif(gen), unif(gen)});
  const auto a = projection_matrix(mesh, targets);

  for (int r = 0; r < a.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, r);
         it; ++it) {
      CHECK(it.value() >= 0.0);
      CHECK(it.value() <= 1.0);
      sum += it.value();
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  // nodal weights a + b x + c y project to the same affine function
  const double ca = 0.7, cb = -0.3, cc = 1.9;
  Eigen::VectorXd nodal(mesh.n_vertices());
  for (int m = 0; m < mesh.n_vertices(); ++m)
    nodal[m] = ca + cb * mesh.vertices[m][0] + cc * mesh.vertices[m][1];
  const Eigen::VectorXd at_targets = a * nodal;
  for (size_t i = 0; i < targets.size(); ++i) {
    const double expect = ca + cb * targets[i][0] + cc * targets[i][1];
    CHECK(std::abs(at_targets[static_cast<int>(i)] - expect) < 1e-10);
  }
}

TEST_CASE("fem matrices on a single right triangle") {
  const Mesh mesh = build_mesh({{0, 0}, {1, 0}, {0, 1}}, 100.0, 0.0, 0.0);
  const FemMatrices fem = fem_matrices(mesh);
  CHECK(fem.c_diag.sum() == doctest::Approx(0.5).epsilon(1e-14));
  for (int m = 0; m < 3; ++m)
    CHECK(fem.c_diag[m] == doctest::Approx(0.5 / 3.0).epsilon(1e-14));
  // hand-assembled stiffness for the unit right triangle
  Eigen::MatrixXd g = Eigen::MatrixXd(fem.g);
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(1, 1) == doctest::Approx(0.5));
  CHECK(g(2, 2) == doctest::Approx(0.5));
  CHECK(g(0, 1) == doctest::Approx(-0.5));
  CHECK(g(0, 2) == doctest::Approx(-0.5));
  CHECK(g(1, 2) == doctest::Approx(0.0));
}

TEST_CASE("fem invariants on an irregular mesh") {
  const auto locs = ring_locations(18, 30.0);
  const Mesh mesh = build_mesh(locs, 10.0, 12.0, 20.0);
  const FemMatrices fem = fem_matrices(mesh);

  CHECK(fem.c_diag.minCoeff() > 0.0);
  CHECK(fem.c_diag.sum() == doctest::Approx(mesh_area(mesh)).epsilon(1e-10));

  const Eigen::VectorXd row_sums = fem.g * Eigen::VectorXd::Ones(mesh.n_vertices());
  CHECK(row_sums.cwiseAbs().maxCoeff() < 1e-10);

  SpMat diff = SpMat(fem.g.transpose()) - fem.g;
  CHECK(diff.coeffs().cwiseAbs().maxCoeff() < 1e-12);

  // translation invariance
  Mesh shifted = mesh;
  for (auto& v : shifted.vertices) {
    v[0] += 123.0;
    v[1] -= 45.0;
  }
  const FemMatrices fem2 = fem_matrices(shifted);
  CHECK((fem2.c_diag - fem.c_diag).cwiseAbs().maxCoeff() < 1e-9);
  SpMat gdiff = fem2.g - fem.g;
  CHECK(gdiff.coeffs().cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("grid mesh has the expected size and boundary") {
  const Mesh mesh = build_grid_mesh(5, 4, 0.0, 0.0, 2.0);
  CHECK(mesh.n_vertices() == 20);
  CHECK(mesh.n_triangles() == 2 * 4 * 3);
  CHECK(mesh_area(mesh) == doctest::Approx(8.0 * 6.0));
  int boundary_count = 0;
  for (char b : mesh.boundary) boundary_count += b;
  CHECK(boundary_count == 14);
}

TEST_CASE("mesh text format round-trips") {
  const auto locs = ring_locations(10, 20.0);
  const Mesh mesh = build_mesh(locs, 8.0, 10.0, 16.0);
  std::stringstream buf;
  save_mesh(mesh, buf);
  const Mesh back = load_mesh(buf);
  REQUIRE(back.n_vertices() == mesh.n_vertices());
  REQUIRE(back.n_triangles() == mesh.n_triangles());
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    CHECK(back.vertices[i][0] == mesh.vertices[i][0]);
    CHECK(back.vertices[i][1] == mesh.vertices[i][1]);
    CHECK(back.boundary[i] == mesh.boundary[i]);
  }
  CHECK(back.triangles == mesh.triangles);

  std::istringstream bad("not-a-mesh 7\n");
  CHECK_THROWS_AS(load_mesh(bad), ValidationError);
}

}  // TEST_SUITE
