#pragma once

#include "tsmor/common.hpp"
#include "tsmor/legendre.hpp"

#include <cmath>
#include <functional>

namespace tsmor {

// ---------------------------------------------------------------------------
// Structured cell-centered grids. Immutable after construction.
// ---------------------------------------------------------------------------

struct Grid1D {
  double a = 0.0;
  double b = 1.0;
  int n_cells = 1;

  Grid1D() = default;
  Grid1D(double a_, double b_, int n) : a(a_), b(b_), n_cells(n) {
    if (!(b > a)) throw std::invalid_argument("Grid1D: requires b > a");
    if (n < 1) throw std::invalid_argument("Grid1D: requires n_cells >= 1");
  }

  double dx() const { return (b - a) / n_cells; }
  double center(int i) const { return a + (i + 0.5) * dx(); }
  Vec centers() const {
    Vec c(n_cells);
    for (int i = 0; i < n_cells; ++i) c[i] = center(i);
    return c;
  }
  DomainBox box() const { return DomainBox{1, {a, 0.0}, {b, 1.0}}; }
};

inline Grid1D make_grid_1d(double a, double b, int n_cells) { return Grid1D(a, b, n_cells); }

struct Grid2D {
  Grid1D x;
  Grid1D y;

  Grid2D() = default;
  Grid2D(Grid1D gx, Grid1D gy) : x(gx), y(gy) {}

  int nx() const { return x.n_cells; }
  int ny() const { return y.n_cells; }
  long n_cells() const { return static_cast<long>(nx()) * ny(); }
  double cell_area() const { return x.dx() * y.dx(); }
  // Flat index: x fastest.
  long index(int i, int j) const { return static_cast<long>(j) * nx() + i; }
  void center(long cell, double* out) const {
    const int i = static_cast<int>(cell % nx());
    const int j = static_cast<int>(cell / nx());
    out[0] = x.center(i);
    out[1] = y.center(j);
  }
  DomainBox box() const { return DomainBox{2, {x.a, y.a}, {x.b, y.b}}; }
};

inline Grid2D make_grid_2d(double ax, double bx, int nx, double ay, double by, int ny) {
  return Grid2D(Grid1D(ax, bx, nx), Grid1D(ay, by, ny));
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature on the reference interval/square [0,1]^d with
// weights normalized to the reference measure (they sum to one).
// ---------------------------------------------------------------------------

struct QuadratureRule {
  int dim = 1;
  Mat points;   // n_points x dim, in [0,1]^d
  Vec weights;  // sums to 1

  int n_points() const { return static_cast<int>(weights.size()); }
};

// Nodes/weights of the n-point rule on [0,1]: Legendre roots by Newton
// iteration from the Chebyshev initial guess.
inline QuadratureRule gauss_legendre_1d(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre_1d: order must be >= 1");
  QuadratureRule rule;
  rule.dim = 1;
  rule.points.resize(order, 1);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    double t = -std::cos(M_PI * (i + 0.75) / (order + 0.5));
    for (int it = 0; it < 100; ++it) {
      const LegendreEval L = legendre_all(order, t);
      const double step = L.p / L.dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const LegendreEval L = legendre_all(order, t);
    const double w = 2.0 / ((1.0 - t * t) * L.dp * L.dp);
    rule.points(i, 0) = 0.5 * (t + 1.0);
    rule.weights[i] = 0.5 * w;  // reference measure of [0,1]
  }
  return rule;
}

inline QuadratureRule gauss_legendre_2d(int order) {
  const QuadratureRule g1 = gauss_legendre_1d(order);
  QuadratureRule rule;
  rule.dim = 2;
  rule.points.resize(order * order, 2);
  rule.weights.resize(order * order);
  for (int j = 0; j < order; ++j)
    for (int i = 0; i < order; ++i) {
      const int q = j * order + i;
      rule.points(q, 0) = g1.points(i, 0);
      rule.points(q, 1) = g1.points(j, 0);
      rule.weights[q] = g1.weights[i] * g1.weights[j];
    }
  return rule;
}

// ---------------------------------------------------------------------------
// Cell-wise quadrature averaging: the orthogonal projection onto piecewise
// constants, up to quadrature error.
// ---------------------------------------------------------------------------

inline Field project_to_cells(const std::function<double(double, double)>& f, const Grid2D& grid,
                              const QuadratureRule& rule) {
  Field out(grid.n_cells());
  const double dx = grid.x.dx(), dy = grid.y.dx();
  for (int j = 0; j < grid.ny(); ++j) {
    const double y0 = grid.y.a + j * dy;
    for (int i = 0; i < grid.nx(); ++i) {
      const double x0 = grid.x.a + i * dx;
      double acc = 0.0;
      for (int q = 0; q < rule.n_points(); ++q)
        acc += rule.weights[q] * f(x0 + rule.points(q, 0) * dx, y0 + rule.points(q, 1) * dy);
      out[grid.index(i, j)] = acc;
    }
  }
  return out;
}

inline Field project_to_cells_1d(const std::function<double(double)>& f, const Grid1D& grid,
                                 const QuadratureRule& rule) {
  Field out(grid.n_cells);
  const double dx = grid.dx();
  for (int i = 0; i < grid.n_cells; ++i) {
    const double x0 = grid.a + i * dx;
    double acc = 0.0;
    for (int q = 0; q < rule.n_points(); ++q) acc += rule.weights[q] * f(x0 + rule.points(q, 0) * dx);
    out[i] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Triangulation of a structured 2D grid: two positively oriented triangles
// per cell, split along the (i,j) -> (i+1,j+1) diagonal.
// ---------------------------------------------------------------------------

struct Triangulation {
  int nx = 0, ny = 0;            // cells per axis
  Mat vertices;                  // n_vertices x 2
  Eigen::MatrixXi triangles;     // n_triangles x 3, CCW
  Grid2D grid;

  long n_vertices() const { return vertices.rows(); }
  long n_triangles() const { return triangles.rows(); }
  long vertex_index(int i, int j) const { return static_cast<long>(j) * (nx + 1) + i; }
  bool is_boundary_vertex(long v) const {
    const int i = static_cast<int>(v % (nx + 1));
    const int j = static_cast<int>(v / (nx + 1));
    return i == 0 || j == 0 || i == nx || j == ny;
  }
};

inline Triangulation triangulate(const Grid2D& grid) {
  Triangulation tri;
  tri.grid = grid;
  tri.nx = grid.nx();
  tri.ny = grid.ny();
  const int nvx = tri.nx + 1, nvy = tri.ny + 1;
  tri.vertices.resize(static_cast<long>(nvx) * nvy, 2);
  for (int j = 0; j < nvy; ++j)
    for (int i = 0; i < nvx; ++i) {
      const long v = static_cast<long>(j) * nvx + i;
      tri.vertices(v, 0) = grid.x.a + i * grid.x.dx();
      tri.vertices(v, 1) = grid.y.a + j * grid.y.dx();
    }
  tri.triangles.resize(2 * grid.n_cells(), 3);
  for (int j = 0; j < tri.ny; ++j)
    for (int i = 0; i < tri.nx; ++i) {
      const long cell = grid.index(i, j);
      const int v00 = static_cast<int>(tri.vertex_index(i, j));
      const int v10 = static_cast<int>(tri.vertex_index(i + 1, j));
      const int v01 = static_cast<int>(tri.vertex_index(i, j + 1));
      const int v11 = static_cast<int>(tri.vertex_index(i + 1, j + 1));
      tri.triangles.row(2 * cell) << v00, v10, v11;      // lower-right, u >= v
      tri.triangles.row(2 * cell + 1) << v00, v11, v01;  // upper-left, v >= u
    }
  return tri;
}

}  // namespace tsmor
