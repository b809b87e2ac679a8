#pragma once

#include "tsmor/grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace tsmor {

using SparseMat = Eigen::SparseMatrix<double>;

// ---------------------------------------------------------------------------
// Continuous piecewise-linear (P1) space over the structured triangulation.
// ---------------------------------------------------------------------------

class P1Space2D {
 public:
  explicit P1Space2D(Triangulation tri) : tri_(std::move(tri)) {
    boundary_.resize(tri_.n_vertices());
    for (long v = 0; v < tri_.n_vertices(); ++v) boundary_[v] = tri_.is_boundary_vertex(v);
    interior_index_.assign(tri_.n_vertices(), -1);
    for (long v = 0; v < tri_.n_vertices(); ++v)
      if (!boundary_[v]) interior_index_[v] = n_interior_++;
  }

  const Triangulation& tri() const { return tri_; }
  long n_vertices() const { return tri_.n_vertices(); }
  long n_interior() const { return n_interior_; }
  bool is_boundary(long v) const { return boundary_[v]; }

  double triangle_area() const { return 0.5 * tri_.grid.cell_area(); }

  // Consistent mass matrix over all vertices.
  SparseMat mass_matrix() const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(tri_.n_triangles() * 9);
    const double a12 = triangle_area() / 12.0;
    for (long t = 0; t < tri_.n_triangles(); ++t)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          trip.emplace_back(tri_.triangles(t, i), tri_.triangles(t, j), (i == j ? 2.0 : 1.0) * a12);
    SparseMat M(n_vertices(), n_vertices());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
  }

  // Stiffness matrix with a cell-wise coefficient evaluated at triangle centroids.
  SparseMat stiffness_matrix(const std::function<double(double, double)>& coeff) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(tri_.n_triangles() * 9);
    const double area = triangle_area();
    for (long t = 0; t < tri_.n_triangles(); ++t) {
      Eigen::Vector2d p[3];
      for (int i = 0; i < 3; ++i) p[i] = tri_.vertices.row(tri_.triangles(t, i)).transpose();
      const Eigen::Vector2d c = (p[0] + p[1] + p[2]) / 3.0;
      const double beta = coeff(c[0], c[1]);
      // constant P1 gradients: grad_i = perp(edge opposite i) / (2 area)
      Eigen::Vector2d g[3];
      for (int i = 0; i < 3; ++i) {
        const Eigen::Vector2d e = p[(i + 2) % 3] - p[(i + 1) % 3];
        g[i] = Eigen::Vector2d(-e[1], e[0]) / (2.0 * area);
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          trip.emplace_back(tri_.triangles(t, i), tri_.triangles(t, j), beta * area * g[i].dot(g[j]));
    }
    SparseMat A(n_vertices(), n_vertices());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  // Restrict a full-vertex operator to interior vertices.
  SparseMat interior_block(const SparseMat& A) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nonZeros());
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMat::InnerIterator it(A, k); it; ++it) {
        const long ri = interior_index_[it.row()], ci = interior_index_[it.col()];
        if (ri >= 0 && ci >= 0) trip.emplace_back(ri, ci, it.value());
      }
    SparseMat out(n_interior_, n_interior_);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  }

  Vec scatter_interior(const Vec& interior, const Vec& boundary_values) const {
    Vec full(n_vertices());
    for (long v = 0; v < n_vertices(); ++v)
      full[v] = boundary_[v] ? boundary_values[v] : interior[interior_index_[v]];
    return full;
  }

  Vec gather_interior(const Vec& full) const {
    Vec out(n_interior_);
    for (long v = 0; v < n_vertices(); ++v)
      if (!boundary_[v]) out[interior_index_[v]] = full[v];
    return out;
  }

  // Nodal values -> cell averages (mean of the two triangle centroid values).
  Field cell_averages(const Vec& nodal) const {
    Field out(tri_.grid.n_cells());
    for (long cell = 0; cell < tri_.grid.n_cells(); ++cell) {
      double acc = 0.0;
      for (int s = 0; s < 2; ++s) {
        const long t = 2 * cell + s;
        acc += (nodal[tri_.triangles(t, 0)] + nodal[tri_.triangles(t, 1)] +
                nodal[tri_.triangles(t, 2)]) / 3.0;
      }
      out[cell] = 0.5 * acc;
    }
    return out;
  }

  // Barycentric evaluation data for arbitrary points: sparse matrix with three
  // hat-function weights per row, so values_at_points = S * nodal.
  SparseMat evaluation_matrix(const Mat& points) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(points.rows() * 3);
    const Grid2D& g = tri_.grid;
    const double dx = g.x.dx(), dy = g.y.dx();
    for (long p = 0; p < points.rows(); ++p) {
      double x = g.box().clamp(0, points(p, 0));
      double y = g.box().clamp(1, points(p, 1));
      int i = std::min(static_cast<int>((x - g.x.a) / dx), g.nx() - 1);
      int j = std::min(static_cast<int>((y - g.y.a) / dy), g.ny() - 1);
      const double u = (x - (g.x.a + i * dx)) / dx;
      const double v = (y - (g.y.a + j * dy)) / dy;
      const long v00 = tri_.vertex_index(i, j), v10 = tri_.vertex_index(i + 1, j);
      const long v01 = tri_.vertex_index(i, j + 1), v11 = tri_.vertex_index(i + 1, j + 1);
      if (u >= v) {  // lower-right triangle (v00, v10, v11)
        trip.emplace_back(p, v00, 1.0 - u);
        trip.emplace_back(p, v10, u - v);
        trip.emplace_back(p, v11, v);
      } else {  // upper-left triangle (v00, v11, v01)
        trip.emplace_back(p, v00, 1.0 - v);
        trip.emplace_back(p, v11, u);
        trip.emplace_back(p, v01, v - u);
      }
    }
    SparseMat S(points.rows(), n_vertices());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
  }

  // Piecewise-constant gradient of the P1 interpolant on each triangle.
  Mat triangle_gradients(const Vec& nodal) const {
    Mat out(tri_.n_triangles(), 2);
    const double area = triangle_area();
    for (long t = 0; t < tri_.n_triangles(); ++t) {
      Eigen::Vector2d p[3];
      double w[3];
      for (int i = 0; i < 3; ++i) {
        p[i] = tri_.vertices.row(tri_.triangles(t, i)).transpose();
        w[i] = nodal[tri_.triangles(t, i)];
      }
      Eigen::Vector2d grad = Eigen::Vector2d::Zero();
      for (int i = 0; i < 3; ++i) {
        const Eigen::Vector2d e = p[(i + 2) % 3] - p[(i + 1) % 3];
        grad += w[i] * Eigen::Vector2d(-e[1], e[0]) / (2.0 * area);
      }
      out.row(t) = grad.transpose();
    }
    return out;
  }

 private:
  Triangulation tri_;
  std::vector<bool> boundary_;
  std::vector<long> interior_index_;
  long n_interior_ = 0;
};

// ---------------------------------------------------------------------------
// L2 projection onto the P1 space with prescribed boundary nodal values
// (consistent mass matrix, interior solve). The factorization is reusable
// across right-hand sides.
// ---------------------------------------------------------------------------

class P1Projector2D {
 public:
  explicit P1Projector2D(const P1Space2D& space) : space_(&space) {
    const SparseMat M = space.mass_matrix();
    mass_full_ = M;
    solver_.compute(space.interior_block(M));
    if (solver_.info() != Eigen::Success)
      throw NumericalError("P1Projector2D: mass matrix factorization failed");
  }

  // rhs_full[i] = integral of (target * hat_i); boundary_values pinned.
  Vec project(const Vec& rhs_full, const Vec& boundary_values) const {
    Vec bfull = Vec::Zero(space_->n_vertices());
    for (long v = 0; v < space_->n_vertices(); ++v)
      if (space_->is_boundary(v)) bfull[v] = boundary_values[v];
    const Vec correction = mass_full_ * bfull;
    Vec rhs_int(space_->n_interior());
    long k = 0;
    for (long v = 0; v < space_->n_vertices(); ++v)
      if (!space_->is_boundary(v)) rhs_int[k++] = rhs_full[v] - correction[v];
    const Vec u_int = solver_.solve(rhs_int);
    if (solver_.info() != Eigen::Success)
      throw NumericalError("P1Projector2D: mass solve failed");
    return space_->scatter_interior(u_int, bfull);
  }

 private:
  const P1Space2D* space_;
  SparseMat mass_full_;
  Eigen::SimplicialLLT<SparseMat> solver_;
};

// ---------------------------------------------------------------------------
// 1D P1 space on the grid vertices (hat functions on cells).
// ---------------------------------------------------------------------------

class P1Space1D {
 public:
  explicit P1Space1D(Grid1D grid) : grid_(grid) {}

  const Grid1D& grid() const { return grid_; }
  long n_vertices() const { return grid_.n_cells + 1; }
  double vertex(long v) const { return grid_.a + v * grid_.dx(); }
  bool is_boundary(long v) const { return v == 0 || v == grid_.n_cells; }

  SparseMat mass_matrix() const {
    std::vector<Eigen::Triplet<double>> trip;
    const double h6 = grid_.dx() / 6.0;
    for (int e = 0; e < grid_.n_cells; ++e) {
      trip.emplace_back(e, e, 2.0 * h6);
      trip.emplace_back(e + 1, e + 1, 2.0 * h6);
      trip.emplace_back(e, e + 1, h6);
      trip.emplace_back(e + 1, e, h6);
    }
    SparseMat M(n_vertices(), n_vertices());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
  }

  SparseMat evaluation_matrix(const Vec& points) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(points.size() * 2);
    const double dx = grid_.dx();
    for (long p = 0; p < points.size(); ++p) {
      double x = std::clamp(points[p], grid_.a, grid_.b);
      int e = std::min(static_cast<int>((x - grid_.a) / dx), grid_.n_cells - 1);
      const double s = (x - (grid_.a + e * dx)) / dx;
      trip.emplace_back(p, e, 1.0 - s);
      trip.emplace_back(p, e + 1, s);
    }
    SparseMat S(points.size(), n_vertices());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
  }

 private:
  Grid1D grid_;
};

class P1Projector1D {
 public:
  explicit P1Projector1D(const P1Space1D& space) : space_(&space) {
    const SparseMat M = space.mass_matrix();
    mass_full_ = M;
    const long n = space.n_vertices();
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < M.outerSize(); ++k)
      for (SparseMat::InnerIterator it(M, k); it; ++it)
        if (!space.is_boundary(it.row()) && !space.is_boundary(it.col()))
          trip.emplace_back(it.row() - 1, it.col() - 1, it.value());
    SparseMat Mint(n - 2, n - 2);
    Mint.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(Mint);
    if (solver_.info() != Eigen::Success)
      throw NumericalError("P1Projector1D: mass matrix factorization failed");
  }

  Vec project(const Vec& rhs_full, const Vec& boundary_values) const {
    const long n = space_->n_vertices();
    Vec bfull = Vec::Zero(n);
    bfull[0] = boundary_values[0];
    bfull[n - 1] = boundary_values[n - 1];
    const Vec correction = mass_full_ * bfull;
    const Vec rhs_int = rhs_full.segment(1, n - 2) - correction.segment(1, n - 2);
    Vec u = Vec::Zero(n);
    u.segment(1, n - 2) = solver_.solve(rhs_int);
    if (solver_.info() != Eigen::Success)
      throw NumericalError("P1Projector1D: mass solve failed");
    u[0] = bfull[0];
    u[n - 1] = bfull[n - 1];
    return u;
  }

 private:
  const P1Space1D* space_;
  SparseMat mass_full_;
  Eigen::SimplicialLLT<SparseMat> solver_;
};

// ---------------------------------------------------------------------------
// Heat conduction solve: -div(beta grad u) = 1, u = 0 on the boundary,
// returned as cell averages of the P1 solution.
// ---------------------------------------------------------------------------

inline Field solve_poisson_p1(const P1Space2D& space,
                              const std::function<double(double, double)>& beta, Vec* nodal_out = nullptr) {
  const SparseMat A = space.interior_block(space.stiffness_matrix(beta));
  // load: integral of hat functions = area/3 per incident triangle
  Vec load = Vec::Zero(space.n_vertices());
  const double a3 = space.triangle_area() / 3.0;
  for (long t = 0; t < space.tri().n_triangles(); ++t)
    for (int i = 0; i < 3; ++i) load[space.tri().triangles(t, i)] += a3;
  Eigen::SimplicialLLT<SparseMat> solver(A);
  if (solver.info() != Eigen::Success)
    throw NumericalError("solve_poisson_p1: singular stiffness matrix");
  const Vec u_int = solver.solve(space.gather_interior(load));
  if (solver.info() != Eigen::Success) throw NumericalError("solve_poisson_p1: solve failed");
  const Vec nodal = space.scatter_interior(u_int, Vec::Zero(space.n_vertices()));
  if (nodal_out) *nodal_out = nodal;
  return space.cell_averages(nodal);
}

}  // namespace tsmor
