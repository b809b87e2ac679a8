#pragma once

#include "tsmor/grid.hpp"

#include <algorithm>
#include <cmath>

namespace tsmor {

// ---------------------------------------------------------------------------
// Piecewise-multilinear interpolation of cell-centered data, with constant
// extrapolation (clamp) beyond the first/last cell centers. Gradients are the
// interpolant's piecewise-constant-per-patch derivatives.
// ---------------------------------------------------------------------------

class LinearInterp1D {
 public:
  LinearInterp1D(const Grid1D& grid, const Field& values) : grid_(grid), v_(&values) {}

  double operator()(double x) const {
    double s;
    int i;
    locate(x, i, s);
    const int ip = std::min(i + 1, grid_.n_cells - 1);
    return (1.0 - s) * (*v_)[i] + s * (*v_)[ip];
  }

  double gradient(double x) const {
    double s;
    int i;
    locate(x, i, s);
    if (clamped_) return 0.0;
    return ((*v_)[i + 1] - (*v_)[i]) / grid_.dx();
  }

 private:
  void locate(double x, int& i, double& s) const {
    const double dx = grid_.dx();
    const double t = (x - grid_.a) / dx - 0.5;  // center-relative coordinate
    clamped_ = false;
    if (grid_.n_cells == 1) {
      i = 0;
      s = 0.0;
      clamped_ = true;
      return;
    }
    double fi = std::floor(t);
    i = static_cast<int>(fi);
    s = t - fi;
    if (i < 0) {
      i = 0;
      s = 0.0;
      clamped_ = true;
    } else if (i >= grid_.n_cells - 1) {
      i = grid_.n_cells - 2;
      s = 1.0;
      clamped_ = true;
    }
  }

  Grid1D grid_;
  const Field* v_;
  mutable bool clamped_ = false;
};

class BilinearInterp2D {
 public:
  BilinearInterp2D(const Grid2D& grid, const Field& values) : grid_(grid), v_(&values) {}

  double operator()(double x, double y) const {
    int i, j;
    double s, t;
    locate(x, y, i, j, s, t);
    return value_at(i, j, s, t);
  }

  // Value and spatial gradient of the interpolant in one pass.
  double value_gradient(double x, double y, double* grad) const {
    int i, j;
    double s, t;
    locate(x, y, i, j, s, t);
    const double v00 = at(i, j), v10 = at(i + 1, j), v01 = at(i, j + 1), v11 = at(i + 1, j + 1);
    grad[0] = clamped_x_ ? 0.0 : (((1.0 - t) * (v10 - v00) + t * (v11 - v01)) / grid_.x.dx());
    grad[1] = clamped_y_ ? 0.0 : (((1.0 - s) * (v01 - v00) + s * (v11 - v10)) / grid_.y.dx());
    return (1.0 - s) * ((1.0 - t) * v00 + t * v01) + s * ((1.0 - t) * v10 + t * v11);
  }

 private:
  // index clamp keeps single-cell axes (s or t pinned to 0) in bounds
  double at(int i, int j) const {
    i = std::min(i, grid_.nx() - 1);
    j = std::min(j, grid_.ny() - 1);
    return (*v_)[grid_.index(i, j)];
  }

  double value_at(int i, int j, double s, double t) const {
    return (1.0 - s) * ((1.0 - t) * at(i, j) + t * at(i, j + 1)) +
           s * ((1.0 - t) * at(i + 1, j) + t * at(i + 1, j + 1));
  }

  static void locate_axis(const Grid1D& g, double x, int& i, double& s, bool& clamped) {
    clamped = false;
    if (g.n_cells == 1) {
      i = 0;
      s = 0.0;
      clamped = true;
      return;
    }
    const double t = (x - g.a) / g.dx() - 0.5;
    const double fi = std::floor(t);
    i = static_cast<int>(fi);
    s = t - fi;
    if (i < 0) {
      i = 0;
      s = 0.0;
      clamped = true;
    } else if (i >= g.n_cells - 1) {
      i = g.n_cells - 2;
      s = 1.0;
      clamped = true;
    }
  }

  void locate(double x, double y, int& i, int& j, double& s, double& t) const {
    locate_axis(grid_.x, x, i, s, clamped_x_);
    locate_axis(grid_.y, y, j, t, clamped_y_);
  }

  Grid2D grid_;
  const Field* v_;
  mutable bool clamped_x_ = false;
  mutable bool clamped_y_ = false;
};

}  // namespace tsmor
