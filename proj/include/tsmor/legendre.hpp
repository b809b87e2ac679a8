#pragma once

#include "tsmor/common.hpp"

#include <cmath>

namespace tsmor {

// Legendre polynomial P_k on [-1,1] (P_k(1) = 1 normalization), with first
// and second derivatives, all from the three-term recurrence.
struct LegendreEval {
  double p;    // P_k(t)
  double dp;   // P_k'(t)
  double ddp;  // P_k''(t)
};

inline LegendreEval legendre_all(int degree, double t) {
  LegendreEval out{1.0, 0.0, 0.0};
  if (degree == 0) return out;
  double p2 = 1.0, d2 = 0.0, s2 = 0.0;  // P_{n-2} and derivatives
  double p1 = t, d1 = 1.0, s1 = 0.0;    // P_{n-1}
  if (degree == 1) return {p1, d1, s1};
  double p = 0, d = 0, s = 0;
  for (int n = 2; n <= degree; ++n) {
    const double a = (2.0 * n - 1.0) / n;
    const double b = (n - 1.0) / n;
    p = a * t * p1 - b * p2;
    d = a * (p1 + t * d1) - b * d2;
    s = a * (2.0 * d1 + t * s1) - b * s2;
    p2 = p1; d2 = d1; s2 = s1;
    p1 = p; d1 = d; s1 = s;
  }
  return {p, d, s};
}

inline double legendre(int degree, double t) { return legendre_all(degree, t).p; }

// ---------------------------------------------------------------------------
// Tensor-Legendre bubble basis on a box: per axis, degrees 0..order-1 of the
// Legendre polynomial in the unit-mapped coordinate, multiplied by the bubble
// factor s(1-s) so every basis function vanishes identically on the boundary.
// Basis index m enumerates the tensor degrees, axis-0 degree fastest.
// ---------------------------------------------------------------------------

class BubbleBasis {
 public:
  BubbleBasis(DomainBox box, int order) : box_(box), order_(order) {
    if (order < 1) throw std::invalid_argument("BubbleBasis: order must be >= 1");
    count_ = 1;
    for (int d = 0; d < box.dim; ++d) count_ *= order;
  }

  int dim() const { return box_.dim; }
  int order() const { return order_; }
  int count() const { return count_; }
  const DomainBox& box() const { return box_; }

  struct AxisFactors {
    // value, first and second derivative in the unit coordinate of
    // l_k(2s-1) * s(1-s), for all degrees k of one axis.
    Vec v, d1, d2;
  };

  AxisFactors axis_factors(double s) const {
    AxisFactors f;
    f.v.resize(order_);
    f.d1.resize(order_);
    f.d2.resize(order_);
    const double u = s * (1.0 - s);
    const double du = 1.0 - 2.0 * s;
    const double t = 2.0 * s - 1.0;
    for (int k = 0; k < order_; ++k) {
      const LegendreEval L = legendre_all(k, t);
      // chain rule for t = 2s-1
      const double l = L.p, dl = 2.0 * L.dp, ddl = 4.0 * L.ddp;
      f.v[k] = l * u;
      f.d1[k] = dl * u + l * du;
      f.d2[k] = ddl * u + 2.0 * dl * du - 2.0 * l;
    }
    return f;
  }

  // Basis values at a physical point; `x` must lie in the closed box.
  Vec values(const double* x) const {
    check_inside(x);
    if (box_.dim == 1) {
      return axis_factors(box_.to_unit(0, x[0])).v;
    }
    const AxisFactors fx = axis_factors(box_.to_unit(0, x[0]));
    const AxisFactors fy = axis_factors(box_.to_unit(1, x[1]));
    Vec out(count_);
    for (int j = 0; j < order_; ++j)
      for (int i = 0; i < order_; ++i) out[j * order_ + i] = fx.v[i] * fy.v[j];
    return out;
  }

  // Partial derivative along `axis` in *unit* coordinates at a physical point.
  Vec unit_partial(const double* x, int axis) const {
    check_inside(x);
    if (box_.dim == 1) {
      return axis_factors(box_.to_unit(0, x[0])).d1;
    }
    const AxisFactors fx = axis_factors(box_.to_unit(0, x[0]));
    const AxisFactors fy = axis_factors(box_.to_unit(1, x[1]));
    Vec out(count_);
    for (int j = 0; j < order_; ++j)
      for (int i = 0; i < order_; ++i)
        out[j * order_ + i] = (axis == 0) ? fx.d1[i] * fy.v[j] : fx.v[i] * fy.d1[j];
    return out;
  }

  // Laplacian in *physical* coordinates of each basis function, at x, without
  // the per-component displacement scale (applied by the caller).
  Vec physical_laplacian(const double* x) const {
    check_inside(x);
    if (box_.dim == 1) {
      const double inv2 = 1.0 / (box_.extent(0) * box_.extent(0));
      return axis_factors(box_.to_unit(0, x[0])).d2 * inv2;
    }
    const AxisFactors fx = axis_factors(box_.to_unit(0, x[0]));
    const AxisFactors fy = axis_factors(box_.to_unit(1, x[1]));
    const double ix = 1.0 / (box_.extent(0) * box_.extent(0));
    const double iy = 1.0 / (box_.extent(1) * box_.extent(1));
    Vec out(count_);
    for (int j = 0; j < order_; ++j)
      for (int i = 0; i < order_; ++i)
        out[j * order_ + i] = ix * fx.d2[i] * fy.v[j] + iy * fx.v[i] * fy.d2[j];
    return out;
  }

 private:
  void check_inside(const double* x) const {
    if (!box_.contains(x, 1e-12))
      throw std::invalid_argument("BubbleBasis: point outside the closed domain");
  }

  DomainBox box_;
  int order_;
  int count_;
};

}  // namespace tsmor
