#pragma once

#include "tsmor/fem.hpp"
#include "tsmor/gpr.hpp"
#include "tsmor/pod.hpp"
#include "tsmor/registration.hpp"

namespace tsmor {

// ---------------------------------------------------------------------------
// Pointwise inversion of the forward transform: Levenberg-Marquardt on
// ||phi(y) - x||^2 with the analytic Jacobian, iterates clamped to the
// closed domain. Failures are recorded, not fatal.
// ---------------------------------------------------------------------------

struct InversionStats {
  double worst_residual = 0.0;
  long n_unconverged = 0;
  long n_points = 0;

  void merge(const InversionStats& other) {
    worst_residual = std::max(worst_residual, other.worst_residual);
    n_unconverged += other.n_unconverged;
    n_points += other.n_points;
  }
};

namespace invmap_detail {
struct LmOutcome {
  Eigen::Vector2d y;
  double residual_norm = 0.0;
};
}  // namespace invmap_detail

inline invmap_detail::LmOutcome invert_pointwise_once(const SpatialTransform& phi, const double* x,
                                                      const double* y0, double tol,
                                                      int max_iterations) {
  const int dim = phi.box().dim;
  Eigen::Vector2d y = Eigen::Vector2d::Zero(), target = Eigen::Vector2d::Zero();
  for (int d = 0; d < dim; ++d) {
    y[d] = phi.box().clamp(d, y0 ? y0[d] : x[d]);
    target[d] = x[d];
  }

  auto residual = [&](const Eigen::Vector2d& p, Eigen::Vector2d& r) {
    double disp[2] = {0.0, 0.0};
    phi.displacement(p.data(), disp);
    for (int d = 0; d < dim; ++d) r[d] = p[d] + disp[d] - target[d];
    double n2 = 0.0;
    for (int d = 0; d < dim; ++d) n2 += r[d] * r[d];
    return std::sqrt(n2);
  };

  Eigen::Vector2d r;
  double rnorm = residual(y, r);
  double lambda = 1e-4;
  int it = 0;
  for (; it < max_iterations && rnorm > tol; ++it) {
    const Mat J = phi.jacobian(y.data());  // dim x dim
    Mat JtJ = J.transpose() * J;
    const Vec g = J.transpose() * r.head(dim);
    bool moved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Mat A = JtJ;
      A.diagonal().array() += lambda * JtJ.diagonal().array().maxCoeff() + 1e-300;
      Vec delta;
      if (dim == 1) {
        delta = Vec::Constant(1, -g[0] / A(0, 0));
      } else {
        delta = A.inverse() * (-g);
      }
      Eigen::Vector2d y_trial = y;
      for (int d = 0; d < dim; ++d) y_trial[d] = phi.box().clamp(d, y[d] + delta[d]);
      Eigen::Vector2d r_trial;
      const double rn_trial = residual(y_trial, r_trial);
      if (rn_trial < rnorm) {
        y = y_trial;
        r = r_trial;
        rnorm = rn_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        moved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!moved) break;  // stuck (e.g. clamped at a corner)
  }
  return {y, rnorm};
}

inline void invert_pointwise(const SpatialTransform& phi, const double* x, const double* y0,
                             double* y_out, InversionStats* stats = nullptr,
                             double tol = 1e-10, int max_iterations = 50) {
  const int dim = phi.box().dim;
  invmap_detail::LmOutcome best = invert_pointwise_once(phi, x, y0, tol, max_iterations);
  if (best.residual_norm > 1e-8 && y0 != nullptr) {
    // a bad warm start can strand the iterate; retry from the target itself
    bool same = true;
    for (int d = 0; d < dim; ++d)
      if (y0[d] != x[d]) same = false;
    if (!same) {
      const invmap_detail::LmOutcome fresh =
          invert_pointwise_once(phi, x, nullptr, tol, max_iterations);
      if (fresh.residual_norm < best.residual_norm) best = fresh;
    }
  }
  if (stats) {
    stats->n_points += 1;
    stats->worst_residual = std::max(stats->worst_residual, best.residual_norm);
    if (best.residual_norm > 1e-6) stats->n_unconverged += 1;
  }
  for (int d = 0; d < dim; ++d) y_out[d] = best.y[d];
}

// ---------------------------------------------------------------------------
// Snapshots of the inverse displacement: the inverse map is evaluated at the
// cell quadrature points (warm-started in sweep order), projected onto the
// P1 space with boundary nodes pinned to the identity, and the identity is
// subtracted at the nodes. One column per spatial component.
// ---------------------------------------------------------------------------

struct InverseSnapshotWorkspace2D {
  const P1Space2D* space;
  const P1Projector2D* projector;
  CellQuadrature quad;
  SparseMat eval_at_quad;  // hat-function values at quadrature points

  InverseSnapshotWorkspace2D(const P1Space2D& sp, const P1Projector2D& proj,
                             const QuadratureRule& rule)
      : space(&sp), projector(&proj), quad(make_cell_quadrature(sp.tri().grid, rule)),
        eval_at_quad(sp.evaluation_matrix(quad.points)) {}
};

inline Mat build_inverse_snapshot_2d(const DisplacementCoeffs& c,
                                     const InverseSnapshotWorkspace2D& ws,
                                     InversionStats* stats = nullptr) {
  const SpatialTransform phi(c);
  const long nq = ws.quad.points.rows();
  Mat inv_pos(nq, 2);
  if (c.is_zero()) {
    inv_pos = ws.quad.points;
    if (stats) stats->n_points += nq;
  } else {
    double prev[2] = {ws.quad.points(0, 0), ws.quad.points(0, 1)};
    for (long q = 0; q < nq; ++q) {
      const double x[2] = {ws.quad.points(q, 0), ws.quad.points(q, 1)};
      // warm start from the previous point unless far away (row jump)
      double y0[2] = {prev[0], prev[1]};
      if (std::abs(y0[0] - x[0]) + std::abs(y0[1] - x[1]) > 0.2) {
        y0[0] = x[0];
        y0[1] = x[1];
      }
      double y[2];
      invert_pointwise(phi, x, y0, y, stats);
      inv_pos(q, 0) = y[0];
      inv_pos(q, 1) = y[1];
      prev[0] = y[0];
      prev[1] = y[1];
    }
  }
  // L2 projection with identity boundary values, then subtract the identity
  Mat nodal(ws.space->n_vertices(), 2);
  for (int k = 0; k < 2; ++k) {
    const Vec rhs = ws.eval_at_quad.transpose() * ws.quad.weights.cwiseProduct(inv_pos.col(k));
    const Vec bc = ws.space->tri().vertices.col(k);
    nodal.col(k) = ws.projector->project(rhs, bc) - ws.space->tri().vertices.col(k);
  }
  return nodal;
}

struct InverseSnapshotWorkspace1D {
  const P1Space1D* space;
  const P1Projector1D* projector;
  CellQuadrature quad;
  SparseMat eval_at_quad;

  InverseSnapshotWorkspace1D(const P1Space1D& sp, const P1Projector1D& proj,
                             const QuadratureRule& rule)
      : space(&sp), projector(&proj), quad(make_cell_quadrature(sp.grid(), rule)),
        eval_at_quad(sp.evaluation_matrix(quad.points.col(0))) {}
};

inline Mat build_inverse_snapshot_1d(const DisplacementCoeffs& c,
                                     const InverseSnapshotWorkspace1D& ws,
                                     InversionStats* stats = nullptr) {
  const SpatialTransform phi(c);
  const long nq = ws.quad.points.rows();
  Vec inv_pos(nq);
  if (c.is_zero()) {
    inv_pos = ws.quad.points.col(0);
    if (stats) stats->n_points += nq;
  } else {
    // 1D sweep order is monotone, the previous solution is always close
    double prev = ws.quad.points(0, 0);
    for (long q = 0; q < nq; ++q) {
      const double x = ws.quad.points(q, 0);
      double y;
      invert_pointwise(phi, &x, &prev, &y, stats);
      inv_pos[q] = y;
      prev = y;
    }
  }
  const long nv = ws.space->n_vertices();
  Vec vertices(nv);
  for (long v = 0; v < nv; ++v) vertices[v] = ws.space->vertex(v);
  const Vec rhs = ws.eval_at_quad.transpose() * ws.quad.weights.cwiseProduct(inv_pos);
  Mat nodal(nv, 1);
  nodal.col(0) = ws.projector->project(rhs, vertices) - vertices;
  return nodal;
}

// ---------------------------------------------------------------------------
// Reduced model of the inverse displacement: per spatial component a POD
// basis with a shared truncation plus one GPR per coefficient.
// ---------------------------------------------------------------------------

struct InverseModel {
  int dim = 0;
  int n_psi = 0;
  std::vector<PodBasis> bases;               // [component]
  std::vector<std::vector<GprModel>> gprs;   // [component][coefficient]

  bool empty() const { return bases.empty(); }
};

inline InverseModel fit_inverse_model(const std::vector<Mat>& component_snapshots,
                                      const Mat& samples, int n_psi,
                                      const GprTrainConfig& gpr_cfg, int workers = 0) {
  InverseModel model;
  model.dim = static_cast<int>(component_snapshots.size());
  model.n_psi = n_psi;
  model.bases.resize(model.dim);
  model.gprs.resize(model.dim);
  for (int k = 0; k < model.dim; ++k) {
    const Mat& S = component_snapshots[k];
    if (n_psi < 1 || n_psi > std::min(S.rows(), S.cols()))
      throw std::invalid_argument("fit_inverse_model: n_psi out of range");
    model.bases[k] = compute_pod(S, n_psi);
    const Mat alpha = project_columns(S, model.bases[k]);  // n_psi x m
    model.gprs[k].resize(n_psi);
    parallel_for(n_psi, [&](std::int64_t i) {
      GprTrainConfig cfg = gpr_cfg;
      cfg.seed = mix_seed(gpr_cfg.seed, 0x696e76ULL + k * 1000 + i);
      model.gprs[k][i] = train_gpr(samples, alpha.row(i).transpose(), cfg);
    }, workers);
  }
  return model;
}

// Mean-value prediction of the nodal displacement, one column per component.
inline Mat predict_inverse(const InverseModel& model, const Vec& z) {
  Mat out;
  for (int k = 0; k < model.dim; ++k) {
    Vec alpha(model.n_psi);
    for (int i = 0; i < model.n_psi; ++i) alpha[i] = model.gprs[k][i].predict(z, 0.0);
    const Vec nodal = reconstruct(alpha, model.bases[k]);
    if (k == 0) out.resize(nodal.size(), model.dim);
    out.col(k) = nodal;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jacobian diagnostics.
// ---------------------------------------------------------------------------

// Minimum determinant of the forward transform's Jacobian over cell centers.
inline double forward_jacobian_min_1d(const DisplacementCoeffs& c, const Grid1D& grid) {
  const SpatialTransform phi(c);
  double jmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.n_cells; ++i) {
    const double x = grid.center(i);
    jmin = std::min(jmin, phi.jacobian(&x)(0, 0));
  }
  return jmin;
}

inline double forward_jacobian_min_2d(const DisplacementCoeffs& c, const Grid2D& grid) {
  const SpatialTransform phi(c);
  double jmin = std::numeric_limits<double>::infinity();
  for (long cell = 0; cell < grid.n_cells(); ++cell) {
    double x[2];
    grid.center(cell, x);
    jmin = std::min(jmin, phi.jacobian(x).determinant());
  }
  return jmin;
}

// Minimum determinant of the P1 inverse surrogate's Jacobian over triangles.
inline double inverse_jacobian_min_2d(const P1Space2D& space, const Mat& nodal_displacement) {
  const Mat g1 = space.triangle_gradients(nodal_displacement.col(0));
  const Mat g2 = space.triangle_gradients(nodal_displacement.col(1));
  double jmin = std::numeric_limits<double>::infinity();
  for (long t = 0; t < g1.rows(); ++t) {
    const double a = 1.0 + g1(t, 0), b = g1(t, 1);
    const double c = g2(t, 0), d = 1.0 + g2(t, 1);
    jmin = std::min(jmin, a * d - b * c);
  }
  return jmin;
}

inline double inverse_jacobian_min_1d(const P1Space1D& space, const Mat& nodal_displacement) {
  double jmin = std::numeric_limits<double>::infinity();
  const double dx = space.grid().dx();
  for (long e = 0; e + 1 < space.n_vertices(); ++e) {
    const double slope = (nodal_displacement(e + 1, 0) - nodal_displacement(e, 0)) / dx;
    jmin = std::min(jmin, 1.0 + slope);
  }
  return jmin;
}

}  // namespace tsmor
