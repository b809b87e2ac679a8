#pragma once

#include "tsmor/grid.hpp"
#include "tsmor/interp.hpp"
#include "tsmor/legendre.hpp"
#include "tsmor/optim.hpp"

#include <memory>
#include <numeric>
#include <variant>

namespace tsmor {

// ---------------------------------------------------------------------------
// Displacement fields in the tensor-Legendre bubble space. Coefficients are
// stored per spatial component; the field is scaled by the axis extents so a
// unit-square formula carries over to general boxes, and it vanishes exactly
// on the domain boundary by construction.
// ---------------------------------------------------------------------------

struct DisplacementCoeffs {
  DomainBox box;
  int order = 1;  // per-axis polynomial count M (degrees 0..M-1)
  Mat coeffs;     // basis_count x dim

  static DisplacementCoeffs zero(const DomainBox& box, int order) {
    DisplacementCoeffs c;
    c.box = box;
    c.order = order;
    int count = 1;
    for (int d = 0; d < box.dim; ++d) count *= order;
    c.coeffs = Mat::Zero(count, box.dim);
    return c;
  }

  bool is_zero() const { return coeffs.size() == 0 || coeffs.isZero(0.0); }

  Vec flat() const {
    Vec v(coeffs.size());
    for (int k = 0; k < coeffs.cols(); ++k) v.segment(k * coeffs.rows(), coeffs.rows()) = coeffs.col(k);
    return v;
  }

  static DisplacementCoeffs from_flat(const DomainBox& box, int order, const Vec& v) {
    DisplacementCoeffs c = zero(box, order);
    const long rows = c.coeffs.rows();
    for (int k = 0; k < box.dim; ++k) c.coeffs.col(k) = v.segment(k * rows, rows);
    return c;
  }

  // Re-index tensor coefficients into a larger order, padding with zeros.
  DisplacementCoeffs padded_to(int new_order) const {
    if (new_order < order) throw std::invalid_argument("padded_to: order must grow");
    DisplacementCoeffs out = zero(box, new_order);
    if (box.dim == 1) {
      out.coeffs.topRows(order) = coeffs;
    } else {
      for (int j = 0; j < order; ++j)
        for (int i = 0; i < order; ++i)
          out.coeffs.row(static_cast<long>(j) * new_order + i) = coeffs.row(static_cast<long>(j) * order + i);
    }
    return out;
  }
};

inline Vec eval_displacement(const DisplacementCoeffs& c, const double* x) {
  const BubbleBasis basis(c.box, c.order);
  const Vec b = basis.values(x);
  Vec out(c.box.dim);
  for (int k = 0; k < c.box.dim; ++k) out[k] = c.box.extent(k) * b.dot(c.coeffs.col(k));
  return out;
}

// phi = Id + Psi with evaluation, clamping and the analytic Jacobian.
class SpatialTransform {
 public:
  explicit SpatialTransform(DisplacementCoeffs c) : c_(std::move(c)), basis_(c_.box, c_.order) {}

  const DisplacementCoeffs& coeffs() const { return c_; }
  const DomainBox& box() const { return c_.box; }
  bool is_identity() const { return c_.is_zero(); }

  void displacement(const double* x, double* out) const {
    const Vec b = basis_.values(x);
    for (int k = 0; k < c_.box.dim; ++k) out[k] = c_.box.extent(k) * b.dot(c_.coeffs.col(k));
  }

  // phi(x), clamped to the closed domain.
  void map_clamped(const double* x, double* out) const {
    displacement(x, out);
    for (int k = 0; k < c_.box.dim; ++k) out[k] = c_.box.clamp(k, x[k] + out[k]);
  }

  // Jacobian matrix of phi (dim x dim, row = component, col = derivative axis).
  Mat jacobian(const double* x) const {
    const int dim = c_.box.dim;
    Mat J = Mat::Identity(dim, dim);
    for (int l = 0; l < dim; ++l) {
      const Vec db = basis_.unit_partial(x, l);
      for (int k = 0; k < dim; ++k)
        J(k, l) += c_.box.extent(k) / c_.box.extent(l) * db.dot(c_.coeffs.col(k));
    }
    return J;
  }

 private:
  DisplacementCoeffs c_;
  BubbleBasis basis_;
};

// ---------------------------------------------------------------------------
// Regularizer: L2 norm of the analytic Laplacian of the displacement. The
// Gram matrix of basis Laplacians is exact Gauss-Legendre quadrature.
// ---------------------------------------------------------------------------

inline Mat laplacian_gram(const DomainBox& box, int order) {
  const BubbleBasis basis(box, order);
  // integrand degree per axis <= 2 * (order + 1); rule order n is exact to 2n-1
  const int q = order + 2;
  const QuadratureRule rule = (box.dim == 1) ? gauss_legendre_1d(q) : gauss_legendre_2d(q);
  double volume = 1.0;
  for (int d = 0; d < box.dim; ++d) volume *= box.extent(d);
  Mat G = Mat::Zero(basis.count(), basis.count());
  for (int p = 0; p < rule.n_points(); ++p) {
    double x[2];
    for (int d = 0; d < box.dim; ++d) x[d] = box.lo[d] + rule.points(p, d) * box.extent(d);
    const Vec lap = basis.physical_laplacian(x);
    G += (rule.weights[p] * volume) * (lap * lap.transpose());
  }
  return G;
}

// ||Delta Psi||_{L2}; quadratic form in the coefficients.
inline double regularizer(const DisplacementCoeffs& c) {
  const Mat G = laplacian_gram(c.box, c.order);
  double sq = 0.0;
  for (int k = 0; k < c.box.dim; ++k) {
    const double s = c.box.extent(k);
    sq += s * s * c.coeffs.col(k).dot(G * c.coeffs.col(k));
  }
  return std::sqrt(std::max(sq, 0.0));
}

// ---------------------------------------------------------------------------
// Quadrature point cloud over all grid cells (weights carry the cell measure,
// summing to the domain volume).
// ---------------------------------------------------------------------------

struct CellQuadrature {
  int dim = 1;
  Mat points;   // n_q x dim
  Vec weights;  // physical measure
  int per_cell = 1;
};

inline CellQuadrature make_cell_quadrature(const Grid1D& grid, const QuadratureRule& rule) {
  CellQuadrature q;
  q.dim = 1;
  q.per_cell = rule.n_points();
  const long nq = static_cast<long>(grid.n_cells) * rule.n_points();
  q.points.resize(nq, 1);
  q.weights.resize(nq);
  const double dx = grid.dx();
  for (int i = 0; i < grid.n_cells; ++i)
    for (int r = 0; r < rule.n_points(); ++r) {
      const long id = static_cast<long>(i) * rule.n_points() + r;
      q.points(id, 0) = grid.a + (i + rule.points(r, 0)) * dx;
      q.weights[id] = rule.weights[r] * dx;
    }
  return q;
}

inline CellQuadrature make_cell_quadrature(const Grid2D& grid, const QuadratureRule& rule) {
  CellQuadrature q;
  q.dim = 2;
  q.per_cell = rule.n_points();
  const long nq = grid.n_cells() * rule.n_points();
  q.points.resize(nq, 2);
  q.weights.resize(nq);
  const double dx = grid.x.dx(), dy = grid.y.dx();
  for (long cell = 0; cell < grid.n_cells(); ++cell) {
    const int i = static_cast<int>(cell % grid.nx());
    const int j = static_cast<int>(cell / grid.nx());
    for (int r = 0; r < rule.n_points(); ++r) {
      const long id = cell * rule.n_points() + r;
      q.points(id, 0) = grid.x.a + (i + rule.points(r, 0)) * dx;
      q.points(id, 1) = grid.y.a + (j + rule.points(r, 1)) * dy;
      q.weights[id] = rule.weights[r] * grid.cell_area();
    }
  }
  return q;
}

// Bubble-basis values at a point cloud (rows = points), in unit coordinates.
inline Mat basis_values_at(const BubbleBasis& basis, const Mat& points) {
  Mat B(points.rows(), basis.count());
  for (long p = 0; p < points.rows(); ++p) {
    double x[2] = {points(p, 0), basis.dim() == 2 ? points(p, 1) : 0.0};
    B.row(p) = basis.values(x).transpose();
  }
  return B;
}

// ---------------------------------------------------------------------------
// Matching criteria. The L2 variant measures the squared L2 distance between
// the warped target snapshot and the reference snapshot; the point-set
// variant the squared misfit of known interface points.
// ---------------------------------------------------------------------------

struct L2SnapshotData {
  const CellQuadrature* quad = nullptr;
  Vec ref_at_q;         // reference snapshot interpolant at quadrature points
  Grid1D grid1;         // target interpolation grid (dim 1)
  Grid2D grid2;         // (dim 2)
  const Field* target = nullptr;
  int dim = 1;
};

struct PointSetData {
  Mat ref_points;     // N_p x dim, along the reference interface
  Mat target_points;  // N_p x dim, same parametrization at the sample
};

using MatchingData = std::variant<L2SnapshotData, PointSetData>;

struct RegistrationConfig {
  double epsilon = 1e-2;   // regularization weight
  double tol_M = 1e-3;     // relative stagnation tolerance for order selection
  int max_M = 8;
  int initial_M = 1;
  double gradient_tol = 1e-6;
  int max_iterations = 200;
  int workers = 0;
  int batch_size = 16;  // wavefront batch, fixed for reproducibility
};

// Per-sample registration problem with shared precomputations.
class RegistrationProblem {
 public:
  RegistrationProblem(MatchingData data, const BubbleBasis& basis, const Mat& basis_at_points,
                      const Mat& lap_gram, double epsilon)
      : data_(std::move(data)), basis_(&basis), B_(&basis_at_points), gram_(&lap_gram),
        epsilon_(epsilon) {}

  int coeff_count() const { return basis_->count() * basis_->dim(); }
  const DomainBox& box() const { return basis_->box(); }
  int order() const { return basis_->order(); }
  double epsilon() const { return epsilon_; }

  // Matching value M(c); gradient accumulated if grad has coefficients size.
  double matching(const Vec& flat, Vec* grad) const {
    const int dim = basis_->dim();
    const long nb = basis_->count();
    if (std::holds_alternative<L2SnapshotData>(data_)) {
      const auto& d = std::get<L2SnapshotData>(data_);
      const long nq = d.quad->points.rows();
      Mat psi(nq, dim);
      for (int k = 0; k < dim; ++k)
        psi.col(k) = basis_->box().extent(k) * (*B_ * flat.segment(k * nb, nb));
      double value = 0.0;
      Mat wdiff_grad;
      if (grad) wdiff_grad = Mat::Zero(nq, dim);
      if (dim == 1) {
        LinearInterp1D interp(d.grid1, *d.target);
        for (long q = 0; q < nq; ++q) {
          const double y = d.grid1.box().clamp(0, d.quad->points(q, 0) + psi(q, 0));
          const double diff = interp(y) - d.ref_at_q[q];
          value += d.quad->weights[q] * diff * diff;
          if (grad) wdiff_grad(q, 0) = d.quad->weights[q] * 2.0 * diff * interp.gradient(y);
        }
      } else {
        BilinearInterp2D interp(d.grid2, *d.target);
        for (long q = 0; q < nq; ++q) {
          const double y0 = d.grid2.box().clamp(0, d.quad->points(q, 0) + psi(q, 0));
          const double y1 = d.grid2.box().clamp(1, d.quad->points(q, 1) + psi(q, 1));
          double g[2];
          const double diff = interp.value_gradient(y0, y1, g) - d.ref_at_q[q];
          value += d.quad->weights[q] * diff * diff;
          if (grad) {
            wdiff_grad(q, 0) = d.quad->weights[q] * 2.0 * diff * g[0];
            wdiff_grad(q, 1) = d.quad->weights[q] * 2.0 * diff * g[1];
          }
        }
      }
      if (grad) {
        for (int k = 0; k < dim; ++k)
          grad->segment(k * nb, nb) =
              basis_->box().extent(k) * (B_->transpose() * wdiff_grad.col(k));
      }
      return value;
    }
    const auto& d = std::get<PointSetData>(data_);
    const long np = d.ref_points.rows();
    Mat psi(np, dim);
    for (int k = 0; k < dim; ++k)
      psi.col(k) = basis_->box().extent(k) * (*B_ * flat.segment(k * nb, nb));
    double value = 0.0;
    if (grad) grad->setZero();
    for (long i = 0; i < np; ++i)
      for (int k = 0; k < dim; ++k) {
        const double r = d.target_points(i, k) - (d.ref_points(i, k) + psi(i, k));
        value += r * r;
        if (grad)
          grad->segment(k * nb, nb) -= 2.0 * r * basis_->box().extent(k) * B_->row(i).transpose();
      }
    return value;
  }

  // F(c) = M(c)^2 + epsilon * R(c)^2.
  double objective(const Vec& flat, Vec& grad) const {
    const bool want_grad = grad.size() > 0;
    Vec mgrad;
    if (want_grad) mgrad.setZero(flat.size());
    const double m = matching(flat, want_grad ? &mgrad : nullptr);
    const int dim = basis_->dim();
    const long nb = basis_->count();
    double reg_sq = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double s = basis_->box().extent(k);
      const Vec Gc = (*gram_) * flat.segment(k * nb, nb);
      reg_sq += s * s * flat.segment(k * nb, nb).dot(Gc);
      if (want_grad) grad.segment(k * nb, nb) = 2.0 * epsilon_ * s * s * Gc;
    }
    if (want_grad) grad += 2.0 * m * mgrad;
    return m * m + epsilon_ * reg_sq;
  }

 private:
  MatchingData data_;
  const BubbleBasis* basis_;
  const Mat* B_;
  const Mat* gram_;
  double epsilon_;
};

struct RegisterOneResult {
  Vec coeffs;
  double objective_initial = 0.0;
  double objective_final = 0.0;
  double matching_final = 0.0;
  int iterations = 0;
  bool used_fd_fallback = false;
};

inline RegisterOneResult register_one(const Vec& c0, const RegistrationProblem& prob,
                                      const RegistrationConfig& cfg) {
  if (c0.size() != prob.coeff_count())
    throw std::invalid_argument("register_one: initial guess has wrong size");
  BfgsOptions opt;
  opt.gradient_tol = cfg.gradient_tol;
  opt.max_iterations = cfg.max_iterations;
  ObjectiveFn fn = [&prob](const Vec& x, Vec& grad) { return prob.objective(x, grad); };

  RegisterOneResult out;
  BfgsResult res;
  try {
    res = bfgs_minimize(c0, fn, opt);
  } catch (const NumericalError& err) {
    throw RegistrationError(std::string("register_one: ") + err.what());
  }

  if (res.line_search_stalled && res.gradient_norm > cfg.gradient_tol) {
    // analytic subgradient stalled on a kink; one finite-difference retry
    ObjectiveFn fd = [&prob](const Vec& x, Vec& grad) {
      Vec dummy(0);
      const double v = prob.objective(x, dummy);
      if (grad.size() > 0) {
        grad = numerical_gradient(x, [&prob](const Vec& xx) {
          Vec d0(0);
          return prob.objective(xx, d0);
        });
      }
      return v;
    };
    BfgsOptions fd_opt = opt;
    fd_opt.max_iterations = 20;
    try {
      const BfgsResult res_fd = bfgs_minimize(res.x, fd, fd_opt);
      if (res_fd.value < res.value) {
        res = res_fd;
        out.used_fd_fallback = true;
      }
    } catch (const NumericalError&) {
      // keep the analytic result
    }
  }

  Vec g0(0);
  out.objective_initial = prob.objective(c0, g0);
  out.coeffs = res.value <= out.objective_initial ? res.x : c0;
  out.objective_final = std::min(res.value, out.objective_initial);
  out.matching_final = prob.matching(out.coeffs, nullptr);
  out.iterations = res.iterations;
  return out;
}

// ---------------------------------------------------------------------------
// Snapshot transformation: g = Pi[u(phi(.))] by per-cell quadrature of the
// interpolated snapshot at warped points. The exact-identity transform
// short-circuits so g == u bit-for-bit.
// ---------------------------------------------------------------------------

inline Field transform_snapshot_1d(const Field& u, const DisplacementCoeffs& c, const Grid1D& grid,
                                   const QuadratureRule& rule) {
  if (c.is_zero()) return u;
  const SpatialTransform phi(c);
  LinearInterp1D interp(grid, u);
  Field out(grid.n_cells);
  const double dx = grid.dx();
  for (int i = 0; i < grid.n_cells; ++i) {
    double acc = 0.0;
    for (int r = 0; r < rule.n_points(); ++r) {
      double x = grid.a + (i + rule.points(r, 0)) * dx;
      double y;
      phi.map_clamped(&x, &y);
      acc += rule.weights[r] * interp(y);
    }
    out[i] = acc;
  }
  return out;
}

inline Field transform_snapshot_2d(const Field& u, const DisplacementCoeffs& c, const Grid2D& grid,
                                   const QuadratureRule& rule) {
  if (c.is_zero()) return u;
  const SpatialTransform phi(c);
  BilinearInterp2D interp(grid, u);
  Field out(grid.n_cells());
  const double dx = grid.x.dx(), dy = grid.y.dx();
  for (long cell = 0; cell < grid.n_cells(); ++cell) {
    const int i = static_cast<int>(cell % grid.nx());
    const int j = static_cast<int>(cell / grid.nx());
    double acc = 0.0;
    for (int r = 0; r < rule.n_points(); ++r) {
      double x[2] = {grid.x.a + (i + rule.points(r, 0)) * dx, grid.y.a + (j + rule.points(r, 1)) * dy};
      double y[2];
      phi.map_clamped(x, y);
      acc += rule.weights[r] * interp(y[0], y[1]);
    }
    out[cell] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Order-continuation registration over a sample set: for each order M the
// samples are swept outward from the reference in fixed batches; every solve
// warm-starts from the better of its own previous-order solution and the
// nearest already-solved neighbor. The order grows until the mean matching
// value stagnates.
// ---------------------------------------------------------------------------

struct RegistrationResult {
  int order = 1;
  Mat coeffs;                    // m x (dim * M^dim)
  std::vector<double> matching;  // final matching value per sample
  std::vector<double> xi_trace;  // mean matching per tried order
  bool converged = false;
  long ref_index = -1;
};

// Factory for per-sample matching data at a given basis order.
using MatchingFactory = std::function<MatchingData(long sample_index)>;

inline RegistrationResult register_all(const DomainBox& box, const Mat& samples,
                                       const Mat& param_box, long ref_index,
                                       const MatchingFactory& make_data,
                                       const RegistrationConfig& cfg) {
  const long m = samples.rows();
  if (ref_index < 0 || ref_index >= m)
    throw std::invalid_argument("register_all: reference sample must be in the sample set");

  // normalized parameter coordinates for the continuation metric
  Mat zn(m, samples.cols());
  for (int d = 0; d < samples.cols(); ++d) {
    const double lo = param_box(d, 0), span = std::max(param_box(d, 1) - param_box(d, 0), 1e-300);
    zn.col(d) = (samples.col(d).array() - lo) / span;
  }
  std::vector<long> order_idx(m);
  std::iota(order_idx.begin(), order_idx.end(), 0);
  std::sort(order_idx.begin(), order_idx.end(), [&](long a, long b) {
    const double da = (zn.row(a) - zn.row(ref_index)).norm();
    const double db = (zn.row(b) - zn.row(ref_index)).norm();
    return da < db || (da == db && a < b);
  });

  RegistrationResult result;
  result.ref_index = ref_index;

  std::vector<Vec> prev_solution(m);  // previous order, per sample
  double xi_prev = -1.0;
  int M = cfg.initial_M;
  while (true) {
    const BubbleBasis basis(box, M);
    const Mat gram = laplacian_gram(box, M);
    // shared point cloud: all criteria evaluate the basis at fixed points
    std::vector<MatchingData> data(m);
    for (long s = 0; s < m; ++s) data[s] = make_data(s);
    const Mat* shared_points = nullptr;
    Mat basis_points;
    if (std::holds_alternative<L2SnapshotData>(data[0])) {
      shared_points = &std::get<L2SnapshotData>(data[0]).quad->points;
    } else {
      shared_points = &std::get<PointSetData>(data[0]).ref_points;
    }
    basis_points = basis_values_at(basis, *shared_points);

    std::vector<Vec> solution(m);
    std::vector<double> matching(m, 0.0);
    std::vector<char> solved(m, 0);
    const int nc = basis.count() * box.dim;

    // reference sample: identically zero displacement, exact fixed point
    solution[ref_index] = Vec::Zero(nc);
    {
      RegistrationProblem prob(data[ref_index], basis, basis_points, gram, cfg.epsilon);
      matching[ref_index] = prob.matching(solution[ref_index], nullptr);
    }
    solved[ref_index] = 1;

    std::vector<long> pending;
    for (long idx : order_idx)
      if (idx != ref_index) pending.push_back(idx);

    for (std::size_t start = 0; start < pending.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(pending.size(), start + cfg.batch_size);
      parallel_for(static_cast<long>(stop - start), [&](std::int64_t t) {
        const long s = pending[start + t];
        RegistrationProblem prob(data[s], basis, basis_points, gram, cfg.epsilon);
        // candidate warm starts: own previous-order solution, nearest solved
        Vec best_c0 = Vec::Zero(nc);
        double best_val = std::numeric_limits<double>::infinity();
        auto consider = [&](const Vec& c0) {
          Vec g(0);
          const double v = prob.objective(c0, g);
          if (v < best_val) {
            best_val = v;
            best_c0 = c0;
          }
        };
        double dmin = std::numeric_limits<double>::infinity();
        long nearest = ref_index;
        for (long other = 0; other < m; ++other)
          if (solved[other]) {
            const double dist = (zn.row(other) - zn.row(s)).norm();
            if (dist < dmin) {
              dmin = dist;
              nearest = other;
            }
          }
        consider(solution[nearest]);
        if (prev_solution[s].size() > 0)
          consider(DisplacementCoeffs::from_flat(box, M - 1, prev_solution[s]).padded_to(M).flat());
        const RegisterOneResult one = register_one(best_c0, prob, cfg);
        solution[s] = one.coeffs;
        matching[s] = one.matching_final;
      }, cfg.workers);
      for (std::size_t t = start; t < stop; ++t) solved[pending[t]] = 1;
    }

    const double xi = std::accumulate(matching.begin(), matching.end(), 0.0) / m;
    result.xi_trace.push_back(xi);
    result.order = M;
    result.coeffs.resize(m, nc);
    for (long s = 0; s < m; ++s) result.coeffs.row(s) = solution[s].transpose();
    result.matching = matching;

    bool stop_now = false;
    if (M > cfg.initial_M) {
      if (xi_prev <= 0.0) {
        result.converged = true;  // nothing left to match
        stop_now = true;
      } else if (std::abs(xi - xi_prev) / xi_prev <= cfg.tol_M) {
        result.converged = true;
        stop_now = true;
      }
    }
    if (!stop_now && M >= cfg.max_M) {
      stop_now = true;  // order cap hit without stagnation; caller sees converged=false
    }
    if (stop_now) break;

    xi_prev = xi;
    prev_solution = std::move(solution);
    ++M;
  }
  return result;
}

}  // namespace tsmor
