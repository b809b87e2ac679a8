#pragma once

#include "tsmor/common.hpp"

#include <Eigen/SVD>

namespace tsmor {

// ---------------------------------------------------------------------------
// Proper orthogonal decomposition of a snapshot matrix. On uniform grids the
// cell-measure weighting of the discrete L2 inner product cancels out of the
// basis and the coefficients, so the plain SVD is used throughout.
// ---------------------------------------------------------------------------

enum class SnapshotKind { Transformed, Untransformed, InverseDisplacement };

struct SnapshotMatrix {
  Mat data;  // N x m_tr
  SnapshotKind kind = SnapshotKind::Untransformed;
};

struct PodBasis {
  Mat modes;           // N x n, orthonormal columns
  Vec singular_values; // all min(N, m_tr) values, non-increasing
  int n = 0;
};

// Left singular vectors with a deterministic sign convention: the
// largest-magnitude entry of every mode is made positive.
inline PodBasis compute_pod(const Mat& snapshots, int n) {
  const long rank_cap = std::min(snapshots.rows(), snapshots.cols());
  if (n < 1 || n > rank_cap)
    throw std::invalid_argument("compute_pod: n out of range");
  Eigen::BDCSVD<Mat> svd(snapshots, Eigen::ComputeThinU);
  PodBasis basis;
  basis.singular_values = svd.singularValues();
  basis.modes = svd.matrixU().leftCols(n);
  basis.n = n;
  for (int k = 0; k < n; ++k) {
    Eigen::Index imax;
    basis.modes.col(k).cwiseAbs().maxCoeff(&imax);
    if (basis.modes(imax, k) < 0.0) basis.modes.col(k) = -basis.modes.col(k);
  }
  return basis;
}

inline PodBasis compute_pod(const SnapshotMatrix& snapshots, int n) {
  return compute_pod(snapshots.data, n);
}

// Relative projection-error bound from the singular-value tail:
// sqrt(sum_{i>n} sigma_i^2) / ||S||_F.
inline double projection_error(const PodBasis& basis, int n) {
  if (n < 0 || n > basis.singular_values.size())
    throw std::invalid_argument("projection_error: n out of range");
  const double total = basis.singular_values.squaredNorm();
  if (total == 0.0) return 0.0;
  const double tail = basis.singular_values.tail(basis.singular_values.size() - n).squaredNorm();
  return std::sqrt(tail / total);
}

// Expansion coefficients of f in the basis; orthonormal columns reduce the
// weighted inner products to plain dot products.
inline Vec project_onto_basis(const Field& f, const PodBasis& basis) {
  if (f.size() != basis.modes.rows())
    throw std::invalid_argument("project_onto_basis: dimension mismatch");
  return basis.modes.transpose() * f;
}

inline Mat project_columns(const Mat& fields, const PodBasis& basis) {
  return basis.modes.transpose() * fields;
}

inline Field reconstruct(const Vec& alpha, const PodBasis& basis) {
  if (alpha.size() > basis.n)
    throw std::invalid_argument("reconstruct: coefficient count exceeds basis size");
  return basis.modes.leftCols(alpha.size()) * alpha;
}

}  // namespace tsmor
