#pragma once

#include "tsmor/optim.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace tsmor {

// ---------------------------------------------------------------------------
// Gaussian process regression with a linear mean and the ARD squared
// exponential kernel, trained by maximum likelihood. A noise term with a
// floor of 1e-6 * std(y) keeps the covariance factorizable.
// ---------------------------------------------------------------------------

struct GprHyperparams {
  Vec beta;           // p+1 mean coefficients for the feature map (1, z_1..z_p)
  double kappa1 = 1;  // signal amplitude, > 0
  Vec length_scales;  // p positive scales
  double noise_sigma = 0;  // >= noise floor
};

inline double kernel_eval(const GprHyperparams& hp, const Vec& z1, const Vec& z2) {
  if (z1.size() != z2.size() || z1.size() != hp.length_scales.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  double q = 0.0;
  for (int d = 0; d < z1.size(); ++d) {
    const double delta = (z1[d] - z2[d]) / hp.length_scales[d];
    q += delta * delta;
  }
  return hp.kappa1 * hp.kappa1 * std::exp(-0.5 * q);
}

namespace gpr_detail {

inline Mat feature_matrix(const Mat& X) {
  Mat Phi(X.rows(), X.cols() + 1);
  Phi.col(0).setOnes();
  Phi.rightCols(X.cols()) = X;
  return Phi;
}

inline Mat kernel_matrix(double kappa1, const Vec& lengths, const Mat& X) {
  const long m = X.rows();
  Mat Q = Mat::Zero(m, m);
  for (int d = 0; d < X.cols(); ++d) {
    const double il2 = 1.0 / (lengths[d] * lengths[d]);
    for (long i = 0; i < m; ++i)
      for (long j = 0; j <= i; ++j) {
        const double delta = X(i, d) - X(j, d);
        Q(i, j) += delta * delta * il2;
      }
  }
  const double k2 = kappa1 * kappa1;
  Mat K(m, m);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j <= i; ++j) {
      K(i, j) = k2 * std::exp(-0.5 * Q(i, j));
      K(j, i) = K(i, j);
    }
  return K;
}

// Cholesky with escalating diagonal jitter; throws on persistent failure.
inline Eigen::LLT<Mat> robust_llt(const Mat& A, double* jitter_used = nullptr) {
  const long m = A.rows();
  const double scale = std::max(A.trace() / static_cast<double>(m), 1e-300);
  double jitter = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::LLT<Mat> llt(jitter == 0.0 ? A : Mat(A + jitter * Mat::Identity(m, m)));
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt;
    }
    jitter = (jitter == 0.0) ? 1e-10 * scale : jitter * 10.0;
    if (jitter > 1e-6 * scale * 10.0) break;
  }
  throw NumericalError("gpr: covariance factorization failed after jitter escalation");
}

}  // namespace gpr_detail

// Log marginal likelihood of targets y at inputs D under the hyper-parameters.
inline double log_likelihood(const GprHyperparams& hp, const Mat& D, const Vec& y) {
  const long m = D.rows();
  if (m < 2) throw std::invalid_argument("log_likelihood: need at least 2 samples");
  if (y.size() != m) throw std::invalid_argument("log_likelihood: target size mismatch");
  Mat K = gpr_detail::kernel_matrix(hp.kappa1, hp.length_scales, D);
  K.diagonal().array() += hp.noise_sigma * hp.noise_sigma;
  const Eigen::LLT<Mat> llt = gpr_detail::robust_llt(K);
  const Vec r = y - gpr_detail::feature_matrix(D) * hp.beta;
  const Vec a = llt.solve(r);
  double logdet = 0.0;
  for (long i = 0; i < m; ++i) logdet += std::log(llt.matrixL()(i, i));
  logdet *= 2.0;
  return -0.5 * r.dot(a) - 0.5 * logdet - 0.5 * m * std::log(2.0 * M_PI);
}

// Gradient of log_likelihood w.r.t. (beta, kappa1, length_scales, noise_sigma),
// in that order. Central-difference tested.
inline Vec log_likelihood_gradient(const GprHyperparams& hp, const Mat& D, const Vec& y) {
  const long m = D.rows();
  const int p = static_cast<int>(D.cols());
  Mat K0 = gpr_detail::kernel_matrix(hp.kappa1, hp.length_scales, D);
  Mat K = K0;
  K.diagonal().array() += hp.noise_sigma * hp.noise_sigma;
  const Eigen::LLT<Mat> llt = gpr_detail::robust_llt(K);
  const Mat Phi = gpr_detail::feature_matrix(D);
  const Vec r = y - Phi * hp.beta;
  const Vec a = llt.solve(r);
  const Mat Kinv = llt.solve(Mat::Identity(m, m));

  Vec grad(p + 1 + 1 + p + 1);
  grad.head(p + 1) = Phi.transpose() * a;
  // d/d kappa1: dK = (2/kappa1) K0
  {
    const Mat dK = (2.0 / hp.kappa1) * K0;
    grad[p + 1] = 0.5 * (a.dot(dK * a) - (Kinv.cwiseProduct(dK)).sum());
  }
  for (int d = 0; d < p; ++d) {
    const double il3 = 1.0 / (hp.length_scales[d] * hp.length_scales[d] * hp.length_scales[d]);
    Mat dK(m, m);
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < m; ++j) {
        const double delta = D(i, d) - D(j, d);
        dK(i, j) = K0(i, j) * delta * delta * il3;
      }
    grad[p + 2 + d] = 0.5 * (a.dot(dK * a) - (Kinv.cwiseProduct(dK)).sum());
  }
  grad[2 * p + 2] = 0.5 * 2.0 * hp.noise_sigma * (a.squaredNorm() - Kinv.trace());
  return grad;
}

struct GprTrainConfig {
  int restarts = 5;
  int max_iterations = 100;
  double gradient_tol = 1e-4;
  std::uint64_t seed = 0;
};

class GprModel {
 public:
  GprModel() = default;

  // Build prediction state from hyper-parameters in standardized coordinates.
  GprModel(GprHyperparams hp, Mat X_std, Vec y, Vec z_mean, Vec z_scale)
      : hp_(std::move(hp)), X_(std::move(X_std)), y_(std::move(y)),
        z_mean_(std::move(z_mean)), z_scale_(std::move(z_scale)) {
    finalize();
  }

  const GprHyperparams& hyperparams() const { return hp_; }
  const Mat& training_inputs_std() const { return X_; }
  const Vec& training_targets() const { return y_; }
  const Vec& z_mean() const { return z_mean_; }
  const Vec& z_scale() const { return z_scale_; }
  const Vec& weights() const { return w_; }

  double predict(const Vec& z_raw, double lambda) const {
    Vec k;
    const double mean = mean_only(z_raw, k);
    if (lambda == 0.0) return mean;
    return mean + lambda * std::sqrt(predictive_variance_from(k));
  }

  double predictive_variance(const Vec& z_raw) const {
    Vec k;
    mean_only(z_raw, k);
    return predictive_variance_from(k);
  }

 private:
  void finalize() {
    Mat K = gpr_detail::kernel_matrix(hp_.kappa1, hp_.length_scales, X_);
    K.diagonal().array() += hp_.noise_sigma * hp_.noise_sigma;
    llt_ = gpr_detail::robust_llt(K);
    const Vec r = y_ - gpr_detail::feature_matrix(X_) * hp_.beta;
    w_ = llt_.solve(r);
  }

  Vec standardize(const Vec& z_raw) const {
    Vec z(z_raw.size());
    for (int d = 0; d < z.size(); ++d) z[d] = (z_raw[d] - z_mean_[d]) / z_scale_[d];
    return z;
  }

  double mean_only(const Vec& z_raw, Vec& k_out) const {
    const Vec z = standardize(z_raw);
    const long m = X_.rows();
    k_out.resize(m);
    const double k2 = hp_.kappa1 * hp_.kappa1;
    for (long i = 0; i < m; ++i) {
      double q = 0.0;
      for (int d = 0; d < X_.cols(); ++d) {
        const double delta = (z[d] - X_(i, d)) / hp_.length_scales[d];
        q += delta * delta;
      }
      k_out[i] = k2 * std::exp(-0.5 * q);
    }
    double mean = hp_.beta[0];
    for (int d = 0; d < z.size(); ++d) mean += hp_.beta[d + 1] * z[d];
    return mean + k_out.dot(w_);
  }

  double predictive_variance_from(const Vec& k) const {
    const Vec v = llt_.matrixL().solve(k);
    const double var = hp_.kappa1 * hp_.kappa1 - v.squaredNorm();
    return var > 0.0 ? var : 0.0;
  }

  GprHyperparams hp_;
  Mat X_;
  Vec y_;
  Vec z_mean_, z_scale_;
  Eigen::LLT<Mat> llt_;
  Vec w_;
};

namespace gpr_detail {

// Optimization variables: [beta; log kappa1; log lengths; s] with the noise
// variance parametrized as floor^2 + exp(2 s), keeping the floor smooth.
struct NllWorkspace {
  const Mat* X;
  const Vec* y;
  Mat Phi;
  std::vector<Mat> sq_dist;  // per input dim
  double noise_floor2;

  // cache of the last factorization, keyed by the parameter vector
  Vec last_x;
  Mat K0, K;
  Eigen::LLT<Mat> llt;
  Vec r, a;
  double value = 0.0;

  explicit NllWorkspace(const Mat& X_, const Vec& y_, double floor_sigma)
      : X(&X_), y(&y_), noise_floor2(floor_sigma * floor_sigma) {
    Phi = feature_matrix(X_);
    const long m = X_.rows();
    sq_dist.resize(X_.cols());
    for (int d = 0; d < X_.cols(); ++d) {
      sq_dist[d].resize(m, m);
      for (long i = 0; i < m; ++i)
        for (long j = 0; j < m; ++j) {
          const double delta = X_(i, d) - X_(j, d);
          sq_dist[d](i, j) = delta * delta;
        }
    }
  }

  void unpack(const Vec& v, Vec& beta, double& kappa1, Vec& lengths, double& noise2,
              double& exp2s) const {
    const int p = static_cast<int>(X->cols());
    beta = v.head(p + 1);
    kappa1 = std::exp(v[p + 1]);
    lengths.resize(p);
    for (int d = 0; d < p; ++d) lengths[d] = std::exp(v[p + 2 + d]);
    exp2s = std::exp(2.0 * v[2 * p + 2]);
    noise2 = noise_floor2 + exp2s;
  }

  double eval(const Vec& v, Vec& grad) {
    const long m = X->rows();
    const int p = static_cast<int>(X->cols());
    // fence: log-hyper-parameters beyond e^{+-40} are meaningless and break
    // the arithmetic; the line search treats the region as infeasible
    for (long i = p + 1; i < v.size(); ++i)
      if (std::abs(v[i]) > 40.0) return std::numeric_limits<double>::infinity();
    Vec beta, lengths;
    double kappa1, noise2, exp2s;
    unpack(v, beta, kappa1, lengths, noise2, exp2s);

    const bool reuse = (last_x.size() == v.size() && (last_x - v).cwiseAbs().maxCoeff() == 0.0);
    if (!reuse) {
      Mat Q = Mat::Zero(m, m);
      for (int d = 0; d < p; ++d) Q += sq_dist[d] / (lengths[d] * lengths[d]);
      K0 = (kappa1 * kappa1) * (-0.5 * Q).array().exp().matrix();
      K = K0;
      K.diagonal().array() += noise2;
      if (!K.allFinite()) return std::numeric_limits<double>::infinity();
      try {
        llt = robust_llt(K);
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
      r = *y - Phi * beta;
      a = llt.solve(r);
      double logdet = 0.0;
      for (long i = 0; i < m; ++i) logdet += std::log(llt.matrixL()(i, i));
      value = 0.5 * r.dot(a) + logdet + 0.5 * m * std::log(2.0 * M_PI);
      last_x = v;
    }
    if (!std::isfinite(value)) return value;

    if (grad.size() > 0) {
      const Mat Kinv = llt.solve(Mat::Identity(m, m));
      grad.head(p + 1) = -(Phi.transpose() * a);
      {
        // d/d log kappa1: dK = 2 K0
        const double quad = a.dot(K0 * a);
        const double tr = (Kinv.cwiseProduct(K0)).sum();
        grad[p + 1] = -(quad - tr);  // -(1/2)*2*(quad - tr)
      }
      for (int d = 0; d < p; ++d) {
        // d/d log l_d: dK = K0 .* sq_dist_d / l_d^2
        const Mat dK = K0.cwiseProduct(sq_dist[d]) / (lengths[d] * lengths[d]);
        const double quad = a.dot(dK * a);
        const double tr = (Kinv.cwiseProduct(dK)).sum();
        grad[p + 2 + d] = -0.5 * (quad - tr);
      }
      {
        // d/d s: dK = 2 exp(2s) I
        const double quad = a.squaredNorm();
        const double tr = Kinv.trace();
        grad[2 * p + 2] = -exp2s * (quad - tr);
      }
    }
    return value;
  }
};

}  // namespace gpr_detail

// Maximum-likelihood training from multiple initializations: one heuristic
// start plus randomized perturbations; the best final likelihood wins.
inline GprModel train_gpr(const Mat& Z_raw, const Vec& y, const GprTrainConfig& cfg = {}) {
  const long m = Z_raw.rows();
  const int p = static_cast<int>(Z_raw.cols());
  if (m < 2) throw std::invalid_argument("train_gpr: need at least 2 samples");
  if (y.size() != m) throw std::invalid_argument("train_gpr: target size mismatch");
  if (!y.allFinite()) throw std::invalid_argument("train_gpr: non-finite targets");

  // standardize inputs per dimension
  Vec z_mean(p), z_scale(p);
  for (int d = 0; d < p; ++d) {
    z_mean[d] = Z_raw.col(d).mean();
    const double var = (Z_raw.col(d).array() - z_mean[d]).square().mean();
    z_scale[d] = std::sqrt(var);
    if (!(z_scale[d] > 1e-12 * std::max(1.0, std::abs(z_mean[d])))) z_scale[d] = 1.0;
  }
  Mat X(m, p);
  for (int d = 0; d < p; ++d) X.col(d) = (Z_raw.col(d).array() - z_mean[d]) / z_scale[d];

  const double y_std = std::sqrt((y.array() - y.mean()).square().mean());
  const double noise_floor = std::max(1e-6 * y_std, 1e-12);
  gpr_detail::NllWorkspace ws(X, y, noise_floor);

  // heuristic start: half-range lengths, std(y) amplitude, OLS mean
  Vec v0(2 * p + 3);
  const Mat Phi = gpr_detail::feature_matrix(X);
  const Vec beta_ols = (Phi.transpose() * Phi + 1e-10 * Mat::Identity(p + 1, p + 1))
                           .ldlt()
                           .solve(Phi.transpose() * y);
  v0.head(p + 1) = beta_ols;
  v0[p + 1] = std::log(std::max(y_std, 1e-8));
  for (int d = 0; d < p; ++d) {
    const double range = X.col(d).maxCoeff() - X.col(d).minCoeff();
    v0[p + 2 + d] = std::log(std::max(0.5 * range, 1e-3));
  }
  v0[2 * p + 2] = std::log(std::max(1e-3 * y_std, 1e-10));

  BfgsOptions bopt;
  bopt.max_iterations = cfg.max_iterations;
  bopt.gradient_tol = cfg.gradient_tol;
  bopt.f_tol_rel = 1e-9;  // likelihood plateaus long before the gradient test

  ObjectiveFn objective = [&ws](const Vec& v, Vec& grad) { return ws.eval(v, grad); };

  std::mt19937_64 rng = make_rng(cfg.seed, 0x677072ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Vec best_x;
  double best_val = std::numeric_limits<double>::infinity();
  double heuristic_val = std::numeric_limits<double>::infinity();
  int n_ok = 0;
  for (int restart = 0; restart < std::max(1, cfg.restarts); ++restart) {
    Vec v = v0;
    if (restart > 0) {
      for (int d = 0; d < p + 1; ++d) v[d] += 0.1 * std::max(y_std, 1e-8) * gauss(rng);
      for (int d = p + 1; d < v.size(); ++d) v[d] += 0.5 * gauss(rng);
    }
    try {
      const BfgsResult res = bfgs_minimize(v, objective, bopt);
      ++n_ok;
      if (restart == 0) heuristic_val = res.value;
      if (res.value < best_val) {
        best_val = res.value;
        best_x = res.x;
      }
    } catch (const NumericalError&) {
      // restart failed conditioning; others may still succeed
    }
  }
  if (n_ok == 0 || !best_x.size())
    throw NumericalError("train_gpr: all restarts failed");
  if (best_val > heuristic_val + 1e-9 * std::abs(heuristic_val))
    throw NumericalError("train_gpr: optimizer worsened the heuristic start");

  GprHyperparams hp;
  double noise2, exp2s;
  ws.unpack(best_x, hp.beta, hp.kappa1, hp.length_scales, noise2, exp2s);
  hp.noise_sigma = std::sqrt(noise2);
  return GprModel(std::move(hp), std::move(X), y, std::move(z_mean), std::move(z_scale));
}

}  // namespace tsmor
