#include "tsmor/gpr.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

using namespace tsmor;
using Catch::Approx;

namespace {

GprHyperparams sample_hyperparams(std::mt19937_64& rng, int p) {
  std::uniform_real_distribution<double> uni(0.3, 2.0);
  GprHyperparams hp;
  hp.beta = Vec::Zero(p + 1);
  for (int d = 0; d <= p; ++d) hp.beta[d] = uni(rng) - 1.0;
  hp.kappa1 = uni(rng);
  hp.length_scales = Vec::Zero(p);
  for (int d = 0; d < p; ++d) hp.length_scales[d] = uni(rng);
  hp.noise_sigma = 0.05 * uni(rng);
  return hp;
}

}  // namespace

TEST_CASE("kernel evaluation") {
  GprHyperparams hp;
  hp.kappa1 = 1.0;
  hp.length_scales = Vec::Constant(1, 1.0);
  Vec a = Vec::Constant(1, 0.4);
  CHECK(kernel_eval(hp, a, a) == Approx(1.0));

  hp.kappa1 = 2.0;
  Vec b = Vec::Constant(1, 1.4);
  CHECK(kernel_eval(hp, a, b) == Approx(4.0 * std::exp(-0.5)).epsilon(1e-14));

  // symmetry on random pairs
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  GprHyperparams hp2 = sample_hyperparams(rng, 3);
  for (int rep = 0; rep < 10; ++rep) {
    Vec z1(3), z2(3);
    for (int d = 0; d < 3; ++d) {
      z1[d] = gauss(rng);
      z2[d] = gauss(rng);
    }
    CHECK(kernel_eval(hp2, z1, z2) == Approx(kernel_eval(hp2, z2, z1)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(kernel_eval(hp2, Vec::Zero(3), Vec::Zero(2)), std::invalid_argument);
}

TEST_CASE("log likelihood rejects degenerate sample counts") {
  GprHyperparams hp;
  hp.beta = Vec::Zero(2);
  hp.kappa1 = 1.0;
  hp.length_scales = Vec::Constant(1, 1.0);
  hp.noise_sigma = 0.1;
  Mat D(1, 1);
  D << 0.3;
  Vec y(1);
  y << 1.0;
  CHECK_THROWS_AS(log_likelihood(hp, D, y), std::invalid_argument);
}

TEST_CASE("zero-residual likelihood reduces to the determinant terms") {
  // targets exactly equal to the mean function; the quadratic term vanishes
  const int m = 12;
  Mat D(m, 1);
  for (int i = 0; i < m; ++i) D(i, 0) = 37.0 + i;  // spacing 1 with huge length scale
  GprHyperparams hp;
  hp.beta = Vec::Zero(2);
  hp.beta << 0.7, -0.2;
  hp.kappa1 = 1.0;
  hp.length_scales = Vec::Constant(1, 1e6);
  hp.noise_sigma = 1e-4;
  Vec y(m);
  for (int i = 0; i < m; ++i) y[i] = hp.beta[0] + hp.beta[1] * D(i, 0);

  const double ll = log_likelihood(hp, D, y);
  Mat K = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      K(i, j) = kernel_eval(hp, D.row(i).transpose(), D.row(j).transpose());
  K.diagonal().array() += hp.noise_sigma * hp.noise_sigma;
  const double expected = -0.5 * std::log(K.determinant()) - 0.5 * m * std::log(2.0 * M_PI);
  CHECK(ll == Approx(expected).epsilon(1e-6));
}

TEST_CASE("likelihood gradient matches central differences") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int m = 20, p = 2;
  Mat D(m, p);
  Vec y(m);
  for (int i = 0; i < m; ++i) {
    D(i, 0) = gauss(rng);
    D(i, 1) = gauss(rng);
    y[i] = std::sin(D(i, 0)) + 0.4 * D(i, 1) + 0.02 * gauss(rng);
  }
  for (int rep = 0; rep < 3; ++rep) {
    const GprHyperparams hp = sample_hyperparams(rng, p);
    const Vec grad = log_likelihood_gradient(hp, D, y);
    Vec packed(2 * p + 3);
    packed << hp.beta, hp.kappa1, hp.length_scales, hp.noise_sigma;
    auto unpack = [&](const Vec& v) {
      GprHyperparams h = hp;
      h.beta = v.head(p + 1);
      h.kappa1 = v[p + 1];
      h.length_scales = v.segment(p + 2, p);
      h.noise_sigma = v[2 * p + 2];
      return h;
    };
    for (int k = 0; k < packed.size(); ++k) {
      Vec vp = packed, vm = packed;
      const double h = 1e-6;
      vp[k] += h;
      vm[k] -= h;
      const double fd = (log_likelihood(unpack(vp), D, y) - log_likelihood(unpack(vm), D, y)) / (2 * h);
      CHECK(grad[k] == Approx(fd).epsilon(1e-4).margin(1e-8));
    }
  }
}

TEST_CASE("training recovers a noiseless linear function") {
  const int m = 20;
  Mat D(m, 1);
  Vec y(m);
  for (int i = 0; i < m; ++i) {
    D(i, 0) = i / (m - 1.0);
    y[i] = 3.0 + 2.0 * D(i, 0);
  }
  const GprModel model = train_gpr(D, y, {});
  for (double z : {0.137, 0.512, 0.961}) {
    const double pred = model.predict(Vec::Constant(1, z), 0.0);
    CHECK(pred == Approx(3.0 + 2.0 * z).margin(1e-3));
  }
}

TEST_CASE("constant targets predict the constant") {
  const int m = 15;
  Mat D(m, 1);
  for (int i = 0; i < m; ++i) D(i, 0) = std::cos(0.3 * i);
  const Vec y = Vec::Constant(m, 4.2);
  const GprModel model = train_gpr(D, y, {});
  for (double z : {-0.9, 0.0, 0.7})
    CHECK(model.predict(Vec::Constant(1, z), 0.0) == Approx(4.2).margin(1e-6));
}

TEST_CASE("prediction near-interpolates noiseless data at training points") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int m = 25;
  Mat D(m, 1);
  Vec y(m);
  for (int i = 0; i < m; ++i) {
    D(i, 0) = i / (m - 1.0);
    y[i] = std::sin(3.0 * D(i, 0)) + 0.5 * D(i, 0);
  }
  const GprModel model = train_gpr(D, y, {});
  double worst = 0.0;
  for (int i = 0; i < m; ++i)
    worst = std::max(worst, std::abs(model.predict(D.row(i).transpose(), 0.0) - y[i]));
  CHECK(worst < 1e-4);

  // lambda shifts upward, variance at training inputs below the noise level
  for (int i = 0; i < m; i += 6) {
    const Vec z = D.row(i).transpose();
    CHECK(model.predict(z, 2.0) >= model.predict(z, 0.0));
    const double sn = model.hyperparams().noise_sigma;
    CHECK(model.predictive_variance(z) <= sn * sn + 1e-8);
  }
}

TEST_CASE("optimized likelihood beats the heuristic start") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int m = 18;
  Mat D(m, 2);
  Vec y(m);
  for (int i = 0; i < m; ++i) {
    D(i, 0) = gauss(rng);
    D(i, 1) = gauss(rng);
    y[i] = std::exp(-D(i, 0) * D(i, 0)) + 0.1 * D(i, 1);
  }
  const GprModel model = train_gpr(D, y, {});

  // heuristic hyper-parameters, reconstructed the way training seeds them
  GprHyperparams heuristic;
  const double y_std = std::sqrt((y.array() - y.mean()).square().mean());
  Mat X = model.training_inputs_std();
  Mat Phi(m, 3);
  Phi.col(0).setOnes();
  Phi.rightCols(2) = X;
  heuristic.beta = (Phi.transpose() * Phi).ldlt().solve(Phi.transpose() * y);
  heuristic.kappa1 = y_std;
  heuristic.length_scales = Vec::Zero(2);
  for (int d = 0; d < 2; ++d)
    heuristic.length_scales[d] = 0.5 * (X.col(d).maxCoeff() - X.col(d).minCoeff());
  heuristic.noise_sigma = std::sqrt(std::pow(1e-6 * y_std, 2) + std::pow(1e-3 * y_std, 2));

  CHECK(log_likelihood(model.hyperparams(), X, y) >= log_likelihood(heuristic, X, y) - 1e-9);
}

TEST_CASE("variance clamps at zero and shrinks with duplicated data") {
  const int m = 10;
  Mat D(m, 1);
  Vec y(m);
  for (int i = 0; i < m; ++i) {
    D(i, 0) = i;
    y[i] = std::sin(0.5 * i);
  }
  const GprModel base = train_gpr(D, y, {});
  const Vec z_star = Vec::Constant(1, 4.37);
  const double var_base = base.predictive_variance(z_star);
  CHECK(var_base >= 0.0);

  // duplicating a nearby observation cannot increase the posterior variance
  Mat D2(m + 1, 1);
  Vec y2(m + 1);
  D2.topRows(m) = D;
  y2.head(m) = y;
  D2(m, 0) = 4.4;
  y2[m] = std::sin(0.5 * 4.4);
  const GprModel more = GprModel(base.hyperparams(),
                                 [&] {
                                   Mat X(m + 1, 1);
                                   for (int i = 0; i <= m; ++i)
                                     X(i, 0) = (D2(i, 0) - base.z_mean()[0]) / base.z_scale()[0];
                                   return X;
                                 }(),
                                 y2, base.z_mean(), base.z_scale());
  CHECK(more.predictive_variance(z_star) <= var_base + 1e-12);
}

TEST_CASE("prediction is invariant under sample permutation") {
  // a visible noise level keeps the trained covariance well conditioned, so
  // the permuted factorization rounds identically to working precision
  const int m = 14;
  Mat D(m, 1);
  Vec y(m);
  for (int i = 0; i < m; ++i) {
    D(i, 0) = 0.1 * i;
    y[i] = std::cos(D(i, 0)) + 0.02 * std::sin(17.0 * i);
  }
  Mat Dp(m, 1);
  Vec yp(m);
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(77);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < m; ++i) {
    Dp(i, 0) = D(perm[i], 0);
    yp[i] = y[perm[i]];
  }
  const GprModel a = train_gpr(D, y, {});
  const GprModel b(a.hyperparams(),
                   [&] {
                     Mat X(m, 1);
                     for (int i = 0; i < m; ++i) X(i, 0) = (Dp(i, 0) - a.z_mean()[0]) / a.z_scale()[0];
                     return X;
                   }(),
                   yp, a.z_mean(), a.z_scale());
  // exact in exact arithmetic; the permuted factorization rounds differently
  for (double z : {0.23, 0.74, 1.21})
    CHECK(a.predict(Vec::Constant(1, z), 0.0) ==
          Approx(b.predict(Vec::Constant(1, z), 0.0)).epsilon(1e-6).margin(1e-9));
}
