#include "tsmor/registration.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace tsmor;
using Catch::Approx;

namespace {

DomainBox unit_square() { return DomainBox{2, {0.0, 0.0}, {1.0, 1.0}}; }

DisplacementCoeffs random_coeffs(const DomainBox& box, int order, std::uint64_t seed,
                                 double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  DisplacementCoeffs c = DisplacementCoeffs::zero(box, order);
  for (long r = 0; r < c.coeffs.rows(); ++r)
    for (int k = 0; k < c.coeffs.cols(); ++k) c.coeffs(r, k) = gauss(rng);
  return c;
}

}  // namespace

TEST_CASE("displacement evaluation basics") {
  const DisplacementCoeffs zero = DisplacementCoeffs::zero(unit_square(), 3);
  double x[2] = {0.37, 0.82};
  CHECK(eval_displacement(zero, x).cwiseAbs().maxCoeff() == 0.0);

  // unit coefficient on the (0,0) tensor term of the first component
  DisplacementCoeffs c = DisplacementCoeffs::zero(unit_square(), 2);
  c.coeffs(0, 0) = 1.0;
  double mid[2] = {0.5, 0.5};
  const Vec d = eval_displacement(c, mid);
  CHECK(d[0] == Approx(1.0 / 16.0).epsilon(1e-14));
  CHECK(d[1] == Approx(0.0).margin(1e-15));

  double outside[2] = {1.2, 0.5};
  CHECK_THROWS_AS(eval_displacement(c, outside), std::invalid_argument);
}

TEST_CASE("displacement vanishes identically on the boundary") {
  const DisplacementCoeffs c = random_coeffs(unit_square(), 4, 99);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<std::array<double, 2>> pts;
  for (int k = 0; k < 25; ++k) {
    const double s = uni(rng);
    pts.push_back({s, 0.0});
    pts.push_back({s, 1.0});
    pts.push_back({0.0, s});
    pts.push_back({1.0, s});
  }
  pts.push_back({0.0, 0.0});
  pts.push_back({1.0, 1.0});
  for (const auto& p : pts)
    CHECK(eval_displacement(c, p.data()).cwiseAbs().maxCoeff() < 1e-15);

  // non-unit boxes keep the exact boundary zero
  DomainBox box{2, {-0.3, 2.0}, {3.0, 5.0}};
  const DisplacementCoeffs c2 = random_coeffs(box, 3, 7);
  double edge[2] = {-0.3, 3.7};
  CHECK(eval_displacement(c2, edge).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("regularizer: zero, homogeneity and the bubble oracle") {
  const DisplacementCoeffs zero = DisplacementCoeffs::zero(unit_square(), 3);
  CHECK(regularizer(zero) == 0.0);

  const DisplacementCoeffs c = random_coeffs(unit_square(), 3, 17);
  DisplacementCoeffs c2 = c;
  c2.coeffs *= 2.0;
  CHECK(regularizer(c2) == Approx(2.0 * regularizer(c)).epsilon(1e-12));
  DisplacementCoeffs cm = c;
  cm.coeffs *= -3.5;
  CHECK(regularizer(cm) == Approx(3.5 * regularizer(c)).epsilon(1e-12));

  // single constant-Legendre coefficient: || lap(bubble) || by quadrature of
  // the analytic laplacian -2 x2(1-x2) - 2 x1(1-x1)
  DisplacementCoeffs unit = DisplacementCoeffs::zero(unit_square(), 1);
  unit.coeffs(0, 0) = 1.0;
  const QuadratureRule rule = gauss_legendre_2d(6);
  double quad = 0.0;
  for (int q = 0; q < rule.n_points(); ++q) {
    const double x1 = rule.points(q, 0), x2 = rule.points(q, 1);
    const double lap = -2.0 * x2 * (1.0 - x2) - 2.0 * x1 * (1.0 - x1);
    quad += rule.weights[q] * lap * lap;
  }
  CHECK(regularizer(unit) == Approx(std::sqrt(quad)).epsilon(1e-12));
  CHECK(quad == Approx(22.0 / 45.0).epsilon(1e-13));
}

TEST_CASE("transform jacobian matches hand differentiation") {
  DisplacementCoeffs c = DisplacementCoeffs::zero(unit_square(), 1);
  const double amp = 0.3;
  c.coeffs(0, 0) = amp;  // psi = amp * (bubble, 0)
  const SpatialTransform phi(c);
  double mid[2] = {0.5, 0.5};
  CHECK(phi.jacobian(mid).determinant() == Approx(1.0).epsilon(1e-14));
  double off[2] = {0.25, 0.5};
  // d1 bubble = (1-2 x1) x2 (1-x2) = 0.125 at (0.25, 0.5)
  CHECK(phi.jacobian(off).determinant() == Approx(1.0 + amp * 0.125).epsilon(1e-13));

  const DisplacementCoeffs zero = DisplacementCoeffs::zero(unit_square(), 2);
  const SpatialTransform id(zero);
  CHECK(id.jacobian(off).isApprox(Mat::Identity(2, 2)));
}

namespace {

struct Synthetic1D {
  Grid1D grid{0.0, 1.0, 200};
  QuadratureRule rule = gauss_legendre_1d(3);
  CellQuadrature quad = make_cell_quadrature(grid, rule);
  Field ref_field;
  Field target_field;
  Vec ref_at_q;

  // jump height 4 keeps the matching term dominant over the regularizer
  explicit Synthetic1D(double shift) {
    auto profile = [](double x) { return x < 0.5 ? 4.0 : 0.0; };
    ref_field.resize(grid.n_cells);
    target_field.resize(grid.n_cells);
    for (int i = 0; i < grid.n_cells; ++i) {
      ref_field[i] = profile(grid.center(i));
      target_field[i] = profile(grid.center(i) - shift);
    }
    ref_at_q.resize(quad.points.rows());
    LinearInterp1D interp(grid, ref_field);
    for (long q = 0; q < quad.points.rows(); ++q) ref_at_q[q] = interp(quad.points(q, 0));
  }

  L2SnapshotData data() const {
    L2SnapshotData d;
    d.quad = &quad;
    d.ref_at_q = ref_at_q;
    d.dim = 1;
    d.grid1 = grid;
    d.target = &target_field;
    return d;
  }
};

}  // namespace

TEST_CASE("objective components and gradient consistency in 1D") {
  Synthetic1D syn(0.0);  // identical reference and target
  const BubbleBasis basis(syn.grid.box(), 3);
  const Mat B = basis_values_at(basis, syn.quad.points);
  const Mat gram = laplacian_gram(syn.grid.box(), 3);
  RegistrationProblem prob(syn.data(), basis, B, gram, 1e-2);

  // zero displacement on identical snapshots: exact zero objective
  Vec zero = Vec::Zero(prob.coeff_count());
  Vec no_grad(0);
  CHECK(prob.objective(zero, no_grad) == 0.0);

  // analytic gradient vs central differences at random coefficients
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss(0.0, 0.02);
  for (int rep = 0; rep < 3; ++rep) {
    Vec c(prob.coeff_count());
    for (long i = 0; i < c.size(); ++i) c[i] = gauss(rng);
    Vec grad(c.size());
    prob.objective(c, grad);
    const Vec fd = numerical_gradient(c, [&](const Vec& x) {
      Vec ng(0);
      return prob.objective(x, ng);
    });
    for (long i = 0; i < c.size(); ++i)
      CHECK(grad[i] == Approx(fd[i]).epsilon(1e-4).margin(1e-7));
  }
}

TEST_CASE("objective gradient consistency in 2D with a smooth target") {
  const Grid2D grid = make_grid_2d(0.0, 1.0, 20, 0.0, 1.0, 20);
  const QuadratureRule rule = gauss_legendre_2d(3);
  CellQuadrature quad = make_cell_quadrature(grid, rule);
  Field smooth(grid.n_cells());
  for (long c = 0; c < grid.n_cells(); ++c) {
    double p[2];
    grid.center(c, p);
    smooth[c] = std::sin(3.0 * p[0]) * std::cos(2.0 * p[1]);
  }
  Vec ref_q(quad.points.rows());
  BilinearInterp2D interp(grid, smooth);
  for (long q = 0; q < quad.points.rows(); ++q)
    ref_q[q] = interp(quad.points(q, 0), quad.points(q, 1));

  L2SnapshotData d;
  d.quad = &quad;
  d.ref_at_q = ref_q;
  d.dim = 2;
  d.grid2 = grid;
  d.target = &smooth;

  const BubbleBasis basis(grid.box(), 2);
  const Mat B = basis_values_at(basis, quad.points);
  const Mat gram = laplacian_gram(grid.box(), 2);
  RegistrationProblem prob(MatchingData(d), basis, B, gram, 1e-2);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 0.03);
  Vec c(prob.coeff_count());
  for (long i = 0; i < c.size(); ++i) c[i] = gauss(rng);
  Vec grad(c.size());
  prob.objective(c, grad);
  const Vec fd = numerical_gradient(c, [&](const Vec& x) {
    Vec ng(0);
    return prob.objective(x, ng);
  });
  for (long i = 0; i < c.size(); ++i)
    CHECK(grad[i] == Approx(fd[i]).epsilon(1e-4).margin(1e-7));
}

TEST_CASE("point-set criterion: an exact match leaves only the regularizer") {
  PointSetData d;
  const double y = 0.25;
  d.ref_points.resize(3, 2);
  d.ref_points << 0.5, y, y, 0.5, 1.0 - y, 0.5;
  const double upsilon = 0.25 * y * (1.0 - y);  // equal at all three points
  const Eigen::Vector2d shift(0.02, -0.013);
  d.target_points = d.ref_points;
  for (long i = 0; i < 3; ++i) d.target_points.row(i) += shift.transpose();

  const BubbleBasis basis(unit_square(), 1);
  const Mat B = basis_values_at(basis, d.ref_points);
  const Mat gram = laplacian_gram(unit_square(), 1);
  RegistrationProblem prob(MatchingData(d), basis, B, gram, 1e-2);

  DisplacementCoeffs c = DisplacementCoeffs::zero(unit_square(), 1);
  c.coeffs(0, 0) = shift[0] / upsilon;
  c.coeffs(0, 1) = shift[1] / upsilon;
  Vec ng(0);
  const double obj = prob.objective(c.flat(), ng);
  const double reg = regularizer(c);
  CHECK(prob.matching(c.flat(), nullptr) == Approx(0.0).margin(1e-24));
  CHECK(obj == Approx(1e-2 * reg * reg).epsilon(1e-10));
}

TEST_CASE("register_one: stationary at the reference, descending elsewhere") {
  Synthetic1D identical(0.0);
  const BubbleBasis basis(identical.grid.box(), 3);
  const Mat B = basis_values_at(basis, identical.quad.points);
  const Mat gram = laplacian_gram(identical.grid.box(), 3);
  RegistrationProblem prob(identical.data(), basis, B, gram, 1e-2);
  RegistrationConfig cfg;

  const RegisterOneResult at_zero = register_one(Vec::Zero(prob.coeff_count()), prob, cfg);
  CHECK(at_zero.coeffs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(at_zero.objective_final == 0.0);

  // identical snapshots from a random small start: the objective decreases to
  // (at most) the initial regularization level
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 0.05);
  Vec c0(prob.coeff_count());
  for (long i = 0; i < c0.size(); ++i) c0[i] = gauss(rng);
  const RegisterOneResult res = register_one(c0, prob, cfg);
  CHECK(res.objective_final <= res.objective_initial);
  const DisplacementCoeffs dc0 = DisplacementCoeffs::from_flat(identical.grid.box(), 3, c0);
  const double reg0 = regularizer(dc0);
  CHECK(res.objective_final <= 1e-2 * reg0 * reg0 + 1e-12);
}

TEST_CASE("register_one recovers a two-cell shift within 10 percent") {
  const double shift = 2.0 / 200.0;  // two cell widths
  Synthetic1D syn(shift);
  const BubbleBasis basis(syn.grid.box(), 3);
  const Mat B = basis_values_at(basis, syn.quad.points);
  const Mat gram = laplacian_gram(syn.grid.box(), 3);
  RegistrationProblem prob(syn.data(), basis, B, gram, 1e-2);
  RegistrationConfig cfg;

  const RegisterOneResult res = register_one(Vec::Zero(prob.coeff_count()), prob, cfg);
  CHECK(res.objective_final < res.objective_initial);
  const DisplacementCoeffs dc = DisplacementCoeffs::from_flat(syn.grid.box(), 3, res.coeffs);
  double at_jump = 0.5;
  const double recovered = eval_displacement(dc, &at_jump)[0];
  CHECK(recovered == Approx(shift).epsilon(0.10));
}

TEST_CASE("transform_snapshot: identity, constants and shift composition") {
  const double shift = 2.0 / 200.0;
  Synthetic1D syn(shift);
  const QuadratureRule rule = gauss_legendre_1d(3);

  // exact identity
  const DisplacementCoeffs zero = DisplacementCoeffs::zero(syn.grid.box(), 3);
  const Field same = transform_snapshot_1d(syn.target_field, zero, syn.grid, rule);
  CHECK((same - syn.target_field).cwiseAbs().maxCoeff() == 0.0);

  // constants are invariant under any transform
  const DisplacementCoeffs c = random_coeffs(syn.grid.box(), 3, 21, 0.05);
  const Field constant = Field::Constant(syn.grid.n_cells, 5.0);
  const Field tc = transform_snapshot_1d(constant, c, syn.grid, rule);
  for (int i = 0; i < syn.grid.n_cells; ++i) CHECK(tc[i] == Approx(5.0).epsilon(1e-13));

  // composing the shifted profile with the recovered displacement realigns
  // the jump to within one cell
  const BubbleBasis basis(syn.grid.box(), 3);
  const Mat B = basis_values_at(basis, syn.quad.points);
  const Mat gram = laplacian_gram(syn.grid.box(), 3);
  RegistrationProblem prob(syn.data(), basis, B, gram, 1e-2);
  const RegisterOneResult res = register_one(Vec::Zero(prob.coeff_count()), prob, RegistrationConfig{});
  const DisplacementCoeffs dc = DisplacementCoeffs::from_flat(syn.grid.box(), 3, res.coeffs);
  const Field g = transform_snapshot_1d(syn.target_field, dc, syn.grid, rule);
  // jump location = first cell where the field drops below half height
  auto jump_cell = [&](const Field& f) {
    for (int i = 0; i < syn.grid.n_cells; ++i)
      if (f[i] < 2.0) return i;
    return syn.grid.n_cells;
  };
  CHECK(std::abs(jump_cell(g) - jump_cell(syn.ref_field)) <= 1);
}

TEST_CASE("register_all on identical snapshots stops at order 2 with zero fields") {
  const Grid1D grid(0.0, 1.0, 60);
  const QuadratureRule rule = gauss_legendre_1d(3);
  CellQuadrature quad = make_cell_quadrature(grid, rule);
  Field u(grid.n_cells);
  for (int i = 0; i < grid.n_cells; ++i) u[i] = std::sin(6.0 * grid.center(i));
  Vec ref_q(quad.points.rows());
  LinearInterp1D interp(grid, u);
  for (long q = 0; q < quad.points.rows(); ++q) ref_q[q] = interp(quad.points(q, 0));

  Mat samples(5, 1);
  samples << 0.0, 0.25, 0.5, 0.75, 1.0;
  Mat param_box(1, 2);
  param_box << 0.0, 1.0;
  RegistrationConfig cfg;
  const RegistrationResult res = register_all(
      grid.box(), samples, param_box, 2,
      [&](long) {
        L2SnapshotData d;
        d.quad = &quad;
        d.ref_at_q = ref_q;
        d.dim = 1;
        d.grid1 = grid;
        d.target = &u;
        return MatchingData(d);
      },
      cfg);
  CHECK(res.order == 2);
  CHECK(res.converged);
  CHECK(res.coeffs.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(res.xi_trace.size() == 2);
}

TEST_CASE("register_all validates the reference index") {
  const Grid1D grid(0.0, 1.0, 10);
  Mat samples(3, 1);
  samples << 0.0, 0.5, 1.0;
  Mat param_box(1, 2);
  param_box << 0.0, 1.0;
  CHECK_THROWS_AS(register_all(grid.box(), samples, param_box, 5,
                               [](long) { return MatchingData(PointSetData{}); }, {}),
                  std::invalid_argument);
}
