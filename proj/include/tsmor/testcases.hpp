#pragma once

#include "tsmor/fem.hpp"
#include "tsmor/fv.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <string>

namespace tsmor {

// One parameter sample z with p components (time included where applicable).
using ParameterSample = Eigen::VectorXd;

// A set of snapshots: one Field per sample per solution component.
struct SnapshotSet {
  Mat samples;                      // m x p
  std::vector<Mat> components;      // per component: N x m
  std::vector<double> solve_seconds;  // wall-clock per sample (HF cost)

  int n_components() const { return static_cast<int>(components.size()); }
  long n_samples() const { return samples.rows(); }
};

// ---------------------------------------------------------------------------
// Benchmark problem definitions. Parameter boxes, default grids and the
// dispatch into the high-fidelity solvers live here.
// ---------------------------------------------------------------------------

enum class TestCaseId { Wave1D, Burgers2D, Heat2D, Imported };

inline std::string to_string(TestCaseId id) {
  switch (id) {
    case TestCaseId::Wave1D: return "wave1d";
    case TestCaseId::Burgers2D: return "burgers2d";
    case TestCaseId::Heat2D: return "heat2d";
    case TestCaseId::Imported: return "imported";
  }
  return "?";
}

inline TestCaseId test_case_from_string(const std::string& s) {
  if (s == "wave1d") return TestCaseId::Wave1D;
  if (s == "burgers2d") return TestCaseId::Burgers2D;
  if (s == "heat2d") return TestCaseId::Heat2D;
  if (s == "imported") return TestCaseId::Imported;
  throw ConfigError("unknown test case: " + s);
}

struct TestCase {
  TestCaseId id = TestCaseId::Wave1D;
  int dim = 1;             // spatial dimension
  int n_components = 1;    // solution components
  DomainBox domain;        // spatial domain
  Mat param_box;           // p x 2, rows (lo, hi)
  std::vector<std::string> param_labels;
  int time_axis = -1;      // index of the time parameter, -1 if none
  Grid1D grid1;            // valid when dim == 1
  Grid2D grid2;            // valid when dim == 2

  int n_params() const { return static_cast<int>(param_box.rows()); }
  long n_dofs() const { return dim == 1 ? grid1.n_cells : grid2.n_cells(); }
  double cell_width() const { return dim == 1 ? grid1.dx() : std::max(grid2.x.dx(), grid2.y.dx()); }
  double cell_measure() const { return dim == 1 ? grid1.dx() : grid2.cell_area(); }

  bool inside_param_box(const ParameterSample& z, double tol = 1e-12) const {
    for (int d = 0; d < n_params(); ++d)
      if (z[d] < param_box(d, 0) - tol || z[d] > param_box(d, 1) + tol) return false;
    return true;
  }
};

// Test 1: 1D first-order wave system on (-0.3, 3), z = (t, mu).
inline TestCase make_wave1d(int n_cells = 1000) {
  TestCase tc;
  tc.id = TestCaseId::Wave1D;
  tc.dim = 1;
  tc.n_components = 2;
  tc.grid1 = Grid1D(-0.3, 3.0, n_cells);
  tc.domain = tc.grid1.box();
  tc.param_box.resize(2, 2);
  tc.param_box << 0.0, 0.8, 0.5, 2.0;
  tc.param_labels = {"t", "mu"};
  tc.time_axis = 0;
  return tc;
}

// Test 2: 2D Burgers on (-0.1, 1.5)^2, z = (t).
inline TestCase make_burgers2d(int nx = 300, int ny = -1) {
  if (ny < 0) ny = nx;
  TestCase tc;
  tc.id = TestCaseId::Burgers2D;
  tc.dim = 2;
  tc.n_components = 1;
  tc.grid2 = make_grid_2d(-0.1, 1.5, nx, -0.1, 1.5, ny);
  tc.domain = tc.grid2.box();
  tc.param_box.resize(1, 2);
  tc.param_box << 0.0, 2.0;
  tc.param_labels = {"t"};
  tc.time_axis = 0;
  return tc;
}

// Test 3: 2D heat conduction on (0,1)^2 with a moving conductivity box, z scalar.
inline TestCase make_heat2d(int nx = 300, int ny = -1) {
  if (ny < 0) ny = nx;
  TestCase tc;
  tc.id = TestCaseId::Heat2D;
  tc.dim = 2;
  tc.n_components = 1;
  tc.grid2 = make_grid_2d(0.0, 1.0, nx, 0.0, 1.0, ny);
  tc.domain = tc.grid2.box();
  tc.param_box.resize(1, 2);
  tc.param_box << -0.05, 0.05;
  tc.param_labels = {"z"};
  tc.time_axis = -1;
  return tc;
}

inline TestCase make_test_case(TestCaseId id, int nx, int ny = -1) {
  switch (id) {
    case TestCaseId::Wave1D: return make_wave1d(nx);
    case TestCaseId::Burgers2D: return make_burgers2d(nx, ny);
    case TestCaseId::Heat2D: return make_heat2d(nx, ny);
    case TestCaseId::Imported: break;
  }
  throw ConfigError("make_test_case: bad id");
}

// ---------------------------------------------------------------------------
// Initial / coefficient data.
// ---------------------------------------------------------------------------

// Two sine bumps of height ~2*mu with jumps at the ends of their supports.
inline double wave_bump_left(double x, double mu) {
  const double d1 = 0.3;
  if (x < d1 - 0.5 || x > d1) return 0.0;
  return mu * (std::sin(2.0 * M_PI * (x + 0.2)) + 1.0);
}

inline double wave_bump_right(double x, double mu) {
  const double d2 = 2.8;
  if (x < d2 - 0.5 || x > d2) return 0.0;
  return mu * (std::sin(2.0 * M_PI * (x - 2.3)) + 1.0);
}

// The bumps ride the two characteristic families toward each other: the left
// bump travels right, the right bump travels left, so both stay inside the
// domain for the whole horizon.
inline std::vector<Field> wave1d_initial(const Grid1D& grid, double mu) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::vector<Field> u(2, Field(grid.n_cells));
  for (int i = 0; i < grid.n_cells; ++i) {
    const double x = grid.center(i);
    const double w1 = wave_bump_left(x, mu), w2 = wave_bump_right(x, mu);
    u[0][i] = inv_sqrt2 * (w1 + w2);
    u[1][i] = inv_sqrt2 * (w1 - w2);
  }
  return u;
}

// Exact characteristic solution of the wave system for the bump data.
inline std::vector<Field> wave1d_exact(const Grid1D& grid, double mu, double t) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::vector<Field> u(2, Field(grid.n_cells));
  for (int i = 0; i < grid.n_cells; ++i) {
    const double x = grid.center(i);
    // right-mover carries the left bump, left-mover the right bump
    const double vp = (x - t >= grid.a && x - t <= grid.b) ? wave_bump_left(x - t, mu) : 0.0;
    const double vm = (x + t >= grid.a && x + t <= grid.b) ? wave_bump_right(x + t, mu) : 0.0;
    u[0][i] = inv_sqrt2 * (vp + vm);
    u[1][i] = inv_sqrt2 * (vp - vm);
  }
  return u;
}

inline Field burgers2d_initial(const Grid2D& grid) {
  Field u(grid.n_cells());
  for (long c = 0; c < grid.n_cells(); ++c) {
    double p[2];
    grid.center(c, p);
    u[c] = (p[0] >= 0.0 && p[0] <= 0.5 && p[1] >= 0.0 && p[1] <= 0.5) ? 1.0 : 0.0;
  }
  return u;
}

inline double heat_conductivity(double x, double y, double z) {
  const double cx = 0.5 + z, cy = 0.5 + z;
  const bool in_box = std::max(std::abs(x - cx), std::abs(y - cy)) <= 0.25;
  return 0.1 + (in_box ? 0.9 : 0.0);
}

// Uniformly spaced points along the conductivity-jump square, parametrized by
// arc length from the lower-left corner, counter-clockwise. The same index
// corresponds across parameter values.
inline Mat heat_interface_points(double z, int n_points) {
  const double half = 0.25;
  const double cx = 0.5 + z, cy = 0.5 + z;
  const double side = 2.0 * half, perim = 4.0 * side;
  Mat pts(n_points, 2);
  for (int i = 0; i < n_points; ++i) {
    double s = perim * i / n_points;
    double x, y;
    if (s < side) {
      x = cx - half + s;
      y = cy - half;
    } else if (s < 2 * side) {
      x = cx + half;
      y = cy - half + (s - side);
    } else if (s < 3 * side) {
      x = cx + half - (s - 2 * side);
      y = cy + half;
    } else {
      x = cx - half;
      y = cy + half - (s - 3 * side);
    }
    pts(i, 0) = x;
    pts(i, 1) = y;
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Solver entry points.
// ---------------------------------------------------------------------------

inline Mat wave1d_matrix() {
  Mat A(2, 2);
  A << 0.0, 1.0, 1.0, 0.0;
  return A;
}

inline Trajectory solve_wave_1d(const Grid1D& grid, double mu, const std::vector<double>& times) {
  LinearSystem1D solver(grid, wave1d_matrix());
  return solver.solve(wave1d_initial(grid, mu), times);
}

inline Trajectory solve_burgers_2d(const Grid2D& grid, const std::vector<double>& times) {
  Burgers2D solver(grid);
  return solver.solve(burgers2d_initial(grid), times);
}

inline Field solve_heat_2d(const P1Space2D& space, double z, Vec* nodal_out = nullptr) {
  return solve_poisson_p1(
      space, [z](double x, double y) { return heat_conductivity(x, y, z); }, nodal_out);
}

// ---------------------------------------------------------------------------
// Snapshot sampling. For time-dependent cases one trajectory per distinct
// non-time parameter is reused across its time samples.
// ---------------------------------------------------------------------------

inline SnapshotSet sample_snapshots(const TestCase& tc, const Mat& samples, int workers = 0) {
  const long m = samples.rows();
  for (long s = 0; s < m; ++s)
    if (!tc.inside_param_box(samples.row(s).transpose()))
      throw std::invalid_argument("sample_snapshots: sample outside the parameter box");

  if (tc.id == TestCaseId::Imported)
    throw ConfigError("sample_snapshots: imported snapshot sets carry no built-in solver");

  SnapshotSet out;
  out.samples = samples;
  out.components.assign(tc.n_components, Mat(tc.n_dofs(), m));
  out.solve_seconds.assign(m, 0.0);

  auto clock = []() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
  };

  if (tc.id == TestCaseId::Heat2D) {
    P1Space2D space(triangulate(tc.grid2));
    parallel_for(m, [&](std::int64_t s) {
      const double t0 = clock();
      out.components[0].col(s) = solve_heat_2d(space, samples(s, 0));
      out.solve_seconds[s] = clock() - t0;
    }, workers);
    return out;
  }

  // group samples by their non-time parameters
  const int ta = tc.time_axis;
  std::map<std::vector<double>, std::vector<long>> groups;
  for (long s = 0; s < m; ++s) {
    std::vector<double> key;
    for (int d = 0; d < tc.n_params(); ++d)
      if (d != ta) key.push_back(samples(s, d));
    groups[key].push_back(s);
  }
  std::vector<std::pair<std::vector<double>, std::vector<long>>> group_list(groups.begin(), groups.end());

  parallel_for(static_cast<long>(group_list.size()), [&](std::int64_t g) {
    const auto& [key, rows] = group_list[g];
    std::vector<double> times;
    times.reserve(rows.size());
    for (long s : rows) times.push_back(samples(s, ta));
    const double t0 = clock();
    Trajectory traj;
    if (tc.id == TestCaseId::Wave1D) {
      traj = solve_wave_1d(tc.grid1, key.empty() ? 0.0 : key[0], times);
    } else {
      traj = solve_burgers_2d(tc.grid2, times);
    }
    const double elapsed = clock() - t0;
    // sort order inside the trajectory matches ascending time
    std::vector<long> sorted_rows = rows;
    std::sort(sorted_rows.begin(), sorted_rows.end(),
              [&](long a, long b) { return samples(a, ta) < samples(b, ta); });
    for (std::size_t k = 0; k < sorted_rows.size(); ++k) {
      for (int c = 0; c < tc.n_components; ++c)
        out.components[c].col(sorted_rows[k]) = traj.states[k][c];
      out.solve_seconds[sorted_rows[k]] = elapsed / static_cast<double>(rows.size());
    }
  }, workers);
  return out;
}

// Single-sample convenience used for test-set references.
inline std::vector<Field> solve_at(const TestCase& tc, const ParameterSample& z,
                                   double* seconds = nullptr) {
  if (tc.id == TestCaseId::Imported)
    throw ConfigError("solve_at: imported snapshot sets carry no built-in solver");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Field> out;
  if (tc.id == TestCaseId::Heat2D) {
    P1Space2D space(triangulate(tc.grid2));
    out.push_back(solve_heat_2d(space, z[0]));
  } else if (tc.id == TestCaseId::Wave1D) {
    Trajectory traj = solve_wave_1d(tc.grid1, z[1], {z[0]});
    out = traj.states.at(0);
  } else {
    Trajectory traj = solve_burgers_2d(tc.grid2, {z[0]});
    out = traj.states.at(0);
  }
  if (seconds)
    *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Tensor sample layout: per-axis uniform points including both endpoints
// (the parameter-box corners are always sampled). Axis 0 fastest.
inline Mat tensor_samples(const Mat& param_box, const std::vector<int>& counts) {
  const int p = static_cast<int>(param_box.rows());
  if (static_cast<int>(counts.size()) != p)
    throw ConfigError("tensor_samples: counts must match parameter dimension");
  long m = 1;
  for (int c : counts) {
    if (c < 2) throw ConfigError("tensor_samples: need at least 2 points per axis");
    m *= c;
  }
  Mat out(m, p);
  for (long s = 0; s < m; ++s) {
    long rem = s;
    for (int d = 0; d < p; ++d) {
      const int i = static_cast<int>(rem % counts[d]);
      rem /= counts[d];
      out(s, d) = param_box(d, 0) + (param_box(d, 1) - param_box(d, 0)) * i / (counts[d] - 1.0);
    }
  }
  return out;
}

inline Mat random_samples(const Mat& param_box, long m, std::mt19937_64& rng) {
  const int p = static_cast<int>(param_box.rows());
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Mat out(m, p);
  for (long s = 0; s < m; ++s)
    for (int d = 0; d < p; ++d)
      out(s, d) = param_box(d, 0) + (param_box(d, 1) - param_box(d, 0)) * uni(rng);
  return out;
}

}  // namespace tsmor
