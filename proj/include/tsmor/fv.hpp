#pragma once

#include "tsmor/grid.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tsmor {

// ---------------------------------------------------------------------------
// Second-order finite-volume machinery shared by the hyperbolic solvers:
// Van-Leer limited MUSCL reconstruction, local Lax-Friedrichs fluxes,
// explicit two-stage Runge-Kutta (Heun), CFL 0.5, zero Dirichlet ghost state.
// ---------------------------------------------------------------------------

// Van-Leer (harmonic) slope from backward/forward differences.
inline double van_leer_slope(double dm, double dp) {
  const double prod = dm * dp;
  if (prod <= 0.0) return 0.0;
  return 2.0 * prod / (dm + dp);
}

// One trajectory: states at strictly increasing times, plus the accumulated
// signed boundary outflux per component (mass(t) = mass(0) - outflux(t)).
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<Field>> states;  // [time][component]
  std::vector<Vec> boundary_outflux;       // [time], one entry per component
  int solver_steps = 0;
};

namespace detail {

// Stores requested-time outputs by linear interpolation between the solver
// states that bracket them; exact states are stored without interpolation.
class TimeSampler {
 public:
  TimeSampler(std::vector<double> times, int n_comp)
      : times_(std::move(times)), n_comp_(n_comp) {
    std::sort(times_.begin(), times_.end());
    out_.times = times_;
    out_.states.resize(times_.size());
    out_.boundary_outflux.resize(times_.size());
  }

  double final_time() const { return times_.empty() ? 0.0 : times_.back(); }

  // Call after every accepted step (and once with the initial state).
  void offer(double t_prev, double t_now, const std::vector<Field>& u_prev,
             const std::vector<Field>& u_now, const Vec& flux_prev, const Vec& flux_now) {
    const double eps = 1e-14 * std::max(1.0, std::abs(t_now));
    while (next_ < times_.size() && times_[next_] <= t_now + eps) {
      const double tq = times_[next_];
      if (tq <= t_prev + eps) {
        out_.states[next_] = u_prev;
        out_.boundary_outflux[next_] = flux_prev;
      } else if (std::abs(tq - t_now) <= eps) {
        out_.states[next_] = u_now;
        out_.boundary_outflux[next_] = flux_now;
      } else {
        const double w = (tq - t_prev) / (t_now - t_prev);
        std::vector<Field> mix(u_prev.size());
        for (std::size_t c = 0; c < u_prev.size(); ++c)
          mix[c] = (1.0 - w) * u_prev[c] + w * u_now[c];
        out_.states[next_] = std::move(mix);
        out_.boundary_outflux[next_] = (1.0 - w) * flux_prev + w * flux_now;
      }
      ++next_;
    }
  }

  bool done() const { return next_ >= times_.size(); }
  Trajectory take() { return std::move(out_); }

 private:
  std::vector<double> times_;
  int n_comp_;
  std::size_t next_ = 0;
  Trajectory out_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// 1D linear hyperbolic system u_t + A u_x = 0 with zero Dirichlet state.
// ---------------------------------------------------------------------------

class LinearSystem1D {
 public:
  LinearSystem1D(Grid1D grid, Mat A) : grid_(grid), A_(std::move(A)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A_);
    max_speed_ = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(max_speed_ > 0.0))
      throw NumericalError("LinearSystem1D: degenerate wave speed");
  }

  // initial[c] has grid.n_cells entries.
  Trajectory solve(const std::vector<Field>& initial, const std::vector<double>& times,
                   double cfl = 0.5) const {
    const int nc = static_cast<int>(initial.size());
    const int n = grid_.n_cells;
    const double dx = grid_.dx();
    detail::TimeSampler sampler(times, nc);

    std::vector<Field> u = initial;
    Vec outflux = Vec::Zero(nc);
    sampler.offer(0.0, 0.0, u, u, outflux, outflux);

    const double t_end = sampler.final_time();
    double t = 0.0;
    int steps = 0;
    std::vector<Field> u1(nc), u2(nc), l0(nc), l1(nc);
    Vec bf0(nc), bf1(nc);
    while (t < t_end - 1e-14 && !sampler.done()) {
      double dt = cfl * dx / max_speed_;
      dt = std::min(dt, t_end - t);
      rhs(u, l0, bf0);
      for (int c = 0; c < nc; ++c) u1[c] = u[c] + dt * l0[c];
      rhs(u1, l1, bf1);
      std::vector<Field> u_new(nc);
      for (int c = 0; c < nc; ++c) u_new[c] = u[c] + 0.5 * dt * (l0[c] + l1[c]);
      const Vec outflux_new = outflux + 0.5 * dt * (bf0 + bf1);
      sampler.offer(t, t + dt, u, u_new, outflux, outflux_new);
      u = std::move(u_new);
      outflux = outflux_new;
      t += dt;
      ++steps;
    }
    Trajectory traj = sampler.take();
    traj.solver_steps = steps;
    return traj;
  }

  const Grid1D& grid() const { return grid_; }
  double max_speed() const { return max_speed_; }

 private:
  // l = -d(flux)/dx, bflux = net boundary outflux rate per component.
  void rhs(const std::vector<Field>& u, std::vector<Field>& l, Vec& bflux) const {
    const int nc = static_cast<int>(u.size());
    const int n = grid_.n_cells;
    const double dx = grid_.dx();
    // reconstruct interface states per component, ghost state zero
    Mat left(nc, n + 1), right(nc, n + 1);  // states at faces 0..n
    for (int c = 0; c < nc; ++c) {
      const Field& v = u[c];
      auto cell = [&](int i) { return (i < 0 || i >= n) ? 0.0 : v[i]; };
      for (int f = 0; f <= n; ++f) {
        const int iL = f - 1, iR = f;
        const double sL = van_leer_slope(cell(iL) - cell(iL - 1), cell(iL + 1) - cell(iL));
        const double sR = van_leer_slope(cell(iR) - cell(iR - 1), cell(iR + 1) - cell(iR));
        left(c, f) = cell(iL) + 0.5 * sL;
        right(c, f) = cell(iR) - 0.5 * sR;
      }
    }
    // local Lax-Friedrichs fluxes
    Mat flux(nc, n + 1);
    for (int f = 0; f <= n; ++f) {
      const Vec uL = left.col(f), uR = right.col(f);
      flux.col(f) = 0.5 * (A_ * (uL + uR)) - 0.5 * max_speed_ * (uR - uL);
    }
    l.assign(nc, Field(n));
    for (int c = 0; c < nc; ++c)
      for (int i = 0; i < n; ++i) l[c][i] = -(flux(c, i + 1) - flux(c, i)) / dx;
    bflux.resize(nc);
    for (int c = 0; c < nc; ++c) bflux[c] = flux(c, n) - flux(c, 0);
  }

  Grid1D grid_;
  Mat A_;
  double max_speed_;
};

// ---------------------------------------------------------------------------
// 2D scalar conservation law u_t + div(f1(u), f2(u)) = 0 with the Burgers
// flux (u^2/2, u^2/2) and zero Dirichlet ghost state.
// ---------------------------------------------------------------------------

class Burgers2D {
 public:
  explicit Burgers2D(Grid2D grid) : grid_(grid) {}

  Trajectory solve(const Field& initial, const std::vector<double>& times,
                   double cfl = 0.5) const {
    detail::TimeSampler sampler(times, 1);
    std::vector<Field> u{initial};
    Vec outflux = Vec::Zero(1);
    sampler.offer(0.0, 0.0, u, u, outflux, outflux);

    const double t_end = sampler.final_time();
    const double dx = grid_.x.dx(), dy = grid_.y.dx();
    double t = 0.0;
    int steps = 0;
    Field l0, l1;
    double bf0 = 0.0, bf1 = 0.0;
    while (t < t_end - 1e-14 && !sampler.done()) {
      const double amax = u[0].cwiseAbs().maxCoeff();
      if (amax < 1e-300) {
        // steady (identically zero) state: emit remaining times directly
        sampler.offer(t, t_end, u, u, outflux, outflux);
        break;
      }
      double dt = cfl / (amax / dx + amax / dy);
      dt = std::min(dt, t_end - t);
      rhs(u[0], l0, bf0);
      const Field u1 = u[0] + dt * l0;
      rhs(u1, l1, bf1);
      std::vector<Field> u_new{u[0] + 0.5 * dt * (l0 + l1)};
      Vec outflux_new(1);
      outflux_new[0] = outflux[0] + 0.5 * dt * (bf0 + bf1);
      sampler.offer(t, t + dt, u, u_new, outflux, outflux_new);
      u = std::move(u_new);
      outflux = outflux_new;
      t += dt;
      ++steps;
    }
    Trajectory traj = sampler.take();
    traj.solver_steps = steps;
    return traj;
  }

  const Grid2D& grid() const { return grid_; }

 private:
  static double flux_f(double v) { return 0.5 * v * v; }

  void rhs(const Field& u, Field& l, double& bflux) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double dx = grid_.x.dx(), dy = grid_.y.dx();
    l.setZero(grid_.n_cells());
    bflux = 0.0;

    auto cell = [&](int i, int j) -> double {
      if (i < 0 || j < 0 || i >= nx || j >= ny) return 0.0;
      return u[grid_.index(i, j)];
    };
    auto llf = [&](double vL, double vR) {
      const double a = std::max(std::abs(vL), std::abs(vR));
      return 0.5 * (flux_f(vL) + flux_f(vR)) - 0.5 * a * (vR - vL);
    };

    // x-sweep
    for (int j = 0; j < ny; ++j) {
      for (int f = 0; f <= nx; ++f) {
        const int iL = f - 1, iR = f;
        const double sL = van_leer_slope(cell(iL, j) - cell(iL - 1, j), cell(iL + 1, j) - cell(iL, j));
        const double sR = van_leer_slope(cell(iR, j) - cell(iR - 1, j), cell(iR + 1, j) - cell(iR, j));
        const double F = llf(cell(iL, j) + 0.5 * sL, cell(iR, j) - 0.5 * sR);
        if (f > 0) l[grid_.index(f - 1, j)] -= F / dx;
        if (f < nx) l[grid_.index(f, j)] += F / dx;
        if (f == 0) bflux -= F * dy;
        if (f == nx) bflux += F * dy;
      }
    }
    // y-sweep
    for (int i = 0; i < nx; ++i) {
      for (int f = 0; f <= ny; ++f) {
        const int jL = f - 1, jR = f;
        const double sL = van_leer_slope(cell(i, jL) - cell(i, jL - 1), cell(i, jL + 1) - cell(i, jL));
        const double sR = van_leer_slope(cell(i, jR) - cell(i, jR - 1), cell(i, jR + 1) - cell(i, jR));
        const double F = llf(cell(i, jL) + 0.5 * sL, cell(i, jR) - 0.5 * sR);
        if (f > 0) l[grid_.index(i, f - 1)] -= F / dy;
        if (f < ny) l[grid_.index(i, f)] += F / dy;
        if (f == 0) bflux -= F * dx;
        if (f == ny) bflux += F * dx;
      }
    }
  }

  Grid2D grid_;
};

}  // namespace tsmor
