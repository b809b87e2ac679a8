#pragma once

#include "tsmor/invmap.hpp"
#include "tsmor/testcases.hpp"

#include <chrono>
#include <iostream>
#include <optional>

namespace tsmor {

// ---------------------------------------------------------------------------
// Offline/online orchestration: snapshots -> registration -> transformed
// snapshots -> POD -> coefficient GPR -> inverse-map model -> error
// surrogate, and the composed online query path.
// ---------------------------------------------------------------------------

struct PipelineConfig {
  TestCase test;
  Mat samples;           // m x p training samples
  int n = 1;             // transformed-solution truncation
  int n_psi = 1;         // inverse-displacement truncation (ignored in identity mode)
  bool identity_mode = false;
  RegistrationConfig registration;
  GprTrainConfig gpr;
  int quad_order = 3;    // shared Gauss-Legendre order per axis
  int workers = 0;
  std::uint64_t seed = 0;
};

struct ComponentModel {
  PodBasis g_basis;               // transformed-snapshot basis
  PodBasis u_basis;               // untransformed basis (projection baseline)
  std::vector<GprModel> alpha_gpr;
  Mat alpha_train;                // n x m training coefficients
};

struct ErrorSurrogateModel {
  GprModel gpr;
  int n = 0;
  int n_psi = 0;
  double lambda = 2.0;  // pessimistic two-standard-deviation prediction
  bool valid = false;
};

struct OfflineTimings {
  double snapshots = 0, registration = 0, transform = 0, pod = 0, gpr = 0, inverse = 0,
         surrogate = 0, total = 0;
  double mean_hf_solve = 0;  // per-sample high-fidelity cost
};

struct OfflineArtifacts {
  TestCase test;
  Mat samples;
  long ref_index = -1;
  int n = 0;
  int n_psi = 0;
  bool identity_mode = false;
  int quad_order = 3;
  std::uint64_t seed = 0;

  RegistrationResult registration;  // empty coeffs in identity mode
  std::vector<ComponentModel> components;
  InverseModel inverse;
  ErrorSurrogateModel error_surrogate;
  InversionStats inversion_stats;
  OfflineTimings timings;

  Vec z_ref() const { return samples.row(ref_index).transpose(); }

  DisplacementCoeffs displacement_for(long sample_index) const {
    if (identity_mode || registration.coeffs.size() == 0)
      return DisplacementCoeffs::zero(test.domain, 1);
    return DisplacementCoeffs::from_flat(test.domain, registration.order,
                                         registration.coeffs.row(sample_index).transpose());
  }
};

// ---------------------------------------------------------------------------
// Metrics.
// ---------------------------------------------------------------------------

inline double relative_l1_error(const Field& u_ref, const Field& u_approx) {
  if (u_ref.size() != u_approx.size())
    throw std::invalid_argument("relative_l1_error: size mismatch");
  const double denom = u_ref.cwiseAbs().sum();
  if (!(denom > 0.0)) throw std::invalid_argument("relative_l1_error: zero-norm reference");
  return (u_ref - u_approx).cwiseAbs().sum() / denom;
}

inline double efficiency_index(double predicted_error, double true_error) {
  if (!(true_error > 0.0))
    return std::numeric_limits<double>::quiet_NaN();  // reported as missing
  return predicted_error / true_error;
}

inline double speedup(const std::vector<double>& hf_seconds, const std::vector<double>& mor_seconds) {
  if (hf_seconds.empty() || mor_seconds.empty())
    throw std::invalid_argument("speedup: empty timing set");
  double hf = 0, mor = 0;
  for (double t : hf_seconds) hf += t;
  for (double t : mor_seconds) mor += t;
  if (!(mor > 0.0) || !(hf > 0.0)) throw std::invalid_argument("speedup: non-positive totals");
  return hf / mor;
}

// ---------------------------------------------------------------------------
// Online evaluator: precomputes the quadrature cloud and the P1 evaluation
// operators so a query costs O(n N + n_psi N).
// ---------------------------------------------------------------------------

struct OnlineResult {
  std::vector<Field> fields;   // per solution component
  double predicted_error = std::numeric_limits<double>::quiet_NaN();
  bool has_error_estimate = false;
  bool extrapolation = false;
  double seconds_coefficients = 0, seconds_inverse = 0, seconds_compose = 0,
         seconds_surrogate = 0, seconds_total = 0;
};

class OnlineEvaluator {
 public:
  explicit OnlineEvaluator(const OfflineArtifacts& art) : art_(&art) {
    const QuadratureRule rule = (art.test.dim == 1) ? gauss_legendre_1d(art.quad_order)
                                                    : gauss_legendre_2d(art.quad_order);
    if (art.test.dim == 1) {
      quad_ = make_cell_quadrature(art.test.grid1, rule);
      space1_ = std::make_unique<P1Space1D>(art.test.grid1);
      if (!art.inverse.empty()) {
        const SparseMat E = space1_->evaluation_matrix(quad_.points.col(0));
        mode_values_.push_back(E * art.inverse.bases[0].modes);
      }
    } else {
      quad_ = make_cell_quadrature(art.test.grid2, rule);
      space2_ = std::make_unique<P1Space2D>(triangulate(art.test.grid2));
      if (!art.inverse.empty()) {
        const SparseMat E = space2_->evaluation_matrix(quad_.points);
        for (int k = 0; k < 2; ++k) mode_values_.push_back(E * art.inverse.bases[k].modes);
      }
    }
    for (int d = 0; d < art.samples.cols(); ++d) {
      hull_lo_.push_back(art.samples.col(d).minCoeff());
      hull_hi_.push_back(art.samples.col(d).maxCoeff());
    }
  }

  const P1Space1D* space1() const { return space1_.get(); }
  const P1Space2D* space2() const { return space2_.get(); }
  const CellQuadrature& quadrature() const { return quad_; }

  // Inverse-displacement values at all quadrature points (n_q x dim).
  Mat inverse_displacement_at_quad(const Vec& z, int npsi_use) const {
    const int dim = art_->test.dim;
    Mat out = Mat::Zero(quad_.points.rows(), dim);
    if (art_->inverse.empty()) return out;
    for (int k = 0; k < dim; ++k) {
      Vec alpha(npsi_use);
      for (int i = 0; i < npsi_use; ++i) alpha[i] = art_->inverse.gprs[k][i].predict(z, 0.0);
      out.col(k) = mode_values_[k].leftCols(npsi_use) * alpha;
    }
    return out;
  }

  // Nodal inverse displacement (for Jacobian diagnostics).
  Mat inverse_displacement_nodal(const Vec& z, int npsi_use) const {
    if (art_->inverse.empty()) {
      const long nv = (art_->test.dim == 1) ? space1_->n_vertices() : space2_->n_vertices();
      return Mat::Zero(nv, art_->test.dim);
    }
    Mat out;
    for (int k = 0; k < art_->test.dim; ++k) {
      Vec alpha(npsi_use);
      for (int i = 0; i < npsi_use; ++i) alpha[i] = art_->inverse.gprs[k][i].predict(z, 0.0);
      const Vec nodal = art_->inverse.bases[k].modes.leftCols(npsi_use) * alpha;
      if (k == 0) out.resize(nodal.size(), art_->test.dim);
      out.col(k) = nodal;
    }
    return out;
  }

  // Compose Pi[g(x + disp(x))] from a reconstructed field by cell quadrature.
  Field compose(const Field& g, const Mat& disp_at_quad) const {
    const int dim = art_->test.dim;
    const long n_cells = art_->test.n_dofs();
    const int per_cell = quad_.per_cell;
    Field out(n_cells);
    if (dim == 1) {
      LinearInterp1D interp(art_->test.grid1, g);
      const DomainBox box = art_->test.grid1.box();
      // per-cell reference weights sum to the cell measure
      const double cell_measure = art_->test.grid1.dx();
      for (long c = 0; c < n_cells; ++c) {
        double acc = 0.0;
        for (int r = 0; r < per_cell; ++r) {
          const long q = c * per_cell + r;
          const double y = box.clamp(0, quad_.points(q, 0) + disp_at_quad(q, 0));
          acc += quad_.weights[q] * interp(y);
        }
        out[c] = acc / cell_measure;
      }
    } else {
      BilinearInterp2D interp(art_->test.grid2, g);
      const DomainBox box = art_->test.grid2.box();
      const double cell_measure = art_->test.grid2.cell_area();
      for (long c = 0; c < n_cells; ++c) {
        double acc = 0.0;
        for (int r = 0; r < per_cell; ++r) {
          const long q = c * per_cell + r;
          const double y0 = box.clamp(0, quad_.points(q, 0) + disp_at_quad(q, 0));
          const double y1 = box.clamp(1, quad_.points(q, 1) + disp_at_quad(q, 1));
          acc += quad_.weights[q] * interp(y0, y1);
        }
        out[c] = acc / cell_measure;
      }
    }
    return out;
  }

  OnlineResult run(const Vec& z, int n_use = -1, int npsi_use = -1) const {
    const auto t_start = std::chrono::steady_clock::now();
    auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    const OfflineArtifacts& art = *art_;
    if (!art.test.inside_param_box(z))
      throw std::invalid_argument("run_online: z outside the parameter box");
    if (n_use < 0) n_use = art.n;
    if (npsi_use < 0) npsi_use = art.n_psi;
    if (n_use < 1 || n_use > art.n) throw std::invalid_argument("run_online: n out of range");
    if (!art.identity_mode && (npsi_use < 1 || npsi_use > art.n_psi))
      throw std::invalid_argument("run_online: n_psi out of range");

    OnlineResult result;
    for (int d = 0; d < z.size(); ++d)
      if (z[d] < hull_lo_[d] - 1e-12 || z[d] > hull_hi_[d] + 1e-12) result.extrapolation = true;

    // reduced coefficients and reconstruction
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Field> g_fields;
    for (const ComponentModel& comp : art.components) {
      Vec alpha(n_use);
      for (int i = 0; i < n_use; ++i) alpha[i] = comp.alpha_gpr[i].predict(z, 0.0);
      g_fields.push_back(comp.g_basis.modes.leftCols(n_use) * alpha);
    }
    auto t1 = std::chrono::steady_clock::now();
    result.seconds_coefficients = secs(t0, t1);

    // inverse displacement
    const bool identity_transform = art.identity_mode || art.inverse.empty();
    Mat disp;
    if (!identity_transform) disp = inverse_displacement_at_quad(z, npsi_use);
    auto t2 = std::chrono::steady_clock::now();
    result.seconds_inverse = secs(t1, t2);

    // de-transformation
    if (identity_transform) {
      result.fields = std::move(g_fields);
    } else {
      for (const Field& g : g_fields) result.fields.push_back(compose(g, disp));
    }
    auto t3 = std::chrono::steady_clock::now();
    result.seconds_compose = secs(t2, t3);

    if (art.error_surrogate.valid && n_use == art.error_surrogate.n &&
        (identity_transform || npsi_use == art.error_surrogate.n_psi)) {
      const double raw = art.error_surrogate.gpr.predict(z, art.error_surrogate.lambda);
      result.predicted_error = std::max(raw, 0.0);
      result.has_error_estimate = true;
    }
    auto t4 = std::chrono::steady_clock::now();
    result.seconds_surrogate = secs(t3, t4);
    result.seconds_total = secs(t_start, t4);
    return result;
  }

 private:
  const OfflineArtifacts* art_;
  CellQuadrature quad_;
  std::unique_ptr<P1Space1D> space1_;
  std::unique_ptr<P1Space2D> space2_;
  std::vector<Mat> mode_values_;  // per spatial component: n_q x n_psi
  std::vector<double> hull_lo_, hull_hi_;
};

// Projection baseline: orthogonal projection of the high-fidelity snapshot
// onto the untransformed basis.
inline Field s_proj_baseline(const OfflineArtifacts& art, int component, const Field& hf_field,
                             int n) {
  const PodBasis& basis = art.components.at(component).u_basis;
  if (n < 1 || n > basis.n) throw std::invalid_argument("s_proj_baseline: n out of range");
  const Mat X = basis.modes.leftCols(n);
  return X * (X.transpose() * hf_field);
}

// ---------------------------------------------------------------------------
// Offline driver.
// ---------------------------------------------------------------------------

inline long pick_reference_index(const Mat& samples, const Mat& param_box) {
  Vec center(param_box.rows());
  for (int d = 0; d < param_box.rows(); ++d) center[d] = 0.5 * (param_box(d, 0) + param_box(d, 1));
  long best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (long s = 0; s < samples.rows(); ++s) {
    double dist = 0.0;
    for (int d = 0; d < param_box.rows(); ++d) {
      const double span = std::max(param_box(d, 1) - param_box(d, 0), 1e-300);
      const double delta = (samples(s, d) - center[d]) / span;
      dist += delta * delta;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = s;
    }
  }
  return best;
}

inline bool samples_cover_corners(const Mat& samples, const Mat& param_box, double rel_tol = 1e-9) {
  const int p = static_cast<int>(param_box.rows());
  const long n_corners = 1L << p;
  for (long c = 0; c < n_corners; ++c) {
    bool found = false;
    for (long s = 0; s < samples.rows() && !found; ++s) {
      bool match = true;
      for (int d = 0; d < p; ++d) {
        const double corner = param_box(d, (c >> d) & 1);
        const double span = std::max(param_box(d, 1) - param_box(d, 0), 1e-300);
        if (std::abs(samples(s, d) - corner) > rel_tol * span) match = false;
      }
      found = match;
    }
    if (!found) return false;
  }
  return true;
}

inline OfflineArtifacts run_offline(const PipelineConfig& cfg, const SnapshotSet* preloaded = nullptr) {
  using clock = std::chrono::steady_clock;
  auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  const auto t_begin = clock::now();

  const TestCase& tc = cfg.test;
  const long m = cfg.samples.rows();
  if (m < 2) throw ConfigError("run_offline: need at least 2 training samples");
  if (cfg.n < 1 || cfg.n > std::min<long>(tc.n_dofs(), m))
    throw ConfigError("run_offline: n out of range");
  if (!cfg.identity_mode && (cfg.n_psi < 1 || cfg.n_psi > m))
    throw ConfigError("run_offline: n_psi out of range");
  if (!samples_cover_corners(cfg.samples, tc.param_box))
    std::cerr << "[tsmor] warning: training samples do not cover the parameter-box corners; "
                 "queries near them extrapolate\n";

  OfflineArtifacts art;
  art.test = tc;
  art.samples = cfg.samples;
  art.n = cfg.n;
  art.n_psi = cfg.identity_mode ? 0 : cfg.n_psi;
  art.identity_mode = cfg.identity_mode;
  art.quad_order = cfg.quad_order;
  art.seed = cfg.seed;
  art.ref_index = pick_reference_index(cfg.samples, tc.param_box);

  // 1. high-fidelity snapshots
  auto t0 = clock::now();
  SnapshotSet snaps;
  if (preloaded) {
    if (preloaded->samples.rows() != m) throw ConfigError("run_offline: preloaded snapshot count mismatch");
    snaps = *preloaded;
  } else {
    snaps = sample_snapshots(tc, cfg.samples, cfg.workers);
  }
  art.timings.snapshots = secs(t0, clock::now());
  double hf_total = 0;
  for (double s : snaps.solve_seconds) hf_total += s;
  art.timings.mean_hf_solve = hf_total / std::max<long>(m, 1);

  const QuadratureRule rule = (tc.dim == 1) ? gauss_legendre_1d(cfg.quad_order)
                                            : gauss_legendre_2d(cfg.quad_order);

  // 2. registration (skipped in identity mode)
  t0 = clock::now();
  std::vector<Field> reg_targets;  // component-0 snapshots as owned fields
  if (!cfg.identity_mode) {
    reg_targets.reserve(m);
    for (long s = 0; s < m; ++s) reg_targets.push_back(snaps.components[0].col(s));

    RegistrationConfig reg_cfg = cfg.registration;
    reg_cfg.workers = cfg.workers;

    if (tc.id == TestCaseId::Heat2D) {
      const int n_points = 400;
      const Mat ref_pts = heat_interface_points(cfg.samples(art.ref_index, 0), n_points);
      art.registration = register_all(
          tc.domain, cfg.samples, tc.param_box, art.ref_index,
          [&](long s) -> MatchingData {
            PointSetData d;
            d.ref_points = ref_pts;
            d.target_points = heat_interface_points(cfg.samples(s, 0), n_points);
            return d;
          },
          reg_cfg);
    } else {
      CellQuadrature quad = (tc.dim == 1) ? make_cell_quadrature(tc.grid1, rule)
                                          : make_cell_quadrature(tc.grid2, rule);
      Vec ref_at_q(quad.points.rows());
      if (tc.dim == 1) {
        LinearInterp1D interp(tc.grid1, reg_targets[art.ref_index]);
        for (long q = 0; q < quad.points.rows(); ++q) ref_at_q[q] = interp(quad.points(q, 0));
      } else {
        BilinearInterp2D interp(tc.grid2, reg_targets[art.ref_index]);
        for (long q = 0; q < quad.points.rows(); ++q)
          ref_at_q[q] = interp(quad.points(q, 0), quad.points(q, 1));
      }
      art.registration = register_all(
          tc.domain, cfg.samples, tc.param_box, art.ref_index,
          [&](long s) -> MatchingData {
            L2SnapshotData d;
            d.quad = &quad;
            d.ref_at_q = ref_at_q;
            d.dim = tc.dim;
            d.grid1 = tc.grid1;
            d.grid2 = tc.grid2;
            d.target = &reg_targets[s];
            return d;
          },
          reg_cfg);
      if (!art.registration.converged)
        std::cerr << "[tsmor] warning: registration order selection hit max_M without stagnation\n";
    }
  }
  art.timings.registration = secs(t0, clock::now());

  // 3. transformed snapshots
  t0 = clock::now();
  std::vector<Mat> transformed(tc.n_components);
  for (int c = 0; c < tc.n_components; ++c) transformed[c] = Mat(tc.n_dofs(), m);
  parallel_for(m, [&](std::int64_t s) {
    const DisplacementCoeffs coeffs = cfg.identity_mode
                                          ? DisplacementCoeffs::zero(tc.domain, 1)
                                          : art.displacement_for(s);
    for (int c = 0; c < tc.n_components; ++c) {
      const Field u = snaps.components[c].col(s);
      transformed[c].col(s) = (tc.dim == 1) ? transform_snapshot_1d(u, coeffs, tc.grid1, rule)
                                            : transform_snapshot_2d(u, coeffs, tc.grid2, rule);
    }
  }, cfg.workers);
  art.timings.transform = secs(t0, clock::now());

  // 4. POD bases (transformed and untransformed)
  t0 = clock::now();
  art.components.resize(tc.n_components);
  for (int c = 0; c < tc.n_components; ++c) {
    art.components[c].g_basis = compute_pod(transformed[c], cfg.n);
    art.components[c].u_basis = cfg.identity_mode
                                    ? art.components[c].g_basis
                                    : compute_pod(snaps.components[c], cfg.n);
    art.components[c].alpha_train = project_columns(transformed[c], art.components[c].g_basis);
  }
  art.timings.pod = secs(t0, clock::now());

  // 5. coefficient regression, one independent model per coefficient
  t0 = clock::now();
  for (int c = 0; c < tc.n_components; ++c) {
    ComponentModel& comp = art.components[c];
    comp.alpha_gpr.resize(cfg.n);
    parallel_for(cfg.n, [&](std::int64_t i) {
      GprTrainConfig gcfg = cfg.gpr;
      gcfg.seed = mix_seed(cfg.seed, 0x616c70ULL + c * 4096 + i);
      comp.alpha_gpr[i] = train_gpr(cfg.samples, comp.alpha_train.row(i).transpose(), gcfg);
    }, cfg.workers);
  }
  art.timings.gpr = secs(t0, clock::now());

  // 6. inverse-map snapshots and reduced model
  t0 = clock::now();
  if (!cfg.identity_mode) {
    std::vector<Mat> inv_snaps(tc.dim);
    std::vector<InversionStats> stats(m);
    if (tc.dim == 1) {
      P1Space1D space(tc.grid1);
      P1Projector1D projector(space);
      InverseSnapshotWorkspace1D ws(space, projector, rule);
      for (int k = 0; k < 1; ++k) inv_snaps[k] = Mat(space.n_vertices(), m);
      parallel_for(m, [&](std::int64_t s) {
        const Mat nodal = build_inverse_snapshot_1d(art.displacement_for(s), ws, &stats[s]);
        inv_snaps[0].col(s) = nodal.col(0);
      }, cfg.workers);
    } else {
      P1Space2D space(triangulate(tc.grid2));
      P1Projector2D projector(space);
      InverseSnapshotWorkspace2D ws(space, projector, rule);
      for (int k = 0; k < 2; ++k) inv_snaps[k] = Mat(space.n_vertices(), m);
      parallel_for(m, [&](std::int64_t s) {
        const Mat nodal = build_inverse_snapshot_2d(art.displacement_for(s), ws, &stats[s]);
        for (int k = 0; k < 2; ++k) inv_snaps[k].col(s) = nodal.col(k);
      }, cfg.workers);
    }
    for (const InversionStats& st : stats) art.inversion_stats.merge(st);
    GprTrainConfig gcfg = cfg.gpr;
    gcfg.seed = mix_seed(cfg.seed, 0x707369ULL);
    art.inverse = fit_inverse_model(inv_snaps, cfg.samples, cfg.n_psi, gcfg, cfg.workers);
  }
  art.timings.inverse = secs(t0, clock::now());

  // 7. error surrogate from in-sample online errors
  t0 = clock::now();
  {
    OnlineEvaluator evaluator(art);
    Vec errors(m);
    parallel_for(m, [&](std::int64_t s) {
      const OnlineResult res = evaluator.run(cfg.samples.row(s).transpose());
      const Field ref = snaps.components[0].col(s);
      errors[s] = relative_l1_error(ref, res.fields[0]);
    }, cfg.workers);
    GprTrainConfig gcfg = cfg.gpr;
    gcfg.seed = mix_seed(cfg.seed, 0x657272ULL);
    art.error_surrogate.gpr = train_gpr(cfg.samples, errors, gcfg);
    art.error_surrogate.n = cfg.n;
    art.error_surrogate.n_psi = art.n_psi;
    art.error_surrogate.lambda = 2.0;
    art.error_surrogate.valid = true;
  }
  art.timings.surrogate = secs(t0, clock::now());
  art.timings.total = secs(t_begin, clock::now());
  return art;
}

// Identity-transform mode: plain POD+GPR on raw snapshots.
inline OfflineArtifacts run_identity_mode(const TestCase& test, const Mat& samples, int n,
                                          const GprTrainConfig& gpr = {}, int workers = 0,
                                          std::uint64_t seed = 0) {
  PipelineConfig cfg;
  cfg.test = test;
  cfg.samples = samples;
  cfg.n = n;
  cfg.n_psi = 1;
  cfg.identity_mode = true;
  cfg.gpr = gpr;
  cfg.workers = workers;
  cfg.seed = seed;
  return run_offline(cfg);
}

// ---------------------------------------------------------------------------
// Test-set evaluation: average error, efficiency indices and speed-up.
// ---------------------------------------------------------------------------

struct TestSetReferences {
  Mat samples;                           // m_tst x p
  std::vector<std::vector<Field>> hf;    // [sample][component]
  std::vector<double> hf_seconds;
};

inline TestSetReferences compute_references(const TestCase& tc, const Mat& test_samples,
                                            int workers = 0) {
  TestSetReferences refs;
  refs.samples = test_samples;
  refs.hf.resize(test_samples.rows());
  refs.hf_seconds.assign(test_samples.rows(), 0.0);
  parallel_for(test_samples.rows(), [&](std::int64_t s) {
    refs.hf[s] = solve_at(tc, test_samples.row(s).transpose(), &refs.hf_seconds[s]);
  }, workers);
  return refs;
}

// Mean relative L1 error of the reduced model over a test set (component 0).
inline double average_error(const OnlineEvaluator& evaluator, const TestSetReferences& refs,
                            int n_use = -1, int npsi_use = -1, int workers = 0) {
  const long mt = refs.samples.rows();
  if (mt == 0) throw std::invalid_argument("average_error: empty test set");
  Vec errors(mt);
  parallel_for(mt, [&](std::int64_t s) {
    const OnlineResult res = evaluator.run(refs.samples.row(s).transpose(), n_use, npsi_use);
    errors[s] = relative_l1_error(refs.hf[s][0], res.fields[0]);
  }, workers);
  return errors.mean();
}

inline double average_error_s_proj(const OfflineArtifacts& art, const TestSetReferences& refs,
                                   int n, int workers = 0) {
  const long mt = refs.samples.rows();
  Vec errors(mt);
  parallel_for(mt, [&](std::int64_t s) {
    const Field proj = s_proj_baseline(art, 0, refs.hf[s][0], n);
    errors[s] = relative_l1_error(refs.hf[s][0], proj);
  }, workers);
  return errors.mean();
}

}  // namespace tsmor
