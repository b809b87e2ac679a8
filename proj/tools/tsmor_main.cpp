// Command-line front end: offline bundle construction, online queries and the
// benchmark sweeps, all driven by JSON configs.

#include "tsmor/config.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace tsmor;

std::vector<std::string> default_param_labels(const TestCase& tc) {
  if (!tc.param_labels.empty()) return tc.param_labels;
  std::vector<std::string> out;
  for (int d = 0; d < tc.n_params(); ++d) out.push_back("z" + std::to_string(d));
  return out;
}

Vec parse_z(const std::string& text, int p) {
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string tok = text.substr(pos, next - pos);
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("malformed parameter value: `" + tok + "`");
    }
    pos = next + 1;
  }
  if (static_cast<int>(vals.size()) != p)
    throw ConfigError("expected " + std::to_string(p) + " parameter components");
  return Eigen::Map<const Vec>(vals.data(), vals.size());
}

// Grid-shaped CSV: 1D fields one value per row, 2D fields ny rows by nx cols.
void write_field_csv(const fs::path& path, const TestCase& tc, const Field& f) {
  if (tc.dim == 1) {
    write_matrix_csv(path, f);
  } else {
    Mat shaped(tc.grid2.ny(), tc.grid2.nx());
    for (int j = 0; j < tc.grid2.ny(); ++j)
      for (int i = 0; i < tc.grid2.nx(); ++i) shaped(j, i) = f[tc.grid2.index(i, j)];
    write_matrix_csv(path, shaped);
  }
}

int cmd_offline(const std::string& config_path, const std::string& out_override,
                const std::string& mode_override, long seed_override, int workers_override) {
  RunConfig rc = load_run_config(config_path);
  if (!out_override.empty()) rc.out_dir = out_override;
  if (mode_override == "identity") rc.identity_mode = true;
  if (mode_override == "tsmor") rc.identity_mode = false;
  if (seed_override >= 0) rc.seed = static_cast<std::uint64_t>(seed_override);
  if (workers_override > 0) rc.workers = workers_override;

  const fs::path bundle_dir = fs::path(rc.out_dir) / "bundle";
  try {
    OfflineArtifacts art = run_offline(rc.pipeline(), rc.imported ? &*rc.imported_snaps : nullptr);
    save_bundle(bundle_dir, art, rc.digest);
    std::cout << "bundle written to " << bundle_dir.string() << "\n"
              << "  m_tr=" << art.samples.rows() << " n=" << art.n << " n_psi=" << art.n_psi
              << " mode=" << (art.identity_mode ? "identity" : "tsmor") << "\n";
    if (!art.identity_mode)
      std::cout << "  registration order M=" << art.registration.order
                << (art.registration.converged ? "" : " (order cap reached)")
                << ", worst inversion residual=" << art.inversion_stats.worst_residual << "\n";
    std::cout << "  offline seconds: total=" << art.timings.total
              << " (snapshots=" << art.timings.snapshots
              << ", registration=" << art.timings.registration << ", gpr=" << art.timings.gpr
              << ", inverse=" << art.timings.inverse << ")\n";
    return 0;
  } catch (...) {
    std::error_code ec;
    fs::remove_all(bundle_dir, ec);  // never leave partial bundles behind
    throw;
  }
}

int cmd_online(const std::string& bundle_path, const std::string& z_text,
               const std::string& z_file, const std::string& out_dir, bool dump_fields,
               bool dump_binary) {
  OfflineArtifacts art = load_bundle(bundle_path);
  OnlineEvaluator evaluator(art);

  Mat queries;
  if (!z_text.empty()) {
    queries.resize(1, art.test.n_params());
    queries.row(0) = parse_z(z_text, art.test.n_params()).transpose();
  } else if (!z_file.empty()) {
    queries = read_matrix_csv(z_file);
    if (queries.cols() != art.test.n_params())
      throw ConfigError("z-file column count does not match the parameter dimension");
  } else {
    throw ConfigError("online: provide --z or --z-file");
  }
  for (long q = 0; q < queries.rows(); ++q)
    if (!art.test.inside_param_box(queries.row(q).transpose()))
      throw ConfigError("query parameter outside the parameter box");

  fs::create_directories(out_dir);
  const auto labels = default_param_labels(art.test);
  std::ofstream results(fs::path(out_dir) / "online_results.csv");
  for (const auto& l : labels) results << l << ",";
  results << "predicted_error,extrapolation,seconds\n";
  char buf[64];
  for (long q = 0; q < queries.rows(); ++q) {
    const Vec z = queries.row(q).transpose();
    const OnlineResult res = evaluator.run(z);
    for (int d = 0; d < z.size(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g,", z[d]);
      results << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", res.predicted_error);
    results << buf << "," << (res.extrapolation ? 1 : 0) << "," << res.seconds_total << "\n";
    if (res.extrapolation)
      std::cerr << "[tsmor] warning: query " << q << " lies outside the training hull\n";
    if (dump_fields) {
      for (std::size_t c = 0; c < res.fields.size(); ++c) {
        const std::string stem = "field_q" + std::to_string(q) + "_c" + std::to_string(c);
        write_field_csv(fs::path(out_dir) / (stem + ".csv"), art.test, res.fields[c]);
        if (dump_binary) write_matrix_bin(fs::path(out_dir) / (stem + ".bin"), res.fields[c]);
      }
    }
  }
  std::cout << "wrote " << queries.rows() << " online results to " << out_dir << "\n";
  return 0;
}

int cmd_benchmark(const std::string& config_path, const std::string& out_override,
                  int workers_override) {
  RunConfig rc = load_run_config(config_path);
  if (!out_override.empty()) rc.out_dir = out_override;
  if (workers_override > 0) rc.workers = workers_override;
  if (rc.imported)
    throw ConfigError("benchmark requires a built-in solver for reference solutions");

  std::vector<int> n_grid = rc.n_grid.empty() ? std::vector<int>{rc.n} : rc.n_grid;
  std::vector<int> npsi_grid = rc.identity_mode
                                   ? std::vector<int>{1}
                                   : (rc.npsi_grid.empty() ? std::vector<int>{rc.n_psi} : rc.npsi_grid);

  const fs::path out(rc.out_dir);
  fs::create_directories(out);

  OfflineArtifacts art = run_offline(rc.pipeline());
  save_bundle(out / "bundle", art, rc.digest);
  OnlineEvaluator evaluator(art);

  // independent uniform test set
  std::mt19937_64 rng = make_rng(rc.seed, 0x747374ULL);
  const Mat test_samples = random_samples(rc.test.param_box, rc.test_set_size, rng);
  TestSetReferences refs = compute_references(rc.test, test_samples, rc.workers);

  // average-error table over the (n, n_psi) sweep
  {
    std::ofstream ea(out / "ea_table.csv");
    ea << "n,n_psi,average_error\n";
    for (int n : n_grid)
      for (int npsi : npsi_grid) {
        const double e = average_error(evaluator, refs, n, rc.identity_mode ? -1 : npsi, rc.workers);
        ea << n << "," << npsi << "," << e << "\n";
      }
  }

  // S-PROJ baseline per n
  {
    std::ofstream sp(out / "sproj.csv");
    sp << "n,average_error\n";
    for (int n : n_grid) sp << n << "," << average_error_s_proj(art, refs, n, rc.workers) << "\n";
  }

  // POD projection-error curves (transformed vs untransformed)
  {
    std::ofstream ep(out / "eproj.csv");
    ep << "n,component,eproj_transformed,eproj_untransformed\n";
    const int n_max = *std::max_element(n_grid.begin(), n_grid.end());
    for (std::size_t c = 0; c < art.components.size(); ++c)
      for (int n = 1; n <= n_max; ++n)
        ep << n << "," << c << "," << projection_error(art.components[c].g_basis, n) << ","
           << projection_error(art.components[c].u_basis, n) << "\n";
  }

  // per-sample metrics at the bundle's (n, n_psi): true error, surrogate,
  // efficiency index, timings
  std::vector<double> mor_seconds(refs.samples.rows(), 0.0);
  {
    std::ofstream metrics(out / "metrics.csv");
    const auto labels = default_param_labels(rc.test);
    for (const auto& l : labels) metrics << l << ",";
    metrics << "error,predicted_error,efficiency_index,seconds_hf,seconds_mor\n";
    char buf[64];
    double eta_sum = 0;
    long eta_count = 0, eta_in_band = 0;
    Vec errors(refs.samples.rows());
    for (long s = 0; s < refs.samples.rows(); ++s) {
      const Vec z = refs.samples.row(s).transpose();
      const OnlineResult res = evaluator.run(z);
      mor_seconds[s] = res.seconds_total;
      errors[s] = relative_l1_error(refs.hf[s][0], res.fields[0]);
      const double eta = efficiency_index(res.predicted_error, errors[s]);
      if (std::isfinite(eta)) {
        eta_sum += eta;
        ++eta_count;
        if (eta >= 0.3 && eta <= 3.0) ++eta_in_band;
      }
      for (int d = 0; d < z.size(); ++d) {
        std::snprintf(buf, sizeof(buf), "%.17g,", z[d]);
        metrics << buf;
      }
      metrics << errors[s] << "," << res.predicted_error << "," << eta << ","
              << refs.hf_seconds[s] << "," << res.seconds_total << "\n";
    }

    // Jacobian diagnostics over the training set (forward) and test set (inverse)
    double fwd_jmin = std::numeric_limits<double>::infinity();
    double inv_jmin = std::numeric_limits<double>::infinity();
    if (!rc.identity_mode) {
      for (long s = 0; s < art.samples.rows(); ++s) {
        const DisplacementCoeffs dc = art.displacement_for(s);
        fwd_jmin = std::min(fwd_jmin, rc.test.dim == 1
                                          ? forward_jacobian_min_1d(dc, rc.test.grid1)
                                          : forward_jacobian_min_2d(dc, rc.test.grid2));
      }
      for (long s = 0; s < refs.samples.rows(); ++s) {
        const Mat nodal = evaluator.inverse_displacement_nodal(refs.samples.row(s).transpose(),
                                                               art.n_psi);
        inv_jmin = std::min(inv_jmin, rc.test.dim == 1
                                          ? inverse_jacobian_min_1d(*evaluator.space1(), nodal)
                                          : inverse_jacobian_min_2d(*evaluator.space2(), nodal));
      }
    }

    Json summary;
    summary["m_tr"] = art.samples.rows();
    summary["n"] = art.n;
    summary["n_psi"] = art.n_psi;
    summary["mode"] = art.identity_mode ? "identity" : "tsmor";
    summary["registration_order"] = art.identity_mode ? 0 : art.registration.order;
    summary["average_error_tsmor"] = errors.mean();
    summary["average_error_sproj"] = average_error_s_proj(art, refs, art.n, rc.workers);
    summary["efficiency_index_mean"] = eta_count ? eta_sum / eta_count : 0.0;
    summary["efficiency_index_in_band_fraction"] =
        eta_count ? static_cast<double>(eta_in_band) / eta_count : 0.0;
    summary["speedup"] = speedup(refs.hf_seconds, mor_seconds);
    summary["worst_inversion_residual"] = art.inversion_stats.worst_residual;
    if (!rc.identity_mode) {
      summary["forward_jacobian_min"] = fwd_jmin;
      summary["inverse_jacobian_min"] = inv_jmin;
    }
    summary["offline_seconds"] = art.timings.total;
    std::ofstream sj(out / "summary.json");
    sj << summary.dump(2) << "\n";
  }

  std::cout << "benchmark outputs in " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformed-snapshot model order reduction toolkit"};
  app.require_subcommand(1);

  std::string config_path, bundle_path, z_text, z_file, out_dir, mode_override;
  long seed_override = -1;
  int workers = 0;
  bool dump_fields = false, dump_binary = false;

  CLI::App* offline = app.add_subcommand("offline", "build an artifact bundle from a config");
  offline->add_option("--config", config_path, "JSON config path")->required();
  offline->add_option("--out", out_dir, "output directory override");
  offline->add_option("--mode", mode_override, "tsmor|identity override")
      ->check(CLI::IsMember({"tsmor", "identity"}));
  offline->add_option("--seed", seed_override, "seed override");
  offline->add_option("--workers", workers, "worker thread count");

  CLI::App* online = app.add_subcommand("online", "query a bundle at parameter values");
  online->add_option("--bundle", bundle_path, "bundle directory")->required();
  online->add_option("--z", z_text, "comma-separated parameter value");
  online->add_option("--z-file", z_file, "CSV of query parameters, one row per query");
  online->add_option("--out", out_dir, "output directory")->required();
  online->add_flag("--dump-fields", dump_fields, "write solution fields as grid-shaped CSV");
  online->add_flag("--dump-binary", dump_binary, "also write fields as little-endian float64");

  CLI::App* benchmark = app.add_subcommand("benchmark", "offline + test-set evaluation sweeps");
  benchmark->add_option("--config", config_path, "JSON config path")->required();
  benchmark->add_option("--out", out_dir, "output directory override");
  benchmark->add_option("--workers", workers, "worker thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (offline->parsed())
      return cmd_offline(config_path, out_dir, mode_override, seed_override, workers);
    if (online->parsed())
      return cmd_online(bundle_path, z_text, z_file, out_dir, dump_fields, dump_binary);
    if (benchmark->parsed()) return cmd_benchmark(config_path, out_dir, workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
