#pragma once

#include "tsmor/artifacts.hpp"

#include <cstdlib>
#include <optional>

namespace tsmor {

// ---------------------------------------------------------------------------
// Run configuration: a single JSON file drives the offline and benchmark
// commands. Every experiment in configs/ is such a file.
// ---------------------------------------------------------------------------

struct RunConfig {
  TestCase test;
  bool imported = false;
  std::optional<SnapshotSet> imported_snaps;

  Mat samples;
  int n = 1;
  int n_psi = 1;
  double epsilon = 1e-2;
  double tol_M = 1e-3;
  int max_M = 8;
  int quad_order = 3;
  bool identity_mode = false;
  std::uint64_t seed = 0;
  int workers = 0;
  int gpr_restarts = 5;
  long test_set_size = 200;
  std::vector<int> n_grid, npsi_grid;
  std::string out_dir = "tsmor_out";
  std::string digest;  // fingerprint of the raw config text

  PipelineConfig pipeline() const {
    PipelineConfig cfg;
    cfg.test = test;
    cfg.samples = samples;
    cfg.n = n;
    cfg.n_psi = n_psi;
    cfg.identity_mode = identity_mode;
    cfg.registration.epsilon = epsilon;
    cfg.registration.tol_M = tol_M;
    cfg.registration.max_M = max_M;
    cfg.gpr.restarts = gpr_restarts;
    cfg.gpr.seed = seed;
    cfg.quad_order = quad_order;
    cfg.workers = workers;
    cfg.seed = seed;
    return cfg;
  }
};

inline RunConfig parse_run_config(const Json& j, const std::string& raw_text = "") {
  RunConfig rc;
  rc.digest = hex64(fnv1a(raw_text.data(), raw_text.size()));

  if (j.contains("snapshots")) {
    ImportedSnapshots imp = load_snapshot_set(j.at("snapshots").get<std::string>());
    rc.test = imp.test;
    rc.test.id = TestCaseId::Imported;
    rc.imported = true;
    rc.imported_snaps = std::move(imp.snaps);
    rc.samples = rc.imported_snaps->samples;
  } else if (j.contains("test")) {
    const TestCaseId id = test_case_from_string(j.at("test").get<std::string>());
    int nx = 0, ny = -1;
    if (!j.contains("grid") || !j.at("grid").contains("nx"))
      throw ConfigError("config: grid.nx is required");
    nx = j.at("grid").at("nx").get<int>();
    if (j.at("grid").contains("ny")) ny = j.at("grid").at("ny").get<int>();
    if (nx < 1) throw ConfigError("config: grid.nx must be positive");
    rc.test = make_test_case(id, nx, ny);
  } else {
    throw ConfigError("config: either `test` or `snapshots` is required");
  }

  if (!rc.imported) {
    if (!j.contains("samples")) throw ConfigError("config: `samples` is required");
    const Json& s = j.at("samples");
    if (s.contains("tensor")) {
      rc.samples = tensor_samples(rc.test.param_box, s.at("tensor").get<std::vector<int>>());
    } else if (s.contains("list")) {
      const auto& list = s.at("list");
      if (list.empty()) throw ConfigError("config: samples.list is empty");
      rc.samples.resize(list.size(), rc.test.n_params());
      for (std::size_t r = 0; r < list.size(); ++r) {
        if (static_cast<int>(list[r].size()) != rc.test.n_params())
          throw ConfigError("config: sample row has wrong dimension");
        for (int d = 0; d < rc.test.n_params(); ++d) rc.samples(r, d) = list[r][d].get<double>();
      }
    } else {
      throw ConfigError("config: samples must contain `tensor` or `list`");
    }
  }
  for (long s = 0; s < rc.samples.rows(); ++s)
    if (!rc.test.inside_param_box(rc.samples.row(s).transpose()))
      throw ConfigError("config: training sample outside the parameter box");

  rc.n = j.value("n", 1);
  rc.n_psi = j.value("n_psi", rc.n);
  rc.epsilon = j.value("epsilon", 1e-2);
  rc.tol_M = j.value("tol_M", 1e-3);
  rc.max_M = j.value("max_M", 8);
  rc.quad_order = j.value("quad_order", 3);
  rc.seed = j.value("seed", std::uint64_t{0});
  rc.workers = j.value("workers", 0);
  rc.gpr_restarts = j.value("gpr_restarts", 5);
  rc.test_set_size = j.value("test_set_size", 200L);
  rc.out_dir = j.value("out_dir", std::string("tsmor_out"));
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "identity")
      rc.identity_mode = true;
    else if (mode != "tsmor")
      throw ConfigError("config: mode must be `tsmor` or `identity`");
  }
  if (j.contains("n_grid")) rc.n_grid = j.at("n_grid").get<std::vector<int>>();
  if (j.contains("npsi_grid")) rc.npsi_grid = j.at("npsi_grid").get<std::vector<int>>();

  const long m = rc.samples.rows();
  if (rc.n < 1 || rc.n > std::min<long>(rc.test.n_dofs(), m))
    throw ConfigError("config: n out of range for the sample count and grid");
  if (!rc.identity_mode && (rc.n_psi < 1 || rc.n_psi > m))
    throw ConfigError("config: n_psi out of range");
  if (rc.epsilon < 0) throw ConfigError("config: epsilon must be >= 0");
  if (!(rc.tol_M > 0)) throw ConfigError("config: tol_M must be > 0");
  for (int v : rc.n_grid)
    if (v < 1 || v > rc.n) throw ConfigError("config: n_grid entries must lie in [1, n]");
  for (int v : rc.npsi_grid)
    if (v < 1 || (!rc.identity_mode && v > rc.n_psi))
      throw ConfigError("config: npsi_grid entries must lie in [1, n_psi]");

  // environment override for the output directory
  if (const char* env = std::getenv("TSMOR_OUT_DIR")) rc.out_dir = env;
  return rc;
}

inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    return parse_run_config(j, text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
}

}  // namespace tsmor
