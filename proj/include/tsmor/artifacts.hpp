#pragma once

#include "tsmor/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace tsmor {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Matrix payloads: column-major little-endian float64 with shape and
// fingerprint recorded in the bundle manifest.
// ---------------------------------------------------------------------------

inline void write_matrix_bin(const fs::path& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!out) throw ConfigError("short write on " + path.string());
}

inline Mat read_matrix_bin(const fs::path& path, long rows, long cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  Mat m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * m.size()))
    throw ConfigError("short read on " + path.string());
  return m;
}

inline std::string matrix_fingerprint(const Mat& m) {
  return hex64(fnv1a(m.data(), sizeof(double) * m.size()));
}

inline void write_matrix_csv(const fs::path& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  char buf[64];
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      out << buf << (c + 1 < m.cols() ? "," : "");
    }
    out << "\n";
  }
}

inline Mat read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      row.push_back(std::stod(line.substr(pos, next - pos)));
      pos = next + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError("ragged CSV in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("empty CSV " + path.string());
  Mat m(rows.size(), rows.front().size());
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

// ---------------------------------------------------------------------------
// GPR model (de)serialization: hyper-parameters in JSON, training targets as
// a shared binary payload; the factorization is rebuilt deterministically.
// ---------------------------------------------------------------------------

inline Json gpr_to_json(const GprModel& model) {
  const GprHyperparams& hp = model.hyperparams();
  Json j;
  j["beta"] = std::vector<double>(hp.beta.data(), hp.beta.data() + hp.beta.size());
  j["kappa1"] = hp.kappa1;
  j["length_scales"] = std::vector<double>(hp.length_scales.data(),
                                           hp.length_scales.data() + hp.length_scales.size());
  j["noise_sigma"] = hp.noise_sigma;
  j["z_mean"] = std::vector<double>(model.z_mean().data(), model.z_mean().data() + model.z_mean().size());
  j["z_scale"] = std::vector<double>(model.z_scale().data(),
                                     model.z_scale().data() + model.z_scale().size());
  return j;
}

inline GprModel gpr_from_json(const Json& j, const Mat& samples_raw, const Vec& targets) {
  GprHyperparams hp;
  const auto beta = j.at("beta").get<std::vector<double>>();
  hp.beta = Eigen::Map<const Vec>(beta.data(), beta.size());
  hp.kappa1 = j.at("kappa1").get<double>();
  const auto ls = j.at("length_scales").get<std::vector<double>>();
  hp.length_scales = Eigen::Map<const Vec>(ls.data(), ls.size());
  hp.noise_sigma = j.at("noise_sigma").get<double>();
  const auto zm = j.at("z_mean").get<std::vector<double>>();
  const auto zs = j.at("z_scale").get<std::vector<double>>();
  Vec z_mean = Eigen::Map<const Vec>(zm.data(), zm.size());
  Vec z_scale = Eigen::Map<const Vec>(zs.data(), zs.size());
  Mat X(samples_raw.rows(), samples_raw.cols());
  for (int d = 0; d < X.cols(); ++d) X.col(d) = (samples_raw.col(d).array() - z_mean[d]) / z_scale[d];
  return GprModel(std::move(hp), std::move(X), targets, std::move(z_mean), std::move(z_scale));
}

// ---------------------------------------------------------------------------
// Artifact bundle: manifest.json plus binary payloads in one directory.
// ---------------------------------------------------------------------------

inline constexpr int kBundleSchemaVersion = 1;

inline Json test_case_to_json(const TestCase& tc) {
  Json j;
  j["id"] = to_string(tc.id);
  j["dim"] = tc.dim;
  j["n_components"] = tc.n_components;
  j["param_labels"] = tc.param_labels;
  j["time_axis"] = tc.time_axis;
  j["param_box"] = Json::array();
  for (int d = 0; d < tc.n_params(); ++d)
    j["param_box"].push_back({tc.param_box(d, 0), tc.param_box(d, 1)});
  if (tc.dim == 1) {
    j["grid"] = {{"a", tc.grid1.a}, {"b", tc.grid1.b}, {"n", tc.grid1.n_cells}};
  } else {
    j["grid"] = {{"ax", tc.grid2.x.a}, {"bx", tc.grid2.x.b}, {"nx", tc.grid2.nx()},
                 {"ay", tc.grid2.y.a}, {"by", tc.grid2.y.b}, {"ny", tc.grid2.ny()}};
  }
  return j;
}

inline TestCase test_case_from_json(const Json& j) {
  TestCase tc;
  tc.id = test_case_from_string(j.at("id").get<std::string>());
  tc.dim = j.at("dim").get<int>();
  tc.n_components = j.at("n_components").get<int>();
  tc.param_labels = j.at("param_labels").get<std::vector<std::string>>();
  tc.time_axis = j.at("time_axis").get<int>();
  const auto& box = j.at("param_box");
  tc.param_box.resize(box.size(), 2);
  for (std::size_t d = 0; d < box.size(); ++d) {
    tc.param_box(d, 0) = box[d][0].get<double>();
    tc.param_box(d, 1) = box[d][1].get<double>();
  }
  const auto& g = j.at("grid");
  if (tc.dim == 1) {
    tc.grid1 = Grid1D(g.at("a").get<double>(), g.at("b").get<double>(), g.at("n").get<int>());
    tc.domain = tc.grid1.box();
  } else {
    tc.grid2 = make_grid_2d(g.at("ax").get<double>(), g.at("bx").get<double>(), g.at("nx").get<int>(),
                            g.at("ay").get<double>(), g.at("by").get<double>(), g.at("ny").get<int>());
    tc.domain = tc.grid2.box();
  }
  return tc;
}

inline void save_bundle(const fs::path& dir, const OfflineArtifacts& art,
                        const std::string& config_digest = "") {
  fs::create_directories(dir);
  Json manifest;
  manifest["schema_version"] = kBundleSchemaVersion;
  manifest["mode"] = art.identity_mode ? "identity" : "tsmor";
  manifest["test"] = test_case_to_json(art.test);
  manifest["m_tr"] = art.samples.rows();
  manifest["n"] = art.n;
  manifest["n_psi"] = art.n_psi;
  manifest["quad_order"] = art.quad_order;
  manifest["seed"] = art.seed;
  manifest["ref_index"] = art.ref_index;
  manifest["config_digest"] = config_digest;
  manifest["timings"] = {{"snapshots", art.timings.snapshots},
                         {"registration", art.timings.registration},
                         {"transform", art.timings.transform},
                         {"pod", art.timings.pod},
                         {"gpr", art.timings.gpr},
                         {"inverse", art.timings.inverse},
                         {"surrogate", art.timings.surrogate},
                         {"total", art.timings.total},
                         {"mean_hf_solve", art.timings.mean_hf_solve}};
  manifest["inversion"] = {{"worst_residual", art.inversion_stats.worst_residual},
                           {"n_unconverged", art.inversion_stats.n_unconverged},
                           {"n_points", art.inversion_stats.n_points}};

  Json payloads = Json::array();
  std::uint64_t combined = 0xcbf29ce484222325ULL;
  auto emit = [&](const std::string& name, const Mat& m) {
    write_matrix_bin(dir / name, m);
    combined = fnv1a(m.data(), sizeof(double) * m.size(), combined);
    payloads.push_back({{"file", name}, {"rows", m.rows()}, {"cols", m.cols()},
                        {"fnv64", matrix_fingerprint(m)}});
  };

  emit("samples.bin", art.samples);

  if (!art.identity_mode) {
    manifest["registration"] = {{"order", art.registration.order},
                                {"converged", art.registration.converged},
                                {"xi_trace", art.registration.xi_trace},
                                {"matching", art.registration.matching}};
    emit("reg_coeffs.bin", art.registration.coeffs);
  }

  manifest["n_solution_components"] = static_cast<int>(art.components.size());
  for (std::size_t c = 0; c < art.components.size(); ++c) {
    const ComponentModel& comp = art.components[c];
    const std::string p = "comp" + std::to_string(c) + "_";
    emit(p + "g_modes.bin", comp.g_basis.modes);
    emit(p + "g_sigma.bin", comp.g_basis.singular_values);
    emit(p + "u_modes.bin", comp.u_basis.modes);
    emit(p + "u_sigma.bin", comp.u_basis.singular_values);
    emit(p + "alpha.bin", comp.alpha_train);
    Json models = Json::array();
    for (const GprModel& gm : comp.alpha_gpr) models.push_back(gpr_to_json(gm));
    manifest["gpr"][p + "models"] = models;
  }

  if (!art.inverse.empty()) {
    for (int k = 0; k < art.inverse.dim; ++k) {
      const std::string p = "inv" + std::to_string(k) + "_";
      emit(p + "modes.bin", art.inverse.bases[k].modes);
      emit(p + "sigma.bin", art.inverse.bases[k].singular_values);
      Mat alpha(art.inverse.n_psi, art.samples.rows());
      for (int i = 0; i < art.inverse.n_psi; ++i)
        alpha.row(i) = art.inverse.gprs[k][i].training_targets().transpose();
      emit(p + "alpha.bin", alpha);
      Json models = Json::array();
      for (const GprModel& gm : art.inverse.gprs[k]) models.push_back(gpr_to_json(gm));
      manifest["gpr"][p + "models"] = models;
    }
  }

  if (art.error_surrogate.valid) {
    Mat err(art.samples.rows(), 1);
    err.col(0) = art.error_surrogate.gpr.training_targets();
    emit("surrogate_targets.bin", err);
    manifest["gpr"]["surrogate"] = gpr_to_json(art.error_surrogate.gpr);
    manifest["surrogate"] = {{"n", art.error_surrogate.n},
                             {"n_psi", art.error_surrogate.n_psi},
                             {"lambda", art.error_surrogate.lambda}};
  }

  manifest["payloads"] = payloads;
  manifest["bundle_fingerprint"] = hex64(combined);

  std::ofstream out(dir / "manifest.json");
  if (!out) throw ConfigError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

inline Mat load_payload(const fs::path& dir, const Json& manifest, const std::string& name,
                        bool verify = true) {
  for (const auto& p : manifest.at("payloads")) {
    if (p.at("file").get<std::string>() == name) {
      Mat m = read_matrix_bin(dir / name, p.at("rows").get<long>(), p.at("cols").get<long>());
      if (verify && matrix_fingerprint(m) != p.at("fnv64").get<std::string>())
        throw ConfigError("payload fingerprint mismatch: " + name);
      return m;
    }
  }
  throw ConfigError("payload missing from manifest: " + name);
}

inline OfflineArtifacts load_bundle(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("cannot read manifest in " + dir.string());
  Json manifest;
  in >> manifest;
  if (manifest.at("schema_version").get<int>() != kBundleSchemaVersion)
    throw ConfigError("unsupported bundle schema version");

  OfflineArtifacts art;
  art.test = test_case_from_json(manifest.at("test"));
  art.identity_mode = manifest.at("mode").get<std::string>() == "identity";
  art.n = manifest.at("n").get<int>();
  art.n_psi = manifest.at("n_psi").get<int>();
  art.quad_order = manifest.at("quad_order").get<int>();
  art.seed = manifest.at("seed").get<std::uint64_t>();
  art.ref_index = manifest.at("ref_index").get<long>();
  art.samples = load_payload(dir, manifest, "samples.bin");

  if (!art.identity_mode) {
    const Json& reg = manifest.at("registration");
    art.registration.order = reg.at("order").get<int>();
    art.registration.converged = reg.at("converged").get<bool>();
    art.registration.xi_trace = reg.at("xi_trace").get<std::vector<double>>();
    art.registration.matching = reg.at("matching").get<std::vector<double>>();
    art.registration.ref_index = art.ref_index;
    art.registration.coeffs = load_payload(dir, manifest, "reg_coeffs.bin");
  }

  const int n_comp = manifest.at("n_solution_components").get<int>();
  art.components.resize(n_comp);
  for (int c = 0; c < n_comp; ++c) {
    const std::string p = "comp" + std::to_string(c) + "_";
    ComponentModel& comp = art.components[c];
    comp.g_basis.modes = load_payload(dir, manifest, p + "g_modes.bin");
    comp.g_basis.singular_values = load_payload(dir, manifest, p + "g_sigma.bin").col(0);
    comp.g_basis.n = static_cast<int>(comp.g_basis.modes.cols());
    comp.u_basis.modes = load_payload(dir, manifest, p + "u_modes.bin");
    comp.u_basis.singular_values = load_payload(dir, manifest, p + "u_sigma.bin").col(0);
    comp.u_basis.n = static_cast<int>(comp.u_basis.modes.cols());
    comp.alpha_train = load_payload(dir, manifest, p + "alpha.bin");
    const Json& models = manifest.at("gpr").at(p + "models");
    comp.alpha_gpr.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i)
      comp.alpha_gpr.push_back(gpr_from_json(models[i], art.samples, comp.alpha_train.row(i).transpose()));
  }

  if (!art.identity_mode && manifest.at("gpr").contains("inv0_models")) {
    art.inverse.dim = art.test.dim;
    art.inverse.n_psi = art.n_psi;
    art.inverse.bases.resize(art.inverse.dim);
    art.inverse.gprs.resize(art.inverse.dim);
    for (int k = 0; k < art.inverse.dim; ++k) {
      const std::string p = "inv" + std::to_string(k) + "_";
      art.inverse.bases[k].modes = load_payload(dir, manifest, p + "modes.bin");
      art.inverse.bases[k].singular_values = load_payload(dir, manifest, p + "sigma.bin").col(0);
      art.inverse.bases[k].n = static_cast<int>(art.inverse.bases[k].modes.cols());
      const Mat alpha = load_payload(dir, manifest, p + "alpha.bin");
      const Json& models = manifest.at("gpr").at(p + "models");
      for (std::size_t i = 0; i < models.size(); ++i)
        art.inverse.gprs[k].push_back(gpr_from_json(models[i], art.samples, alpha.row(i).transpose()));
    }
  }

  if (manifest.contains("surrogate")) {
    const Mat err = load_payload(dir, manifest, "surrogate_targets.bin");
    art.error_surrogate.gpr = gpr_from_json(manifest.at("gpr").at("surrogate"), art.samples, err.col(0));
    art.error_surrogate.n = manifest.at("surrogate").at("n").get<int>();
    art.error_surrogate.n_psi = manifest.at("surrogate").at("n_psi").get<int>();
    art.error_surrogate.lambda = manifest.at("surrogate").at("lambda").get<double>();
    art.error_surrogate.valid = true;
  }

  const Json& t = manifest.at("timings");
  art.timings.snapshots = t.at("snapshots").get<double>();
  art.timings.registration = t.at("registration").get<double>();
  art.timings.transform = t.at("transform").get<double>();
  art.timings.pod = t.at("pod").get<double>();
  art.timings.gpr = t.at("gpr").get<double>();
  art.timings.inverse = t.at("inverse").get<double>();
  art.timings.surrogate = t.at("surrogate").get<double>();
  art.timings.total = t.at("total").get<double>();
  art.timings.mean_hf_solve = t.at("mean_hf_solve").get<double>();
  const Json& inv = manifest.at("inversion");
  art.inversion_stats.worst_residual = inv.at("worst_residual").get<double>();
  art.inversion_stats.n_unconverged = inv.at("n_unconverged").get<long>();
  art.inversion_stats.n_points = inv.at("n_points").get<long>();
  return art;
}

// ---------------------------------------------------------------------------
// Snapshot set import/export: one matrix per solution component (row = DoF,
// column = sample) plus a JSON sidecar with the grid and sample metadata.
// ---------------------------------------------------------------------------

inline void save_snapshot_set(const fs::path& dir, const SnapshotSet& snaps, const TestCase& tc,
                              bool csv = false) {
  fs::create_directories(dir);
  Json sidecar;
  sidecar["test"] = test_case_to_json(tc);
  sidecar["format"] = csv ? "csv" : "bin";
  sidecar["n_samples"] = snaps.n_samples();
  sidecar["n_dofs"] = (snaps.n_components() > 0) ? snaps.components[0].rows() : 0;
  sidecar["n_components"] = snaps.n_components();
  sidecar["samples"] = Json::array();
  for (long s = 0; s < snaps.samples.rows(); ++s) {
    Json row = Json::array();
    for (int d = 0; d < snaps.samples.cols(); ++d) row.push_back(snaps.samples(s, d));
    sidecar["samples"].push_back(row);
  }
  for (int c = 0; c < snaps.n_components(); ++c) {
    const std::string name = "snapshots_c" + std::to_string(c) + (csv ? ".csv" : ".bin");
    if (csv)
      write_matrix_csv(dir / name, snaps.components[c]);
    else
      write_matrix_bin(dir / name, snaps.components[c]);
  }
  std::ofstream out(dir / "snapshots.json");
  out << sidecar.dump(2) << "\n";
}

struct ImportedSnapshots {
  SnapshotSet snaps;
  TestCase test;
};

inline ImportedSnapshots load_snapshot_set(const fs::path& dir) {
  std::ifstream in(dir / "snapshots.json");
  if (!in) throw ConfigError("cannot read snapshot sidecar in " + dir.string());
  Json sidecar;
  in >> sidecar;
  ImportedSnapshots out;
  out.test = test_case_from_json(sidecar.at("test"));
  const bool csv = sidecar.at("format").get<std::string>() == "csv";
  const long m = sidecar.at("n_samples").get<long>();
  const long n_dofs = sidecar.at("n_dofs").get<long>();
  const int n_comp = sidecar.at("n_components").get<int>();
  out.snaps.samples.resize(m, out.test.n_params());
  const auto& rows = sidecar.at("samples");
  for (long s = 0; s < m; ++s)
    for (int d = 0; d < out.test.n_params(); ++d) out.snaps.samples(s, d) = rows[s][d].get<double>();
  for (int c = 0; c < n_comp; ++c) {
    const std::string name = "snapshots_c" + std::to_string(c) + (csv ? ".csv" : ".bin");
    Mat data = csv ? read_matrix_csv(dir / name) : read_matrix_bin(dir / name, n_dofs, m);
    if (data.rows() != n_dofs || data.cols() != m)
      throw ConfigError("snapshot matrix shape mismatch in " + name);
    out.snaps.components.push_back(std::move(data));
  }
  out.snaps.solve_seconds.assign(m, 0.0);
  return out;
}

}  // namespace tsmor
