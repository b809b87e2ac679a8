#include "tsmor/config.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace tsmor;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TSMOR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("tsmor_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_tiny_config(const fs::path& dir, bool identity = false, std::uint64_t seed = 5) {
  Json cfg = {
      {"test", "wave1d"},
      {"grid", {{"nx", 50}}},
      {"samples", {{"tensor", {4, 3}}}},
      {"n", 3},
      {"n_psi", 3},
      {"max_M", 3},
      {"gpr_restarts", 2},
      {"workers", 2},
      {"seed", seed},
      {"test_set_size", 8},
      {"n_grid", {1, 2, 3}},
      {"npsi_grid", {1, 3}},
      {"out_dir", (dir / "out").string()},
  };
  if (identity) cfg["mode"] = "identity";
  const fs::path path = dir / "config.json";
  std::ofstream out(path);
  out << cfg.dump(2);
  return path;
}

Json read_manifest(const fs::path& bundle) {
  std::ifstream in(bundle / "manifest.json");
  REQUIRE(in.good());
  Json j;
  in >> j;
  return j;
}

long count_lines(const fs::path& file) {
  std::ifstream in(file);
  long n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("cli offline builds a bundle and reruns reproduce the fingerprint") {
  const fs::path dir = fresh_dir("offline");
  const fs::path cfg = write_tiny_config(dir);
  REQUIRE(run_cli("offline --config " + cfg.string()) == 0);
  const fs::path bundle = dir / "out" / "bundle";
  REQUIRE(fs::exists(bundle / "manifest.json"));
  const Json manifest = read_manifest(bundle);
  CHECK(manifest.at("mode") == "tsmor");
  CHECK(manifest.at("m_tr").get<long>() == 12);
  CHECK(manifest.at("registration").at("order").get<int>() >= 1);

  // same seed, fresh output directory: identical payload fingerprints
  const fs::path dir2 = fresh_dir("offline_rerun");
  const fs::path cfg2 = write_tiny_config(dir2);
  REQUIRE(run_cli("offline --config " + cfg2.string()) == 0);
  const Json manifest2 = read_manifest(dir2 / "out" / "bundle");
  CHECK(manifest.at("bundle_fingerprint") == manifest2.at("bundle_fingerprint"));
}

TEST_CASE("cli offline in identity mode omits the registration payload") {
  const fs::path dir = fresh_dir("identity");
  const fs::path cfg = write_tiny_config(dir, true);
  REQUIRE(run_cli("offline --config " + cfg.string()) == 0);
  const Json manifest = read_manifest(dir / "out" / "bundle");
  CHECK(manifest.at("mode") == "identity");
  CHECK_FALSE(manifest.contains("registration"));
  CHECK_FALSE(fs::exists(dir / "out" / "bundle" / "reg_coeffs.bin"));
}

TEST_CASE("cli online: queries, dumps and error paths") {
  const fs::path dir = fresh_dir("online");
  const fs::path cfg = write_tiny_config(dir);
  REQUIRE(run_cli("offline --config " + cfg.string()) == 0);
  const std::string bundle = (dir / "out" / "bundle").string();

  // single query at the reference parameter with field dumps
  const Json manifest = read_manifest(dir / "out" / "bundle");
  const long ref = manifest.at("ref_index").get<long>();
  const Mat samples = read_matrix_bin(dir / "out" / "bundle" / "samples.bin", 12, 2);
  std::ostringstream z;
  z << samples(ref, 0) << "," << samples(ref, 1);
  const fs::path qdir = dir / "q1";
  REQUIRE(run_cli("online --bundle " + bundle + " --z " + z.str() + " --out " + qdir.string() +
                  " --dump-fields") == 0);
  CHECK(fs::exists(qdir / "online_results.csv"));
  CHECK(fs::exists(qdir / "field_q0_c0.csv"));
  CHECK(fs::exists(qdir / "field_q0_c1.csv"));
  CHECK(count_lines(qdir / "field_q0_c0.csv") == 50);

  // a list of queries produces one row each plus the header
  Mat list(5, 2);
  for (int i = 0; i < 5; ++i) {
    list(i, 0) = 0.1 + 0.1 * i;
    list(i, 1) = 1.0 + 0.1 * i;
  }
  write_matrix_csv(dir / "queries.csv", list);
  const fs::path qdir2 = dir / "q2";
  REQUIRE(run_cli("online --bundle " + bundle + " --z-file " + (dir / "queries.csv").string() +
                  " --out " + qdir2.string()) == 0);
  CHECK(count_lines(qdir2 / "online_results.csv") == 6);
  {
    std::ifstream in(qdir2 / "online_results.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.find("predicted_error") != std::string::npos);
  }

  // malformed and out-of-box queries exit with the config-error code
  CHECK(run_cli("online --bundle " + bundle + " --z foo,bar --out " + (dir / "q3").string()) == 2);
  CHECK(run_cli("online --bundle " + bundle + " --z 0.1 --out " + (dir / "q4").string()) == 2);
  CHECK(run_cli("online --bundle " + bundle + " --z 0.1,5.0 --out " + (dir / "q5").string()) == 2);
  // missing required flags is a usage error
  CHECK(run_cli("online --bundle " + bundle) != 0);
}

TEST_CASE("cli benchmark emits the documented tables") {
  const fs::path dir = fresh_dir("benchmark");
  const fs::path cfg = write_tiny_config(dir);
  REQUIRE(run_cli("benchmark --config " + cfg.string()) == 0);
  const fs::path out = dir / "out";

  // 3 x 2 sweep plus the header
  CHECK(count_lines(out / "ea_table.csv") == 7);
  CHECK(count_lines(out / "sproj.csv") == 4);
  CHECK(count_lines(out / "metrics.csv") == 9);  // 8 test samples + header

  std::ifstream sj(out / "summary.json");
  REQUIRE(sj.good());
  Json summary;
  sj >> summary;
  CHECK(summary.contains("average_error_tsmor"));
  CHECK(summary.contains("average_error_sproj"));
  CHECK(summary.contains("speedup"));
  CHECK(summary.at("speedup").get<double>() > 0.0);
}

TEST_CASE("cli rejects bad configs with exit code 2") {
  const fs::path dir = fresh_dir("badcfg");
  std::ofstream out(dir / "bad.json");
  out << "{ not json";
  out.close();
  CHECK(run_cli("offline --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("offline --config " + (dir / "missing.json").string()) == 2);
}
