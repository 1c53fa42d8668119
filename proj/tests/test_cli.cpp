#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "kresling/io.hpp"

using namespace kresling;
namespace fs = std::filesystem;

namespace {

fs::path workdir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "kresling_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  const std::string cmd = std::string(KRESLING_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json manifest(const fs::path& dir) {
  std::ifstream f(dir / "manifest.json");
  return nlohmann::json::parse(f);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("bands reports the gap edges") {
  const fs::path d = workdir("bands");
  REQUIRE(run("bands --out " + d.string()) == 0);
  const Table t = read_table((d / "bands.csv").string());
  REQUIRE(t.header.size() == 5);
  const double two_pi = 2 * M_PI;
  const double lower = t.data.col(t.column("omega2")).maxCoeff() / two_pi;
  const double upper = t.data.col(t.column("omega3")).minCoeff() / two_pi;
  CHECK(lower == doctest::Approx(20.0).epsilon(0.05));
  CHECK(upper == doctest::Approx(198.0).epsilon(0.05));
  CHECK(fs::exists(d / "bands.svg"));
  const auto m = manifest(d);
  CHECK(m["status"] == 0);
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  CHECK(m.contains("versions"));
  CHECK(fs::exists(d / "config.ini"));
}

TEST_CASE("manifest config reproduces the run") {
  const fs::path a = workdir("zak_a"), b = workdir("zak_b");
  REQUIRE(run("zak --out " + a.string()) == 0);
  REQUIRE(run("zak --config " + (a / "config.ini").string() + " --out " + b.string()) == 0);
  CHECK(manifest(a)["config_hash"] == manifest(b)["config_hash"]);
  const Table za = read_table((a / "zak.csv").string()), zb = read_table((b / "zak.csv").string());
  CHECK((za.data.array() == zb.data.array()).all());
  CHECK(std::abs(za.data(0, 3) - 1.0) < 0.01);
  CHECK(std::abs(za.data(1, 3) - 1.0) < 0.01);
}

TEST_CASE("predict on the single cell meets the accuracy target") {
  const fs::path d = workdir("predict");
  REQUIRE(run("predict --out " + d.string() + " --format csv") == 0);
  const Table e = read_table((d / "errors.csv").string());
  REQUIRE(e.data.rows() == 1);
  CHECK(e.data(0, e.column("gidmd_u")) <= 0.01);
  CHECK(e.data(0, e.column("gidmd_phi")) <= 0.03);
  CHECK(fs::exists(d / "prediction_5hz.csv"));
  CHECK(fs::exists(d / "5hz_K.csv"));
  CHECK(fs::exists(d / "5hz_K.csv.json"));
  CHECK_FALSE(fs::exists(d / "prediction_5hz.svg"));
}

TEST_CASE("ingest converts mm/deg records to SI") {
  const fs::path d = workdir("ingest");
  const fs::path in = d / "capture.csv";
  {
    std::ofstream f(in);
    f << "t,u1,phi1\n";
    for (int i = 0; i < 240; ++i)
      f << i / 240.0 << ',' << 1.5 * std::sin(0.1 * i) << ',' << 20.0 * std::cos(0.05 * i) << '\n';
  }
  REQUIRE(run("ingest --input " + in.string() + " --length-unit mm --angle-unit deg --out " + (d / "out").string()) == 0);
  const Table t = read_table((d / "out" / "trajectory.csv").string());
  const Table src = read_table(in.string());
  for (int i = 0; i < 240; ++i) {
    CHECK(t.data(i, t.column("u1")) == doctest::Approx(src.data(i, 1) * 1e-3).epsilon(1e-14));
    CHECK(t.data(i, t.column("phi1")) == doctest::Approx(src.data(i, 2) * M_PI / 180).epsilon(1e-14));
  }
  write_trajectory((d / "back.csv").string(), ingest(t), Units::parse("mm", "deg"));
  const Table back = read_table((d / "back.csv").string());
  for (int i = 0; i < 240; ++i) {
    CHECK(back.data(i, back.column("u1")) == doctest::Approx(src.data(i, 1)).epsilon(1e-14));
    CHECK(back.data(i, back.column("phi1")) == doctest::Approx(src.data(i, 2)).epsilon(1e-14));
  }
}

TEST_CASE("configuration errors exit with status 2 and a record") {
  const fs::path d = workdir("bad");
  {
    std::ofstream f(d / "bad.ini");
    f << "[drive]\nfreq = -3\n";
  }
  CHECK(run("simulate --config " + (d / "bad.ini").string() + " --out " + (d / "out").string()) == 2);
  const auto m = manifest(d / "out");
  CHECK(m["status"] == 2);
  CHECK(m["error"]["category"] == "ConfigError");
  CHECK(run("bands --preset nope --out " + (d / "out2").string()) == 2);
  CHECK(run("bands --set drive.freqq=3 --out " + (d / "out3").string()) == 2);
  CHECK(run("nonsense") == 2);
}

TEST_CASE("sweeps write partial results and flag divergence") {
  const fs::path d = workdir("sweep");
  const int rc = run("sweep-freq --preset dual --set drive.u_amp=0.004 --set sweep.freqs=5,9 --set integrator.t_end=6 "
                     "--set integrator.t_settle=2 --out " + d.string());
  CHECK((rc == 0 || rc == 3 || rc == 4));
  const Table e = read_table((d / "errors.csv").string());
  CHECK(e.data.rows() == 2);
  CHECK(fs::exists(d / "sigma.csv"));
  CHECK(manifest(d)["status"] == rc);
}

}
