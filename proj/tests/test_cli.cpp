#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <twinmom/twinmom.hpp>

using namespace twinmom;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

std::string bin_path() {
  const char* p = std::getenv("TWINMOM_BIN");
  REQUIRE(p != nullptr);
  return p;
}

std::string scenario_dir() {
  const char* p = std::getenv("TWINMOM_SCENARIOS");
  REQUIRE(p != nullptr);
  return p;
}

std::string work_dir() {
  static std::string dir = [] {
    std::string d = "/tmp/twinmom_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run(const std::string& args) {
  static int counter = 0;
  std::string outfile = work_dir() + "/run_" + std::to_string(counter++) + ".log";
  std::string cmd = bin_path() + " " + args + " > " + outfile + " 2>&1";
  int status = std::system(cmd.c_str());
  RunResult r;
  if (status >= 0 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.out = detail::read_file(outfile);
  return r;
}

/// Small, fast end-to-end setup shared across the test cases below.
struct Artifacts {
  std::string scenario = work_dir() + "/bench_scenario.json";
  std::string hist = work_dir() + "/bench_hist.csv";
  std::string photocount = work_dir() + "/bench_counts.json";
  std::string report = work_dir() + "/bench_report.json";
};

const Artifacts& artifacts() {
  static Artifacts a = [] {
    Artifacts art;
    Scenario sc;
    sc.source = TwinBeamModel{3.0, 0.4, 1.0, 0.05, 1.0, 0.04};
    sc.det_s = DetectorModel{200, 0.75, 1e-4};
    sc.det_i = DetectorModel{200, 0.70, 1e-4};
    sc.frames = 30000;
    sc.seed = 5;
    detail::write_file(art.scenario, scenario_to_json(sc).dump(2) + "\n");

    RunResult sim = run("simulate " + art.scenario + " -o " + art.hist +
                        " --out-photocount " + art.photocount);
    REQUIRE(sim.code == 0);
    RunResult an = run("analyze " + art.hist + " -o " + art.report + " --seed 9 --bootstrap 40");
    REQUIRE(an.code == 0);
    return art;
  }();
  return a;
}

}  // namespace

TEST_CASE("catalog listing prints every criterion plus the element-template row") {
  RunResult r = run("criteria list");
  CHECK(r.code == 0);
  CHECK(r.out.find("155 entries") != std::string::npos);
  CHECK(r.out.find("E_001") != std::string::npos);
  CHECK(r.out.find("F_<k>_<l>_1") != std::string::npos);

  RunResult n = run("criteria list --family N");
  CHECK(n.code == 0);
  CHECK(n.out.find("6 entries") != std::string::npos);
  CHECK(n.out.find("photon") != std::string::npos);

  RunResult f = run("criteria list --family F");
  CHECK(f.code == 0);
  CHECK(f.out.find("1 entries") != std::string::npos);
}

TEST_CASE("usage errors exit with the documented code") {
  CHECK(run("").code == 2);
  CHECK(run("no-such-command").code == 2);
  CHECK(run("--k-order 9 criteria list").code == 2);
  CHECK(run("analyze").code == 2);  // missing required arguments
  CHECK(run("simulate /nonexistent/scenario.json -o /tmp/x.csv").code == 2);
}

TEST_CASE("simulation is reproducible and seed-sensitive") {
  const Artifacts& art = artifacts();
  std::string h1 = work_dir() + "/det1.csv";
  std::string h2 = work_dir() + "/det2.csv";
  std::string h3 = work_dir() + "/det3.csv";
  CHECK(run("--seed 123 simulate " + art.scenario + " -o " + h1).code == 0);
  CHECK(run("--seed 123 simulate " + art.scenario + " -o " + h2).code == 0);
  CHECK(run("--seed 124 simulate " + art.scenario + " -o " + h3).code == 0);
  CHECK(detail::read_file(h1) == detail::read_file(h2));
  CHECK(detail::read_file(h1) != detail::read_file(h3));

  // Provenance sidecar records the effective settings.
  CHECK(fs::exists(h1 + ".provenance.json"));
  nlohmann::json prov = nlohmann::json::parse(detail::read_file(h1 + ".provenance.json"));
  CHECK(prov["scenario"]["seed"] == 123);
}

TEST_CASE("frame-count override lands in the histogram header") {
  const Artifacts& art = artifacts();
  std::string h = work_dir() + "/short.csv";
  CHECK(run("simulate " + art.scenario + " -o " + h + " --frames 500").code == 0);
  std::string text = detail::read_file(h);
  CHECK(text.rfind("frames,500", 0) == 0);
  JointHistogram loaded = load_histogram(h);
  CHECK(loaded.frames == 500);
  CHECK(loaded.total() == 500);
}

TEST_CASE("packaged scenario simulates end to end") {
  std::string h = work_dir() + "/packaged.csv";
  RunResult r = run("simulate " + scenario_dir() + "/paper_sectionV.json -o " + h +
                    " --frames 2000");
  CHECK(r.code == 0);
  JointHistogram loaded = load_histogram(h);
  CHECK(loaded.frames == 2000);
  CHECK(loaded.rows() > 5);  // a few-photocount-wide joint distribution
}

TEST_CASE("analysis report carries criteria, violations, and uncertainties") {
  const Artifacts& art = artifacts();
  nlohmann::json rep = nlohmann::json::parse(detail::read_file(art.report));
  REQUIRE(rep.contains("criteria"));
  REQUIRE(!rep["criteria"].empty());

  bool found_e001 = false;
  for (const auto& c : rep["criteria"]) {
    REQUIRE(c.contains("id"));
    REQUIRE(c.contains("value"));
    if (c["id"] == "E_001") {
      found_e001 = true;
      CHECK(c["violated"].get<bool>());
      CHECK(c["value"].get<double>() < 0.0);
      CHECK(c["stderr"].get<double>() > 0.0);
      CHECK(c["significant"].get<bool>());
      REQUIRE(c.contains("ncd"));
      double tau = c["ncd"]["tau"].get<double>();
      CHECK(tau > 0.0);
      CHECK(tau <= 1.0);
    }
  }
  CHECK(found_e001);
  CHECK(rep.contains("provenance"));
}

TEST_CASE("family filter restricts the report") {
  const Artifacts& art = artifacts();
  std::string out = work_dir() + "/efamily.json";
  CHECK(run("analyze " + art.hist + " -o " + out + " --families E --no-f --no-ncd").code == 0);
  nlohmann::json rep = nlohmann::json::parse(detail::read_file(out));
  REQUIRE(!rep["criteria"].empty());
  for (const auto& c : rep["criteria"]) CHECK(c["family"] == "E");
}

TEST_CASE("option validation in the analysis pipeline") {
  const Artifacts& art = artifacts();
  std::string out = work_dir() + "/bad.json";
  CHECK(run("analyze " + art.hist + " -o " + out + " --ordering bogus").code == 2);
  CHECK(run("analyze " + art.hist + " -o " + out + " --pipeline bogus").code == 2);
  // Exact distributions have no sampling noise to bootstrap and no
  // photocount histogram for the EM pipeline.
  CHECK(run("analyze " + art.photocount + " -o " + out + " --bootstrap 10").code == 2);
  CHECK(run("analyze " + art.photocount + " -o " + out + " --pipeline em --scenario " +
            art.scenario)
            .code == 2);
  // Laguerre ordering is accepted.
  CHECK(run("analyze " + art.photocount + " -o " + out + " --ordering laguerre --no-f").code ==
        0);
}

TEST_CASE("EM reconstruction subcommand writes the distribution and metadata") {
  const Artifacts& art = artifacts();
  std::string out = work_dir() + "/recon.json";
  RunResult r = run("reconstruct em " + art.hist + " -o " + out + " --scenario " +
                    art.scenario + " --max-iter 300");
  CHECK(r.code == 0);
  JointDistribution p = load_distribution(out);
  CHECK(p.kind == DistKind::photon_number);
  nlohmann::json meta = nlohmann::json::parse(detail::read_file(out + ".meta.json"));
  CHECK(meta["iterations"].get<long long>() <= 300);
  CHECK(meta["n_max_s"].get<int>() > 0);

  CHECK(run("reconstruct em " + art.hist + " -o " + out).code == 2);  // no detectors given
}

TEST_CASE("calibration subcommand fits a restricted parameter set") {
  const Artifacts& art = artifacts();
  std::string out = work_dir() + "/fit.json";
  RunResult r = run("reconstruct calibrate " + art.hist + " --scenario " + art.scenario +
                    " -o " + out +
                    " --fix eta_s,eta_i,M_p,M_s,B_s,M_i,B_i --starts 1 --max-evals 60");
  CHECK(r.code == 0);
  nlohmann::json fit = nlohmann::json::parse(detail::read_file(out));
  CHECK(fit["twinbeam"]["B_p"].get<double>() > 0.0);
  CHECK(fit["eta_s"].get<double>() == 0.75);
  CHECK(fit["start_residuals"].size() == 1);

  CHECK(run("reconstruct calibrate " + art.hist + " --scenario " + art.scenario + " -o " +
            out + " --fix not_a_param")
            .code == 2);
}

TEST_CASE("report rendering emits per-family series files") {
  const Artifacts& art = artifacts();
  std::string dir = work_dir() + "/series";
  fs::create_directories(dir);
  RunResult r = run("report " + art.report + " --out-dir " + dir + " --prefix t_");
  CHECK(r.code == 0);
  bool have_csv = false, have_svg = false;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") have_csv = true;
    if (e.path().extension() == ".svg") have_svg = true;
  }
  CHECK(have_csv);
  CHECK(have_svg);

  std::string dir2 = work_dir() + "/series_nosvg";
  fs::create_directories(dir2);
  CHECK(run("report " + art.report + " --out-dir " + dir2 + " --no-svg").code == 0);
  for (const auto& e : fs::directory_iterator(dir2)) CHECK(e.path().extension() != ".svg");
}

TEST_CASE("internal consistency suite runs from the command line") {
  RunResult r = run("selftest --tables 25");
  CHECK(r.code == 0);
  CHECK(r.out.find("selftest passed") != std::string::npos);
}
