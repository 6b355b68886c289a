#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include <twinmom/data.hpp>

using namespace twinmom;
namespace fs = std::filesystem;

namespace {

JointHistogram sample_hist() {
  JointHistogram h;
  h.frames = 100;
  h.counts = {{40, 10, 1}, {20, 9, 0}, {5, 3, 2}};
  return h;
}

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("twinmom_data_" + name)).string();
}

}  // namespace

TEST_CASE("histogram CSV serialization round-trips byte for byte") {
  JointHistogram h = sample_hist();
  std::string csv = histogram_to_csv(h);
  JointHistogram back = histogram_from_csv(csv);
  CHECK(back.frames == h.frames);
  REQUIRE(back.counts == h.counts);
  CHECK(histogram_to_csv(back) == csv);  // parse-then-print is the identity
}

TEST_CASE("histogram CSV tolerates blank lines and CR line endings") {
  std::string csv = "frames,10\r\n1,2\r\n\r\n3,4\r\n";
  JointHistogram h = histogram_from_csv(csv);
  CHECK(h.frames == 10);
  REQUIRE(h.rows() == 2);
  CHECK(h.counts[0] == std::vector<long long>{1, 2});
  CHECK(h.counts[1] == std::vector<long long>{3, 4});
}

TEST_CASE("histogram JSON round trip preserves counts and frames") {
  JointHistogram h = sample_hist();
  JointHistogram back = histogram_from_json(histogram_to_json(h));
  CHECK(back.frames == h.frames);
  CHECK(back.counts == h.counts);
}

TEST_CASE("histogram file IO picks format from the extension") {
  JointHistogram h = sample_hist();
  for (const char* name : {"hist.csv", "hist.json"}) {
    std::string path = tmp_path(name);
    save_histogram(path, h);
    JointHistogram back = load_histogram(path);
    CHECK(back.frames == h.frames);
    CHECK(back.counts == h.counts);
    fs::remove(path);
  }
}

TEST_CASE("histogram validation rejects malformed inputs") {
  JointHistogram h = sample_hist();
  h.frames = 0;
  CHECK_THROWS_AS(h.validate(), ValidationError);

  h = sample_hist();
  h.counts.clear();
  CHECK_THROWS_AS(h.validate(), ValidationError);

  h = sample_hist();
  h.counts[1].pop_back();  // ragged
  CHECK_THROWS_AS(h.validate(), ValidationError);

  h = sample_hist();
  h.counts[0][0] = -1;
  CHECK_THROWS_AS(h.validate(), ValidationError);

  h = sample_hist();
  h.frames = 10;  // fewer frames than recorded events
  CHECK_THROWS_AS(h.validate(), ValidationError);
}

TEST_CASE("histogram CSV parser rejects bad headers and fields") {
  CHECK_THROWS_AS(histogram_from_csv(""), ValidationError);
  CHECK_THROWS_AS(histogram_from_csv("counts,10\n1,2\n"), ValidationError);
  CHECK_THROWS_AS(histogram_from_csv("frames\n1,2\n"), ValidationError);
  CHECK_THROWS_AS(histogram_from_csv("frames,10\n1,x\n"), ValidationError);
  CHECK_THROWS_AS(histogram_from_csv("frames,10\n1,,2\n"), ValidationError);
}

TEST_CASE("histogram to distribution divides by the event total and reports the deficit") {
  JointHistogram h = sample_hist();  // 90 events over 100 frames
  double deficit = -1.0;
  JointDistribution d = histogram_to_distribution(h, &deficit);
  CHECK(d.kind == DistKind::photocount);
  CHECK(deficit == Catch::Approx(0.10).epsilon(1e-12));
  CHECK(d.probs(0, 0) == Catch::Approx(40.0 / 90.0).epsilon(1e-15));
  CHECK(d.probs.sum() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("distribution JSON round trip is exact") {
  JointDistribution d;
  d.kind = DistKind::photon_number;
  d.probs = Matrix(2, 3);
  d.probs(0, 0) = 0.125;
  d.probs(0, 1) = 0.25;
  d.probs(0, 2) = 1.0 / 3.0;
  d.probs(1, 0) = 0.1;
  d.probs(1, 1) = 0.05;
  d.probs(1, 2) = 1.0 - (0.125 + 0.25 + 1.0 / 3.0 + 0.1 + 0.05);
  std::string path = tmp_path("dist.json");
  save_distribution(path, d);
  JointDistribution back = load_distribution(path);
  fs::remove(path);
  CHECK(back.kind == d.kind);
  REQUIRE(back.probs.rows() == d.probs.rows());
  REQUIRE(back.probs.cols() == d.probs.cols());
  for (std::size_t r = 0; r < d.probs.rows(); ++r)
    for (std::size_t c = 0; c < d.probs.cols(); ++c)
      CHECK(back.probs(r, c) == d.probs(r, c));  // bit-exact through the JSON text
}

TEST_CASE("distribution validation enforces normalization and non-negativity") {
  JointDistribution d;
  d.probs = Matrix(1, 2);
  d.probs(0, 0) = 0.7;
  d.probs(0, 1) = 0.4;
  CHECK_THROWS_AS(d.validate(), ValidationError);  // sums to 1.1
  d.probs(0, 1) = 0.3;
  CHECK_NOTHROW(d.validate());
  d.probs(0, 0) = -0.1;
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d.probs = Matrix();
  CHECK_THROWS_AS(d.validate(), ValidationError);
}

TEST_CASE("renormalize clamps round-off negatives and restores unit sum") {
  JointDistribution d;
  d.probs = Matrix(1, 3);
  d.probs(0, 0) = 0.5;
  d.probs(0, 1) = -1e-14;
  d.probs(0, 2) = 0.6;
  d.renormalize();
  CHECK(d.probs(0, 1) == 0.0);
  CHECK(d.probs.sum() == Catch::Approx(1.0).margin(1e-15));

  JointDistribution z;
  z.probs = Matrix(1, 1);
  z.probs(0, 0) = 0.0;
  CHECK_THROWS_AS(z.renormalize(), ValidationError);
}

TEST_CASE("distribution kind names round trip and unknown names are rejected") {
  CHECK(dist_kind_from_string(to_string(DistKind::photon_number)) == DistKind::photon_number);
  CHECK(dist_kind_from_string(to_string(DistKind::photocount)) == DistKind::photocount);
  CHECK_THROWS_AS(dist_kind_from_string("intensity"), ValidationError);
}

TEST_CASE("detector and source parameter JSON round trips validate on load") {
  DetectorModel det{6528, 0.23, 6.1e-6};
  DetectorModel dback = detector_from_json(detector_to_json(det));
  CHECK(dback.pixels == det.pixels);
  CHECK(dback.efficiency == det.efficiency);
  CHECK(dback.dark_mean_per_pixel == det.dark_mean_per_pixel);

  TwinBeamModel tb{270.0, 0.032, 0.01, 7.6, 0.026, 5.3};
  TwinBeamModel tback = twinbeam_from_json(twinbeam_to_json(tb));
  CHECK(tback.M_p == tb.M_p);
  CHECK(tback.B_p == tb.B_p);
  CHECK(tback.mean_pairs() == Catch::Approx(8.64).epsilon(1e-12));

  nlohmann::json bad = detector_to_json(det);
  bad["efficiency"] = 1.5;
  CHECK_THROWS_AS(detector_from_json(bad), ValidationError);
  bad = twinbeam_to_json(tb);
  bad["M_p"] = 0.0;
  CHECK_THROWS_AS(twinbeam_from_json(bad), ValidationError);
  bad = twinbeam_to_json(tb);
  bad.erase("B_i");
  CHECK_THROWS_AS(twinbeam_from_json(bad), ValidationError);
}

TEST_CASE("model validation bounds detector and source parameters") {
  DetectorModel det{0, 0.5, 0.0};
  CHECK_THROWS_AS(det.validate(), ValidationError);
  det = {100, -0.1, 0.0};
  CHECK_THROWS_AS(det.validate(), ValidationError);
  det = {100, 0.5, 1.0};
  CHECK_THROWS_AS(det.validate(), ValidationError);
  det = {100, 1.0, 0.999};
  CHECK_NOTHROW(det.validate());

  TwinBeamModel tb;
  tb.B_p = -0.5;
  CHECK_THROWS_AS(tb.validate(), ValidationError);
  tb = TwinBeamModel{};
  CHECK_NOTHROW(tb.validate());  // vacuum source is a valid degenerate case
}

TEST_CASE("missing files raise a validation error") {
  CHECK_THROWS_AS(load_histogram(tmp_path("absent.csv")), ValidationError);
  CHECK_THROWS_AS(load_distribution(tmp_path("absent.json")), ValidationError);
}
