#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "det3d/fmap_io.hpp"
#include "det3d/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string output;
};

CliResult run(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = std::string(DET3D_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, det3d::io::read_text(log)};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("det3d_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }
  CliResult cli(const std::string& args) const { return run(args, dir_); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthCameraAirManifestHas48SamplesAndIsReproducible) {
  const std::string flags = " --category camera --super air --seed 7 --repeats 1 --stride 8 --no-3d";
  ASSERT_EQ(cli("synth" + flags + " --out " + path("a")).code, 0);
  ASSERT_EQ(cli("synth" + flags + " --jobs 3 --out " + path("b")).code, 0);
  const auto a = det3d::io::read_text(path("a/manifest.json"));
  EXPECT_EQ(a, det3d::io::read_text(path("b/manifest.json")));
  EXPECT_EQ(nlohmann::json::parse(a)["samples"].size(), 48u);
  EXPECT_EQ(det3d::io::read_text(path("a/scenes/000047.json")),
            det3d::io::read_text(path("b/scenes/000047.json")));
  EXPECT_FALSE(fs::exists(path("a/manifest.json.tmp")));
}

TEST_F(Cli, SeedFallsBackToEnvironment) {
  const std::string flags = " --category weather --stride 8 --no-3d --out ";
  ASSERT_EQ(cli("synth --seed 11" + flags + path("a")).code, 0);
  ASSERT_EQ(run("synth" + flags + path("b"), dir_).code, 0);
  ::setenv("DET3D_SEED", "11", 1);
  ASSERT_EQ(cli("synth" + flags + path("c")).code, 0);
  ::unsetenv("DET3D_SEED");
  const auto a = det3d::io::read_text(path("a/manifest.json"));
  EXPECT_EQ(a, det3d::io::read_text(path("c/manifest.json")));
  EXPECT_NE(a, det3d::io::read_text(path("b/manifest.json")));
}

TEST_F(Cli, ClosedLoopSynthDecodeEval) {
  ASSERT_EQ(cli("synth --category weather,sensor --super all --objects 2 --seed 3 --out " + path("ds")).code, 0);
  const auto dec = cli("decode --dataset " + path("ds") + " --jobs 2 --out " + path("det.json"));
  ASSERT_EQ(dec.code, 0) << dec.output;
  const auto ev = cli("eval --pred " + path("det.json") + " --truth " + path("ds") + " --json");
  ASSERT_EQ(ev.code, 0) << ev.output;
  const auto report = nlohmann::json::parse(ev.output);
  EXPECT_EQ(report["map"], 1.0);
  EXPECT_EQ(report["breakdown"].size(), 4u);
  EXPECT_NEAR(report["sie"].get<double>(), 0.0, 1e-9);
  const auto& counts = report["confusion"]["counts"];
  for (std::size_t t = 0; t < counts.size(); ++t)
    for (std::size_t d = 0; d < counts.size(); ++d)
      if (t != d) EXPECT_EQ(counts[t][d], 0);

  const auto table = cli("eval --pred " + path("det.json") + " --truth " + path("ds"));
  EXPECT_EQ(table.code, 0);
  EXPECT_NE(table.output.find("mAP"), std::string::npos);
  EXPECT_NE(table.output.find("Weather"), std::string::npos);
}

TEST_F(Cli, EmptyPredictionsScoreZero) {
  ASSERT_EQ(cli("synth --category weather --stride 8 --no-3d --out " + path("ds")).code, 0);
  nlohmann::ordered_json j;
  j["frames"] = nlohmann::ordered_json::array();
  for (const char* id : {"000000", "000001", "000002"})
    j["frames"].push_back({{"frame", id}, {"detections", nlohmann::ordered_json::array()}});
  det3d::io::write_atomic(path("empty.json"), j.dump());
  const auto ev = cli("eval --pred " + path("empty.json") + " --truth " + path("ds") + " --json");
  ASSERT_EQ(ev.code, 0) << ev.output;
  const auto report = nlohmann::json::parse(ev.output);
  EXPECT_EQ(report["map"], 0.0);
  const auto& counts = report["confusion"]["counts"];
  std::size_t background = 0;
  for (std::size_t t = 0; t + 1 < counts.size(); ++t) background += counts[t][counts.size() - 1].get<std::size_t>();
  EXPECT_EQ(background, 3u);
}

TEST_F(Cli, FrameMismatchListsMissingIds) {
  ASSERT_EQ(cli("synth --category weather --stride 8 --no-3d --out " + path("ds")).code, 0);
  det3d::io::write_atomic(path("p.json"), R"({"frames":[{"frame":"000001","detections":[]}]})");
  const auto ev = cli("eval --pred " + path("p.json") + " --truth " + path("ds"));
  EXPECT_EQ(ev.code, 3);
  EXPECT_NE(ev.output.find("000000"), std::string::npos) << ev.output;
  EXPECT_NE(ev.output.find("000002"), std::string::npos) << ev.output;
}

TEST_F(Cli, PrecomputedPerClassAp) {
  det3d::io::write_atomic(path("ap.json"), R"({"Car":87.846443,"Pedestrian":60.852219,"Cyclist":48.693352})");
  const auto ev = cli("eval --per-class-ap " + path("ap.json"));
  ASSERT_EQ(ev.code, 0);
  EXPECT_NE(ev.output.find("65.797338"), std::string::npos) << ev.output;
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("decode --bundle x --score-threshold 1.1").code, 2);
  EXPECT_EQ(cli("synth --category fog --out " + path("x")).code, 2);
  EXPECT_EQ(cli("--help").code, 0);

  std::ofstream(path("blocker")) << "file";
  const auto unwritable = cli("synth --category weather --stride 8 --out " + path("blocker/sub"));
  EXPECT_EQ(unwritable.code, 2);
  EXPECT_NE(unwritable.output.find("blocker"), std::string::npos);

  ASSERT_EQ(cli("synth --category sensor --super air --stride 8 --no-3d --out " + path("ds")).code, 0);
  const fs::path victim = path("ds/bundles/000000/heatmap_ct.fmap");
  fs::resize_file(victim, 30);
  const auto truncated = cli("decode --bundle " + path("ds/bundles/000000") + " --stride 8");
  EXPECT_EQ(truncated.code, 3);
  EXPECT_NE(truncated.output.find("offset"), std::string::npos) << truncated.output;
}

TEST_F(Cli, DecodeSingleBundleWithCalib) {
  ASSERT_EQ(cli("synth --category sensor --stride 4 --seed 5 --out " + path("ds")).code, 0);
  ASSERT_EQ(cli("convert --dataset " + path("ds") + " --out " + path("kitti")).code, 0);
  ASSERT_TRUE(fs::exists(path("kitti/label_2/000001.txt")));
  const auto dec = cli("decode --bundle " + path("ds/bundles/000001") + " --stride 4 --calib " +
                         path("kitti/calib/000001.txt"));
  ASSERT_EQ(dec.code, 0) << dec.output;
  const auto j = nlohmann::json::parse(dec.output);
  ASSERT_EQ(j["frames"][0]["frame"], "000001");
  ASSERT_EQ(j["frames"][0]["detections"].size(), 1u);
  EXPECT_FALSE(j["frames"][0]["detections"][0]["box3d"].is_null());
}

TEST_F(Cli, KittiImportExportRoundTrip) {
  ASSERT_EQ(cli("synth --category weather --objects 3 --stride 8 --no-3d --out " + path("ds")).code, 0);
  ASSERT_EQ(cli("convert --scene " + path("ds/scenes/000002.json") + " --out " + path("k1")).code, 0);
  ASSERT_EQ(cli("convert --kitti-label " + path("k1/label_2/000002.txt") + " --calib " +
                  path("k1/calib/000002.txt") + " --id 000002 --out " + path("back.json")).code, 0);
  ASSERT_EQ(cli("convert --scene " + path("back.json") + " --out " + path("k2")).code, 0);
  EXPECT_EQ(det3d::io::read_text(path("k1/label_2/000002.txt")),
            det3d::io::read_text(path("k2/label_2/000002.txt")));
  EXPECT_EQ(det3d::io::read_text(path("k1/calib/000002.txt")),
            det3d::io::read_text(path("k2/calib/000002.txt")));
}

TEST_F(Cli, PoolCommand) {
  det3d::FeatureMap m(1, 3, 1, std::vector<float>{1, 5, 2});
  det3d::fmap::write_file(path("in.fmap"), m);
  ASSERT_EQ(cli("pool --in " + path("in.fmap") + " --op tl --out " + path("out.fmap")).code, 0);
  const auto out = det3d::fmap::read_file(path("out.fmap"));
  EXPECT_EQ(out(0, 0, 0), 10.f);
  EXPECT_EQ(out(0, 2, 0), 4.f);
}
