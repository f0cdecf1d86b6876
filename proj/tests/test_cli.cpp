#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hsa/cli.hpp"
#include "test_support.hpp"

using namespace hsa;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(std::move(args), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const std::string kModel = test::fixture("reference_model.json").string();
const std::string kGeometry = test::fixture("geometry.cfg").string();

void write_trajectory(const std::filesystem::path& p, double rpm, const Eigen::Vector3d& offset = Eigen::Vector3d::Zero(),
                      bool with_lengths = true) {
    const auto geo = default_geometry();
    auto recs = synthesize_trajectory(composite_sweep(geo, 8), test::reference_model(), geo, rpm, {}, 0);
    for (auto& r : recs) {
        r.observed_position += offset;
        if (!with_lengths) r.observed_lengths.reset();
    }
    io::write_file_atomic(p, io::format_trajectory_csv(recs));
}

}  // namespace

TEST(CliFit, BundledFixture) {
    test::TempDir dir;
    const auto r = run({"fit", test::fixture("calibration_grid30.csv").string(), "--geometry", kGeometry, "--out",
                        (dir / "model.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto model = io::load_model(dir / "model.json");
    EXPECT_TRUE(model.circulant);
    EXPECT_TRUE(is_circulant(model.beta0));
    EXPECT_TRUE(std::filesystem::exists(dir / "model.report.json"));
    EXPECT_NE(r.out.find("residual_rms_mm"), std::string::npos);
    EXPECT_NE(r.out.find("beta0_deviation_frobenius"), std::string::npos);
}

TEST(CliFit, MissingFile) {
    test::TempDir dir;
    const auto r = run({"fit", "/nonexistent/cal.csv", "--out", (dir / "m.json").string()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("/nonexistent/cal.csv"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir / "m.json"));
}

TEST(CliFit, DegenerateDataset) {
    test::TempDir dir;
    const auto r = run({"fit", test::fixture("calibration_degenerate.csv").string(), "--out", (dir / "m.json").string()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("ill-posed"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir / "m.json"));
}

TEST(CliFk, UniformInputOnAxis) {
    const auto r = run({"fk", "--model", kModel, "--geometry", kGeometry, "--format", "json", "60", "60", "60", "60"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_LT(std::abs(j["pose"]["x_mm"].get<double>()), 1e-9);
    EXPECT_LT(std::abs(j["pose"]["y_mm"].get<double>()), 1e-9);
    EXPECT_LT(j["pose"]["alpha_deg"].get<double>(), 1e-9);
    EXPECT_EQ(j["pose"]["transform"].size(), 16u);
}

TEST(CliFk, CsvAndErrors) {
    const auto r = run({"fk", "--model", kModel, "90", "0", "30", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(r.out), 2u);
    EXPECT_EQ(r.out.rfind("l_a_mm,", 0), 0u);
    EXPECT_NE(run({"fk", "--model", kModel, "200", "0", "0", "0"}).code, 0);
    EXPECT_NE(run({"fk", "--model", kModel, "0", "0", "0"}).code, 0);
}

TEST(CliFk, Deterministic) {
    const std::vector<std::string> args{"fk", "--model", kModel, "--geometry", kGeometry, "12.5", "170", "33", "0"};
    EXPECT_EQ(run(args).out, run(args).out);
}

TEST(CliWorkspace, RowCounts) {
    test::TempDir dir;
    for (auto [step, rows] : {std::pair{"30", 2401u}, {"90", 81u}, {"180", 16u}}) {
        const auto out = dir / (std::string("ws") + step + ".csv");
        const auto r = run({"workspace", "--model", kModel, "--step-deg", step, "--out", out.string()});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_EQ(count_lines(read_text(out)), rows + 1);  // header
    }
    EXPECT_NE(run({"workspace", "--model", kModel, "--step-deg", "40", "--out", (dir / "bad.csv").string()}).code, 0);
}

TEST(CliGen, CalibrationDeterministicBySeed) {
    test::TempDir dir;
    auto gen = [&](const std::string& name, const std::string& seed) {
        const auto r = run({"gen", "--model", kModel, "--kind", "calibration", "--step-deg", "60", "--noise-sigma", "1.6",
                            "--seed", seed, "--out", (dir / name).string()});
        EXPECT_EQ(r.code, 0) << r.err;
        return read_text(dir / name);
    };
    EXPECT_EQ(gen("a.csv", "3"), gen("b.csv", "3"));
    EXPECT_NE(gen("a.csv", "3"), gen("c.csv", "4"));
    EXPECT_EQ(io::load_calibration_csv(dir / "a.csv").size(), 256u);  // 4 grid values per servo
}

TEST(CliGen, Trajectory) {
    test::TempDir dir;
    const auto r = run({"gen", "--model", kModel, "--kind", "trajectory", "--speed-rpm", "3", "--samples-per-phase", "6",
                        "--out", (dir / "t.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = io::load_trajectory_csv(dir / "t.csv");
    EXPECT_EQ(t.trajectory.speed_rpm, 3.0);
    EXPECT_GT(t.trajectory.records.size(), 10u);
}

TEST(CliEval, SelfConsistentAndOffset) {
    test::TempDir dir;
    write_trajectory(dir / "clean.csv", 1.0);
    auto r = run({"eval", "--model", kModel, "--geometry", kGeometry, (dir / "clean.csv").string(), "--out",
                  (dir / "clean.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rep = nlohmann::json::parse(read_text(dir / "clean.json"));
    // geometry.cfg stores d rounded to 16 digits, so allow roundoff
    EXPECT_LT(rep["position_error_mm"]["max"].get<double>(), 1e-9);
    EXPECT_LT(std::abs(rep["alpha_error_deg"]["mean"].get<double>()), 1e-9);
    EXPECT_LT(std::abs(rep["coupled_length_error_mm"]["pooled"]["max"].get<double>()), 1e-9);
    EXPECT_TRUE(rep["uncoupled_length_error_mm"].is_object());
    EXPECT_EQ(rep["reference_hardware_values"]["position_error_mm"]["mean"].get<double>(), 5.5);
    EXPECT_TRUE(std::filesystem::exists(dir / "clean.records.csv"));

    write_trajectory(dir / "off.csv", 1.0, {3, 4, 0});
    r = run({"eval", "--model", kModel, (dir / "off.csv").string(), "--out", (dir / "off.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    rep = nlohmann::json::parse(read_text(dir / "off.json"));
    EXPECT_NEAR(rep["position_error_mm"]["mean"].get<double>(), 5.0, 1e-9);
    EXPECT_NEAR(rep["position_error_mm"]["std"].get<double>(), 0.0, 1e-9);
    EXPECT_TRUE(rep["uncoupled_length_error_mm"].is_null());  // no rest length without --geometry
}

TEST(CliEval, MissingLengthsMarkedAbsent) {
    test::TempDir dir;
    write_trajectory(dir / "t.csv", 1.0, Eigen::Vector3d::Zero(), false);
    const auto r = run({"eval", "--model", kModel, (dir / "t.csv").string(), "--out", (dir / "r.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = nlohmann::json::parse(read_text(dir / "r.json"));
    EXPECT_TRUE(rep["coupled_length_error_mm"].is_null());
    EXPECT_TRUE(rep["position_error_mm"].is_object());
}

TEST(CliSpeedEval, BucketsSortedAndMerged) {
    test::TempDir dir;
    std::filesystem::create_directories(dir / "runs");
    write_trajectory(dir / "runs" / "a.csv", 30.0);
    write_trajectory(dir / "runs" / "b.csv", 0.15);
    write_trajectory(dir / "runs" / "c.csv", 3.0);
    auto r = run({"speed-eval", "--model", kModel, (dir / "runs").string(), "--out", (dir / "s.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rep = nlohmann::json::parse(read_text(dir / "s.json"));
    ASSERT_EQ(rep["buckets"].size(), 3u);
    EXPECT_EQ(rep["buckets"][0]["speed_rpm"].get<double>(), 0.15);
    EXPECT_EQ(rep["buckets"][2]["speed_rpm"].get<double>(), 30.0);

    write_trajectory(dir / "runs" / "d.csv", 3.0);
    r = run({"speed-eval", "--model", kModel, (dir / "runs").string(), "--out", (dir / "s.csv").string(), "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto table = read_text(dir / "s.csv");
    EXPECT_EQ(count_lines(table), 4u);
    EXPECT_NE(table.find("\n3,2,"), std::string::npos);
}

TEST(CliSpeedEval, EmptyDirectoryFails) {
    test::TempDir dir;
    const auto r = run({"speed-eval", "--model", kModel, dir.path().string(), "--out", (dir / "s.json").string()});
    EXPECT_NE(r.code, 0);
}

TEST(CliBinary, HelpAndSubcommandRequired) {
    const std::string cli = HSA_CLI_PATH;
    EXPECT_EQ(std::system((cli + " --help > /dev/null").c_str()), 0);
    EXPECT_NE(std::system((cli + " > /dev/null 2>&1").c_str()), 0);
}
