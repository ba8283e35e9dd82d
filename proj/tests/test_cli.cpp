#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "harmonic_levels/cli.hpp"

using namespace harmonic_levels;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("harmonic_levels_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& content) const
    {
        std::ofstream(path(name)) << content;
        return path(name);
    }

    static std::string slurp(const std::string& p)
    {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    std::string catalog_file(const std::string& name) const
    {
        return write(name + ".json", find_catalog_entry(name).config.dump(2));
    }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, CheckCirclesAccepted)
{
    const CliRun r = run({"check", catalog_file("concentric_circles")});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("verdict: accepted"), std::string::npos);
    const auto pos = r.out.find("global_residual: ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_LT(std::stod(r.out.substr(pos + 17)), 1e-7);
}

TEST_F(CliTest, CheckParabolasRejected)
{
    const std::string report = path("report.json");
    const CliRun r = run({"check", catalog_file("parabolas_counterexample"), "--out", report});
    EXPECT_EQ(r.code, 3) << r.err;
    EXPECT_NE(r.out.find("verdict: rejected"), std::string::npos);
    EXPECT_NE(r.out.find("witness: "), std::string::npos);
    const auto doc = nlohmann::json::parse(slurp(report));
    EXPECT_GE(doc.at("witness").at("spread").get<double>(), 1.6 - 1e-6);
}

TEST_F(CliTest, MissingComponentsIsConfigError)
{
    auto doc = find_catalog_entry("concentric_circles").config;
    doc.erase("components");
    const CliRun r = run({"check", write("bad.json", doc.dump())});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("components"), std::string::npos);
}

TEST_F(CliTest, UsageErrors)
{
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"check"}).code, 2);
    EXPECT_EQ(run({"check", path("nope.json")}).code, 2);
    EXPECT_EQ(run({"check", write("garbage.json", "{not json")}).code, 2);
    EXPECT_EQ(run({"check", "catalog:concentric_circles", "--grid", "2,5"}).code, 2);
    EXPECT_EQ(run({"check", "catalog:concentric_circles", "--grid", "5"}).code, 2);
    EXPECT_EQ(run({"check", "catalog:concentric_circles", "--tol", "-1"}).code, 2);
    EXPECT_EQ(run({"flow", "catalog:concentric_circles", "--start", "0", "--length", "1"}).code, 2);
    EXPECT_EQ(run({"reconstruct", "catalog:concentric_circles", "--gauge", "0,-1"}).code, 2);
    EXPECT_EQ(run({"reconstruct", "catalog:concentric_circles", "--quad-points", "20"}).code, 2);
    EXPECT_EQ(run({"sample", "catalog:concentric_circles"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, NewtonFailureIsNumericalError)
{
    const CliRun r = run({"check", "catalog:concentric_circles", "--newton-tol", "1e-300", "--grid", "3,3"});
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("Newton"), std::string::npos) << r.err;
}

TEST_F(CliTest, PointOutsideImageIsNumericalError)
{
    const std::string pts = write("pts.csv", "y1,y2\n100,0\n");
    EXPECT_EQ(run({"reconstruct", "catalog:concentric_circles", "--points", pts, "--quad-points", "21"}).code, 4);
}

TEST_F(CliTest, ReconstructRejectedFamilyIsNumericalError)
{
    EXPECT_EQ(run({"reconstruct", "catalog:parabolas_counterexample", "--tol", "1e-3"}).code, 4);
}

TEST_F(CliTest, ConfigSettingsAndFlagPrecedence)
{
    auto doc = find_catalog_entry("parabolas_counterexample").config;
    doc["grid"] = {3, 3};
    doc["tolerances"] = {{"check_tol", 10.0}};
    const std::string cfg = write("cfg.json", doc.dump());
    // spread 1.6 < 10 → accepted by the config tolerance
    EXPECT_EQ(run({"check", cfg}).code, 0);
    EXPECT_EQ(run({"check", cfg, "--tol", "1e-3"}).code, 3);

    doc["tolerances"] = {{"bogus", 1.0}};
    EXPECT_EQ(run({"check", write("cfg2.json", doc.dump())}).code, 2);
}

TEST_F(CliTest, ReconstructEvaluatesPoints)
{
    const std::string pts = write("pts.csv", "y1,y2\n# comment\n2,0\n0,-1.5\n");
    const CliRun r = run({"reconstruct", "catalog:concentric_circles", "--points", pts, "--quad-points", "41"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "y1,y2,U");
    for (double expected : {std::log(2.0), std::log(1.5)}) {
        ASSERT_TRUE(std::getline(in, line));
        EXPECT_NEAR(std::stod(line.substr(line.rfind(',') + 1)), expected, 1e-7);
    }
}

TEST_F(CliTest, ReconstructTable)
{
    const std::string table = path("u.csv");
    ASSERT_EQ(run({"reconstruct", "catalog:spheres_chart", "--grid", "5,5,5", "--quad-points", "21", "--gauge", "1,2",
                   "--out", table})
                  .code,
              0);
    std::istringstream in(slurp(table));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,u,du");
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            v.push_back(std::stod(cell));
        ASSERT_EQ(v.size(), 3u);
        EXPECT_NEAR(v[1], 1 + 2 * (1 - std::exp(-v[0])), 1e-6);
        ++rows;
    }
    EXPECT_EQ(rows, 21);
}

TEST_F(CliTest, FlowCsv)
{
    const CliRun r = run({"flow", "catalog:concentric_circles", "--start", "0,0", "--length", "1", "--step", "0.01"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto last = r.out.substr(r.out.rfind('\n', r.out.size() - 2) + 1);
    EXPECT_EQ(last.substr(0, 2), "1,");
    EXPECT_NEAR(std::stod(last.substr(2)), 2.0, 1e-8);

    const CliRun truncated = run({"flow", "catalog:concentric_circles", "--start", "0,0", "--length", "5"});
    EXPECT_EQ(truncated.code, 0);
    EXPECT_NE(truncated.err.find("left the parameter box"), std::string::npos);
}

TEST_F(CliTest, VerifyGradient)
{
    const CliRun r = run({"verify-gradient", "catalog:concentric_circles", "--start", "0,0", "--length", "1", "--step",
                       "0.001", "--quad-points", "41"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_LT(doc.at("max_rel_error").get<double>(), 1e-6);
}

TEST_F(CliTest, SampleCsv)
{
    const std::string csv = path("grid.csv");
    ASSERT_EQ(run({"sample", "catalog:parabolas_counterexample", "--grid", "3,3", "--out", csv}).code, 0);
    const std::string text = slurp(csv);
    EXPECT_EQ(text.substr(0, text.find('\n')), "sigma1,t,phi,kappa,dphi_ds,lambda");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
}

TEST_F(CliTest, Catalog)
{
    const CliRun list = run({"catalog"});
    EXPECT_EQ(list.code, 0);
    EXPECT_NE(list.out.find("spheres_chart"), std::string::npos);
    const CliRun one = run({"catalog", "hyperbolas"});
    EXPECT_EQ(one.code, 0);
    EXPECT_EQ(nlohmann::json::parse(one.out), find_catalog_entry("hyperbolas").config);
    EXPECT_EQ(run({"catalog", "tori"}).code, 2);
}

TEST_F(CliTest, OutputsAreByteIdentical)
{
    for (int i = 0; i < 2; ++i) {
        const std::string suffix = std::to_string(i);
        ASSERT_EQ(run({"sample", "catalog:spheres_chart", "--grid", "5,5,3", "--out", path("s" + suffix)}).code, 0);
        ASSERT_EQ(run({"check", "catalog:hyperbolas", "--out", path("c" + suffix)}).code, 0);
        ASSERT_EQ(run({"flow", "catalog:hyperbolas", "--start", "0,0", "--length", "0.5", "--out", path("f" + suffix)})
                      .code,
                  0);
    }
    for (const char* stem : {"s", "c", "f"})
        EXPECT_EQ(slurp(path(std::string(stem) + "0")), slurp(path(std::string(stem) + "1"))) << stem;
}

TEST_F(CliTest, BinaryExitCodes)
{
    const std::string exe = HARMONIC_LEVELS_CLI;
    auto status = [&](const std::string& args) {
        const int raw = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("check catalog:concentric_circles"), 0);
    EXPECT_EQ(status("check catalog:parabolas_counterexample"), 3);
    auto doc = find_catalog_entry("concentric_circles").config;
    doc.erase("components");
    EXPECT_EQ(status("check " + write("bad.json", doc.dump())), 2);
    EXPECT_EQ(status("check catalog:concentric_circles --newton-tol 1e-300 --grid 3,3"), 4);
}
