#include "ncpoly_cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ncpoly;
namespace fs = std::filesystem;

namespace {

cli::ParseOutcome parse(std::vector<std::string> args) {
    args.insert(args.begin(), "ncpoly");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::parse_config(static_cast<int>(argv.size()), argv.data());
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ncpoly_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_args(std::vector<std::string> args, std::string* log_out = nullptr) {
    const auto parsed = parse(std::move(args));
    if (!parsed.config) return parsed.exit_code;
    std::ostringstream log, err;
    const int rc = cli::run(*parsed.config, log, err);
    if (log_out) *log_out = log.str() + err.str();
    return rc;
}

} // namespace

TEST(CliParse, NoArgumentsIsUsage) {
    const auto r = parse({});
    EXPECT_FALSE(r.config);
    EXPECT_EQ(r.exit_code, cli::kUsage);
    EXPECT_NE(r.message.find("solve-study"), std::string::npos);
}

TEST(CliParse, HelpExitsZero) {
    const auto r = parse({"--help"});
    EXPECT_FALSE(r.config);
    EXPECT_EQ(r.exit_code, 0);
}

TEST(CliParse, Defaults) {
    const auto r = parse({"solve-study"});
    ASSERT_TRUE(r.config);
    EXPECT_EQ(r.config->dim, 2);
    EXPECT_EQ(r.config->quad_k, 4);
    EXPECT_EQ(r.config->tol, 1e-10);
    EXPECT_EQ(r.config->n, (std::vector<int>{4, 8, 16, 32}));
}

TEST(CliParse, CommaSeparatedSizes) {
    const auto r = parse({"interp-study", "--dim", "3", "--n", "4,8,16"});
    ASSERT_TRUE(r.config);
    EXPECT_EQ(r.config->n, (std::vector<int>{4, 8, 16}));
}

TEST(CliParse, InvalidCombinationsAreUsageErrors) {
    EXPECT_EQ(parse({"solve-study", "--element", "dssy1", "--dim", "4"}).exit_code, cli::kUsage);
    EXPECT_NE(parse({"solve-study", "--element", "dssy1", "--dim", "4"}).message.find("2, 3"), std::string::npos);
    EXPECT_EQ(parse({"solve-study", "--mesh", "perturb2d", "--dim", "3"}).exit_code, cli::kUsage);
    EXPECT_EQ(parse({"solve-study", "--n", "4,8"}).exit_code, cli::kUsage);
    EXPECT_EQ(parse({"solve-study", "--n", "8,4,16"}).exit_code, cli::kUsage);
    EXPECT_EQ(parse({"solve-study", "--coeff", "nonsense"}).exit_code, cli::kUsage);
    EXPECT_EQ(parse({"solve-study", "--dim", "7"}).exit_code, cli::kUsage);
    EXPECT_EQ(parse({"frobnicate"}).exit_code, cli::kUsage);
    EXPECT_EQ(parse({"patch-test", "--element", "cr"}).exit_code, cli::kUsage);
}

TEST(CliParse, ConfigFileWithFlagPrecedence) {
    const fs::path dir = temp_dir("config");
    fs::create_directories(dir);
    const fs::path file = dir / "run.ini";
    std::ofstream(file) << "dim = 3\nn = 2,4,8\ntol = 1e-12\nmesh = shear\n";
    const auto r = parse({"interp-study", "--config", file.string(), "--dim", "2"});
    ASSERT_TRUE(r.config) << r.message;
    EXPECT_EQ(r.config->dim, 2);
    EXPECT_EQ(r.config->tol, 1e-12);
    EXPECT_EQ(r.config->mesh, "shear");
    EXPECT_EQ(r.config->n, (std::vector<int>{2, 4, 8}));
}

TEST(CliParse, UnknownConfigKeyRejected) {
    const fs::path dir = temp_dir("badconfig");
    fs::create_directories(dir);
    const fs::path file = dir / "run.ini";
    std::ofstream(file) << "dim = 3\ncolour = blue\n";
    EXPECT_EQ(parse({"mesh-check", "--config", file.string()}).exit_code, cli::kUsage);
}

TEST(CliRun, MeshCheckSingleCellWarns) {
    const fs::path dir = temp_dir("meshcheck");
    std::string log;
    EXPECT_EQ(run_args({"mesh-check", "--dim", "3", "--n", "1,2", "--out", dir.string()}, &log), 0);
    EXPECT_NE(log.find("warning"), std::string::npos);
    const auto js = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(js["meshes"][1]["facets"], 36);
    EXPECT_EQ(js["meshes"][1]["n_dofs"], 1);
    EXPECT_TRUE(js["pass"].get<bool>());
}

TEST(CliRun, SolveStudyWritesReports) {
    const fs::path dir = temp_dir("solve");
    EXPECT_EQ(run_args({"solve-study", "--n", "4,8,16", "--coeff", "varcoef", "--mesh", "shear", "--out",
                        dir.string(), "--dump-system", "-q"}),
              0);
    const std::string csv = slurp(dir / "report.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "h,n_dofs,err_l2,err_h1_broken,iters,seconds");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    const auto js = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(js["config"]["coeff"], "varcoef");
    EXPECT_EQ(js["rows"].size(), 3u);
    EXPECT_TRUE(js["rates"]["defined"].get<bool>());
    const std::string mtx = slurp(dir / "system.mtx");
    EXPECT_EQ(mtx.rfind("%%MatrixMarket matrix coordinate real symmetric\n225 225 ", 0), 0u);
    EXPECT_TRUE(fs::exists(dir / "rhs.txt"));
}

TEST(CliRun, ReproducibleCsvIsByteIdentical) {
    const fs::path a = temp_dir("repro_a");
    const fs::path b = temp_dir("repro_b");
    for (const auto& dir : {a, b}) {
        const int rc = run_args({"solve-study", "--n", "2,4,8", "--mesh", "perturb2d", "--reproducible", "-q",
                                 "--out", dir.string()});
        EXPECT_TRUE(rc == cli::kPass || rc == cli::kGateFailed);
    }
    EXPECT_EQ(slurp(a / "report.csv"), slurp(b / "report.csv"));
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
}

TEST(CliRun, GatedFailureExitsOne) {
    // too coarse for the asymptotic L2 window
    const fs::path dir = temp_dir("gate");
    EXPECT_EQ(run_args({"interp-study", "--dim", "3", "--n", "2,4,8", "--out", dir.string(), "-q"}), cli::kGateFailed);
    EXPECT_TRUE(fs::exists(dir / "report.csv"));
    const auto js = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_FALSE(js["pass"].get<bool>());
}

TEST(CliRun, PatchTestPasses) {
    const fs::path dir = temp_dir("patch");
    EXPECT_EQ(run_args({"patch-test", "--dim", "3", "--mesh", "shear", "--n", "2,3", "--tol", "1e-13", "--out",
                        dir.string()}),
              0);
}

TEST(CliRun, ElementPropsDssy) {
    const fs::path dir = temp_dir("props");
    EXPECT_EQ(run_args({"element-props", "--element", "dssy2", "--dim", "3", "--out", dir.string()}), 0);
    const auto js = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_LE(js["mvp"]["max_deviation"].get<double>(), 1e-12);
}

TEST(CliRun, UnwritableOutputIsIoError) {
    const fs::path dir = temp_dir("io");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    EXPECT_EQ(run_args({"mesh-check", "--n", "2", "--out", (dir / "file").string()}), cli::kIo);
}

TEST(CliRun, NonConvexMeshIsNumericalFailure) {
    const fs::path dir = temp_dir("nonconvex");
    std::string log;
    EXPECT_EQ(run_args({"mesh-check", "--mesh", "perturb2d", "--delta", "0.9", "--n", "16", "--out", dir.string()},
                       &log),
              cli::kNumerical);
    EXPECT_NE(log.find("convex"), std::string::npos);
}

TEST(CliRun, CgIterationCapIsNumericalFailure) {
    const fs::path dir = temp_dir("cap");
    EXPECT_EQ(run_args({"solve-study", "--n", "8,16,32", "--max-iters", "2", "-q", "--out", dir.string(), "--coeff",
                        "varcoef"}),
              cli::kNumerical);
}
