#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#ifndef GPEFEM_CLI
#error "GPEFEM_CLI must name the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gpefem_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + GPEFEM_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
#ifdef WEXITSTATUS
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
#else
    return rc;
#endif
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& extra) {
    const fs::path p = dir / "run.cfg";
    std::ofstream(p) << "x_min = -6\nx_max = 6\ny_min = -6\ny_max = 6\nnx = 12\nny = 12\n"
                     << "omega = 0.8\nbeta = 100\ngamma_x = 0.9\ngamma_y = 1.1\ninitial = gaussian\n"
                     << extra;
    return p;
}

}  // namespace

TEST(Cli, RunWithZeroFinalTimeWritesInitialSnapshotOnly) {
    const fs::path d = scratch("t0");
    const fs::path cfg = write_config(d, "tau = 0.1\nT = 0\n");
    ASSERT_EQ(cli("run --config \"" + cfg.string() + "\" --out \"" + (d / "out").string() + "\"", d / "log"), 0)
        << slurp(d / "log");
    EXPECT_TRUE(fs::exists(d / "out" / "snapshot_0.vtk"));
    int vtk = 0;
    for (const auto& e : fs::directory_iterator(d / "out")) vtk += e.path().extension() == ".vtk";
    EXPECT_EQ(vtk, 1);
    const std::string diag = slurp(d / "out" / "diagnostics.csv");
    EXPECT_EQ(std::count(diag.begin(), diag.end(), '\n'), 2);
    const std::string man = slurp(d / "out" / "manifest.txt");
    EXPECT_NE(man.find("status = ok"), std::string::npos) << man;
    EXPECT_NE(man.find("beta = 100"), std::string::npos);
}

TEST(Cli, RunIsDeterministic) {
    const fs::path d = scratch("det");
    const fs::path cfg = write_config(d, "tau = 0.1\nT = 0.5\nsnapshot_every = 2\ngs_noise = 0.1\n");
    ASSERT_EQ(cli("run --config \"" + cfg.string() + "\" --out \"" + (d / "a").string() + "\"", d / "log"), 0)
        << slurp(d / "log");
    ASSERT_EQ(cli("run --config \"" + cfg.string() + "\" --out \"" + (d / "b").string() + "\"", d / "log"), 0);
    EXPECT_EQ(slurp(d / "a" / "diagnostics.csv"), slurp(d / "b" / "diagnostics.csv"));
    EXPECT_EQ(slurp(d / "a" / "final_field.csv"), slurp(d / "b" / "final_field.csv"));
    for (const char* s : {"snapshot_0.vtk", "snapshot_2.vtk", "snapshot_4.vtk", "snapshot_5.vtk"})
        EXPECT_TRUE(fs::exists(d / "a" / s)) << s;
}

TEST(Cli, GroundstateFeedsRun) {
    const fs::path d = scratch("gs");
    const fs::path cfg = write_config(d, "tau = 0.1\nT = 0.2\ngs_tol = 1e-4\ngs_beta = 10\n");
    ASSERT_EQ(cli("groundstate --config \"" + cfg.string() + "\" --out \"" + (d / "gs").string() + "\"", d / "log"), 0)
        << slurp(d / "log");
    ASSERT_TRUE(fs::exists(d / "gs" / "groundstate.vtk"));
    ASSERT_TRUE(fs::exists(d / "gs" / "groundstate.csv"));
    const std::string set = "--set \"initial=" + (d / "gs" / "groundstate.csv").string() + "\"";
    EXPECT_EQ(cli("run --config \"" + cfg.string() + "\" " + set + " --out \"" + (d / "run").string() + "\"", d / "log"), 0)
        << slurp(d / "log");
}

TEST(Cli, ConfigErrorsExitWithCodeTwo) {
    const fs::path d = scratch("bad");
    const fs::path cfg = write_config(d, "tau = -0.1\nT = 1\n");
    EXPECT_EQ(cli("run --config \"" + cfg.string() + "\"", d / "log"), 2);
    EXPECT_NE(slurp(d / "log").find("tau"), std::string::npos);
    const fs::path ok = write_config(d, "tau = 0.1\nT = 1\n");
    EXPECT_EQ(cli("run --config \"" + ok.string() + "\" --set nosuchkey=1", d / "log"), 2);
    EXPECT_EQ(cli("run --config \"" + (d / "missing.cfg").string() + "\"", d / "log"), 2);
    EXPECT_EQ(cli("run", d / "log"), 2);
    EXPECT_EQ(cli("convergence --case soliton", d / "log"), 2);
}

TEST(Cli, SolverFailureExitsWithCodeThree) {
    const fs::path d = scratch("fail");
    const fs::path cfg = write_config(d, "tau = 1\nT = 2\nnewton_max_iter = 1\nnewton_tol = 1e-14\n");
    EXPECT_EQ(cli("run --config \"" + cfg.string() + "\" --out \"" + (d / "out").string() + "\"", d / "log"), 3);
    EXPECT_NE(slurp(d / "out" / "manifest.txt").find("status = solver_failure"), std::string::npos);
}

TEST(Cli, VerifyFm) {
    const fs::path d = scratch("fm");
    EXPECT_EQ(cli("verify-fm --M 1 --samples 100000", d / "log"), 0);
    EXPECT_NE(slurp(d / "log").find("PASS"), std::string::npos);
    EXPECT_EQ(cli("verify f_M --M 2 --samples 1000", d / "log"), 0);
    EXPECT_EQ(cli("verify-fm --M -1", d / "log"), 2);
}

TEST(Cli, VerifyAssumptions) {
    const fs::path d = scratch("va");
    // the rotating form with omega 0.8 and c = V violates the pointwise condition away from the origin
    const fs::path cfg = write_config(d, "tau = 0.1\nT = 1\n");
    EXPECT_EQ(cli("verify-assumptions --config \"" + cfg.string() + "\"", d / "log"), 4);
    EXPECT_NE(slurp(d / "log").find("assumptions: FAIL"), std::string::npos);
}

TEST(Cli, Table1Csv) {
    const fs::path d = scratch("t1");
    const fs::path cfg = write_config(d, "tau = 0.1\nT = 1\n");
    ASSERT_EQ(cli("table1 --config \"" + cfg.string() + "\" --steps 5 --out \"" + (d / "out").string() + "\"", d / "log"), 0)
        << slurp(d / "log");
    std::istringstream is(slurp(d / "out" / "table1.csv"));
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "tau,T,be_mass,irk_mass,be_energy,irk_energy");
    int rows = 0;
    while (std::getline(is, line)) rows += !line.empty();
    EXPECT_EQ(rows, 4);
}

TEST(Cli, ConvergenceWritesEocCsv) {
    const fs::path d = scratch("eoc");
    ASSERT_EQ(cli("convergence --case eigenmode --kind projection --levels 2 --coarse 4 --out \"" + (d / "out").string() + "\"",
                  d / "log"),
              0)
        << slurp(d / "log");
    EXPECT_EQ(slurp(d / "out" / "eoc.csv").substr(0, 28), "h,err_l2,eoc_l2,err_e,eoc_e\n");
}
