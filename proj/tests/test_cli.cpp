// Runs the built command-line tool as a subprocess.

#include <json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace
{

struct Result
{
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("adiabatic_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Result run_cli(const std::string& args, const fs::path& dir)
{
    const std::string cmd = std::string("\"") + CLI_PATH + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                            "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "stdout.txt");
    r.err = slurp(dir / "stderr.txt");
    return r;
}

fs::path write_config(const fs::path& dir, const std::string& text)
{
    const fs::path p = dir / "scenario.cfg";
    std::ofstream(p) << text;
    return p;
}

std::string scenario(const std::string& name)
{
    return std::string(SCENARIO_DIR) + "/" + name;
}

const std::string small_spin = "model.kind = spin\nmodel.omega = 0.1\nmodel.theta = pi/4\n"
                               "grid.tau_end = 50\ngrid.n_steps = 20000\noutput.stride = 50\n";

} // namespace

TEST(Cli, EvolveWritesCsvAndSummary)
{
    const auto dir = fresh_dir("evolve");
    const auto cfg = write_config(dir, small_spin);
    const auto r = run_cli("evolve --config " + cfg.string() + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("min P_exact"), std::string::npos);
    const auto csv = slurp(dir / "evolution.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "tau,P_exact,P_direct,P_first,P_second,P_ratio,norm_residual,c0_sq,c1_sq");
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    EXPECT_LT(j["max_norm_residual"].get<double>(), 1e-10);
    EXPECT_LT(j["max_dual_route_gap"].get<double>(), 1e-6);
    EXPECT_EQ(j["rows"], 401);
}

TEST(Cli, EvolveIsByteReproducible)
{
    const auto a = fresh_dir("repro_a");
    const auto b = fresh_dir("repro_b");
    const auto cfg = write_config(a, small_spin);
    ASSERT_EQ(run_cli("evolve --config " + cfg.string() + " --out " + a.string(), a).code, 0);
    ASSERT_EQ(run_cli("evolve --config " + cfg.string() + " --out " + b.string() + " --threads 4", b).code, 0);
    EXPECT_EQ(slurp(a / "evolution.csv"), slurp(b / "evolution.csv"));
}

TEST(Cli, ConstantModelNeverLeavesItsLevel)
{
    const auto dir = fresh_dir("constant");
    const auto r = run_cli("evolve --config " + scenario("constant.cfg") + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream csv(slurp(dir / "evolution.csv"));
    std::string line;
    std::getline(csv, line);
    int rows = 0;
    while (std::getline(csv, line)) {
        std::vector<double> v;
        std::istringstream cells(line);
        for (std::string cell; std::getline(cells, cell, ',');)
            v.push_back(std::stod(cell));
        for (std::size_t col = 1; col <= 5; ++col)
            EXPECT_NEAR(v[col], 1.0, 1e-12) << "row " << rows << " col " << col;
        ++rows;
    }
    EXPECT_EQ(rows, 1001);
}

TEST(Cli, CheckReportsEveryCriterion)
{
    const auto dir = fresh_dir("check");
    const auto r = run_cli("check --config " + scenario("spin_a_check.cfg") + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "check.json"));
    ASSERT_EQ(j["criteria"].size(), 5u);
    std::vector<std::string> names;
    for (const auto& c : j["criteria"]) {
        names.push_back(c["criterion"]);
        for (const char* key : {"value", "threshold", "pass", "tau_end", "per_level"})
            EXPECT_TRUE(c.contains(key)) << key;
    }
    EXPECT_EQ(names, (std::vector<std::string>{"FirstOrder", "SecondOrder", "RatioFirstIter", "CompactFunctional",
                                               "Fourier"}));
    EXPECT_TRUE(j["all_pass"].get<bool>());
    EXPECT_EQ(j["resolved_config"]["model.omega"], "0.02");
}

TEST(Cli, ThresholdOverride)
{
    const auto dir = fresh_dir("threshold");
    const auto r =
        run_cli("check --config " + scenario("spin_a_check.cfg") + " --out " + dir.string() + " --threshold 1e-5", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "check.json"));
    EXPECT_FALSE(j["all_pass"].get<bool>());
    EXPECT_EQ(j["criteria"][0]["threshold"].get<double>(), 1e-5);
}

TEST(Cli, FourierSubcommand)
{
    const auto dir = fresh_dir("fourier");
    const auto r = run_cli("fourier --config " + scenario("spin_a_check.cfg") + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "fourier.json"));
    EXPECT_EQ(j["harmonics"].size(), 9u);
    EXPECT_TRUE(j["pass"].get<bool>());

    // period 2π/0.1 does not fit a step of 1/400
    const auto bad = fresh_dir("fourier_bad");
    const auto cfg = write_config(bad, small_spin);
    const auto e = run_cli("fourier --config " + cfg.string() + " --out " + bad.string(), bad);
    EXPECT_EQ(e.code, 2);
    EXPECT_NE(e.err.find("PeriodMismatch"), std::string::npos);
}

TEST(Cli, SweepMatchesSinglePointEvolve)
{
    const auto dir = fresh_dir("sweep_one");
    const auto cfg = write_config(dir, small_spin + "sweep.param = model.omega\nsweep.values = 0.1\n");
    ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + dir.string(), dir).code, 0);
    const auto evolve_dir = fresh_dir("sweep_one_evolve");
    const auto cfg2 = write_config(evolve_dir, small_spin);
    ASSERT_EQ(run_cli("evolve --config " + cfg2.string() + " --out " + evolve_dir.string(), evolve_dir).code, 0);

    const auto summary = nlohmann::json::parse(slurp(evolve_dir / "summary.json"));
    std::istringstream csv(slurp(dir / "sweep.csv"));
    std::string header;
    std::string row;
    std::getline(csv, header);
    std::getline(csv, row);
    const double min_p = std::stod(row.substr(row.find(',') + 1));
    EXPECT_EQ(min_p, summary["min_P_exact"].get<double>());
}

TEST(Cli, SweepIsThreadCountInvariant)
{
    const auto a = fresh_dir("sweep_a");
    const auto b = fresh_dir("sweep_b");
    const auto cfg = write_config(a, small_spin + "sweep.param = model.theta\nsweep.values = pi/8 pi/4 3*pi/8\n");
    ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + a.string() + " --threads 1", a).code, 0);
    ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + b.string() + " --threads 3", b).code, 0);
    EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
}

TEST(Cli, CrossingIsANumericalError)
{
    const auto dir = fresh_dir("crossing");
    const auto r = run_cli("evolve --config " + scenario("crossing.cfg") + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("DegenerateGap"), std::string::npos);
    EXPECT_NE(r.err.find("tau=1"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "evolution.csv"));
}

TEST(Cli, InputErrorsExitWithTwo)
{
    const auto dir = fresh_dir("input");
    EXPECT_EQ(run_cli("evolve --config " + (dir / "missing.cfg").string(), dir).code, 2);
    EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
    EXPECT_EQ(run_cli("", dir).code, 2);

    const auto cfg = write_config(dir, small_spin + "model.colour = blue\n");
    const auto r = run_cli("evolve --config " + cfg.string() + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("ConfigError"), std::string::npos);
    EXPECT_NE(r.err.find("model.colour"), std::string::npos);

    const auto sweep_dir = fresh_dir("input_sweep");
    const auto sweep_cfg = write_config(sweep_dir, small_spin + "sweep.param = model.kind\nsweep.values = 1 2\n");
    EXPECT_EQ(run_cli("sweep --config " + sweep_cfg.string() + " --out " + sweep_dir.string(), sweep_dir).code, 2);
}

TEST(Cli, NonHermitianTableIsAnInputError)
{
    const auto dir = fresh_dir("table");
    std::ofstream(dir / "h.tab") << "dim=2\n0 1 0 0.5 0 -1 0\n1 1 0.2 0.5 0 -1 0\n";
    const auto cfg = write_config(dir, "model.kind = tabulated\nmodel.path = " + (dir / "h.tab").string() +
                                           "\ngrid.tau_end = 1\ngrid.n_steps = 10\n");
    const auto r = run_cli("evolve --config " + cfg.string() + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 2) << r.err;
    EXPECT_NE(r.err.find("NonHermitianSample"), std::string::npos);
}

TEST(Cli, HelpExitsCleanly)
{
    const auto dir = fresh_dir("help");
    const auto r = run_cli("--help", dir);
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("evolve"), std::string::npos);
}
