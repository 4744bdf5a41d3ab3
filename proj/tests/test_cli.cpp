#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "riskgrad/payoff.hpp"
#include "riskgrad/report.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const std::string& stdout_file = "") {
    std::string cmd = std::string(RISKGRAD_CLI_PATH) + " " + args;
    if (!stdout_file.empty()) cmd += " > " + stdout_file + " 2>&1";
    else cmd += " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("cli_out_" + name)) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

const std::string kSmallRun =
    "--gaussian mu=0,sigma=1 --chains 20 --steps 1000 --samples 400 --seed 9";

} // namespace

TEST_CASE("config errors exit with code 2") {
    CHECK(run_cli("estimate avar --chains 4 --steps 10") == 2); // no data source
    CHECK(run_cli("estimate avar --gaussian mu=0,sigma=1 --data x.csv") == 2);
    CHECK(run_cli("estimate evar --gaussian mu=0,sigma=1 --q-order 0.5 --chains 2 --steps 5 "
                  "--partitions 2 --atoms 2") == 2);
    CHECK(run_cli("estimate avar --gaussian mu=0,sigma=1 --preset warp") == 2);
    CHECK(run_cli("estimate avar --gaussian mu=0,sigma=1 --gaussian mu=1,sigma=1 "
                  "--payoff identity --chains 2 --steps 5") == 2);
    CHECK(run_cli("estimate avar --gaussian mu=0,sigma=-2 --chains 2 --steps 5") == 2);
    CHECK(run_cli("estimate avar --gaussian mu=0 --chains 2 --steps 5") == 2);
    CHECK(run_cli("estimate avar --gaussian mu=abc,sigma=1 --chains 2 --steps 5") == 2);
    CHECK(run_cli("nonsense") == 2);
}

TEST_CASE("I/O errors exit with code 4") {
    CHECK(run_cli("estimate avar --data riskgrad_missing.csv --chains 2 --steps 5") == 4);
}

TEST_CASE("avar run writes the full output set") {
    TempDir dir("avar");
    CHECK(run_cli("estimate avar " + kSmallRun + " --out " + dir.str()) == 0);
    CHECK(fs::exists(dir.path / "report.json"));
    CHECK(fs::exists(dir.path / "trace.csv"));
    CHECK(fs::exists(dir.path / "manifest.json"));
    CHECK_FALSE(fs::exists(dir.path / "trace.svg"));

    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    CHECK(report["kind"] == "avar");
    CHECK(report["schema_version"] == 1);
    CHECK(report["per_chain_losses"].size() == 20);
    CHECK(report["config_echo"]["steps_m"] == 1000);
    CHECK(report["config_echo"]["samples_p"] == 400);
    CHECK(!report.contains("wall_clock_ms")); // timing lives in the manifest

    // Default stride M/100 = 10 divides M: header + floor(M/stride)+1 rows.
    const std::string trace = slurp(dir.path / "trace.csv");
    CHECK(count_lines(trace) == 1 + 101);
    CHECK(trace.rfind("step,avar,var,loss_std", 0) == 0);

    const auto manifest = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
    CHECK(manifest["tool"] == "riskgrad");
    CHECK(manifest.contains("wall_clock_ms"));
    CHECK(manifest["outputs"].size() == 3);
}

TEST_CASE("avar estimate through the binary matches the Gaussian closed form") {
    TempDir dir("value");
    REQUIRE(run_cli("estimate avar --gaussian mu=0,sigma=1 --level 0.95 --chains 50 "
                    "--steps 20000 --samples 2000 --seed 7 --out " + dir.str()) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    const double avar = report["avar"].get<double>();
    CHECK(std::abs(avar - 2.0627) / 2.0627 < 0.05);
    const double var = report["var"].get<double>();
    CHECK(std::abs(var - 1.6449) / 1.6449 < 0.10);
}

TEST_CASE("reruns are byte-identical and the svg flag is presentation-only") {
    TempDir a("rerun_a"), b("rerun_b"), c("rerun_svg");
    REQUIRE(run_cli("estimate avar " + kSmallRun + " --out " + a.str()) == 0);
    REQUIRE(run_cli("estimate avar " + kSmallRun + " --out " + b.str()) == 0);
    REQUIRE(run_cli("estimate avar " + kSmallRun + " --svg --out " + c.str()) == 0);

    CHECK(slurp(a.path / "report.json") == slurp(b.path / "report.json"));
    CHECK(slurp(a.path / "trace.csv") == slurp(b.path / "trace.csv"));
    CHECK(slurp(a.path / "report.json") == slurp(c.path / "report.json"));
    CHECK(fs::exists(c.path / "trace.svg"));

    // Manifests agree in everything except the wall clock and the command
    // line (which differs here only in --out).
    auto ma = nlohmann::json::parse(slurp(a.path / "manifest.json"));
    auto mb = nlohmann::json::parse(slurp(b.path / "manifest.json"));
    for (auto* m : {&ma, &mb}) {
        m->erase("wall_clock_ms");
        m->erase("command");
    }
    CHECK(ma == mb);
}

TEST_CASE("forced-atom evar reduces to the plain avar estimate") {
    TempDir avar_dir("red_avar"), evar_dir("red_evar");
    const std::string common =
        "--gaussian mu=0,sigma=1 --level 0.95 --chains 6 --steps 1500 --samples 300 --seed 31";
    REQUIRE(run_cli("estimate avar " + common + " --out " + avar_dir.str()) == 0);
    REQUIRE(run_cli("estimate evar " + common + " --partitions 1 --atoms 1 --force-atom 0.95 "
                    "--out " + evar_dir.str()) == 0);

    const auto avar_report = nlohmann::json::parse(slurp(avar_dir.path / "report.json"));
    const auto evar_report = nlohmann::json::parse(slurp(evar_dir.path / "report.json"));
    CHECK(evar_report["kind"] == "evar");
    CHECK(evar_report["evar"].get<double>() == avar_report["avar"].get<double>());
    CHECK(evar_report["winning_measure"]["count"] == 1);
    CHECK(evar_report["winning_measure"]["min"].get<double>() == 0.95);
}

TEST_CASE("csv-driven softmax portfolio run") {
    const std::string csv_path = "riskgrad_cli_prices.csv";
    {
        std::ofstream out(csv_path);
        out << "time,a,b\n";
        double pa = 100.0, pb = 50.0;
        for (int t = 0; t < 40; ++t) {
            out << t << ',' << pa << ',' << pb << '\n';
            pa += (t % 3 == 0 ? 1.5 : -0.5);
            pb += (t % 4 == 0 ? -1.0 : 0.5);
        }
    }
    TempDir dir("softmax");
    CHECK(run_cli("estimate avar --data " + csv_path +
                  " --payoff softmax --level 0.9 --chains 4 --steps 400 --out " + dir.str()) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    REQUIRE(report["portfolio"].size() == 2);
    const auto weights = riskgrad::PayoffModel::softmax_weights(
        report["portfolio"].get<std::vector<double>>());
    CHECK(std::abs(weights[0] + weights[1] - 1.0) <= 1e-12);
    std::remove(csv_path.c_str());
}

TEST_CASE("desk preset shrinks the run unless overridden") {
    TempDir dir("desk");
    REQUIRE(run_cli("estimate avar --gaussian mu=0,sigma=1 --samples 200 --preset desk "
                    "--seed 3 --out " + dir.str()) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    CHECK(report["config_echo"]["chains_n"] == 500);
    CHECK(report["config_echo"]["steps_m"] == 1000);

    TempDir dir2("desk2");
    REQUIRE(run_cli("estimate avar --gaussian mu=0,sigma=1 --samples 200 --preset desk "
                    "--steps 250 --chains 30 --seed 3 --out " + dir2.str()) == 0);
    const auto report2 = nlohmann::json::parse(slurp(dir2.path / "report.json"));
    CHECK(report2["config_echo"]["chains_n"] == 30);
    CHECK(report2["config_echo"]["steps_m"] == 250);
}

TEST_CASE("bound subcommand prints the clamped bound") {
    const std::string out_file = "riskgrad_bound_out.txt";
    CHECK(run_cli("bound --steps 100 --horizon-t 1 --level 0.95 --lambda 1e8 --epsilon 0 "
                  "--chains 10", out_file) == 0);
    const std::string text = slurp(out_file);
    CHECK(text.find("Psi(M=100") != std::string::npos);
    CHECK(text.find("<= 1 ") != std::string::npos);
    CHECK(text.find("note:") != std::string::npos);
    std::remove(out_file.c_str());

    CHECK(run_cli("bound --steps 0") == 2);
}

TEST_CASE("version flag") {
    const std::string out_file = "riskgrad_version_out.txt";
    CHECK(run_cli("--version", out_file) == 0);
    CHECK(slurp(out_file).find("0.1.0") != std::string::npos);
    std::remove(out_file.c_str());
}
