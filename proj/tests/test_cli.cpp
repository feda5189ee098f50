// End-to-end tests of the overlap-lab binary: spot values, file formats,
// determinism and the exit-code contract.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "overlap/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code;
    std::string out;
};

CmdResult run_cli(const std::string& args) {
    const std::string out_path = "cli_stdout.tmp";
    const std::string cmd =
        std::string(OVERLAP_LAB_BIN) + " " + args + " > " + out_path + " 2> cli_stderr.tmp";
    const int status = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WEXITSTATUS(status);
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

double first_value(const std::string& out) { return std::stod(out); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("analytic spot values") {
    auto tail = run_cli("analytic overlap-tail-mm --lambda 0.5 --mu 1 --k 1 --t 0");
    REQUIRE(tail.exit_code == 0);
    CHECK(first_value(tail.out) == Catch::Approx(1.0 / 3.0).epsilon(1e-8));

    auto total = run_cli("analytic total-pmf-mm --lambda 10 --mu 1 --t 0 --k 0");
    REQUIRE(total.exit_code == 0);
    CHECK(first_value(total.out) == Catch::Approx(1.0 / 11.0).epsilon(1e-8));

    auto residual = run_cli("analytic residual-during --lambda 10 --mu 1 --delta 0.5 --k 0");
    REQUIRE(residual.exit_code == 0);
    CHECK(first_value(residual.out) ==
          Catch::Approx(1.0 - (10.0 / 11.0) * std::exp(-0.5)).epsilon(1e-8));

    auto atom = run_cli("analytic overlap-atom-mm --lambda 0.5 --mu 1 --k 1");
    REQUIRE(atom.exit_code == 0);
    CHECK(first_value(atom.out) == Catch::Approx(2.0 / 3.0).epsilon(1e-8));

    auto gamma_val = run_cli("analytic lower-gamma --a 2 --x 1");
    REQUIRE(gamma_val.exit_code == 0);
    CHECK(first_value(gamma_val.out) ==
          Catch::Approx(1.0 - 2.0 * std::exp(-1.0)).epsilon(1e-8));

    auto curve = run_cli("analytic overlap-tail-mm --lambda 0.5 --mu 1 --k 1 --t-max 2 --points 5");
    REQUIRE(curve.exit_code == 0);
    CHECK(curve.out.rfind("t,tail", 0) == 0);
}

TEST_CASE("simulate: deterministic three-customer run") {
    fs::remove_all("cli_det_out");
    auto r = run_cli(
        "simulate --interarrival '{\"type\":\"deterministic\",\"value\":1}' "
        "--service '{\"type\":\"deterministic\",\"value\":0.5}' --n 3 --out cli_det_out");
    REQUIRE(r.exit_code == 0);
    const auto table = overlap::read_csv("cli_det_out/customers.csv");
    REQUIRE(table.rows.size() == 3);
    CHECK(table.header == std::vector<std::string>{"index", "arrival", "service", "departure"});
    const auto departures = table.numeric_column("departure");
    CHECK(departures == std::vector<double>{1.5, 2.5, 3.5});
}

TEST_CASE("simulate: byte-identical reruns") {
    fs::remove_all("cli_rep_a");
    fs::remove_all("cli_rep_b");
    const std::string common =
        "simulate --lambda 0.5 --mu 1 --n 100000 --seed 42 --warmup-customers 100 --delta 0.5 "
        "--k-max 2";
    REQUIRE(run_cli(common + " --out cli_rep_a").exit_code == 0);
    REQUIRE(run_cli(common + " --out cli_rep_b").exit_code == 0);
    for (const char* name : {"customers.csv", "overlaps_k1.csv", "overlaps_k2.csv", "counts.csv",
                             "residual_counts.csv"}) {
        INFO(name);
        CHECK(slurp(fs::path("cli_rep_a") / name) == slurp(fs::path("cli_rep_b") / name));
        CHECK(!slurp(fs::path("cli_rep_a") / name).empty());
    }
    // a rerun into the same directory reproduces the config echo byte for byte
    const std::string first_echo = slurp("cli_rep_a/resolved_config.json");
    REQUIRE(run_cli(common + " --out cli_rep_a").exit_code == 0);
    CHECK(slurp("cli_rep_a/resolved_config.json") == first_echo);
    CHECK(!first_echo.empty());
}

TEST_CASE("simulate: counts mean in the figure regime") {
    fs::remove_all("cli_mm_out");
    auto r = run_cli(
        "simulate --lambda 10 --mu 1 --n 22000 --seed 424242 --warmup-customers 2000 "
        "--k-max 1 --out cli_mm_out");
    REQUIRE(r.exit_code == 0);
    const auto counts = overlap::read_csv("cli_mm_out/counts.csv");
    CHECK(counts.header == std::vector<std::string>{"index", "upon", "during", "total"});
    const auto totals = counts.numeric_column("total");
    REQUIRE(totals.size() > 15000);
    double mean = 0.0;
    for (double t : totals) mean += t;
    mean /= static_cast<double>(totals.size());
    CHECK(std::fabs(mean - 20.0) < 1.5);
}

TEST_CASE("verify: report round-trip and determinism") {
    fs::remove_all("cli_verify_out");
    auto r = run_cli("verify fig3 --n 20000 --seed 7 --out cli_verify_out");
    REQUIRE(r.exit_code == 0);
    const std::string report_text = slurp("cli_verify_out/report.json");
    const auto doc = nlohmann::json::parse(report_text);
    CHECK(doc["suite"] == "fig3");
    CHECK(doc["config"]["seed"] == 7);
    CHECK(doc["config"]["n"] == 20000);
    REQUIRE(doc["checks"].is_array());
    REQUIRE(doc["checks"].size() == 4);
    for (const auto& check : doc["checks"]) CHECK(check["pass"].get<bool>());
    // rerun from the same resolved config reproduces the report byte for byte
    REQUIRE(run_cli("verify fig3 --n 20000 --seed 7 --out cli_verify_out").exit_code == 0);
    CHECK(slurp("cli_verify_out/report.json") == report_text);
}

TEST_CASE("verify: failing suite exits 3 and still writes the report") {
    fs::remove_all("cli_fail_out");
    auto r = run_cli("verify fig4-5 --n 5000 --tv-threshold 1e-9 --seed 7 --out cli_fail_out");
    CHECK(r.exit_code == 3);
    const auto doc = nlohmann::json::parse(slurp("cli_fail_out/report.json"));
    bool any_fail = false;
    for (const auto& check : doc["checks"])
        if (!check["pass"].get<bool>()) any_fail = true;
    CHECK(any_fail);
}

TEST_CASE("plotdata: histogram and cdf emission") {
    fs::remove_all("cli_plot_src");
    REQUIRE(run_cli("simulate --lambda 0.5 --mu 1 --n 20000 --seed 5 --k-max 1 "
                    "--out cli_plot_src")
                .exit_code == 0);
    auto r = run_cli(
        "plotdata --source cli_plot_src/overlaps_k1.csv --column overlap --bins 50 "
        "--out cli_plot");
    REQUIRE(r.exit_code == 0);
    const auto hist = overlap::read_csv("cli_plot_hist.csv");
    CHECK(hist.header ==
          std::vector<std::string>{"bin_left", "bin_right", "count", "density"});
    REQUIRE(hist.rows.size() == 50);
    const auto lefts = hist.numeric_column("bin_left");
    const auto rights = hist.numeric_column("bin_right");
    const auto densities = hist.numeric_column("density");
    double integral = 0.0;
    for (std::size_t i = 0; i < densities.size(); ++i)
        integral += densities[i] * (rights[i] - lefts[i]);
    CHECK(integral == Catch::Approx(1.0).margin(1e-9));
    const auto cdf_table = overlap::read_csv("cli_plot_cdf.csv");
    CHECK(cdf_table.header == std::vector<std::string>{"x", "F"});
    CHECK(cdf_table.numeric_column("F").back() == Catch::Approx(1.0));

    // integer-aligned bins for count data
    auto ri = run_cli(
        "plotdata --source cli_plot_src/counts.csv --column total --integer --out cli_plot_int");
    REQUIRE(ri.exit_code == 0);
    const auto int_hist = overlap::read_csv("cli_plot_int_hist.csv");
    const auto il = int_hist.numeric_column("bin_left");
    REQUIRE(!il.empty());
    CHECK(il[0] == Catch::Approx(std::round(il[0] + 0.5) - 0.5));  // half-integer edges
}

TEST_CASE("plotdata: degenerate input emits header-only files") {
    {
        std::ofstream empty("cli_empty.csv");
        empty << "overlap\n";
    }
    auto r = run_cli("plotdata --source cli_empty.csv --column overlap --out cli_empty_plot");
    CHECK(r.exit_code == 0);
    const auto hist = overlap::read_csv("cli_empty_plot_hist.csv");
    CHECK(hist.rows.empty());
    CHECK(hist.header.size() == 4);
}

TEST_CASE("exit-code contract") {
    CHECK(run_cli("analytic no-such-formula --lambda 1").exit_code == 2);
    CHECK(run_cli("analytic overlap-tail-mm --lambda 0.5").exit_code == 2);  // missing flags
    CHECK(run_cli("simulate --lambda 10").exit_code == 2);                   // no stop rule...
    CHECK(run_cli("verify no-such-suite").exit_code == 2);
    CHECK(run_cli("plotdata --source does_not_exist.csv --column x").exit_code == 1);
    CHECK(run_cli("simulate --n 10 --lambda 1 --mu 1 --unknown-flag 3").exit_code == 2);
    CHECK(run_cli("analytic during-pmf --lambda 10 --mu 1 --k -3").exit_code == 2);
}

TEST_CASE("environment seed is the fallback default") {
    fs::remove_all("cli_env_out");
    const std::string cmd = std::string("OVERLAP_LAB_SEED=99 ") + OVERLAP_LAB_BIN +
                            " simulate --lambda 1 --mu 1 --n 10 --out cli_env_out > /dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const auto echoed = nlohmann::json::parse(slurp("cli_env_out/resolved_config.json"));
    CHECK(echoed["seed"] == 99);
}

TEST_CASE("config file with flag overrides") {
    {
        std::ofstream cfg("cli_config.json");
        cfg << R"({"arrival":{"type":"poisson","rate":2.0},
                   "service":{"type":"exponential","rate":1.0},
                   "stop":{"customers":500},
                   "seed":11,
                   "k_max":1,
                   "output_dir":"cli_cfg_out"})";
    }
    fs::remove_all("cli_cfg_out");
    REQUIRE(run_cli("simulate --config cli_config.json --seed 12").exit_code == 0);
    const auto echoed = nlohmann::json::parse(slurp("cli_cfg_out/resolved_config.json"));
    CHECK(echoed["seed"] == 12);  // the flag wins
    CHECK(echoed["arrival"]["rate"] == 2.0);
    // unknown keys are rejected
    {
        std::ofstream cfg("cli_config_bad.json");
        cfg << R"({"arrivals":{"type":"poisson","rate":2.0},"stop":{"customers":5}})";
    }
    CHECK(run_cli("simulate --config cli_config_bad.json").exit_code == 2);
}
