// End-to-end exercises of the command-line tool: artifact production, stdout
// contracts, exit codes for the three error classes, config/flag precedence,
// and byte-level reproducibility of the reports.

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "curvecluster/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBinary = CLI_BINARY;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const fs::path& dir, const std::string& args) {
    const fs::path so = dir / "stdout.txt";
    const fs::path se = dir / "stderr.txt";
    const std::string cmd =
        "cd " + dir.string() + " && " + kBinary + " " + args + " > " + so.string() + " 2> " + se.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("curvecluster_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Deterministic panel: three flat series, three sine-shaped ones.
void write_two_group_panel(const fs::path& path, int T = 200) {
    curvecluster::Rng rng(9);
    std::ofstream f(path);
    f.precision(12);
    f << "series_id,t,x,y\n";
    for (int i = 0; i < 6; ++i)
        for (int t = 0; t < T; ++t) {
            const double x = rng.uniform01();
            const double m = i < 3 ? 0.0 : 3.0 * std::sin(3.0 * x);
            f << "s" << i << "," << (t + 1) << "," << x << "," << (m + 0.4 * rng.normal()) << "\n";
        }
}

const std::string kGridArgs = "--locations 0.2 0.35 0.5 0.65 0.8 --bandwidths 0.1 0.2 0.25";

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("version flag") {
    const fs::path dir = fresh_dir("version");
    const RunResult r = run_cli(dir, "--version");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("artifact 1.0.0") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("quantile prints only the threshold on stdout") {
    const fs::path dir = fresh_dir("quantile");
    const RunResult r = run_cli(
        dir, "quantile --n 2 --locations 0.5 --bandwidths 0.25 --mc-reps 4000 --seed 12345");
    REQUIRE(r.exit_code == 0);
    std::size_t pos = 0;
    const double q = std::stod(r.out, &pos);
    // the rest of stdout is whitespace only
    CHECK(r.out.find_first_not_of(" \t\r\n", pos) == std::string::npos);
    // two series, one grid point: |N(0,1)| quantile minus the penalty
    const double expect = 1.9599639845 - std::sqrt(2.0 * std::log(2.0));
    CHECK(std::fabs(q - expect) < 0.18);  // 3 sigma of the Monte Carlo order statistic

    // identical invocation reproduces the identical number
    const RunResult r2 = run_cli(
        dir, "quantile --n 2 --locations 0.5 --bandwidths 0.25 --mc-reps 4000 --seed 12345");
    CHECK(r2.out == r.out);
    fs::remove_all(dir);
}

TEST_CASE("cluster pipeline produces every artifact and finds the two groups") {
    const fs::path dir = fresh_dir("cluster");
    write_two_group_panel(dir / "panel.csv");
    const RunResult r = run_cli(dir, "cluster --input panel.csv " + kGridArgs +
                                         " --mc-reps 400 --seed 3 --out outdir");
    REQUIRE(r.exit_code == 0);
    CHECK(r.err.find("estimated 2 groups") != std::string::npos);

    for (const char* name : {"distances.csv", "distances_meta.json", "dendrogram.json",
                             "dendrogram.svg", "assignments.csv", "report.json"})
        CHECK(fs::exists(dir / "outdir" / name));

    const json report = load_json(dir / "outdir" / "report.json");
    CHECK(report.at("k_hat").get<int>() == 2);
    CHECK(report.at("n").get<int>() == 6);
    CHECK(report.at("T").get<int>() == 200);
    CHECK(report.at("version").get<std::string>() == "1.0.0");
    const auto groups = report.at("groups");
    REQUIRE(groups.size() == 2);
    CHECK(groups[0] == json({"s0", "s1", "s2"}));
    CHECK(groups[1] == json({"s3", "s4", "s5"}));
    CHECK(report.at("threshold").get<double>() > 0.0);
    CHECK(report.at("covariance").at("max_diag_error").get<double>() <= 1e-8);

    // assignments: header plus one line per series, cluster ids 1-based
    std::ifstream assign(dir / "outdir" / "assignments.csv");
    std::string line;
    std::getline(assign, line);
    CHECK(line == "series_id,cluster");
    int rows = 0;
    while (std::getline(assign, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6);

    // distances: header plus upper triangle of a 6x6 matrix
    std::ifstream dist(dir / "outdir" / "distances.csv");
    std::getline(dist, line);
    CHECK(line == "i,j,d");
    rows = 0;
    while (std::getline(dist, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 15);

    // SVG is a real SVG document
    const std::string svg = slurp(dir / "outdir" / "dendrogram.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("group curves file appears only on request") {
    const fs::path dir = fresh_dir("curves");
    write_two_group_panel(dir / "panel.csv", 150);
    const RunResult plain = run_cli(dir, "cluster --input panel.csv " + kGridArgs +
                                             " --mc-reps 300 --seed 3 --out a");
    REQUIRE(plain.exit_code == 0);
    CHECK(!fs::exists(dir / "a" / "group_curves.csv"));
    const RunResult curves = run_cli(dir, "cluster --input panel.csv --group-curves " + kGridArgs +
                                              " --mc-reps 300 --seed 3 --out b");
    REQUIRE(curves.exit_code == 0);
    CHECK(fs::exists(dir / "b" / "group_curves.csv"));
    fs::remove_all(dir);
}

TEST_CASE("reports are byte-identical across reruns up to timings") {
    const fs::path dir = fresh_dir("determinism");
    write_two_group_panel(dir / "panel.csv");
    const std::string args =
        "cluster --input panel.csv " + kGridArgs + " --mc-reps 400 --seed 3 --workers ";
    REQUIRE(run_cli(dir, args + "1 --out r1").exit_code == 0);
    REQUIRE(run_cli(dir, args + "1 --out r2").exit_code == 0);

    CHECK(slurp(dir / "r1" / "distances.csv") == slurp(dir / "r2" / "distances.csv"));
    CHECK(slurp(dir / "r1" / "dendrogram.json") == slurp(dir / "r2" / "dendrogram.json"));
    CHECK(slurp(dir / "r1" / "assignments.csv") == slurp(dir / "r2" / "assignments.csv"));

    json a = load_json(dir / "r1" / "report.json");
    json b = load_json(dir / "r2" / "report.json");
    a.erase("timings");
    b.erase("timings");
    // out_dir differs by construction; everything else must agree
    a.at("config").erase("out_dir");
    b.at("config").erase("out_dir");
    a.at("config").erase("cache_dir");
    b.at("config").erase("cache_dir");
    CHECK(a.dump() == b.dump());

    // a different worker count must not change the numbers
    REQUIRE(run_cli(dir, args + "3 --out r3").exit_code == 0);
    CHECK(slurp(dir / "r1" / "distances.csv") == slurp(dir / "r3" / "distances.csv"));
    json c = load_json(dir / "r3" / "report.json");
    CHECK(a.at("threshold") == c.at("threshold"));
    CHECK(a.at("k_hat") == c.at("k_hat"));
    CHECK(a.at("groups") == c.at("groups"));
    fs::remove_all(dir);
}

TEST_CASE("input problems exit with code 2") {
    const fs::path dir = fresh_dir("exit2");
    const RunResult missing = run_cli(dir, "cluster --input does_not_exist.csv --out o");
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("error:") != std::string::npos);

    // malformed CSV
    std::ofstream(dir / "bad.csv") << "wrong,header\n1,2\n";
    CHECK(run_cli(dir, "cluster --input bad.csv --out o").exit_code == 2);

    // unknown kernel name
    write_two_group_panel(dir / "panel.csv", 80);
    CHECK(run_cli(dir, "cluster --input panel.csv " + kGridArgs + " --kernel tricube --out o")
              .exit_code == 2);

    // config file with an unknown key
    std::ofstream(dir / "cfg.json") << R"({"bogus": 1})";
    CHECK(run_cli(dir, "cluster --input panel.csv --config cfg.json --out o").exit_code == 2);

    // config file that is not JSON
    std::ofstream(dir / "cfg2.json") << "not json";
    CHECK(run_cli(dir, "cluster --input panel.csv --config cfg2.json --out o").exit_code == 2);

    // grid outside the unit interval
    CHECK(run_cli(dir, "cluster --input panel.csv --locations 1.5 --bandwidths 0.25 --out o")
              .exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("degenerate smoothing windows exit with code 3 under the strict policy") {
    const fs::path dir = fresh_dir("exit3");
    // all design points below 0.3: nothing to smooth at x = 0.9, h = 0.05
    curvecluster::Rng rng(4);
    std::ofstream f(dir / "panel.csv");
    f << "series_id,t,x,y\n";
    for (int i = 0; i < 3; ++i)
        for (int t = 0; t < 60; ++t)
            f << "s" << i << "," << (t + 1) << "," << 0.3 * rng.uniform01() << "," << rng.normal()
              << "\n";
    f.close();
    const RunResult r = run_cli(
        dir, "cluster --input panel.csv --locations 0.9 --bandwidths 0.05 --policy strict --out o");
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("error:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("distances subcommand writes the matrix and nothing else") {
    const fs::path dir = fresh_dir("distances");
    write_two_group_panel(dir / "panel.csv", 120);
    const RunResult r =
        run_cli(dir, "distances --input panel.csv " + kGridArgs + " --out dd");
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(dir / "dd" / "distances.csv"));
    CHECK(fs::exists(dir / "dd" / "distances_meta.json"));
    CHECK(!fs::exists(dir / "dd" / "report.json"));
    CHECK(!fs::exists(dir / "dd" / "dendrogram.json"));
    const json meta = load_json(dir / "dd" / "distances_meta.json");
    CHECK(meta.at("kernel").get<std::string>() == "epanechnikov");
    CHECK(meta.at("series_ids").size() == 6);
    fs::remove_all(dir);
}

TEST_CASE("render re-draws a stored tree") {
    const fs::path dir = fresh_dir("render");
    write_two_group_panel(dir / "panel.csv", 120);
    REQUIRE(run_cli(dir, "cluster --input panel.csv " + kGridArgs +
                             " --mc-reps 300 --seed 3 --out o")
                .exit_code == 0);
    const RunResult r = run_cli(
        dir, "render --dendrogram o/dendrogram.json --threshold 1.0 --out-svg redraw.svg");
    REQUIRE(r.exit_code == 0);
    const std::string svg = slurp(dir / "redraw.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);

    // corrupt tree: input error
    std::ofstream(dir / "broken.json") << "{}";
    CHECK(run_cli(dir, "render --dendrogram broken.json --threshold 1.0 --out-svg x.svg")
              .exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("flags override the config file, which overrides the defaults") {
    const fs::path dir = fresh_dir("precedence");
    write_two_group_panel(dir / "panel.csv", 120);
    std::ofstream(dir / "cfg.json") << R"({
        "x_list": [0.2, 0.35, 0.5, 0.65, 0.8],
        "h_list": [0.1, 0.2, 0.25],
        "alpha": 0.9,
        "seed": 7,
        "mc_reps": 300
    })";
    const RunResult r = run_cli(
        dir, "cluster --input panel.csv --config cfg.json --alpha 0.95 --out o --workers 1");
    REQUIRE(r.exit_code == 0);
    const json cfg = load_json(dir / "o" / "report.json").at("config");
    CHECK(cfg.at("alpha").get<double>() == 0.95);       // flag beats file
    CHECK(cfg.at("seed").get<std::uint64_t>() == 7);    // file beats default (1)
    CHECK(cfg.at("mc_reps").get<int>() == 300);         // file beats default (1000)
    CHECK(cfg.at("x_step").get<double>() == 0.01);      // untouched default
    CHECK(cfg.at("kernel").get<std::string>() == "epanechnikov");
    fs::remove_all(dir);
}

TEST_CASE("simulate writes a study file honoring the adjustment flag") {
    const fs::path dir = fresh_dir("simulate");
    const std::string common =
        "simulate --n 6 --T 150 --k0 2 --replications 2 --baseline 0.25 "
        "--locations 0.25 0.5 0.75 --bandwidths 0.125 0.25 --mc-reps 200 --seed 5 --out ";
    REQUIRE(run_cli(dir, common + "s1").exit_code == 0);
    const json study = load_json(dir / "s1" / "study.json");
    CHECK(study.at("fixed_effect_adjust").get<bool>() == false);
    CHECK(study.at("records").size() == 2);
    CHECK(study.at("design").at("k0").get<int>() == 2);
    CHECK(study.at("thresholds").at("baselines").size() == 1);

    REQUIRE(run_cli(dir, common + "s2 --fixed-effect-adjust").exit_code == 0);
    CHECK(load_json(dir / "s2" / "study.json").at("fixed_effect_adjust").get<bool>() == true);

    // baseline off the grid levels is an input error
    CHECK(run_cli(dir, common + "s3 --baseline 0.3").exit_code == 2);
    fs::remove_all(dir);
}
