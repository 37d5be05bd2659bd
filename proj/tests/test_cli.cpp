#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "ohca/l1.hpp"
#include "support.hpp"

using namespace ohca;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = OHCA_SCENARIO_DIR;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args)
{
    args.insert(args.begin(), "measure_fw");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "measure_fw_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

void write_measure(const fs::path& p, const DiscreteMeasure& mu)
{
    std::ofstream(p) << to_json(mu).dump();
}

DiscreteMeasure uniform_vertices()
{
    std::vector<Atom> atoms;
    for (const Point2& y : testing::equilateral()) atoms.push_back({y, 1.0 / 3.0});
    return DiscreteMeasure(atoms, 1.0);
}

}  // namespace

TEST_CASE("git blob hash matches git")
{
    CHECK(cli::git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(cli::git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("solve fcfw on the three-point scenario")
{
    const fs::path dir = scratch("fcfw3");
    const auto r = run({"solve", "--scenario", (kScenarios / "three_point.json").string(), "--algo", "fcfw", "--iters", "500",
                        "--seed", "1", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(dir / "trace.csv");
    REQUIRE(rows.size() == 501);
    CHECK(rows[0] == std::vector<std::string>{"k", "J", "h_star", "x_star_x", "x_star_y", "atoms", "seconds"});
    CHECK(std::stod(rows.back()[2]) >= -1.5e-4);
    for (std::size_t k = 2; k < rows.size(); ++k) CHECK(std::stod(rows[k][1]) <= std::stod(rows[k - 1][1]));

    const auto mu = measure_from_json(nlohmann::json::parse(slurp(dir / "measure.json")));
    CHECK(mu.budget() == 1.0);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["seed"] == 1);
    CHECK(manifest["algo"] == "fcfw");
    CHECK(manifest["scenario_hash"] == cli::git_blob_hash(slurp(kScenarios / "three_point.json")));
    CHECK(solver_config_from_json(manifest["config"]).max_outer_iters == 500);
}

TEST_CASE("a run is reproducible from its manifest")
{
    const fs::path a = scratch("repro_a"), b = scratch("repro_b");
    const auto scenario = (kScenarios / "four_point.json").string();
    REQUIRE(run({"solve", "--scenario", scenario, "--algo", "dfw", "--iters", "40", "--seed", "9", "--out", a.string()}).code == 0);
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    const SolverConfig c = solver_config_from_json(manifest["config"]);
    REQUIRE(run({"solve", "--scenario", manifest["scenario"].get<std::string>(), "--algo", manifest["algo"].get<std::string>(),
                 "--iters", std::to_string(c.max_outer_iters), "--seed", std::to_string(c.seed), "--out", b.string()})
                .code == 0);
    const auto ra = read_csv(a / "trace.csv"), rb = read_csv(b / "trace.csv");
    REQUIRE(ra.size() == rb.size());
    for (std::size_t k = 1; k < ra.size(); ++k)
        for (int col = 1; col < 6; ++col) CHECK(std::abs(std::stod(ra[k][col]) - std::stod(rb[k][col])) <= 1e-12);
    CHECK(slurp(a / "measure.json") == slurp(b / "measure.json"));
}

TEST_CASE("l1grid output sits on the demand grid")
{
    const fs::path dir = scratch("l1grid");
    const fs::path scenario = kScenarios / "three_point_l1.json";
    REQUIRE(run({"solve", "--scenario", scenario.string(), "--algo", "l1grid", "--out", dir.string()}).code == 0);
    const auto mu = measure_from_json(nlohmann::json::parse(slurp(dir / "measure.json")));
    const Problem p = load_scenario(scenario);
    const auto v = build_grid(DemandSet::from_discrete(p.eta).points).vertices();
    for (const Atom& a : mu.atoms()) CHECK(std::find(v.begin(), v.end(), a.location) != v.end());
    const auto cert = run({"certify", "--scenario", scenario.string(), "--measure", (dir / "measure.json").string(), "--grid",
                           "100", "--tol", "1e-4"});
    CHECK(cert.code == 0);
}

TEST_CASE("solve error codes")
{
    const fs::path dir = scratch("errors");
    const auto missing = run({"solve", "--scenario", "/nonexistent.json", "--out", dir.string()});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("cannot open") != std::string::npos);
    const auto l2 = run({"solve", "--scenario", (kScenarios / "three_point.json").string(), "--algo", "l1grid", "--out",
                         dir.string()});
    CHECK(l2.code == 3);
    const auto cont = run({"solve", "--scenario", (kScenarios / "uniform_square.json").string(), "--algo", "l1grid", "--out",
                           dir.string()});
    CHECK(cont.code == 3);
    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << R"({"budget": 1, "eta": {"type": "discrete", "points": [{"x": 0, "y": 0, "p": 0.4}]}})";
    CHECK(run({"solve", "--scenario", bad.string(), "--out", dir.string()}).code == 2);
    CHECK(run({"solve", "--scenario", bad.string(), "--algo", "sgd", "--out", dir.string()}).code == 2);
    CHECK(run({"solve", "--scenario", (kScenarios / "two_point.json").string(), "--iters", "0", "--out", dir.string()}).code == 2);
    CHECK(run({}).code == 2);
}

TEST_CASE("influence map")
{
    const fs::path dir = scratch("map");
    const fs::path opt = dir / "opt.json";
    write_measure(opt, two_point_optimum({0, 0}, {1, 0}, 0.5, 0.5, 1.0));
    REQUIRE(run({"influence-map", "--scenario", (kScenarios / "two_point.json").string(), "--measure", opt.string(),
                 "--resolution", "200", "--out", (dir / "opt.csv").string()})
                .code == 0);
    const auto rows = read_csv(dir / "opt.csv");
    CHECK(rows[0] == std::vector<std::string>{"x", "y", "h"});
    CHECK(rows.size() == 201);  // a segment domain has one lattice row
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!rows[i][2].empty()) CHECK(std::stod(rows[i][2]) >= -1e-6);

    const fs::path uni = dir / "uniform.json";
    write_measure(uni, uniform_vertices());
    REQUIRE(run({"influence-map", "--scenario", (kScenarios / "three_point.json").string(), "--measure", uni.string(),
                 "--resolution", "201", "--out", (dir / "tri.csv").string()})
                .code == 0);
    const auto tri = read_csv(dir / "tri.csv");
    REQUIRE(tri.size() == 201 * 201 + 1);
    double best = 1.0;
    Point2 at;
    std::size_t empty = 0;
    for (std::size_t i = 1; i < tri.size(); ++i) {
        if (tri[i][2].empty()) {
            ++empty;
            continue;
        }
        const double h = std::stod(tri[i][2]);
        if (h < best) {
            best = h;
            at = {std::stod(tri[i][0]), std::stod(tri[i][1])};
        }
    }
    CHECK(empty > 0);
    CHECK(best == doctest::Approx(oracle::kThreePointCentroidInfluence).epsilon(0.01));
    CHECK(std::hypot(at.x - 0.5, at.y - std::sqrt(3.0) / 6.0) < 0.02);

    REQUIRE(run({"influence-map", "--scenario", (kScenarios / "three_point.json").string(), "--measure", uni.string(),
                 "--resolution", "1", "--out", (dir / "one.csv").string()})
                .code == 0);
    CHECK(read_csv(dir / "one.csv").size() == 2);
    const auto again = dir / "tri2.csv";
    run({"influence-map", "--scenario", (kScenarios / "three_point.json").string(), "--measure", uni.string(), "--resolution",
         "201", "--out", again.string()});
    CHECK(slurp(again) == slurp(dir / "tri.csv"));

    const fs::path heavy = dir / "heavy.json";
    write_measure(heavy, DiscreteMeasure::point_mass({0, 0}, 2.0));
    CHECK(run({"influence-map", "--scenario", (kScenarios / "two_point.json").string(), "--measure", heavy.string(), "--out",
               (dir / "x.csv").string()})
              .code == 3);
}

TEST_CASE("certify verdicts")
{
    const fs::path dir = scratch("certify");
    const fs::path opt = dir / "opt.json", uni = dir / "uniform.json";
    write_measure(opt, two_point_optimum({0, 0}, {1, 0}, 0.5, 0.5, 1.0));
    write_measure(uni, uniform_vertices());
    const auto two = (kScenarios / "two_point.json").string(), three = (kScenarios / "three_point.json").string();
    const auto ok = run({"certify", "--scenario", two, "--measure", opt.string(), "--grid", "100", "--tol", "1e-5"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("OPTIMAL(") != std::string::npos);
    const auto bad = run({"certify", "--scenario", three, "--measure", uni.string(), "--grid", "100", "--tol", "1e-3"});
    CHECK(bad.code == 4);
    CHECK(bad.out.find("NOT-OPTIMAL") != std::string::npos);
    CHECK(run({"certify", "--scenario", three, "--measure", uni.string(), "--grid", "50", "--tol", "1e9"}).code == 0);
    const fs::path heavy = dir / "heavy.json";
    write_measure(heavy, DiscreteMeasure::point_mass({0, 0}, 2.0));
    CHECK(run({"certify", "--scenario", two, "--measure", heavy.string()}).code == 3);
    CHECK(run({"certify", "--scenario", two, "--measure", (dir / "none.json").string()}).code == 2);
}

TEST_CASE("oracle two-point")
{
    const auto r = run({"oracle", "two-point", "--lambda1", "0.5", "--lambda2", "0.5", "--budget", "1"});
    REQUIRE(r.code == 0);
    const auto mu = measure_from_json(nlohmann::json::parse(r.out));
    REQUIRE(mu.size() == 2);
    CHECK(mu.atoms()[0].weight == doctest::Approx(0.5));
    CHECK(mu.atoms()[1].weight == doctest::Approx(0.5));
    const auto edge = measure_from_json(nlohmann::json::parse(run({"oracle", "two-point", "--lambda1", "1", "--lambda2", "0"}).out));
    REQUIRE(edge.size() == 1);
    CHECK(edge.atoms()[0].weight == doctest::Approx(1.0));
    CHECK(edge.atoms()[0].location == Point2{0, 0});
    CHECK(run({"oracle", "two-point", "--lambda1", "0.7", "--lambda2", "0.7"}).code == 2);
    CHECK(run({"oracle", "two-point", "--lambda1", "-0.5", "--lambda2", "1.5"}).code == 2);
}

TEST_CASE("oracle simulate")
{
    const fs::path dir = scratch("simulate");
    const fs::path m = dir / "atom.json";
    write_measure(m, DiscreteMeasure::point_mass({0, 0}, 1.0));
    const auto r = run({"oracle", "simulate", "--scenario", (kScenarios / "single_point.json").string(), "--measure", m.string(),
                        "--reps", "1000000", "--seed", "3"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    const double est = doc["estimate"], se = doc["standard_error"];
    CHECK(std::abs(est - oracle::kSingleAtomAtDemand) <= 3.0 * se);
    CHECK(doc["exact"].get<double>() == doctest::Approx(oracle::kSingleAtomAtDemand).epsilon(1e-12));
}

TEST_CASE("make-city")
{
    const fs::path dir = scratch("city");
    REQUIRE(run({"make-city", "--units", "287", "--seed", "5", "--out", (dir / "a.json").string()}).code == 0);
    REQUIRE(run({"make-city", "--units", "287", "--seed", "5", "--out", (dir / "b.json").string()}).code == 0);
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    const Problem city = load_scenario(dir / "a.json");
    const auto& comps = std::get<MixtureIncidents>(city.eta.variant()).components;
    CHECK(comps.size() == 287);
    double sum = 0.0;
    for (const auto& c : comps) sum += c.probability;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(run({"make-city", "--units", "1", "--out", (dir / "one.json").string()}).code == 0);
    CHECK(load_scenario(dir / "one.json").eta.variant().index() == 1);
    CHECK(run({"make-city", "--units", "0", "--out", (dir / "zero.json").string()}).code == 2);
    CHECK_FALSE(fs::exists(dir / "zero.json"));
}

TEST_CASE("the installed binary reports exit codes")
{
    const std::string bin = OHCA_CLI_PATH;
    CHECK(std::system((bin + " make-city --units 0 --out /dev/null 2>/dev/null").c_str()) != 0);
    const fs::path dir = scratch("binary");
    const std::string cmd = "MEASURE_FW_THREADS=2 " + bin + " solve --scenario " + (kScenarios / "two_point.json").string() +
                            " --iters 20 --out " + dir.string() + " > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "trace.csv"));
}
