#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <unistd.h>

#include "ohca/l1.hpp"
#include "ohca/measure.hpp"
#include "ohca/parallel.hpp"
#include "ohca/response.hpp"
#include "ohca/scenario.hpp"
#include "ohca/solver.hpp"

namespace ohca::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double v)
{
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

DiscreteMeasure load_measure(const fs::path& path)
{
    try {
        return measure_from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw InputError("measure " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError("measure " + path.string() + ": " + e.what());
    }
}

void require_budget(const DiscreteMeasure& mu, const Problem& problem)
{
    if (std::abs(mu.budget() - problem.budget) > 1e-9 * problem.budget)
        throw PreconditionError("measure budget " + format_double(mu.budget()) + " does not match scenario budget " +
                                format_double(problem.budget));
}

std::string trace_csv(const SolveTrace& trace)
{
    std::ostringstream ss;
    ss << std::setprecision(17) << "k,J,h_star,x_star_x,x_star_y,atoms,seconds\n";
    for (const TraceRecord& r : trace.records)
        ss << r.k << ',' << r.objective << ',' << r.h_star << ',' << r.x_star.x << ',' << r.x_star.y << ',' << r.atoms
           << ',' << r.seconds << '\n';
    return ss.str();
}

std::string join_argv(int argc, const char* const* argv)
{
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

void apply_thread_env()
{
    const char* env = std::getenv("MEASURE_FW_THREADS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 0) throw InputError("MEASURE_FW_THREADS must be a nonnegative integer");
    set_thread_count(static_cast<std::size_t>(n));
}

struct SolveArgs {
    std::string scenario;
    std::string algo = "fcfw";
    int iters = 100;
    std::uint64_t seed = 0;
    std::string out;
    int batch = SolverConfig{}.mc_batch_size;
    double tol = 0.0;
    int restarts = SolverConfig{}.inner_restarts;
    int adam_steps = SolverConfig{}.adam_steps;
    int correction_steps = SolverConfig{}.correction_steps;
};

int cmd_solve(const SolveArgs& a, const std::string& command, std::ostream& out)
{
    const std::string scenario_text = read_file(a.scenario);
    const Problem problem = parse_scenario_text(scenario_text);
    SolverConfig config;
    config.max_outer_iters = a.iters;
    config.seed = a.seed;
    config.mc_batch_size = a.batch;
    config.fw_tolerance = a.tol;
    config.inner_restarts = a.restarts;
    config.adam_steps = a.adam_steps;
    config.correction_steps = a.correction_steps;
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }

    Rng rng(a.seed);
    SolveResult result = [&] {
        if (a.algo == "fcfw") return fcfw_solve(problem, config, rng);
        if (a.algo == "dfw") return dfw_solve(problem, config, rng);
        return l1_solve_on_grid(problem, config);
    }();

    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_atomic(dir / "measure.json", to_json(result.measure).dump(2) + "\n");
    write_atomic(dir / "trace.csv", trace_csv(result.trace));
    const json manifest = {{"command", command},
                           {"subcommand", "solve"},
                           {"algo", a.algo},
                           {"scenario", fs::absolute(a.scenario).string()},
                           {"scenario_hash", git_blob_hash(scenario_text)},
                           {"config", to_json(config)},
                           {"seed", a.seed},
                           {"threads", thread_count()},
                           {"output_dir", fs::absolute(dir).string()}};
    write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

    const TraceRecord& last = result.trace.records.back();
    out << std::setprecision(17) << "J " << last.objective << "\nh_star " << last.h_star << "\natoms "
        << result.measure.size() << "\n";
    return kOk;
}

struct FieldArgs {
    std::string scenario;
    std::string measure;
    int resolution = 100;
    std::string out;
    double tol = 1e-5;
    std::uint64_t seed = 0;
    int batch = SolverConfig{}.mc_batch_size;
};

int cmd_influence_map(const FieldArgs& a)
{
    if (a.resolution < 1) throw InputError("--resolution must be at least 1");
    const Problem problem = parse_scenario_text(read_file(a.scenario));
    const DiscreteMeasure mu = load_measure(a.measure);
    require_budget(mu, problem);
    SolverConfig config;
    config.seed = a.seed;
    config.mc_batch_size = a.batch;
    const InfluenceField field(mu, solver_demand(problem, config), problem.curve, problem.norm);

    const Rect box = problem.domain.bounding_box();
    const int r = a.resolution;
    std::vector<Point2> nodes;
    // A flat axis collapses to a single lattice line.
    const int nx = box.width() > 0.0 ? r : 1, ny = box.height() > 0.0 ? r : 1;
    auto coord = [](double lo, double len, int i, int n) { return n == 1 ? lo + 0.5 * len : lo + len * i / (n - 1); };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            nodes.push_back({coord(box.lo.x, box.width(), i, nx), coord(box.lo.y, box.height(), j, ny)});
    std::vector<double> h(nodes.size(), std::numeric_limits<double>::quiet_NaN());
    parallel_for(nodes.size(), [&](std::size_t i) {
        if (contains(problem.domain, nodes[i])) h[i] = field.value(nodes[i]);
    });
    std::ostringstream ss;
    ss << std::setprecision(17) << "x,y,h\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        ss << nodes[i].x << ',' << nodes[i].y << ',';
        if (!std::isnan(h[i])) ss << h[i];
        ss << '\n';
    }
    write_atomic(a.out, ss.str());
    return kOk;
}

int cmd_certify(const FieldArgs& a, std::ostream& out)
{
    if (a.resolution < 1) throw InputError("--grid must be at least 1");
    const Problem problem = parse_scenario_text(read_file(a.scenario));
    const DiscreteMeasure mu = load_measure(a.measure);
    require_budget(mu, problem);
    SolverConfig config;
    config.seed = a.seed;
    config.mc_batch_size = a.batch;
    Rng rng(a.seed);
    const Certificate cert = certify(mu, problem, a.resolution, config, rng);
    const bool ok = cert.optimal(a.tol);
    out << std::setprecision(17) << "min_h " << cert.min_h << "\nargmin " << cert.argmin.x << ' ' << cert.argmin.y
        << "\nverdict " << (ok ? "OPTIMAL(" + format_double(a.tol) + ")" : std::string("NOT-OPTIMAL")) << "\n";
    return ok ? kOk : kNotCertified;
}

struct TwoPointArgs {
    std::vector<double> y1{0.0, 0.0};
    std::vector<double> y2{1.0, 0.0};
    double lambda1 = 0.5;
    double lambda2 = 0.5;
    double budget = 1.0;
};

int cmd_two_point(const TwoPointArgs& a, std::ostream& out)
{
    DiscreteMeasure mu;
    try {
        mu = two_point_optimum({a.y1[0], a.y1[1]}, {a.y2[0], a.y2[1]}, a.lambda1, a.lambda2, a.budget);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    out << to_json(mu).dump(2) << "\n";
    return kOk;
}

struct SimulateArgs {
    std::string scenario;
    std::string measure;
    std::size_t reps = 100000;
    std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out)
{
    const Problem problem = parse_scenario_text(read_file(a.scenario));
    const DiscreteMeasure mu = load_measure(a.measure);
    require_budget(mu, problem);
    if (a.reps < 2) throw InputError("--reps must be at least 2");
    Rng rng(a.seed);
    const SimulationEstimate est = simulate_objective(mu, problem.eta, problem.curve, problem.norm, a.reps, rng);
    json doc = {{"estimate", est.estimate}, {"standard_error", est.standard_error}, {"reps", a.reps}, {"seed", a.seed}};
    if (problem.eta.is_discrete()) doc["exact"] = objective_exact(mu, problem.eta, problem.curve, problem.norm);
    out << doc.dump(2) << "\n";
    return kOk;
}

struct CityArgs {
    int units = 287;
    std::uint64_t seed = 0;
    std::string out;
    double budget = 1.0;
    std::string norm = "l2";
};

int cmd_make_city(const CityArgs& a)
{
    if (a.units < 1) throw InputError("--units must be at least 1");
    if (!(a.budget > 0.0)) throw InputError("--budget must be positive");
    const Problem city = make_city(a.units, a.seed, a.budget, a.norm == "l1" ? Norm::L1 : Norm::L2);
    write_atomic(a.out, scenario_to_json(city).dump(2) + "\n");
    return kOk;
}

}  // namespace

std::string git_blob_hash(std::string_view content)
{
    std::string blob = "blob " + std::to_string(content.size());
    blob.push_back('\0');
    blob.append(content);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(blob.data(), blob.size(), digest, &length, EVP_sha1(), nullptr) != 1)
        throw std::runtime_error("SHA-1 failed");
    std::ostringstream ss;
    for (unsigned char c : std::span(digest, length)) ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
    return ss.str();
}

void write_atomic(const fs::path& path, std::string_view content)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Volunteer allocation by fully-corrective Frank-Wolfe over discrete measures", "measure_fw"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "Run a solver on a scenario");
    s->add_option("--scenario", solve.scenario, "Scenario JSON")->required();
    s->add_option("--algo", solve.algo, "fcfw, dfw or l1grid")->check(CLI::IsMember({"fcfw", "dfw", "l1grid"}));
    s->add_option("--iters", solve.iters, "Outer iterations");
    s->add_option("--seed", solve.seed, "Random seed");
    s->add_option("--out", solve.out, "Output directory")->required();
    s->add_option("--batch", solve.batch, "Frozen sample size for continuous incidents");
    s->add_option("--tol", solve.tol, "Stop once |h*| falls below this");
    s->add_option("--restarts", solve.restarts, "Adam restarts per iteration");
    s->add_option("--adam-steps", solve.adam_steps, "Adam steps per restart");
    s->add_option("--correction-steps", solve.correction_steps, "Projected-gradient steps per corrective solve");

    FieldArgs map;
    auto* m = app.add_subcommand("influence-map", "Evaluate h on a lattice over the domain");
    m->add_option("--scenario", map.scenario)->required();
    m->add_option("--measure", map.measure)->required();
    m->add_option("--resolution", map.resolution, "Nodes per axis");
    m->add_option("--out", map.out, "Output CSV")->required();
    m->add_option("--seed", map.seed, "Sample seed for continuous incidents");
    m->add_option("--batch", map.batch, "Sample size for continuous incidents");

    FieldArgs cert;
    auto* c = app.add_subcommand("certify", "Check h >= -tol over the domain");
    c->add_option("--scenario", cert.scenario)->required();
    c->add_option("--measure", cert.measure)->required();
    c->add_option("--grid", cert.resolution, "Lattice nodes per axis");
    c->add_option("--tol", cert.tol, "Certificate tolerance");
    c->add_option("--seed", cert.seed, "Seed for sampling and refinement");
    c->add_option("--batch", cert.batch, "Sample size for continuous incidents");

    auto* o = app.add_subcommand("oracle", "Closed-form and simulation oracles");
    o->require_subcommand(1);
    TwoPointArgs two;
    auto* tp = o->add_subcommand("two-point", "Optimal measure for two demand points");
    tp->add_option("--y1", two.y1, "First demand point x y")->expected(2);
    tp->add_option("--y2", two.y2, "Second demand point x y")->expected(2);
    tp->add_option("--lambda1", two.lambda1);
    tp->add_option("--lambda2", two.lambda2);
    tp->add_option("--budget", two.budget);
    SimulateArgs sim;
    auto* sm = o->add_subcommand("simulate", "Monte-Carlo estimate of J from the Poisson model");
    sm->add_option("--scenario", sim.scenario)->required();
    sm->add_option("--measure", sim.measure)->required();
    sm->add_option("--reps", sim.reps);
    sm->add_option("--seed", sim.seed);

    CityArgs city;
    auto* mc = app.add_subcommand("make-city", "Write a synthetic mixture scenario");
    mc->add_option("--units", city.units)->required();
    mc->add_option("--seed", city.seed);
    mc->add_option("--out", city.out)->required();
    mc->add_option("--budget", city.budget);
    mc->add_option("--norm", city.norm)->check(CLI::IsMember({"l1", "l2"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        apply_thread_env();
        if (*s) return cmd_solve(solve, join_argv(argc, argv), out);
        if (*m) return cmd_influence_map(map);
        if (*c) return cmd_certify(cert, out);
        if (*tp) return cmd_two_point(two, out);
        if (*sm) return cmd_simulate(sim, out);
        if (*mc) return cmd_make_city(city);
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << "\n";
        return kPreconditionError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return kInputError;
}

}  // namespace ohca::cli
