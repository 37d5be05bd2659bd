#include "ohca/solver.hpp"

#include <algorithm>
#include <chrono>
#include <iterator>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ohca/parallel.hpp"

namespace ohca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAtomMergeEps = 1e-9;
// Demand sets larger than this are not used as candidate or refinement starts.
constexpr std::size_t kMaxDemandStarts = 256;
// Batch points used to form the approximate grid under L1.
constexpr std::size_t kL1GridSample = 64;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

InfluenceMinimum adam_descent(const InfluenceField& field, const ConvexPolygon& domain, Point2 start,
                              const SolverConfig& config, double lr)
{
    Point2 x = project(domain, start);
    Point2 grad;
    InfluenceMinimum best{x, field.value_and_gradient(x, grad)};
    Point2 m{}, v{};
    double b1t = 1.0, b2t = 1.0;
    for (int t = 0; t < config.adam_steps; ++t) {
        b1t *= config.adam_beta1;
        b2t *= config.adam_beta2;
        m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * grad;
        v.x = config.adam_beta2 * v.x + (1.0 - config.adam_beta2) * grad.x * grad.x;
        v.y = config.adam_beta2 * v.y + (1.0 - config.adam_beta2) * grad.y * grad.y;
        const double mx = m.x / (1.0 - b1t), my = m.y / (1.0 - b1t);
        const double vx = v.x / (1.0 - b2t), vy = v.y / (1.0 - b2t);
        x = project(domain, {x.x - lr * mx / (std::sqrt(vx) + config.adam_eps),
                             x.y - lr * my / (std::sqrt(vy) + config.adam_eps)});
        const double h = field.value_and_gradient(x, grad);
        if (h < best.h) best = {x, h};
    }
    return best;
}

void consider(InfluenceMinimum& best, const InfluenceField& field, Point2 x)
{
    const double h = field.value(x);
    if (h < best.h) best = {x, h};
}

// Vertices of the coordinate grid spanned by `pts`, moved into the domain.
std::vector<Point2> grid_vertices(std::span<const Point2> pts, const ConvexPolygon& domain)
{
    std::vector<double> xs, ys;
    for (const Point2& p : pts) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    std::ranges::sort(xs);
    std::ranges::sort(ys);
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    std::vector<Point2> out;
    out.reserve(xs.size() * ys.size());
    for (double x : xs)
        for (double y : ys) out.push_back(project(domain, {x, y}));
    return out;
}

std::vector<Point2> l1_candidates(const DemandSet& demand, const ConvexPolygon& domain, Rng& rng)
{
    if (demand.size() <= kL1GridSample) return grid_vertices(demand.points, domain);
    std::vector<Point2> sample;
    std::ranges::sample(demand.points, std::back_inserter(sample), kL1GridSample, rng);
    return grid_vertices(sample, domain);
}

std::vector<double> line_point(std::span<const double> p, std::size_t new_index, double t)
{
    std::vector<double> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[i] = (1.0 - t) * p[i];
    q[new_index] += t;
    return q;
}

// Best point on the segment from `p` toward the vertex e_new: golden-section
// search plus the fixed trial steps.
std::vector<double> segment_search(const WeightObjective& obj, std::span<const double> p, std::size_t new_index,
                                   std::span<const double> trial_steps)
{
    std::vector<double> best(p.begin(), p.end());
    double best_f = obj.value(best);
    auto try_t = [&](double t) {
        auto q = line_point(p, new_index, t);
        const double f = obj.value(q);
        if (f < best_f) {
            best_f = f;
            best = std::move(q);
        }
        return f;
    };
    for (double t : trial_steps) try_t(std::clamp(t, 0.0, 1.0));
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = 1.0;
    double t1 = hi - phi * (hi - lo), t2 = lo + phi * (hi - lo);
    double f1 = try_t(t1), f2 = try_t(t2);
    for (int it = 0; it < 40 && hi - lo > 1e-10; ++it) {
        if (f1 <= f2) {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - phi * (hi - lo);
            f1 = try_t(t1);
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + phi * (hi - lo);
            f2 = try_t(t2);
        }
    }
    return best;
}

std::size_t find_atom(std::span<const Point2> support, Point2 x)
{
    for (std::size_t i = 0; i < support.size(); ++i)
        if (distance(support[i], x, Norm::L2) <= kAtomMergeEps) return i;
    return support.size();
}

TraceRecord make_record(int k, double J, const InfluenceMinimum& star, std::size_t atoms, Clock::time_point t0)
{
    return {k, J, star.h, star.x, atoms, seconds_since(t0)};
}

}  // namespace

void SolverConfig::validate() const
{
    if (max_outer_iters < 1 || inner_restarts < 1 || adam_steps < 1 || correction_steps < 1 || mc_batch_size < 1)
        throw std::invalid_argument("solver counts must be at least 1");
    if (!(adam_lr > 0.0) || !(correction_lr > 0.0) || !(adam_eps > 0.0))
        throw std::invalid_argument("learning rates must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw std::invalid_argument("Adam decay rates must lie in [0, 1)");
    if (!(fw_tolerance >= 0.0)) throw std::invalid_argument("fw_tolerance must be nonnegative");
}

nlohmann::json to_json(const SolverConfig& c)
{
    return {{"max_outer_iters", c.max_outer_iters},
            {"inner_restarts", c.inner_restarts},
            {"adam_steps", c.adam_steps},
            {"adam_lr", c.adam_lr},
            {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps},
            {"fw_tolerance", c.fw_tolerance},
            {"correction_steps", c.correction_steps},
            {"correction_lr", c.correction_lr},
            {"mc_batch_size", c.mc_batch_size},
            {"seed", c.seed}};
}

SolverConfig solver_config_from_json(const nlohmann::json& j)
{
    SolverConfig c;
    c.max_outer_iters = j.value("max_outer_iters", c.max_outer_iters);
    c.inner_restarts = j.value("inner_restarts", c.inner_restarts);
    c.adam_steps = j.value("adam_steps", c.adam_steps);
    c.adam_lr = j.value("adam_lr", c.adam_lr);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.fw_tolerance = j.value("fw_tolerance", c.fw_tolerance);
    c.correction_steps = j.value("correction_steps", c.correction_steps);
    c.correction_lr = j.value("correction_lr", c.correction_lr);
    c.mc_batch_size = j.value("mc_batch_size", c.mc_batch_size);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

DemandSet solver_demand(const Problem& problem, const SolverConfig& config)
{
    if (problem.eta.is_discrete()) return DemandSet::from_discrete(problem.eta);
    return SampleBatch::draw(problem.eta, static_cast<std::size_t>(config.mc_batch_size), config.seed).demand();
}

InfluenceMinimum minimize_influence(const DiscreteMeasure& mu, const Problem& problem, const DemandSet& demand,
                                    const SolverConfig& config, Rng& rng)
{
    const InfluenceField field(mu, demand, problem.curve, problem.norm);
    InfluenceMinimum best{{}, kInf};
    for (const Atom& a : mu.atoms()) consider(best, field, a.location);
    if (problem.eta.is_discrete() || demand.size() <= kMaxDemandStarts)
        for (const Point2& y : demand.points) consider(best, field, project(problem.domain, y));

    std::vector<Point2> starts(static_cast<std::size_t>(config.inner_restarts));
    for (Point2& s : starts) s = sample_domain(problem.domain, rng);

    if (problem.norm == Norm::L1) {
        // h is concave on every cell of the demand grid, so cell corners and
        // the domain's own corners are the natural candidates.
        for (const Point2& v : l1_candidates(demand, problem.domain, rng)) consider(best, field, v);
        for (const Point2& v : problem.domain.vertices()) consider(best, field, v);
        for (const Point2& s : starts) consider(best, field, s);
    } else {
        const double lr = config.adam_lr * problem.domain.diameter();
        std::vector<InfluenceMinimum> runs(starts.size());
        if (lr > 0.0) {
            parallel_for(starts.size(), [&](std::size_t i) { runs[i] = adam_descent(field, problem.domain, starts[i], config, lr); });
        } else {
            for (std::size_t i = 0; i < starts.size(); ++i) runs[i] = {starts[i], field.value(starts[i])};
        }
        for (const InfluenceMinimum& r : runs)
            if (r.h < best.h) best = r;
    }
    // The atoms average to zero under mu, so only rounding can push this above 0.
    best.h = std::min(best.h, 0.0);
    return best;
}

std::vector<double> simplex_project(std::span<const double> v)
{
    if (v.empty()) throw std::invalid_argument("cannot project an empty vector");
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("cannot project a non-finite vector");
    std::vector<double> u(v.begin(), v.end());
    std::ranges::sort(u, std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    std::vector<double> out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::max(v[i] - theta, 0.0);
        total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
}

double kkt_residual(std::span<const double> p, std::span<const double> grad)
{
    double sum = 0.0;
    std::size_t active = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 1e-8) {
            sum += grad[i];
            ++active;
        }
    if (active == 0) return kInf;
    const double mean = sum / static_cast<double>(active);
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 1e-8)
            r = std::max(r, std::abs(grad[i] - mean));
        else
            r = std::max(r, mean - grad[i]);
    }
    return r;
}

CorrectionResult fully_corrective(const WeightObjective& obj, std::span<const double> p_init, const SolverConfig& config,
                                  double kkt_tolerance)
{
    const std::size_t m = obj.dimension();
    if (p_init.size() != m) throw std::invalid_argument("weight vector does not match the support");
    std::vector<double> p = simplex_project(p_init);
    std::vector<double> g;
    double f = obj.value_and_gradient(p, g);
    CorrectionResult res;
    if (m == 1) {
        res.weights = {1.0};
        res.objective = f;
        return res;
    }
    const double scale = 1.0 / (obj.budget() * obj.budget());
    double step = config.correction_lr * scale;
    std::vector<double> trial(m), q, gq;
    int steps = 0;
    for (; steps < config.correction_steps; ++steps) {
        if (kkt_residual(p, g) < kkt_tolerance) break;
        bool accepted = false;
        double fq = f;
        for (int halving = 0; halving < 60; ++halving) {
            for (std::size_t i = 0; i < m; ++i) trial[i] = p[i] - step * g[i];
            q = simplex_project(trial);
            double gd = 0.0, dd = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                gd += g[i] * (q[i] - p[i]);
                dd += (q[i] - p[i]) * (q[i] - p[i]);
            }
            if (dd == 0.0) break;
            fq = obj.value_and_gradient(q, gq);
            if (fq <= f + 1e-4 * gd) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        // Barzilai-Borwein step for the next iteration.
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double s = q[i] - p[i];
            ss += s * s;
            sy += s * (gq[i] - g[i]);
        }
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-10 * scale, 1e10 * scale) : 2.0 * step;
        p.swap(q);
        g.swap(gq);
        f = fq;
    }
    res.weights = std::move(p);
    res.objective = f;
    res.kkt_residual = kkt_residual(res.weights, g);
    res.steps = steps;
    return res;
}

CorrectionResult fully_corrective(std::span<const Point2> support, std::span<const double> p_init, const Problem& problem,
                                  const DemandSet& demand, const SolverConfig& config)
{
    const WeightObjective obj(std::vector<Point2>(support.begin(), support.end()), problem.budget, demand, problem.curve,
                              problem.norm);
    return fully_corrective(obj, p_init, config);
}

SolveResult fcfw_solve(const Problem& problem, const SolverConfig& config, Rng& rng)
{
    config.validate();
    const auto t0 = Clock::now();
    const DemandSet demand = solver_demand(problem, config);
    const double b = problem.budget;
    const double L = smoothness_constant(b);
    const double R = b;

    std::vector<Point2> support{sample_domain(problem.domain, rng)};
    std::vector<double> p{1.0};
    double J = WeightObjective(support, b, demand, problem.curve, problem.norm).value(p);
    SolveTrace trace;

    for (int k = 0; k < config.max_outer_iters; ++k) {
        const auto mu = DiscreteMeasure::from_simplex(support, p, b);
        const InfluenceMinimum star = minimize_influence(mu, problem, demand, config, rng);
        trace.records.push_back(make_record(k, J, star, support.size(), t0));
        if (std::abs(star.h) < config.fw_tolerance) break;

        const std::size_t idx = find_atom(support, star.x);
        if (idx == support.size()) {
            support.push_back(star.x);
            p.push_back(0.0);
        }
        const WeightObjective obj(support, b, demand, problem.curve, problem.norm);
        // The segment toward b delta_{x*} contains the sufficient-decrease point.
        const double kk = static_cast<double>(k);
        const double t_lemma = std::min(-b * star.h / (L * R * R), 1.0);
        const double trials[] = {t_lemma, 1.0 / (kk + 2.0), 2.0 / (kk + 2.0), 0.5, 1.0};
        const std::vector<double> start = segment_search(obj, p, idx, trials);
        CorrectionResult corr = fully_corrective(obj, start, config);
        if (corr.objective > J) {
            // Keep the previous iterate if rounding ever made the step worse.
            corr.weights = p;
            corr.objective = obj.value(p);
        }
        J = corr.objective;
        std::vector<Point2> kept_support;
        std::vector<double> kept_p;
        for (std::size_t i = 0; i < support.size(); ++i)
            if (corr.weights[i] > 0.0) {
                kept_support.push_back(support[i]);
                kept_p.push_back(corr.weights[i]);
            }
        support = std::move(kept_support);
        p = std::move(kept_p);
    }
    return {DiscreteMeasure::from_simplex(support, p, b), std::move(trace)};
}

SolveResult dfw_solve(const Problem& problem, const SolverConfig& config, Rng& rng)
{
    config.validate();
    const auto t0 = Clock::now();
    const DemandSet demand = solver_demand(problem, config);
    const double b = problem.budget;

    std::vector<Point2> support{sample_domain(problem.domain, rng)};
    std::vector<double> p{1.0};
    SolveTrace trace;
    for (int k = 0; k < config.max_outer_iters; ++k) {
        const auto mu = DiscreteMeasure::from_simplex(support, p, b);
        const double J = objective(mu, demand, problem.curve, problem.norm);
        const InfluenceMinimum star = minimize_influence(mu, problem, demand, config, rng);
        trace.records.push_back(make_record(k, J, star, support.size(), t0));
        if (std::abs(star.h) < config.fw_tolerance) break;

        const double eta = 2.0 / (static_cast<double>(k) + 2.0);
        for (double& w : p) w *= 1.0 - eta;
        const std::size_t idx = find_atom(support, star.x);
        if (idx == support.size()) {
            support.push_back(star.x);
            p.push_back(eta);
        } else {
            p[idx] += eta;
        }
        std::vector<Point2> kept_support;
        std::vector<double> kept_p;
        for (std::size_t i = 0; i < support.size(); ++i)
            if (p[i] >= 1e-12) {
                kept_support.push_back(support[i]);
                kept_p.push_back(p[i]);
            }
        const double total = std::accumulate(kept_p.begin(), kept_p.end(), 0.0);
        for (double& w : kept_p) w /= total;
        support = std::move(kept_support);
        p = std::move(kept_p);
    }
    return {DiscreteMeasure::from_simplex(support, p, b), std::move(trace)};
}

DiscreteMeasure two_point_optimum(Point2 y1, Point2 y2, double lambda1, double lambda2, double budget)
{
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || std::abs(lambda1 + lambda2 - 1.0) > 1e-9)
        throw std::invalid_argument("probabilities must be nonnegative and sum to 1");
    if (!(budget > 0.0) || !std::isfinite(budget)) throw std::invalid_argument("budget must be positive");
    double alpha1;
    if (lambda2 == 0.0)
        alpha1 = budget;
    else if (lambda1 == 0.0)
        alpha1 = 0.0;
    else
        alpha1 = std::clamp(0.5 * budget + 0.5 * std::log(lambda1 / lambda2), 0.0, budget);
    const double alpha2 = budget - alpha1;
    std::vector<Atom> atoms;
    if (y1 == y2) return DiscreteMeasure::point_mass(y1, budget);
    if (alpha1 > 0.0) atoms.push_back({y1, alpha1});
    if (alpha2 > 0.0) atoms.push_back({y2, alpha2});
    return DiscreteMeasure(std::move(atoms), budget);
}

std::vector<Point2> domain_lattice(const ConvexPolygon& domain, int resolution)
{
    if (resolution < 1) throw std::invalid_argument("grid resolution must be at least 1");
    const Rect box = domain.bounding_box();
    std::vector<Point2> out;
    if (resolution == 1) {
        out.push_back(project(domain, 0.5 * (box.lo + box.hi)));
        return out;
    }
    const double dx = box.width() / (resolution - 1), dy = box.height() / (resolution - 1);
    if (domain.degenerate()) {
        const Point2 a = domain.vertices().front(), c = domain.vertices().back();
        for (int i = 0; i < resolution; ++i) out.push_back(a + (static_cast<double>(i) / (resolution - 1)) * (c - a));
        return out;
    }
    for (int j = 0; j < resolution; ++j)
        for (int i = 0; i < resolution; ++i) {
            const Point2 x{box.lo.x + i * dx, box.lo.y + j * dy};
            if (contains(domain, x)) out.push_back(x);
        }
    return out;
}

Certificate certify(const DiscreteMeasure& mu, const Problem& problem, const DemandSet& demand, int grid_resolution,
                    const SolverConfig& config, Rng& rng)
{
    const InfluenceField field(mu, demand, problem.curve, problem.norm);
    const std::vector<Point2> lattice = domain_lattice(problem.domain, grid_resolution);
    std::vector<double> values(lattice.size());
    parallel_for(lattice.size(), [&](std::size_t i) { values[i] = field.value(lattice[i]); });

    InfluenceMinimum best{{}, kInf};
    for (std::size_t i = 0; i < lattice.size(); ++i)
        if (values[i] < best.h) best = {lattice[i], values[i]};

    std::vector<Point2> starts;
    std::vector<std::size_t> order(lattice.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t top = std::min<std::size_t>(8, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                      [&](std::size_t a, std::size_t c) { return values[a] < values[c]; });
    for (std::size_t i = 0; i < top; ++i) starts.push_back(lattice[order[i]]);
    for (const Atom& a : mu.atoms()) starts.push_back(a.location);
    if (demand.size() <= kMaxDemandStarts)
        for (const Point2& y : demand.points) starts.push_back(project(problem.domain, y));

    if (problem.norm == Norm::L1) {
        for (const Point2& s : starts) consider(best, field, s);
        for (const Point2& v : l1_candidates(demand, problem.domain, rng)) consider(best, field, v);
        for (const Point2& v : problem.domain.vertices()) consider(best, field, v);
    } else {
        const double lr = config.adam_lr * problem.domain.diameter();
        std::vector<InfluenceMinimum> runs(starts.size());
        parallel_for(starts.size(), [&](std::size_t i) {
            runs[i] = lr > 0.0 ? adam_descent(field, problem.domain, starts[i], config, lr)
                               : InfluenceMinimum{starts[i], field.value(starts[i])};
        });
        for (const InfluenceMinimum& r : runs)
            if (r.h < best.h) best = r;
    }
    return {best.h, best.x};
}

Certificate certify(const DiscreteMeasure& mu, const Problem& problem, int grid_resolution, const SolverConfig& config,
                    Rng& rng)
{
    return certify(mu, problem, solver_demand(problem, config), grid_resolution, config, rng);
}

}  // namespace ohca
