#include "ohca/l1.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "ohca/response.hpp"

namespace ohca {

namespace {

std::vector<double> sorted_unique(std::vector<double> v)
{
    std::ranges::sort(v);
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

Point2 interior_point(const Rect& r, Rng& rng)
{
    // Open interval draws keep samples off the rectangle edges.
    std::uniform_real_distribution<double> u(std::nextafter(0.0, 1.0), 1.0);
    return {r.lo.x + u(rng) * r.width(), r.lo.y + u(rng) * r.height()};
}

}  // namespace

std::vector<Point2> DemandGrid::vertices() const
{
    std::vector<Point2> out;
    out.reserve(vertex_count());
    for (double x : xs)
        for (double y : ys) out.push_back({x, y});
    return out;
}

std::size_t DemandGrid::rectangle_count() const
{
    if (xs.size() < 2 || ys.size() < 2) return 0;
    return (xs.size() - 1) * (ys.size() - 1);
}

Rect DemandGrid::rectangle(std::size_t index) const
{
    if (index >= rectangle_count()) throw std::out_of_range("rectangle index out of range");
    const std::size_t j = index / (ys.size() - 1), k = index % (ys.size() - 1);
    return Rect({xs[j], ys[k]}, {xs[j + 1], ys[k + 1]});
}

Rect DemandGrid::bounding_box() const { return Rect({xs.front(), ys.front()}, {xs.back(), ys.back()}); }

DemandGrid build_grid(std::span<const Point2> points)
{
    if (points.empty()) throw std::invalid_argument("cannot build a grid from no points");
    std::vector<double> xs, ys;
    for (const Point2& p : points) {
        if (!is_finite(p)) throw std::invalid_argument("non-finite demand point");
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    return {sorted_unique(std::move(xs)), sorted_unique(std::move(ys))};
}

Problem grid_problem(const Problem& problem, const DemandGrid& grid)
{
    return Problem(problem.eta, problem.budget, problem.norm, problem.curve, ConvexPolygon::from_rect(grid.bounding_box()));
}

SolveResult l1_solve_on_grid(const Problem& problem, const SolverConfig& config)
{
    if (!problem.eta.is_discrete()) throw PreconditionError("l1grid requires a discrete incident distribution");
    if (problem.norm != Norm::L1) throw PreconditionError("l1grid requires the L1 norm");
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const DemandSet demand = DemandSet::from_discrete(problem.eta);
    const DemandGrid grid = build_grid(demand.points);
    const std::vector<Point2> support = grid.vertices();
    const WeightObjective obj(support, problem.budget, demand, problem.curve, Norm::L1);

    std::vector<double> p(support.size(), 1.0 / static_cast<double>(support.size()));
    SolveTrace trace;
    for (int k = 0; k < config.max_outer_iters; ++k) {
        const auto mu = DiscreteMeasure::from_simplex(support, p, problem.budget);
        const InfluenceField field(mu, demand, problem.curve, Norm::L1);
        TraceRecord rec{k, field.objective(), std::numeric_limits<double>::infinity(), {}, 0, 0.0};
        for (std::size_t i = 0; i < support.size(); ++i) {
            const double h = field.value(support[i]);
            if (h < rec.h_star) {
                rec.h_star = h;
                rec.x_star = support[i];
            }
            if (p[i] > 0.0) ++rec.atoms;
        }
        rec.h_star = std::min(rec.h_star, 0.0);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        trace.records.push_back(rec);
        if (std::abs(rec.h_star) < config.fw_tolerance) break;

        const CorrectionResult corr = fully_corrective(obj, p, config, 1e-10);
        const bool converged = corr.kkt_residual < 1e-10 || corr.weights == p;
        p = corr.weights;
        if (converged && k > 0) break;
    }

    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < support.size(); ++i)
        if (p[i] > 0.0) atoms.push_back({support[i], p[i] * problem.budget});
    return {DiscreteMeasure(std::move(atoms), problem.budget), std::move(trace)};
}

bool concavity_check(const DiscreteMeasure& mu, const Problem& problem, const DemandGrid& grid, std::size_t rect_index,
                     int trials, Rng& rng)
{
    const Rect r = grid.rectangle(rect_index);
    if (!(r.area() > 0.0)) return true;
    const InfluenceField field(mu, solver_demand(problem, SolverConfig{}), problem.curve, problem.norm);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < trials; ++i) {
        const Point2 x1 = interior_point(r, rng), x2 = interior_point(r, rng);
        const double t = unit(rng);
        const double mid = field.value(t * x1 + (1.0 - t) * x2);
        if (mid < t * field.value(x1) + (1.0 - t) * field.value(x2) - 1e-10) return false;
    }
    return true;
}

bool vertex_argmin_check(const DiscreteMeasure& mu, const Problem& problem, const DemandGrid& grid, std::size_t rect_index,
                         int sample_count, Rng& rng)
{
    const Rect r = grid.rectangle(rect_index);
    if (!(r.area() > 0.0)) return true;
    const InfluenceField field(mu, solver_demand(problem, SolverConfig{}), problem.curve, problem.norm);
    const double corner = std::min({field.value(r.lo), field.value(r.hi), field.value({r.lo.x, r.hi.y}),
                                    field.value({r.hi.x, r.lo.y})});
    for (int i = 0; i < sample_count; ++i)
        if (field.value(interior_point(r, rng)) < corner - 1e-10) return false;
    return true;
}

}  // namespace ohca
