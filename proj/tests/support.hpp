#pragma once

#include <cmath>
#include <vector>

#include "ohca/geometry.hpp"
#include "ohca/measure.hpp"
#include "ohca/response.hpp"
#include "ohca/scenario.hpp"

namespace oracle {

// Reference values computed independently at 30 significant digits.
inline constexpr double kBeta0 = 0.663515471233220;
inline constexpr double kTail0 = 0.336484528766780;
inline constexpr double kBetaPrime0 = 0.0584948249548530;
inline constexpr double kBeta1 = 0.719301608492263;
// J(b delta_y) for eta = delta_y, b = 1.
inline constexpr double kSingleAtomAtDemand = 0.123785740405559;
// J(b delta_z) for eta = delta_y, |z - y| = 1, b = 1.
inline constexpr double kSingleAtomAtDistance1 = 0.159049304664632;
// Two points at distance 1, lambda = (1/2, 1/2), b = 1, optimal J.
inline constexpr double kTwoPointOptimum = 0.137099170040136;
// 3 beta(1/sqrt 3) - 2 beta(1) - beta(0) for the default curve.
inline constexpr double kThreePointBracket = -0.0128853202029679;
// h at the centroid of the uniform vertex measure, unit equilateral triangle, b = 1.
inline constexpr double kThreePointCentroidInfluence = -0.00307757845739850;
// 1 + ln(1.5) / 2.
inline constexpr double kAlphaLambda06Budget2 = 1.20273255405408;

}  // namespace oracle

namespace testing {

using namespace ohca;

inline Problem discrete_problem(std::vector<WeightedPoint> pts, double budget, Norm norm = Norm::L2)
{
    IncidentDistribution eta(DiscreteIncidents{std::move(pts)});
    ConvexPolygon domain = support_hull(eta);
    return Problem(eta, budget, norm, DeathCurve(), domain);
}

inline std::vector<Point2> equilateral()
{
    return {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
}

inline Problem three_point_problem(double budget = 1.0, Norm norm = Norm::L2)
{
    std::vector<WeightedPoint> pts;
    for (const Point2& y : equilateral()) pts.push_back({y, 1.0 / 3.0});
    return discrete_problem(std::move(pts), budget, norm);
}

inline Problem two_point_problem(Point2 y1, Point2 y2, double lambda1, double budget, Norm norm = Norm::L2)
{
    return discrete_problem({{y1, lambda1}, {y2, 1.0 - lambda1}}, budget, norm);
}

inline Point2 random_point(Rng& rng, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    const double x = u(rng);
    return {x, u(rng)};
}

/// n distinct random demand points in the unit square with Dirichlet-like weights.
inline Problem random_discrete_problem(Rng& rng, int n, double budget, Norm norm = Norm::L2)
{
    std::uniform_real_distribution<double> w(0.1, 1.0);
    std::vector<WeightedPoint> pts;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        pts.push_back({random_point(rng), w(rng)});
        total += pts.back().probability;
    }
    for (auto& p : pts) p.probability /= total;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) s += pts[i].probability;
    pts.back().probability = 1.0 - s;
    return discrete_problem(std::move(pts), budget, norm);
}

/// Random measure with `m` atoms drawn in `domain`.
inline DiscreteMeasure random_measure(Rng& rng, const ConvexPolygon& domain, int m, double budget)
{
    std::uniform_real_distribution<double> w(0.05, 1.0);
    std::vector<Point2> support;
    std::vector<double> p;
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        support.push_back(sample_domain(domain, rng));
        p.push_back(w(rng));
        total += p.back();
    }
    for (double& x : p) x /= total;
    return DiscreteMeasure::from_simplex(support, p, budget);
}

}  // namespace testing
