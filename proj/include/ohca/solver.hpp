#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ohca/geometry.hpp"
#include "ohca/measure.hpp"
#include "ohca/response.hpp"
#include "ohca/scenario.hpp"

namespace ohca {

struct SolverConfig {
    int max_outer_iters = 100;
    int inner_restarts = 16;
    int adam_steps = 300;
    /// Adam step in units of the domain diameter.
    double adam_lr = 0.05;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Stop once |h*| drops below this value; 0 runs every iteration.
    double fw_tolerance = 0.0;
    int correction_steps = 200;
    /// Initial projected-gradient step, in units of 1 / budget^2.
    double correction_lr = 1.0;
    int mc_batch_size = 1000;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument when a count is < 1 or a rate is not positive.
    void validate() const;
};

nlohmann::json to_json(const SolverConfig& config);
SolverConfig solver_config_from_json(const nlohmann::json& j);

struct TraceRecord {
    int k = 0;
    double objective = 0.0;
    double h_star = 0.0;
    Point2 x_star;
    std::size_t atoms = 0;
    double seconds = 0.0;
};

struct SolveTrace {
    std::vector<TraceRecord> records;
};

struct SolveResult {
    DiscreteMeasure measure;
    SolveTrace trace;
};

/// Demand points the solver optimizes against: the exact discrete eta, or a
/// batch of `config.mc_batch_size` draws seeded from `config.seed`.
DemandSet solver_demand(const Problem& problem, const SolverConfig& config);

struct InfluenceMinimum {
    Point2 x;
    double h = 0.0;
};

/// Best of projected-Adam runs from uniform random starts, the current atoms
/// and the demand points. Always returns h <= 0 because the atoms' influence
/// values average to zero under mu.
InfluenceMinimum minimize_influence(const DiscreteMeasure& mu, const Problem& problem, const DemandSet& demand,
                                    const SolverConfig& config, Rng& rng);

/// Euclidean projection onto the probability simplex.
std::vector<double> simplex_project(std::span<const double> v);

struct CorrectionResult {
    std::vector<double> weights;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int steps = 0;
};

/// Minimizes J(sum_i p_i b delta_{x_i}) over the simplex by projected
/// gradient with Barzilai-Borwein steps and halving backtracking. Never
/// returns a point worse than `p_init`.
CorrectionResult fully_corrective(const WeightObjective& objective, std::span<const double> p_init, const SolverConfig& config,
                                  double kkt_tolerance = 1e-12);
CorrectionResult fully_corrective(std::span<const Point2> support, std::span<const double> p_init, const Problem& problem,
                                  const DemandSet& demand, const SolverConfig& config);

/// Max over active coordinates of |g_i - mean active g|, and over inactive
/// ones of how far g_i falls below that mean.
double kkt_residual(std::span<const double> p, std::span<const double> grad);

SolveResult fcfw_solve(const Problem& problem, const SolverConfig& config, Rng& rng);
SolveResult dfw_solve(const Problem& problem, const SolverConfig& config, Rng& rng);

/// Closed-form optimum for two demand points.
DiscreteMeasure two_point_optimum(Point2 y1, Point2 y2, double lambda1, double lambda2, double budget);

struct Certificate {
    double min_h = 0.0;
    Point2 argmin;
    bool optimal(double tolerance) const { return min_h >= -tolerance; }
};

/// Lattice scan of h over the domain, refined by projected Adam from the best
/// lattice points, every atom and every demand point.
Certificate certify(const DiscreteMeasure& mu, const Problem& problem, const DemandSet& demand, int grid_resolution,
                    const SolverConfig& config, Rng& rng);
/// Same, against the solver's demand set for `problem`.
Certificate certify(const DiscreteMeasure& mu, const Problem& problem, int grid_resolution, const SolverConfig& config,
                    Rng& rng);

/// Lattice nodes of the domain's bounding box that fall inside the domain;
/// resolution 1 gives the box center.
std::vector<Point2> domain_lattice(const ConvexPolygon& domain, int resolution);

}  // namespace ohca
