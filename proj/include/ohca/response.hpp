#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ohca/geometry.hpp"
#include "ohca/measure.hpp"
#include "ohca/scenario.hpp"

namespace ohca {

// All integrals d beta(t) run over (0, inf) and carry total mass 1 - beta(0).
// The expected death probability is therefore beta(0) + J(mu).

/// Weighted incident locations (weights sum to 1): either the points of a
/// discrete eta or a frozen Monte-Carlo sample.
struct DemandSet {
    std::vector<Point2> points;
    std::vector<double> weights;

    static DemandSet from_discrete(const IncidentDistribution& eta);
    std::size_t size() const { return points.size(); }
};

/// Frozen incident draws; reproducible from the seed.
struct SampleBatch {
    std::vector<Point2> points;
    std::uint64_t seed = 0;

    static SampleBatch draw(const IncidentDistribution& eta, std::size_t n, std::uint64_t seed);
    DemandSet demand() const;
};

/// Precomputed sampler for repeated draws from eta.
class IncidentSampler {
public:
    explicit IncidentSampler(const IncidentDistribution& eta);
    Point2 operator()(Rng& rng);

private:
    std::vector<Point2> points_;
    std::vector<Rect> rects_;
    std::discrete_distribution<std::size_t> pick_;
};

/// int_0^inf exp(-mu(ball(y, t))) d beta(t), closed form over the sorted atom
/// distances from y.
double survival_integral(const DiscreteMeasure& mu, Point2 y, const DeathCurve& curve, Norm norm);

double objective(const DiscreteMeasure& mu, const DemandSet& demand, const DeathCurve& curve, Norm norm);
/// Requires a discrete eta.
double objective_exact(const DiscreteMeasure& mu, const IncidentDistribution& eta, const DeathCurve& curve, Norm norm);
double objective_mc(const DiscreteMeasure& mu, const SampleBatch& batch, const DeathCurve& curve, Norm norm);

/// Influence function h_mu(x): the rate of change of J when mu moves toward
/// budget * delta_x.
double influence(const DiscreteMeasure& mu, Point2 x, const DemandSet& demand, const DeathCurve& curve, Norm norm);

/// Gradient of h_mu under the Euclidean norm. Throws if x sits within 1e-9 of
/// a demand point.
Point2 influence_gradient(const DiscreteMeasure& mu, Point2 x, const DemandSet& demand, const DeathCurve& curve);

/// J'_mu(nu - mu) = (1/b) E_{x~nu}[h_mu(x)].
double directional_derivative(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DemandSet& demand,
                              const DeathCurve& curve, Norm norm);

/// dJ/dp_i for mu_p = sum_i p_i b delta_{x_i}.
std::vector<double> correction_gradient(std::span<const Point2> support, std::span<const double> p, double budget,
                                        const DemandSet& demand, const DeathCurve& curve, Norm norm);

struct SimulationEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

/// Monte-Carlo oracle built from the Poisson model itself: incident y ~ eta,
/// N ~ Poisson(b) volunteers drawn i.i.d. from mu / b, response time is the
/// nearest volunteer distance; averages beta(R) - beta(0).
SimulationEstimate simulate_objective(const DiscreteMeasure& mu, const IncidentDistribution& eta, const DeathCurve& curve,
                                      Norm norm, std::size_t reps, Rng& rng);

/// L = 2b + 1.
double smoothness_constant(double budget);

/// h_mu evaluated repeatedly for one fixed measure. Construction costs
/// O(n m log m) for n demand points and m atoms; each evaluation O(n log m).
class InfluenceField {
public:
    InfluenceField(const DiscreteMeasure& mu, const DemandSet& demand, const DeathCurve& curve, Norm norm);

    double value(Point2 x) const;
    /// Euclidean gradient; demand points closer than 1e-12 contribute zero
    /// (the kink has a zero subgradient there).
    double value_and_gradient(Point2 x, Point2& grad) const;
    double objective() const { return objective_; }
    Norm norm() const { return norm_; }

private:
    double segment_integral(std::size_t i, double r, double& mass_at_r) const;

    DemandSet demand_;
    DeathCurve curve_;
    Norm norm_;
    double budget_;
    double objective_ = 0.0;
    double constant_ = 0.0;
    // Per demand point i, breakpoints live in [offset_[i], offset_[i + 1]).
    std::vector<std::size_t> offset_;
    std::vector<double> dist_;
    std::vector<double> mass_;
    std::vector<double> tail_;
    std::vector<double> prefix_;
};

/// J(mu_p) and its gradient in p for a fixed support, reused across the
/// fully-corrective iterations. Each evaluation is O(n m).
class WeightObjective {
public:
    WeightObjective(std::vector<Point2> support, double budget, const DemandSet& demand, const DeathCurve& curve, Norm norm);

    double value(std::span<const double> p) const;
    double value_and_gradient(std::span<const double> p, std::vector<double>& grad) const;
    std::size_t dimension() const { return support_.size(); }
    const std::vector<Point2>& support() const { return support_; }
    double budget() const { return budget_; }

private:
    double evaluate(std::span<const double> p, std::vector<double>* grad) const;

    std::vector<Point2> support_;
    double budget_;
    std::vector<double> weights_;
    // Per demand point: atoms in distance order; group_end_ marks the end of
    // each run of equal distances; dtail_ is the beta increment of the
    // segment that starts at that group.
    std::vector<std::uint32_t> order_;
    std::vector<std::uint32_t> group_end_;
    std::vector<std::size_t> group_offset_;
    std::vector<double> dtail_;
    std::vector<double> head_;  // beta mass before the nearest atom
};

}  // namespace ohca
