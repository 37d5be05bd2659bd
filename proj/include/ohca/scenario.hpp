#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ohca/geometry.hpp"

namespace ohca {

/// Malformed or invalid scenario document.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Death probability as a function of response time,
/// beta(t) = 1 - 1 / (1 + exp(a + c t)). Requires c > 0 and a >= 0 so the
/// curve is increasing and strictly concave on [0, inf).
class DeathCurve {
public:
    static constexpr double kDefaultIntercept = 0.679;
    static constexpr double kDefaultSlope = 0.262;

    DeathCurve() : DeathCurve(kDefaultIntercept, kDefaultSlope) {}
    DeathCurve(double a, double c);

    double a() const { return a_; }
    double c() const { return c_; }

    /// beta(t); t may be +infinity (returns 1). Throws for t < 0.
    double operator()(double t) const;
    /// 1 - beta(t), computed without cancellation.
    double tail(double t) const;
    double derivative(double t) const;

private:
    double a_;
    double c_;
};

inline double beta(const DeathCurve& curve, double t) { return curve(t); }
inline double beta_prime(const DeathCurve& curve, double t) { return curve.derivative(t); }

struct WeightedPoint {
    Point2 location;
    double probability = 0.0;
};

struct WeightedRect {
    Rect rect;
    double probability = 0.0;
};

struct DiscreteIncidents {
    std::vector<WeightedPoint> points;
};

struct UniformRectIncidents {
    Rect rect;
};

struct MixtureIncidents {
    std::vector<WeightedRect> components;
};

/// Incident law: finitely many demand points, one uniform rectangle, or a
/// weighted mixture of uniform rectangles.
class IncidentDistribution {
public:
    using Variant = std::variant<DiscreteIncidents, UniformRectIncidents, MixtureIncidents>;

    IncidentDistribution(Variant v);

    const Variant& variant() const { return v_; }
    bool is_discrete() const { return std::holds_alternative<DiscreteIncidents>(v_); }
    const DiscreteIncidents& discrete() const;

private:
    Variant v_;
};

struct Problem {
    IncidentDistribution eta;
    double budget;
    Norm norm = Norm::L2;
    DeathCurve curve;
    ConvexPolygon domain;

    /// Validates budget > 0 and that `domain` covers the support hull of eta.
    Problem(IncidentDistribution eta, double budget, Norm norm, DeathCurve curve, ConvexPolygon domain);
};

Point2 sample_incident(const IncidentDistribution& eta, Rng& rng);

/// Hull of the discrete points, or of every rectangle corner.
ConvexPolygon support_hull(const IncidentDistribution& eta);

Problem parse_scenario(const nlohmann::json& doc);
Problem parse_scenario_text(const std::string& text);
Problem load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Problem& problem);

/// Synthetic city: `units` unit-square area units laid out row by row on a
/// near-square grid, each with a log-normally drawn incident weight.
Problem make_city(int units, std::uint64_t seed, double budget, Norm norm = Norm::L2);

const char* norm_name(Norm norm);

}  // namespace ohca
