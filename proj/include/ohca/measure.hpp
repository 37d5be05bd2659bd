#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "ohca/geometry.hpp"

namespace ohca {

struct Atom {
    Point2 location;
    double weight = 0.0;
};

/// Finite atomic measure with nonnegative weights summing to `budget`.
/// Immutable once built.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    /// Throws std::invalid_argument on negative/non-finite weights, non-finite
    /// locations, or a weight sum that misses `budget` by more than 1e-9 relative.
    DiscreteMeasure(std::vector<Atom> atoms, double budget);

    /// sum_i p_i * budget * delta_{support_i}; p must lie on the unit simplex.
    static DiscreteMeasure from_simplex(std::span<const Point2> support, std::span<const double> p, double budget);
    static DiscreteMeasure point_mass(Point2 x, double budget) { return DiscreteMeasure({{x, budget}}, budget); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    double budget() const { return budget_; }

    std::vector<Point2> locations() const;
    /// Weights divided by the budget.
    std::vector<double> probabilities() const;

private:
    std::vector<Atom> atoms_;
    double budget_ = 0.0;
};

/// Total weight of atoms within the closed ball of `radius` around `center`.
double ball_mass(const DiscreteMeasure& mu, Point2 center, double radius, Norm norm);

/// sup_A |mu1(A) - mu2(A)|, i.e. half the l1 distance of the weight vectors
/// over the union of atom locations. Budgets must agree.
double tv_distance(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2);

/// Moves every atom outside `domain` onto its Euclidean projection.
DiscreteMeasure restrict_to_domain(const DiscreteMeasure& mu, const ConvexPolygon& domain);

inline constexpr double kDefaultMergeEps = 1e-9;
inline constexpr double kDefaultRelativeWeightTol = 1e-12;

/// Merges atoms closer than `merge_eps` at their weighted centroid, drops atoms
/// lighter than `weight_tol` and rescales the survivors to keep the budget.
DiscreteMeasure merge_and_prune(const DiscreteMeasure& mu, double merge_eps, double weight_tol);

nlohmann::json to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const nlohmann::json& j);

}  // namespace ohca
