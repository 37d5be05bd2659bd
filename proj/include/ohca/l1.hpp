#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "ohca/geometry.hpp"
#include "ohca/measure.hpp"
#include "ohca/scenario.hpp"
#include "ohca/solver.hpp"

namespace ohca {

/// A solver was called on a problem it does not handle.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Coordinate grid of a set of demand points. Rectangle (j, k) spans
/// [xs[j], xs[j+1]] x [ys[k], ys[k+1]] and has linear index j * (ys.size() - 1) + k.
struct DemandGrid {
    std::vector<double> xs;
    std::vector<double> ys;

    std::vector<Point2> vertices() const;
    std::size_t vertex_count() const { return xs.size() * ys.size(); }
    std::size_t rectangle_count() const;
    Rect rectangle(std::size_t index) const;
    Rect bounding_box() const;
};

DemandGrid build_grid(std::span<const Point2> points);

/// The problem restricted to the grid's bounding box, where the grid vertices
/// contain every minimizer of h.
Problem grid_problem(const Problem& problem, const DemandGrid& grid);

/// Optimal weights over the grid vertices for a discrete eta under the L1
/// norm. The trace has one row per corrective round; h* is the minimum of h
/// over the vertices. Throws PreconditionError otherwise.
SolveResult l1_solve_on_grid(const Problem& problem, const SolverConfig& config);

/// Midpoint-concavity of h on random interior pairs of one rectangle, with
/// slack 1e-10. Zero-area rectangles pass trivially.
bool concavity_check(const DiscreteMeasure& mu, const Problem& problem, const DemandGrid& grid, std::size_t rect_index,
                     int trials, Rng& rng);

/// Whether no interior sample of the rectangle beats its best corner by more
/// than 1e-10.
bool vertex_argmin_check(const DiscreteMeasure& mu, const Problem& problem, const DemandGrid& grid, std::size_t rect_index,
                         int sample_count, Rng& rng);

}  // namespace ohca
