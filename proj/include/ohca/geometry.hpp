#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ohca {

using Rng = std::mt19937_64;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

enum class Norm { L2, L1 };

/// Axis-aligned rectangle; lo <= hi componentwise.
struct Rect {
    Point2 lo;
    Point2 hi;

    Rect() = default;
    Rect(Point2 lo, Point2 hi);

    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    double area() const { return width() * height(); }
    bool contains(Point2 p) const;
};

/// Closed convex polygon stored counter-clockwise with collinear and repeated
/// vertices removed. One vertex is a point, two vertices a segment.
class ConvexPolygon {
public:
    /// Builds the polygon as the hull of `vertices`; throws if the input is
    /// not in convex position (a vertex strictly inside the hull).
    static ConvexPolygon from_vertices(std::span<const Point2> vertices);
    static ConvexPolygon from_rect(const Rect& r);

    const std::vector<Point2>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    double area() const;
    bool degenerate() const { return vertices_.size() < 3; }
    Rect bounding_box() const;
    double diameter() const;

private:
    friend ConvexPolygon convex_hull(std::span<const Point2> points);
    explicit ConvexPolygon(std::vector<Point2> ccw) : vertices_(std::move(ccw)) {}

    std::vector<Point2> vertices_;
};

ConvexPolygon convex_hull(std::span<const Point2> points);

/// Euclidean projection onto the closed polygon.
Point2 project(const ConvexPolygon& poly, Point2 p);

bool contains(const ConvexPolygon& poly, Point2 p);

/// Uniform draw from a polygon with positive area.
Point2 sample_uniform(const ConvexPolygon& poly, Rng& rng);

/// Like sample_uniform, but also accepts segments (uniform along the segment)
/// and single points.
Point2 sample_domain(const ConvexPolygon& poly, Rng& rng);

double distance(Point2 p, Point2 q, Norm norm);

inline double cross(Point2 o, Point2 a, Point2 b)
{
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool is_finite(Point2 p);

}  // namespace ohca
