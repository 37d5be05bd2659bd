#include "ohca/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ohca {

namespace {

double scale_tolerance(const std::vector<Point2>& v)
{
    double s = 1.0;
    for (const auto& p : v) s = std::max({s, std::abs(p.x), std::abs(p.y)});
    return 1e-12 * s;
}

Point2 closest_on_segment(Point2 a, Point2 b, Point2 p)
{
    const Point2 ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    if (len2 == 0.0) return a;
    double t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return a + t * ab;
}

double dist2(Point2 a, Point2 b)
{
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

}  // namespace

Rect::Rect(Point2 lo_, Point2 hi_) : lo(lo_), hi(hi_)
{
    if (!(lo.x <= hi.x && lo.y <= hi.y)) throw std::invalid_argument("rect corners out of order");
}

bool Rect::contains(Point2 p) const
{
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
}

bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

ConvexPolygon convex_hull(std::span<const Point2> points)
{
    if (points.empty()) throw std::invalid_argument("empty point set");
    std::vector<Point2> pts(points.begin(), points.end());
    for (const auto& p : pts)
        if (!is_finite(p)) throw std::invalid_argument("non-finite point");

    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 2) return ConvexPolygon(pts);

    // Andrew's monotone chain; `<= 0` drops collinear vertices.
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() == 1) hull.push_back(pts.back());
    return ConvexPolygon(std::move(hull));
}

ConvexPolygon ConvexPolygon::from_vertices(std::span<const Point2> vertices)
{
    auto hull = convex_hull(vertices);
    if (hull.degenerate()) return hull;
    // A listed vertex strictly inside a 2-D hull is not in convex position.
    const auto& hv = hull.vertices();
    const double tol = scale_tolerance(hv);
    for (const auto& v : vertices) {
        bool on_boundary = false;
        for (std::size_t i = 0; i < hv.size() && !on_boundary; ++i) {
            const Point2 c = closest_on_segment(hv[i], hv[(i + 1) % hv.size()], v);
            on_boundary = std::sqrt(dist2(c, v)) <= tol;
        }
        if (!on_boundary) throw std::invalid_argument("polygon is not convex");
    }
    return hull;
}

ConvexPolygon ConvexPolygon::from_rect(const Rect& r)
{
    const Point2 corners[] = {r.lo, {r.hi.x, r.lo.y}, r.hi, {r.lo.x, r.hi.y}};
    return convex_hull(corners);
}

double ConvexPolygon::area() const
{
    if (degenerate()) return 0.0;
    double a = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto& p = vertices_[i];
        const auto& q = vertices_[(i + 1) % vertices_.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

Rect ConvexPolygon::bounding_box() const
{
    Point2 lo = vertices_.front(), hi = vertices_.front();
    for (const auto& v : vertices_) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
    }
    return Rect(lo, hi);
}

double ConvexPolygon::diameter() const
{
    double d = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        for (std::size_t j = i + 1; j < vertices_.size(); ++j) d = std::max(d, dist2(vertices_[i], vertices_[j]));
    return std::sqrt(d);
}

bool contains(const ConvexPolygon& poly, Point2 p)
{
    const auto& v = poly.vertices();
    const double tol = scale_tolerance(v);
    if (v.size() == 1) return std::sqrt(dist2(v[0], p)) <= tol;
    if (v.size() == 2) return std::sqrt(dist2(closest_on_segment(v[0], v[1], p), p)) <= tol;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point2 a = v[i], b = v[(i + 1) % v.size()];
        const double len = std::sqrt(dist2(a, b));
        if (cross(a, b, p) < -tol * len) return false;
    }
    return true;
}

Point2 project(const ConvexPolygon& poly, Point2 p)
{
    const auto& v = poly.vertices();
    if (v.size() == 1) return v[0];
    if (v.size() > 2 && contains(poly, p)) return p;
    Point2 best = v[0];
    double best_d = std::numeric_limits<double>::infinity();
    const std::size_t edges = v.size() == 2 ? 1 : v.size();
    for (std::size_t i = 0; i < edges; ++i) {
        const Point2 c = closest_on_segment(v[i], v[(i + 1) % v.size()], p);
        const double d = dist2(c, p);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

Point2 sample_uniform(const ConvexPolygon& poly, Rng& rng)
{
    const auto& v = poly.vertices();
    if (poly.degenerate() || poly.area() <= 0.0) throw std::invalid_argument("degenerate domain");

    // Fan triangulation from v[0]; pick a triangle proportionally to area.
    std::vector<double> areas;
    areas.reserve(v.size() - 2);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) areas.push_back(0.5 * cross(v[0], v[i], v[i + 1]));
    std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
    const std::size_t t = pick(rng) + 1;

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double r1 = u01(rng), r2 = u01(rng);
    if (r1 + r2 > 1.0) {
        r1 = 1.0 - r1;
        r2 = 1.0 - r2;
    }
    const Point2 e1 = v[t] - v[0], e2 = v[t + 1] - v[0];
    return v[0] + r1 * e1 + r2 * e2;
}

Point2 sample_domain(const ConvexPolygon& poly, Rng& rng)
{
    const auto& v = poly.vertices();
    if (v.size() == 1) return v[0];
    if (v.size() == 2) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        return v[0] + u01(rng) * (v[1] - v[0]);
    }
    return sample_uniform(poly, rng);
}

double distance(Point2 p, Point2 q, Norm norm)
{
    const double dx = p.x - q.x, dy = p.y - q.y;
    if (norm == Norm::L1) return std::abs(dx) + std::abs(dy);
    return std::hypot(dx, dy);
}

}  // namespace ohca
