#include "ohca/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ohca {

namespace {

using nlohmann::json;

void check_probabilities(const std::vector<double>& p)
{
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("probabilities must be nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("probabilities must sum to 1");
}

// Loader tolerance is looser than the type invariant; accepted inputs are
// renormalized before construction.
template <class T>
void normalize_loaded(std::vector<T>& items)
{
    double sum = 0.0;
    for (const auto& it : items) {
        if (!std::isfinite(it.probability) || it.probability < 0.0) throw ScenarioError("probabilities must be nonnegative");
        sum += it.probability;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ScenarioError("probabilities must sum to 1");
    for (auto& it : items) it.probability /= sum;
}

double number(const json& obj, const char* key, const char* where)
{
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number())
        throw ScenarioError(std::string("scenario schema: ") + where + " needs numeric \"" + key + "\"");
    return obj[key].get<double>();
}

Point2 parse_point(const json& j, const char* where)
{
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
    return {number(j, "x", where), number(j, "y", where)};
}

Rect parse_rect(const json& j, const char* where)
{
    const double x0 = number(j, "xmin", where), y0 = number(j, "ymin", where);
    const double x1 = number(j, "xmax", where), y1 = number(j, "ymax", where);
    if (!(x1 > x0 && y1 > y0)) throw ScenarioError(std::string("scenario schema: ") + where + " must have positive area");
    return Rect({x0, y0}, {x1, y1});
}

json rect_json(const Rect& r) { return {{"xmin", r.lo.x}, {"ymin", r.lo.y}, {"xmax", r.hi.x}, {"ymax", r.hi.y}}; }

}  // namespace

DeathCurve::DeathCurve(double a, double c) : a_(a), c_(c)
{
    if (!std::isfinite(a) || !std::isfinite(c)) throw std::invalid_argument("death curve parameters must be finite");
    if (!(c > 0.0)) throw std::invalid_argument("death curve slope c must be positive");
    if (!(a >= 0.0)) throw std::invalid_argument("death curve intercept a must be nonnegative for strict concavity");
}

double DeathCurve::tail(double t) const
{
    if (std::isnan(t) || t < 0.0) throw std::invalid_argument("response time must be nonnegative");
    if (std::isinf(t)) return 0.0;
    return 1.0 / (1.0 + std::exp(a_ + c_ * t));
}

double DeathCurve::operator()(double t) const
{
    if (std::isnan(t) || t < 0.0) throw std::invalid_argument("response time must be nonnegative");
    if (std::isinf(t)) return 1.0;
    const double z = std::exp(-(a_ + c_ * t));
    return 1.0 / (1.0 + z);
}

double DeathCurve::derivative(double t) const
{
    if (std::isnan(t) || t < 0.0) throw std::invalid_argument("response time must be nonnegative");
    if (std::isinf(t)) return 0.0;
    // c e^z / (1 + e^z)^2 written with e^{-z} to avoid overflow.
    const double e = std::exp(-(a_ + c_ * t));
    return c_ * e / ((1.0 + e) * (1.0 + e));
}

IncidentDistribution::IncidentDistribution(Variant v) : v_(std::move(v))
{
    if (auto* d = std::get_if<DiscreteIncidents>(&v_)) {
        if (d->points.empty()) throw std::invalid_argument("discrete incident distribution needs points");
        std::vector<double> p;
        for (const auto& wp : d->points) {
            if (!is_finite(wp.location)) throw std::invalid_argument("demand point must be finite");
            p.push_back(wp.probability);
        }
        check_probabilities(p);
        for (std::size_t i = 0; i < d->points.size(); ++i)
            for (std::size_t j = i + 1; j < d->points.size(); ++j)
                if (d->points[i].location == d->points[j].location) throw std::invalid_argument("demand points must be distinct");
    } else if (auto* u = std::get_if<UniformRectIncidents>(&v_)) {
        if (!(u->rect.area() > 0.0)) throw std::invalid_argument("incident rectangle must have positive area");
    } else {
        const auto& m = std::get<MixtureIncidents>(v_);
        if (m.components.empty()) throw std::invalid_argument("mixture needs components");
        std::vector<double> p;
        for (const auto& c : m.components) {
            if (!(c.rect.area() > 0.0)) throw std::invalid_argument("mixture rectangles must have positive area");
            p.push_back(c.probability);
        }
        check_probabilities(p);
    }
}

const DiscreteIncidents& IncidentDistribution::discrete() const
{
    if (!is_discrete()) throw std::invalid_argument("incident distribution is not discrete");
    return std::get<DiscreteIncidents>(v_);
}

Problem::Problem(IncidentDistribution eta_, double budget_, Norm norm_, DeathCurve curve_, ConvexPolygon domain_)
    : eta(std::move(eta_)), budget(budget_), norm(norm_), curve(curve_), domain(std::move(domain_))
{
    if (!std::isfinite(budget) || !(budget > 0.0)) throw std::invalid_argument("budget must be positive");
    const ConvexPolygon hull = support_hull(eta);
    for (const auto& v : hull.vertices())
        if (!contains(domain, v)) throw std::invalid_argument("domain must contain the support hull of the incident distribution");
}

Point2 sample_incident(const IncidentDistribution& eta, Rng& rng)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto in_rect = [&](const Rect& r) { return Point2{r.lo.x + u01(rng) * r.width(), r.lo.y + u01(rng) * r.height()}; };

    return std::visit(
        [&](const auto& d) -> Point2 {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DiscreteIncidents>) {
                if (d.points.size() == 1) return d.points.front().location;
                std::vector<double> w;
                for (const auto& p : d.points) w.push_back(p.probability);
                std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
                return d.points[pick(rng)].location;
            } else if constexpr (std::is_same_v<T, UniformRectIncidents>) {
                return in_rect(d.rect);
            } else {
                std::vector<double> w;
                for (const auto& c : d.components) w.push_back(c.probability);
                std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
                return in_rect(d.components[pick(rng)].rect);
            }
        },
        eta.variant());
}

ConvexPolygon support_hull(const IncidentDistribution& eta)
{
    std::vector<Point2> pts;
    auto corners = [&](const Rect& r) {
        pts.push_back(r.lo);
        pts.push_back({r.hi.x, r.lo.y});
        pts.push_back(r.hi);
        pts.push_back({r.lo.x, r.hi.y});
    };
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DiscreteIncidents>) {
                for (const auto& p : d.points) pts.push_back(p.location);
            } else if constexpr (std::is_same_v<T, UniformRectIncidents>) {
                corners(d.rect);
            } else {
                for (const auto& c : d.components) corners(c.rect);
            }
        },
        eta.variant());
    return convex_hull(pts);
}

const char* norm_name(Norm norm) { return norm == Norm::L1 ? "l1" : "l2"; }

Problem parse_scenario(const json& doc)
{
    if (!doc.is_object()) throw ScenarioError("scenario schema: document must be an object");
    if (!doc.contains("budget") || !doc["budget"].is_number()) throw ScenarioError("scenario schema: missing numeric \"budget\"");
    const double budget = doc["budget"].get<double>();
    if (!(budget > 0.0) || !std::isfinite(budget)) throw ScenarioError("budget must be positive");

    Norm norm = Norm::L2;
    if (doc.contains("norm")) {
        if (!doc["norm"].is_string()) throw ScenarioError("scenario schema: \"norm\" must be \"l2\" or \"l1\"");
        const auto s = doc["norm"].get<std::string>();
        if (s == "l1") norm = Norm::L1;
        else if (s != "l2") throw ScenarioError("scenario schema: \"norm\" must be \"l2\" or \"l1\"");
    }

    DeathCurve curve;
    if (doc.contains("beta")) {
        const auto& b = doc["beta"];
        try {
            curve = DeathCurve(number(b, "a", "beta"), number(b, "c", "beta"));
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(e.what());
        }
    }

    if (!doc.contains("eta") || !doc["eta"].is_object()) throw ScenarioError("scenario schema: missing \"eta\" object");
    const auto& e = doc["eta"];
    if (!e.contains("type") || !e["type"].is_string()) throw ScenarioError("scenario schema: \"eta\" needs a \"type\"");
    const auto type = e["type"].get<std::string>();

    IncidentDistribution::Variant v;
    if (type == "discrete") {
        if (!e.contains("points") || !e["points"].is_array() || e["points"].empty())
            throw ScenarioError("scenario schema: discrete eta needs a nonempty \"points\" array");
        DiscreteIncidents d;
        for (const auto& p : e["points"]) d.points.push_back({parse_point(p, "eta point"), number(p, "p", "eta point")});
        normalize_loaded(d.points);
        v = std::move(d);
    } else if (type == "uniform_rect") {
        if (!e.contains("rect")) throw ScenarioError("scenario schema: uniform_rect eta needs \"rect\"");
        v = UniformRectIncidents{parse_rect(e["rect"], "eta rect")};
    } else if (type == "mixture") {
        if (!e.contains("components") || !e["components"].is_array() || e["components"].empty())
            throw ScenarioError("scenario schema: mixture eta needs a nonempty \"components\" array");
        MixtureIncidents m;
        for (const auto& c : e["components"]) m.components.push_back({parse_rect(c, "mixture component"), number(c, "p", "mixture component")});
        normalize_loaded(m.components);
        v = std::move(m);
    } else {
        throw ScenarioError("scenario schema: unknown eta type \"" + type + "\"");
    }

    try {
        IncidentDistribution eta(std::move(v));
        ConvexPolygon domain = support_hull(eta);
        if (doc.contains("domain") && !doc["domain"].is_null()) {
            if (!doc["domain"].is_array() || doc["domain"].empty())
                throw ScenarioError("scenario schema: \"domain\" must be a nonempty vertex list");
            std::vector<Point2> verts;
            for (const auto& p : doc["domain"]) verts.push_back(parse_point(p, "domain vertex"));
            domain = ConvexPolygon::from_vertices(verts);
        }
        return Problem(std::move(eta), budget, norm, curve, std::move(domain));
    } catch (const std::invalid_argument& ex) {
        throw ScenarioError(ex.what());
    }
}

Problem parse_scenario_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

Problem load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

json scenario_to_json(const Problem& problem)
{
    json doc;
    doc["budget"] = problem.budget;
    doc["norm"] = norm_name(problem.norm);
    doc["beta"] = {{"a", problem.curve.a()}, {"c", problem.curve.c()}};
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DiscreteIncidents>) {
                json pts = json::array();
                for (const auto& p : d.points) pts.push_back({{"x", p.location.x}, {"y", p.location.y}, {"p", p.probability}});
                doc["eta"] = {{"type", "discrete"}, {"points", pts}};
            } else if constexpr (std::is_same_v<T, UniformRectIncidents>) {
                doc["eta"] = {{"type", "uniform_rect"}, {"rect", rect_json(d.rect)}};
            } else {
                json comps = json::array();
                for (const auto& c : d.components) {
                    auto r = rect_json(c.rect);
                    r["p"] = c.probability;
                    comps.push_back(r);
                }
                doc["eta"] = {{"type", "mixture"}, {"components", comps}};
            }
        },
        problem.eta.variant());
    json dom = json::array();
    for (const auto& v : problem.domain.vertices()) dom.push_back({v.x, v.y});
    doc["domain"] = dom;
    return doc;
}

Problem make_city(int units, std::uint64_t seed, double budget, Norm norm)
{
    if (units < 1) throw std::invalid_argument("city needs at least one unit");
    Rng rng(seed);
    std::lognormal_distribution<double> heavy(0.0, 1.0);

    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(units))));
    MixtureIncidents m;
    double total = 0.0;
    for (int l = 0; l < units; ++l) {
        const double x = l % cols, y = l / cols;
        const double w = heavy(rng);
        m.components.push_back({Rect({x, y}, {x + 1.0, y + 1.0}), w});
        total += w;
    }
    for (auto& c : m.components) c.probability /= total;

    if (units == 1) {
        IncidentDistribution eta(UniformRectIncidents{m.components.front().rect});
        auto hull = support_hull(eta);
        return Problem(std::move(eta), budget, norm, DeathCurve(), std::move(hull));
    }
    // Renormalization can leave the sum a few ulps off 1.
    double s = 0.0;
    for (const auto& c : m.components) s += c.probability;
    m.components.back().probability += 1.0 - s;
    IncidentDistribution eta(std::move(m));
    auto hull = support_hull(eta);
    return Problem(std::move(eta), budget, norm, DeathCurve(), std::move(hull));
}

}  // namespace ohca
