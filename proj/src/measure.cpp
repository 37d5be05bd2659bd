#include "ohca/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ohca {

namespace {

bool sums_to(double sum, double budget) { return std::abs(sum - budget) <= 1e-9 * budget + 1e-15; }

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms, double budget) : atoms_(std::move(atoms)), budget_(budget)
{
    if (!std::isfinite(budget_) || budget_ < 0.0) throw std::invalid_argument("budget must be finite and nonnegative");
    double sum = 0.0;
    for (const auto& a : atoms_) {
        if (!is_finite(a.location)) throw std::invalid_argument("atom location must be finite");
        if (!std::isfinite(a.weight) || a.weight < 0.0) throw std::invalid_argument("atom weight must be finite and nonnegative");
        sum += a.weight;
    }
    if (!sums_to(sum, budget_)) throw std::invalid_argument("atom weights do not sum to the budget");
}

DiscreteMeasure DiscreteMeasure::from_simplex(std::span<const Point2> support, std::span<const double> p, double budget)
{
    if (support.size() != p.size()) throw std::invalid_argument("support and weights differ in length");
    std::vector<Atom> atoms;
    atoms.reserve(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) atoms.push_back({support[i], p[i] * budget});
    return DiscreteMeasure(std::move(atoms), budget);
}

std::vector<Point2> DiscreteMeasure::locations() const
{
    std::vector<Point2> out;
    out.reserve(atoms_.size());
    for (const auto& a : atoms_) out.push_back(a.location);
    return out;
}

std::vector<double> DiscreteMeasure::probabilities() const
{
    std::vector<double> out;
    out.reserve(atoms_.size());
    for (const auto& a : atoms_) out.push_back(budget_ > 0.0 ? a.weight / budget_ : 0.0);
    return out;
}

double ball_mass(const DiscreteMeasure& mu, Point2 center, double radius, Norm norm)
{
    if (!(radius >= 0.0)) throw std::invalid_argument("radius must be nonnegative");
    double m = 0.0;
    for (const auto& a : mu.atoms())
        if (distance(a.location, center, norm) <= radius) m += a.weight;
    return m;
}

double tv_distance(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2)
{
    if (!sums_to(mu1.budget(), mu2.budget())) throw std::invalid_argument("budget mismatch");
    std::map<std::pair<double, double>, double> diff;
    for (const auto& a : mu1.atoms()) diff[{a.location.x, a.location.y}] += a.weight;
    for (const auto& a : mu2.atoms()) diff[{a.location.x, a.location.y}] -= a.weight;
    double total = 0.0;
    for (const auto& [loc, d] : diff) total += std::abs(d);
    return 0.5 * total;
}

DiscreteMeasure restrict_to_domain(const DiscreteMeasure& mu, const ConvexPolygon& domain)
{
    std::vector<Atom> atoms = mu.atoms();
    for (auto& a : atoms)
        if (!contains(domain, a.location)) a.location = project(domain, a.location);
    return DiscreteMeasure(std::move(atoms), mu.budget());
}

DiscreteMeasure merge_and_prune(const DiscreteMeasure& mu, double merge_eps, double weight_tol)
{
    if (!(merge_eps >= 0.0) || !(weight_tol >= 0.0)) throw std::invalid_argument("tolerances must be nonnegative");
    const auto& src = mu.atoms();
    const std::size_t n = src.size();

    // Union-find over pairs closer than merge_eps.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (distance(src[i].location, src[j].location, Norm::L2) <= merge_eps) parent[find(j)] = find(i);

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

    std::vector<Atom> merged;
    for (const auto& [root, members] : groups) {
        double w = 0.0;
        Point2 c{};
        for (auto i : members) w += src[i].weight;
        for (auto i : members) {
            const double share = w > 0.0 ? src[i].weight / w : 1.0 / static_cast<double>(members.size());
            c = c + share * src[i].location;
        }
        merged.push_back({members.size() == 1 ? src[members[0]].location : c, w});
    }

    std::erase_if(merged, [&](const Atom& a) { return a.weight < weight_tol; });
    if (merged.empty()) throw std::invalid_argument("empty measure");

    double kept = 0.0;
    for (const auto& a : merged) kept += a.weight;
    if (kept <= 0.0) throw std::invalid_argument("empty measure");
    const double scale = mu.budget() / kept;
    for (auto& a : merged) a.weight *= scale;

    // Put the rounding residue on the heaviest atom so the sum is exact.
    double sum = 0.0;
    for (const auto& a : merged) sum += a.weight;
    auto heaviest = std::max_element(merged.begin(), merged.end(), [](const Atom& a, const Atom& b) { return a.weight < b.weight; });
    heaviest->weight = std::max(0.0, heaviest->weight + (mu.budget() - sum));
    return DiscreteMeasure(std::move(merged), mu.budget());
}

nlohmann::json to_json(const DiscreteMeasure& mu)
{
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : mu.atoms()) atoms.push_back({{"x", a.location.x}, {"y", a.location.y}, {"w", a.weight}});
    return {{"budget", mu.budget()}, {"atoms", atoms}};
}

DiscreteMeasure measure_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("budget") || !j.contains("atoms") || !j["atoms"].is_array())
        throw std::invalid_argument("measure document needs \"budget\" and \"atoms\"");
    std::vector<Atom> atoms;
    for (const auto& a : j["atoms"]) {
        if (!a.is_object() || !a.contains("x") || !a.contains("y") || !a.contains("w"))
            throw std::invalid_argument("measure atom needs \"x\", \"y\", \"w\"");
        atoms.push_back({{a["x"].get<double>(), a["y"].get<double>()}, a["w"].get<double>()});
    }
    return DiscreteMeasure(std::move(atoms), j["budget"].get<double>());
}

}  // namespace ohca
