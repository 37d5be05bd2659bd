#include "ohca/response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ohca/parallel.hpp"

namespace ohca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Breakpoints of t -> mu(ball(y, t)): d_0 = 0 < d_1 < ... with the closed-ball
// mass W_j at d_j and 1 - beta(d_j).
struct Profile {
    std::vector<double> dist;
    std::vector<double> mass;
    std::vector<double> tail;
};

Profile build_profile(const std::vector<Atom>& atoms, Point2 y, const DeathCurve& curve, Norm norm)
{
    std::vector<std::pair<double, double>> dw;
    dw.reserve(atoms.size());
    for (const auto& a : atoms) dw.emplace_back(distance(a.location, y, norm), a.weight);
    std::sort(dw.begin(), dw.end(), [](const auto& l, const auto& r) { return l.first < r.first; });

    Profile p;
    p.dist.reserve(dw.size() + 1);
    p.mass.reserve(dw.size() + 1);
    p.dist.push_back(0.0);
    p.mass.push_back(0.0);
    double cum = 0.0;
    for (const auto& [d, w] : dw) {
        cum += w;
        if (d > p.dist.back()) {
            p.dist.push_back(d);
            p.mass.push_back(cum);
        } else {
            p.mass.back() = cum;  // tie with the previous breakpoint
        }
    }
    p.tail.reserve(p.dist.size());
    for (double d : p.dist) p.tail.push_back(curve.tail(d));
    return p;
}

double next_tail(const Profile& p, std::size_t j) { return j + 1 < p.tail.size() ? p.tail[j + 1] : 0.0; }

}  // namespace

DemandSet DemandSet::from_discrete(const IncidentDistribution& eta)
{
    DemandSet d;
    for (const auto& wp : eta.discrete().points) {
        d.points.push_back(wp.location);
        d.weights.push_back(wp.probability);
    }
    return d;
}

SampleBatch SampleBatch::draw(const IncidentDistribution& eta, std::size_t n, std::uint64_t seed)
{
    if (n == 0) throw std::invalid_argument("sample batch must be nonempty");
    Rng rng(seed);
    IncidentSampler sampler(eta);
    SampleBatch b;
    b.seed = seed;
    b.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) b.points.push_back(sampler(rng));
    return b;
}

DemandSet SampleBatch::demand() const
{
    if (points.empty()) throw std::invalid_argument("sample batch must be nonempty");
    return {points, std::vector<double>(points.size(), 1.0 / static_cast<double>(points.size()))};
}

IncidentSampler::IncidentSampler(const IncidentDistribution& eta)
{
    std::vector<double> w;
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DiscreteIncidents>) {
                for (const auto& p : d.points) {
                    points_.push_back(p.location);
                    w.push_back(p.probability);
                }
            } else if constexpr (std::is_same_v<T, UniformRectIncidents>) {
                rects_.push_back(d.rect);
                w.push_back(1.0);
            } else {
                for (const auto& c : d.components) {
                    rects_.push_back(c.rect);
                    w.push_back(c.probability);
                }
            }
        },
        eta.variant());
    pick_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
}

Point2 IncidentSampler::operator()(Rng& rng)
{
    if (!points_.empty()) return points_.size() == 1 ? points_.front() : points_[pick_(rng)];
    const Rect& r = rects_.size() == 1 ? rects_.front() : rects_[pick_(rng)];
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double ux = u01(rng);
    const double uy = u01(rng);
    return {r.lo.x + ux * r.width(), r.lo.y + uy * r.height()};
}

double survival_integral(const DiscreteMeasure& mu, Point2 y, const DeathCurve& curve, Norm norm)
{
    const Profile p = build_profile(mu.atoms(), y, curve, norm);
    double s = 0.0;
    for (std::size_t j = 0; j < p.dist.size(); ++j) s += std::exp(-p.mass[j]) * (p.tail[j] - next_tail(p, j));
    return s;
}

double objective(const DiscreteMeasure& mu, const DemandSet& demand, const DeathCurve& curve, Norm norm)
{
    std::vector<double> parts(demand.size());
    parallel_for(demand.size(), [&](std::size_t i) { parts[i] = demand.weights[i] * survival_integral(mu, demand.points[i], curve, norm); });
    return std::accumulate(parts.begin(), parts.end(), 0.0);
}

double objective_exact(const DiscreteMeasure& mu, const IncidentDistribution& eta, const DeathCurve& curve, Norm norm)
{
    if (!eta.is_discrete()) throw std::invalid_argument("objective_exact needs a discrete incident distribution; use objective_mc");
    return objective(mu, DemandSet::from_discrete(eta), curve, norm);
}

double objective_mc(const DiscreteMeasure& mu, const SampleBatch& batch, const DeathCurve& curve, Norm norm)
{
    return objective(mu, batch.demand(), curve, norm);
}

double influence(const DiscreteMeasure& mu, Point2 x, const DemandSet& demand, const DeathCurve& curve, Norm norm)
{
    return InfluenceField(mu, demand, curve, norm).value(x);
}

Point2 influence_gradient(const DiscreteMeasure& mu, Point2 x, const DemandSet& demand, const DeathCurve& curve)
{
    for (const auto& y : demand.points)
        if (distance(x, y, Norm::L2) < 1e-9) throw std::invalid_argument("gradient singular at demand point");
    Point2 g;
    InfluenceField(mu, demand, curve, Norm::L2).value_and_gradient(x, g);
    return g;
}

double directional_derivative(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DemandSet& demand,
                              const DeathCurve& curve, Norm norm)
{
    if (std::abs(mu.budget() - nu.budget()) > 1e-9 * mu.budget() + 1e-15) throw std::invalid_argument("budget mismatch");
    const InfluenceField field(mu, demand, curve, norm);
    double s = 0.0;
    for (const auto& a : nu.atoms()) s += a.weight * field.value(a.location);
    return s / nu.budget();
}

std::vector<double> correction_gradient(std::span<const Point2> support, std::span<const double> p, double budget,
                                        const DemandSet& demand, const DeathCurve& curve, Norm norm)
{
    if (support.empty() || support.size() != p.size()) throw std::invalid_argument("support and weights must be nonempty and equal length");
    double sum = 0.0;
    for (double v : p) {
        if (v < -1e-9) throw std::invalid_argument("weights off the simplex");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("weights off the simplex");
    WeightObjective obj(std::vector<Point2>(support.begin(), support.end()), budget, demand, curve, norm);
    std::vector<double> g;
    obj.value_and_gradient(p, g);
    return g;
}

SimulationEstimate simulate_objective(const DiscreteMeasure& mu, const IncidentDistribution& eta, const DeathCurve& curve,
                                      Norm norm, std::size_t reps, Rng& rng)
{
    if (reps == 0) throw std::invalid_argument("reps must be at least 1");
    IncidentSampler incidents(eta);
    std::vector<double> w;
    for (const auto& a : mu.atoms()) w.push_back(a.weight);
    const bool any_mass = mu.budget() > 0.0 && !w.empty();
    std::discrete_distribution<std::size_t> pick_atom(w.begin(), w.end());
    std::poisson_distribution<long long> volunteers(any_mass ? mu.budget() : 1.0);
    const double tail0 = curve.tail(0.0);

    double mean = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        const Point2 y = incidents(rng);
        const long long n = any_mass ? volunteers(rng) : 0;
        double response = kInf;
        for (long long k = 0; k < n; ++k) response = std::min(response, distance(mu.atoms()[pick_atom(rng)].location, y, norm));
        const double value = tail0 - curve.tail(response);
        const double delta = value - mean;
        mean += delta / static_cast<double>(r + 1);
        m2 += delta * (value - mean);
    }
    const double var = reps > 1 ? m2 / static_cast<double>(reps - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(reps))};
}

double smoothness_constant(double budget)
{
    if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
    return 2.0 * budget + 1.0;
}

// ---------------------------------------------------------------------------

InfluenceField::InfluenceField(const DiscreteMeasure& mu, const DemandSet& demand, const DeathCurve& curve, Norm norm)
    : demand_(demand), curve_(curve), norm_(norm), budget_(mu.budget())
{
    const std::size_t n = demand.size();
    std::vector<Profile> profiles(n);
    parallel_for(n, [&](std::size_t i) { profiles[i] = build_profile(mu.atoms(), demand.points[i], curve, norm); });

    offset_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offset_[i + 1] = offset_[i] + profiles[i].dist.size();
    dist_.reserve(offset_[n]);
    mass_.reserve(offset_[n]);
    tail_.reserve(offset_[n]);
    prefix_.reserve(offset_[n]);

    double obj = 0.0, constant = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Profile& p = profiles[i];
        double survival = 0.0, weighted = 0.0;
        for (std::size_t j = 0; j < p.dist.size(); ++j) {
            prefix_.push_back(survival);
            const double seg = std::exp(-p.mass[j]) * (p.tail[j] - next_tail(p, j));
            survival += seg;
            weighted += p.mass[j] * seg;
        }
        dist_.insert(dist_.end(), p.dist.begin(), p.dist.end());
        mass_.insert(mass_.end(), p.mass.begin(), p.mass.end());
        tail_.insert(tail_.end(), p.tail.begin(), p.tail.end());
        obj += demand.weights[i] * survival;
        constant += demand.weights[i] * (weighted - budget_ * survival);
    }
    objective_ = obj;
    constant_ = constant;
}

double InfluenceField::segment_integral(std::size_t i, double r, double& mass_at_r) const
{
    const auto first = dist_.begin() + static_cast<std::ptrdiff_t>(offset_[i]);
    const auto last = dist_.begin() + static_cast<std::ptrdiff_t>(offset_[i + 1]);
    const std::size_t j = static_cast<std::size_t>(std::upper_bound(first, last, r) - dist_.begin()) - 1;
    mass_at_r = mass_[j];
    return prefix_[j] + std::exp(-mass_[j]) * (tail_[j] - curve_.tail(r));
}

double InfluenceField::value(Point2 x) const
{
    double s = 0.0, m = 0.0;
    for (std::size_t i = 0; i < demand_.size(); ++i)
        s += demand_.weights[i] * segment_integral(i, distance(x, demand_.points[i], norm_), m);
    return constant_ + budget_ * s;
}

double InfluenceField::value_and_gradient(Point2 x, Point2& grad) const
{
    double s = 0.0, gx = 0.0, gy = 0.0, m = 0.0;
    for (std::size_t i = 0; i < demand_.size(); ++i) {
        const Point2 y = demand_.points[i];
        const double r = distance(x, y, norm_);
        s += demand_.weights[i] * segment_integral(i, r, m);
        const double radial = demand_.weights[i] * std::exp(-m) * curve_.derivative(r);
        if (norm_ == Norm::L2) {
            if (r > 1e-12) {
                gx += radial * (x.x - y.x) / r;
                gy += radial * (x.y - y.y) / r;
            }
        } else {
            gx += radial * ((x.x > y.x) - (x.x < y.x));
            gy += radial * ((x.y > y.y) - (x.y < y.y));
        }
    }
    grad = {budget_ * gx, budget_ * gy};
    return constant_ + budget_ * s;
}

// ---------------------------------------------------------------------------

WeightObjective::WeightObjective(std::vector<Point2> support, double budget, const DemandSet& demand, const DeathCurve& curve,
                                 Norm norm)
    : support_(std::move(support)), budget_(budget), weights_(demand.weights)
{
    if (support_.empty()) throw std::invalid_argument("support must be nonempty");
    const std::size_t n = demand.size(), m = support_.size();
    order_.resize(n * m);
    group_offset_.assign(n + 1, 0);
    head_.resize(n);

    std::vector<std::vector<std::uint32_t>> ends(n);
    std::vector<std::vector<double>> dtails(n);
    parallel_for(n, [&](std::size_t i) {
        const Point2 y = demand.points[i];
        std::vector<double> d(m);
        for (std::size_t k = 0; k < m; ++k) d[k] = distance(support_[k], y, norm);
        auto* ord = order_.data() + i * m;
        std::iota(ord, ord + m, 0u);
        std::stable_sort(ord, ord + m, [&](std::uint32_t a, std::uint32_t b) { return d[a] < d[b]; });
        head_[i] = curve.tail(0.0) - curve.tail(d[ord[0]]);
        for (std::size_t k = 0; k < m; ++k) {
            const bool last_of_group = k + 1 == m || d[ord[k + 1]] > d[ord[k]];
            if (last_of_group) {
                ends[i].push_back(static_cast<std::uint32_t>(k + 1));
                const double start = d[ord[k]];
                const double stop = k + 1 == m ? kInf : d[ord[k + 1]];
                dtails[i].push_back(curve.tail(start) - curve.tail(stop));
            }
        }
    });
    for (std::size_t i = 0; i < n; ++i) group_offset_[i + 1] = group_offset_[i] + ends[i].size();
    group_end_.reserve(group_offset_[n]);
    dtail_.reserve(group_offset_[n]);
    for (std::size_t i = 0; i < n; ++i) {
        group_end_.insert(group_end_.end(), ends[i].begin(), ends[i].end());
        dtail_.insert(dtail_.end(), dtails[i].begin(), dtails[i].end());
    }
}

double WeightObjective::value(std::span<const double> p) const { return evaluate(p, nullptr); }

double WeightObjective::value_and_gradient(std::span<const double> p, std::vector<double>& grad) const
{
    grad.assign(support_.size(), 0.0);
    return evaluate(p, &grad);
}

double WeightObjective::evaluate(std::span<const double> p, std::vector<double>* grad) const
{
    const std::size_t m = support_.size();
    if (p.size() != m) throw std::invalid_argument("weight vector has wrong dimension");
    std::vector<double> factor(m);
    for (std::size_t k = 0; k < m; ++k) factor[k] = std::exp(-budget_ * p[k]);

    std::vector<double> seg;
    double total = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const auto* ord = order_.data() + i * m;
        const std::size_t g0 = group_offset_[i], g1 = group_offset_[i + 1];
        seg.resize(g1 - g0);
        double e = 1.0, ji = head_[i];
        std::uint32_t k = 0;
        for (std::size_t g = g0; g < g1; ++g) {
            for (; k < group_end_[g]; ++k) e *= factor[ord[k]];
            seg[g - g0] = e * dtail_[g];
            ji += seg[g - g0];
        }
        total += weights_[i] * ji;
        if (grad) {
            // dJ/dp_k = -b * lambda_i * (integral from the atom's distance on).
            double suffix = 0.0;
            std::uint32_t end = static_cast<std::uint32_t>(m);
            for (std::size_t g = g1; g-- > g0;) {
                suffix += seg[g - g0];
                const std::uint32_t begin = g == g0 ? 0 : group_end_[g - 1];
                for (std::uint32_t q = begin; q < end; ++q) (*grad)[ord[q]] -= budget_ * weights_[i] * suffix;
                end = begin;
            }
        }
    }
    return total;
}

}  // namespace ohca
