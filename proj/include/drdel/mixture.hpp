#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "drdel/numeric.hpp"
#include "drdel/rng.hpp"
#include "drdel/vec2.hpp"

namespace drdel {

inline constexpr double kTwoPi = 2.0 * 3.141592653589793238462643383279502884;

// Isotropic Gaussian: N(center, variance * I).
struct GaussianComponent {
    Vec2 center;
    double variance = 1.0;
};

// Uniform on the axis-aligned rectangle [xmin,xmax] x [ymin,ymax].
struct RectComponent {
    double xmin = 0.0, xmax = 1.0;
    double ymin = 0.0, ymax = 1.0;
};

using MixtureComponent = std::variant<GaussianComponent, RectComponent>;

inline double component_log_density(const GaussianComponent& g, Vec2 x) {
    return -std::log(kTwoPi * g.variance) - squared_distance(x, g.center) / (2.0 * g.variance);
}

inline double component_log_density(const RectComponent& r, Vec2 x) {
    if (x.x < r.xmin || x.x > r.xmax || x.y < r.ymin || x.y > r.ymax) return kNegInf;
    return -std::log((r.xmax - r.xmin) * (r.ymax - r.ymin));
}

// Finite 2-d mixture with normalized weights.
class MixtureSpec {
   public:
    MixtureSpec(std::vector<MixtureComponent> components, std::vector<double> weights)
        : components_(std::move(components)), weights_(std::move(weights)) {
        if (components_.empty()) throw std::invalid_argument("MixtureSpec: no components");
        if (components_.size() != weights_.size())
            throw std::invalid_argument("MixtureSpec: weights/components size mismatch");
        double total = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0)) throw std::invalid_argument("MixtureSpec: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("MixtureSpec: weights must sum to 1");
        cumulative_.reserve(weights_.size());
        double acc = 0.0;
        for (double w : weights_) {
            acc += w;
            cumulative_.push_back(acc);
        }
        cumulative_.back() = 1.0;
    }

    std::size_t component_count() const { return components_.size(); }
    const std::vector<MixtureComponent>& components() const { return components_; }
    const std::vector<double>& weights() const { return weights_; }

    double log_density(Vec2 x) const {
        double m = kNegInf;
        for (std::size_t i = 0; i < components_.size(); ++i) {
            if (weights_[i] == 0.0) continue;
            const double l = std::log(weights_[i]) + std::visit([&](const auto& c) { return component_log_density(c, x); },
                                                                components_[i]);
            m = std::max(m, l);
        }
        if (m == kNegInf) return kNegInf;
        double acc = 0.0;
        for (std::size_t i = 0; i < components_.size(); ++i) {
            if (weights_[i] == 0.0) continue;
            const double l = std::log(weights_[i]) + std::visit([&](const auto& c) { return component_log_density(c, x); },
                                                                components_[i]);
            acc += std::exp(l - m);
        }
        return m + std::log(acc);
    }

    // Draws the component index by CDF inversion, then a point from it.
    std::size_t sample_component(RngStream& rng) const {
        const double u = rng.uniform01();
        for (std::size_t i = 0; i < cumulative_.size(); ++i)
            if (u < cumulative_[i]) return i;
        return cumulative_.size() - 1;
    }

    Vec2 sample_from_component(std::size_t index, RngStream& rng) const {
        const auto& comp = components_.at(index);
        if (const auto* g = std::get_if<GaussianComponent>(&comp)) {
            const double sd = std::sqrt(g->variance);
            return g->center + sd * Vec2{rng.normal(), rng.normal()};
        }
        const auto& r = std::get<RectComponent>(comp);
        return {r.xmin + rng.uniform01() * (r.xmax - r.xmin), r.ymin + rng.uniform01() * (r.ymax - r.ymin)};
    }

    Vec2 sample_point(RngStream& rng) const { return sample_from_component(sample_component(rng), rng); }

   private:
    std::vector<MixtureComponent> components_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
};

struct LabeledSample {
    std::vector<Vec2> points;
    std::vector<int> cluster_ids;  // 1-based component indices
};

inline LabeledSample sample_mixture(const MixtureSpec& spec, std::size_t n, RngStream& rng) {
    LabeledSample out;
    out.points.reserve(n);
    out.cluster_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = spec.sample_component(rng);
        out.points.push_back(spec.sample_from_component(c, rng));
        out.cluster_ids.push_back(static_cast<int>(c) + 1);
    }
    return out;
}

// Normalizes raw nonnegative weights so the MixtureSpec invariant holds.
inline std::vector<double> normalized(std::vector<double> w) {
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0)) throw std::invalid_argument("normalized: weights sum to zero");
    for (double& v : w) v /= total;
    return w;
}

inline bool contains(const std::vector<int>& ids, int v) {
    for (int id : ids)
        if (id == v) return true;
    return false;
}

// Ring of eight Gaussians on the unit circle, variance 0.1 each. Clusters in
// `downweighted` (1-based) carry relative weight lambda, the rest weight 1;
// lambda = 1 gives the even base mixture.
inline MixtureSpec make_mog8_spec(double lambda, const std::vector<int>& downweighted) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("make_mog8_spec: lambda must be in (0,1]");
    std::vector<MixtureComponent> comps;
    std::vector<double> w;
    for (int i = 1; i <= 8; ++i) {
        const double theta = kTwoPi * static_cast<double>(i) / 8.0;
        comps.push_back(GaussianComponent{{std::cos(theta), std::sin(theta)}, 0.1});
        w.push_back(contains(downweighted, i) ? lambda : 1.0);
    }
    return {std::move(comps), normalized(std::move(w))};
}

// Eight axis-aligned squares of side 0.25 inside the unit square, arranged in
// a checkerboard pattern. Same downweighting convention as make_mog8_spec.
inline MixtureSpec make_ckb8_spec(double lambda, const std::vector<int>& downweighted) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("make_ckb8_spec: lambda must be in (0,1]");
    constexpr double s = 0.25;
    const Vec2 corners[8] = {
        {0.00, 0.00}, {0.00, 0.50}, {0.25, 0.25}, {0.25, 0.75},
        {0.50, 0.00}, {0.50, 0.50}, {0.75, 0.25}, {0.75, 0.75},
    };
    std::vector<MixtureComponent> comps;
    std::vector<double> w;
    for (int i = 1; i <= 8; ++i) {
        const Vec2 c = corners[i - 1];
        comps.push_back(RectComponent{c.x, c.x + s, c.y, c.y + s});
        w.push_back(contains(downweighted, i) ? lambda : 1.0);
    }
    return {std::move(comps), normalized(std::move(w))};
}

inline const std::vector<int>& default_downweighted_clusters_mog8() {
    static const std::vector<int> ids{1, 3, 5, 7};
    return ids;
}

inline const std::vector<int>& default_downweighted_clusters_ckb8() {
    static const std::vector<int> ids{1, 4, 6, 7};
    return ids;
}

}  // namespace drdel
