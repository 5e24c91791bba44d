#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "drdel/numeric.hpp"
#include "drdel/rng.hpp"
#include "drdel/training.hpp"
#include "drdel/vec2.hpp"

namespace drdel {

namespace detail {

// Max-shifted Gaussian kernel sums over a masked point set, split by the
// mask. Returns sums of exp((e_i - max_e)) for kept and deleted points; the
// shared shift keeps ratios of the two sums exact in the common scale.
struct SplitKernelSums {
    double kept = 0.0;
    double deleted = 0.0;
};

inline SplitKernelSums shifted_kernel_sums(const std::vector<Vec2>& points, const std::vector<char>& deleted,
                                           double sigma, Vec2 query) {
    const double inv = 1.0 / (2.0 * sigma * sigma);
    double max_e = kNegInf;
    for (const Vec2& p : points) max_e = std::max(max_e, -squared_distance(query, p) * inv);
    SplitKernelSums sums;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double e = std::exp(-squared_distance(query, points[i]) * inv - max_e);
        if (deleted[i])
            sums.deleted += e;
        else
            sums.kept += e;
    }
    return sums;
}

}  // namespace detail

// Gaussian kernel density estimate with isotropic bandwidth sigma.
class KdeModel {
   public:
    KdeModel(std::vector<Vec2> points, double sigma) : points_(std::move(points)), sigma_(sigma) {
        if (points_.empty()) throw std::invalid_argument("KdeModel: empty point set");
        if (!(sigma_ > 0.0)) throw std::invalid_argument("KdeModel: bandwidth must be positive");
    }

    const std::vector<Vec2>& points() const { return points_; }
    double bandwidth() const { return sigma_; }

    double log_density(Vec2 x) const {
        const double inv = 1.0 / (2.0 * sigma_ * sigma_);
        double max_e = kNegInf;
        for (const Vec2& p : points_) max_e = std::max(max_e, -squared_distance(x, p) * inv);
        double acc = 0.0;
        for (const Vec2& p : points_) acc += std::exp(-squared_distance(x, p) * inv - max_e);
        return max_e + std::log(acc) - std::log(static_cast<double>(points_.size())) -
               std::log(kTwoPi * sigma_ * sigma_);
    }

    // Mixture draw: uniform center, then an isotropic Gaussian perturbation.
    Vec2 sample_point(RngStream& rng) const {
        const auto idx = static_cast<std::size_t>(rng.uniform_below(points_.size()));
        return points_[idx] + sigma_ * Vec2{rng.normal(), rng.normal()};
    }

    std::vector<Vec2> sample(std::size_t n, RngStream& rng) const {
        std::vector<Vec2> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(sample_point(rng));
        return out;
    }

   private:
    std::vector<Vec2> points_;
    double sigma_;
};

inline KdeModel kde_fit(std::vector<Vec2> points, double sigma) { return {std::move(points), sigma}; }

// Ratio of the post-deletion KDE to the full KDE at one query point:
//   N/(N-N') * (kernel sum over kept points) / (kernel sum over all points).
// Computed with one shared shift, and the denominator as kept + deleted, so
// the value always lands in [0, N/(N-N')] exactly.
inline double kde_exact_ratio(const TrainingSet& ts, double sigma, Vec2 query) {
    if (!(sigma > 0.0)) throw std::invalid_argument("kde_exact_ratio: bandwidth must be positive");
    const auto sums = detail::shifted_kernel_sums(ts.points(), ts.deleted(), sigma, query);
    const double scale = static_cast<double>(ts.size()) / static_cast<double>(ts.kept_count());
    return scale * (sums.kept / (sums.kept + sums.deleted));
}

}  // namespace drdel
