#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drdel/dre.hpp"
#include "drdel/rng.hpp"
#include "drdel/vec2.hpp"

namespace drdel {

struct RejectionReport {
    std::vector<Vec2> samples;
    std::uint64_t attempts = 0;
};

// Thrown when the attempt budget runs out; carries what was drawn so far.
class RejectionExhausted : public std::runtime_error {
   public:
    RejectionExhausted(RejectionReport partial_in, std::uint64_t budget)
        : std::runtime_error("rejection sampling exhausted " + std::to_string(budget) + " attempts with " +
                             std::to_string(partial_in.samples.size()) + " accepted"),
          partial(std::move(partial_in)) {}

    RejectionReport partial;
};

inline std::uint64_t default_attempt_budget(std::size_t n, double bound) {
    const double b = 1000.0 * static_cast<double>(n) * bound;
    return b > 1e18 ? static_cast<std::uint64_t>(1e18) : static_cast<std::uint64_t>(std::ceil(b));
}

// Draws n points distributed as (ratio / normalizer) * base by rejection:
// propose y from base, accept when ratio(y) > bound * u with u ~ U[0,1).
// Consumes exactly one base draw and one uniform per attempt.
template <class BaseSampler>
RejectionReport rejection_sample(BaseSampler&& base, const RatioEstimator& estimator, std::size_t n,
                                 RngStream& rng, std::uint64_t max_attempts = 0) {
    if (!(estimator.bound > 0.0)) throw std::invalid_argument("rejection_sample: bound must be positive");
    if (max_attempts == 0) max_attempts = default_attempt_budget(n, estimator.bound);
    RejectionReport report;
    report.samples.reserve(n);
    while (report.samples.size() < n) {
        if (report.attempts >= max_attempts) throw RejectionExhausted(std::move(report), max_attempts);
        ++report.attempts;
        const Vec2 y = base(rng);
        const double u = rng.uniform01();
        if (estimator.evaluate(y) > estimator.bound * u) report.samples.push_back(y);
    }
    return report;
}

}  // namespace drdel
