#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace drdel {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(v))) with max shift; empty input and all -inf both give -inf.
inline double log_sum_exp(std::span<const double> values) {
    double m = kNegInf;
    for (double v : values) m = std::max(m, v);
    if (m == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - m);
    return m + std::log(acc);
}

// Streaming mean/variance (Welford).
class MeanVar {
   public:
    void add(double v) {
        ++n_;
        const double d = v - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (v - mean_);
    }

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }

    double sample_variance() const {
        if (n_ < 2) throw std::invalid_argument("sample_variance: need at least 2 values");
        return m2_ / static_cast<double>(n_ - 1);
    }

    double standard_error() const { return std::sqrt(sample_variance() / static_cast<double>(n_)); }

   private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline MeanVar summarize(std::span<const double> values) {
    MeanVar mv;
    for (double v : values) mv.add(v);
    return mv;
}

}  // namespace drdel
