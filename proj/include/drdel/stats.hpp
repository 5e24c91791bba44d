#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "drdel/dre.hpp"
#include "drdel/kde.hpp"
#include "drdel/numeric.hpp"
#include "drdel/rng.hpp"
#include "drdel/training.hpp"
#include "drdel/vec2.hpp"

namespace drdel {

// f-divergence integrands evaluated on a ratio value t > 0.
enum class PhiFamily { LogT, KL, Hellinger };

inline std::string phi_family_name(PhiFamily f) {
    switch (f) {
        case PhiFamily::LogT: return "logt";
        case PhiFamily::KL: return "kl";
        default: return "hellinger";
    }
}

inline PhiFamily parse_phi_family(const std::string& s) {
    if (s == "logt") return PhiFamily::LogT;
    if (s == "kl") return PhiFamily::KL;
    if (s == "hellinger") return PhiFamily::Hellinger;
    throw std::invalid_argument("unknown phi family: " + s);
}

inline double phi_value(PhiFamily f, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("phi_value: t must be positive");
    switch (f) {
        case PhiFamily::LogT: return std::log(t);
        case PhiFamily::KL: return t * std::log(t);
        default: {
            const double r = std::sqrt(t) - 1.0;
            return r * r;
        }
    }
}

// Ratio values are clamped into [eps, upper] before any log or phi is taken;
// eps guards exact zeros from regions the retained model barely covers.
struct ClampPolicy {
    double eps = 1e-12;
    double upper = std::numeric_limits<double>::infinity();
};

inline double clamp_ratio(double t, const ClampPolicy& policy, long* clamp_count = nullptr) {
    if (t < policy.eps) {
        if (clamp_count) ++*clamp_count;
        return policy.eps;
    }
    if (t > policy.upper) {
        if (clamp_count) ++*clamp_count;
        return policy.upper;
    }
    return t;
}

// Mean log ratio over a sample: (1/m) sum log ratio(y_i).
inline double lr_statistic(std::span<const double> ratios, const ClampPolicy& policy = {},
                           long* clamp_count = nullptr) {
    if (ratios.empty()) throw std::invalid_argument("lr_statistic: empty sample");
    double acc = 0.0;
    for (double t : ratios) acc += std::log(clamp_ratio(t, policy, clamp_count));
    return acc / static_cast<double>(ratios.size());
}

// Two-sample score: (1/m) sum psi(ratio(model sample)) + (1/m) sum
// psi(ratio(observed sample)), with psi(t) = phi(t) / (1 + t).
inline double asc_statistic(std::span<const double> ratios_model, std::span<const double> ratios_observed,
                            PhiFamily family, const ClampPolicy& policy = {}, long* clamp_count = nullptr) {
    if (ratios_model.empty() || ratios_model.size() != ratios_observed.size())
        throw std::invalid_argument("asc_statistic: samples must be nonempty and equal-sized");
    auto psi_mean = [&](std::span<const double> ratios) {
        double acc = 0.0;
        for (double t : ratios) {
            const double c = clamp_ratio(t, policy, clamp_count);
            acc += phi_value(family, c) / (1.0 + c);
        }
        return acc / static_cast<double>(ratios.size());
    };
    return psi_mean(ratios_model) + psi_mean(ratios_observed);
}

inline double gaussian_kernel(Vec2 a, Vec2 b, double bandwidth) {
    return std::exp(-squared_distance(a, b) / (2.0 * bandwidth * bandwidth));
}

// Unbiased two-sample MMD^2 U-statistic with a Gaussian kernel.
inline double mmd_u_squared(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double bandwidth = 1.0) {
    const std::size_t m = a.size();
    if (m < 2 || b.size() != m) throw std::invalid_argument("mmd_u_squared: need two equal samples of size >= 2");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("mmd_u_squared: bandwidth must be positive");
    double within = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            within += gaussian_kernel(a[i], a[j], bandwidth) + gaussian_kernel(b[i], b[j], bandwidth);
    double cross = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) cross += gaussian_kernel(a[i], b[j], bandwidth);
    const auto md = static_cast<double>(m);
    return 2.0 * within / (md * (md - 1.0)) - 2.0 * cross / (md * md);
}

// Population MMD^2 between the retained-points KDE and the full KDE, under a
// Gaussian kernel of bandwidth b. Gaussian-vs-Gaussian expectations integrate
// in closed form: each pair of training points contributes
// exp(-dist^2 / (2 (b^2 + 2 sigma^2))) scaled by b^2 / (b^2 + 2 sigma^2)
// overall, leaving a quadratic form in the kept/deleted pair sums.
inline double mmd_closed_form_kde(const TrainingSet& ts, double sigma, double kernel_bandwidth = 1.0) {
    if (!(sigma > 0.0)) throw std::invalid_argument("mmd_closed_form_kde: bandwidth must be positive");
    if (!(kernel_bandwidth > 0.0)) throw std::invalid_argument("mmd_closed_form_kde: kernel bandwidth must be positive");
    const auto n = static_cast<double>(ts.size());
    const auto nd = static_cast<double>(ts.deleted_count());
    const auto nk = static_cast<double>(ts.kept_count());
    if (ts.deleted_count() == 0) return 0.0;
    const double b2 = kernel_bandwidth * kernel_bandwidth;
    const double denom = 2.0 * (b2 + 2.0 * sigma * sigma);
    double kk = nk;  // diagonal terms contribute exp(0) = 1 apiece
    double dd = nd;
    double mixed = 0.0;
    const auto& pts = ts.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double t = std::exp(-squared_distance(pts[i], pts[j]) / denom);
            const bool di = ts.is_deleted(i);
            const bool dj = ts.is_deleted(j);
            if (di && dj)
                dd += 2.0 * t;
            else if (!di && !dj)
                kk += 2.0 * t;
            else
                mixed += t;
        }
    }
    const double scale = b2 / (b2 + 2.0 * sigma * sigma);
    const double ck = nd / (n * nk);
    return scale * (ck * ck * kk + dd / (n * n) - 2.0 * nd / (n * n * nk) * mixed);
}

struct KsResult {
    double statistic = 0.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;

    // Asymptotic two-sample critical value at level alpha.
    double critical_value(double alpha) const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("critical_value: alpha must be in (0,1)");
        const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
        const auto na = static_cast<double>(n_a);
        const auto nb = static_cast<double>(n_b);
        return c * std::sqrt((na + nb) / (na * nb));
    }
};

// Two-sample Kolmogorov-Smirnov statistic, sup |F_a - F_b|, with exact tie
// handling (both ECDFs advance past a shared value before the gap is taken).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const auto na = static_cast<double>(sa.size());
    const auto nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double v = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == v) ++i;
        while (j < sb.size() && sb[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {d, sa.size(), sb.size()};
}

struct McEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

// Monte Carlo KL(p || q) from n draws of p. Both models expose
// sample_point(rng) / log_density(x).
template <class ModelP, class ModelQ>
McEstimate kl_monte_carlo(const ModelP& p, const ModelQ& q, std::size_t n, RngStream& rng) {
    if (n < 2) throw std::invalid_argument("kl_monte_carlo: need at least 2 samples");
    MeanVar mv;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 x = p.sample_point(rng);
        mv.add(p.log_density(x) - q.log_density(x));
    }
    return {mv.mean(), mv.standard_error()};
}

struct DeletionTestResult {
    bool reject = false;      // true: the sample looks like the retained model
    double statistic = 0.0;   // observed mean log ratio
    double threshold = 0.0;   // calibrated rejection cutoff
};

// One-sided test of "Y was drawn from the full model" against "Y was drawn
// from the retained model", using the mean log ratio as the statistic. The
// null distribution is calibrated by simulation: n_cal fresh samples of the
// same size are drawn from the full model and the threshold is their
// ceil((1 - alpha) * n_cal)-th smallest statistic.
inline DeletionTestResult deletion_test(const KdeModel& full_model, const RatioEstimator& estimator,
                                        const std::vector<Vec2>& observed, std::size_t n_cal, double alpha,
                                        RngStream& rng) {
    if (observed.empty()) throw std::invalid_argument("deletion_test: empty observed sample");
    if (n_cal < 20) throw std::invalid_argument("deletion_test: n_cal must be at least 20");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("deletion_test: alpha must be in (0,1)");
    const ClampPolicy policy{1e-12, estimator.bound};
    auto lr_of = [&](const std::vector<Vec2>& ys) {
        std::vector<double> ratios;
        ratios.reserve(ys.size());
        for (const Vec2& y : ys) ratios.push_back(estimator.evaluate(y));
        return lr_statistic(ratios, policy);
    };
    DeletionTestResult result;
    result.statistic = lr_of(observed);
    std::vector<double> null_stats;
    null_stats.reserve(n_cal);
    for (std::size_t i = 0; i < n_cal; ++i) null_stats.push_back(lr_of(full_model.sample(observed.size(), rng)));
    const auto q = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(n_cal)));
    const std::size_t rank = std::min(q, n_cal) - 1;  // 0-based order statistic
    std::nth_element(null_stats.begin(), null_stats.begin() + rank, null_stats.end());
    result.threshold = null_stats[rank];
    result.reject = result.statistic > result.threshold;
    return result;
}

}  // namespace drdel
