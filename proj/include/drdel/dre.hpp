#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "drdel/kde.hpp"
#include "drdel/training.hpp"
#include "drdel/vec2.hpp"

namespace drdel {

// Known upper bound on the density ratio after deleting N' of N points.
inline double dre_bound(std::size_t n, std::size_t n_deleted) {
    if (n == 0 || n_deleted >= n) throw std::invalid_argument("dre_bound: need 0 <= N' < N");
    return static_cast<double>(n) / static_cast<double>(n - n_deleted);
}

// Maps a soft classifier output f in [0,1] (probability the query looks
// deleted) to a bounded density-ratio value in [0, N/(N-N')].
inline double ratio_from_classifier(double f, std::size_t n, std::size_t n_deleted) {
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("ratio_from_classifier: f must be in [0,1]");
    return dre_bound(n, n_deleted) * (1.0 - f) / (1.0 + f);
}

// Kernel Bayes classifier. Deleted points vote once, kept points twice, each
// vote weighted by a Gaussian kernel of bandwidth sigma_c:
//   f(x) = S_del / (S_del + 2 * S_kept).
// With no deleted points f is identically zero.
inline double kbc_classifier(const TrainingSet& ts, double sigma_c, Vec2 query) {
    if (!(sigma_c > 0.0)) throw std::invalid_argument("kbc_classifier: bandwidth must be positive");
    const auto sums = detail::shifted_kernel_sums(ts.points(), ts.deleted(), sigma_c, query);
    if (sums.deleted == 0.0) return 0.0;
    return sums.deleted / (sums.deleted + 2.0 * sums.kept);
}

namespace detail {

struct KnnEntry {
    double d2;
    std::uint32_t index;  // position in the training set
    std::uint8_t copy;    // 0 or 1; kept points appear twice
    bool deleted;
};

inline bool knn_entry_less(const KnnEntry& a, const KnnEntry& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    if (a.index != b.index) return a.index < b.index;
    return a.copy < b.copy;
}

// Balanced candidate multiset: each kept point twice, each deleted point once.
struct KnnCandidates {
    std::vector<Vec2> points;
    std::vector<std::uint32_t> index;
    std::vector<std::uint8_t> copy;
    std::vector<char> deleted;

    explicit KnnCandidates(const TrainingSet& ts) {
        const std::size_t total = 2 * ts.kept_count() + ts.deleted_count();
        points.reserve(total);
        index.reserve(total);
        copy.reserve(total);
        deleted.reserve(total);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const int copies = ts.is_deleted(i) ? 1 : 2;
            for (int c = 0; c < copies; ++c) {
                points.push_back(ts.points()[i]);
                index.push_back(static_cast<std::uint32_t>(i));
                copy.push_back(static_cast<std::uint8_t>(c));
                deleted.push_back(ts.deleted()[i]);
            }
        }
    }

    std::size_t size() const { return points.size(); }

    double deleted_fraction_among_nearest(Vec2 query, std::size_t k) const {
        thread_local std::vector<KnnEntry> scratch;
        scratch.clear();
        scratch.reserve(size());
        for (std::size_t i = 0; i < size(); ++i)
            scratch.push_back({squared_distance(query, points[i]), index[i], copy[i], deleted[i] != 0});
        std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end(), knn_entry_less);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < k; ++i)
            if (scratch[i].deleted) ++hits;
        return static_cast<double>(hits) / static_cast<double>(k);
    }
};

}  // namespace detail

// k-nearest-neighbor classifier over the balanced multiset (kept points
// duplicated). Ties are broken by training index, then copy number, so the
// value is a pure function of the inputs.
inline double knn_classifier(const TrainingSet& ts, std::size_t k, Vec2 query) {
    const detail::KnnCandidates cand(ts);
    if (k < 1 || k > cand.size()) throw std::invalid_argument("knn_classifier: k out of range");
    return cand.deleted_fraction_among_nearest(query, k);
}

struct ExactKde {
    double sigma;
};
struct Kbc {
    double sigma_c;
};
struct Knn {
    std::size_t k;
};

using EstimatorKind = std::variant<ExactKde, Kbc, Knn>;

inline std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string estimator_label(const EstimatorKind& kind) {
    if (std::holds_alternative<ExactKde>(kind)) return "exact";
    if (const auto* kbc = std::get_if<Kbc>(&kind)) return "kbc:" + short_number(kbc->sigma_c);
    return "knn:" + std::to_string(std::get<Knn>(kind).k);
}

// A density-ratio estimate: a thread-safe evaluator plus its known bound.
struct RatioEstimator {
    std::function<double(Vec2)> evaluate;
    double bound = 1.0;
    std::string label;
};

inline RatioEstimator make_estimator(const EstimatorKind& kind, const TrainingSet& ts) {
    const double bound = dre_bound(ts.size(), ts.deleted_count());
    const std::string label = estimator_label(kind);
    auto shared = std::make_shared<const TrainingSet>(ts);

    if (const auto* exact = std::get_if<ExactKde>(&kind)) {
        if (!(exact->sigma > 0.0)) throw std::invalid_argument("make_estimator: bandwidth must be positive");
        const double sigma = exact->sigma;
        return {[shared, sigma](Vec2 q) { return kde_exact_ratio(*shared, sigma, q); }, bound, label};
    }
    if (const auto* kbc = std::get_if<Kbc>(&kind)) {
        if (!(kbc->sigma_c > 0.0)) throw std::invalid_argument("make_estimator: bandwidth must be positive");
        const double sigma_c = kbc->sigma_c;
        const std::size_t n = ts.size();
        const std::size_t nd = ts.deleted_count();
        return {[shared, sigma_c, n, nd](Vec2 q) {
                    return ratio_from_classifier(kbc_classifier(*shared, sigma_c, q), n, nd);
                },
                bound, label};
    }
    const auto knn = std::get<Knn>(kind);
    auto cand = std::make_shared<const detail::KnnCandidates>(ts);
    if (knn.k < 1 || knn.k > cand->size()) throw std::invalid_argument("make_estimator: k out of range");
    const std::size_t n = ts.size();
    const std::size_t nd = ts.deleted_count();
    const std::size_t k = knn.k;
    return {[cand, k, n, nd](Vec2 q) {
                return ratio_from_classifier(cand->deleted_fraction_among_nearest(q, k), n, nd);
            },
            bound, label};
}

}  // namespace drdel
