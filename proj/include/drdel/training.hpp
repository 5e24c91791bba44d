#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drdel/mixture.hpp"
#include "drdel/rng.hpp"
#include "drdel/vec2.hpp"

namespace drdel {

// %.17g round-trips doubles exactly; used for every numeric CSV field.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Training sample with a deletion mask. The deleted subset is always a strict
// subset: constructing with every point deleted throws.
class TrainingSet {
   public:
    TrainingSet(std::vector<Vec2> points, std::vector<int> cluster_ids, std::vector<char> deleted)
        : points_(std::move(points)), cluster_ids_(std::move(cluster_ids)), deleted_(std::move(deleted)) {
        if (points_.empty()) throw std::invalid_argument("TrainingSet: empty");
        if (points_.size() != cluster_ids_.size() || points_.size() != deleted_.size())
            throw std::invalid_argument("TrainingSet: field size mismatch");
        for (int id : cluster_ids_)
            if (id < 1) throw std::invalid_argument("TrainingSet: cluster ids are 1-based");
        for (char d : deleted_)
            if (d) ++deleted_count_;
        if (deleted_count_ == points_.size())
            throw std::invalid_argument("TrainingSet: deletion must leave at least one point");
    }

    std::size_t size() const { return points_.size(); }
    std::size_t deleted_count() const { return deleted_count_; }
    std::size_t kept_count() const { return points_.size() - deleted_count_; }

    const std::vector<Vec2>& points() const { return points_; }
    const std::vector<int>& cluster_ids() const { return cluster_ids_; }
    const std::vector<char>& deleted() const { return deleted_; }
    bool is_deleted(std::size_t i) const { return deleted_.at(i) != 0; }

    std::vector<Vec2> kept_points() const {
        std::vector<Vec2> out;
        out.reserve(kept_count());
        for (std::size_t i = 0; i < points_.size(); ++i)
            if (!deleted_[i]) out.push_back(points_[i]);
        return out;
    }

    std::vector<Vec2> deleted_points() const {
        std::vector<Vec2> out;
        out.reserve(deleted_count());
        for (std::size_t i = 0; i < points_.size(); ++i)
            if (deleted_[i]) out.push_back(points_[i]);
        return out;
    }

   private:
    std::vector<Vec2> points_;
    std::vector<int> cluster_ids_;
    std::vector<char> deleted_;
    std::size_t deleted_count_ = 0;
};

enum class DeletionRule { Bernoulli, ExactFraction };

inline std::string deletion_rule_name(DeletionRule r) {
    return r == DeletionRule::Bernoulli ? "bernoulli" : "exact_fraction";
}

inline DeletionRule parse_deletion_rule(const std::string& s) {
    if (s == "bernoulli") return DeletionRule::Bernoulli;
    if (s == "exact_fraction") return DeletionRule::ExactFraction;
    throw std::invalid_argument("unknown deletion_rule: " + s);
}

// Marks points of the targeted clusters for deletion. Under Bernoulli each
// targeted point is deleted independently with probability 1 - lambda (the
// retention probability), so a retained draw from a targeted cluster survives
// with probability lambda. ExactFraction deletes round((1-lambda) * n_c)
// points per targeted cluster, lowest index first, for a deterministic count.
inline TrainingSet build_deletion_set(const LabeledSample& sample, double lambda,
                                      const std::vector<int>& targeted_clusters, DeletionRule rule,
                                      RngStream& rng) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("build_deletion_set: lambda must be in (0,1]");
    if (sample.points.size() != sample.cluster_ids.size())
        throw std::invalid_argument("build_deletion_set: labeled sample size mismatch");
    std::vector<char> deleted(sample.points.size(), 0);
    if (rule == DeletionRule::Bernoulli) {
        for (std::size_t i = 0; i < sample.points.size(); ++i) {
            if (!contains(targeted_clusters, sample.cluster_ids[i])) continue;
            if (rng.uniform01() < 1.0 - lambda) deleted[i] = 1;
        }
    } else {
        for (int cluster : targeted_clusters) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < sample.points.size(); ++i)
                if (sample.cluster_ids[i] == cluster) members.push_back(i);
            const auto quota = static_cast<std::size_t>(
                std::llround((1.0 - lambda) * static_cast<double>(members.size())));
            for (std::size_t j = 0; j < quota; ++j) deleted[members[j]] = 1;
        }
    }
    return {sample.points, sample.cluster_ids, std::move(deleted)};
}

// Columns: x, y, cluster_id, deleted. One row per training point, in order.
inline void write_dataset_csv(std::ostream& os, const TrainingSet& ts) {
    os << "x,y,cluster_id,deleted\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        os << format_double(ts.points()[i].x) << ',' << format_double(ts.points()[i].y) << ','
           << ts.cluster_ids()[i] << ',' << (ts.is_deleted(i) ? 1 : 0) << '\n';
    }
}

}  // namespace drdel
