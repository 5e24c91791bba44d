#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "drdel/config.hpp"
#include "drdel/dre.hpp"
#include "drdel/kde.hpp"
#include "drdel/mixture.hpp"
#include "drdel/rejection.hpp"
#include "drdel/rng.hpp"
#include "drdel/stats.hpp"
#include "drdel/training.hpp"

namespace drdel {

// Index-sharded loop. Work item i writes only to slot i, so results are
// independent of the thread count; exceptions are rethrown on the caller.
template <class Fn>
void parallel_for(std::size_t total, int threads, Fn&& fn) {
    if (threads <= 1 || total <= 1) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), total);
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// A fully materialized experiment: target mixture, training draw with its
// deletion mask, and the two kernel density models.
struct Experiment {
    ExperimentConfig cfg;
    MixtureSpec target;
    TrainingSet training;
    KdeModel full;      // fit on all N points
    KdeModel retained;  // fit on the kept points only
    double bound;
};

namespace repeat_set {
inline constexpr std::uint64_t model_sample = 0;   // Yhat
inline constexpr std::uint64_t deletion_sample = 1;  // YD via rejection
inline constexpr std::uint64_t null_sample = 2;    // YH0
inline constexpr std::uint64_t retained_sample = 3;  // YH1
inline constexpr std::uint64_t training_data = 10;
inline constexpr std::uint64_t deletion_mask = 11;
}  // namespace repeat_set

inline RngStream repeat_stream(std::uint64_t master_seed, std::uint64_t repeat_index, std::uint64_t set_key) {
    const std::uint64_t root = derive_seed(master_seed, stream_key::repeat_root);
    return RngStream(derive_seed(derive_seed(root, repeat_index), set_key));
}

inline MixtureSpec make_target(const ExperimentConfig& cfg) {
    // lambda = 1 keeps all component weights even: the pre-deletion target.
    return cfg.dataset == "mog8" ? make_mog8_spec(1.0, cfg.deleted_clusters)
                                 : make_ckb8_spec(1.0, cfg.deleted_clusters);
}

inline TrainingSet draw_training_set(const ExperimentConfig& cfg, const MixtureSpec& target, RngStream& data_rng,
                                     RngStream& mask_rng) {
    const LabeledSample sample = sample_mixture(target, static_cast<std::size_t>(cfg.n_train), data_rng);
    return build_deletion_set(sample, cfg.lambda, cfg.deleted_clusters, parse_deletion_rule(cfg.deletion_rule),
                              mask_rng);
}

inline Experiment build_experiment(const ExperimentConfig& cfg) {
    MixtureSpec target = make_target(cfg);
    RngStream data_rng = stream_for(cfg.master_seed, stream_key::training_data);
    RngStream mask_rng = stream_for(cfg.master_seed, stream_key::deletion_mask);
    TrainingSet training = draw_training_set(cfg, target, data_rng, mask_rng);
    KdeModel full(training.points(), cfg.sigma_a);
    KdeModel retained(training.kept_points(), cfg.sigma_a);
    const double bound = dre_bound(training.size(), training.deleted_count());
    return {cfg, std::move(target), std::move(training), std::move(full), std::move(retained), bound};
}

// Per-estimator repeat run: every repeat draws four size-m sets (model,
// deletion-sampled, null, retained) and evaluates LR and two-sample scores
// through both the reference ratio and the estimator under study.
struct RunOutput {
    std::string estimator;
    std::vector<std::string> stat_names;
    std::map<std::string, std::vector<double>> series;
    std::uint64_t attempts = 0;
    std::uint64_t accepted = 0;
    long clamped = 0;

    double acceptance_rate() const {
        return attempts == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempts);
    }
};

namespace detail {

inline std::vector<std::string> repeat_stat_names(const std::vector<std::string>& phi_families) {
    static const char* kSets[4] = {"Yhat", "YD", "YH0", "YH1"};
    std::vector<std::string> names;
    for (const char* set : kSets)
        for (const char* route : {"exact", "dre"}) names.push_back(std::string("lr_") + set + "_" + route);
    for (const auto& phi : phi_families)
        for (int s = 1; s < 4; ++s)  // two-sample scores pair Yhat with each other set
            for (const char* route : {"exact", "dre"})
                names.push_back("asc_" + phi + "_" + kSets[s] + "_" + route);
    return names;
}

struct RepeatResult {
    std::vector<double> values;
    std::uint64_t attempts = 0;
    std::uint64_t accepted = 0;
    long clamped = 0;
};

}  // namespace detail

inline RunOutput run_repeats(const Experiment& exp, const EstimatorKind& kind, int threads) {
    const ExperimentConfig& cfg = exp.cfg;
    const auto repeats = static_cast<std::size_t>(cfg.repeats);
    const auto m = static_cast<std::size_t>(cfg.m);
    const std::vector<PhiFamily> families = [&] {
        std::vector<PhiFamily> fams;
        for (const auto& name : cfg.phi_families) fams.push_back(parse_phi_family(name));
        return fams;
    }();

    RunOutput out;
    out.estimator = estimator_label(kind);
    out.stat_names = detail::repeat_stat_names(cfg.phi_families);

    // With the estimator under study equal to the reference, evaluate once.
    const bool estimator_is_reference =
        std::holds_alternative<ExactKde>(kind) && std::get<ExactKde>(kind).sigma == cfg.sigma_a;

    const RatioEstimator shared_reference =
        cfg.redraw_x_per_repeat ? RatioEstimator{} : make_estimator(ExactKde{cfg.sigma_a}, exp.training);
    const RatioEstimator shared_estimator =
        cfg.redraw_x_per_repeat
            ? RatioEstimator{}
            : (estimator_is_reference ? shared_reference : make_estimator(kind, exp.training));

    std::vector<detail::RepeatResult> slots(repeats);
    parallel_for(repeats, threads, [&](std::size_t r) {
        // Per-repeat training redraw (sensitivity mode) or the shared draw.
        RatioEstimator reference = shared_reference;
        RatioEstimator estimator = shared_estimator;
        const KdeModel* full = &exp.full;
        const KdeModel* retained = &exp.retained;
        std::optional<KdeModel> local_full, local_retained;
        if (cfg.redraw_x_per_repeat) {
            RngStream data_rng = repeat_stream(cfg.master_seed, r, repeat_set::training_data);
            RngStream mask_rng = repeat_stream(cfg.master_seed, r, repeat_set::deletion_mask);
            const TrainingSet training = draw_training_set(cfg, exp.target, data_rng, mask_rng);
            local_full.emplace(training.points(), cfg.sigma_a);
            local_retained.emplace(training.kept_points(), cfg.sigma_a);
            full = &*local_full;
            retained = &*local_retained;
            reference = make_estimator(ExactKde{cfg.sigma_a}, training);
            estimator = estimator_is_reference ? reference : make_estimator(kind, training);
        }

        detail::RepeatResult& slot = slots[r];
        const ClampPolicy policy{1e-12, estimator.bound};

        RngStream s_model = repeat_stream(cfg.master_seed, r, repeat_set::model_sample);
        RngStream s_del = repeat_stream(cfg.master_seed, r, repeat_set::deletion_sample);
        RngStream s_null = repeat_stream(cfg.master_seed, r, repeat_set::null_sample);
        RngStream s_ret = repeat_stream(cfg.master_seed, r, repeat_set::retained_sample);

        const std::vector<Vec2> y_hat = full->sample(m, s_model);
        RejectionReport rej =
            rejection_sample([&](RngStream& rng) { return full->sample_point(rng); }, estimator, m, s_del);
        const std::vector<Vec2> y_del = std::move(rej.samples);
        const std::vector<Vec2> y_null = full->sample(m, s_null);
        const std::vector<Vec2> y_ret = retained->sample(m, s_ret);
        slot.attempts = rej.attempts;
        slot.accepted = m;

        auto ratios_of = [&](const RatioEstimator& est, const std::vector<Vec2>& ys) {
            std::vector<double> out_r;
            out_r.reserve(ys.size());
            for (const Vec2& y : ys) out_r.push_back(est.evaluate(y));
            return out_r;
        };
        const std::vector<Vec2>* sets[4] = {&y_hat, &y_del, &y_null, &y_ret};
        std::vector<double> exact_ratios[4];
        std::vector<double> dre_ratios[4];
        for (int s = 0; s < 4; ++s) {
            exact_ratios[s] = ratios_of(reference, *sets[s]);
            dre_ratios[s] = estimator_is_reference ? exact_ratios[s] : ratios_of(estimator, *sets[s]);
        }

        slot.values.reserve(8 + families.size() * 6);
        for (int s = 0; s < 4; ++s) {
            slot.values.push_back(lr_statistic(exact_ratios[s], policy, &slot.clamped));
            slot.values.push_back(lr_statistic(dre_ratios[s], policy, &slot.clamped));
        }
        for (const PhiFamily family : families) {
            for (int s = 1; s < 4; ++s) {
                slot.values.push_back(
                    asc_statistic(exact_ratios[0], exact_ratios[s], family, policy, &slot.clamped));
                slot.values.push_back(asc_statistic(dre_ratios[0], dre_ratios[s], family, policy, &slot.clamped));
            }
        }
    });

    for (const auto& name : out.stat_names) out.series[name] = {};
    for (auto& [name, values] : out.series) values.reserve(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
        const detail::RepeatResult& slot = slots[r];
        for (std::size_t i = 0; i < out.stat_names.size(); ++i) out.series[out.stat_names[i]].push_back(slot.values[i]);
        out.attempts += slot.attempts;
        out.accepted += slot.accepted;
        out.clamped += slot.clamped;
    }
    return out;
}

struct KsRow {
    std::string experiment;
    std::string estimator;
    std::string statistic;
    double ks = 0.0;
    double critical_05 = 0.0;
    std::size_t repeats = 0;
};

struct QRunOutput {
    std::string experiment;
    std::vector<KsRow> rows;
    // Series in output order, keyed "<estimator>/<stat_name>".
    std::vector<std::pair<std::string, std::vector<double>>> series;
    std::map<std::string, double> acceptance_rate;
    std::map<std::string, std::uint64_t> attempts;
    std::map<std::string, long> clamped;
};

namespace detail {

inline KsRow make_ks_row(const std::string& experiment, const std::string& estimator, const std::string& statistic,
                         const std::vector<double>& a, const std::vector<double>& b) {
    const KsResult ks = ks_two_sample(a, b);
    return {experiment, estimator, statistic, ks.statistic, ks.critical_value(0.05), a.size()};
}

}  // namespace detail

// Q1: does the estimator-based statistic distribute like the reference one on
// null draws? Q2: do deletion-sampled sets replicate retained-model sets?
// Q3: does the statistic separate null draws from retained-model draws?
inline QRunOutput run_q_experiment(const std::string& which, const ExperimentConfig& cfg, int threads) {
    if (which != "q1" && which != "q2" && which != "q3") throw std::invalid_argument("unknown experiment: " + which);
    const Experiment exp = build_experiment(cfg);
    QRunOutput out;
    out.experiment = which;
    for (const EstimatorKind& kind : resolve_estimators(cfg)) {
        RunOutput run = run_repeats(exp, kind, threads);
        const auto& s = run.series;
        const std::string& label = run.estimator;
        if (which == "q1") {
            out.rows.push_back(detail::make_ks_row(which, label, "lr", s.at("lr_YH0_exact"), s.at("lr_YH0_dre")));
            for (const auto& phi : cfg.phi_families)
                out.rows.push_back(detail::make_ks_row(which, label, "asc_" + phi, s.at("asc_" + phi + "_YH0_exact"),
                                                       s.at("asc_" + phi + "_YH0_dre")));
        } else if (which == "q2") {
            for (const char* route : {"exact", "dre"}) {
                const std::string suffix = std::string("_") + route;
                out.rows.push_back(detail::make_ks_row(which, label, "lr" + suffix, s.at("lr_YH1" + suffix),
                                                       s.at("lr_YD" + suffix)));
                for (const auto& phi : cfg.phi_families)
                    out.rows.push_back(detail::make_ks_row(which, label, "asc_" + phi + suffix,
                                                           s.at("asc_" + phi + "_YH1" + suffix),
                                                           s.at("asc_" + phi + "_YD" + suffix)));
            }
        } else {
            for (const char* route : {"exact", "dre"}) {
                const std::string suffix = std::string("_") + route;
                out.rows.push_back(detail::make_ks_row(which, label, "lr" + suffix, s.at("lr_YH0" + suffix),
                                                       s.at("lr_YH1" + suffix)));
                for (const auto& phi : cfg.phi_families)
                    out.rows.push_back(detail::make_ks_row(which, label, "asc_" + phi + suffix,
                                                           s.at("asc_" + phi + "_YH0" + suffix),
                                                           s.at("asc_" + phi + "_YH1" + suffix)));
            }
        }
        for (const auto& name : run.stat_names)
            out.series.emplace_back(label + "/" + name, std::move(run.series.at(name)));
        out.acceptance_rate[label] = run.acceptance_rate();
        out.attempts[label] = run.attempts;
        out.clamped[label] = run.clamped;
    }
    return out;
}

// Long format: one row per (series, repeat index).
inline void write_statistics_csv(std::ostream& os, const QRunOutput& out) {
    os << "name,repeat_index,value\n";
    for (const auto& [name, values] : out.series)
        for (std::size_t r = 0; r < values.size(); ++r)
            os << name << ',' << r << ',' << format_double(values[r]) << '\n';
}

inline void write_ks_table_csv(std::ostream& os, const std::vector<KsRow>& rows) {
    os << "experiment,estimator,statistic,ks,critical_05,repeats\n";
    for (const KsRow& row : rows)
        os << row.experiment << ',' << row.estimator << ',' << row.statistic << ',' << format_double(row.ks) << ','
           << format_double(row.critical_05) << ',' << row.repeats << '\n';
}

}  // namespace drdel
