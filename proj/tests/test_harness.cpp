#include "drdel/harness.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>
#include <vector>

#include "drdel/config.hpp"
#include "drdel/numeric.hpp"
#include "drdel/stats.hpp"

namespace drdel {
namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.dataset = "mog8";
    cfg.lambda = 0.8;
    cfg.n_train = 80;
    cfg.m = 60;
    cfg.repeats = 40;
    cfg.sigma_a = 0.1;
    cfg.estimators = {"exact"};
    cfg.master_seed = 12345;
    validate_config(cfg);
    return cfg;
}

TEST(ParallelFor, CoversAllIndicesOnce) {
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h = 0;
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(100, 3,
                              [&](std::size_t i) {
                                  if (i == 57) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}

TEST(Experiment, BuildIsDeterministic) {
    const ExperimentConfig cfg = small_config();
    const Experiment a = build_experiment(cfg);
    const Experiment b = build_experiment(cfg);
    ASSERT_EQ(a.training.size(), b.training.size());
    for (std::size_t i = 0; i < a.training.size(); ++i) {
        EXPECT_TRUE(a.training.points()[i] == b.training.points()[i]);
        EXPECT_EQ(a.training.deleted()[i], b.training.deleted()[i]);
    }
    EXPECT_DOUBLE_EQ(a.bound, static_cast<double>(a.training.size()) / a.training.kept_count());
    ExperimentConfig other = cfg;
    other.master_seed = 54321;
    const Experiment c = build_experiment(other);
    int same = 0;
    for (std::size_t i = 0; i < a.training.size(); ++i)
        if (a.training.points()[i] == c.training.points()[i]) ++same;
    EXPECT_LE(same, 2);
}

TEST(RunRepeats, SeriesShapesAndNames) {
    const ExperimentConfig cfg = small_config();
    const Experiment exp = build_experiment(cfg);
    const RunOutput out = run_repeats(exp, ExactKde{cfg.sigma_a}, 1);
    // 8 mean-log-ratio series + 3 families x 3 paired sets x 2 routes
    EXPECT_EQ(out.stat_names.size(), 26u);
    EXPECT_EQ(out.series.size(), 26u);
    for (const auto& [name, values] : out.series)
        EXPECT_EQ(values.size(), static_cast<std::size_t>(cfg.repeats)) << name;
    EXPECT_EQ(out.accepted, static_cast<std::uint64_t>(cfg.repeats) * cfg.m);
    EXPECT_GE(out.attempts, out.accepted);
}

TEST(RunRepeats, ReferenceEstimatorCollapsesBothRoutes) {
    const ExperimentConfig cfg = small_config();
    const Experiment exp = build_experiment(cfg);
    const RunOutput out = run_repeats(exp, ExactKde{cfg.sigma_a}, 1);
    for (const char* base : {"lr_Yhat", "lr_YD", "lr_YH0", "lr_YH1"}) {
        const auto& exact = out.series.at(std::string(base) + "_exact");
        const auto& dre = out.series.at(std::string(base) + "_dre");
        for (std::size_t r = 0; r < exact.size(); ++r) EXPECT_EQ(exact[r], dre[r]);
    }
}

TEST(RunRepeats, ThreadCountDoesNotChangeResults) {
    ExperimentConfig cfg = small_config();
    cfg.estimators = {"kbc:0.1"};
    const Experiment exp = build_experiment(cfg);
    const RunOutput serial = run_repeats(exp, Kbc{0.1}, 1);
    const RunOutput threaded = run_repeats(exp, Kbc{0.1}, 4);
    EXPECT_EQ(serial.attempts, threaded.attempts);
    EXPECT_EQ(serial.clamped, threaded.clamped);
    for (const auto& name : serial.stat_names) {
        const auto& a = serial.series.at(name);
        const auto& b = threaded.series.at(name);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t r = 0; r < a.size(); ++r) ASSERT_EQ(a[r], b[r]) << name << " repeat " << r;
    }
}

TEST(RunRepeats, AcceptanceRateTracksKeptFraction) {
    const ExperimentConfig cfg = small_config();
    const Experiment exp = build_experiment(cfg);
    const RunOutput out = run_repeats(exp, ExactKde{cfg.sigma_a}, 1);
    const double p = static_cast<double>(exp.training.kept_count()) / exp.training.size();
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(out.attempts));
    EXPECT_NEAR(out.acceptance_rate(), p, 5.0 * se);
}

TEST(RunRepeats, NullMeanLogRatioMatchesNegativeKl) {
    ExperimentConfig cfg = small_config();
    cfg.repeats = 120;
    cfg.m = 100;
    const Experiment exp = build_experiment(cfg);
    const RunOutput out = run_repeats(exp, ExactKde{cfg.sigma_a}, 1);
    const auto lr = summarize(out.series.at("lr_YH0_exact"));
    RngStream mc_rng(777);
    const McEstimate kl = kl_monte_carlo(exp.full, exp.retained, 200000, mc_rng);
    const double se = std::hypot(lr.standard_error(), kl.standard_error);
    EXPECT_NEAR(lr.mean(), -kl.estimate, 4.0 * se);
}

TEST(RunRepeats, RetainedMeanLogRatioMatchesForwardKl) {
    ExperimentConfig cfg = small_config();
    cfg.repeats = 120;
    cfg.m = 100;
    const Experiment exp = build_experiment(cfg);
    const RunOutput out = run_repeats(exp, ExactKde{cfg.sigma_a}, 1);
    const auto lr = summarize(out.series.at("lr_YH1_exact"));
    RngStream mc_rng(778);
    const McEstimate kl = kl_monte_carlo(exp.retained, exp.full, 200000, mc_rng);
    const double se = std::hypot(lr.standard_error(), kl.standard_error);
    EXPECT_NEAR(lr.mean(), kl.estimate, 4.0 * se);
}

TEST(RunRepeats, RedrawModeIsDeterministicAndDistinct) {
    ExperimentConfig cfg = small_config();
    cfg.redraw_x_per_repeat = true;
    cfg.repeats = 10;
    const Experiment exp = build_experiment(cfg);
    const RunOutput a = run_repeats(exp, ExactKde{cfg.sigma_a}, 1);
    const RunOutput b = run_repeats(exp, ExactKde{cfg.sigma_a}, 3);
    for (const auto& name : a.stat_names) {
        const auto& va = a.series.at(name);
        const auto& vb = b.series.at(name);
        for (std::size_t r = 0; r < va.size(); ++r) ASSERT_EQ(va[r], vb[r]);
    }
    ExperimentConfig fixed = cfg;
    fixed.redraw_x_per_repeat = false;
    const RunOutput c = run_repeats(build_experiment(fixed), ExactKde{cfg.sigma_a}, 1);
    int identical = 0;
    const auto& va = a.series.at("lr_YH0_exact");
    const auto& vc = c.series.at("lr_YH0_exact");
    for (std::size_t r = 0; r < va.size(); ++r)
        if (va[r] == vc[r]) ++identical;
    EXPECT_LE(identical, 1);
}

TEST(QExperiments, RowLayoutAndCriticalValues) {
    ExperimentConfig cfg = small_config();
    cfg.estimators = {"exact", "kbc:0.1"};
    const QRunOutput q1 = run_q_experiment("q1", cfg, 1);
    // per estimator: one lr row + one per phi family
    EXPECT_EQ(q1.rows.size(), 2u * (1u + cfg.phi_families.size()));
    const double crit = KsResult{0.0, static_cast<std::size_t>(cfg.repeats), static_cast<std::size_t>(cfg.repeats)}
                            .critical_value(0.05);
    for (const KsRow& row : q1.rows) {
        EXPECT_EQ(row.experiment, "q1");
        EXPECT_DOUBLE_EQ(row.critical_05, crit);
        EXPECT_EQ(row.repeats, static_cast<std::size_t>(cfg.repeats));
    }
    EXPECT_EQ(q1.series.size(), 2u * 26u);
    EXPECT_EQ(q1.series.front().first.rfind("exact/", 0), 0u);
    EXPECT_THROW(run_q_experiment("q4", cfg, 1), std::invalid_argument);
}

TEST(QExperiments, MatchedBandwidthClassifierTracksTheReference) {
    ExperimentConfig cfg = small_config();
    cfg.estimators = {"kbc:0.1"};  // equals sigma_a
    const QRunOutput q1 = run_q_experiment("q1", cfg, 1);
    for (const KsRow& row : q1.rows) EXPECT_LE(row.ks, 0.1) << row.statistic;
}

TEST(QExperiments, DeletionSamplerReplicatesRetainedDraws) {
    ExperimentConfig cfg = small_config();
    cfg.estimators = {"kbc:0.1"};
    const QRunOutput q2 = run_q_experiment("q2", cfg, 1);
    for (const KsRow& row : q2.rows) EXPECT_LE(row.ks, 2.0 * row.critical_05) << row.statistic;
}

TEST(QExperiments, NullAndRetainedSamplesSeparate) {
    ExperimentConfig cfg = small_config();
    cfg.lambda = 0.5;
    cfg.estimators = {"kbc:0.1"};
    const QRunOutput q3 = run_q_experiment("q3", cfg, 1);
    for (const KsRow& row : q3.rows)
        if (row.statistic == "lr_dre" || row.statistic == "lr_exact")
            EXPECT_GE(row.ks, 0.4) << row.statistic;
}

TEST(Writers, ExactCsvBytes) {
    QRunOutput out;
    out.experiment = "q1";
    out.series.emplace_back("exact/lr_YH0_exact", std::vector<double>{0.5, -1.0 / 3.0});
    out.rows.push_back({"q1", "exact", "lr", 0.125, 0.25, 2});
    std::ostringstream stats;
    write_statistics_csv(stats, out);
    EXPECT_EQ(stats.str(),
              "name,repeat_index,value\n"
              "exact/lr_YH0_exact,0,0.5\n"
              "exact/lr_YH0_exact,1,-0.33333333333333331\n");
    std::ostringstream ks;
    write_ks_table_csv(ks, out.rows);
    EXPECT_EQ(ks.str(),
              "experiment,estimator,statistic,ks,critical_05,repeats\n"
              "q1,exact,lr,0.125,0.25,2\n");
}

}  // namespace
}  // namespace drdel
