#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drdel/config.hpp"
#include "drdel/harness.hpp"
#include "drdel/numeric.hpp"
#include "drdel/stats.hpp"

namespace drdel::cli {

namespace detail {

inline nlohmann::json summary_base(const std::string& command, const Experiment& exp) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config_to_json(exp.cfg);
    j["dataset"] = {{"N", exp.training.size()},
                    {"deleted", exp.training.deleted_count()},
                    {"kept", exp.training.kept_count()},
                    {"bound", exp.bound}};
    return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f.good()) throw std::runtime_error("short write to " + path.string());
}

inline void write_summary(const std::filesystem::path& dir, const nlohmann::json& j) {
    write_text_file(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace detail

// Parses and runs one invocation. Returns 0 on success, 2 for configuration
// or usage errors, 3 for runtime failures.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"density-ratio tools for approximate data deletion in KDE models"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    int threads = 0;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"generate", "draw the training set and write dataset.csv"},
        {"q1", "null-sample statistic agreement between estimator and reference ratios"},
        {"q2", "deletion-sampled sets versus retained-model sets"},
        {"q3", "separation of full-model and retained-model samples"},
        {"test", "calibrated deletion test on one observed sample"},
        {"mmd", "closed-form and U-statistic MMD between retained and full models"},
    };
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--set", overrides, "key=value override, repeatable");
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--threads", threads, "worker threads, 0 = hardware default");
    }

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file: " + config_path);
        nlohmann::json raw;
        try {
            in >> raw;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file " + config_path + " is not valid JSON: " + e.what());
        }
        for (const auto& kv : overrides) apply_override(raw, kv);
        ExperimentConfig cfg = config_from_json(raw);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (threads < 0) throw ConfigError("--threads must be nonnegative");
        int worker_threads = threads;
        if (worker_threads == 0)
            worker_threads = std::max(1u, std::thread::hardware_concurrency());

        const std::filesystem::path dir(cfg.output_dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());

        const std::string command = app.get_subcommands().front()->get_name();
        const auto t0 = std::chrono::steady_clock::now();
        const Experiment exp = build_experiment(cfg);

        if (command == "generate") {
            std::ostringstream csv;
            write_dataset_csv(csv, exp.training);
            detail::write_text_file(dir / "dataset.csv", csv.str());
            nlohmann::json j = detail::summary_base(command, exp);
            detail::write_summary(dir, j);
            out << "wrote " << (dir / "dataset.csv").string() << " (" << exp.training.size() << " points, "
                << exp.training.deleted_count() << " deleted)\n";
            return 0;
        }

        if (command == "q1" || command == "q2" || command == "q3") {
            const QRunOutput result = run_q_experiment(command, cfg, worker_threads);
            std::ostringstream stats_csv;
            write_statistics_csv(stats_csv, result);
            detail::write_text_file(dir / "statistics.csv", stats_csv.str());
            std::ostringstream ks_csv;
            write_ks_table_csv(ks_csv, result.rows);
            detail::write_text_file(dir / "ks_table.csv", ks_csv.str());

            nlohmann::json j = detail::summary_base(command, exp);
            j["run"]["threads"] = worker_threads;
            j["run"]["elapsed_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            for (const auto& [label, rate] : result.acceptance_rate) j["run"]["acceptance_rate"][label] = rate;
            for (const auto& [label, n] : result.attempts) j["run"]["attempts"][label] = n;
            for (const auto& [label, n] : result.clamped) j["run"]["clamped_values"][label] = n;
            detail::write_summary(dir, j);

            for (const KsRow& row : result.rows)
                out << row.experiment << ' ' << row.estimator << ' ' << row.statistic << " ks=" << row.ks
                    << " critical_05=" << row.critical_05 << '\n';
            out << "wrote " << (dir / "statistics.csv").string() << ", " << (dir / "ks_table.csv").string() << '\n';
            return 0;
        }

        if (command == "test") {
            const auto kinds = resolve_estimators(cfg);
            const RatioEstimator estimator = make_estimator(kinds.front(), exp.training);
            RngStream observed_rng = stream_for(cfg.master_seed, stream_key::observed_set);
            const std::vector<Vec2> observed = cfg.test_draw == "h0"
                                                   ? exp.full.sample(static_cast<std::size_t>(cfg.m), observed_rng)
                                                   : exp.retained.sample(static_cast<std::size_t>(cfg.m), observed_rng);
            RngStream cal_rng = stream_for(cfg.master_seed, stream_key::calibration);
            const DeletionTestResult res = deletion_test(exp.full, estimator, observed,
                                                         static_cast<std::size_t>(cfg.n_cal), cfg.alpha, cal_rng);
            nlohmann::json j = detail::summary_base(command, exp);
            j["result"] = {{"estimator", estimator.label},
                           {"statistic", res.statistic},
                           {"threshold", res.threshold},
                           {"reject_full_model", res.reject}};
            detail::write_summary(dir, j);
            out << "estimator=" << estimator.label << " statistic=" << res.statistic
                << " threshold=" << res.threshold << " decision="
                << (res.reject ? "deletion-like (reject full model)" : "consistent with full model") << '\n';
            return 0;
        }

        // mmd
        const double closed = mmd_closed_form_kde(exp.training, cfg.sigma_a, cfg.mmd_bandwidth);
        MeanVar u_stats;
        for (int r = 0; r < cfg.mmd_repeats; ++r) {
            RngStream s_hat = repeat_stream(cfg.master_seed, static_cast<std::uint64_t>(r), repeat_set::model_sample);
            RngStream s_ret =
                repeat_stream(cfg.master_seed, static_cast<std::uint64_t>(r), repeat_set::retained_sample);
            const auto y_hat = exp.full.sample(static_cast<std::size_t>(cfg.m), s_hat);
            const auto y_ret = exp.retained.sample(static_cast<std::size_t>(cfg.m), s_ret);
            u_stats.add(mmd_u_squared(y_ret, y_hat, cfg.mmd_bandwidth));
        }
        nlohmann::json j = detail::summary_base(command, exp);
        j["result"] = {{"closed_form", closed}, {"u_stat_mean", u_stats.mean()}, {"repeats", cfg.mmd_repeats}};
        if (u_stats.count() >= 2) j["result"]["u_stat_standard_error"] = u_stats.standard_error();
        detail::write_summary(dir, j);
        out << "closed_form=" << closed << " u_stat_mean=" << u_stats.mean() << " repeats=" << cfg.mmd_repeats
            << '\n';
        return 0;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace drdel::cli
