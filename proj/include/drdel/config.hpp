#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "drdel/dre.hpp"
#include "drdel/mixture.hpp"
#include "drdel/stats.hpp"
#include "drdel/training.hpp"

namespace drdel {

// Configuration problems are user errors; the CLI maps them to exit code 2.
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string dataset = "mog8";
    double lambda = 0.8;
    int n_train = 400;                 // key "N"
    int m = 400;                       // statistic sample size
    int repeats = 250;                 // key "R"
    double sigma_a = 0.1;              // KDE bandwidth
    std::vector<std::string> estimators{"kbc-grid"};
    std::vector<std::string> phi_families{"logt", "kl", "hellinger"};
    std::uint64_t master_seed = 987654321;
    std::string deletion_rule = "bernoulli";
    std::string output_dir = "out";
    std::vector<int> deleted_clusters;  // empty selects the dataset default
    std::vector<double> sigma_c_grid;
    std::vector<int> k_grid{1, 2, 5, 10, 20, 50, 100};
    bool redraw_x_per_repeat = false;
    std::string knn_semantics = "multiset";
    int n_cal = 200;
    double alpha = 0.05;
    std::string test_draw = "h0";
    double mmd_bandwidth = 1.0;
    int mmd_repeats = 1;
};

inline std::vector<double> default_sigma_c_grid() {
    std::vector<double> g;
    for (int i = 500; i <= 2000; i += 125) g.push_back(static_cast<double>(i) / 10000.0);
    return g;
}

inline const std::vector<int>& default_deleted_clusters(const std::string& dataset) {
    if (dataset == "mog8") return default_downweighted_clusters_mog8();
    if (dataset == "ckb8") return default_downweighted_clusters_ckb8();
    throw ConfigError("unknown dataset: " + dataset);
}

// Fills dataset-dependent defaults and checks every field; throws ConfigError
// with the offending key in the message.
inline void validate_config(ExperimentConfig& cfg) {
    if (cfg.dataset != "mog8" && cfg.dataset != "ckb8") throw ConfigError("dataset must be mog8 or ckb8");
    if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw ConfigError("lambda must be in (0,1]");
    if (cfg.n_train < 2) throw ConfigError("N must be at least 2");
    if (cfg.m < 1) throw ConfigError("m must be positive");
    if (cfg.repeats < 2) throw ConfigError("R must be at least 2");
    if (!(cfg.sigma_a > 0.0)) throw ConfigError("sigma_a must be positive");
    if (cfg.estimators.empty()) throw ConfigError("estimators must be nonempty");
    if (cfg.phi_families.empty()) throw ConfigError("phi_families must be nonempty");
    for (const auto& f : cfg.phi_families) parse_phi_family(f);  // throws on bad name
    try {
        parse_deletion_rule(cfg.deletion_rule);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.deleted_clusters.empty()) cfg.deleted_clusters = default_deleted_clusters(cfg.dataset);
    for (int c : cfg.deleted_clusters)
        if (c < 1 || c > 8) throw ConfigError("deleted_clusters entries must be in 1..8");
    if (cfg.sigma_c_grid.empty()) cfg.sigma_c_grid = default_sigma_c_grid();
    for (double s : cfg.sigma_c_grid)
        if (!(s > 0.0)) throw ConfigError("sigma_c_grid entries must be positive");
    if (cfg.k_grid.empty()) throw ConfigError("k_grid must be nonempty");
    for (int k : cfg.k_grid)
        if (k < 1) throw ConfigError("k_grid entries must be positive");
    if (cfg.knn_semantics != "multiset") throw ConfigError("knn_semantics: only \"multiset\" is supported");
    if (cfg.n_cal < 1) throw ConfigError("n_cal must be positive");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
    if (cfg.test_draw != "h0" && cfg.test_draw != "h1") throw ConfigError("test_draw must be h0 or h1");
    if (!(cfg.mmd_bandwidth > 0.0)) throw ConfigError("mmd_bandwidth must be positive");
    if (cfg.mmd_repeats < 1) throw ConfigError("mmd_repeats must be positive");
}

namespace detail {

template <class T>
T checked_get(const nlohmann::json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key \"" + key + "\" has the wrong type");
    }
}

}  // namespace detail

// Strict parse: unknown keys are errors so typos cannot silently fall back to
// defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    ExperimentConfig cfg;
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        if (key == "dataset")
            cfg.dataset = detail::checked_get<std::string>(j, key);
        else if (key == "lambda")
            cfg.lambda = detail::checked_get<double>(j, key);
        else if (key == "N")
            cfg.n_train = detail::checked_get<int>(j, key);
        else if (key == "m")
            cfg.m = detail::checked_get<int>(j, key);
        else if (key == "R")
            cfg.repeats = detail::checked_get<int>(j, key);
        else if (key == "sigma_a")
            cfg.sigma_a = detail::checked_get<double>(j, key);
        else if (key == "estimators")
            cfg.estimators = detail::checked_get<std::vector<std::string>>(j, key);
        else if (key == "phi_families")
            cfg.phi_families = detail::checked_get<std::vector<std::string>>(j, key);
        else if (key == "master_seed")
            cfg.master_seed = detail::checked_get<std::uint64_t>(j, key);
        else if (key == "deletion_rule")
            cfg.deletion_rule = detail::checked_get<std::string>(j, key);
        else if (key == "output_dir")
            cfg.output_dir = detail::checked_get<std::string>(j, key);
        else if (key == "deleted_clusters")
            cfg.deleted_clusters = detail::checked_get<std::vector<int>>(j, key);
        else if (key == "sigma_c_grid")
            cfg.sigma_c_grid = detail::checked_get<std::vector<double>>(j, key);
        else if (key == "k_grid")
            cfg.k_grid = detail::checked_get<std::vector<int>>(j, key);
        else if (key == "redraw_x_per_repeat")
            cfg.redraw_x_per_repeat = detail::checked_get<bool>(j, key);
        else if (key == "knn_semantics")
            cfg.knn_semantics = detail::checked_get<std::string>(j, key);
        else if (key == "n_cal")
            cfg.n_cal = detail::checked_get<int>(j, key);
        else if (key == "alpha")
            cfg.alpha = detail::checked_get<double>(j, key);
        else if (key == "test_draw")
            cfg.test_draw = detail::checked_get<std::string>(j, key);
        else if (key == "mmd_bandwidth")
            cfg.mmd_bandwidth = detail::checked_get<double>(j, key);
        else if (key == "mmd_repeats")
            cfg.mmd_repeats = detail::checked_get<int>(j, key);
        else
            throw ConfigError("unknown config key: " + key);
    }
    validate_config(cfg);
    return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = cfg.dataset;
    j["lambda"] = cfg.lambda;
    j["N"] = cfg.n_train;
    j["m"] = cfg.m;
    j["R"] = cfg.repeats;
    j["sigma_a"] = cfg.sigma_a;
    j["estimators"] = cfg.estimators;
    j["phi_families"] = cfg.phi_families;
    j["master_seed"] = cfg.master_seed;
    j["deletion_rule"] = cfg.deletion_rule;
    j["output_dir"] = cfg.output_dir;
    j["deleted_clusters"] = cfg.deleted_clusters;
    j["sigma_c_grid"] = cfg.sigma_c_grid;
    j["k_grid"] = cfg.k_grid;
    j["redraw_x_per_repeat"] = cfg.redraw_x_per_repeat;
    j["knn_semantics"] = cfg.knn_semantics;
    j["n_cal"] = cfg.n_cal;
    j["alpha"] = cfg.alpha;
    j["test_draw"] = cfg.test_draw;
    j["mmd_bandwidth"] = cfg.mmd_bandwidth;
    j["mmd_repeats"] = cfg.mmd_repeats;
    return j;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

namespace detail {

inline bool is_array_key(const std::string& key) {
    return key == "estimators" || key == "phi_families" || key == "deleted_clusters" ||
           key == "sigma_c_grid" || key == "k_grid";
}

inline nlohmann::json parse_scalar(const std::string& text) {
    nlohmann::json v = nlohmann::json::parse(text, nullptr, false);
    if (v.is_discarded() || v.is_object() || v.is_array()) return nlohmann::json(text);
    return v;
}

}  // namespace detail

// Applies one "key=value" override on top of a JSON config object. Array keys
// accept comma-separated values.
inline void apply_override(nlohmann::json& j, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (detail::is_array_key(key)) {
        nlohmann::json arr = nlohmann::json::array();
        std::size_t start = 0;
        while (start <= value.size()) {
            const auto comma = value.find(',', start);
            const std::string piece =
                comma == std::string::npos ? value.substr(start) : value.substr(start, comma - start);
            if (!piece.empty()) arr.push_back(detail::parse_scalar(piece));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        j[key] = arr;
    } else {
        j[key] = detail::parse_scalar(value);
    }
}

// Expands estimator strings into concrete kinds. Grid entries fan out over
// the configured grids; duplicates (by label) keep their first occurrence.
inline std::vector<EstimatorKind> resolve_estimators(const ExperimentConfig& cfg) {
    std::vector<EstimatorKind> kinds;
    std::vector<std::string> seen;
    auto push = [&](EstimatorKind kind) {
        const std::string label = estimator_label(kind);
        for (const auto& s : seen)
            if (s == label) return;
        seen.push_back(label);
        kinds.push_back(std::move(kind));
    };
    for (const auto& spec : cfg.estimators) {
        if (spec == "exact") {
            push(ExactKde{cfg.sigma_a});
        } else if (spec == "kbc-grid") {
            for (double s : cfg.sigma_c_grid) push(Kbc{s});
        } else if (spec == "knn-grid") {
            for (int k : cfg.k_grid) push(Knn{static_cast<std::size_t>(k)});
        } else if (spec.rfind("kbc:", 0) == 0) {
            try {
                std::size_t used = 0;
                const double s = std::stod(spec.substr(4), &used);
                if (used != spec.size() - 4 || !(s > 0.0)) throw std::invalid_argument(spec);
                push(Kbc{s});
            } catch (const std::exception&) {
                throw ConfigError("bad estimator spec: " + spec);
            }
        } else if (spec.rfind("knn:", 0) == 0) {
            try {
                std::size_t used = 0;
                const long k = std::stol(spec.substr(4), &used);
                if (used != spec.size() - 4 || k < 1) throw std::invalid_argument(spec);
                push(Knn{static_cast<std::size_t>(k)});
            } catch (const std::exception&) {
                throw ConfigError("bad estimator spec: " + spec);
            }
        } else {
            throw ConfigError("bad estimator spec: " + spec);
        }
    }
    return kinds;
}

}  // namespace drdel
