#include "hullstereo/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "hullstereo/errors.hpp"

namespace hullstereo {

using nlohmann::json;

RunConfig run_config_defaults() { return RunConfig{}; }

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

} // namespace

RunConfig run_config_load(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in)
        throw IoError("cannot open " + json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(json_path + ": " + e.what());
    }
    RunConfig cfg;
    try {
        reject_unknown(j, {"k", "d_threshold", "mode", "features", "refine", "hull_depth",
                           "seed", "pattern_seed"},
                       json_path);
        maybe(j, "k", cfg.match.k);
        maybe(j, "d_threshold", cfg.match.d_threshold);
        if (j.contains("mode"))
            cfg.match.mode = hull_mode_from_name(j.at("mode").get<std::string>());
        if (j.contains("features")) {
            const json& f = j["features"];
            reject_unknown(f, {"channels", "groups", "census_radius"}, json_path + ":features");
            maybe(f, "channels", cfg.match.features.channels);
            maybe(f, "groups", cfg.match.features.groups);
            maybe(f, "census_radius", cfg.match.features.census_radius);
        }
        if (j.contains("refine")) {
            const json& r = j["refine"];
            reject_unknown(r,
                           {"r", "iterations", "tau_init", "tau_update", "lambda_flag",
                            "smooth_radius", "smooth_sigma"},
                           json_path + ":refine");
            maybe(r, "r", cfg.match.refine.r);
            maybe(r, "iterations", cfg.match.refine.iterations);
            maybe(r, "tau_init", cfg.match.refine.tau_init);
            maybe(r, "tau_update", cfg.match.refine.tau_update);
            maybe(r, "lambda_flag", cfg.match.refine.lambda_flag);
            maybe(r, "smooth_radius", cfg.match.refine.smooth_radius);
            maybe(r, "smooth_sigma", cfg.match.refine.smooth_sigma);
        }
        maybe(j, "hull_depth", cfg.hull_depth);
        maybe(j, "seed", cfg.seed);
        maybe(j, "pattern_seed", cfg.pattern_seed);
    } catch (const json::exception& e) {
        throw ConfigError(json_path + ": " + e.what());
    }
    validate_feature_config(cfg.match.features);
    validate_refine_config(cfg.match.refine);
    if (cfg.match.k < 1 || cfg.match.k > 32)
        throw ConfigError(json_path + ": k must be in [1, 32]");
    if (cfg.hull_depth < 1 || cfg.hull_depth > 12)
        throw ConfigError(json_path + ": hull_depth must be in [1, 12]");
    return cfg;
}

void run_config_save(const std::string& json_path, const RunConfig& cfg) {
    json j;
    j["k"] = cfg.match.k;
    j["d_threshold"] = cfg.match.d_threshold;
    j["mode"] = hull_mode_name(cfg.match.mode);
    j["features"]["channels"] = cfg.match.features.channels;
    j["features"]["groups"] = cfg.match.features.groups;
    j["features"]["census_radius"] = cfg.match.features.census_radius;
    j["refine"]["r"] = cfg.match.refine.r;
    j["refine"]["iterations"] = cfg.match.refine.iterations;
    j["refine"]["tau_init"] = cfg.match.refine.tau_init;
    j["refine"]["tau_update"] = cfg.match.refine.tau_update;
    j["refine"]["lambda_flag"] = cfg.match.refine.lambda_flag;
    j["refine"]["smooth_radius"] = cfg.match.refine.smooth_radius;
    j["refine"]["smooth_sigma"] = cfg.match.refine.smooth_sigma;
    j["hull_depth"] = cfg.hull_depth;
    j["seed"] = cfg.seed;
    j["pattern_seed"] = cfg.pattern_seed;
    std::ofstream out(json_path);
    if (!out)
        throw IoError("cannot open " + json_path + " for writing");
    out << j.dump(2) << "\n";
    if (!out)
        throw IoError("short write to " + json_path);
}

} // namespace hullstereo
