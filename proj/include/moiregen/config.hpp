#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "moiregen/blend.hpp"
#include "moiregen/corpus.hpp"
#include "moiregen/metrics.hpp"

// Pipeline configuration: JSON file -> validated PipelineConfig, with strict
// unknown-key rejection and MOIREGEN_* environment overrides applied between
// load and validation. Omitted fields take the published defaults (768x768
// patches, thresholds 15/2, omega in [0.65,0.75], 384x384 clean crops).

namespace moiregen {

struct MetricsConfig {
    bool tv = true;
    bool psnr = true;
    bool ssim = true;
    bool color_distance = false;
    std::string color_reference_dir; // pool of reference images, required when color_distance is on
};

struct PipelineConfig {
    std::string pattern_dir;
    std::string clean_dir;
    std::string output_dir;
    std::uint64_t seed = 0;
    int workers = 0; // 0 -> hardware concurrency
    int samples_per_clean = 1;
    int clean_crop_w = 384;
    int clean_crop_h = 384;
    SelectionConfig selection;
    BlendSampling blend;
    bool multiply_only = false;
    std::string tone_matrix_path;
    std::string pattern_resize = "stretch"; // or "crop-center"
    MetricsConfig metrics;

    bool operator==(const PipelineConfig&) const = default;
};

inline bool operator==(const MetricsConfig& a, const MetricsConfig& b) {
    return a.tv == b.tv && a.psnr == b.psnr && a.ssim == b.ssim &&
           a.color_distance == b.color_distance && a.color_reference_dir == b.color_reference_dir;
}

namespace detail {

using json = nlohmann::ordered_json;

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& scope, std::vector<std::string>& errors) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.contains(it.key()))
            errors.push_back("unknown config key: " + scope + it.key());
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key))
        obj.at(key).get_to(out);
}

} // namespace detail

inline void validate_config(const PipelineConfig& cfg) {
    std::vector<std::string> errors;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok)
            errors.push_back(msg);
    };
    check(cfg.workers >= 0, "workers must be >= 0");
    check(cfg.samples_per_clean >= 1, "samples_per_clean must be >= 1");
    check(cfg.clean_crop_w >= 1 && cfg.clean_crop_h >= 1, "clean_crop dims must be >= 1");
    check(cfg.pattern_resize == "stretch" || cfg.pattern_resize == "crop-center",
          "pattern_resize must be \"stretch\" or \"crop-center\"");
    check(!cfg.metrics.color_distance || !cfg.metrics.color_reference_dir.empty(),
          "metrics.color_distance requires metrics.color_reference_dir");
    try {
        cfg.selection.validate();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    try {
        cfg.blend.validate();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors)
            msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
}

inline nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
    using detail::json;
    json j;
    j["pattern_dir"] = cfg.pattern_dir;
    j["clean_dir"] = cfg.clean_dir;
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["samples_per_clean"] = cfg.samples_per_clean;
    j["clean_crop"] = {{"width", cfg.clean_crop_w}, {"height", cfg.clean_crop_h}};
    j["selection"] = {{"patch_width", cfg.selection.patch_w},
                      {"patch_height", cfg.selection.patch_h},
                      {"attempts", cfg.selection.attempts},
                      {"sharpness_min", cfg.selection.sharpness_min},
                      {"colorfulness_min", cfg.selection.colorfulness_min},
                      {"p_native", cfg.selection.p_native},
                      {"p_tier1", cfg.selection.p_tier1},
                      {"p_tier2", cfg.selection.p_tier2}};
    j["blend"] = {{"omega_min", cfg.blend.omega_min},
                  {"omega_max", cfg.blend.omega_max},
                  {"op_multiply", cfg.blend.op_m},
                  {"op_grain", cfg.blend.op_g},
                  {"op_background", cfg.blend.op_n}};
    j["multiply_only"] = cfg.multiply_only;
    j["tone_matrix"] = cfg.tone_matrix_path;
    j["pattern_resize"] = cfg.pattern_resize;
    j["metrics"] = {{"tv", cfg.metrics.tv},
                    {"psnr", cfg.metrics.psnr},
                    {"ssim", cfg.metrics.ssim},
                    {"color_distance", cfg.metrics.color_distance},
                    {"color_reference_dir", cfg.metrics.color_reference_dir}};
    return j;
}

inline PipelineConfig config_from_json(const nlohmann::ordered_json& j) {
    using detail::json;
    PipelineConfig cfg;
    std::vector<std::string> errors;
    detail::reject_unknown_keys(
        j,
        {"pattern_dir", "clean_dir", "output_dir", "seed", "workers", "samples_per_clean",
         "clean_crop", "selection", "blend", "multiply_only", "tone_matrix", "pattern_resize",
         "metrics"},
        "", errors);
    detail::read_field(j, "pattern_dir", cfg.pattern_dir);
    detail::read_field(j, "clean_dir", cfg.clean_dir);
    detail::read_field(j, "output_dir", cfg.output_dir);
    detail::read_field(j, "seed", cfg.seed);
    detail::read_field(j, "workers", cfg.workers);
    detail::read_field(j, "samples_per_clean", cfg.samples_per_clean);
    if (j.contains("clean_crop")) {
        const json& c = j.at("clean_crop");
        detail::reject_unknown_keys(c, {"width", "height"}, "clean_crop.", errors);
        detail::read_field(c, "width", cfg.clean_crop_w);
        detail::read_field(c, "height", cfg.clean_crop_h);
    }
    if (j.contains("selection")) {
        const json& s = j.at("selection");
        detail::reject_unknown_keys(s,
                                    {"patch_width", "patch_height", "attempts", "sharpness_min",
                                     "colorfulness_min", "p_native", "p_tier1", "p_tier2"},
                                    "selection.", errors);
        detail::read_field(s, "patch_width", cfg.selection.patch_w);
        detail::read_field(s, "patch_height", cfg.selection.patch_h);
        detail::read_field(s, "attempts", cfg.selection.attempts);
        detail::read_field(s, "sharpness_min", cfg.selection.sharpness_min);
        detail::read_field(s, "colorfulness_min", cfg.selection.colorfulness_min);
        detail::read_field(s, "p_native", cfg.selection.p_native);
        detail::read_field(s, "p_tier1", cfg.selection.p_tier1);
        detail::read_field(s, "p_tier2", cfg.selection.p_tier2);
    }
    if (j.contains("blend")) {
        const json& b = j.at("blend");
        detail::reject_unknown_keys(
            b, {"omega_min", "omega_max", "op_multiply", "op_grain", "op_background"}, "blend.",
            errors);
        detail::read_field(b, "omega_min", cfg.blend.omega_min);
        detail::read_field(b, "omega_max", cfg.blend.omega_max);
        detail::read_field(b, "op_multiply", cfg.blend.op_m);
        detail::read_field(b, "op_grain", cfg.blend.op_g);
        detail::read_field(b, "op_background", cfg.blend.op_n);
    }
    detail::read_field(j, "multiply_only", cfg.multiply_only);
    detail::read_field(j, "tone_matrix", cfg.tone_matrix_path);
    detail::read_field(j, "pattern_resize", cfg.pattern_resize);
    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        detail::reject_unknown_keys(
            m, {"tv", "psnr", "ssim", "color_distance", "color_reference_dir"}, "metrics.",
            errors);
        detail::read_field(m, "tv", cfg.metrics.tv);
        detail::read_field(m, "psnr", cfg.metrics.psnr);
        detail::read_field(m, "ssim", cfg.metrics.ssim);
        detail::read_field(m, "color_distance", cfg.metrics.color_distance);
        detail::read_field(m, "color_reference_dir", cfg.metrics.color_reference_dir);
    }
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors)
            msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
    return cfg;
}

// Every config key can be overridden via MOIREGEN_<PATH> (dots and nesting
// become underscores), e.g. MOIREGEN_SEED, MOIREGEN_SELECTION_ATTEMPTS,
// MOIREGEN_BLEND_OMEGA_MIN, MOIREGEN_METRICS_COLOR_DISTANCE.
inline void apply_env_overrides(PipelineConfig& cfg, const char* prefix = "MOIREGEN_") {
    auto get = [&](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv((std::string(prefix) + name).c_str());
        if (!v)
            return std::nullopt;
        return std::string(v);
    };
    auto parse_bool = [](const std::string& s, const char* name) {
        if (s == "1" || s == "true")
            return true;
        if (s == "0" || s == "false")
            return false;
        throw std::invalid_argument(std::string("env override ") + name + ": expected bool, got " + s);
    };
    auto set_str = [&](const char* name, std::string& out) {
        if (auto v = get(name))
            out = *v;
    };
    auto set_u64 = [&](const char* name, std::uint64_t& out) {
        if (auto v = get(name))
            out = std::stoull(*v);
    };
    auto set_int = [&](const char* name, int& out) {
        if (auto v = get(name))
            out = std::stoi(*v);
    };
    auto set_double = [&](const char* name, double& out) {
        if (auto v = get(name))
            out = std::stod(*v);
    };
    auto set_bool = [&](const char* name, bool& out) {
        if (auto v = get(name))
            out = parse_bool(*v, name);
    };

    set_str("PATTERN_DIR", cfg.pattern_dir);
    set_str("CLEAN_DIR", cfg.clean_dir);
    set_str("OUTPUT_DIR", cfg.output_dir);
    set_u64("SEED", cfg.seed);
    set_int("WORKERS", cfg.workers);
    set_int("SAMPLES_PER_CLEAN", cfg.samples_per_clean);
    set_int("CLEAN_CROP_WIDTH", cfg.clean_crop_w);
    set_int("CLEAN_CROP_HEIGHT", cfg.clean_crop_h);
    set_int("SELECTION_PATCH_WIDTH", cfg.selection.patch_w);
    set_int("SELECTION_PATCH_HEIGHT", cfg.selection.patch_h);
    set_int("SELECTION_ATTEMPTS", cfg.selection.attempts);
    set_double("SELECTION_SHARPNESS_MIN", cfg.selection.sharpness_min);
    set_double("SELECTION_COLORFULNESS_MIN", cfg.selection.colorfulness_min);
    set_double("SELECTION_P_NATIVE", cfg.selection.p_native);
    set_double("SELECTION_P_TIER1", cfg.selection.p_tier1);
    set_double("SELECTION_P_TIER2", cfg.selection.p_tier2);
    set_double("BLEND_OMEGA_MIN", cfg.blend.omega_min);
    set_double("BLEND_OMEGA_MAX", cfg.blend.omega_max);
    set_double("BLEND_OP_MULTIPLY", cfg.blend.op_m);
    set_double("BLEND_OP_GRAIN", cfg.blend.op_g);
    set_double("BLEND_OP_BACKGROUND", cfg.blend.op_n);
    set_bool("MULTIPLY_ONLY", cfg.multiply_only);
    set_str("TONE_MATRIX", cfg.tone_matrix_path);
    set_str("PATTERN_RESIZE", cfg.pattern_resize);
    set_bool("METRICS_TV", cfg.metrics.tv);
    set_bool("METRICS_PSNR", cfg.metrics.psnr);
    set_bool("METRICS_SSIM", cfg.metrics.ssim);
    set_bool("METRICS_COLOR_DISTANCE", cfg.metrics.color_distance);
    set_str("METRICS_COLOR_REFERENCE_DIR", cfg.metrics.color_reference_dir);
}

inline PipelineConfig load_config(const std::string& path, bool with_env = true) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    detail::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    if (!j.is_object())
        throw std::runtime_error("config root must be a JSON object: " + path);
    PipelineConfig cfg = config_from_json(j);
    if (with_env)
        apply_env_overrides(cfg);
    validate_config(cfg);
    return cfg;
}

inline void save_config(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write config file: " + path);
    out << config_to_json(cfg).dump(2) << "\n";
}

} // namespace moiregen
