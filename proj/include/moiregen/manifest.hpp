#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "moiregen/blend.hpp"
#include "moiregen/corpus.hpp"
#include "moiregen/image.hpp"

// Manifest rows: one JSON object per line, one line per synthesized item.
// A record plus the input files is sufficient to reproduce its output image
// byte for byte. PSNR of identical images is serialized as the string "inf"
// (JSON has no infinity literal).

namespace moiregen {

struct SynthesisRecord {
    std::uint64_t item = 0;
    std::string clean_path;
    std::string pattern_path;
    std::string output_path;
    std::uint64_t seed = 0;
    std::uint64_t seed_stream = 0;
    CropRect clean_crop;
    BlendParams blend;
    double pattern_sharpness = 0.0;
    double pattern_colorfulness = 0.0;
    std::string pattern_tier;
    std::optional<CropRect> pattern_crop;
    double mean_brightness = 0.0;
    std::optional<double> tv;
    std::optional<double> psnr; // +inf sentinel allowed
    std::optional<double> ssim;
    std::optional<double> color_distance;
};

namespace detail {

inline nlohmann::ordered_json rect_to_json(const CropRect& r) {
    return nlohmann::ordered_json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

inline CropRect rect_from_json(const nlohmann::ordered_json& j) {
    return CropRect{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(),
                    j.at("h").get<int>()};
}

inline nlohmann::ordered_json psnr_to_json(double v) {
    if (std::isinf(v))
        return "inf";
    return v;
}

inline double psnr_from_json(const nlohmann::ordered_json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf")
            return std::numeric_limits<double>::infinity();
        throw std::runtime_error("manifest: bad psnr value");
    }
    return j.get<double>();
}

} // namespace detail

inline nlohmann::ordered_json record_to_json(const SynthesisRecord& r) {
    using json = nlohmann::ordered_json;
    json j;
    j["item"] = r.item;
    j["clean_path"] = r.clean_path;
    j["pattern_path"] = r.pattern_path;
    j["output_path"] = r.output_path;
    j["seed"] = r.seed;
    j["seed_stream"] = r.seed_stream;
    j["clean_crop"] = detail::rect_to_json(r.clean_crop);
    j["blend"] = json{{"omega_m", r.blend.omega_m}, {"omega_g", r.blend.omega_g},
                      {"op_m", r.blend.op_m},       {"op_g", r.blend.op_g},
                      {"op_n", r.blend.op_n},       {"r_m", r.blend.r_m},
                      {"r_g", r.blend.r_g}};
    json pattern;
    pattern["sharpness"] = r.pattern_sharpness;
    pattern["colorfulness"] = r.pattern_colorfulness;
    pattern["tier"] = r.pattern_tier;
    pattern["crop"] = r.pattern_crop ? detail::rect_to_json(*r.pattern_crop) : json(nullptr);
    j["pattern"] = pattern;
    json metrics;
    metrics["mean_brightness"] = r.mean_brightness;
    if (r.tv)
        metrics["tv"] = *r.tv;
    if (r.psnr)
        metrics["psnr"] = detail::psnr_to_json(*r.psnr);
    if (r.ssim)
        metrics["ssim"] = *r.ssim;
    if (r.color_distance)
        metrics["color_distance"] = *r.color_distance;
    j["metrics"] = metrics;
    return j;
}

inline SynthesisRecord record_from_json(const nlohmann::ordered_json& j) {
    SynthesisRecord r;
    r.item = j.at("item").get<std::uint64_t>();
    r.clean_path = j.at("clean_path").get<std::string>();
    r.pattern_path = j.at("pattern_path").get<std::string>();
    r.output_path = j.at("output_path").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.seed_stream = j.at("seed_stream").get<std::uint64_t>();
    r.clean_crop = detail::rect_from_json(j.at("clean_crop"));
    const auto& b = j.at("blend");
    r.blend.omega_m = b.at("omega_m").get<double>();
    r.blend.omega_g = b.at("omega_g").get<double>();
    r.blend.op_m = b.at("op_m").get<double>();
    r.blend.op_g = b.at("op_g").get<double>();
    r.blend.op_n = b.at("op_n").get<double>();
    r.blend.r_m = b.at("r_m").get<double>();
    r.blend.r_g = b.at("r_g").get<double>();
    const auto& p = j.at("pattern");
    r.pattern_sharpness = p.at("sharpness").get<double>();
    r.pattern_colorfulness = p.at("colorfulness").get<double>();
    r.pattern_tier = p.at("tier").get<std::string>();
    if (!p.at("crop").is_null())
        r.pattern_crop = detail::rect_from_json(p.at("crop"));
    const auto& m = j.at("metrics");
    r.mean_brightness = m.at("mean_brightness").get<double>();
    if (m.contains("tv"))
        r.tv = m.at("tv").get<double>();
    if (m.contains("psnr"))
        r.psnr = detail::psnr_from_json(m.at("psnr"));
    if (m.contains("ssim"))
        r.ssim = m.at("ssim").get<double>();
    if (m.contains("color_distance"))
        r.color_distance = m.at("color_distance").get<double>();
    return r;
}

inline void write_manifest(const std::vector<SynthesisRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write manifest: " + path);
    for (const auto& r : records)
        out << record_to_json(r).dump() << "\n";
}

struct ManifestReadResult {
    std::vector<SynthesisRecord> records;
    std::vector<std::string> errors; // "line N: <reason>" for malformed lines
};

inline ManifestReadResult read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open manifest: " + path);
    ManifestReadResult out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        try {
            out.records.push_back(record_from_json(nlohmann::ordered_json::parse(line)));
        } catch (const std::exception& e) {
            out.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace moiregen
