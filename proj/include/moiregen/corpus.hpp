#pragma once

#include <optional>
#include <string>
#include <vector>

#include "moiregen/image.hpp"
#include "moiregen/rng.hpp"

// Pattern corpus preprocessing: multi-scale cropping plus the
// sharpness/colorfulness acceptance test that turns raw 4K pattern frames
// into training patches.

namespace moiregen {

enum class ScaleTier {
    Native,     // random crop at native resolution
    R2560x1440, // resize to 2560x1440, then crop
    R1920x1080, // resize to 1920x1080, then crop
    DirectResize // whole frame resized to the patch size
};

inline const char* scale_tier_name(ScaleTier t) {
    switch (t) {
    case ScaleTier::Native: return "native4k";
    case ScaleTier::R2560x1440: return "r2560x1440";
    case ScaleTier::R1920x1080: return "r1920x1080";
    case ScaleTier::DirectResize: return "direct-resize";
    }
    return "unknown";
}

struct SelectionConfig {
    int patch_w = 768;
    int patch_h = 768;
    int attempts = 3;            // n
    double sharpness_min = 15.0; // delta_s, on the 0-255 grayscale
    double colorfulness_min = 2.0; // delta_c
    double p_native = 0.5;       // p1 threshold for the native-crop branch
    double p_tier1 = 1.0 / 3.0;  // p2 cut: <= -> 2560x1440
    double p_tier2 = 2.0 / 3.0;  // p2 cut: <= -> 1920x1080, else direct resize

    void validate() const {
        if (patch_w < 1 || patch_h < 1)
            throw std::invalid_argument("selection: patch dims must be >= 1");
        if (attempts < 1)
            throw std::invalid_argument("selection: attempts must be >= 1");
        if (sharpness_min < 0.0 || colorfulness_min < 0.0)
            throw std::invalid_argument("selection: thresholds must be >= 0");
        if (p_native < 0.0 || p_native > 1.0 || p_tier1 < 0.0 || p_tier2 > 1.0 ||
            p_tier1 > p_tier2)
            throw std::invalid_argument("selection: probabilities must satisfy 0 <= p_tier1 <= p_tier2 <= 1");
        if (patch_w > 1920 || patch_h > 1080)
            throw std::invalid_argument("selection: patch dims exceed the smallest resize tier (1920x1080)");
    }
};

struct PatternPatch {
    ImageBuf image;
    double sharpness = 0.0;
    double colorfulness = 0.0;
    std::string source_path;
    ScaleTier tier = ScaleTier::Native;
    std::optional<CropRect> rect; // empty for direct-resize patches
};

namespace detail {

inline double population_stddev(const std::vector<float>& v) {
    double mean = 0.0;
    for (float x : v)
        mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (float x : v) {
        double d = x - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(v.size()));
}

} // namespace detail

// sigma(F * G), with grayscale scaled to 0-255 before filtering so the
// delta_s=15 threshold lands on the magnitude scale it was tuned for.
inline double sharpness(const ImageBuf& patch) {
    ImageBuf gray = patch.channels == 1 ? patch : to_grayscale(patch);
    for (float& v : gray.data)
        v = static_cast<float>(v * 255.0);
    ImageBuf response = convolve_laplacian(gray);
    return detail::population_stddev(response.data);
}

// sqrt(sigma(A)^2 + sigma(B)^2) over the Lab chroma planes.
inline double colorfulness(const ImageBuf& patch) {
    LabPlanes lab = rgb_to_lab(patch);
    double sa = detail::population_stddev(lab.a.data);
    double sb = detail::population_stddev(lab.b.data);
    return std::sqrt(sa * sa + sb * sb);
}

struct MultiScaleCrop {
    ImageBuf image;
    ScaleTier tier;
    std::optional<CropRect> rect;
};

namespace detail {

inline ScaleTier choose_tier(double p1, double p2, const SelectionConfig& cfg) {
    if (p1 <= cfg.p_native)
        return ScaleTier::Native;
    if (p2 <= cfg.p_tier1)
        return ScaleTier::R2560x1440;
    if (p2 <= cfg.p_tier2)
        return ScaleTier::R1920x1080;
    return ScaleTier::DirectResize;
}

inline CropRect random_crop_rect(RngEngine& rng, int img_w, int img_h, int w, int h) {
    // stream contract: x then y
    int x = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(img_w - w + 1)));
    int y = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(img_h - h + 1)));
    return CropRect{x, y, w, h};
}

} // namespace detail

// One multi-scale cropping attempt. Stream contract: draws p1, then p2
// (always both), then crop x and y for the cropping branches; the
// direct-resize branch draws nothing further.
inline MultiScaleCrop multi_scale_crop(const ImageBuf& frame, const SelectionConfig& cfg,
                                       RngEngine& rng) {
    const double p1 = uniform_double(rng);
    const double p2 = uniform_double(rng);
    const ScaleTier tier = detail::choose_tier(p1, p2, cfg);
    switch (tier) {
    case ScaleTier::Native: {
        if (frame.width < cfg.patch_w || frame.height < cfg.patch_h)
            throw std::invalid_argument("multi_scale_crop: frame smaller than patch");
        CropRect r = detail::random_crop_rect(rng, frame.width, frame.height, cfg.patch_w, cfg.patch_h);
        return {crop(frame, r), tier, r};
    }
    case ScaleTier::R2560x1440: {
        ImageBuf scaled = resize(frame, 2560, 1440);
        CropRect r = detail::random_crop_rect(rng, scaled.width, scaled.height, cfg.patch_w, cfg.patch_h);
        return {crop(scaled, r), tier, r};
    }
    case ScaleTier::R1920x1080: {
        ImageBuf scaled = resize(frame, 1920, 1080);
        CropRect r = detail::random_crop_rect(rng, scaled.width, scaled.height, cfg.patch_w, cfg.patch_h);
        return {crop(scaled, r), tier, r};
    }
    case ScaleTier::DirectResize:
    default:
        return {resize(frame, cfg.patch_w, cfg.patch_h), tier, std::nullopt};
    }
}

// Up to cfg.attempts multi-scale crops; the first one passing both score
// thresholds wins. nullopt when every attempt fails (bounded variant of the
// preprocessing loop, so batch runs terminate).
inline std::optional<PatternPatch> select_patch(const ImageBuf& frame, const SelectionConfig& cfg,
                                                RngEngine& rng) {
    cfg.validate();
    for (int i = 0; i < cfg.attempts; ++i) {
        MultiScaleCrop attempt = multi_scale_crop(frame, cfg, rng);
        const double s = sharpness(attempt.image);
        const double c = colorfulness(attempt.image);
        if (s >= cfg.sharpness_min && c >= cfg.colorfulness_min) {
            return PatternPatch{std::move(attempt.image), s, c, "", attempt.tier, attempt.rect};
        }
    }
    return std::nullopt;
}

} // namespace moiregen
