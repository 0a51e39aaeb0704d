#pragma once

#include <cmath>
#include <stdexcept>

#include "moiregen/image.hpp"
#include "moiregen/rng.hpp"

// Moire Image Blending: Multiply and Grain Merge layer modes, alpha
// compositing with opacity-derived ratios, and their weighted combination.
// The multiply-only baseline is the parameter setting omega_m=1, op_m=1,
// not a separate code path. Inputs must already share dimensions; nothing
// here resizes.

namespace moiregen {

// r_x = op_x / (op_x + (1-op_x) * op_n)
inline double composition_ratio(double op_x, double op_n) {
    if (op_x < 0.0 || op_x > 1.0 || op_n < 0.0 || op_n > 1.0)
        throw std::invalid_argument("composition_ratio: opacities must be in [0,1]");
    const double denom = op_x + (1.0 - op_x) * op_n;
    if (denom == 0.0)
        throw std::invalid_argument("composition_ratio: zero denominator (op_x = op_n = 0)");
    return op_x / denom;
}

struct BlendParams {
    double omega_m = 0.7;
    double omega_g = 0.3; // always 1 - omega_m
    double op_m = 1.0;
    double op_g = 0.8;
    double op_n = 1.0;
    double r_m = 1.0;
    double r_g = 0.8;

    void validate() const {
        if (omega_m < 0.0 || omega_m > 1.0 || omega_g != 1.0 - omega_m)
            throw std::invalid_argument("BlendParams: omega_g must equal 1 - omega_m, omega_m in [0,1]");
        for (double op : {op_m, op_g, op_n})
            if (op < 0.0 || op > 1.0)
                throw std::invalid_argument("BlendParams: opacities must be in [0,1]");
        if (r_m != composition_ratio(op_m, op_n) || r_g != composition_ratio(op_g, op_n))
            throw std::invalid_argument("BlendParams: r_m/r_g inconsistent with opacities");
    }
};

inline BlendParams make_blend_params(double omega_m, double op_m = 1.0, double op_g = 0.8,
                                     double op_n = 1.0) {
    BlendParams p;
    p.omega_m = omega_m;
    p.omega_g = 1.0 - omega_m;
    p.op_m = op_m;
    p.op_g = op_g;
    p.op_n = op_n;
    p.r_m = composition_ratio(op_m, op_n);
    p.r_g = composition_ratio(op_g, op_n);
    p.validate();
    return p;
}

// M(I_mp, I_n) = I_mp . I_n
inline ImageBuf multiply(const ImageBuf& pattern, const ImageBuf& base) {
    detail::require_same_shape(pattern, base, "multiply");
    ImageBuf out(pattern.width, pattern.height, pattern.channels);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(static_cast<double>(pattern.data[i]) * base.data[i]);
    return out;
}

// G(I_mp, I_n) = I_mp + I_n - 0.5, clamped to [0,1]
inline ImageBuf grain_merge(const ImageBuf& pattern, const ImageBuf& base) {
    detail::require_same_shape(pattern, base, "grain_merge");
    ImageBuf out(pattern.width, pattern.height, pattern.channels);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = clamp01(static_cast<double>(pattern.data[i]) + base.data[i] - 0.5);
    return out;
}

// r * fore + (1-r) * back
inline ImageBuf alpha_composite(const ImageBuf& fore, const ImageBuf& back, double r) {
    detail::require_same_shape(fore, back, "alpha_composite");
    if (r < 0.0 || r > 1.0)
        throw std::invalid_argument("alpha_composite: r must be in [0,1]");
    ImageBuf out(fore.width, fore.height, fore.channels);
    const double s = 1.0 - r;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(r * fore.data[i] + s * back.data[i]);
    return out;
}

// I_mib = omega_m * [r_m*M + (1-r_m)*I_n] + omega_g * [r_g*G + (1-r_g)*I_n]
inline ImageBuf blend_mib(const ImageBuf& pattern, const ImageBuf& base, const BlendParams& p) {
    detail::require_same_shape(pattern, base, "blend_mib");
    p.validate();
    ImageBuf comp_m = alpha_composite(multiply(pattern, base), base, p.r_m);
    ImageBuf comp_g = alpha_composite(grain_merge(pattern, base), base, p.r_g);
    ImageBuf out(base.width, base.height, base.channels);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = clamp01(p.omega_m * comp_m.data[i] + p.omega_g * comp_g.data[i]);
    return out;
}

struct BlendSampling {
    double omega_min = 0.65;
    double omega_max = 0.75;
    double op_m = 1.0;
    double op_g = 0.8;
    double op_n = 1.0;

    void validate() const {
        if (omega_min > omega_max || omega_min < 0.0 || omega_max > 1.0)
            throw std::invalid_argument("blend sampling: need 0 <= omega_min <= omega_max <= 1");
        for (double op : {op_m, op_g, op_n})
            if (op < 0.0 || op > 1.0)
                throw std::invalid_argument("blend sampling: opacities must be in [0,1]");
    }
};

// omega_m ~ Uniform[omega_min, omega_max]; opacities are fixed per config.
inline BlendParams sample_blend_params(RngEngine& rng, const BlendSampling& cfg = {}) {
    cfg.validate();
    const double omega_m = uniform_range(rng, cfg.omega_min, cfg.omega_max);
    return make_blend_params(omega_m, cfg.op_m, cfg.op_g, cfg.op_n);
}

// The Eq.-1 style baseline: pure multiply, fully opaque foreground.
inline BlendParams multiply_only_params() {
    return make_blend_params(1.0, 1.0, 0.8, 1.0);
}

} // namespace moiregen
