#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "moiregen/image.hpp"
#include "moiregen/rng.hpp"

// The fusion block's statistics math, as standalone numeric operations:
// per-channel moments, convex moment mixing with a Beta-distributed weight,
// re-normalization against mixed statistics, and the final tone-matrix
// product. No network, no training.

namespace moiregen {

// Channel-major (CHW) float tensor.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w, float fill = 0.0f)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, fill) {
        if (c < 1 || h < 1 || w < 1)
            throw std::invalid_argument("FeatureMap: bad dimensions");
    }

    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
    float* plane(int c) { return data.data() + plane_size() * c; }
    const float* plane(int c) const { return data.data() + plane_size() * c; }
};

inline constexpr double kSigmaFloor = 1e-6; // keeps constant channels well-defined

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev; // population, floored at kSigmaFloor
};

struct MixedStats {
    std::vector<double> gamma; // mixed sigma, one per channel
    std::vector<double> beta;  // mixed mu, one per channel
    double lambda = 0.0;
};

inline ChannelStats channel_stats(const FeatureMap& f) {
    if (f.data.empty())
        throw std::invalid_argument("channel_stats: empty feature map");
    ChannelStats out;
    out.mean.resize(f.channels);
    out.stddev.resize(f.channels);
    const std::size_t n = f.plane_size();
    for (int c = 0; c < f.channels; ++c) {
        const float* p = f.plane(c);
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            mean += p[i];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = p[i] - mean;
            ss += d * d;
        }
        out.mean[c] = mean;
        out.stddev[c] = std::max(std::sqrt(ss / static_cast<double>(n)), kSigmaFloor);
    }
    return out;
}

// gamma_mix = lambda*sigma(f) + (1-lambda)*sigma(f_ref)
// beta_mix  = lambda*mu(f)    + (1-lambda)*mu(f_ref)
inline MixedStats mix_statistics(const FeatureMap& f, const FeatureMap& f_ref, double lambda) {
    if (f.channels != f_ref.channels)
        throw std::invalid_argument("mix_statistics: channel count mismatch");
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("mix_statistics: lambda must be in [0,1]");
    ChannelStats a = channel_stats(f);
    ChannelStats b = channel_stats(f_ref);
    MixedStats out;
    out.lambda = lambda;
    out.gamma.resize(f.channels);
    out.beta.resize(f.channels);
    const double comp = 1.0 - lambda;
    for (int c = 0; c < f.channels; ++c) {
        out.gamma[c] = lambda * a.stddev[c] + comp * b.stddev[c];
        out.beta[c] = lambda * a.mean[c] + comp * b.mean[c];
    }
    return out;
}

// gamma_mix . (f - mu(f)) / sigma(f) + beta_mix, per channel.
inline FeatureMap apply_mixed_stats(const FeatureMap& f, const MixedStats& stats) {
    if (static_cast<int>(stats.gamma.size()) != f.channels ||
        static_cast<int>(stats.beta.size()) != f.channels)
        throw std::invalid_argument("apply_mixed_stats: stats channel count mismatch");
    ChannelStats own = channel_stats(f);
    FeatureMap out(f.channels, f.height, f.width);
    const std::size_t n = f.plane_size();
    for (int c = 0; c < f.channels; ++c) {
        const float* src = f.plane(c);
        float* dst = out.plane(c);
        const double mu = own.mean[c];
        const double inv_sigma = 1.0 / own.stddev[c];
        const double gamma = stats.gamma[c];
        const double beta = stats.beta[c];
        for (std::size_t i = 0; i < n; ++i)
            dst[i] = static_cast<float>(gamma * ((src[i] - mu) * inv_sigma) + beta);
    }
    return out;
}

// lambda ~ Beta(alpha, alpha)
inline double sample_lambda(RngEngine& rng, double alpha = 0.1) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("sample_lambda: alpha must be > 0");
    return sample_beta(rng, alpha, alpha);
}

// I_trn = I_mib . M_trn, clamped. The identity matrix stands in when no
// externally produced tone matrix is supplied.
inline ImageBuf apply_tone_matrix(const ImageBuf& img, const ImageBuf& tone) {
    detail::require_same_shape(img, tone, "apply_tone_matrix");
    for (float v : tone.data)
        if (v < 0.0f)
            throw std::invalid_argument("apply_tone_matrix: negative tone entries");
    ImageBuf out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = clamp01(static_cast<double>(img.data[i]) * tone.data[i]);
    return out;
}

} // namespace moiregen
