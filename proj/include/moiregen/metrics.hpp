#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "moiregen/image.hpp"

// Closed-form losses and evaluation metrics: RGB-uv histogram features,
// Hellinger color distance, total variation, the weighted compound loss,
// PSNR and SSIM. Used as measurements; no gradients.

namespace moiregen {

struct HistogramConfig {
    int bins = 64;      // h
    double range = 3.0; // bin centers span [-range, range] inclusive
    double tau = 0.02;  // kernel fall-off
    double eps = 1e-6;  // log-chrominance guard

    void validate() const {
        if (bins < 2)
            throw std::invalid_argument("histogram: bins must be >= 2");
        if (!(range > 0.0) || !(tau > 0.0) || !(eps > 0.0))
            throw std::invalid_argument("histogram: range, tau, eps must be > 0");
    }
};

// h x h x 3 tensor, plane-major: values[(c*h + ui)*h + vi]. Normalized to
// unit mass jointly over all three channel planes.
struct HistogramFeature {
    int bins = 0;
    std::vector<double> values;

    double at(int c, int ui, int vi) const {
        return values[(static_cast<std::size_t>(c) * bins + ui) * bins + vi];
    }
};

inline std::vector<double> histogram_bin_centers(const HistogramConfig& cfg) {
    std::vector<double> centers(cfg.bins);
    for (int i = 0; i < cfg.bins; ++i)
        centers[i] = -cfg.range + 2.0 * cfg.range * i / (cfg.bins - 1);
    return centers;
}

// H(u,v,c) = sum_x k(I_uc(x), I_vc(x), u, v) * I_y(x), inverse-quadratic
// kernel k, then joint normalization. Accumulation runs in a fixed pixel
// order so results are bit-stable.
inline HistogramFeature rgbuv_histogram(const ImageBuf& img, const HistogramConfig& cfg = {}) {
    detail::require_rgb(img, "rgbuv_histogram");
    cfg.validate();
    const int h = cfg.bins;
    const std::vector<double> centers = histogram_bin_centers(cfg);
    const LogChromaPlanes chroma = log_chrominance(img, cfg.eps);
    const ImageBuf weight = luminance_norm(img);

    HistogramFeature out;
    out.bins = h;
    out.values.assign(static_cast<std::size_t>(h) * h * 3, 0.0);

    const ImageBuf* u_planes[3] = {&chroma.ur, &chroma.ug, &chroma.ub};
    const ImageBuf* v_planes[3] = {&chroma.vr, &chroma.vg, &chroma.vb};
    const double inv_tau = 1.0 / cfg.tau;
    const std::size_t n = img.pixel_count();

    std::vector<double> ku(h), kv(h);
    for (int c = 0; c < 3; ++c) {
        const float* up = u_planes[c]->data.data();
        const float* vp = v_planes[c]->data.data();
        double* plane = &out.values[static_cast<std::size_t>(c) * h * h];
        for (std::size_t i = 0; i < n; ++i) {
            const double wy = weight.data[i];
            if (wy == 0.0)
                continue;
            const double u = up[i];
            const double v = vp[i];
            for (int k = 0; k < h; ++k) {
                double du = (u - centers[k]) * inv_tau;
                double dv = (v - centers[k]) * inv_tau;
                ku[k] = 1.0 / (1.0 + du * du);
                kv[k] = 1.0 / (1.0 + dv * dv);
            }
            for (int ui = 0; ui < h; ++ui) {
                const double row = wy * ku[ui];
                double* dst = plane + static_cast<std::size_t>(ui) * h;
                for (int vi = 0; vi < h; ++vi)
                    dst[vi] += row * kv[vi];
            }
        }
    }

    double total = 0.0;
    for (double v : out.values)
        total += v;
    if (total <= 0.0)
        throw std::domain_error("rgbuv_histogram: degenerate histogram (zero luminance mass)");
    for (double& v : out.values)
        v /= total;
    return out;
}

// || H1^(1/2) - H2^(1/2) ||_2; bounded by sqrt(2) for unit-mass inputs.
inline double hellinger_color_distance(const HistogramFeature& a, const HistogramFeature& b) {
    if (a.bins != b.bins || a.values.size() != b.values.size())
        throw std::invalid_argument("hellinger_color_distance: shape mismatch");
    double ss = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        double d = std::sqrt(a.values[i]) - std::sqrt(b.values[i]);
        ss += d * d;
    }
    return std::sqrt(ss);
}

// Anisotropic TV: sum of |vertical diff| + |horizontal diff| over valid
// offsets, all channels.
inline double tv_loss(const ImageBuf& img) {
    double total = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                const double v = img.at(x, y, c);
                if (y + 1 < img.height)
                    total += std::abs(static_cast<double>(img.at(x, y + 1, c)) - v);
                if (x + 1 < img.width)
                    total += std::abs(static_cast<double>(img.at(x + 1, y, c)) - v);
            }
    return total;
}

struct LossWeights {
    double per = 1.0;
    double color = 1.0;
    double tv = 0.1;

    void validate() const {
        if (per < 0.0 || color < 0.0 || tv < 0.0)
            throw std::invalid_argument("loss weights must be >= 0");
    }
};

struct CompositeLoss {
    double total = 0.0;
    bool perceptual_present = false; // VGG term is externally supplied or absent
};

// lambda_per*l_per + lambda_color*l_color + lambda_tv*l_tv; a missing
// perceptual term contributes zero and is flagged.
inline CompositeLoss composite_loss(std::optional<double> l_per, double l_color, double l_tv,
                                    const LossWeights& w = {}) {
    w.validate();
    CompositeLoss out;
    out.perceptual_present = l_per.has_value();
    out.total = w.per * l_per.value_or(0.0) + w.color * l_color + w.tv * l_tv;
    return out;
}

// 10*log10(max^2 / MSE); +inf for identical inputs.
inline double psnr(const ImageBuf& a, const ImageBuf& b, double max_val = 1.0) {
    detail::require_same_shape(a, b, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_val * max_val / mse);
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size);
    const double half = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-(i - half) * (i - half) / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w)
        v /= sum;
    return w;
}

// Separable valid-mode filter; output is (h-size+1) x (w-size+1).
inline std::vector<double> filter_valid(const std::vector<double>& img, int w, int h,
                                        const std::vector<double>& win) {
    const int k = static_cast<int>(win.size());
    const int ow = w - k + 1;
    const int oh = h - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i)
                acc += win[i] * img[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i)
                acc += win[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

} // namespace detail

// Mean local SSIM, 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03, L=1.
// 3-channel inputs are converted to grayscale first.
inline double ssim(const ImageBuf& a, const ImageBuf& b) {
    detail::require_same_shape(a, b, "ssim");
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01; // (K1*L)^2
    constexpr double kC2 = 0.03 * 0.03; // (K2*L)^2
    if (a.width < kWindow || a.height < kWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const ImageBuf ga = a.channels == 3 ? to_grayscale(a) : a;
    const ImageBuf gb = b.channels == 3 ? to_grayscale(b) : b;
    const int w = ga.width, h = ga.height;
    const std::size_t n = ga.pixel_count();

    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xv = ga.data[i];
        const double yv = gb.data[i];
        x[i] = xv;
        y[i] = yv;
        xx[i] = xv * xv;
        yy[i] = yv * yv;
        xy[i] = xv * yv;
    }

    const auto win = detail::gaussian_window(kWindow, kSigma);
    const auto mu_x = detail::filter_valid(x, w, h, win);
    const auto mu_y = detail::filter_valid(y, w, h, win);
    const auto m_xx = detail::filter_valid(xx, w, h, win);
    const auto m_yy = detail::filter_valid(yy, w, h, win);
    const auto m_xy = detail::filter_valid(xy, w, h, win);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double var_x = m_xx[i] - mx * mx;
        const double var_y = m_yy[i] - my * my;
        const double cov = m_xy[i] - mx * my;
        const double num = (2.0 * mx * my + kC1) * (2.0 * cov + kC2);
        const double den = (mx * mx + my * my + kC1) * (var_x + var_y + kC2);
        acc += num / den;
    }
    return acc / static_cast<double>(mu_x.size());
}

} // namespace moiregen
