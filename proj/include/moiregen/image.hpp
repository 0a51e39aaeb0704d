#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

// Dense float rasters plus the pointwise / geometric primitives everything
// else builds on. Samples are row-major, channel-interleaved, nominally [0,1]
// in display (nonlinear) sRGB. Filter responses and Lab planes step outside
// that range by design. All functions are pure; inputs are never modified.

namespace moiregen {

struct CropRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const CropRect&) const = default;
};

struct ImageBuf {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data; // width*height*channels samples

    ImageBuf() = default;
    ImageBuf(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {
        if (w < 1 || h < 1 || (c != 1 && c != 3))
            throw std::invalid_argument("ImageBuf: bad dimensions");
    }

    float& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }
    bool same_shape(const ImageBuf& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    bool operator==(const ImageBuf&) const = default;
};

inline float clamp01(double v) {
    return static_cast<float>(std::min(1.0, std::max(0.0, v)));
}

namespace detail {

inline void require_rgb(const ImageBuf& img, const char* op) {
    if (img.channels != 3)
        throw std::invalid_argument(std::string(op) + ": 3-channel input required");
}

inline void require_same_shape(const ImageBuf& a, const ImageBuf& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

} // namespace detail

// BT.601 luma weights.
inline ImageBuf to_grayscale(const ImageBuf& img) {
    if (img.channels == 1)
        throw std::invalid_argument("to_grayscale: already grayscale");
    detail::require_rgb(img, "to_grayscale");
    ImageBuf out(img.width, img.height, 1);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const float* p = &img.data[i * 3];
        out.data[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
    return out;
}

struct LabPlanes {
    ImageBuf l, a, b; // L in [0,100], a/b roughly [-128,127]
};

// sRGB (D65) -> CIE L*a*b*, textbook constants.
inline LabPlanes rgb_to_lab(const ImageBuf& img) {
    detail::require_rgb(img, "rgb_to_lab");
    LabPlanes out{ImageBuf(img.width, img.height, 1),
                  ImageBuf(img.width, img.height, 1),
                  ImageBuf(img.width, img.height, 1)};
    auto linearize = [](double c) {
        return c > 0.04045 ? std::pow((c + 0.055) / 1.055, 2.4) : c / 12.92;
    };
    auto f = [](double t) {
        return t > 0.008856 ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0;
    };
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const float* p = &img.data[i * 3];
        double r = linearize(p[0]);
        double g = linearize(p[1]);
        double b = linearize(p[2]);
        double x = (r * 0.4124 + g * 0.3576 + b * 0.1805) * 100.0 / 95.047;
        double y = (r * 0.2126 + g * 0.7152 + b * 0.0722) * 100.0 / 100.0;
        double z = (r * 0.0193 + g * 0.1192 + b * 0.9505) * 100.0 / 108.883;
        double fx = f(x), fy = f(y), fz = f(z);
        out.l.data[i] = static_cast<float>(116.0 * fy - 16.0);
        out.a.data[i] = static_cast<float>(500.0 * (fx - fy));
        out.b.data[i] = static_cast<float>(200.0 * (fy - fz));
    }
    return out;
}

// Per-pixel Euclidean norm of the RGB triple (the histogram's Y weight).
inline ImageBuf luminance_norm(const ImageBuf& img) {
    detail::require_rgb(img, "luminance_norm");
    ImageBuf out(img.width, img.height, 1);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const float* p = &img.data[i * 3];
        double r = p[0], g = p[1], b = p[2];
        out.data[i] = static_cast<float>(std::sqrt(r * r + g * g + b * b));
    }
    return out;
}

struct LogChromaPlanes {
    ImageBuf ur, vr, ug, vg, ub, vb;
};

// Log-chrominance coordinates: u_c = log((c+eps)/(next+eps)), v_c likewise
// against the remaining channel, cyclically for r, g, b.
inline LogChromaPlanes log_chrominance(const ImageBuf& img, double eps = 1e-6) {
    detail::require_rgb(img, "log_chrominance");
    if (!(eps > 0.0))
        throw std::invalid_argument("log_chrominance: eps must be > 0");
    LogChromaPlanes out{ImageBuf(img.width, img.height, 1), ImageBuf(img.width, img.height, 1),
                        ImageBuf(img.width, img.height, 1), ImageBuf(img.width, img.height, 1),
                        ImageBuf(img.width, img.height, 1), ImageBuf(img.width, img.height, 1)};
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const float* p = &img.data[i * 3];
        double r = p[0] + eps, g = p[1] + eps, b = p[2] + eps;
        out.ur.data[i] = static_cast<float>(std::log(r / g));
        out.vr.data[i] = static_cast<float>(std::log(r / b));
        out.ug.data[i] = static_cast<float>(std::log(g / r));
        out.vg.data[i] = static_cast<float>(std::log(g / b));
        out.ub.data[i] = static_cast<float>(std::log(b / r));
        out.vb.data[i] = static_cast<float>(std::log(b / g));
    }
    return out;
}

// 4-neighbor Laplacian [[0,1,0],[1,-4,1],[0,1,0]], replicate-padded so the
// response map keeps the input dims.
inline ImageBuf convolve_laplacian(const ImageBuf& img) {
    if (img.channels != 1)
        throw std::invalid_argument("convolve_laplacian: 1-channel input required");
    if (img.width < 3 || img.height < 3)
        throw std::invalid_argument("convolve_laplacian: image smaller than 3x3");
    ImageBuf out(img.width, img.height, 1);
    const int w = img.width, h = img.height;
    for (int y = 0; y < h; ++y) {
        const int yu = std::max(y - 1, 0);
        const int yd = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0);
            const int xr = std::min(x + 1, w - 1);
            double v = static_cast<double>(img.at(xl, y, 0)) + img.at(xr, y, 0) +
                       img.at(x, yu, 0) + img.at(x, yd, 0) - 4.0 * img.at(x, y, 0);
            out.at(x, y, 0) = static_cast<float>(v);
        }
    }
    return out;
}

// Bilinear, centers aligned. Identical dims short-circuit to a plain copy.
inline ImageBuf resize(const ImageBuf& img, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1)
        throw std::invalid_argument("resize: target dims must be >= 1");
    if (new_w == img.width && new_h == img.height)
        return img;
    ImageBuf out(new_w, new_h, img.channels);
    const double sx = static_cast<double>(img.width) / new_w;
    const double sy = static_cast<double>(img.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                double top = (1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
                double bot = (1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
                out.at(x, y, c) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

inline ImageBuf crop(const ImageBuf& img, CropRect r) {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 ||
        r.x + r.w > img.width || r.y + r.h > img.height)
        throw std::invalid_argument("crop: rect out of bounds");
    ImageBuf out(r.w, r.h, img.channels);
    const std::size_t row_samples = static_cast<std::size_t>(r.w) * img.channels;
    for (int y = 0; y < r.h; ++y) {
        const float* src = &img.data[(static_cast<std::size_t>(r.y + y) * img.width + r.x) * img.channels];
        std::copy(src, src + row_samples, &out.data[static_cast<std::size_t>(y) * row_samples]);
    }
    return out;
}

} // namespace moiregen
