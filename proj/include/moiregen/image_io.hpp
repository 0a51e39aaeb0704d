#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "moiregen/image.hpp"

// PNG/JPEG decode/encode. Decoded 8-bit samples map to [0,1] via /255;
// encoding writes round(clamp(v)*255). Anything not 1- or 3-channel after
// the standard expansions (palette, gray<8, 16->8 strip, alpha strip) is
// rejected. Compression settings are pinned so identical pixels always
// produce identical files.

namespace moiregen {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f)
        throw std::runtime_error("cannot open file: " + path);
    return f;
}

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadGuard() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriteGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteGuard() { png_destroy_write_struct(&png, &info); }
};

inline ImageBuf decode_png(std::FILE* f, const std::string& path) {
    PngReadGuard g;
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png)
        throw std::runtime_error("libpng init failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info)
        throw std::runtime_error("libpng init failed");
    if (setjmp(png_jmpbuf(g.png)))
        throw std::runtime_error("PNG decode failed: " + path);

    png_init_io(g.png, f);
    png_read_info(g.png, g.info);

    const png_byte color_type = png_get_color_type(g.png, g.info);
    const png_byte bit_depth = png_get_bit_depth(g.png, g.info);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(g.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(g.png);
    if (png_get_valid(g.png, g.info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(g.png);
    if (bit_depth == 16)
        png_set_strip_16(g.png);
    png_set_strip_alpha(g.png);
    png_read_update_info(g.png, g.info);

    const int width = static_cast<int>(png_get_image_width(g.png, g.info));
    const int height = static_cast<int>(png_get_image_height(g.png, g.info));
    const int channels = png_get_channels(g.png, g.info);
    if (channels != 1 && channels != 3)
        throw std::runtime_error("PNG decode: unsupported channel count in " + path);

    ImageBuf img(width, height, channels);
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
    for (int y = 0; y < height; ++y) {
        png_read_row(g.png, row.data(), nullptr);
        float* dst = &img.data[static_cast<std::size_t>(y) * width * channels];
        for (std::size_t i = 0; i < row.size(); ++i)
            dst[i] = static_cast<float>(row[i]) / 255.0f;
    }
    png_read_end(g.png, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

inline ImageBuf decode_jpeg(std::FILE* f, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("JPEG decode failed: " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    jpeg_start_decompress(&cinfo);

    const int width = static_cast<int>(cinfo.output_width);
    const int height = static_cast<int>(cinfo.output_height);
    const int channels = cinfo.output_components;
    if (channels != 1 && channels != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("JPEG decode: unsupported channel count in " + path);
    }

    ImageBuf img(width, height, channels);
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* rowp = row.data();
        const int y = static_cast<int>(cinfo.output_scanline);
        jpeg_read_scanlines(&cinfo, &rowp, 1);
        float* dst = &img.data[static_cast<std::size_t>(y) * width * channels];
        for (std::size_t i = 0; i < row.size(); ++i)
            dst[i] = static_cast<float>(row[i]) / 255.0f;
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

inline std::vector<unsigned char> quantize_rows(const ImageBuf& img) {
    std::vector<unsigned char> bytes(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        double v = std::min(1.0, std::max(0.0, static_cast<double>(img.data[i])));
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    return bytes;
}

} // namespace detail

inline ImageBuf decode_image(const std::string& path) {
    auto f = detail::open_file(path, "rb");
    unsigned char magic[8] = {};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), f.get());
    std::rewind(f.get());
    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (got >= 8 && std::memcmp(magic, png_sig, 8) == 0)
        return detail::decode_png(f.get(), path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8)
        return detail::decode_jpeg(f.get(), path);
    throw std::runtime_error("unsupported image format: " + path);
}

inline void encode_png(const ImageBuf& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("encode_png: 1 or 3 channels required");
    auto f = detail::open_file(path, "wb");
    detail::PngWriteGuard g;
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png)
        throw std::runtime_error("libpng init failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info)
        throw std::runtime_error("libpng init failed");
    if (setjmp(png_jmpbuf(g.png)))
        throw std::runtime_error("PNG encode failed: " + path);

    png_init_io(g.png, f.get());
    png_set_compression_level(g.png, 6);
    png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(g.png, g.info);

    auto bytes = detail::quantize_rows(img);
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y)
        png_write_row(g.png, bytes.data() + static_cast<std::size_t>(y) * stride);
    png_write_end(g.png, nullptr);
}

inline void encode_jpeg(const ImageBuf& img, const std::string& path, int quality = 95) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("encode_jpeg: 1 or 3 channels required");
    if (quality < 1 || quality > 100)
        throw std::invalid_argument("encode_jpeg: quality out of range");
    auto f = detail::open_file(path, "wb");
    jpeg_compress_struct cinfo;
    detail::JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = detail::jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_compress(&cinfo);
        throw std::runtime_error("JPEG encode failed: " + path);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, f.get());
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = img.channels;
    cinfo.in_color_space = img.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);

    auto bytes = detail::quantize_rows(img);
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW rowp = bytes.data() + static_cast<std::size_t>(cinfo.next_scanline) * stride;
        jpeg_write_scanlines(&cinfo, &rowp, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

} // namespace moiregen
