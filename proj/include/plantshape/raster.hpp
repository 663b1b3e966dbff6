#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plantshape {

// 8-bit RGB raster, row-major, row 0 at the top of the image.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 3, 0) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("image dimensions must be positive");
    }

    std::uint8_t& at(int row, int col, int channel) {
        return data[(std::size_t(row) * width + col) * 3 + channel];
    }
    std::uint8_t at(int row, int col, int channel) const {
        return data[(std::size_t(row) * width + col) * 3 + channel];
    }

    void set_rgb(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        at(row, col, 0) = r;
        at(row, col, 1) = g;
        at(row, col, 2) = b;
    }
};

// H x W grid of green channel values remapped onto [0,1].
struct GreenMatrix {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    GreenMatrix() = default;
    GreenMatrix(int w, int h) : width(w), height(h), values(std::size_t(w) * h, 0.0) {}

    double& at(int row, int col) { return values[std::size_t(row) * width + col]; }
    double at(int row, int col) const { return values[std::size_t(row) * width + col]; }
};

// Green channel / 255, with optional stride sampling (pick every n-th pixel).
inline GreenMatrix green_matrix(const RgbImage& img, int stride = 1) {
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    const int w = (img.width + stride - 1) / stride;
    const int h = (img.height + stride - 1) / stride;
    GreenMatrix m(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            m.at(r, c) = img.at(r * stride, c * stride, 1) / 255.0;
    return m;
}

// ---------------------------------------------------------------------------
// Binary PPM (P6), the canonical lossless interchange format here.

inline void write_ppm(const RgbImage& img, std::ostream& os) {
    os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.data.data()),
             static_cast<std::streamsize>(img.data.size()));
}

inline void write_ppm(const RgbImage& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_ppm(img, os);
}

namespace detail {
inline int ppm_next_int(std::istream& is) {
    // skips whitespace and '#' comments between header fields
    int c;
    while ((c = is.peek()) != EOF) {
        if (c == '#') {
            std::string junk;
            std::getline(is, junk);
        } else if (std::isspace(c)) {
            is.get();
        } else {
            break;
        }
    }
    int v;
    if (!(is >> v)) throw std::runtime_error("malformed PPM header");
    return v;
}
} // namespace detail

inline RgbImage read_ppm(std::istream& is) {
    char magic[2] = {0, 0};
    is.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '6') throw std::runtime_error("not a binary PPM (P6) file");
    const int w = detail::ppm_next_int(is);
    const int h = detail::ppm_next_int(is);
    const int maxval = detail::ppm_next_int(is);
    if (maxval != 255) throw std::runtime_error("only 8-bit PPM supported");
    is.get(); // single whitespace after maxval
    RgbImage img(w, h);
    is.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!is) throw std::runtime_error("truncated PPM pixel data");
    return img;
}

inline RgbImage read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_ppm(is);
}

} // namespace plantshape
