#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pgs {

// RGB raster. Pixels live in [0,1] doubles internally; 8-bit quantization
// happens only at the PNG boundary.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // row-major, interleaved rgb

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0) {}
    Image(int w, int h, double r, double g, double b) : Image(w, h) { fill(r, g, b); }

    double &at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    void fill(double r, double g, double b) {
        for (size_t i = 0; i < pixel_count(); ++i) {
            data[i * 3 + 0] = r;
            data[i * 3 + 1] = g;
            data[i * 3 + 2] = b;
        }
    }
};

uint8_t quantize8(double v);

void write_png(const std::string &path, const Image &img);
Image read_png(const std::string &path);

}  // namespace pgs
