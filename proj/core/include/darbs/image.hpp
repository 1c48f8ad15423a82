#pragma once

#include <string>
#include <vector>

namespace darbs {

// Row-major RGB float image, channels interleaved, values nominally in [0, 1].
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<double> rgb;  // width * height * 3

    ImageBuffer() = default;
    ImageBuffer(int w, int h, double fill = 0.0)
        : width(w), height(h), rgb(std::size_t(w) * h * 3, fill) {}

    double& at(int x, int y, int c) { return rgb[(std::size_t(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return rgb[(std::size_t(y) * width + x) * 3 + c]; }
};

// Binary PPM (P6, maxval 255), channels rounded half-up.
void write_ppm(const ImageBuffer& img, const std::string& path);

// Lossless float dump: 16-byte header "DSFL" + width + height + channel count
// (little-endian uint32 each), then float32 LE row-major RGB interleaved.
void write_float_dump(const ImageBuffer& img, const std::string& path);
ImageBuffer read_float_dump(const std::string& path);

ImageBuffer read_ppm(const std::string& path);

double mse(const ImageBuffer& a, const ImageBuffer& b);
double psnr(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace darbs
