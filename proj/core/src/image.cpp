#include "darbs/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "darbs/errors.hpp"

namespace darbs {

namespace {

void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

}  // namespace

void write_ppm(const ImageBuffer& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("write_ppm: cannot open " + path);
    os << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(std::size_t(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
                row[std::size_t(x) * 3 + c] =
                    static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
            }
        }
        os.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!os) throw io_error("write_ppm: write failed for " + path);
}

void write_float_dump(const ImageBuffer& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("write_float_dump: cannot open " + path);
    os.write("DSFL", 4);
    put_u32le(os, static_cast<std::uint32_t>(img.width));
    put_u32le(os, static_cast<std::uint32_t>(img.height));
    put_u32le(os, 3);
    for (double v : img.rgb) {
        float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32le(os, bits);
    }
    if (!os) throw io_error("write_float_dump: write failed for " + path);
}

ImageBuffer read_float_dump(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("read_float_dump: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DSFL", 4) != 0) {
        throw io_error("read_float_dump: bad magic in " + path);
    }
    std::uint32_t w = get_u32le(is), h = get_u32le(is), ch = get_u32le(is);
    if (ch != 3) throw io_error("read_float_dump: expected 3 channels");
    ImageBuffer img(static_cast<int>(w), static_cast<int>(h));
    for (double& v : img.rgb) {
        std::uint32_t bits = get_u32le(is);
        float f;
        std::memcpy(&f, &bits, 4);
        v = f;
    }
    if (!is) throw io_error("read_float_dump: truncated file " + path);
    return img;
}

ImageBuffer read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("read_ppm: cannot open " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    is >> magic >> w >> h >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
        throw io_error("read_ppm: unsupported PPM " + path);
    }
    is.get();  // single whitespace after maxval
    ImageBuffer img(w, h);
    std::vector<unsigned char> data(std::size_t(w) * h * 3);
    is.read(reinterpret_cast<char*>(data.data()), data.size());
    if (!is) throw io_error("read_ppm: truncated file " + path);
    for (std::size_t i = 0; i < data.size(); ++i) {
        img.rgb[i] = data[i] / 255.0;
    }
    return img;
}

double mse(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height) {
        throw invalid_parameter("mse: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        double d = a.rgb[i] - b.rgb[i];
        acc += d * d;
    }
    return acc / a.rgb.size();
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    double m = mse(a, b);
    if (m <= 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

}  // namespace darbs
