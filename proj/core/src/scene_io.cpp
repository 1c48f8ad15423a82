#include "darbs/scene_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "darbs/errors.hpp"

namespace darbs {

namespace {

// All whitespace-separated numbers in the file, comments stripped.
std::vector<double> read_numbers(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open " + path);
    }
    std::vector<double> nums;
    std::string line;
    while (std::getline(in, line)) {
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::istringstream ss(line);
        double v;
        while (ss >> v) nums.push_back(v);
        if (!ss.eof()) {
            throw io_error(path + ": malformed number in line '" + line + "'");
        }
    }
    return nums;
}

}  // namespace

std::vector<Primitive3D> read_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open scene file " + path);
    }
    std::vector<Primitive3D> prims;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::istringstream ss(line);
        std::vector<double> v;
        double x;
        while (ss >> x) v.push_back(x);
        if (v.empty()) continue;
        if (v.size() != 14) {
            throw io_error(path + ":" + std::to_string(lineno) +
                           ": expected 14 fields per primitive, got " +
                           std::to_string(v.size()));
        }
        Primitive3D p;
        p.mu = Vec3(v[0], v[1], v[2]);
        p.scale = Vec3(v[3], v[4], v[5]);
        p.rot = Eigen::Quaterniond(v[6], v[7], v[8], v[9]);
        p.opacity = v[10];
        p.color = Vec3(v[11], v[12], v[13]);
        if (p.scale.minCoeff() <= 0.0) {
            throw io_error(path + ":" + std::to_string(lineno) + ": non-positive scale");
        }
        if (p.opacity < 0.0 || p.opacity > 1.0) {
            throw io_error(path + ":" + std::to_string(lineno) + ": opacity outside [0,1]");
        }
        prims.push_back(p);
    }
    return prims;
}

void write_scene(const std::vector<Primitive3D>& prims, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write scene file " + path);
    }
    out << std::setprecision(17);
    for (const auto& p : prims) {
        out << p.mu.x() << ' ' << p.mu.y() << ' ' << p.mu.z() << ' '
            << p.scale.x() << ' ' << p.scale.y() << ' ' << p.scale.z() << ' '
            << p.rot.w() << ' ' << p.rot.x() << ' ' << p.rot.y() << ' ' << p.rot.z() << ' '
            << p.opacity << ' '
            << p.color.x() << ' ' << p.color.y() << ' ' << p.color.z() << '\n';
    }
    if (!out) {
        throw io_error("write failed for " + path);
    }
}

std::vector<Camera> read_cameras(const std::string& path) {
    std::vector<double> nums = read_numbers(path);
    if (nums.empty() || nums.size() % 22 != 0) {
        throw io_error(path + ": camera file must hold blocks of 22 numbers, got " +
                       std::to_string(nums.size()));
    }
    std::vector<Camera> cams;
    for (std::size_t off = 0; off < nums.size(); off += 22) {
        Camera cam;
        cam.fx = nums[off];
        cam.fy = nums[off + 1];
        cam.cx = nums[off + 2];
        cam.cy = nums[off + 3];
        cam.width = int(nums[off + 4]);
        cam.height = int(nums[off + 5]);
        if (cam.fx <= 0 || cam.fy <= 0 || cam.width <= 0 || cam.height <= 0) {
            throw io_error(path + ": invalid camera intrinsics");
        }
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                cam.w(r, c) = nums[off + 6 + 4 * std::size_t(r) + c];
            }
        }
        cams.push_back(cam);
    }
    return cams;
}

void write_cameras(const std::vector<Camera>& cams, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write camera file " + path);
    }
    out << std::setprecision(17);
    for (const auto& cam : cams) {
        out << cam.fx << ' ' << cam.fy << ' ' << cam.cx << ' ' << cam.cy << ' '
            << cam.width << ' ' << cam.height << '\n';
        for (int r = 0; r < 4; ++r) {
            out << cam.w(r, 0) << ' ' << cam.w(r, 1) << ' ' << cam.w(r, 2) << ' '
                << cam.w(r, 3) << '\n';
        }
    }
    if (!out) {
        throw io_error("write failed for " + path);
    }
}

}  // namespace darbs
