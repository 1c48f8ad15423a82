#pragma once

#include <string>
#include <vector>

#include "darbs/geometry.hpp"

namespace darbs {

// Scene file: one primitive per line,
//   mu_x mu_y mu_z s_x s_y s_z q_w q_x q_y q_z opacity r g b
// whitespace-separated decimals, '#' comments and blank lines skipped.
std::vector<Primitive3D> read_scene(const std::string& path);
void write_scene(const std::vector<Primitive3D>& prims, const std::string& path);

// Camera file: one or more blocks of 22 numbers,
//   fx fy cx cy width height  followed by 16 row-major entries of the
// world-to-camera transform. '#' comments and blank lines skipped.
std::vector<Camera> read_cameras(const std::string& path);
void write_cameras(const std::vector<Camera>& cams, const std::string& path);

}  // namespace darbs
