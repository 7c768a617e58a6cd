#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egovol/depth_map.hpp"

namespace egovol {

// 16-bit binary PGM (P5, maxval 65535, big-endian samples). Depth scales
// linearly so z_max maps to 65535; missing measurements and values beyond
// z_max clamp to 0 / 65535 respectively.
void write_depth_pgm16(const std::string& path, const DepthMap& z,
                       double z_max);

// Inverse mapping of write_depth_pgm16 (value 0 becomes no-measurement).
DepthMap read_depth_pgm16(const std::string& path, double z_max);

// 8-bit binary PGM for small debug images; data is row-major.
void write_pgm8(const std::string& path, int width, int height,
                const std::vector<std::uint8_t>& data);

}  // namespace egovol
