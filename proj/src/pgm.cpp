#include "egovol/pgm.hpp"

#include <cmath>
#include <fstream>

#include "egovol/common.hpp"

namespace egovol {

void write_depth_pgm16(const std::string& path, const DepthMap& z,
                       double z_max) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write PGM: " + path);
  out << "P5\n" << z.width << ' ' << z.height << "\n65535\n";
  std::vector<std::uint8_t> row(z.width * 2);
  for (int y = 0; y < z.height; ++y) {
    for (int x = 0; x < z.width; ++x) {
      const float d = z.at(x, y);
      std::uint16_t v = 0;
      if (d > 0.0f) {
        const double scaled = std::lround(std::min(1.0, d / z_max) * 65535.0);
        v = static_cast<std::uint16_t>(scaled);
      }
      row[2 * x] = static_cast<std::uint8_t>(v >> 8);
      row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!out) throw ConfigError("write failed: " + path);
}

DepthMap read_depth_pgm16(const std::string& path, double z_max) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read PGM: " + path);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || maxval != 65535)
    throw DataError("expected 16-bit binary PGM (P5/65535): " + path);
  in.get();  // single whitespace after maxval
  DepthMap z(width, height);
  std::vector<std::uint8_t> row(width * 2);
  for (int y = 0; y < height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!in) throw DataError("truncated PGM: " + path);
    for (int x = 0; x < width; ++x) {
      const std::uint16_t v =
          static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
      z.at(x, y) = v == 0 ? DepthMap::kNoMeasurement
                          : static_cast<float>(v * z_max / 65535.0);
    }
  }
  return z;
}

void write_pgm8(const std::string& path, int width, int height,
                const std::vector<std::uint8_t>& data) {
  if (static_cast<std::size_t>(width) * height != data.size())
    throw StructuralError("write_pgm8: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write PGM: " + path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(data.data()), data.size());
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace egovol
