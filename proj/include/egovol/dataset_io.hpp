#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "egovol/synthesis.hpp"

namespace egovol {

// EGOV dataset file:
//   magic "EGOV" | u16 version | u32 header-json length | header json
//   | u64 record count | records
// Header json holds the camera block plus generation metadata (config hash,
// sigma, pair_rate, delta, seed). Records, little-endian:
//   u8 arm_count
//   per arm: u32 grasp_id
//   per arm: 22 x (x,y,z) f32 keypoints3d
//   per arm: 22 x (x,y)   f32 keypoints2d (NaN where z <= 0)
//   u64 seed
//   width*height f32 radial depth, row-major, 0.0 = no measurement
// Handedness is positional: single-arm records are right-handed; two-arm
// records are ordered [right, left].
constexpr char kDatasetMagic[4] = {'E', 'G', 'O', 'V'};
constexpr std::uint16_t kDatasetVersion = 1;

struct DatasetHeader {
  std::uint16_t version = kDatasetVersion;
  CameraModel cam;
  nlohmann::json meta;
  std::uint64_t count = 0;
};

nlohmann::json camera_to_json(const CameraModel& cam);
CameraModel camera_from_json(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key) dump; stable across runs.
std::uint64_t json_hash(const nlohmann::json& j);
std::string hash_hex(std::uint64_t h);

class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, const CameraModel& cam,
                const nlohmann::json& meta, std::uint64_t count);
  ~DatasetWriter();

  void append(const ExemplarRecord& rec);
  void close();  // flushes and verifies the declared record count

 private:
  std::ofstream out_;
  std::string path_;
  CameraModel cam_;
  std::uint64_t declared_ = 0;
  std::uint64_t written_ = 0;
  bool closed_ = false;
};

class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);

  const DatasetHeader& header() const { return header_; }
  std::uint64_t count() const { return header_.count; }

  bool next(ExemplarRecord& out);  // false once all records were read
  void rewind();

 private:
  std::ifstream in_;
  std::string path_;
  DatasetHeader header_;
  std::streampos records_begin_;
  std::uint64_t read_ = 0;
};

std::vector<ExemplarRecord> read_all_records(const std::string& path);

}  // namespace egovol
