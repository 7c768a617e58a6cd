#include "egovol/dataset_io.hpp"

#include <cstring>

namespace egovol {

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError(std::string("truncated file while reading ") + what);
  return v;
}

}  // namespace

nlohmann::json camera_to_json(const CameraModel& cam) {
  return {{"f", cam.f},         {"cx", cam.cx},       {"cy", cam.cy},
          {"width", cam.width}, {"height", cam.height}, {"z_max", cam.z_max},
          {"nu", cam.nu},       {"nv", cam.nv},       {"nw", cam.nw}};
}

CameraModel camera_from_json(const nlohmann::json& j) {
  CameraModel cam;
  cam.f = j.at("f").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.z_max = j.at("z_max").get<double>();
  cam.nu = j.at("nu").get<int>();
  cam.nv = j.at("nv").get<int>();
  cam.nw = j.at("nw").get<int>();
  cam.validate();
  return cam;
}

std::uint64_t json_hash(const nlohmann::json& j) {
  const std::string s = j.dump();  // object keys are sorted, so this is canonical
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DatasetWriter::DatasetWriter(const std::string& path, const CameraModel& cam,
                             const nlohmann::json& meta, std::uint64_t count)
    : out_(path, std::ios::binary), path_(path), cam_(cam), declared_(count) {
  if (!out_) throw ConfigError("cannot open dataset for writing: " + path);
  nlohmann::json header = meta;
  header["camera"] = camera_to_json(cam);
  const std::string js = header.dump();

  out_.write(kDatasetMagic, 4);
  write_pod(out_, kDatasetVersion);
  write_pod(out_, static_cast<std::uint32_t>(js.size()));
  out_.write(js.data(), js.size());
  write_pod(out_, declared_);
}

DatasetWriter::~DatasetWriter() {
  if (!closed_ && out_.is_open()) out_.flush();
}

void DatasetWriter::append(const ExemplarRecord& rec) {
  if (rec.arm_count() < 1 || rec.arm_count() > 2)
    throw StructuralError("dataset record must have 1 or 2 arms");
  if (rec.arms[0].handedness != Handedness::kRight ||
      (rec.arm_count() == 2 && rec.arms[1].handedness != Handedness::kLeft))
    throw StructuralError("dataset records are ordered [right, left]");
  if (rec.depth.width != cam_.width || rec.depth.height != cam_.height)
    throw StructuralError("dataset record depth size mismatch");
  if (written_ >= declared_)
    throw StructuralError("dataset writer: more records than declared");

  write_pod(out_, static_cast<std::uint8_t>(rec.arm_count()));
  for (const auto& arm : rec.arms)
    write_pod(out_, static_cast<std::uint32_t>(arm.grasp_id));
  for (const auto& arm : rec.arms)
    out_.write(reinterpret_cast<const char*>(arm.kp3.data()),
               sizeof(float) * 3 * kKeypointCount);
  for (const auto& arm : rec.arms)
    out_.write(reinterpret_cast<const char*>(arm.kp2.data()),
               sizeof(float) * 2 * kKeypointCount);
  write_pod(out_, rec.seed);
  out_.write(reinterpret_cast<const char*>(rec.depth.a.data()),
             sizeof(float) * rec.depth.a.size());
  if (!out_) throw ConfigError("write failed: " + path_);
  ++written_;
}

void DatasetWriter::close() {
  if (closed_) return;
  if (written_ != declared_)
    throw StructuralError("dataset writer closed with " +
                          std::to_string(written_) + " of " +
                          std::to_string(declared_) + " records");
  out_.flush();
  if (!out_) throw ConfigError("write failed: " + path_);
  out_.close();
  closed_ = true;
}

DatasetReader::DatasetReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw ConfigError("cannot open dataset: " + path);

  char magic[4];
  in_.read(magic, 4);
  if (!in_ || std::memcmp(magic, kDatasetMagic, 4) != 0)
    throw DataError("dataset magic mismatch: expected EGOV in " + path);
  header_.version = read_pod<std::uint16_t>(in_, "version");
  if (header_.version != kDatasetVersion)
    throw DataError("dataset version mismatch: got " +
                    std::to_string(header_.version) + ", expected " +
                    std::to_string(kDatasetVersion));
  const auto json_len = read_pod<std::uint32_t>(in_, "header length");
  std::string js(json_len, '\0');
  in_.read(js.data(), json_len);
  if (!in_) throw DataError("truncated dataset header in " + path);
  try {
    header_.meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("dataset header json invalid: " + std::string(e.what()));
  }
  header_.cam = camera_from_json(header_.meta.at("camera"));
  header_.count = read_pod<std::uint64_t>(in_, "record count");
  records_begin_ = in_.tellg();
}

bool DatasetReader::next(ExemplarRecord& out) {
  if (read_ >= header_.count) return false;

  const auto arm_count = read_pod<std::uint8_t>(in_, "arm count");
  if (arm_count < 1 || arm_count > 2)
    throw DataError("dataset record has invalid arm count");
  out.arms.assign(arm_count, ExemplarArm{});
  out.class_label.reset();
  for (int a = 0; a < arm_count; ++a) {
    out.arms[a].grasp_id =
        static_cast<int>(read_pod<std::uint32_t>(in_, "grasp id"));
    out.arms[a].handedness = a == 0 ? Handedness::kRight : Handedness::kLeft;
  }
  for (int a = 0; a < arm_count; ++a) {
    in_.read(reinterpret_cast<char*>(out.arms[a].kp3.data()),
             sizeof(float) * 3 * kKeypointCount);
  }
  for (int a = 0; a < arm_count; ++a) {
    in_.read(reinterpret_cast<char*>(out.arms[a].kp2.data()),
             sizeof(float) * 2 * kKeypointCount);
  }
  out.seed = read_pod<std::uint64_t>(in_, "record seed");
  out.depth = DepthMap(header_.cam.width, header_.cam.height);
  in_.read(reinterpret_cast<char*>(out.depth.a.data()),
           sizeof(float) * out.depth.a.size());
  if (!in_) throw DataError("truncated dataset record in " + path_);
  ++read_;
  return true;
}

void DatasetReader::rewind() {
  in_.clear();
  in_.seekg(records_begin_);
  read_ = 0;
}

std::vector<ExemplarRecord> read_all_records(const std::string& path) {
  DatasetReader reader(path);
  std::vector<ExemplarRecord> records;
  records.reserve(reader.count());
  ExemplarRecord rec;
  while (reader.next(rec)) records.push_back(std::move(rec));
  return records;
}

}  // namespace egovol
