#pragma once

#include <string>

#include <json.hpp>

#include "egovol/model.hpp"

namespace egovol {

// EGOM model file:
//   magic "EGOM" | u16 version | u32 header-json length | header json
//   | per class: f64[21] centroid, f32[3*22] mean keypoints3d,
//     f32[2*22] mean keypoints2d, f64 bias, f32 beta tensor,
//     f32 cumsum tensor (redundant; verified against beta on load)
// Header json: camera block, k, lambda, epochs, seed, per-class train
// counts, optional config_hash.
constexpr char kModelMagic[4] = {'E', 'G', 'O', 'M'};
constexpr std::uint16_t kModelVersion = 1;

void save_model(const PoseModel& model, const std::string& path,
                const nlohmann::json& extra_meta = nlohmann::json::object());

PoseModel load_model(const std::string& path,
                     nlohmann::json* meta_out = nullptr);

}  // namespace egovol
