#pragma once

#include <iosfwd>
#include <string>

#include "egovol/config.hpp"
#include "egovol/eval.hpp"

namespace egovol {

struct PipelineResult {
  bool train_generated = false;
  bool test_generated = false;
  bool model_trained = false;
  bool evaluated = false;
  EvalReport report;
};

// generate -> cluster -> train -> fold -> evaluate. A stage is skipped when
// its artifact already exists and embeds the matching config hash; partial
// artifacts from failed runs are left in place for inspection.
PipelineResult run_pipeline(const RunConfig& cfg, std::ostream& log);

// Writes <prefix>.pgm (16-bit depth, z_max scale) and <prefix>.json
// (keypoints and provenance) for one record.
void dump_frame(const std::string& dataset_path, std::uint64_t index,
                const std::string& out_prefix);

// Debug dump of the volumetric feature: <prefix>_zprime.pgm grayscale of
// the quantized depth map plus <prefix>_voxels.txt, one "u v w" triple per
// occupied voxel.
void dump_features(const std::string& dataset_path, std::uint64_t index,
                   const std::string& out_prefix);

}  // namespace egovol
