#pragma once

#include <string>

#include <json.hpp>

#include "specinit/posegraph.hpp"
#include "specinit/synthgen.hpp"

namespace specinit {

/// {"d", "n", "rotations": [[row-major d*d]...], "translations": [[d]...] | null}
nlohmann::json estimate_to_json(const RotationSet& rotations, const Matrix* translations = nullptr);
nlohmann::json estimate_to_json(const PoseSet& poses);

/// Reads the layout written by estimate_to_json. Missing translations come
/// back as zeros.
PoseSet estimate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CubeParams& params);

/// Ground-truth sidecar: generator parameters, sampler diagnostics and poses.
nlohmann::json ground_truth_to_json(const GroundTruthInstance& instance);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace specinit
