#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlut/geometry.hpp"

namespace vlut {

enum class FrameRole { calibration, pure_water, test };
enum class Gamma { linear, srgb };

// Region with a known reference albedo. Without a mask the whole frame is
// covered; with a label, only mask pixels equal to it are inside, otherwise
// any nonzero mask pixel is.
struct Annotation {
  std::string name;
  std::optional<std::filesystem::path> mask;
  std::optional<int> label;
  Rgb albedo = Rgb::Ones();
};

struct FrameEntry {
  std::string name;
  std::filesystem::path image;
  std::optional<std::filesystem::path> depth;
  Pose pose;
  std::vector<Annotation> annotations;
  FrameRole role = FrameRole::calibration;
  Gamma gamma = Gamma::linear;
  std::string group;              // free-form, e.g. "checker" or "trend"
  std::optional<double> distance;  // nominal camera-to-target distance, meters
};

struct FrameManifest {
  std::filesystem::path base_dir;  // relative paths resolve against this
  CameraIntrinsics camera;
  std::optional<double> z_near;
  std::optional<double> z_far;
  std::vector<FrameEntry> frames;
  nlohmann::json simulation;  // generator metadata, opaque to the pipeline

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
  std::vector<const FrameEntry*> frames_with_role(FrameRole role) const;
};

const char* to_string(FrameRole role);
FrameRole role_from_string(const std::string& s);

nlohmann::json manifest_to_json(const FrameManifest& m);
FrameManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

FrameManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const FrameManifest& m);

}  // namespace vlut
