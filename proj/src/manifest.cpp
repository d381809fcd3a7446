#include "vlut/manifest.hpp"

#include <fstream>

#include "vlut/error.hpp"

namespace vlut {

using nlohmann::json;

const char* to_string(FrameRole role) {
  switch (role) {
    case FrameRole::calibration: return "calibration";
    case FrameRole::pure_water: return "pure_water";
    case FrameRole::test: return "test";
  }
  return "calibration";
}

FrameRole role_from_string(const std::string& s) {
  if (s == "calibration") return FrameRole::calibration;
  if (s == "pure_water") return FrameRole::pure_water;
  if (s == "test") return FrameRole::test;
  throw Error(Errc::invalid_input, "unknown frame role '" + s + "'");
}

std::vector<const FrameEntry*> FrameManifest::frames_with_role(FrameRole role) const {
  std::vector<const FrameEntry*> out;
  for (const FrameEntry& f : frames)
    if (f.role == role) out.push_back(&f);
  return out;
}

namespace {

json rgb_json(const Rgb& v) { return json::array({v[0], v[1], v[2]}); }

Rgb rgb_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::invalid_input, what + " must be three numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json pose_json(const Pose& p) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
  return {{"rotation", rot}, {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

Pose pose_from(const json& j) {
  Pose p;
  const json& rot = j.at("rotation");
  const json& t = j.at("translation");
  if (rot.size() != 9 || t.size() != 3) throw Error(Errc::invalid_input, "pose needs 9 rotation and 3 translation values");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot[3 * r + c].get<double>();
  p.translation = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
  p.validate();
  return p;
}

}  // namespace

json manifest_to_json(const FrameManifest& m) {
  json j;
  j["camera"] = {{"fx", m.camera.fx}, {"fy", m.camera.fy}, {"cx", m.camera.cx},
                 {"cy", m.camera.cy}, {"width", m.camera.width}, {"height", m.camera.height}};
  if (m.z_near && m.z_far) j["frustum"] = {{"z_near", *m.z_near}, {"z_far", *m.z_far}};
  json frames = json::array();
  for (const FrameEntry& f : m.frames) {
    json fj;
    fj["name"] = f.name;
    fj["image"] = f.image.generic_string();
    if (f.depth) fj["depth"] = f.depth->generic_string();
    fj["pose"] = pose_json(f.pose);
    fj["role"] = to_string(f.role);
    fj["gamma"] = f.gamma == Gamma::srgb ? "srgb" : "linear";
    if (!f.group.empty()) fj["group"] = f.group;
    if (f.distance) fj["distance"] = *f.distance;
    if (!f.annotations.empty()) {
      json anns = json::array();
      for (const Annotation& a : f.annotations) {
        json aj;
        if (!a.name.empty()) aj["name"] = a.name;
        if (a.mask) aj["mask"] = a.mask->generic_string();
        if (a.label) aj["label"] = *a.label;
        aj["albedo"] = rgb_json(a.albedo);
        anns.push_back(aj);
      }
      fj["annotations"] = anns;
    }
    frames.push_back(fj);
  }
  j["frames"] = frames;
  if (!m.simulation.is_null()) j["simulation"] = m.simulation;
  return j;
}

FrameManifest manifest_from_json(const json& j, const std::filesystem::path& base_dir) {
  FrameManifest m;
  m.base_dir = base_dir;
  try {
    const json& cam = j.at("camera");
    m.camera.fx = cam.at("fx").get<double>();
    m.camera.fy = cam.at("fy").get<double>();
    m.camera.cx = cam.at("cx").get<double>();
    m.camera.cy = cam.at("cy").get<double>();
    m.camera.width = cam.at("width").get<int>();
    m.camera.height = cam.at("height").get<int>();
    m.camera.validate();
    if (j.contains("frustum")) {
      m.z_near = j["frustum"].at("z_near").get<double>();
      m.z_far = j["frustum"].at("z_far").get<double>();
    }
    for (const json& fj : j.at("frames")) {
      FrameEntry f;
      f.name = fj.at("name").get<std::string>();
      f.image = fj.at("image").get<std::string>();
      if (fj.contains("depth") && !fj["depth"].is_null()) f.depth = fj["depth"].get<std::string>();
      if (fj.contains("pose")) f.pose = pose_from(fj["pose"]);
      f.role = role_from_string(fj.value("role", std::string("calibration")));
      const std::string gamma = fj.value("gamma", std::string("linear"));
      if (gamma == "srgb") f.gamma = Gamma::srgb;
      else if (gamma == "linear") f.gamma = Gamma::linear;
      else throw Error(Errc::invalid_input, "frame " + f.name + ": unknown gamma '" + gamma + "'");
      f.group = fj.value("group", std::string());
      if (fj.contains("distance")) f.distance = fj["distance"].get<double>();
      if (fj.contains("annotations")) {
        for (const json& aj : fj["annotations"]) {
          Annotation a;
          a.name = aj.value("name", std::string());
          if (aj.contains("mask")) a.mask = aj["mask"].get<std::string>();
          if (aj.contains("label")) a.label = aj["label"].get<int>();
          a.albedo = rgb_from(aj.at("albedo"), "annotation albedo");
          if ((a.albedo < 0.0).any() || (a.albedo > 1.0).any())
            throw Error(Errc::invalid_input, "frame " + f.name + ": albedo outside [0,1]");
          f.annotations.push_back(std::move(a));
        }
      }
      if (f.role == FrameRole::calibration && !f.depth)
        throw Error(Errc::invalid_input, "calibration frame " + f.name + " has no depth map");
      m.frames.push_back(std::move(f));
    }
    if (j.contains("simulation")) m.simulation = j["simulation"];
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_input, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

FrameManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_input, "manifest is not valid JSON: " + std::string(e.what()));
  }
  return manifest_from_json(j, path.parent_path());
}

void save_manifest(const std::filesystem::path& path, const FrameManifest& m) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write manifest " + path.string());
  out << manifest_to_json(m).dump(2) << "\n";
}

}  // namespace vlut
