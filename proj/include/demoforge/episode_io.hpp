#pragma once

// On-disk episode layout:
//
//   episode_dir/
//     manifest.json          episode metadata plus per-frame timestamps
//     frames/%06d.png        RGB8
//     masks/<role>/%06d.png  8-bit, 0 background / 255 mask
//     poses.jsonl            {"t_ns", "trans", "quat_wxyz"} per line
//     rig.json               optional, {"t_cam_tcp", "intrinsics"}

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "demoforge/codec.hpp"
#include "demoforge/episode.hpp"
#include "demoforge/parallel.hpp"
#include "demoforge/pose.hpp"

namespace demoforge {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.png", index);
  return buf;
}

// ---- JSON helpers ----------------------------------------------------------

inline json parse_json(std::string_view text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, where + ": " + e.what());
  }
}

inline json read_json(const fs::path& p) { return parse_json(read_text(p), p.string()); }

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(read_text(p));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_json(line, p.string() + ":" + std::to_string(lineno)));
  }
  return out;
}

inline void write_jsonl(const fs::path& p, const std::vector<json>& rows) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + "\n";
  write_text(p, text);
}

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::ParseError, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, where + ": field '" + key + "': " + e.what());
  }
}

// ---- Pose records ----------------------------------------------------------

/// Writes trans and quat_wxyz into `j`; the quaternion is canonicalized to w >= 0.
inline void put_pose(json& j, const Pose& p) {
  const Quaternion q = canonical(p.rotation());
  const Vec3& t = p.translation();
  j["trans"] = {t[0], t[1], t[2]};
  j["quat_wxyz"] = {q.w, q.x, q.y, q.z};
}

inline Pose get_pose(const json& j, const std::string& where) {
  auto t = get_field<std::vector<double>>(j, "trans", where);
  auto q = get_field<std::vector<double>>(j, "quat_wxyz", where);
  if (t.size() != 3 || q.size() != 4) fail(ErrorCode::ParseError, where + ": pose arrays have wrong length");
  return Pose({t[0], t[1], t[2]}, Quaternion{q[0], q[1], q[2], q[3]});
}

inline json pose_json(const Pose& p) {
  json j = json::object();
  put_pose(j, p);
  return j;
}

inline json stamped_pose_json(std::int64_t t_ns, const Pose& p) {
  json j = json::object();
  j["t_ns"] = t_ns;
  put_pose(j, p);
  return j;
}

inline std::vector<StampedPose> read_pose_stream(const fs::path& p) {
  std::vector<StampedPose> out;
  std::size_t k = 0;
  for (const json& row : read_jsonl(p)) {
    const std::string where = p.string() + " record " + std::to_string(k++);
    out.push_back({get_field<std::int64_t>(row, "t_ns", where), get_pose(row, where)});
  }
  return out;
}

inline void write_pose_stream(const fs::path& p, std::span<const StampedPose> poses) {
  std::vector<json> rows;
  rows.reserve(poses.size());
  for (const auto& s : poses) rows.push_back(stamped_pose_json(s.t_ns, s.pose));
  write_jsonl(p, rows);
}

// ---- Rig -------------------------------------------------------------------

inline json rig_json(const CameraRig& rig) {
  json j = json::object();
  j["t_cam_tcp"] = pose_json(rig.t_cam_tcp);
  j["intrinsics"] = {{"fx", rig.intrinsics.fx},
                     {"fy", rig.intrinsics.fy},
                     {"cx", rig.intrinsics.cx},
                     {"cy", rig.intrinsics.cy},
                     {"distortion", rig.intrinsics.distortion}};
  return j;
}

inline CameraRig parse_rig(const json& j, const std::string& where) {
  CameraRig rig;
  if (!j.contains("t_cam_tcp")) fail(ErrorCode::ParseError, where + ": missing t_cam_tcp");
  rig.t_cam_tcp = get_pose(j.at("t_cam_tcp"), where + " t_cam_tcp");
  if (j.contains("intrinsics")) {
    const json& in = j.at("intrinsics");
    rig.intrinsics.fx = in.value("fx", 0.0);
    rig.intrinsics.fy = in.value("fy", 0.0);
    rig.intrinsics.cx = in.value("cx", 0.0);
    rig.intrinsics.cy = in.value("cy", 0.0);
    rig.intrinsics.distortion = in.value("distortion", std::vector<double>{});
  }
  return rig;
}

inline CameraRig read_rig(const fs::path& p) { return parse_rig(read_json(p), p.string()); }
inline void write_rig(const fs::path& p, const CameraRig& rig) { write_json(p, rig_json(rig)); }

// ---- Episodes --------------------------------------------------------------

inline void write_episode(const fs::path& dir, const Episode& ep, unsigned threads = default_thread_count()) {
  fs::create_directories(dir / "frames");

  json manifest = json::object();
  manifest["episode_id"] = ep.episode_id();
  manifest["role"] = std::string(to_string(ep.role()));
  manifest["task"] = ep.task();
  manifest["obj_name"] = ep.obj_name();
  manifest["frame_count"] = ep.size();
  manifest["image_width"] = ep.image_width();
  manifest["image_height"] = ep.image_height();
  manifest["timestamps_ns"] = ep.timestamps();

  std::vector<std::string> mask_roles;
  for (const Frame& f : ep.frames())
    for (const auto& [name, m] : f.masks)
      if (std::find(mask_roles.begin(), mask_roles.end(), name) == mask_roles.end()) mask_roles.push_back(name);
  std::sort(mask_roles.begin(), mask_roles.end());
  for (const auto& r : mask_roles) fs::create_directories(dir / "masks" / r);

  parallel_for(ep.size(), threads, [&](std::size_t i) {
    const Frame& f = ep.frame(i);
    write_png(dir / "frames" / frame_filename(i), f.image);
    for (const auto& [name, m] : f.masks) write_mask_png(dir / "masks" / name / frame_filename(i), m);
  });
  write_pose_stream(dir / "poses.jsonl", ep.camera_poses());
  write_json(dir / "manifest.json", manifest);
}

inline Episode read_episode(const fs::path& dir, unsigned threads = default_thread_count()) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) fail(ErrorCode::IoError, "no manifest.json in " + dir.string());
  const json m = read_json(mpath);
  const std::string where = mpath.string();
  const auto count = get_field<std::size_t>(m, "frame_count", where);
  const auto width = get_field<int>(m, "image_width", where);
  const auto height = get_field<int>(m, "image_height", where);
  const auto stamps = get_field<std::vector<std::int64_t>>(m, "timestamps_ns", where);
  if (stamps.size() != count) fail(ErrorCode::ParseError, where + ": timestamps_ns length != frame_count");

  std::vector<std::string> mask_roles;
  if (fs::exists(dir / "masks"))
    for (const auto& e : fs::directory_iterator(dir / "masks"))
      if (e.is_directory()) mask_roles.push_back(e.path().filename().string());
  std::sort(mask_roles.begin(), mask_roles.end());

  std::vector<Frame> frames(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Frame& f = frames[i];
    f.timestamp_ns = stamps[i];
    f.image = read_png(dir / "frames" / frame_filename(i));
    if (f.image.width() != width || f.image.height() != height)
      fail(ErrorCode::DimMismatch, "frame " + std::to_string(i) + " of " + dir.string() + " does not match manifest size");
    for (const auto& r : mask_roles) {
      const fs::path mp = dir / "masks" / r / frame_filename(i);
      if (fs::exists(mp)) f.masks.emplace(r, read_mask_png(mp));
    }
  });

  std::vector<StampedPose> poses;
  if (fs::exists(dir / "poses.jsonl")) poses = read_pose_stream(dir / "poses.jsonl");

  return Episode(get_field<std::string>(m, "episode_id", where), parse_role(get_field<std::string>(m, "role", where)),
                 m.value("task", std::string{}), m.value("obj_name", std::string{}), std::move(frames), std::move(poses));
}

}  // namespace demoforge
