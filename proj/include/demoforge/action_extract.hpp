#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "demoforge/episode.hpp"
#include "demoforge/episode_io.hpp"
#include "demoforge/pose.hpp"
#include "demoforge/stage_classify.hpp"

namespace demoforge {

struct ActionRecord {
  std::int64_t timestamp_ns = 0;
  Pose tcp_pose;
  GripperState gripper = GripperState::Open;
};

/// Fingertip pose from a world-from-camera pose and the rig's fixed
/// camera-to-fingertip transform.
inline Pose camera_to_tcp(const Pose& camera_pose, const CameraRig& rig) { return compose(camera_pose, rig.t_cam_tcp); }

inline std::vector<ActionRecord> extract_actions(const Episode& episode, const StageTrack& track, const CameraRig& rig) {
  if (track.size() != episode.size())
    fail(ErrorCode::TrackMismatch, "stage track has " + std::to_string(track.size()) + " labels for " +
                                       std::to_string(episode.size()) + " frames");
  const auto stamps = episode.timestamps();
  const auto cams = resample_poses(episode.camera_poses(), stamps);
  const auto grip = gripper_status(track);

  std::vector<ActionRecord> out;
  out.reserve(stamps.size());
  for (std::size_t i = 0; i < stamps.size(); ++i) out.push_back({stamps[i], camera_to_tcp(cams[i], rig), grip[i]});
  return out;
}

/// Motion over `horizon` frames expressed in the TCP frame at the start.
inline std::vector<Pose> relative_actions(const std::vector<ActionRecord>& actions, int horizon) {
  if (horizon < 1) fail(ErrorCode::OutOfRange, "horizon must be >= 1");
  const auto h = static_cast<std::size_t>(horizon);
  if (actions.size() <= h)
    fail(ErrorCode::InsufficientLength, std::to_string(actions.size()) + " actions cannot span horizon " + std::to_string(h));
  std::vector<Pose> out;
  out.reserve(actions.size() - h);
  for (std::size_t i = 0; i + h < actions.size(); ++i)
    out.push_back(compose(inverse(actions[i].tcp_pose), actions[i + h].tcp_pose));
  return out;
}

inline void write_actions(const fs::path& p, const std::vector<ActionRecord>& actions) {
  std::vector<json> rows;
  rows.reserve(actions.size());
  for (const auto& a : actions) {
    json r = stamped_pose_json(a.timestamp_ns, a.tcp_pose);
    r["gripper"] = std::string(to_string(a.gripper));
    rows.push_back(std::move(r));
  }
  write_jsonl(p, rows);
}

inline std::vector<ActionRecord> read_actions(const fs::path& p) {
  std::vector<ActionRecord> out;
  std::size_t k = 0;
  for (const json& row : read_jsonl(p)) {
    const std::string where = p.string() + " record " + std::to_string(k++);
    out.push_back({get_field<std::int64_t>(row, "t_ns", where), get_pose(row, where),
                   parse_gripper(get_field<std::string>(row, "gripper", where))});
  }
  return out;
}

/// relative_actions.jsonl: {"idx", "horizon", "trans", "quat_wxyz"} per line.
inline void write_relative_actions(const fs::path& p, const std::vector<Pose>& rel, int horizon) {
  std::vector<json> rows;
  rows.reserve(rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) {
    json r = json::object();
    r["idx"] = i;
    r["horizon"] = horizon;
    put_pose(r, rel[i]);
    rows.push_back(std::move(r));
  }
  write_jsonl(p, rows);
}

}  // namespace demoforge
