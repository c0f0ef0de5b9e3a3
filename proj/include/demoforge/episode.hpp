#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "demoforge/error.hpp"
#include "demoforge/pose.hpp"
#include "demoforge/raster.hpp"

namespace demoforge {

namespace mask_role {
inline constexpr std::string_view hand = "hand";
inline constexpr std::string_view gripper = "gripper";
inline constexpr std::string_view object = "object";
inline constexpr std::string_view foreground = "foreground";
inline constexpr std::string_view composite_fg = "composite_fg";
inline constexpr std::string_view inpaint = "inpaint";
}  // namespace mask_role

struct Frame {
  std::int64_t timestamp_ns = 0;
  Image image;
  std::map<std::string, Mask, std::less<>> masks;

  const Mask* find_mask(std::string_view role) const {
    auto it = masks.find(role);
    return it == masks.end() ? nullptr : &it->second;
  }
};

enum class Role { Hand, Gripper, Generated, Composited };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Hand: return "hand";
    case Role::Gripper: return "gripper";
    case Role::Generated: return "generated";
    case Role::Composited: return "composited";
  }
  return "hand";
}

inline Role parse_role(std::string_view s) {
  if (s == "hand") return Role::Hand;
  if (s == "gripper") return Role::Gripper;
  if (s == "generated") return Role::Generated;
  if (s == "composited") return Role::Composited;
  fail(ErrorCode::ParseError, "unknown episode role '" + std::string(s) + "'");
}

/// A demonstration: frames, a camera pose stream and metadata. Invariants are
/// checked once on construction and the object is immutable afterwards.
class Episode {
 public:
  Episode(std::string episode_id, Role role, std::string task, std::string obj_name, std::vector<Frame> frames,
          std::vector<StampedPose> camera_poses = {})
      : episode_id_(std::move(episode_id)),
        role_(role),
        task_(std::move(task)),
        obj_name_(std::move(obj_name)),
        frames_(std::move(frames)),
        camera_poses_(std::move(camera_poses)) {
    validate();
  }

  const std::string& episode_id() const { return episode_id_; }
  Role role() const { return role_; }
  const std::string& task() const { return task_; }
  const std::string& obj_name() const { return obj_name_; }
  const std::vector<Frame>& frames() const { return frames_; }
  const std::vector<StampedPose>& camera_poses() const { return camera_poses_; }

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const Frame& frame(std::size_t i) const { return frames_.at(i); }

  std::vector<std::int64_t> timestamps() const {
    std::vector<std::int64_t> out;
    out.reserve(frames_.size());
    for (const auto& f : frames_) out.push_back(f.timestamp_ns);
    return out;
  }

  int image_width() const { return frames_.empty() ? 0 : frames_.front().image.width(); }
  int image_height() const { return frames_.empty() ? 0 : frames_.front().image.height(); }

 private:
  void validate() const {
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      const Frame& f = frames_[i];
      if (i > 0 && f.timestamp_ns <= frames_[i - 1].timestamp_ns)
        fail(ErrorCode::InvalidEpisode, "frame timestamps not strictly increasing at frame " + std::to_string(i));
      if (!same_dims(f.image, frames_.front().image))
        fail(ErrorCode::DimMismatch, "frame " + std::to_string(i) + " image size differs from frame 0");
      for (const auto& [name, m] : f.masks)
        if (!same_dims(m, f.image))
          fail(ErrorCode::DimMismatch, "mask '" + name + "' of frame " + std::to_string(i) + " differs from image size");
    }
    for (std::size_t k = 1; k < camera_poses_.size(); ++k)
      if (camera_poses_[k].t_ns <= camera_poses_[k - 1].t_ns)
        fail(ErrorCode::InvalidEpisode, "camera pose timestamps not strictly increasing at sample " + std::to_string(k));
  }

  std::string episode_id_;
  Role role_;
  std::string task_;
  std::string obj_name_;
  std::vector<Frame> frames_;
  std::vector<StampedPose> camera_poses_;
};

/// Fisheye intrinsics are carried through serialization untouched.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  std::vector<double> distortion;

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

struct CameraRig {
  Intrinsics intrinsics;
  Pose t_cam_tcp;  // camera -> fingertip (TCP), constant per rig

  friend bool operator==(const CameraRig&, const CameraRig&) = default;
};

}  // namespace demoforge
