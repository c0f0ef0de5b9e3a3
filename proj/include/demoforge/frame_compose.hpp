#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "demoforge/episode.hpp"
#include "demoforge/error.hpp"
#include "demoforge/raster.hpp"
#include "demoforge/stage_classify.hpp"

namespace demoforge {

struct CompositeFrame {
  Image image;
  Mask fg_mask;       // pixels copied from the gripper frame
  Mask inpaint_mask;  // pixels synthesized by inpainting
  std::size_t source_hand_idx = 0;
  std::size_t source_gripper_idx = 0;
};

namespace detail {
inline const Mask& require_mask(const Frame& f, std::string_view role, const char* which) {
  const Mask* m = f.find_mask(role);
  if (!m) fail(ErrorCode::MissingMask, std::string(which) + " frame has no '" + std::string(role) + "' mask");
  return *m;
}
}  // namespace detail

/// Gripper mask, plus the object mask while interacting. A frame without a
/// gripper mask but with a hand mask (a hand demo used as its own pair)
/// contributes its hand mask as the effector.
inline Mask foreground_mask(const Frame& frame, StageLabel stage) {
  const Mask* eff = frame.find_mask(mask_role::gripper);
  if (!eff) eff = frame.find_mask(mask_role::hand);
  if (!eff) fail(ErrorCode::MissingMask, "gripper frame has no 'gripper' mask");
  const Mask& gripper = *eff;
  if (stage == StageLabel::NonInteractive) return gripper;
  return mask_union(gripper, detail::require_mask(frame, mask_role::object, "gripper"));
}

/// Neighbour-mean diffusion fill. Each pass fills every hole pixel that has
/// at least one known 4-neighbour with the rounded mean of those neighbours;
/// passes read only the state left by the previous pass.
inline Image inpaint(const Image& image, const Mask& hole, int max_iters = 10000) {
  require_same_dims(image, hole, "inpaint image/hole");
  if (hole.none()) return image;
  if (hole.all()) fail(ErrorCode::NothingToAnchor, "hole covers the whole image");

  const int w = image.width();
  const int h = image.height();
  Image out = image;
  std::vector<std::uint8_t> known(hole.size());
  for (std::size_t i = 0; i < hole.size(); ++i) known[i] = hole[i] ? 0 : 1;

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < hole.size(); ++i)
    if (hole[i]) pending.push_back(i);

  struct Fill {
    std::size_t idx;
    std::uint8_t rgb[3];
  };
  std::vector<Fill> fills;
  for (int iter = 0; iter < max_iters && !pending.empty(); ++iter) {
    fills.clear();
    std::vector<std::size_t> still;
    for (std::size_t idx : pending) {
      const int x = static_cast<int>(idx % static_cast<std::size_t>(w));
      const int y = static_cast<int>(idx / static_cast<std::size_t>(w));
      unsigned sum[3] = {0, 0, 0};
      unsigned cnt = 0;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& p : nb) {
        if (p[0] < 0 || p[0] >= w || p[1] < 0 || p[1] >= h) continue;
        if (!known[static_cast<std::size_t>(p[1]) * w + p[0]]) continue;
        const std::uint8_t* px = out.pixel(p[0], p[1]);
        for (int c = 0; c < 3; ++c) sum[c] += px[c];
        ++cnt;
      }
      if (cnt == 0) {
        still.push_back(idx);
        continue;
      }
      Fill f{idx, {}};
      for (int c = 0; c < 3; ++c) f.rgb[c] = static_cast<std::uint8_t>((sum[c] + cnt / 2) / cnt);
      fills.push_back(f);
    }
    for (const Fill& f : fills) {
      std::uint8_t* px = out.data().data() + f.idx * 3;
      px[0] = f.rgb[0];
      px[1] = f.rgb[1];
      px[2] = f.rgb[2];
      known[f.idx] = 1;
    }
    pending.swap(still);
  }
  return out;
}

/// Builds the refined gripper frame: the hand frame with the hand (and, while
/// interacting, the object) removed and inpainted, then the gripper-frame
/// foreground pasted at identical pixel coordinates.
inline CompositeFrame composite(const Frame& hand_frame, const Frame& gripper_frame, StageLabel stage,
                                std::size_t hand_idx = 0, std::size_t gripper_idx = 0) {
  require_same_dims(hand_frame.image, gripper_frame.image, "hand/gripper frames");
  Mask hole = detail::require_mask(hand_frame, mask_role::hand, "hand");
  if (stage == StageLabel::Interactive) hole = mask_union(hole, detail::require_mask(hand_frame, mask_role::object, "hand"));
  const Mask fg = foreground_mask(gripper_frame, stage);

  CompositeFrame out;
  out.inpaint_mask = mask_difference(hole, fg);
  out.fg_mask = fg;
  out.source_hand_idx = hand_idx;
  out.source_gripper_idx = gripper_idx;

  // Hand pixels under fg are still hand, so the whole hole is filled from
  // outside it; fg then overwrites its part.
  out.image = out.inpaint_mask.none() ? hand_frame.image : inpaint(hand_frame.image, hole);
  for (int y = 0; y < fg.height(); ++y)
    for (int x = 0; x < fg.width(); ++x)
      if (fg.get(x, y)) {
        const std::uint8_t* src = gripper_frame.image.pixel(x, y);
        out.image.set(x, y, src[0], src[1], src[2]);
      }
  return out;
}

}  // namespace demoforge
