#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "demoforge/episode_io.hpp"
#include "demoforge/error.hpp"
#include "demoforge/raster.hpp"

namespace demoforge {

enum class StageLabel { NonInteractive, Interactive };
enum class GripperState { Open, Closed };

inline std::string_view to_string(StageLabel s) { return s == StageLabel::Interactive ? "interactive" : "non_interactive"; }
inline std::string_view to_string(GripperState g) { return g == GripperState::Closed ? "closed" : "open"; }

inline StageLabel parse_stage(std::string_view s) {
  if (s == "interactive") return StageLabel::Interactive;
  if (s == "non_interactive") return StageLabel::NonInteractive;
  fail(ErrorCode::ParseError, "unknown stage '" + std::string(s) + "'");
}

inline GripperState parse_gripper(std::string_view s) {
  if (s == "closed") return GripperState::Closed;
  if (s == "open") return GripperState::Open;
  fail(ErrorCode::ParseError, "unknown gripper state '" + std::string(s) + "'");
}

/// Inclusive [start, end] frame range of one Interactive run.
struct ContactEvent {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const ContactEvent&, const ContactEvent&) = default;
};

struct StageTrack {
  std::vector<StageLabel> labels;
  std::vector<ContactEvent> contact_events;

  std::size_t size() const { return labels.size(); }
};

struct StageOptions {
  int dilation_px = 5;
  int min_overlap_px = 1;
  int hysteresis = 3;
};

/// Interactive iff the effector mask, dilated by a square of radius
/// dilation_px, overlaps the object mask in at least min_overlap_px pixels.
inline StageLabel classify_frame(const Mask& effector, const Mask& object, int dilation_px = 5, int min_overlap_px = 1) {
  require_same_dims(effector, object, "effector/object masks");
  if (dilation_px < 0) fail(ErrorCode::OutOfRange, "dilation_px must be >= 0");
  if (effector.none()) fail(ErrorCode::MissingEffector, "effector mask is empty");
  const Mask grown = dilate(effector, dilation_px);
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < grown.size(); ++i) overlap += (grown[i] && object[i]) ? 1 : 0;
  return overlap >= static_cast<std::size_t>(std::max(min_overlap_px, 0)) ? StageLabel::Interactive
                                                                          : StageLabel::NonInteractive;
}

inline std::vector<ContactEvent> contact_events(const std::vector<StageLabel>& labels) {
  std::vector<ContactEvent> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != StageLabel::Interactive) continue;
    if (i == 0 || labels[i - 1] != StageLabel::Interactive) out.push_back({i, i});
    out.back().end = i;
  }
  return out;
}

/// Flips interior runs shorter than `hysteresis` into their neighbours,
/// shortest run first (ties: earliest). Runs touching either end of the
/// sequence are kept since their true length is unknown.
inline std::vector<StageLabel> suppress_short_runs(std::vector<StageLabel> labels, int hysteresis) {
  if (hysteresis < 0) fail(ErrorCode::OutOfRange, "hysteresis must be >= 0");
  const auto min_len = static_cast<std::size_t>(hysteresis);
  for (;;) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;  // (start, length)
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (i == 0 || labels[i] != labels[i - 1]) runs.emplace_back(i, 0);
      ++runs.back().second;
    }
    std::size_t pick = runs.size();
    for (std::size_t r = 1; r + 1 < runs.size(); ++r)
      if (runs[r].second < min_len && (pick == runs.size() || runs[r].second < runs[pick].second)) pick = r;
    if (pick == runs.size()) return labels;
    const StageLabel fill = labels[runs[pick].first - 1];
    for (std::size_t i = 0; i < runs[pick].second; ++i) labels[runs[pick].first + i] = fill;
  }
}

/// Per-frame classification followed by flicker suppression.
inline StageTrack classify_track(const std::vector<std::pair<Mask, Mask>>& frames, const StageOptions& opts = {}) {
  if (frames.empty()) fail(ErrorCode::EmptyInput, "stage track needs at least one frame");
  std::vector<StageLabel> raw;
  raw.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      raw.push_back(classify_frame(frames[i].first, frames[i].second, opts.dilation_px, opts.min_overlap_px));
    } catch (const Error& e) {
      throw Error(e.code(), "frame " + std::to_string(i) + ": " + e.what());
    }
  }
  StageTrack t;
  t.labels = suppress_short_runs(std::move(raw), opts.hysteresis);
  t.contact_events = contact_events(t.labels);
  return t;
}

/// Builds the (effector, object) mask sequence of an episode. A frame with no
/// object mask gets an empty one; a missing effector mask is an error.
inline std::vector<std::pair<Mask, Mask>> stage_inputs(const Episode& ep, std::string_view effector_role) {
  std::vector<std::pair<Mask, Mask>> out;
  out.reserve(ep.size());
  for (std::size_t i = 0; i < ep.size(); ++i) {
    const Frame& f = ep.frame(i);
    const Mask* eff = f.find_mask(effector_role);
    if (!eff)
      fail(ErrorCode::MissingMask, "frame " + std::to_string(i) + " of '" + ep.episode_id() + "' has no '" +
                                       std::string(effector_role) + "' mask");
    const Mask* obj = f.find_mask(mask_role::object);
    out.emplace_back(*eff, obj ? *obj : Mask(f.image.width(), f.image.height()));
  }
  return out;
}

inline std::vector<GripperState> gripper_status(const StageTrack& track) {
  std::vector<GripperState> out;
  out.reserve(track.size());
  for (StageLabel s : track.labels) out.push_back(s == StageLabel::Interactive ? GripperState::Closed : GripperState::Open);
  return out;
}

inline void write_stages(const fs::path& p, const StageTrack& track) {
  const auto grip = gripper_status(track);
  std::vector<json> rows;
  for (std::size_t i = 0; i < track.size(); ++i) {
    json r = json::object();
    r["idx"] = i;
    r["stage"] = std::string(to_string(track.labels[i]));
    r["gripper"] = std::string(to_string(grip[i]));
    rows.push_back(std::move(r));
  }
  write_jsonl(p, rows);
}

inline StageTrack read_stages(const fs::path& p) {
  const auto rows = read_jsonl(p);
  StageTrack t;
  t.labels.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::string where = p.string() + " record " + std::to_string(k);
    const auto idx = get_field<std::size_t>(rows[k], "idx", where);
    if (idx != k) fail(ErrorCode::ParseError, where + ": stages must be listed in index order");
    t.labels[k] = parse_stage(get_field<std::string>(rows[k], "stage", where));
  }
  t.contact_events = contact_events(t.labels);
  return t;
}

}  // namespace demoforge
