#pragma once

// Deterministic paired-demonstration renderer. Pixels come from integer
// arithmetic only; poses are metadata derived from the same scripted paths.
//
// A scene is described in hand time t = 0..duration-1. The hand episode shows
// frame t at hand index t. The gripper episode is re-timed by `warp`: gripper
// frame j shows the scene at hand time warp[j] with the effector sprite
// swapped for a two-finger gripper glyph.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <tuple>
#include <string>
#include <vector>

#include "demoforge/action_extract.hpp"
#include "demoforge/codec.hpp"
#include "demoforge/episode.hpp"
#include "demoforge/episode_io.hpp"
#include "demoforge/parallel.hpp"
#include "demoforge/pose.hpp"
#include "demoforge/raster.hpp"
#include "demoforge/stage_classify.hpp"
#include "demoforge/temporal_align.hpp"

namespace demoforge {

struct EffectorKey {
  int frame = 0;
  int x = 0;
  int y = 0;
};

struct CameraKey {
  int frame = 0;
  int x_px = 0;  // background scroll; 1 px == 1 mm of camera travel
  int y_px = 0;
  int z_mm = 400;
  int yaw_mrad = 0;
};

struct ObjectSpec {
  std::string shape = "disc";  // "disc" | "box"
  int radius = 7;
  std::array<int, 3> color{200, 40, 40};
  int x = 0;
  int y = 0;
};

struct SceneScript {
  std::uint64_t seed = 1;
  int duration_frames = 0;
  int width = 128;
  int height = 96;
  std::int64_t start_ns = 1'000'000'000;
  std::int64_t frame_period_ns = 33'333'332;
  int pose_rate_multiplier = 2;  // pose samples per frame interval
  int noise_amplitude = 0;       // uniform integer noise in [-a, a] per channel
  std::string task = "pick_and_place";
  std::string obj_name = "cup";
  int effector_radius = 10;
  std::vector<EffectorKey> effector_path;
  std::vector<CameraKey> camera_path;
  ObjectSpec object;
  std::vector<std::size_t> warp;  // gripper frame j -> hand time warp[j]
  std::vector<ContactEvent> contact_windows;
  CameraRig rig;
};

struct GroundTruth {
  std::vector<std::size_t> warp;
  AlignmentMap pairs;                 // (warp[j], j)
  std::vector<StageLabel> stages;     // per hand frame
  std::vector<StampedPose> tcp;       // per hand frame, at frame timestamps
  std::vector<StampedPose> camera;    // per hand frame, at frame timestamps
  std::vector<Image> composites;      // ideal refined gripper frame per hand frame
  std::vector<Mask> composite_fg;     // gripper-frame pixels used by each composite
};

struct SynthPair {
  Episode hand;
  Episode gripper;
  GroundTruth truth;
};

namespace synth {

inline constexpr std::uint64_t kSaltHand = 0x68616e64;
inline constexpr std::uint64_t kSaltGripper = 0x67726970;
inline constexpr std::array<std::uint8_t, 3> kSkin{224, 172, 140};
inline constexpr std::array<std::uint8_t, 3> kGripperColor{58, 62, 74};
inline constexpr int kClearancePx = 6;  // non-contact frames must be NonInteractive at this dilation

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x51ed270b27aa3e5dull;
  for (std::uint64_t p : parts) h = mix(h ^ p);
  return h;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Integer linear interpolation, rounded half up.
inline int lerp_int(int a, int b, std::int64_t num, std::int64_t den) {
  return a + static_cast<int>(floor_div(2 * static_cast<std::int64_t>(b - a) * num + den, 2 * den));
}

template <class Key, class Get>
int eval_int(const std::vector<Key>& keys, int t, Get get) {
  if (t <= keys.front().frame) return get(keys.front());
  for (std::size_t k = 1; k < keys.size(); ++k)
    if (t <= keys[k].frame)
      return lerp_int(get(keys[k - 1]), get(keys[k]), t - keys[k - 1].frame, keys[k].frame - keys[k - 1].frame);
  return get(keys.back());
}

template <class Key, class Get>
double eval_real(const std::vector<Key>& keys, double t, Get get) {
  if (t <= keys.front().frame) return get(keys.front());
  for (std::size_t k = 1; k < keys.size(); ++k)
    if (t <= keys[k].frame) {
      const double a = get(keys[k - 1]), b = get(keys[k]);
      const double u = (t - keys[k - 1].frame) / static_cast<double>(keys[k].frame - keys[k - 1].frame);
      return a + (b - a) * u;
    }
  return get(keys.back());
}

struct SceneState {
  int cam_x = 0, cam_y = 0;
  int eff_x = 0, eff_y = 0;
  int obj_x = 0, obj_y = 0;
  bool contact = false;
};

inline std::optional<std::size_t> contact_window_at(const SceneScript& s, int t) {
  for (std::size_t k = 0; k < s.contact_windows.size(); ++k)
    if (static_cast<std::size_t>(t) >= s.contact_windows[k].start && static_cast<std::size_t>(t) <= s.contact_windows[k].end)
      return k;
  return std::nullopt;
}

inline std::pair<int, int> effector_at(const SceneScript& s, int t) {
  return {eval_int(s.effector_path, t, [](const EffectorKey& k) { return k.x; }),
          eval_int(s.effector_path, t, [](const EffectorKey& k) { return k.y; })};
}

/// While held, the object hangs just below the effector centre.
inline std::pair<int, int> held_object_position(const SceneScript& s, int t) {
  auto [ex, ey] = effector_at(s, t);
  return {ex, ey + s.effector_radius};
}

inline SceneState state_at(const SceneScript& s, int t) {
  SceneState st;
  st.cam_x = eval_int(s.camera_path, t, [](const CameraKey& k) { return k.x_px; });
  st.cam_y = eval_int(s.camera_path, t, [](const CameraKey& k) { return k.y_px; });
  std::tie(st.eff_x, st.eff_y) = effector_at(s, t);
  st.obj_x = s.object.x;
  st.obj_y = s.object.y;
  if (auto k = contact_window_at(s, t)) {
    st.contact = true;
    std::tie(st.obj_x, st.obj_y) = held_object_position(s, t);
  } else {
    // Resting where the most recent window released it.
    for (const auto& w : s.contact_windows)
      if (static_cast<int>(w.end) < t) std::tie(st.obj_x, st.obj_y) = held_object_position(s, static_cast<int>(w.end));
  }
  return st;
}

inline Pose camera_pose_at(const SceneScript& s, double t) {
  const double x = eval_real(s.camera_path, t, [](const CameraKey& k) { return static_cast<double>(k.x_px); });
  const double y = eval_real(s.camera_path, t, [](const CameraKey& k) { return static_cast<double>(k.y_px); });
  const double z = eval_real(s.camera_path, t, [](const CameraKey& k) { return static_cast<double>(k.z_mm); });
  const double yaw = eval_real(s.camera_path, t, [](const CameraKey& k) { return static_cast<double>(k.yaw_mrad); });
  return Pose::from_axis_angle({0.0, 0.0, 1.0}, yaw * 1e-3, {x * 1e-3, y * 1e-3, z * 1e-3});
}

/// Smooth value-noise texture in world pixel coordinates, two octaves.
inline std::uint8_t texture(std::uint64_t seed, int channel, int wx, int wy) {
  auto octave = [&](int cell, std::uint64_t salt) -> int {
    const std::int64_t gx = floor_div(wx, cell), gy = floor_div(wy, cell);
    const int fx = static_cast<int>(wx - gx * cell), fy = static_cast<int>(wy - gy * cell);
    auto lattice = [&](std::int64_t x, std::int64_t y) {
      return static_cast<int>(hash({seed, salt, static_cast<std::uint64_t>(channel), static_cast<std::uint64_t>(x),
                                    static_cast<std::uint64_t>(y)}) % 176) + 40;
    };
    const int v00 = lattice(gx, gy), v10 = lattice(gx + 1, gy), v01 = lattice(gx, gy + 1), v11 = lattice(gx + 1, gy + 1);
    const int num = v00 * (cell - fx) * (cell - fy) + v10 * fx * (cell - fy) + v01 * (cell - fx) * fy + v11 * fx * fy;
    return num / (cell * cell);
  };
  return static_cast<std::uint8_t>((2 * octave(16, 0x10) + octave(6, 0x20)) / 3);
}

inline bool in_disc(int x, int y, int cx, int cy, int r) { return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r; }

inline bool in_object(const SceneScript& s, int x, int y, int ox, int oy) {
  if (s.object.shape == "box") return std::abs(x - ox) <= s.object.radius && std::abs(y - oy) <= s.object.radius;
  return in_disc(x, y, ox, oy, s.object.radius);
}

/// Two vertical fingers joined by a bar along the top of the effector disc.
inline bool in_gripper_glyph(int x, int y, int cx, int cy, int r) {
  const int dx = x - cx, dy = y - cy;
  if (dy < -r || dy > r) return false;
  const bool bar = dy <= -r + 2 && std::abs(dx) <= r;
  const bool finger = std::abs(std::abs(dx) - (r - 2)) <= 1;
  return bar || finger;
}

enum class Effector { None, Hand, Gripper };

struct Layer {
  Image image;
  Mask effector;
  Mask object;  // visible object pixels
};

/// Background and object, then the effector on top, then per-pixel noise
/// keyed by (seed, noise_salt, t, x, y, channel).
inline Layer render(const SceneScript& s, int t, Effector eff, std::uint64_t noise_salt) {
  const SceneState st = state_at(s, t);
  Layer L{Image(s.width, s.height), Mask(s.width, s.height), Mask(s.width, s.height)};
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      std::array<int, 3> px;
      for (int c = 0; c < 3; ++c) px[c] = texture(s.seed, c, x + st.cam_x, y + st.cam_y);
      if (in_object(s, x, y, st.obj_x, st.obj_y)) {
        for (int c = 0; c < 3; ++c) px[c] = s.object.color[c];
        L.object.set(x, y);
      }
      const bool hit = eff == Effector::Hand      ? in_disc(x, y, st.eff_x, st.eff_y, s.effector_radius)
                       : eff == Effector::Gripper ? in_gripper_glyph(x, y, st.eff_x, st.eff_y, s.effector_radius)
                                                  : false;
      if (hit) {
        const auto& col = eff == Effector::Hand ? kSkin : kGripperColor;
        for (int c = 0; c < 3; ++c) px[c] = col[c];
        L.effector.set(x, y);
        L.object.set(x, y, false);
      }
      for (int c = 0; c < 3; ++c) {
        int v = px[c];
        if (s.noise_amplitude > 0) {
          const auto h = hash({s.seed, noise_salt, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(x),
                               static_cast<std::uint64_t>(y), static_cast<std::uint64_t>(c)});
          v += static_cast<int>(h % static_cast<std::uint64_t>(2 * s.noise_amplitude + 1)) - s.noise_amplitude;
        }
        L.image.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  }
  return L;
}

}  // namespace synth

inline void validate_script(const SceneScript& s) {
  auto bad = [](const std::string& why) { fail(ErrorCode::InvalidScript, why); };
  if (s.duration_frames < 1) bad("duration_frames must be >= 1");
  if (s.width < 8 || s.height < 8) bad("image must be at least 8x8");
  if (s.frame_period_ns <= 0) bad("frame_period_ns must be positive");
  if (s.pose_rate_multiplier < 1 || s.frame_period_ns % s.pose_rate_multiplier != 0)
    bad("pose_rate_multiplier must be >= 1 and divide frame_period_ns");
  if (s.noise_amplitude < 0 || s.noise_amplitude > 16) bad("noise_amplitude must be in [0,16]");
  if (s.effector_radius < 4) bad("effector_radius must be >= 4");
  if (s.object.radius < 1) bad("object radius must be >= 1");
  if (s.object.shape != "disc" && s.object.shape != "box") bad("object shape must be disc or box");
  for (int c : s.object.color)
    if (c < 0 || c > 255) bad("object color out of range");
  if (s.effector_path.empty() || s.camera_path.empty()) bad("effector_path and camera_path need keyframes");
  for (std::size_t k = 1; k < s.effector_path.size(); ++k)
    if (s.effector_path[k].frame <= s.effector_path[k - 1].frame) bad("effector keyframes must have increasing frames");
  for (std::size_t k = 1; k < s.camera_path.size(); ++k)
    if (s.camera_path[k].frame <= s.camera_path[k - 1].frame) bad("camera keyframes must have increasing frames");
  if (s.warp.empty()) bad("warp must map at least one gripper frame");
  for (std::size_t j = 0; j < s.warp.size(); ++j) {
    if (s.warp[j] >= static_cast<std::size_t>(s.duration_frames)) bad("warp entry " + std::to_string(j) + " outside duration");
    if (j > 0 && s.warp[j] <= s.warp[j - 1]) bad("warp not strictly monotone at gripper frame " + std::to_string(j));
  }
  for (std::size_t k = 0; k < s.contact_windows.size(); ++k) {
    const auto& w = s.contact_windows[k];
    if (w.start > w.end || w.end >= static_cast<std::size_t>(s.duration_frames)) bad("contact window outside duration");
    if (k > 0 && w.start <= s.contact_windows[k - 1].end) bad("contact windows must be sorted and disjoint");
  }
}

/// Renders both episodes and all ground truth. Throws InvalidScript when the
/// scene geometry contradicts its contact windows: an effector must touch
/// the object (default stage options) exactly during contact windows.
inline SynthPair render_pair(const SceneScript& s, unsigned threads = default_thread_count()) {
  validate_script(s);
  using synth::Effector;
  const auto T = static_cast<std::size_t>(s.duration_frames);
  const StageOptions defaults;

  GroundTruth truth;
  truth.warp = s.warp;
  for (std::size_t j = 0; j < s.warp.size(); ++j) truth.pairs.pairs.emplace_back(s.warp[j], j);
  truth.stages.resize(T);
  truth.composites.resize(T);
  truth.composite_fg.resize(T);

  std::vector<Frame> hand_frames(T);
  std::vector<synth::Layer> gripper_layers(T);
  parallel_for(T, threads, [&](std::size_t i) {
    const int t = static_cast<int>(i);
    const bool contact = synth::contact_window_at(s, t).has_value();
    synth::Layer h = synth::render(s, t, Effector::Hand, synth::kSaltHand);
    synth::Layer g = synth::render(s, t, Effector::Gripper, synth::kSaltGripper);

    for (const synth::Layer* L : {&h, &g}) {
      if (L->effector.none()) fail(ErrorCode::InvalidScript, "effector leaves the image at frame " + std::to_string(i));
      const StageLabel want = contact ? StageLabel::Interactive : StageLabel::NonInteractive;
      const int dil = contact ? defaults.dilation_px : synth::kClearancePx;
      if (classify_frame(L->effector, L->object, dil, defaults.min_overlap_px) != want)
        fail(ErrorCode::InvalidScript, std::string(contact ? "effector misses" : "effector touches") +
                                           " the object outside its contact windows at frame " + std::to_string(i));
    }
    truth.stages[i] = contact ? StageLabel::Interactive : StageLabel::NonInteractive;

    // Ideal composite: hand-side background (object in place, no effector,
    // hand noise) with the gripper-frame foreground pasted over it.
    synth::Layer bg = synth::render(s, t, Effector::None, synth::kSaltHand);
    Mask fg = contact ? mask_union(g.effector, g.object) : g.effector;
    Image ideal = bg.image;
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x)
        if (fg.get(x, y)) {
          const std::uint8_t* p = g.image.pixel(x, y);
          ideal.set(x, y, p[0], p[1], p[2]);
        }
    truth.composites[i] = std::move(ideal);
    truth.composite_fg[i] = std::move(fg);

    Frame& f = hand_frames[i];
    f.timestamp_ns = s.start_ns + static_cast<std::int64_t>(i) * s.frame_period_ns;
    f.image = std::move(h.image);
    f.masks.emplace(std::string(mask_role::hand), std::move(h.effector));
    f.masks.emplace(std::string(mask_role::object), std::move(h.object));
    gripper_layers[i] = std::move(g);
  });

  std::vector<Frame> gripper_frames;
  std::vector<StampedPose> gripper_poses;
  for (std::size_t j = 0; j < s.warp.size(); ++j) {
    const synth::Layer& g = gripper_layers[s.warp[j]];
    Frame f;
    f.timestamp_ns = s.start_ns + static_cast<std::int64_t>(j) * s.frame_period_ns;
    f.image = g.image;
    f.masks.emplace(std::string(mask_role::gripper), g.effector);
    f.masks.emplace(std::string(mask_role::object), g.object);
    gripper_poses.push_back({f.timestamp_ns, synth::camera_pose_at(s, static_cast<double>(s.warp[j]))});
    gripper_frames.push_back(std::move(f));
  }

  std::vector<StampedPose> hand_poses;
  const std::int64_t step = s.frame_period_ns / s.pose_rate_multiplier;
  const std::size_t samples = (T - 1) * static_cast<std::size_t>(s.pose_rate_multiplier) + 1;
  for (std::size_t k = 0; k < samples; ++k) {
    const double tf = static_cast<double>(k) / s.pose_rate_multiplier;
    hand_poses.push_back({s.start_ns + static_cast<std::int64_t>(k) * step, synth::camera_pose_at(s, tf)});
  }
  for (std::size_t i = 0; i < T; ++i) {
    const std::int64_t ts = hand_frames[i].timestamp_ns;
    const Pose cam = synth::camera_pose_at(s, static_cast<double>(i));
    truth.camera.push_back({ts, cam});
    truth.tcp.push_back({ts, compose(cam, s.rig.t_cam_tcp)});
  }

  const std::string base = "synth-" + std::to_string(s.seed);
  return {Episode(base + "-hand", Role::Hand, s.task, s.obj_name, std::move(hand_frames), std::move(hand_poses)),
          Episode(base + "-gripper", Role::Gripper, s.task, s.obj_name, std::move(gripper_frames), std::move(gripper_poses)),
          std::move(truth)};
}

/// Re-renders the ideal composite in the opposite order: start from the
/// gripper frame and overwrite everything outside the foreground with the
/// hand-side background. Used to cross-check GroundTruth::composites.
inline Image rerender_composite_swapped(const SceneScript& s, std::size_t hand_idx) {
  using synth::Effector;
  const int t = static_cast<int>(hand_idx);
  const bool contact = synth::contact_window_at(s, t).has_value();
  synth::Layer g = synth::render(s, t, Effector::Gripper, synth::kSaltGripper);
  synth::Layer bg = synth::render(s, t, Effector::None, synth::kSaltHand);
  Image out = g.image;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const bool fg = g.effector.get(x, y) || (contact && g.object.get(x, y));
      if (!fg) {
        const std::uint8_t* p = bg.image.pixel(x, y);
        out.set(x, y, p[0], p[1], p[2]);
      }
    }
  return out;
}

/// A valid pick-carry-release scene for the given seed. Draws come straight
/// from mt19937_64 output, whose sequence is fixed by the standard.
inline SceneScript make_default_script(std::uint64_t seed, int duration = 120, int width = 128, int height = 96,
                                       int noise_amplitude = 2) {
  if (width < 96 || height < 72) fail(ErrorCode::InvalidScript, "the default scene needs at least 96x72 pixels");
  std::mt19937_64 rng(seed);
  auto draw = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };

  SceneScript s;
  s.seed = seed;
  s.duration_frames = duration;
  s.width = width;
  s.height = height;
  s.noise_amplitude = noise_amplitude;
  const int R = s.effector_radius;
  s.object.radius = draw(5, 7);
  s.object.shape = draw(0, 1) ? "disc" : "box";
  s.object.color = {draw(150, 230), draw(20, 80), draw(20, 80)};
  s.object.x = draw(width / 4, width / 2);
  s.object.y = draw(height / 2, height - s.object.radius - R - 4);

  const int cs = duration * 3 / 10;
  const int ce = duration * 6 / 10;
  s.contact_windows = {{static_cast<std::size_t>(cs), static_cast<std::size_t>(ce)}};

  // Approach from the upper right, stop with a clear gap, carry, lift away.
  const int gap = R + s.object.radius + 12;
  const int ax = s.object.x + gap, ay = s.object.y;
  const int carry_x = std::min(width - R - 2, s.object.x + draw(20, 40));
  const int carry_y = std::max(R + 2, s.object.y - draw(10, 25));
  s.effector_path = {{0, width - R - 2, R + 2},
                     {cs - 1, ax, ay},
                     {cs, s.object.x, s.object.y - R},
                     {ce, carry_x, carry_y},
                     {ce + 1, carry_x - gap, std::max(R + 2, carry_y - gap)},
                     {duration - 1, std::max(R + 2, carry_x - gap - draw(0, 20)), R + 2}};

  int x = 0, y = 0;
  s.camera_path.push_back({0, 0, 0, 400, 0});
  for (int f = 15; f < duration + 15; f += 15) {
    x += draw(12, 24);
    y += draw(-6, 6);
    s.camera_path.push_back({f, x, y, draw(360, 440), draw(-120, 120)});
  }

  s.warp.clear();
  std::size_t h = static_cast<std::size_t>(draw(0, 2));
  while (h < static_cast<std::size_t>(duration)) {
    s.warp.push_back(h);
    h += draw(0, 3) == 0 ? 2 : 1;
  }

  s.rig.t_cam_tcp = Pose::from_axis_angle({1.0, 0.0, 0.0}, 0.12, {0.0, -0.045, 0.18});
  s.rig.intrinsics = {285.7, 285.7, width / 2.0, height / 2.0, {0.021, -0.006, 0.0004, -0.00003}};
  return s;
}

// ---- Script and truth files ------------------------------------------------

inline json script_json(const SceneScript& s) {
  json j = json::object();
  j["seed"] = s.seed;
  j["duration_frames"] = s.duration_frames;
  j["width"] = s.width;
  j["height"] = s.height;
  j["start_ns"] = s.start_ns;
  j["frame_period_ns"] = s.frame_period_ns;
  j["pose_rate_multiplier"] = s.pose_rate_multiplier;
  j["noise_amplitude"] = s.noise_amplitude;
  j["task"] = s.task;
  j["obj_name"] = s.obj_name;
  j["effector_radius"] = s.effector_radius;
  j["effector_path"] = json::array();
  for (const auto& k : s.effector_path) j["effector_path"].push_back({{"frame", k.frame}, {"x", k.x}, {"y", k.y}});
  j["camera_path"] = json::array();
  for (const auto& k : s.camera_path)
    j["camera_path"].push_back(
        {{"frame", k.frame}, {"x_px", k.x_px}, {"y_px", k.y_px}, {"z_mm", k.z_mm}, {"yaw_mrad", k.yaw_mrad}});
  j["object"] = {{"shape", s.object.shape}, {"radius", s.object.radius}, {"color", s.object.color},
                 {"x", s.object.x},         {"y", s.object.y}};
  j["warp"] = s.warp;
  j["contact_windows"] = json::array();
  for (const auto& w : s.contact_windows) j["contact_windows"].push_back({w.start, w.end});
  j["rig"] = rig_json(s.rig);
  return j;
}

inline SceneScript parse_script(const json& j) {
  try {
    SceneScript s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.duration_frames = j.at("duration_frames").get<int>();
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.start_ns = j.value("start_ns", s.start_ns);
    s.frame_period_ns = j.value("frame_period_ns", s.frame_period_ns);
    s.pose_rate_multiplier = j.value("pose_rate_multiplier", s.pose_rate_multiplier);
    s.noise_amplitude = j.value("noise_amplitude", s.noise_amplitude);
    s.task = j.value("task", s.task);
    s.obj_name = j.value("obj_name", s.obj_name);
    s.effector_radius = j.value("effector_radius", s.effector_radius);
    for (const auto& k : j.at("effector_path")) s.effector_path.push_back({k.at("frame"), k.at("x"), k.at("y")});
    for (const auto& k : j.at("camera_path"))
      s.camera_path.push_back({k.at("frame"), k.at("x_px"), k.at("y_px"), k.value("z_mm", 400), k.value("yaw_mrad", 0)});
    const json& o = j.at("object");
    s.object.shape = o.value("shape", s.object.shape);
    s.object.radius = o.value("radius", s.object.radius);
    s.object.color = o.value("color", s.object.color);
    s.object.x = o.at("x");
    s.object.y = o.at("y");
    s.warp = j.at("warp").get<std::vector<std::size_t>>();
    for (const auto& w : j.value("contact_windows", json::array())) {
      if (w.size() != 2) fail(ErrorCode::InvalidScript, "contact window must be [start, end]");
      s.contact_windows.push_back({w[0].get<std::size_t>(), w[1].get<std::size_t>()});
    }
    if (j.contains("rig")) s.rig = parse_rig(j.at("rig"), "script rig");
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidScript, std::string("malformed scene script: ") + e.what());
  }
}

/// out_dir/{hand,gripper}/ episodes (each with rig.json), plus
/// out_dir/truth/{warp.json, stages.jsonl, tcp.jsonl, composites/, composite_fg/}
/// and the script that produced them.
inline void write_synth(const fs::path& out_dir, const SceneScript& s, const SynthPair& pair,
                        unsigned threads = default_thread_count()) {
  write_episode(out_dir / "hand", pair.hand, threads);
  write_rig(out_dir / "hand" / "rig.json", s.rig);
  write_episode(out_dir / "gripper", pair.gripper, threads);
  write_rig(out_dir / "gripper" / "rig.json", s.rig);

  const fs::path truth = out_dir / "truth";
  fs::create_directories(truth / "composites");
  fs::create_directories(truth / "composite_fg");
  json warp = json::object();
  warp["hand_episode"] = pair.hand.episode_id();
  warp["gripper_episode"] = pair.gripper.episode_id();
  warp["warp"] = pair.truth.warp;
  warp["pairs"] = json::array();
  for (const auto& [h, g] : pair.truth.pairs.pairs) warp["pairs"].push_back({h, g});
  write_json(truth / "warp.json", warp);

  StageTrack track{pair.truth.stages, contact_events(pair.truth.stages)};
  write_stages(truth / "stages.jsonl", track);
  write_pose_stream(truth / "tcp.jsonl", pair.truth.tcp);
  parallel_for(pair.truth.composites.size(), threads, [&](std::size_t i) {
    write_png(truth / "composites" / frame_filename(i), pair.truth.composites[i]);
    write_mask_png(truth / "composite_fg" / frame_filename(i), pair.truth.composite_fg[i]);
  });
  write_json(out_dir / "script.json", script_json(s));
}

/// Reads truth/composites/ as an episode carrying the given frame timestamps.
inline Episode read_truth_composites(const fs::path& truth_dir, const std::string& id, const std::vector<std::int64_t>& stamps) {
  std::vector<Frame> frames;
  for (std::size_t i = 0;; ++i) {
    const fs::path p = truth_dir / "composites" / frame_filename(i);
    if (!fs::exists(p)) break;
    Frame f;
    f.image = read_png(p);
    frames.push_back(std::move(f));
  }
  if (frames.size() != stamps.size())
    fail(ErrorCode::LengthMismatch, truth_dir.string() + " holds " + std::to_string(frames.size()) + " composites, expected " +
                                        std::to_string(stamps.size()));
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i].timestamp_ns = stamps[i];
  return Episode(id, Role::Composited, "", "", std::move(frames));
}

}  // namespace demoforge
