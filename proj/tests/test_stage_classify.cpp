#include <gtest/gtest.h>

#include <random>

#include "demoforge/stage_classify.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace demoforge;
using testsupport::error_code_of;

namespace {

constexpr auto N = StageLabel::NonInteractive;
constexpr auto I = StageLabel::Interactive;

/// Counts object pixels within Chebyshev distance d of any effector pixel.
std::size_t overlap_by_counting(const Mask& eff, const Mask& obj, int d) {
  std::size_t n = 0;
  for (int y = 0; y < obj.height(); ++y)
    for (int x = 0; x < obj.width(); ++x) {
      if (!obj.get(x, y)) continue;
      bool near = false;
      for (int yy = std::max(0, y - d); yy <= std::min(obj.height() - 1, y + d) && !near; ++yy)
        for (int xx = std::max(0, x - d); xx <= std::min(obj.width() - 1, x + d) && !near; ++xx) near = eff.get(xx, yy);
      n += near;
    }
  return n;
}

Mask random_blob_mask(std::mt19937_64& rng, int w, int h) {
  Mask m(w, h);
  const int n = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < n; ++k) {
    const int x0 = static_cast<int>(rng() % w), y0 = static_cast<int>(rng() % h);
    const int x1 = std::min(w - 1, x0 + static_cast<int>(rng() % 6)), y1 = std::min(h - 1, y0 + static_cast<int>(rng() % 6));
    m = mask_union(m, oracle::rect_mask(w, h, x0, y0, x1, y1));
  }
  return m;
}

/// Track of single-pixel masks whose raw labels reproduce `labels`.
std::vector<std::pair<Mask, Mask>> track_for(const std::vector<StageLabel>& labels) {
  std::vector<std::pair<Mask, Mask>> out;
  for (StageLabel l : labels) {
    Mask eff(20, 5), obj(20, 5);
    eff.set(2, 2);
    obj.set(l == I ? 3 : 18, 2);
    out.emplace_back(eff, obj);
  }
  return out;
}

std::vector<StageLabel> labels_from(const std::string& s) {
  std::vector<StageLabel> out;
  for (char c : s) out.push_back(c == 'I' ? I : N);
  return out;
}

}  // namespace

TEST(ClassifyFrame, DisjointAndIdenticalMasks) {
  const Mask a = oracle::rect_mask(40, 40, 2, 2, 6, 6);
  const Mask far = oracle::rect_mask(40, 40, 20, 20, 25, 25);
  EXPECT_EQ(classify_frame(a, far), N);
  EXPECT_EQ(classify_frame(a, a), I);
}

TEST(ClassifyFrame, OnePixelGapDependsOnDilation) {
  const Mask eff = oracle::rect_mask(30, 10, 2, 2, 8, 7);
  const Mask obj = oracle::rect_mask(30, 10, 10, 2, 15, 7);  // column 9 is the gap
  ASSERT_GT(overlap_by_counting(eff, obj, 5), 0u);
  ASSERT_EQ(overlap_by_counting(eff, obj, 0), 0u);
  EXPECT_EQ(classify_frame(eff, obj, 5, 1), I);
  EXPECT_EQ(classify_frame(eff, obj, 0, 1), N);
}

TEST(ClassifyFrame, MatchesPixelCountingOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const Mask eff = random_blob_mask(rng, 24, 18), obj = random_blob_mask(rng, 24, 18);
    const int d = static_cast<int>(rng() % 7), k = 1 + static_cast<int>(rng() % 4);
    const StageLabel want = overlap_by_counting(eff, obj, d) >= static_cast<std::size_t>(k) ? I : N;
    ASSERT_EQ(classify_frame(eff, obj, d, k), want) << "trial " << trial;
  }
}

TEST(ClassifyFrame, Errors) {
  EXPECT_EQ(error_code_of([] { classify_frame(Mask(4, 4), Mask(4, 5)); }), ErrorCode::DimMismatch);
  EXPECT_EQ(error_code_of([] { classify_frame(Mask(4, 4), Mask(4, 4)); }), ErrorCode::MissingEffector);
}

TEST(ClassifyFrameProperty, MonotoneInDilation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Mask eff = random_blob_mask(rng, 24, 18), obj = random_blob_mask(rng, 24, 18);
    bool seen_interactive = false;
    for (int d = 0; d <= 10; ++d) {
      const bool inter = classify_frame(eff, obj, d) == I;
      ASSERT_FALSE(seen_interactive && !inter);
      seen_interactive = seen_interactive || inter;
    }
  }
}

TEST(ClassifyTrack, AllDisjoint) {
  const auto t = classify_track(track_for(labels_from("NNNNNN")));
  EXPECT_EQ(t.labels, labels_from("NNNNNN"));
  EXPECT_TRUE(t.contact_events.empty());
}

TEST(ClassifyTrack, SingleFrameFlickerSuppressed) {
  const auto t = classify_track(track_for(labels_from("NNINN")), {.hysteresis = 3});
  EXPECT_EQ(t.labels, labels_from("NNNNN"));
  EXPECT_TRUE(t.contact_events.empty());
}

TEST(ClassifyTrack, ThreeFrameRunKept) {
  const auto t = classify_track(track_for(labels_from("NIIIN")), {.hysteresis = 3});
  EXPECT_EQ(t.labels, labels_from("NIIIN"));
  ASSERT_EQ(t.contact_events.size(), 1u);
  EXPECT_EQ(t.contact_events[0], (ContactEvent{1, 3}));
}

TEST(ClassifyTrack, DropoutInsideContactFilled) {
  const auto t = classify_track(track_for(labels_from("NNNNIIIINIIIIINNNN")), {.hysteresis = 3});
  EXPECT_EQ(t.labels, labels_from("NNNNIIIIIIIIIINNNN"));
  ASSERT_EQ(t.contact_events.size(), 1u);
  EXPECT_EQ(t.contact_events[0], (ContactEvent{4, 13}));
}

TEST(ClassifyTrack, ErrorNamesFrame) {
  auto frames = track_for(labels_from("NNN"));
  frames[1].first = Mask(20, 5);
  try {
    classify_track(frames);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEffector);
    EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos);
  }
  EXPECT_EQ(error_code_of([] { classify_track({}); }), ErrorCode::EmptyInput);
}

TEST(ClassifyTrackProperty, EventsReconstructLabelsAndSuppressionIsIdempotent) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<StageLabel> raw(1 + rng() % 40);
    for (auto& l : raw) l = (rng() % 3 == 0) ? I : N;
    const int hyst = static_cast<int>(rng() % 5);
    const StageTrack t = classify_track(track_for(raw), {.hysteresis = hyst});

    std::vector<bool> inter;
    for (auto l : t.labels) inter.push_back(l == I);
    ASSERT_EQ(t.contact_events, oracle::runs_of_true(inter));

    // No interior run shorter than the hysteresis survives.
    for (std::size_t i = 0, start = 0; i <= t.labels.size(); ++i) {
      if (i == t.labels.size() || t.labels[i] != t.labels[start]) {
        if (start > 0 && i < t.labels.size()) ASSERT_GE(i - start, static_cast<std::size_t>(hyst));
        start = i;
      }
    }
    const StageTrack again = classify_track(track_for(t.labels), {.hysteresis = hyst});
    ASSERT_EQ(again.labels, t.labels);
  }
}

TEST(GripperStatus, FollowsLabels) {
  StageTrack none{labels_from("NNNN"), {}};
  for (auto g : gripper_status(none)) EXPECT_EQ(g, GripperState::Open);
  StageTrack all{labels_from("IIII"), {{0, 3}}};
  for (auto g : gripper_status(all)) EXPECT_EQ(g, GripperState::Closed);
}

TEST(GripperStatusProperty, ClosedExactlyWhereInteractive) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<StageLabel> raw(1 + rng() % 30);
    for (auto& l : raw) l = (rng() & 1) ? I : N;
    const StageTrack t = classify_track(track_for(raw));
    const auto g = gripper_status(t);
    ASSERT_EQ(g.size(), t.size());
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(g[i] == GripperState::Closed, t.labels[i] == I);
    // Flips happen exactly at event boundaries.
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (g[i] == g[i - 1]) continue;
      const bool opens_event = g[i] == GripperState::Closed;
      bool found = false;
      for (const auto& e : t.contact_events) found = found || (opens_event ? e.start == i : e.end + 1 == i);
      ASSERT_TRUE(found);
    }
  }
}

TEST(StagesFile, RoundTrip) {
  testsupport::TempDir dir("stages");
  StageTrack t{labels_from("NIIN"), {{1, 2}}};
  write_stages(dir / "stages.jsonl", t);
  EXPECT_EQ(read_text(dir / "stages.jsonl").substr(0, 54), R"({"idx":0,"stage":"non_interactive","gripper":"open"})" "\n{");
  const auto back = read_stages(dir / "stages.jsonl");
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.contact_events, t.contact_events);
}
