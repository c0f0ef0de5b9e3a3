#include <gtest/gtest.h>

#include <random>

#include "demoforge/synth_gen.hpp"
#include "demoforge/temporal_align.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace demoforge;
using testsupport::error_code_of;
using testsupport::random_vectors;
using testsupport::sequence;

namespace {

Episode episode_of(std::vector<Image> images, Role role = Role::Hand) {
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < images.size(); ++i) frames.push_back({static_cast<std::int64_t>(100 + 10 * i), std::move(images[i]), {}});
  return Episode("ep", role, "", "", std::move(frames));
}

bool strictly_monotone(const AlignmentMap& m) {
  for (std::size_t k = 1; k < m.pairs.size(); ++k)
    if (m.pairs[k].first <= m.pairs[k - 1].first || m.pairs[k].second <= m.pairs[k - 1].second) return false;
  return true;
}

}  // namespace

TEST(Embed, ConstantFrameGivesZeroVector) {
  Image img(50, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 50; ++x) img.set(x, y, 90, 20, 200);
  const auto e = embed_builtin(episode_of({img}));
  ASSERT_EQ(e.dim, 1024u);
  for (double v : e.vectors[0]) EXPECT_EQ(v, 0.0);
}

TEST(Embed, IdenticalFramesGiveIdenticalVectors) {
  std::mt19937_64 rng(1);
  const Image img = oracle::random_image(rng, 45, 37);
  const auto e = embed_builtin(episode_of({img, img}));
  EXPECT_EQ(e.vectors[0], e.vectors[1]);
}

TEST(Embed, CheckerboardMatchesBlockMeanOracle) {
  Image board(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const std::uint8_t v = ((x / 3 + y / 5) % 2) ? 230 : 17;
      board.set(x, y, v, static_cast<std::uint8_t>(255 - v), static_cast<std::uint8_t>(v / 2));
    }
  const auto got = embed_builtin(episode_of({board})).vectors[0];
  const auto want = oracle::embed_block_mean(board);
  double worst = 0;
  for (std::size_t k = 0; k < 1024; ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
  EXPECT_LT(worst, 1e-9);
}

TEST(Embed, NonMultipleSizesKeepUnitVariance) {
  std::mt19937_64 rng(2);
  const auto v = embed_builtin(episode_of({oracle::random_image(rng, 47, 33)})).vectors[0];
  double mean = 0, var = 0;
  for (double x : v) mean += x;
  mean /= 1024;
  for (double x : v) var += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var / 1024, 1.0, 1e-9);
}

TEST(Embed, EmptyEpisodeRejected) {
  EXPECT_EQ(error_code_of([] { embed_builtin(episode_of({})); }), ErrorCode::EmptyInput);
}

TEST(Embed, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(3);
  std::vector<Image> imgs;
  for (int i = 0; i < 9; ++i) imgs.push_back(oracle::random_image(rng, 40, 30));
  const Episode ep = episode_of(imgs);
  EXPECT_EQ(embed_builtin(ep, 1).vectors, embed_builtin(ep, 4).vectors);
}

TEST(NnAlign, IdenticalSequencesGiveIdentity) {
  std::mt19937_64 rng(4);
  const auto v = random_vectors(rng, 30, 8);
  const auto m = nn_align(sequence(v), sequence(v));
  ASSERT_EQ(m.length(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(m.pairs[i], (IndexPair{i, i}));
}

TEST(NnAlign, ShiftByTwoMatchesBruteForce) {
  std::mt19937_64 rng(5);
  const auto hand = random_vectors(rng, 40, 6);
  const std::vector<std::vector<double>> gripper(hand.begin() + 2, hand.end());
  const auto nn = oracle::brute_nn(hand, gripper);
  for (std::size_t i = 2; i < hand.size(); ++i) ASSERT_EQ(nn[i], i - 2);

  const auto m = nn_align(sequence(hand), sequence(gripper));
  ASSERT_EQ(m.length(), hand.size() - 2);
  for (std::size_t k = 0; k < m.length(); ++k) EXPECT_EQ(m.pairs[k], (IndexPair{k + 2, k}));
}

TEST(NnAlign, FiveAgainstOneKeepsAtMostOnePair) {
  std::mt19937_64 rng(6);
  const auto hand = random_vectors(rng, 5, 4);
  const auto gripper = random_vectors(rng, 1, 4);
  const auto back = oracle::brute_nn(gripper, hand);
  const auto m = nn_align(sequence(hand), sequence(gripper));
  ASSERT_LE(m.length(), 1u);
  ASSERT_EQ(m.length(), 1u);
  EXPECT_EQ(m.pairs[0], (IndexPair{back[0], 0}));
}

TEST(NnAlign, CycleToleranceFiltersInconsistentPairs) {
  // Hand 0 and hand 9 share a vector; gripper 0 only looks back at hand 0,
  // so hand 9 -> gripper 0 fails the reverse check and is dropped.
  std::mt19937_64 rng(7);
  auto hand = random_vectors(rng, 10, 5);
  hand[9] = hand[0];
  const auto m = nn_align(sequence(hand), sequence(hand), {.cycle_tolerance = 2});
  for (const auto& p : m.pairs) EXPECT_NE(p.first, 9u);
  const auto loose = nn_align(sequence(hand), sequence(hand), {.cycle_tolerance = 9});
  EXPECT_TRUE(strictly_monotone(loose));
}

TEST(NnAlign, DimMismatchAndEmptyRejected) {
  const auto a = sequence({{1.0, 2.0}}), b = sequence({{1.0, 2.0, 3.0}});
  EXPECT_EQ(error_code_of([&] { nn_align(a, b); }), ErrorCode::DimMismatch);
  EXPECT_EQ(error_code_of([&] { dtw_align(a, b); }), ErrorCode::DimMismatch);
  EXPECT_EQ(error_code_of([&] { nn_align(a, sequence({})); }), ErrorCode::EmptyInput);
}

TEST(NnAlignProperty, OutputStrictlyMonotoneForRandomInputs) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 25, m = 1 + rng() % 25, dim = 1 + rng() % 3;
    const auto a = sequence(random_vectors(rng, n, dim)), b = sequence(random_vectors(rng, m, dim));
    const auto map = nn_align(a, b, {.cycle_tolerance = static_cast<int>(rng() % 6)});
    ASSERT_TRUE(strictly_monotone(map));
    ASSERT_LE(map.length(), std::min(n, m));
    map.validate(n, m);
  }
}

TEST(NnAlignProperty, Deterministic) {
  std::mt19937_64 rng(9);
  const auto a = sequence(random_vectors(rng, 80, 16)), b = sequence(random_vectors(rng, 90, 16));
  EXPECT_EQ(nn_align(a, b), nn_align(a, b));
  EXPECT_EQ(dtw_align(a, b), dtw_align(a, b));
}

TEST(Dtw, IdenticalSequencesGiveIdentityAtZeroCost) {
  std::mt19937_64 rng(10);
  const auto v = random_vectors(rng, 15, 4);
  const auto r = dtw_solve(sequence(v), sequence(v));
  EXPECT_EQ(r.total_cost, 0.0);
  ASSERT_EQ(r.map.length(), 15u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(r.map.pairs[i], (IndexPair{i, i}));
}

TEST(Dtw, RepeatedFrameCostsNothing) {
  std::mt19937_64 rng(11);
  const auto v = random_vectors(rng, 12, 4);
  auto w = v;
  w.insert(w.begin() + 5, v[5]);
  EXPECT_EQ(dtw_solve(sequence(v), sequence(w)).total_cost, 0.0);
  EXPECT_EQ(dtw_solve(sequence(w), sequence(v)).total_cost, 0.0);
}

TEST(Dtw, MatchesBruteForceOnTenByTwelve) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_vectors(rng, 10, 3), b = random_vectors(rng, 12, 3);
    const auto r = dtw_solve(sequence(a), sequence(b));
    const double best = oracle::dtw_brute_force(a, b);
    EXPECT_NEAR(r.total_cost, best, 1e-9 * std::max(1.0, best));
    EXPECT_NEAR(oracle::path_cost(a, b, r.path), r.total_cost, 1e-9 * std::max(1.0, best));
  }
}

TEST(DtwProperty, NeverWorseThanAnyMonotonePath) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 8;
    const auto a = random_vectors(rng, n, 2), b = random_vectors(rng, m, 2);
    const auto r = dtw_solve(sequence(a), sequence(b));
    ASSERT_LE(r.total_cost, oracle::dtw_brute_force(a, b) + 1e-12);
    // Path shape: starts and ends at the corners, unit steps.
    ASSERT_EQ(r.path.front(), (IndexPair{0, 0}));
    ASSERT_EQ(r.path.back(), (IndexPair{n - 1, m - 1}));
    for (std::size_t k = 1; k < r.path.size(); ++k) {
      const auto di = r.path[k].first - r.path[k - 1].first, dj = r.path[k].second - r.path[k - 1].second;
      ASSERT_TRUE(di <= 1 && dj <= 1 && di + dj >= 1);
    }
    // Dedup keeps exactly one entry per hand index.
    ASSERT_EQ(r.map.length(), n);
    r.map.validate(n, m);
  }
}

TEST(ApplyAlignment, IdentityMapTruncates) {
  std::mt19937_64 rng(14);
  std::vector<Image> imgs;
  for (int i = 0; i < 6; ++i) imgs.push_back(oracle::random_image(rng, 9, 9));
  const Episode hand = episode_of(imgs), gripper = episode_of(imgs, Role::Gripper);
  AlignmentMap map;
  for (std::size_t i = 0; i < 4; ++i) map.pairs.emplace_back(i, i);
  const auto [h, g] = apply_alignment(hand, gripper, map);
  ASSERT_EQ(h.size(), 4u);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(h.role(), Role::Hand);
  EXPECT_EQ(g.role(), Role::Gripper);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(h.frame(i).image, hand.frame(i).image);
    EXPECT_EQ(h.frame(i).timestamp_ns, hand.frame(i).timestamp_ns);
    EXPECT_EQ(g.frame(i).image, gripper.frame(i).image);
    EXPECT_EQ(g.frame(i).timestamp_ns, hand.frame(i).timestamp_ns);
  }
}

TEST(ApplyAlignment, EmptyAndOutOfBoundsMapsRejected) {
  const Episode e = episode_of({Image(8, 8), Image(8, 8)});
  EXPECT_EQ(error_code_of([&] { apply_alignment(e, e, {}); }), ErrorCode::EmptyAlignment);
  EXPECT_EQ(error_code_of([&] { apply_alignment(e, e, {{{0, 2}}}); }), ErrorCode::InvalidMap);
  EXPECT_EQ(error_code_of([&] { apply_alignment(e, e, {{{1, 0}, {1, 1}}}); }), ErrorCode::InvalidMap);
}

TEST(ApplyAlignment, ShiftByTwoSynthPairMatchesGroundTruthContent) {
  SceneScript s = make_default_script(21, 48, 96, 72);
  s.warp.clear();
  for (std::size_t j = 0; j + 2 < 48; ++j) s.warp.push_back(j + 2);
  const SynthPair p = render_pair(s, 2);
  for (std::size_t j = 0; j < s.warp.size(); ++j) ASSERT_EQ(p.truth.pairs.pairs[j], (IndexPair{j + 2, j}));

  const auto [h, g] = apply_alignment(p.hand, p.gripper, p.truth.pairs);
  ASSERT_EQ(h.size(), 46u);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const std::size_t t = k + 2;
    EXPECT_EQ(h.frame(k).image, p.hand.frame(t).image);
    EXPECT_EQ(g.frame(k).timestamp_ns, p.hand.frame(t).timestamp_ns);
    // Independent re-render of the gripper view at hand time t.
    EXPECT_EQ(g.frame(k).image, synth::render(s, static_cast<int>(t), synth::Effector::Gripper, synth::kSaltGripper).image);
  }
  // Restamped gripper pose stream covers the aligned frames.
  ASSERT_EQ(g.camera_poses().size(), g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    EXPECT_LT(oracle::matrix_error(g.camera_poses()[k].pose, oracle::to_matrix(p.truth.camera[k + 2].pose)), 1e-12);
}

TEST(AlignmentFiles, RoundTrip) {
  testsupport::TempDir dir("align");
  std::mt19937_64 rng(15);
  const auto seq = sequence(random_vectors(rng, 5, 7), "ep-x");
  write_embeddings(dir / "emb.jsonl", seq);
  const auto back = read_embeddings(dir / "emb.jsonl", "ep-x");
  EXPECT_EQ(back.vectors, seq.vectors);
  EXPECT_EQ(back.dim, 7u);

  const AlignmentMap m{{{0, 1}, {2, 3}}};
  const json j = alignment_json(m, "h", "g", 2);
  EXPECT_EQ(j.dump(), R"({"hand_episode":"h","gripper_episode":"g","cycle_tolerance":2,"pairs":[[0,1],[2,3]]})");
  EXPECT_EQ(parse_alignment(j, "t"), m);
}
