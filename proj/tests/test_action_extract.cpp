#include <gtest/gtest.h>

#include <random>

#include "demoforge/action_extract.hpp"
#include "demoforge/synth_gen.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace demoforge;
using testsupport::error_code_of;

namespace {

CameraRig rig_with(const Pose& t) {
  CameraRig r;
  r.t_cam_tcp = t;
  return r;
}

std::vector<ActionRecord> records(const std::vector<Pose>& poses) {
  std::vector<ActionRecord> out;
  for (std::size_t i = 0; i < poses.size(); ++i) out.push_back({static_cast<std::int64_t>(i), poses[i], GripperState::Open});
  return out;
}

Episode plain_episode(std::size_t n, std::int64_t t0, std::int64_t dt, std::vector<StampedPose> poses) {
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < n; ++i) frames.push_back({t0 + static_cast<std::int64_t>(i) * dt, Image(8, 8), {}});
  return Episode("e", Role::Hand, "", "", std::move(frames), std::move(poses));
}

}  // namespace

TEST(CameraToTcp, Examples) {
  std::mt19937_64 rng(1);
  const Pose cam = oracle::random_pose(rng);
  EXPECT_EQ(camera_to_tcp(cam, rig_with(Pose::identity())).translation(), cam.translation());
  EXPECT_EQ(camera_to_tcp(Pose::identity(), rig_with(Pose::from_translation({0, 0, 0.15}))).translation(), (Vec3{0, 0, 0.15}));

  const Pose rz90_at_x = Pose::from_axis_angle({0, 0, 1}, M_PI / 2, {1, 0, 0});
  const Pose off = Pose::from_translation({0, 0.1, 0});
  const Pose tcp = camera_to_tcp(rz90_at_x, rig_with(off));
  EXPECT_LT(oracle::matrix_error(tcp, oracle::to_matrix(rz90_at_x) * oracle::to_matrix(off)), 1e-9);
  EXPECT_NEAR(tcp.translation()[0], 0.9, 1e-15);
  EXPECT_NEAR(tcp.translation()[1], 0.0, 1e-15);
}

TEST(CameraToTcpProperty, Equivariance) {
  std::mt19937_64 rng(2);
  const CameraRig rig = rig_with(oracle::random_pose(rng, 0.3));
  for (int i = 0; i < 200; ++i) {
    const Pose W = oracle::random_pose(rng), cam = oracle::random_pose(rng);
    const Pose lhs = camera_to_tcp(compose(W, cam), rig), rhs = compose(W, camera_to_tcp(cam, rig));
    ASSERT_LT(oracle::matrix_error(lhs, oracle::to_matrix(rhs)), 1e-9);
  }
}

TEST(ExtractActions, StaticCameraAllOpen) {
  const Pose cam = Pose::from_axis_angle({1, 1, 0}, 0.3, {0.1, 0.2, 0.3});
  const Episode ep = plain_episode(5, 100, 10, {{90, cam}, {200, cam}});
  StageTrack t{std::vector<StageLabel>(5, StageLabel::NonInteractive), {}};
  const auto acts = extract_actions(ep, t, rig_with(Pose::from_translation({0, 0, 0.15})));
  ASSERT_EQ(acts.size(), 5u);
  for (std::size_t i = 0; i < acts.size(); ++i) {
    EXPECT_EQ(acts[i].timestamp_ns, ep.frame(i).timestamp_ns);
    EXPECT_EQ(acts[i].gripper, GripperState::Open);
    EXPECT_EQ(acts[i].tcp_pose, acts[0].tcp_pose);
  }
}

TEST(ExtractActions, Errors) {
  const Episode ep = plain_episode(3, 100, 10, {{100, Pose()}, {115, Pose()}});
  StageTrack t{std::vector<StageLabel>(3, StageLabel::NonInteractive), {}};
  EXPECT_EQ(error_code_of([&] { extract_actions(ep, t, {}); }), ErrorCode::ExtrapolationRefused);
  StageTrack short_t{std::vector<StageLabel>(2, StageLabel::NonInteractive), {}};
  EXPECT_EQ(error_code_of([&] { extract_actions(ep, short_t, {}); }), ErrorCode::TrackMismatch);
}

TEST(ExtractActions, SynthTrajectoryMatchesGroundTruth) {
  for (std::uint64_t seed : {3u, 4u}) {
    const SceneScript s = make_default_script(seed, 60, 96, 72);
    const SynthPair p = render_pair(s, 2);
    const StageTrack track = classify_track(stage_inputs(p.hand, mask_role::hand));
    EXPECT_EQ(track.labels, p.truth.stages);
    const auto acts = extract_actions(p.hand, track, s.rig);
    ASSERT_EQ(acts.size(), p.truth.tcp.size());
    for (std::size_t i = 0; i < acts.size(); ++i) {
      EXPECT_EQ(acts[i].timestamp_ns, p.truth.tcp[i].t_ns);
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(acts[i].tcp_pose.translation()[c], p.truth.tcp[i].pose.translation()[c], 1e-6);
      EXPECT_LT(angular_distance(acts[i].tcp_pose.rotation(), p.truth.tcp[i].pose.rotation()), 1e-6);
    }
    // Gripper closes exactly over the scripted contact windows.
    for (std::size_t i = 0; i < acts.size(); ++i) {
      bool in_window = false;
      for (const auto& w : s.contact_windows) in_window = in_window || (i >= w.start && i <= w.end);
      EXPECT_EQ(acts[i].gripper == GripperState::Closed, in_window) << "frame " << i;
    }
  }
}

TEST(RelativeActions, ConstantAndPureTranslation) {
  const Pose c = Pose::from_axis_angle({0, 1, 0}, 1.1, {3, 2, 1});
  for (const Pose& r : relative_actions(records(std::vector<Pose>(6, c)), 2)) {
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.translation()[k], 0.0, 1e-12);
    EXPECT_LT(angular_distance(r.rotation(), Quaternion::identity()), 1e-12);
  }
  std::vector<Pose> line;
  for (int i = 0; i < 10; ++i) line.push_back(Pose::from_translation({0.01 * i, 0, 0}));
  const auto rel = relative_actions(records(line), 1);
  ASSERT_EQ(rel.size(), 9u);
  for (const Pose& r : rel) {
    EXPECT_NEAR(r.translation()[0], 0.01, 1e-15);
    EXPECT_EQ(r.translation()[1], 0.0);
    EXPECT_EQ(r.translation()[2], 0.0);
  }
}

TEST(RelativeActions, MatchesMatrixOracle) {
  std::mt19937_64 rng(5);
  std::vector<Pose> traj;
  for (int i = 0; i < 50; ++i) traj.push_back(oracle::random_pose(rng));
  for (int h : {1, 3}) {
    const auto rel = relative_actions(records(traj), h);
    ASSERT_EQ(rel.size(), traj.size() - static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < rel.size(); ++i)
      ASSERT_LT(oracle::matrix_error(rel[i], oracle::to_matrix(traj[i]).inverse() * oracle::to_matrix(traj[i + h])), 1e-9);
  }
}

TEST(RelativeActions, LengthAndHorizonChecks) {
  const auto two = records({Pose(), Pose()});
  EXPECT_EQ(relative_actions(two, 1).size(), 1u);
  EXPECT_EQ(error_code_of([&] { relative_actions(two, 2); }), ErrorCode::InsufficientLength);
  EXPECT_EQ(error_code_of([&] { relative_actions(two, 0); }), ErrorCode::OutOfRange);
}

TEST(RelativeActionsProperty, WorldFrameInvariance) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Pose> traj, moved;
    const Pose W = oracle::random_pose(rng, 5.0);
    for (int i = 0; i < 20; ++i) {
      traj.push_back(oracle::random_pose(rng));
      moved.push_back(compose(W, traj.back()));
    }
    const auto a = relative_actions(records(traj), 2), b = relative_actions(records(moved), 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (int k = 0; k < 3; ++k) ASSERT_NEAR(a[i].translation()[k], b[i].translation()[k], 1e-9);
      ASSERT_LT(angular_distance(a[i].rotation(), b[i].rotation()), 1e-9);
    }
  }
}

TEST(ActionsFile, RoundTrip) {
  testsupport::TempDir dir("act");
  std::mt19937_64 rng(7);
  std::vector<ActionRecord> acts;
  for (int i = 0; i < 5; ++i)
    acts.push_back({i * 1000, oracle::random_pose(rng), i % 2 ? GripperState::Closed : GripperState::Open});
  write_actions(dir / "actions.jsonl", acts);
  const auto back = read_actions(dir / "actions.jsonl");
  ASSERT_EQ(back.size(), acts.size());
  for (std::size_t i = 0; i < acts.size(); ++i) {
    EXPECT_EQ(back[i].timestamp_ns, acts[i].timestamp_ns);
    EXPECT_EQ(back[i].gripper, acts[i].gripper);
    EXPECT_EQ(back[i].tcp_pose.translation(), acts[i].tcp_pose.translation());
    EXPECT_LT(angular_distance(back[i].tcp_pose.rotation(), acts[i].tcp_pose.rotation()), 1e-15);
  }
  const json first = read_jsonl(dir / "actions.jsonl").front();
  EXPECT_EQ(std::vector<std::string>({"t_ns", "trans", "quat_wxyz", "gripper"}),
            [&] {
              std::vector<std::string> k;
              for (auto it = first.begin(); it != first.end(); ++it) k.push_back(it.key());
              return k;
            }());
}
