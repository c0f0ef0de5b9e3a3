#pragma once

// The four workflows behind the `demoforge` CLI. Each command stages its
// artifacts under <out>/.partial, validates them by reading them back, and
// only then moves them into <out> and writes <out>/manifest.json. A failed
// run leaves .partial behind and no manifest.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "demoforge/action_extract.hpp"
#include "demoforge/episode_io.hpp"
#include "demoforge/frame_compose.hpp"
#include "demoforge/gen_bridge.hpp"
#include "demoforge/quality_metrics.hpp"
#include "demoforge/stage_classify.hpp"
#include "demoforge/synth_gen.hpp"
#include "demoforge/temporal_align.hpp"

namespace demoforge {

inline constexpr std::string_view kManifestSchema = "demoforge.output/v1";

struct PipelineConfig {
  struct Paths {
    std::string inputs;  // ';'-joined input locations as given on the command line
    std::string out;
  } paths;
  struct Alignment {
    std::string method = "nn";  // "nn" | "dtw"
    int cycle_tolerance = 2;
    std::string hand_embeddings;     // optional emb.jsonl; builtin embedder when empty
    std::string gripper_embeddings;  // optional emb.jsonl
  } alignment;
  StageOptions stage;
  struct Generator {
    std::string endpoint;  // http://host:port, used when mock is empty
    std::string mock;      // "" | "echo" | "composite"
    std::string truth_dir; // composite mock source; defaults to <hand_dir>/../truth
    int timeout_ms = 30000;
    int concurrency = 4;
    std::string obj_name;  // overrides the episode's obj_name when set
  } generator;
  struct Export {
    int horizon = 1;
  } export_;
};

inline json config_json(const PipelineConfig& c) {
  json j = json::object();
  j["paths"] = {{"inputs", c.paths.inputs}, {"out", c.paths.out}};
  j["alignment"] = {{"method", c.alignment.method},
                    {"cycle_tolerance", c.alignment.cycle_tolerance},
                    {"hand_embeddings", c.alignment.hand_embeddings},
                    {"gripper_embeddings", c.alignment.gripper_embeddings}};
  j["stage"] = {{"dilation_px", c.stage.dilation_px},
                {"min_overlap_px", c.stage.min_overlap_px},
                {"hysteresis", c.stage.hysteresis}};
  j["generator"] = {{"endpoint", c.generator.endpoint},       {"mock", c.generator.mock},
                    {"truth_dir", c.generator.truth_dir},     {"timeout_ms", c.generator.timeout_ms},
                    {"concurrency", c.generator.concurrency}, {"obj_name", c.generator.obj_name}};
  j["metrics"] = {{"psnr_channels", "rgb"}, {"ssim_channel", "luma_bt601"}, {"ssim_window", kSsimWindow}};
  j["export"] = {{"horizon", c.export_.horizon}};
  return j;
}

/// Missing keys keep their defaults, so partial config files are fine.
inline PipelineConfig parse_config(const json& j) {
  PipelineConfig c;
  try {
    if (j.contains("paths")) {
      c.paths.inputs = j["paths"].value("inputs", c.paths.inputs);
      c.paths.out = j["paths"].value("out", c.paths.out);
    }
    if (j.contains("alignment")) {
      const json& a = j["alignment"];
      c.alignment.method = a.value("method", c.alignment.method);
      c.alignment.cycle_tolerance = a.value("cycle_tolerance", c.alignment.cycle_tolerance);
      c.alignment.hand_embeddings = a.value("hand_embeddings", c.alignment.hand_embeddings);
      c.alignment.gripper_embeddings = a.value("gripper_embeddings", c.alignment.gripper_embeddings);
    }
    if (j.contains("stage")) {
      const json& s = j["stage"];
      c.stage.dilation_px = s.value("dilation_px", c.stage.dilation_px);
      c.stage.min_overlap_px = s.value("min_overlap_px", c.stage.min_overlap_px);
      c.stage.hysteresis = s.value("hysteresis", c.stage.hysteresis);
    }
    if (j.contains("generator")) {
      const json& g = j["generator"];
      c.generator.endpoint = g.value("endpoint", c.generator.endpoint);
      c.generator.mock = g.value("mock", c.generator.mock);
      c.generator.truth_dir = g.value("truth_dir", c.generator.truth_dir);
      c.generator.timeout_ms = g.value("timeout_ms", c.generator.timeout_ms);
      c.generator.concurrency = g.value("concurrency", c.generator.concurrency);
      c.generator.obj_name = g.value("obj_name", c.generator.obj_name);
    }
    if (j.contains("export")) c.export_.horizon = j["export"].value("horizon", c.export_.horizon);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  if (c.alignment.method != "nn" && c.alignment.method != "dtw")
    fail(ErrorCode::ParseError, "config: alignment.method must be nn or dtw");
  if (!c.generator.mock.empty() && c.generator.mock != "echo" && c.generator.mock != "composite")
    fail(ErrorCode::ParseError, "config: generator.mock must be echo or composite");
  return c;
}

/// DEMOFORGE_GEN_ENDPOINT / DEMOFORGE_GEN_TIMEOUT_MS, applied before CLI flags.
inline void apply_env(PipelineConfig& c) {
  if (const char* e = std::getenv("DEMOFORGE_GEN_ENDPOINT"); e && *e) c.generator.endpoint = e;
  if (const char* t = std::getenv("DEMOFORGE_GEN_TIMEOUT_MS"); t && *t) {
    try {
      c.generator.timeout_ms = std::stoi(t);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "DEMOFORGE_GEN_TIMEOUT_MS is not an integer");
    }
  }
}

// ---- Output staging --------------------------------------------------------

class OutputStage {
 public:
  /// Refuses when <out>/manifest.json records a different config, unless force.
  OutputStage(fs::path out, const json& config, bool force) : out_(std::move(out)), config_(config) {
    const fs::path manifest = out_ / "manifest.json";
    if (fs::exists(manifest)) {
      const json old = read_json(manifest);
      if (!force && (!old.contains("config") || old.at("config") != config_))
        fail(ErrorCode::ConfigMismatch, out_.string() + " was produced with a different config (use --force)");
      fs::remove(manifest);
    }
    fs::remove_all(staging());
    fs::create_directories(staging());
  }

  fs::path staging() const { return out_ / ".partial"; }
  fs::path path(const std::string& artifact) const { return staging() / artifact; }
  void declare(const std::string& artifact) { artifacts_.push_back(artifact); }

  /// Moves every declared artifact into place and writes the manifest.
  void commit(const std::string& command, json extra = json::object()) {
    for (const auto& a : artifacts_)
      if (!fs::exists(path(a))) fail(ErrorCode::IoError, "declared artifact " + a + " missing from staging");
    for (const auto& a : artifacts_) {
      fs::remove_all(out_ / a);
      fs::rename(path(a), out_ / a);
    }
    fs::remove_all(staging());
    json m = json::object();
    m["schema"] = std::string(kManifestSchema);
    m["command"] = command;
    m["config"] = config_;
    m["artifacts"] = artifacts_;
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_json(out_ / "manifest.json", m);
  }

 private:
  fs::path out_;
  json config_;
  std::vector<std::string> artifacts_;
};

namespace detail {

inline EmbeddingSequence load_or_embed(const Episode& ep, const std::string& file, unsigned threads) {
  if (file.empty()) return embed_builtin(ep, threads);
  EmbeddingSequence seq = read_embeddings(file, ep.episode_id());
  if (seq.size() != ep.size())
    fail(ErrorCode::LengthMismatch, file + " has " + std::to_string(seq.size()) + " embeddings for " +
                                        std::to_string(ep.size()) + " frames");
  return seq;
}

inline Endpoint make_endpoint(const PipelineConfig& c, const fs::path& hand_dir) {
  if (c.generator.mock == "echo") return MockEndpoint{MockMode::Echo, {}};
  if (c.generator.mock == "composite") {
    fs::path truth = c.generator.truth_dir.empty() ? fs::absolute(hand_dir).lexically_normal().parent_path() / "truth"
                                                   : fs::path(c.generator.truth_dir);
    if (!fs::exists(truth / "composites"))
      fail(ErrorCode::IoError, "composite mock needs " + (truth / "composites").string());
    return MockEndpoint{MockMode::CompositeTruth, truth};
  }
  if (c.generator.endpoint.empty())
    fail(ErrorCode::ParseError, "no generator endpoint: pass --endpoint, --mock or set DEMOFORGE_GEN_ENDPOINT");
  return HttpEndpoint{c.generator.endpoint};
}

}  // namespace detail

// ---- Commands --------------------------------------------------------------

/// Paired hand/gripper demos -> aligned episodes, stage labels and the
/// composited ground-truth gripper frames used as generator training targets.
inline void cmd_prepare(const fs::path& hand_dir, const fs::path& gripper_dir, const fs::path& out_dir,
                        const PipelineConfig& cfg, bool force = false, unsigned threads = default_thread_count()) {
  OutputStage stage(out_dir, config_json(cfg), force);

  const Episode hand = read_episode(hand_dir, threads);
  const Episode gripper = read_episode(gripper_dir, threads);
  const EmbeddingSequence he = detail::load_or_embed(hand, cfg.alignment.hand_embeddings, threads);
  const EmbeddingSequence ge = detail::load_or_embed(gripper, cfg.alignment.gripper_embeddings, threads);
  const AlignmentMap map =
      cfg.alignment.method == "dtw" ? dtw_align(he, ge) : nn_align(he, ge, {cfg.alignment.cycle_tolerance});
  const auto [ah, ag] = apply_alignment(hand, gripper, map);

  const StageTrack track = classify_track(
      stage_inputs(ag, ag.role() == Role::Gripper ? mask_role::gripper : mask_role::hand), cfg.stage);

  std::vector<Frame> comp(ah.size());
  parallel_for(ah.size(), threads, [&](std::size_t k) {
    const auto [hi, gi] = map.pairs[k];
    CompositeFrame c;
    try {
      c = composite(ah.frame(k), ag.frame(k), track.labels[k], hi, gi);
    } catch (const Error& e) {
      throw Error(e.code(), "aligned frame " + std::to_string(k) + " (hand " + std::to_string(hi) + ", gripper " +
                                std::to_string(gi) + "): " + e.what());
    }
    comp[k].timestamp_ns = ah.frame(k).timestamp_ns;
    comp[k].image = std::move(c.image);
    comp[k].masks.emplace(std::string(mask_role::composite_fg), std::move(c.fg_mask));
    comp[k].masks.emplace(std::string(mask_role::inpaint), std::move(c.inpaint_mask));
  });
  const Episode composited(hand.episode_id() + "-composited", Role::Composited, hand.task(), hand.obj_name(),
                           std::move(comp), ah.camera_poses());

  write_episode(stage.path("aligned_hand"), ah, threads);
  write_episode(stage.path("aligned_gripper"), ag, threads);
  write_episode(stage.path("composited"), composited, threads);
  write_json(stage.path("alignment.json"),
             alignment_json(map, hand.episode_id(), gripper.episode_id(), cfg.alignment.cycle_tolerance));
  write_stages(stage.path("stages.jsonl"), track);
  for (const char* a : {"aligned_hand", "aligned_gripper", "composited", "alignment.json", "stages.jsonl"}) stage.declare(a);

  // Read-back validation.
  const Episode vh = read_episode(stage.path("aligned_hand"), threads);
  const Episode vc = read_episode(stage.path("composited"), threads);
  read_episode(stage.path("aligned_gripper"), threads);
  parse_alignment(read_json(stage.path("alignment.json")), "alignment.json").validate(hand.size(), gripper.size());
  if (read_stages(stage.path("stages.jsonl")).size() != vh.size() || vc.size() != vh.size())
    fail(ErrorCode::LengthMismatch, "prepare artifacts disagree on the aligned length");

  stage.commit("prepare", {{"aligned_length", map.length()},
                           {"hand_episode", hand.episode_id()},
                           {"gripper_episode", gripper.episode_id()}});
}

/// Hand demo -> TCP actions with gripper state plus generated gripper frames.
inline void cmd_produce(const fs::path& hand_dir, const fs::path& out_dir, const PipelineConfig& cfg, bool force = false,
                        unsigned threads = default_thread_count()) {
  OutputStage stage(out_dir, config_json(cfg), force);

  const Episode hand = read_episode(hand_dir, threads);
  const CameraRig rig = read_rig(hand_dir / "rig.json");
  const StageTrack track = classify_track(stage_inputs(hand, mask_role::hand), cfg.stage);
  const auto actions = extract_actions(hand, track, rig);
  const auto rel = relative_actions(actions, cfg.export_.horizon);

  const Endpoint endpoint = detail::make_endpoint(cfg, hand_dir);
  const std::string obj = cfg.generator.obj_name.empty() ? hand.obj_name() : cfg.generator.obj_name;
  const Episode generated = generate_episode(hand, obj, endpoint, static_cast<unsigned>(std::max(1, cfg.generator.concurrency)),
                                             cfg.generator.timeout_ms);

  write_episode(stage.path("episode"), generated, threads);
  write_rig(stage.path("episode") / "rig.json", rig);
  write_actions(stage.path("actions.jsonl"), actions);
  write_relative_actions(stage.path("relative_actions.jsonl"), rel, cfg.export_.horizon);
  write_stages(stage.path("stages.jsonl"), track);
  for (const char* a : {"episode", "actions.jsonl", "relative_actions.jsonl", "stages.jsonl"}) stage.declare(a);

  const Episode ve = read_episode(stage.path("episode"), threads);
  const auto va = read_actions(stage.path("actions.jsonl"));
  if (ve.size() != hand.size() || va.size() != hand.size() || read_jsonl(stage.path("relative_actions.jsonl")).size() != rel.size())
    fail(ErrorCode::LengthMismatch, "produce artifacts disagree on episode length");
  for (std::size_t i = 0; i < va.size(); ++i)
    if (va[i].timestamp_ns != hand.frame(i).timestamp_ns || ve.frame(i).timestamp_ns != hand.frame(i).timestamp_ns)
      fail(ErrorCode::InvalidEpisode, "exported timestamps drift at frame " + std::to_string(i));

  stage.commit("produce", {{"hand_episode", hand.episode_id()},
                           {"frame_count", hand.size()},
                           {"obj_name", obj},
                           {"prompt", build_prompt(obj)}});
}

/// Truth may be an episode directory or a synth truth/ directory.
inline MetricReport cmd_evaluate(const fs::path& pred_dir, const fs::path& truth_dir, const fs::path& report_path,
                                 const PipelineConfig& cfg, unsigned threads = default_thread_count()) {
  const Episode pred = read_episode(pred_dir, threads);
  const Episode truth = fs::exists(truth_dir / "manifest.json")
                            ? read_episode(truth_dir, threads)
                            : read_truth_composites(truth_dir, "truth", pred.timestamps());
  const MetricReport r = evaluate_episode(pred, truth, threads);

  json c = config_json(cfg);
  c["pred_episode"] = pred.episode_id();
  c["truth_episode"] = truth.episode_id();
  const fs::path tmp = report_path.string() + ".partial";
  write_json(tmp, report_json(r, c));
  fs::rename(tmp, report_path);
  return r;
}

inline void cmd_synth(const SceneScript& script, const fs::path& out_dir, bool force = false,
                      unsigned threads = default_thread_count()) {
  OutputStage stage(out_dir, script_json(script), force);
  const SynthPair pair = render_pair(script, threads);
  write_synth(stage.staging(), script, pair, threads);
  for (const char* a : {"hand", "gripper", "truth", "script.json"}) stage.declare(a);
  read_episode(stage.path("hand"), threads);
  read_episode(stage.path("gripper"), threads);
  read_rig(stage.path("hand") / "rig.json");
  stage.commit("synth", {{"hand_episode", pair.hand.episode_id()}, {"gripper_episode", pair.gripper.episode_id()}});
}

inline void cmd_synth(const fs::path& script_path, const fs::path& out_dir, bool force = false,
                      unsigned threads = default_thread_count()) {
  cmd_synth(parse_script(read_json(script_path)), out_dir, force, threads);
}

}  // namespace demoforge
