// demoforge: synth | prepare | produce | evaluate
//
// Settings are layered: defaults, then --config <json>, then the
// DEMOFORGE_GEN_* environment variables, then explicit flags.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "demoforge/demoforge.hpp"

namespace df = demoforge;

namespace {

struct Common {
  std::string config_path;
  std::string out;
  bool force = false;
  unsigned threads = df::default_thread_count();
};

void add_common(CLI::App* cmd, Common& c, const char* out_help) {
  cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, out_help)->required();
  cmd->add_flag("--force", c.force, "overwrite output produced with a different config");
  cmd->add_option("--threads", c.threads, "worker threads for per-frame stages")->check(CLI::PositiveNumber);
}

df::PipelineConfig load_config(const Common& c) {
  df::PipelineConfig cfg = c.config_path.empty() ? df::PipelineConfig{} : df::parse_config(df::read_json(c.config_path));
  df::apply_env(cfg);
  return cfg;
}

template <class T>
void override_if(const CLI::Option* opt, T& dst, const T& src) {
  if (opt->count() > 0) dst = src;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paired hand/gripper demonstration pipeline"};
  app.require_subcommand(1);

  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "render a synthetic paired demonstration");
  std::string script_path;
  std::uint64_t seed = 1;
  int frames = 120;
  synth->add_option("script", script_path, "scene script JSON (omit to generate one from --seed)");
  synth->add_option("--seed", seed, "seed for the generated default scene");
  synth->add_option("--frames", frames, "duration of the generated default scene")->check(CLI::Range(16, 100000));
  add_common(synth, common, "output directory");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "align paired demos and composite ground-truth gripper frames");
  std::string hand_dir, gripper_dir;
  std::string method, hand_emb, gripper_emb;
  int cycle_tol = 2;
  prepare->add_option("hand", hand_dir, "hand episode directory")->required()->check(CLI::ExistingDirectory);
  prepare->add_option("gripper", gripper_dir, "gripper episode directory")->required()->check(CLI::ExistingDirectory);
  auto* o_method = prepare->add_option("--method", method, "alignment method")->check(CLI::IsMember({"nn", "dtw"}));
  auto* o_cycle = prepare->add_option("--cycle-tolerance", cycle_tol, "cycle-consistency tolerance in frames");
  auto* o_hemb = prepare->add_option("--hand-embeddings", hand_emb, "emb.jsonl for the hand episode");
  auto* o_gemb = prepare->add_option("--gripper-embeddings", gripper_emb, "emb.jsonl for the gripper episode");
  add_common(prepare, common, "output directory");

  // produce
  auto* produce = app.add_subcommand("produce", "extract actions and generate gripper frames for a hand demo");
  std::string endpoint, mock, truth_dir, obj_name;
  int timeout_ms = 30000, concurrency = 4, horizon = 1;
  produce->add_option("hand", hand_dir, "hand episode directory")->required()->check(CLI::ExistingDirectory);
  auto* o_endpoint = produce->add_option("--endpoint", endpoint, "generator service, http://host:port");
  auto* o_mock = produce->add_option("--mock", mock, "in-process generator")->check(CLI::IsMember({"echo", "composite"}));
  auto* o_truth = produce->add_option("--truth-dir", truth_dir, "truth directory for --mock composite");
  auto* o_timeout = produce->add_option("--timeout-ms", timeout_ms, "per-request timeout")->check(CLI::PositiveNumber);
  auto* o_conc = produce->add_option("--concurrency", concurrency, "requests in flight")->check(CLI::PositiveNumber);
  auto* o_obj = produce->add_option("--obj-name", obj_name, "object name for the prompt");
  auto* o_horizon = produce->add_option("--horizon", horizon, "relative-action horizon")->check(CLI::PositiveNumber);
  add_common(produce, common, "output directory");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM of predicted frames against ground truth");
  std::string pred_dir;
  evaluate->add_option("pred", pred_dir, "predicted episode directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("truth", truth_dir, "truth episode or synth truth directory")->required()->check(CLI::ExistingDirectory);
  add_common(evaluate, common, "report.json path");

  CLI11_PARSE(app, argc, argv);

  try {
    df::PipelineConfig cfg = load_config(common);
    cfg.paths.out = common.out;

    if (*synth) {
      if (script_path.empty()) {
        df::cmd_synth(df::make_default_script(seed, frames), common.out, common.force, common.threads);
      } else {
        df::cmd_synth(df::fs::path(script_path), common.out, common.force, common.threads);
      }
      std::cout << "wrote " << common.out << "\n";
    } else if (*prepare) {
      cfg.paths.inputs = hand_dir + ";" + gripper_dir;
      override_if(o_method, cfg.alignment.method, method);
      override_if(o_cycle, cfg.alignment.cycle_tolerance, cycle_tol);
      override_if(o_hemb, cfg.alignment.hand_embeddings, hand_emb);
      override_if(o_gemb, cfg.alignment.gripper_embeddings, gripper_emb);
      df::cmd_prepare(hand_dir, gripper_dir, common.out, cfg, common.force, common.threads);
      std::cout << "wrote " << common.out << "\n";
    } else if (*produce) {
      cfg.paths.inputs = hand_dir;
      override_if(o_endpoint, cfg.generator.endpoint, endpoint);
      override_if(o_mock, cfg.generator.mock, mock);
      override_if(o_truth, cfg.generator.truth_dir, truth_dir);
      override_if(o_timeout, cfg.generator.timeout_ms, timeout_ms);
      override_if(o_conc, cfg.generator.concurrency, concurrency);
      override_if(o_obj, cfg.generator.obj_name, obj_name);
      override_if(o_horizon, cfg.export_.horizon, horizon);
      df::cmd_produce(hand_dir, common.out, cfg, common.force, common.threads);
      std::cout << "wrote " << common.out << "\n";
    } else if (*evaluate) {
      cfg.paths.inputs = pred_dir + ";" + truth_dir;
      const auto r = df::cmd_evaluate(pred_dir, truth_dir, common.out, cfg, common.threads);
      std::cout << "mean_psnr_db " << r.mean_psnr_db << " (infinite frames: " << r.infinite_psnr_frames << ")\n"
                << "mean_ssim " << r.mean_ssim << "\n";
    }
  } catch (const df::Error& e) {
    std::cerr << "demoforge: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "demoforge: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
