#include "mts_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mts/deep_servo.hpp"
#include "mts/eval.hpp"
#include "mts/file_io.hpp"
#include "mts/generate.hpp"
#include "mts/json_support.hpp"
#include "mts/nn/train.hpp"
#include "mts/render.hpp"
#include "mts/trajectory_io.hpp"

namespace mts::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::string scenario_path;

  ScenarioConfig scenario() const {
    if (scenario_path.empty()) return {};
    return read_json_file(scenario_path).get<ScenarioConfig>();
  }
};

void add_scenario_option(CLI::App* cmd, Common& c) {
  cmd->add_option("--scenario", c.scenario_path, "Scenario JSON replacing the built-in defaults")->check(CLI::ExistingFile);
}

nlohmann::json tool_block(const std::string& command) { return {{"tool", "mts"}, {"version", kVersion}, {"command", command}}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// gen-data ------------------------------------------------------------------

struct GenArgs {
  Common common;
  GenerateConfig config;
  std::string out;
  std::string split_mode = "sample";
};

int run_gen(const GenArgs& a, std::ostream& out) {
  GenerateConfig config = a.config;
  config.split_mode = a.split_mode == "trajectory" ? SplitMode::ByTrajectory : SplitMode::BySample;
  const ScenarioConfig scenario = a.common.scenario();
  const ControllerSettings settings = ControllerSettings::from_scenario(scenario);
  const GeneratedData data = generate_dataset(config, scenario, settings);
  nlohmann::json block = tool_block("gen-data");
  block.update(generation_record(config, scenario, settings, data));
  write_dataset(data.split, a.out, block);
  out << "wrote " << a.out << ": " << data.trajectories.size() << " trajectories, " << data.split.size()
      << " samples (" << data.split.train.size() << " train / " << data.split.validation.size() << " validation), "
      << data.rejected_scenes << " ineligible scenes skipped\n";
  return kOk;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string curve;
  nn::TrainConfig config;
  bool quiet = false;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  const DatasetSplit split = read_dataset(a.data);
  const nlohmann::json manifest = read_json_file(manifest_path(a.data));
  nn::Model model = nn::make_standard_model();
  const nn::TrainResult result = nn::train(model, split, a.config, [&](const nn::EpochLoss& e) {
    if (!a.quiet)
      out << "epoch " << e.epoch << "  lr " << fmt("%.3g", e.learning_rate) << "  train_mse "
          << fmt("%.6f", e.train_mse) << "  val_mse " << fmt("%.6f", e.val_mse) << '\n' << std::flush;
  });

  nlohmann::json curve = nlohmann::json::array();
  for (const auto& e : result.curve)
    curve.push_back({{"epoch", e.epoch}, {"learning_rate", e.learning_rate}, {"train_mse", e.train_mse},
                     {"val_mse", std::isfinite(e.val_mse) ? nlohmann::json(e.val_mse) : nlohmann::json()}});
  nlohmann::json doc = nn::model_to_json(model);
  nlohmann::json block = tool_block("train");
  block["train"] = to_json_value(a.config);
  block["data"] = {{"path", a.data},
                   {"train_count", split.train.size()},
                   {"validation_count", split.validation.size()},
                   {"split_seed", split.split_seed},
                   {"config", manifest.value("config", nlohmann::json::object())}};
  doc["config"] = std::move(block);
  doc["loss_curve"] = std::move(curve);
  doc["best_epoch"] = result.best_epoch();
  write_json_file(a.out, doc);

  const std::string curve_path = a.curve.empty() ? a.out + ".loss.csv" : a.curve;
  write_text_file(curve_path, nn::loss_curve_csv(result));
  out << "wrote " << a.out << " and " << curve_path << '\n';
  return kOk;
}

// servo ---------------------------------------------------------------------

struct ServoArgs {
  Common common;
  std::string mode;
  std::uint64_t seed = 1;
  std::string model;
  std::string out;
  std::vector<double> offset{0.0, 0.0, 0.0};
};

int run_servo_cmd(const ServoArgs& a, std::ostream& out) {
  const ScenarioConfig scenario = a.common.scenario();
  const ControllerSettings settings = ControllerSettings::from_scenario(scenario);
  const Vec3 offset{a.offset[0], a.offset[1], a.offset[2]};
  const Pose start = start_pose(scenario, offset);
  const SceneDraw draw = draw_eligible_scene(a.seed, scenario, start, settings.intrinsics);
  const SceneInstance scene = sample_scene(scenario, draw.seed);

  TrajectoryRecord record;
  if (a.mode == "deep")
    record = run_deep(scene, nn::load_model(a.model), start, settings);
  else
    record = run_baseline(scene, start, settings);

  nlohmann::json doc = trajectory_to_json(record);
  nlohmann::json block = tool_block("servo");
  block["mode"] = a.mode;
  block["seed"] = a.seed;
  block["scene_seed"] = draw.seed;
  block["rejected_scenes"] = draw.rejected;
  block["start_offset"] = offset;
  block["model"] = a.model.empty() ? nlohmann::json() : nlohmann::json(a.model);
  block["scenario"] = scenario;
  block["controller"] = settings;
  doc["config"] = std::move(block);
  write_json_file(a.out, doc);
  out << "wrote " << a.out << ": " << record.controller << ", " << record.guidance_steps() << " steps, "
      << to_string(record.termination) << ", final fruit fraction " << fmt("%.2f", 100.0 * record.final_step().p)
      << "%\n";
  return kOk;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  Common common;
  EvalConfig config;
  std::string model;
  std::string out;
  std::string trajectory_dir;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  const ScenarioConfig scenario = a.common.scenario();
  const ControllerSettings settings = ControllerSettings::from_scenario(scenario);
  const nn::Model model = nn::load_model(a.model);
  std::vector<TrialTrajectories> runs;
  SeriesReport report = run_series(a.config, model, scenario, settings, a.trajectory_dir.empty() ? nullptr : &runs);
  nlohmann::json block = tool_block("eval");
  block["model"] = a.model;
  block.update(report.config);
  report.config = std::move(block);

  const bool csv = fs::path(a.out).extension() == ".csv";
  if (csv) {
    emit_report(report, ReportFormat::Csv, a.out);
    emit_report(report, ReportFormat::Json, a.out + ".json");
  } else {
    emit_report(report, ReportFormat::Json, a.out);
  }
  if (!a.trajectory_dir.empty()) {
    fs::create_directories(a.trajectory_dir);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const std::string stem = "series" + std::to_string(a.config.series) + "_trial" + std::to_string(i);
      for (const TrajectoryRecord* r : {&runs[i].baseline, &runs[i].deep}) {
        nlohmann::json doc = trajectory_to_json(*r);
        doc["config"] = report.config;
        doc["config"]["trial"] = i;
        write_json_file(fs::path(a.trajectory_dir) / (stem + "_" + r->controller + ".json"), doc);
      }
    }
  }

  out << "series " << report.series << ": " << report.trials.size() << " trials, " << report.rejected_draws
      << " ineligible draws, deep occlusion-free " << report.occlusion_free_deep() << "/" << report.trials.size();
  if (!report.trials.empty())
    out << ", mean endpoint delta " << fmt("%.2f", report.aggregates.at("endpoint_delta_mm").mean)
        << " mm, mean |final fraction delta| " << fmt("%.2f", report.aggregates.at("abs_delta_final_pct").mean)
        << " pp";
  out << "\nwrote " << a.out << '\n';
  return kOk;
}

// render --------------------------------------------------------------------

struct RenderArgs {
  Common common;
  std::uint64_t seed = 1;
  std::string out;
  std::vector<double> offset{0.0, 0.0, 0.0};
  bool no_leaf = false;
};

int run_render(const RenderArgs& a, std::ostream& out) {
  const ScenarioConfig scenario = a.common.scenario();
  const CameraIntrinsics intrinsics;
  const Vec3 offset{a.offset[0], a.offset[1], a.offset[2]};
  const Pose pose = start_pose(scenario, offset);
  const SceneDraw draw = draw_eligible_scene(a.seed, scenario, pose, intrinsics);
  SceneInstance scene = sample_scene(scenario, draw.seed);
  if (a.no_leaf) scene = scene.without_leaf();
  const LabelImage labels = render_labels(scene, pose, intrinsics);

  nlohmann::json block = tool_block("render");
  block["seed"] = a.seed;
  block["scene_seed"] = draw.seed;
  block["start_offset"] = offset;
  block["no_leaf"] = a.no_leaf;
  block["fruit_fraction"] = fruit_fraction(labels);
  block["scenario"] = scenario;
  write_ppm(to_color(labels), a.out, "mts " + block.dump());
  out << "wrote " << a.out << ": fruit fraction " << fmt("%.2f", 100.0 * fruit_fraction(labels)) << "%\n";
  return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-camera and learned-gradient visual servoing around occluding leaves", "mts"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Record baseline trajectories and write a training dataset");
  gen_cmd->add_option("--trajectories", gen.config.trajectories, "Eligible trajectories to record")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.config.seed, "Master seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dataset path (manifest goes to PATH.json)")->required();
  gen_cmd->add_option("--jitter", gen.config.jitter, "Max pixel shift applied to each image")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--split", gen.config.split_ratio, "Training share")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--split-mode", gen.split_mode, "sample or trajectory")
      ->capture_default_str()
      ->check(CLI::IsMember({"sample", "trajectory"}));
  gen_cmd->add_option("--threads", gen.config.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  add_scenario_option(gen_cmd, gen.common);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the gradient regressor on a dataset");
  train_cmd->add_option("--data", train.data, "Dataset path")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Model JSON path")->required();
  train_cmd->add_option("--curve", train.curve, "Loss curve CSV (default MODEL.loss.csv)");
  train_cmd->add_option("--epochs", train.config.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train.config.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train.config.learning_rate)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--shuffle-seed", train.config.shuffle_seed)->capture_default_str();
  train_cmd->add_option("--init-seed", train.config.init_seed)->capture_default_str();
  train_cmd->add_flag("--quiet", train.quiet, "No per-epoch progress");

  ServoArgs servo;
  auto* servo_cmd = app.add_subcommand("servo", "Run one servoing trajectory");
  servo_cmd->add_option("--mode", servo.mode, "baseline or deep")->required()->check(CLI::IsMember({"baseline", "deep"}));
  servo_cmd->add_option("--seed", servo.seed, "Scene seed; the first eligible draw is used")->capture_default_str();
  servo_cmd->add_option("--model", servo.model, "Model JSON (deep mode)")->check(CLI::ExistingFile);
  servo_cmd->add_option("--out", servo.out, "Trajectory JSON path")->required();
  servo_cmd->add_option("--offset", servo.offset, "Start offset x y z in m")->expected(3)->capture_default_str();
  add_scenario_option(servo_cmd, servo.common);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Paired baseline/deep evaluation series");
  eval_cmd->add_option("--series", eval.config.series)->capture_default_str()->check(CLI::IsMember({1, 2}));
  eval_cmd->add_option("--trials", eval.config.n_trials)->capture_default_str()->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--model", eval.model, "Model JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--seed", eval.config.master_seed, "Master seed")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Report path (.json, or .csv plus PATH.json)")->required();
  eval_cmd->add_option("--trajectories", eval.trajectory_dir, "Directory for per-trial trajectory JSON");
  eval_cmd->add_option("--threads", eval.config.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  add_scenario_option(eval_cmd, eval.common);

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Render the reference view of a scene as PPM");
  render_cmd->add_option("--seed", render.seed, "Scene seed; the first eligible draw is used")->capture_default_str();
  render_cmd->add_option("--out", render.out, "PPM path")->required();
  render_cmd->add_option("--offset", render.offset, "Camera offset x y z in m")->expected(3)->capture_default_str();
  render_cmd->add_flag("--no-leaf", render.no_leaf, "Remove the occluding leaf");
  add_scenario_option(render_cmd, render.common);

  std::vector<std::string> argv(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(argv);
    if (servo_cmd->parsed() && servo.mode == "deep" && servo.model.empty())
      throw CLI::RequiredError("--model (with --mode deep)");
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.back()->help());
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    const auto parsed = app.get_subcommands();
    err << "mts: " << e.what() << "\n\n" << (parsed.empty() ? app.help() : parsed.back()->help());
    return kUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen, out);
    if (train_cmd->parsed()) return run_train(train, out);
    if (servo_cmd->parsed()) return run_servo_cmd(servo, out);
    if (eval_cmd->parsed()) return run_eval(eval, out);
    if (render_cmd->parsed()) return run_render(render, out);
  } catch (const std::exception& e) {
    err << "mts: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace mts::cli
