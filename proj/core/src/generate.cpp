#include "mts/generate.hpp"

#include <stdexcept>

#include "mts/parallel.hpp"
#include "mts/render.hpp"
#include "mts/rng.hpp"

namespace mts {

namespace {

constexpr std::uint64_t kSceneStream = 0x5343'454E;   // "SCEN"
constexpr std::uint64_t kJitterStream = 0x4A49'5454;  // "JITT"
constexpr std::uint64_t kSplitStream = 0x5350'4C54;   // "SPLT"

std::string_view to_string(SplitMode m) { return m == SplitMode::BySample ? "by_sample" : "by_trajectory"; }

}  // namespace

void GenerateConfig::validate() const {
  if (trajectories < 1) throw std::invalid_argument("gen-data: trajectories must be >= 1");
  if (jitter < 0) throw std::invalid_argument("gen-data: jitter must be >= 0");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw std::invalid_argument("gen-data: split ratio must be in (0, 1)");
  if (downsample < 1) throw std::invalid_argument("gen-data: downsample must be >= 1");
  if (max_scene_draws < trajectories) throw std::invalid_argument("gen-data: max_scene_draws below trajectory count");
}

void to_json(nlohmann::json& j, const GenerateConfig& c) {
  j = {{"trajectories", c.trajectories}, {"seed", c.seed},           {"jitter", c.jitter},
       {"split_ratio", c.split_ratio},   {"split_mode", to_string(c.split_mode)}, {"downsample", c.downsample},
       {"max_scene_draws", c.max_scene_draws}};
}

std::uint64_t scene_seed(std::uint64_t master, std::uint64_t draw) { return derive_seed(master, kSceneStream, draw); }

SceneDraw draw_eligible_scene(std::uint64_t master, const ScenarioConfig& scenario, const Pose& start,
                              const CameraIntrinsics& intrinsics, int max_draws) {
  SceneDraw d;
  for (int draw = 0; draw < max_draws; ++draw) {
    d.seed = scene_seed(master, static_cast<std::uint64_t>(draw));
    if (is_eligible(sample_scene(scenario, d.seed), start, intrinsics)) return d;
    ++d.rejected;
  }
  throw std::runtime_error("no eligible scene in " + std::to_string(max_draws) + " draws");
}

GeneratedData generate_dataset(const GenerateConfig& config, const ScenarioConfig& scenario,
                               const ControllerSettings& settings) {
  config.validate();
  scenario.validate();
  GeneratedData out;
  const Pose start = start_pose(scenario);
  for (std::uint64_t draw = 0; static_cast<int>(out.scene_seeds.size()) < config.trajectories; ++draw) {
    if (draw >= static_cast<std::uint64_t>(config.max_scene_draws))
      throw std::runtime_error("gen-data: only " + std::to_string(out.scene_seeds.size()) + " eligible scenes in " +
                               std::to_string(config.max_scene_draws) + " draws");
    const std::uint64_t seed = scene_seed(config.seed, draw);
    if (is_eligible(sample_scene(scenario, seed), start, settings.intrinsics))
      out.scene_seeds.push_back(seed);
    else
      ++out.rejected_scenes;
  }

  out.trajectories.resize(out.scene_seeds.size());
  parallel_for(out.scene_seeds.size(), config.threads, [&](std::size_t i) {
    out.trajectories[i] = run_baseline(sample_scene(scenario, out.scene_seeds[i]), start, settings);
  });

  std::vector<Sample> samples = harvest_samples(out.trajectories, config.downsample);
  if (config.jitter > 0)
    for (std::size_t i = 0; i < samples.size(); ++i)
      samples[i] = jitter(samples[i], config.jitter, derive_seed(config.seed, kJitterStream, i));
  out.split = split(std::move(samples), config.split_ratio, derive_seed(config.seed, kSplitStream), config.split_mode);
  return out;
}

nlohmann::json generation_record(const GenerateConfig& config, const ScenarioConfig& scenario,
                                 const ControllerSettings& settings, const GeneratedData& data) {
  nlohmann::json trajectories = nlohmann::json::array();
  for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
    const TrajectoryRecord& t = data.trajectories[i];
    trajectories.push_back({{"id", i},
                            {"scene_seed", data.scene_seeds[i]},
                            {"samples", t.steps.size()},
                            {"guidance_steps", t.guidance_steps()},
                            {"termination", to_string(t.termination)}});
  }
  return {{"generator", config},
          {"scenario", scenario},
          {"controller", settings},
          {"eligible_trajectories", data.trajectories.size()},
          {"rejected_scenes", data.rejected_scenes},
          {"trajectories", std::move(trajectories)}};
}

}  // namespace mts
