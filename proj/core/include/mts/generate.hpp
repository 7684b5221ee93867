#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "mts/dataset.hpp"
#include "mts/scene.hpp"
#include "mts/servo.hpp"

namespace mts {

struct GenerateConfig {
  int trajectories = 55;
  std::uint64_t seed = 7;
  int jitter = 0;  // max integer pixel shift applied to every harvested image
  double split_ratio = 0.7;
  SplitMode split_mode = SplitMode::BySample;
  int downsample = kDefaultDownsample;
  int max_scene_draws = 100000;
  int threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const GenerateConfig& c);

struct GeneratedData {
  std::vector<std::uint64_t> scene_seeds;  // one per trajectory
  std::size_t rejected_scenes = 0;         // ineligible draws skipped
  std::vector<TrajectoryRecord> trajectories;
  DatasetSplit split;
};

/// Seed of the i-th scene draw for a master seed.
std::uint64_t scene_seed(std::uint64_t master, std::uint64_t draw);

struct SceneDraw {
  std::uint64_t seed = 0;
  std::size_t rejected = 0;
};

/// First eligible scene among scene_seed(master, 0), scene_seed(master, 1), ...
/// Throws std::runtime_error after max_draws ineligible draws.
SceneDraw draw_eligible_scene(std::uint64_t master, const ScenarioConfig& scenario, const Pose& start,
                              const CameraIntrinsics& intrinsics, int max_draws = 1000);

/// Draws scenes until `trajectories` eligible ones are found, records a
/// baseline trajectory for each, harvests and splits the samples.
/// Throws std::runtime_error when max_scene_draws is exhausted.
GeneratedData generate_dataset(const GenerateConfig& config, const ScenarioConfig& scenario,
                               const ControllerSettings& settings);

/// Full configuration block for the dataset manifest.
nlohmann::json generation_record(const GenerateConfig& config, const ScenarioConfig& scenario,
                                 const ControllerSettings& settings, const GeneratedData& data);

}  // namespace mts
