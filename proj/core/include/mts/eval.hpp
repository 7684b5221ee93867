#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mts/nn/model.hpp"
#include "mts/scene.hpp"
#include "mts/servo.hpp"

namespace mts {

struct EvalConfig {
  int series = 1;  // 1: nominal start, 2: randomly offset start
  int n_trials = 12;
  std::uint64_t master_seed = 1;
  int max_resamples = 1000;  // ineligible draws allowed per trial
  /// A final view counts as occlusion-free when it shows at least this share
  /// of the fruit pixels visible with the leaf removed.
  double occlusion_free_share = 0.95;
  int threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const EvalConfig& c);

struct TrialResult {
  int index = 0;
  std::uint64_t seed = 0;  // scene seed
  Vec3 start_offset;
  int steps_deep = 0;
  int steps_baseline = 0;
  int delta_steps = 0;             // deep - baseline
  double endpoint_delta_mm = 0.0;  // distance between final positions
  double start_pct = 0.0;
  double final_deep_pct = 0.0;
  double final_baseline_pct = 0.0;
  double clear_deep_pct = 0.0;  // deep final view with the leaf removed
  double clear_baseline_pct = 0.0;
  Termination term_deep = Termination::MaxSteps;
  Termination term_baseline = Termination::MaxSteps;
  bool occlusion_free_deep = false;
  bool occlusion_free_baseline = false;

  double delta_final_pct() const { return final_deep_pct - final_baseline_pct; }
};

void to_json(nlohmann::json& j, const TrialResult& t);
void from_json(const nlohmann::json& j, TrialResult& t);

struct Aggregate {
  double mean = 0.0, max = 0.0, min = 0.0;
};

using Aggregates = std::map<std::string, Aggregate>;

/// Mean/max/min of every per-trial metric; empty for no trials.
Aggregates aggregate(const std::vector<TrialResult>& trials);

struct SeriesReport {
  int series = 1;
  std::vector<TrialResult> trials;
  Aggregates aggregates;
  std::size_t rejected_draws = 0;
  std::vector<std::string> deviation_notes;
  nlohmann::json config = nlohmann::json::object();

  std::size_t occlusion_free_deep() const;
  std::size_t occlusion_free_baseline() const;
  /// mean final deep fraction / mean start fraction; nullopt for no trials.
  std::optional<double> fruit_size_factor_deep() const;
  std::optional<double> fruit_size_factor_baseline() const;
};

/// Trajectories of one trial, in report order.
struct TrialTrajectories {
  TrajectoryRecord baseline;
  TrajectoryRecord deep;
};

double endpoint_delta_mm(const Vec3& a, const Vec3& b);

/// Both controllers from the same eligible scene and start pose per trial.
/// Throws std::runtime_error if a trial finds no eligible scene.
SeriesReport run_series(const EvalConfig& config, const nn::Model& model, const ScenarioConfig& scenario,
                        const ControllerSettings& settings, std::vector<TrialTrajectories>* trajectories = nullptr);

nlohmann::json report_to_json(const SeriesReport& report);
/// Trials, notes and config from a report document; aggregates recomputed.
SeriesReport report_from_json(const nlohmann::json& doc);
std::string report_to_csv(const SeriesReport& report);

enum class ReportFormat { Json, Csv };

void emit_report(const SeriesReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace mts
