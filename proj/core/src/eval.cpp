#include "mts/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "mts/deep_servo.hpp"
#include "mts/file_io.hpp"
#include "mts/json_support.hpp"
#include "mts/parallel.hpp"
#include "mts/render.hpp"
#include "mts/rng.hpp"

namespace mts {

namespace {

constexpr std::uint64_t kEvalSceneStream = 0x4556'414C;  // "EVAL"
constexpr std::uint64_t kOffsetStream = 0x4F46'4653;     // "OFFS"

const std::vector<std::string> kNotes = {
    "gradient regressor: compact two-convolution CNN trained from scratch on label-color renders, "
    "in place of a pretrained 18-layer residual backbone",
    "simulator: analytic ray-cast scene (sphere fruit, elliptical disc leaf) with a 64x64 pinhole label camera, "
    "in place of a physics-engine scene",
    "camera array: peripheral cameras at 30 degrees polar angle on the 0.07 m sphere",
};

struct TrialSetup {
  std::uint64_t seed = 0;
  Vec3 offset;
};

double pct(double fraction) { return 100.0 * fraction; }

template <class Get>
Aggregate summarize(const std::vector<TrialResult>& trials, Get get) {
  Aggregate a{0.0, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const TrialResult& t : trials) {
    const double v = get(t);
    a.mean += v;
    a.max = std::max(a.max, v);
    a.min = std::min(a.min, v);
  }
  a.mean /= static_cast<double>(trials.size());
  return a;
}

TrialResult score(int index, const TrialSetup& setup, const TrajectoryRecord& baseline, const TrajectoryRecord& deep,
                  const SceneInstance& scene, const ControllerSettings& settings, double share) {
  TrialResult r;
  r.index = index;
  r.seed = setup.seed;
  r.start_offset = setup.offset;
  r.steps_deep = deep.guidance_steps();
  r.steps_baseline = baseline.guidance_steps();
  r.delta_steps = r.steps_deep - r.steps_baseline;
  r.endpoint_delta_mm = endpoint_delta_mm(deep.final_step().pose.position, baseline.final_step().pose.position);
  r.start_pct = pct(baseline.steps.front().p);
  r.final_deep_pct = pct(deep.final_step().p);
  r.final_baseline_pct = pct(baseline.final_step().p);
  const SceneInstance clear = scene.without_leaf();
  r.clear_deep_pct = pct(fruit_fraction(render_labels(clear, deep.final_step().pose, settings.intrinsics)));
  r.clear_baseline_pct = pct(fruit_fraction(render_labels(clear, baseline.final_step().pose, settings.intrinsics)));
  r.term_deep = deep.termination;
  r.term_baseline = baseline.termination;
  r.occlusion_free_deep =
      r.term_deep != Termination::MaxSteps && r.clear_deep_pct > 0.0 && r.final_deep_pct >= share * r.clear_deep_pct;
  r.occlusion_free_baseline = r.term_baseline != Termination::MaxSteps && r.clear_baseline_pct > 0.0 &&
                              r.final_baseline_pct >= share * r.clear_baseline_pct;
  return r;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

void EvalConfig::validate() const {
  if (series != 1 && series != 2) throw std::invalid_argument("eval: series must be 1 or 2");
  if (n_trials < 0) throw std::invalid_argument("eval: trials must be >= 0");
  if (max_resamples < 1) throw std::invalid_argument("eval: max_resamples must be >= 1");
  if (!(occlusion_free_share > 0.0 && occlusion_free_share <= 1.0))
    throw std::invalid_argument("eval: occlusion_free_share must be in (0, 1]");
}

void to_json(nlohmann::json& j, const EvalConfig& c) {
  j = {{"series", c.series},
       {"n_trials", c.n_trials},
       {"master_seed", c.master_seed},
       {"max_resamples", c.max_resamples},
       {"occlusion_free_share", c.occlusion_free_share}};
}

void to_json(nlohmann::json& j, const TrialResult& t) {
  j = {{"index", t.index},
       {"seed", t.seed},
       {"start_offset", t.start_offset},
       {"steps_deep", t.steps_deep},
       {"steps_baseline", t.steps_baseline},
       {"delta_steps", t.delta_steps},
       {"endpoint_delta_mm", t.endpoint_delta_mm},
       {"start_pct", t.start_pct},
       {"final_deep_pct", t.final_deep_pct},
       {"final_baseline_pct", t.final_baseline_pct},
       {"delta_final_pct", t.delta_final_pct()},
       {"clear_deep_pct", t.clear_deep_pct},
       {"clear_baseline_pct", t.clear_baseline_pct},
       {"term_deep", to_string(t.term_deep)},
       {"term_baseline", to_string(t.term_baseline)},
       {"occlusion_free_deep", t.occlusion_free_deep},
       {"occlusion_free_baseline", t.occlusion_free_baseline}};
}

void from_json(const nlohmann::json& j, TrialResult& t) {
  t.index = j.at("index").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.start_offset = j.at("start_offset").get<Vec3>();
  t.steps_deep = j.at("steps_deep").get<int>();
  t.steps_baseline = j.at("steps_baseline").get<int>();
  t.delta_steps = j.at("delta_steps").get<int>();
  t.endpoint_delta_mm = j.at("endpoint_delta_mm").get<double>();
  t.start_pct = j.at("start_pct").get<double>();
  t.final_deep_pct = j.at("final_deep_pct").get<double>();
  t.final_baseline_pct = j.at("final_baseline_pct").get<double>();
  t.clear_deep_pct = j.at("clear_deep_pct").get<double>();
  t.clear_baseline_pct = j.at("clear_baseline_pct").get<double>();
  t.term_deep = termination_from_string(j.at("term_deep").get<std::string>());
  t.term_baseline = termination_from_string(j.at("term_baseline").get<std::string>());
  t.occlusion_free_deep = j.at("occlusion_free_deep").get<bool>();
  t.occlusion_free_baseline = j.at("occlusion_free_baseline").get<bool>();
}

Aggregates aggregate(const std::vector<TrialResult>& trials) {
  Aggregates a;
  if (trials.empty()) return a;
  a["steps_deep"] = summarize(trials, [](const TrialResult& t) { return t.steps_deep; });
  a["steps_baseline"] = summarize(trials, [](const TrialResult& t) { return t.steps_baseline; });
  a["delta_steps"] = summarize(trials, [](const TrialResult& t) { return t.delta_steps; });
  a["endpoint_delta_mm"] = summarize(trials, [](const TrialResult& t) { return t.endpoint_delta_mm; });
  a["start_pct"] = summarize(trials, [](const TrialResult& t) { return t.start_pct; });
  a["final_deep_pct"] = summarize(trials, [](const TrialResult& t) { return t.final_deep_pct; });
  a["final_baseline_pct"] = summarize(trials, [](const TrialResult& t) { return t.final_baseline_pct; });
  a["delta_final_pct"] = summarize(trials, [](const TrialResult& t) { return t.delta_final_pct(); });
  a["abs_delta_final_pct"] = summarize(trials, [](const TrialResult& t) { return std::abs(t.delta_final_pct()); });
  return a;
}

std::size_t SeriesReport::occlusion_free_deep() const {
  return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [](const TrialResult& t) { return t.occlusion_free_deep; }));
}

std::size_t SeriesReport::occlusion_free_baseline() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const TrialResult& t) { return t.occlusion_free_baseline; }));
}

std::optional<double> SeriesReport::fruit_size_factor_deep() const {
  if (trials.empty()) return std::nullopt;
  return aggregates.at("final_deep_pct").mean / aggregates.at("start_pct").mean;
}

std::optional<double> SeriesReport::fruit_size_factor_baseline() const {
  if (trials.empty()) return std::nullopt;
  return aggregates.at("final_baseline_pct").mean / aggregates.at("start_pct").mean;
}

double endpoint_delta_mm(const Vec3& a, const Vec3& b) { return 1000.0 * distance(a, b); }

SeriesReport run_series(const EvalConfig& config, const nn::Model& model, const ScenarioConfig& scenario,
                        const ControllerSettings& settings, std::vector<TrialTrajectories>* trajectories) {
  config.validate();
  scenario.validate();
  if (model.output_shape() != nn::Shape{3}) throw std::invalid_argument("eval: model must output 3 values");

  SeriesReport report;
  report.series = config.series;
  report.deviation_notes = kNotes;
  report.config = {{"eval", config}, {"scenario", scenario}, {"controller", settings}};

  // Scene selection is sequential so the draw sequence never depends on threads.
  const std::uint64_t stream = kEvalSceneStream + static_cast<std::uint64_t>(config.series);
  std::vector<TrialSetup> setups(static_cast<std::size_t>(config.n_trials));
  std::uint64_t draw = 0;
  for (int t = 0; t < config.n_trials; ++t) {
    TrialSetup& s = setups[static_cast<std::size_t>(t)];
    if (config.series == 2) {
      Rng rng(derive_seed(config.master_seed, kOffsetStream, static_cast<std::uint64_t>(t)));
      const Interval r = scenario.start_offset_range;
      s.offset.x = rng.uniform(r.lo, r.hi);
      s.offset.y = rng.uniform(r.lo, r.hi);
      s.offset.z = rng.uniform(r.lo, r.hi);
    }
    const Pose start = start_pose(scenario, s.offset);
    bool found = false;
    for (int attempt = 0; attempt < config.max_resamples; ++attempt) {
      s.seed = derive_seed(config.master_seed, stream, draw++);
      if (is_eligible(sample_scene(scenario, s.seed), start, settings.intrinsics)) {
        found = true;
        break;
      }
      ++report.rejected_draws;
    }
    if (!found)
      throw std::runtime_error("eval: trial " + std::to_string(t) + " found no eligible scene in " +
                               std::to_string(config.max_resamples) + " draws");
  }

  report.trials.resize(setups.size());
  std::vector<TrialTrajectories> runs(setups.size());
  parallel_for(setups.size(), config.threads, [&](std::size_t i) {
    const SceneInstance scene = sample_scene(scenario, setups[i].seed);
    const Pose start = start_pose(scenario, setups[i].offset);
    runs[i].baseline = run_baseline(scene, start, settings);
    runs[i].deep = run_deep(scene, model, start, settings);
    report.trials[i] = score(static_cast<int>(i), setups[i], runs[i].baseline, runs[i].deep, scene, settings,
                             config.occlusion_free_share);
  });
  report.aggregates = aggregate(report.trials);
  if (trajectories) *trajectories = std::move(runs);
  return report;
}

nlohmann::json report_to_json(const SeriesReport& report) {
  nlohmann::json aggregates = nlohmann::json::object();
  for (const auto& [name, a] : report.aggregates) aggregates[name] = {{"mean", a.mean}, {"max", a.max}, {"min", a.min}};
  nlohmann::json doc = {{"series", report.series},
                        {"n_trials", report.trials.size()},
                        {"rejected_draws", report.rejected_draws},
                        {"trials", report.trials},
                        {"aggregates", aggregates},
                        {"occlusion_free_deep", report.occlusion_free_deep()},
                        {"occlusion_free_baseline", report.occlusion_free_baseline()},
                        {"deviation_notes", report.deviation_notes},
                        {"config", report.config}};
  if (auto f = report.fruit_size_factor_deep()) doc["fruit_size_factor_deep"] = *f;
  if (auto f = report.fruit_size_factor_baseline()) doc["fruit_size_factor_baseline"] = *f;
  return doc;
}

SeriesReport report_from_json(const nlohmann::json& doc) {
  SeriesReport r;
  r.series = doc.at("series").get<int>();
  r.trials = doc.at("trials").get<std::vector<TrialResult>>();
  r.rejected_draws = doc.at("rejected_draws").get<std::size_t>();
  r.deviation_notes = doc.at("deviation_notes").get<std::vector<std::string>>();
  r.config = doc.at("config");
  r.aggregates = aggregate(r.trials);
  return r;
}

std::string report_to_csv(const SeriesReport& report) {
  std::string out =
      "series,seed,steps_deep,delta_steps,endpoint_delta_mm,start_pct,final_deep_pct,delta_final_pct,term_deep,"
      "term_baseline\n";
  for (const TrialResult& t : report.trials) {
    out += std::to_string(report.series) + ',' + std::to_string(t.seed) + ',' + std::to_string(t.steps_deep) + ',' +
           std::to_string(t.delta_steps) + ',' + fmt("%.6f", t.endpoint_delta_mm) + ',' + fmt("%.6f", t.start_pct) +
           ',' + fmt("%.6f", t.final_deep_pct) + ',' + fmt("%.6f", t.delta_final_pct()) + ',' +
           std::string(to_string(t.term_deep)) + ',' + std::string(to_string(t.term_baseline)) + '\n';
  }
  return out;
}

void emit_report(const SeriesReport& report, ReportFormat format, const std::filesystem::path& path) {
  if (format == ReportFormat::Json)
    write_json_file(path, report_to_json(report));
  else
    write_text_file(path, report_to_csv(report));
}

}  // namespace mts
