#include <benchmark/benchmark.h>

#include "mts/baseline.hpp"
#include "mts/generate.hpp"
#include "mts/nn/model.hpp"
#include "mts/rng.hpp"
#include "mts/servo.hpp"

namespace {

using namespace mts;

struct Fixture {
  ScenarioConfig scenario;
  ControllerSettings settings = ControllerSettings::from_scenario(scenario);
  SceneInstance scene = sample_scene(scenario, draw_eligible_scene(1, scenario, start_pose(scenario), settings.intrinsics).seed);
  Pose pose = start_pose(scenario);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

nn::Tensor random_tensor(nn::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  nn::Tensor t(std::move(shape));
  for (float& v : t.values()) v = static_cast<float>(rng.uniform());
  return t;
}

void BM_RenderLabels(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(render_labels(f.scene, f.pose, f.settings.intrinsics));
}
BENCHMARK(BM_RenderLabels);

// Nine renders plus the least-squares fit: one baseline control step.
void BM_ArrayGradient(benchmark::State& state) {
  const Fixture& f = fixture();
  const std::vector<Vec3> offsets = array_offsets(f.settings.array);
  for (auto _ : state) {
    const ArrayMeasurement m =
        evaluate_objective_array(f.scene, f.pose, f.settings.array, f.settings.weights, f.settings.intrinsics);
    benchmark::DoNotOptimize(estimate_gradient(m.f_ref, m.f_peripheral, offsets));
  }
}
BENCHMARK(BM_ArrayGradient);

void BM_EstimateGradient(benchmark::State& state) {
  const std::vector<Vec3> offsets = array_offsets(CameraArraySpec{});
  std::vector<double> f(offsets.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.1 + 0.01 * static_cast<double>(i);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_gradient(0.1, f, offsets));
}
BENCHMARK(BM_EstimateGradient);

void BM_CnnForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  nn::Model m = nn::make_standard_model();
  m.initialize(1);
  const nn::Tensor x = random_tensor({batch, 3, 32, 32}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_CnnForward)->Arg(1)->Arg(64);

void BM_CnnGradients(benchmark::State& state) {
  nn::Model m = nn::make_standard_model();
  m.initialize(1);
  const nn::Tensor x = random_tensor({64, 3, 32, 32}, 2), y = random_tensor({64, 3}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(nn::compute_gradients(m, x, y));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_CnnGradients);

}  // namespace

BENCHMARK_MAIN();
