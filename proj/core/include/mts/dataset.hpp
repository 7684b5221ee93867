#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mts/render.hpp"
#include "mts/servo.hpp"

namespace mts {

/// One (reference image, direction gradient) training pair.
struct Sample {
  ColorImage image;
  std::array<float, 3> target{};  // camera-frame gradient, fraction of image per meter
  std::uint32_t trajectory_id = 0;
  std::uint32_t step_index = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::uint64_t split_seed = 0;

  std::size_t size() const { return train.size() + validation.size(); }
  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// Training images are the reference render block-averaged by this factor
/// (64x64 -> 32x32 with default intrinsics).
inline constexpr int kDefaultDownsample = 2;

/// One sample per recorded step, in trajectory then step order. Trajectory ids
/// are positions in `trajectories`.
std::vector<Sample> harvest_samples(std::span<const TrajectoryRecord> trajectories, int downsample_factor = kDefaultDownsample);

/// Integer translation by (dx, dy) drawn uniformly from [-max_shift, max_shift]^2;
/// vacated pixels become zero. max_shift 0 returns the sample unchanged.
Sample jitter(const Sample& sample, int max_shift, std::uint64_t seed);

/// Fixed translation used by jitter.
ColorImage shift_image(const ColorImage& image, int dx, int dy);

enum class SplitMode { BySample, ByTrajectory };

/// Seeded uniform permutation; the first round(ratio * N) samples go to train.
/// ByTrajectory keeps whole trajectories together and fills train in permuted
/// trajectory order until it holds at least round(ratio * N) samples.
DatasetSplit split(std::vector<Sample> samples, double ratio, std::uint64_t seed, SplitMode mode = SplitMode::BySample);

enum class DatasetErrc { Io, BadMagic, VersionMismatch, Truncated, DimensionMismatch, ManifestMismatch };

class DatasetError : public std::runtime_error {
 public:
  DatasetError(DatasetErrc code, const std::string& what, std::optional<std::size_t> record = std::nullopt)
      : std::runtime_error(what), code_(code), record_(record) {}

  DatasetErrc code() const { return code_; }
  /// Record index for truncation errors inside the record section.
  std::optional<std::size_t> record() const { return record_; }

 private:
  DatasetErrc code_;
  std::optional<std::size_t> record_;
};

inline constexpr std::uint32_t kDatasetVersion = 1;

/// Sidecar manifest path for a dataset file ("<path>.json").
std::filesystem::path manifest_path(const std::filesystem::path& dataset);

/// Binary layout, little-endian: "MTSD", u32 version, u32 N, u16 C, u16 H,
/// u16 W, then N records of u32 trajectory_id, u32 step_index, 3 x f32 target,
/// C*H*W x f32 image (channel-major). Train records precede validation ones.
std::vector<std::uint8_t> encode_dataset(const std::vector<Sample>& samples);
std::vector<Sample> decode_dataset(std::span<const std::uint8_t> bytes);

/// Writes the binary file and its manifest. `config` is embedded verbatim
/// under "config" in the manifest.
void write_dataset(const DatasetSplit& split, const std::filesystem::path& path, const nlohmann::json& config = nlohmann::json::object());

/// Reads the binary file and rebuilds the split from the manifest membership.
DatasetSplit read_dataset(const std::filesystem::path& path);

}  // namespace mts
