#include "mts/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <utility>

#include "mts/file_io.hpp"
#include "mts/rng.hpp"

namespace mts {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'S', 'D'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 2 + 2 + 2;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

using SampleKey = std::pair<std::uint32_t, std::uint32_t>;

SampleKey key_of(const Sample& s) { return {s.trajectory_id, s.step_index}; }

nlohmann::json membership(const std::vector<Sample>& samples) {
  nlohmann::json out = nlohmann::json::array();
  for (const Sample& s : samples) out.push_back({s.trajectory_id, s.step_index});
  return out;
}

}  // namespace

std::vector<Sample> harvest_samples(std::span<const TrajectoryRecord> trajectories, int downsample_factor) {
  std::vector<Sample> out;
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    const auto& steps = trajectories[t].steps;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const TrajectoryStep& step = steps[k];
      if (!step.gradient.g.finite()) continue;
      Sample s;
      s.image = downsample(to_color(step.labels), downsample_factor);
      s.target = {static_cast<float>(step.gradient.g.x), static_cast<float>(step.gradient.g.y),
                  static_cast<float>(step.gradient.g.z)};
      s.trajectory_id = static_cast<std::uint32_t>(t);
      s.step_index = static_cast<std::uint32_t>(k);
      out.push_back(std::move(s));
    }
  }
  return out;
}

ColorImage shift_image(const ColorImage& image, int dx, int dy) {
  ColorImage out(image.width, image.height);
  for (int c = 0; c < 3; ++c) {
    for (int v = 0; v < image.height; ++v) {
      const int sv = v - dy;
      if (sv < 0 || sv >= image.height) continue;
      for (int u = 0; u < image.width; ++u) {
        const int su = u - dx;
        if (su < 0 || su >= image.width) continue;
        out.at(c, u, v) = image.at(c, su, sv);
      }
    }
  }
  return out;
}

Sample jitter(const Sample& sample, int max_shift, std::uint64_t seed) {
  if (max_shift < 0) throw std::invalid_argument("jitter: max_shift must be >= 0");
  if (max_shift == 0) return sample;
  Rng rng(seed);
  const int dx = static_cast<int>(rng.uniform_int(-max_shift, max_shift));
  const int dy = static_cast<int>(rng.uniform_int(-max_shift, max_shift));
  Sample out = sample;
  out.image = shift_image(sample.image, dx, dy);
  return out;
}

DatasetSplit split(std::vector<Sample> samples, double ratio, std::uint64_t seed, SplitMode mode) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must lie in (0, 1)");
  const std::size_t n = samples.size();
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  Rng rng(seed);

  DatasetSplit out;
  out.split_seed = seed;

  if (mode == SplitMode::BySample) {
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(samples[i - 1], samples[j]);
    }
    for (std::size_t i = 0; i < n; ++i) (i < n_train ? out.train : out.validation).push_back(std::move(samples[i]));
    return out;
  }

  std::vector<std::uint32_t> ids;
  for (const Sample& s : samples)
    if (std::find(ids.begin(), ids.end(), s.trajectory_id) == ids.end()) ids.push_back(s.trajectory_id);
  for (std::size_t i = ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(ids[i - 1], ids[j]);
  }
  std::map<std::uint32_t, std::vector<Sample>> by_id;
  for (Sample& s : samples) by_id[s.trajectory_id].push_back(std::move(s));
  for (std::uint32_t id : ids) {
    auto& dst = out.train.size() < n_train ? out.train : out.validation;
    for (Sample& s : by_id[id]) dst.push_back(std::move(s));
  }
  return out;
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
  std::filesystem::path p = dataset;
  p += ".json";
  return p;
}

std::vector<std::uint8_t> encode_dataset(const std::vector<Sample>& samples) {
  const int w = samples.empty() ? 0 : samples.front().image.width;
  const int h = samples.empty() ? 0 : samples.front().image.height;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ColorImage& img = samples[i].image;
    if (img.width != w || img.height != h || img.values.size() != 3 * static_cast<std::size_t>(w) * h)
      throw DatasetError(DatasetErrc::DimensionMismatch,
                         "dataset: sample " + std::to_string(i) + " is " + std::to_string(img.width) + "x" +
                             std::to_string(img.height) + ", expected " + std::to_string(w) + "x" + std::to_string(h),
                         i);
  }
  if (w > 0xFFFF || h > 0xFFFF || samples.size() > 0xFFFFFFFFu)
    throw DatasetError(DatasetErrc::DimensionMismatch, "dataset: dimensions exceed the format's field widths");

  std::vector<std::uint8_t> out;
  const std::size_t per_record = 4 + 4 + 12 + 4 * 3 * static_cast<std::size_t>(w) * h;
  out.reserve(kHeaderBytes + samples.size() * per_record);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kDatasetVersion);
  put_u32(out, static_cast<std::uint32_t>(samples.size()));
  put_u16(out, 3);
  put_u16(out, static_cast<std::uint16_t>(h));
  put_u16(out, static_cast<std::uint16_t>(w));
  for (const Sample& s : samples) {
    put_u32(out, s.trajectory_id);
    put_u32(out, s.step_index);
    for (float t : s.target) put_f32(out, t);
    for (float v : s.image.values) put_f32(out, v);
  }
  return out;
}

std::vector<Sample> decode_dataset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DatasetError(DatasetErrc::BadMagic, "dataset: bad magic (expected \"MTSD\")");
  if (bytes.size() < kHeaderBytes) throw DatasetError(DatasetErrc::Truncated, "dataset: truncated header");
  const std::uint8_t* p = bytes.data();
  const std::uint32_t version = get_u32(p + 4);
  if (version != kDatasetVersion)
    throw DatasetError(DatasetErrc::VersionMismatch, "dataset: version " + std::to_string(version) + ", expected " +
                                                         std::to_string(kDatasetVersion));
  const std::uint32_t n = get_u32(p + 8);
  const std::uint16_t c = get_u16(p + 12);
  const std::uint16_t h = get_u16(p + 14);
  const std::uint16_t w = get_u16(p + 16);
  if (c != 3 || (n > 0 && (h == 0 || w == 0)))
    throw DatasetError(DatasetErrc::DimensionMismatch, "dataset: unsupported image shape " + std::to_string(c) + "x" +
                                                           std::to_string(h) + "x" + std::to_string(w));

  const std::size_t pixels = static_cast<std::size_t>(c) * h * w;
  const std::size_t per_record = 4 + 4 + 12 + 4 * pixels;
  std::vector<Sample> out;
  out.reserve(n);
  std::size_t off = kHeaderBytes;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (bytes.size() - off < per_record)
      throw DatasetError(DatasetErrc::Truncated, "dataset: truncated in record " + std::to_string(i) + " of " + std::to_string(n), i);
    Sample s;
    s.trajectory_id = get_u32(p + off);
    s.step_index = get_u32(p + off + 4);
    for (int k = 0; k < 3; ++k) s.target[k] = get_f32(p + off + 8 + 4 * k);
    s.image = ColorImage(w, h);
    const std::uint8_t* img = p + off + 20;
    for (std::size_t k = 0; k < pixels; ++k) s.image.values[k] = get_f32(img + 4 * k);
    off += per_record;
    out.push_back(std::move(s));
  }
  if (off != bytes.size())
    throw DatasetError(DatasetErrc::DimensionMismatch, "dataset: " + std::to_string(bytes.size() - off) +
                                                           " trailing bytes after " + std::to_string(n) + " records");
  return out;
}

void write_dataset(const DatasetSplit& split, const std::filesystem::path& path, const nlohmann::json& config) {
  std::vector<Sample> all;
  all.reserve(split.size());
  all.insert(all.end(), split.train.begin(), split.train.end());
  all.insert(all.end(), split.validation.begin(), split.validation.end());
  const auto bytes = encode_dataset(all);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DatasetError(DatasetErrc::Io, "dataset: cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  os.close();
  if (!os) throw DatasetError(DatasetErrc::Io, "dataset: failed writing " + path.string());

  const int h = all.empty() ? 0 : all.front().image.height;
  const int w = all.empty() ? 0 : all.front().image.width;
  nlohmann::json manifest = {
      {"format", "MTSD"},
      {"version", kDatasetVersion},
      {"data_file", path.filename().string()},
      {"sample_count", all.size()},
      {"image_shape", {3, h, w}},
      {"split_seed", split.split_seed},
      {"train_count", split.train.size()},
      {"validation_count", split.validation.size()},
      {"train", membership(split.train)},
      {"validation", membership(split.validation)},
      {"config", config},
  };
  try {
    write_json_file(manifest_path(path), manifest);
  } catch (const std::runtime_error& e) {
    throw DatasetError(DatasetErrc::Io, std::string("dataset manifest: ") + e.what());
  }
}

DatasetSplit read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError(DatasetErrc::Io, "dataset: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  std::vector<Sample> samples = decode_dataset(bytes);

  nlohmann::json manifest;
  try {
    manifest = read_json_file(manifest_path(path));
  } catch (const std::exception& e) {
    throw DatasetError(DatasetErrc::ManifestMismatch, std::string("dataset manifest: ") + e.what());
  }

  DatasetSplit out;
  try {
    out.split_seed = manifest.at("split_seed").get<std::uint64_t>();
    if (manifest.at("sample_count").get<std::size_t>() != samples.size())
      throw DatasetError(DatasetErrc::ManifestMismatch, "dataset manifest: sample count disagrees with data file");
    if (!samples.empty()) {
      const auto shape = manifest.at("image_shape").get<std::vector<int>>();
      if (shape != std::vector<int>{3, samples.front().image.height, samples.front().image.width})
        throw DatasetError(DatasetErrc::DimensionMismatch, "dataset manifest: image shape disagrees with data file");
    }

    std::map<SampleKey, std::size_t> index;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!index.emplace(key_of(samples[i]), i).second)
        throw DatasetError(DatasetErrc::ManifestMismatch, "dataset: duplicate (trajectory_id, step_index) in record " + std::to_string(i), i);
    }
    std::size_t taken = 0;
    for (const char* part : {"train", "validation"}) {
      auto& dst = std::string(part) == "train" ? out.train : out.validation;
      for (const auto& entry : manifest.at(part)) {
        const SampleKey key{entry.at(0).get<std::uint32_t>(), entry.at(1).get<std::uint32_t>()};
        auto it = index.find(key);
        if (it == index.end())
          throw DatasetError(DatasetErrc::ManifestMismatch, "dataset manifest: member (" + std::to_string(key.first) + ", " +
                                                                 std::to_string(key.second) + ") not in data file");
        dst.push_back(std::move(samples[it->second]));
        index.erase(it);
        ++taken;
      }
    }
    if (taken != samples.size())
      throw DatasetError(DatasetErrc::ManifestMismatch, "dataset manifest: split membership does not cover every record");
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(DatasetErrc::ManifestMismatch, std::string("dataset manifest: ") + e.what());
  }
  return out;
}

}  // namespace mts
