#include "forgerecon/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstring>
#include <unordered_map>

#include "forgerecon/errors.hpp"
#include "forgerecon/image_io.hpp"

namespace forgerecon {

namespace fs = std::filesystem;

std::size_t Dataset::count(int label) const { return std::count(labels.begin(), labels.end(), label); }

void Dataset::add(Tensor image, int label, std::string source, std::string group) {
  images.push_back(std::move(image));
  labels.push_back(label);
  sources.push_back(std::move(source));
  groups.push_back(std::move(group));
}

Dataset load_dataset(const fs::path& root, const std::string& split, int input_h, int input_w) {
  if (input_h <= 0 || input_w <= 0) throw ConfigError("dataset input size must be positive");
  const fs::path split_dir = root / split;
  if (!fs::is_directory(split_dir)) throw DatasetError("missing split directory: " + split_dir.string());
  Dataset data;
  for (int label : {0, 1}) {
    const fs::path dir = split_dir / (label == 0 ? "real" : "fake");
    if (!fs::is_directory(dir)) throw DatasetError("missing class directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::size_t loaded = 0;
    for (const fs::path& f : files) {
      if (!is_image_file(f)) {
        spdlog::warn("skipping non-image file {}", f.string());
        continue;
      }
      data.add(resize_image(read_image(f), input_h, input_w), label, f.string(), f.stem().string());
      ++loaded;
    }
    if (loaded == 0) throw DatasetError("class directory has no images: " + dir.string());
  }
  return data;
}

Dataset synthetic_dataset(const SyntheticConfig& config, int pairs, std::uint64_t first_seed) {
  Dataset data;
  for (int i = 0; i < pairs; ++i) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
    SyntheticSample s = generate_synthetic_pair(seed, config);
    const std::string tag = "synthetic:" + std::to_string(seed);
    data.add(std::move(s.real), 0, tag + ":real", tag);
    data.add(std::move(s.fake), 1, tag + ":" + to_string(s.kind), tag);
  }
  return data;
}

std::vector<std::size_t> epoch_order(const Dataset& data, std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> members;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string& key = i < data.groups.size() ? data.groups[i] : std::string();
    if (key.empty()) {
      members.push_back({i});
      continue;
    }
    auto [it, fresh] = slot.emplace(key, members.size());
    if (fresh) members.emplace_back();
    members[it->second].push_back(i);
  }
  std::shuffle(members.begin(), members.end(), rng);
  std::vector<std::size_t> order;
  order.reserve(data.size());
  for (const auto& m : members) order.insert(order.end(), m.begin(), m.end());
  return order;
}

Tensor flip_horizontal(const Tensor& image) {
  if (image.rank() != 3) throw ShapeError("flip expects (C, H, W), got " + shape_str(image.shape()));
  Tensor out(image.shape());
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y) {
      const double* src = image.data() + (static_cast<std::size_t>(k) * h + y) * w;
      double* dst = out.data() + (static_cast<std::size_t>(k) * h + y) * w;
      for (int x = 0; x < w; ++x) dst[x] = src[w - 1 - x];
    }
  return out;
}

Tensor augment(const Tensor& image, std::mt19937_64& rng) {
  return std::bernoulli_distribution(0.5)(rng) ? flip_horizontal(image) : image;
}

Tensor make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw EmptyInputError("empty batch");
  const Shape& s = data.images.at(indices[0]).shape();
  Shape shape{static_cast<int>(indices.size())};
  shape.insert(shape.end(), s.begin(), s.end());
  Tensor batch(shape);
  const std::size_t n = shape_numel(s);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor& img = data.images.at(indices[i]);
    if (img.shape() != s) throw ShapeError("batch mixes image shapes " + shape_str(s) + " and " + shape_str(img.shape()));
    std::memcpy(batch.data() + i * n, img.data(), n * sizeof(double));
  }
  return batch;
}

std::vector<int> batch_labels(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data.labels.at(i));
  return out;
}

}  // namespace forgerecon
