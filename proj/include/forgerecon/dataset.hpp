#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "forgerecon/synthetic.hpp"
#include "forgerecon/tensor.hpp"

namespace forgerecon {

// Labelled images held in memory; every image is (3, H, W) in [0, 1].
struct Dataset {
  std::vector<Tensor> images;
  std::vector<int> labels;  // 0 real, 1 fake
  std::vector<std::string> sources;
  // Samples sharing a non-empty key (a real image and its tampered version)
  // are kept adjacent when batching. Empty keys are singletons.
  std::vector<std::string> groups;

  std::size_t size() const { return images.size(); }
  std::size_t count(int label) const;
  void add(Tensor image, int label, std::string source, std::string group = {});
};

// Reads root/split/{real,fake}/*, resizing to (input_h, input_w). Files that
// are not PNG/JPEG are skipped with a warning. Entries are visited in sorted
// path order; real and fake files with the same stem share a group. Throws DatasetError naming the path for a missing split or a
// missing or empty class directory.
Dataset load_dataset(const std::filesystem::path& root, const std::string& split, int input_h, int input_w);

// 2 * pairs images (real then fake per pair) from consecutive seeds.
Dataset synthetic_dataset(const SyntheticConfig& config, int pairs, std::uint64_t first_seed);

// A random permutation of sample indices that shuffles whole groups and keeps
// each group's members adjacent, in dataset order.
std::vector<std::size_t> epoch_order(const Dataset& data, std::mt19937_64& rng);

Tensor flip_horizontal(const Tensor& image);

// Horizontal flip with probability 0.5; nothing else.
Tensor augment(const Tensor& image, std::mt19937_64& rng);

// Stacks the selected images into (B, 3, H, W). Throws ShapeError on mixed sizes.
Tensor make_batch(const Dataset& data, std::span<const std::size_t> indices);
std::vector<int> batch_labels(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace forgerecon
