#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forgerecon/tensor.hpp"

namespace forgerecon {

enum class TamperKind { splice, local_blur, local_noise, color_transplant };

std::string to_string(TamperKind kind);
TamperKind parse_tamper_kind(const std::string& name);

struct SyntheticConfig {
  int image_size = 32;
  std::vector<TamperKind> tamper_kinds{TamperKind::splice, TamperKind::local_blur, TamperKind::local_noise,
                                       TamperKind::color_transplant};
  double min_area = 0.15;  // tampered fraction of the image area
  double max_area = 0.40;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticSample {
  Tensor real;  // (3, S, S), values on the 8-bit grid
  Tensor fake;  // real with one tamper applied inside mask
  Tensor mask;  // (1, S, S), 0 or 1
  TamperKind kind = TamperKind::splice;
};

// Procedural face-like image with uniform sensor grain, plus a tampered copy.
// A pure function of (seed, config).
SyntheticSample generate_synthetic_pair(std::uint64_t seed, const SyntheticConfig& config);

// Writes root/{train,test}/{real,fake}/*.png and root/manifest.csv with
// columns path,label,tamper_kind,seed. Train pair i uses seed i; test pair i
// uses seed kTestSeedOffset + i.
inline constexpr std::uint64_t kTestSeedOffset = 1'000'000;
void materialize_synthetic(const std::filesystem::path& root, const SyntheticConfig& config, int train_pairs,
                           int test_pairs);

}  // namespace forgerecon
