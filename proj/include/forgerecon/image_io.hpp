#pragma once

#include <filesystem>

#include "forgerecon/tensor.hpp"

namespace forgerecon {

// Images are (3, H, W) tensors with values in [0, 1].

// Decodes PNG or JPEG (by signature, not extension). Gray and alpha inputs are
// expanded or dropped to RGB. Throws DatasetError on unreadable input.
Tensor read_image(const std::filesystem::path& path);

// True when the file starts with a PNG or JPEG signature.
bool is_image_file(const std::filesystem::path& path);

// 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const Tensor& image);

// Bilinear resize of a (3, H, W) image; returns a copy when the size matches.
Tensor resize_image(const Tensor& image, int out_h, int out_w);

// Rounds every value to the nearest 1/255 step, as a PNG round trip would.
Tensor quantize_8bit(const Tensor& image);

}  // namespace forgerecon
