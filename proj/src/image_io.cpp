#include "forgerecon/image_io.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "forgerecon/errors.hpp"
#include "forgerecon/kernels.hpp"

namespace forgerecon {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

enum class Format { png, jpeg, unknown };

Format sniff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<unsigned char, 8> sig{};
  if (!in.read(reinterpret_cast<char*>(sig.data()), sig.size())) return Format::unknown;
  if (png_sig_cmp(sig.data(), 0, sig.size()) == 0) return Format::png;
  if (sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return Format::jpeg;
  return Format::unknown;
}

Tensor from_interleaved(const std::vector<unsigned char>& px, int h, int w, int channels) {
  Tensor img({3, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      const int src = channels >= 3 ? c : 0;
      img[c * plane + i] = px[i * channels + src] / 255.0;
    }
  }
  return img;
}

Tensor read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DatasetError("cannot open image " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DatasetError("libpng initialisation failed for " + path.string());
  }
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DatasetError("corrupt PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  pixels.resize(static_cast<std::size_t>(h) * w * channels);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_interleaved(pixels, h, w, channels);
}

struct JpegError {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

Tensor read_jpeg(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DatasetError("cannot open image " + path.string());
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<unsigned char> pixels;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DatasetError("corrupt JPEG " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  const int channels = cinfo.output_components;
  pixels.resize(static_cast<std::size_t>(h) * w * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(pixels, h, w, channels);
}

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

void check_image(const Tensor& image, const char* op) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError(std::string(op) + " expects a (3, H, W) image, got " + shape_str(image.shape()));
  }
}

}  // namespace

bool is_image_file(const std::filesystem::path& path) {
  return std::filesystem::is_regular_file(path) && sniff(path) != Format::unknown;
}

Tensor read_image(const std::filesystem::path& path) {
  switch (sniff(path)) {
    case Format::png: return read_png(path);
    case Format::jpeg: return read_jpeg(path);
    case Format::unknown: break;
  }
  throw DatasetError("not a PNG or JPEG image: " + path.string());
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
  check_image(image, "write_png");
  const int h = image.dim(1);
  const int w = image.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<unsigned char> px(plane * 3);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) px[i * 3 + c] = to_byte(image[c * plane + i]);
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = px.data() + static_cast<std::size_t>(y) * w * 3;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor resize_image(const Tensor& image, int out_h, int out_w) {
  check_image(image, "resize_image");
  if (image.dim(1) == out_h && image.dim(2) == out_w) return image;
  const Tensor batched = image.reshaped({1, 3, image.dim(1), image.dim(2)});
  Tensor out = kernels::resize_bilinear_forward(batched, out_h, out_w);
  return out.reshaped({3, out_h, out_w});
}

Tensor quantize_8bit(const Tensor& image) {
  Tensor out = image;
  for (double& v : out.values()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace forgerecon
