#pragma once

#include <string>

#include "forgerecon/model.hpp"
#include "forgerecon/tensor.hpp"

namespace forgerecon {

// Stretches a tensor to [0, 1] by its own min and max. A constant tensor maps
// to zeros. The range used is reported through lo and hi.
Tensor minmax_normalize(const Tensor& t, double& lo, double& hi);

// Input, both reconstructions and both difference maps for one (3, H, W)
// image. Panels of a disabled head are black with an empty range.
struct ReconPanels {
  Tensor input, rec1, rec2, diff1, diff2;
  double diff1_lo = 0, diff1_hi = 0, diff2_lo = 0, diff2_hi = 0;
};

ReconPanels recon_panels(const Model& model, const Tensor& image);

// The five panels side by side with the two difference ranges written in a
// strip underneath. Small inputs are enlarged with nearest-neighbour scaling.
Tensor compose_recon_row(const ReconPanels& panels);

// Writes text into an RGB image with a 3x5 pixel font. Supports digits,
// upper-case letters and a little punctuation; pixels outside the image are clipped.
void draw_text(Tensor& image, int x, int y, const std::string& text, double value = 1.0);

// Gradient-weighted class activation map at the F5 stage for one (3, H, W)
// image: ReLU of the gradient-weighted channel sum, scaled to [0, 1] by its
// maximum and resized to (H, W). All zero when the gradients vanish.
// Parameter gradients are cleared afterwards.
Tensor gradcam(Model& model, const Tensor& image, int target_class = 1);

// Blends a jet-coloured (H, W) heatmap over an image, half and half.
Tensor overlay_heatmap(const Tensor& image, const Tensor& heatmap);

}  // namespace forgerecon
