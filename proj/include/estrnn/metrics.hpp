#pragma once

#include "estrnn/tensor.hpp"

namespace estrnn {

// Peak signal-to-noise ratio for unit dynamic range: 10*log10(1/MSE), capped
// at 100 dB (identical inputs hit the cap). Inputs are expected in [0,1].
double psnr(const Tensor& a, const Tensor& b);

// Structural similarity with the standard constants: 11x11 Gaussian window
// (sigma 1.5), K1=0.01, K2=0.03, dynamic range 1.0. Accepts [C,H,W] frames or
// [T,C,H,W] videos (mean over frames); result averages window positions and
// channels over the valid (fully-covered) region.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace estrnn
