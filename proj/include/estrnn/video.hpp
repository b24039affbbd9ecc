#pragma once

#include <string>

#include "estrnn/tensor.hpp"

namespace estrnn {

enum class ColorSpace { Encoded, Linear };

// A [T,C,H,W] stack of frames with intensities in [0,1] (encoded) carrying
// its color-space tag through the synthesis pipeline.
struct VideoTensor {
    Tensor data;  // [T,C,H,W]
    ColorSpace space = ColorSpace::Encoded;

    int frames() const { return data.dim(0); }
    int channels() const { return data.dim(1); }
    int height() const { return data.dim(2); }
    int width() const { return data.dim(3); }
};

// Checks the carrier invariants: 4d, T >= 1, C in {1,3}, finite values and,
// for encoded video, values within [0,1]. Throws ShapeError / NumericError
// mentioning `what`.
void validate_video(const VideoTensor& v, const std::string& what);

// Wraps a [C,H,W] frame into a single-frame video.
VideoTensor single_frame_video(Tensor frame, ColorSpace space = ColorSpace::Encoded);

}  // namespace estrnn
