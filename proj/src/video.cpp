#include "estrnn/video.hpp"

#include <cmath>

#include "estrnn/errors.hpp"

namespace estrnn {

void validate_video(const VideoTensor& v, const std::string& what) {
    if (v.data.ndim() != 4) {
        throw ShapeError(what + ": video must be [T,C,H,W], got " + shape_str(v.data.shape()));
    }
    if (v.data.dim(0) < 1) throw ShapeError(what + ": video needs at least one frame");
    const int c = v.data.dim(1);
    if (c != 1 && c != 3) {
        throw ShapeError(what + ": channel count must be 1 or 3, got " + std::to_string(c));
    }
    for (std::int64_t i = 0; i < v.data.size(); ++i) {
        const double x = v.data[i];
        if (!std::isfinite(x)) throw NumericError(what + ": non-finite pixel value");
        if (v.space == ColorSpace::Encoded && (x < 0.0 || x > 1.0)) {
            throw NumericError(what + ": encoded pixel value " + std::to_string(x) +
                               " outside [0,1]");
        }
    }
}

VideoTensor single_frame_video(Tensor frame, ColorSpace space) {
    if (frame.ndim() != 3) throw ShapeError("expected [C,H,W] frame, got " + shape_str(frame.shape()));
    Tensor v({1, frame.dim(0), frame.dim(1), frame.dim(2)});
    for (std::int64_t i = 0; i < frame.size(); ++i) v[i] = frame[i];
    return VideoTensor{std::move(v), space};
}

}  // namespace estrnn
