#include "estrnn/model.hpp"

#include <cstring>

namespace estrnn {

Tensor slice_frame(const Tensor& video, int t) {
    if (video.ndim() != 4) throw ShapeError("expected [T,C,H,W] video, got " + shape_str(video.shape()));
    if (t < 0 || t >= video.dim(0)) {
        throw ShapeError("frame index " + std::to_string(t) + " out of range [0," +
                         std::to_string(video.dim(0)) + ")");
    }
    Tensor frame({video.dim(1), video.dim(2), video.dim(3)});
    const std::int64_t n = frame.size();
    std::memcpy(frame.data(), video.data() + static_cast<std::int64_t>(t) * n,
                static_cast<std::size_t>(n) * sizeof(double));
    return frame;
}

SequenceOutput<Tensor> run_sequence(const ModelConfig& cfg, const ParamSet& params,
                                    const Tensor& video, Boundary boundary) {
    EvalCtx ctx(params);
    Model<EvalCtx> model(ctx, cfg);
    SequenceOutput<EvalCtx::Value> res = forward_sequence(model, video, boundary);
    SequenceOutput<Tensor> out;
    out.t_lo = res.t_lo;
    out.t_hi = res.t_hi;
    out.frames.reserve(res.frames.size());
    for (auto& f : res.frames) out.frames.push_back(*f);
    return out;
}

}  // namespace estrnn
