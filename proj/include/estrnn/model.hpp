#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "estrnn/config.hpp"
#include "estrnn/contexts.hpp"
#include "estrnn/errors.hpp"
#include "estrnn/tensor.hpp"

namespace estrnn {

// Frame handling at the sequence boundaries: `Valid` emits outputs only for
// frames with a full temporal window, `Replicate` clamps neighbor indices so
// every frame gets an output.
enum class Boundary { Valid, Replicate };

template <class V>
struct SequenceOutput {
    std::vector<V> frames;  // one [3,H,W] map per emitted time step
    int t_lo = 0;           // first emitted frame index (within the input)
    int t_hi = -1;          // last emitted frame index
};

// The network, expressed once over an execution context (immediate or
// recording). All parameters are fetched by registry name, so the structure
// stays in lock-step with describe_layers().
template <class Ctx>
class Model {
public:
    using V = typename Ctx::Value;

    Model(Ctx& ctx, const ModelConfig& cfg) : ctx_(ctx), cfg_(cfg) { cfg_.validate(); }

    const ModelConfig& config() const { return cfg_; }

    // Residual dense block (or the plain residual block when ablated).
    V feature_block(V x, const std::string& prefix) {
        if (cfg_.use_rdb_cell) {
            std::vector<V> cat = {x};
            for (int i = 0; i < cfg_.rdb_layers; ++i) {
                V in = cat.size() == 1 ? cat[0] : ctx_.concat(cat);
                V y = ctx_.relu(conv(in, prefix + ".dense[" + std::to_string(i) + "]", 3, 1, 1));
                cat.push_back(y);
            }
            V fused = conv(ctx_.concat(cat), prefix + ".lfuse", 1, 1, 0);
            return ctx_.add(x, fused);
        }
        V y = ctx_.relu(conv(x, prefix + ".rb.conv[0]", 3, 1, 1));
        y = conv(y, prefix + ".rb.conv[1]", 3, 1, 1);
        return ctx_.add(x, y);
    }

    // Frame [3,H,W] + previous hidden state -> shallow features f^D at 1/4
    // resolution with n_channels channels.
    V downsample_embed(V frame, V hidden_prev) {
        const auto& fs = ctx_.shape(frame);
        if (fs.size() != 3) throw ShapeError("frame must be [C,H,W], got " + shape_str(fs));
        if (fs[1] % cfg_.downsample_factor != 0 || fs[2] % cfg_.downsample_factor != 0) {
            throw ShapeError("frame size " + shape_str(fs) + " not divisible by downsample factor " +
                             std::to_string(cfg_.downsample_factor));
        }
        V x = ctx_.relu(conv(frame, "cell.down[0].conv", 5, 2, 2));
        x = feature_block(x, "cell.down[0].rdb");
        x = ctx_.relu(conv(x, "cell.down[1].conv", 5, 2, 2));
        x = feature_block(x, "cell.down[1].rdb");
        const auto& xs = ctx_.shape(x);
        const auto& hs = ctx_.shape(hidden_prev);
        if (hs.size() != 3 || hs[0] != cfg_.hidden() || hs[1] != xs[1] || hs[2] != xs[2]) {
            throw ShapeError("hidden state " + shape_str(hs) + " does not match frame-derived features " +
                             shape_str(xs) + " (expected [" + std::to_string(cfg_.hidden()) + "," +
                             std::to_string(xs[1]) + "," + std::to_string(xs[2]) + "])");
        }
        return conv(ctx_.concat({x, hidden_prev}), "cell.embed_fuse", 1, 1, 0);
    }

    // Runs the block stack over f^D; returns the fused hierarchical features
    // f_t and the per-block outputs.
    std::pair<V, std::vector<V>> rdb_stack_fuse(V f_d) {
        std::vector<V> block_outs;
        V x = f_d;
        for (int j = 0; j < cfg_.n_blocks; ++j) {
            x = feature_block(x, "cell.block[" + std::to_string(j) + "]");
            block_outs.push_back(x);
        }
        V f_t = conv(ctx_.concat(block_outs), "cell.global_fuse", 1, 1, 0);
        return {f_t, std::move(block_outs)};
    }

    V update_hidden(V f_t) {
        V h = conv(f_t, "cell.hidden.conv", 3, 1, 1);
        return feature_block(h, "cell.hidden.rdb");
    }

    // One recurrent step: frame + h_{t-1} -> (f_t, h_t).
    std::pair<V, V> cell(V frame, V hidden_prev) {
        V f_d = downsample_embed(frame, hidden_prev);
        auto [f_t, blocks] = rdb_stack_fuse(f_d);
        V h_t = update_hidden(f_t);
        return {f_t, h_t};
    }

    // Attention branch: concat(f_t, f_neighbor) -> gated projection. The gate
    // comes from globally pooled statistics of the concatenation.
    V gap_fusion(V f_t, V f_neighbor, int branch) {
        const auto& a = ctx_.shape(f_t);
        const auto& b = ctx_.shape(f_neighbor);
        if (a != b) {
            throw ShapeError("gap_fusion: feature maps differ " + shape_str(a) + " vs " + shape_str(b));
        }
        const std::string p = "fusion.branch[" + std::to_string(branch) + "]";
        V f_c = ctx_.concat({f_t, f_neighbor});
        V pooled = ctx_.gap(f_c);
        V gate = ctx_.relu(ctx_.linear(pooled, ctx_.param(p + ".gate.fc[0].weight"),
                                       ctx_.param(p + ".gate.fc[0].bias")));
        gate = ctx_.sigmoid(ctx_.linear(gate, ctx_.param(p + ".gate.fc[1].weight"),
                                        ctx_.param(p + ".gate.fc[1].bias")));
        V feat = ctx_.relu(conv(f_c, p + ".proj[0]", 1, 1, 0));
        feat = conv(feat, p + ".proj[1]", 1, 1, 0);
        return ctx_.scale_channels(feat, gate);
    }

    // Full attention fusion over the ordered neighbor features
    // [t-P .. t-1, t+1 .. t+F].
    V gsa_fuse(V f_t, const std::vector<V>& neighbors) {
        check_arity(neighbors);
        std::vector<V> parts;
        parts.reserve(neighbors.size() + 1);
        for (std::size_t n = 0; n < neighbors.size(); ++n) {
            parts.push_back(gap_fusion(f_t, neighbors[n], static_cast<int>(n)));
        }
        parts.push_back(f_t);
        return conv(ctx_.concat(parts), "fusion.fuse", 1, 1, 0);
    }

    // Ablation: plain channel concatenation of neighbors, no gating.
    V concat_fuse(V f_t, const std::vector<V>& neighbors) {
        check_arity(neighbors);
        std::vector<V> parts;
        parts.reserve(neighbors.size() + 1);
        for (const V& n : neighbors) parts.push_back(n);
        parts.push_back(f_t);
        return conv(ctx_.concat(parts), "fusion.fuse", 1, 1, 0);
    }

    // Dispatch on the configured fusion mode.
    V fuse(V f_t, const std::vector<V>& neighbors) {
        if (!cfg_.use_fusion) return conv(f_t, "fusion.direct", 1, 1, 0);
        if (cfg_.use_gsa) return gsa_fuse(f_t, neighbors);
        return concat_fuse(f_t, neighbors);
    }

    // Fused features -> full-resolution frame. `input_frame` feeds the
    // optional global skip.
    V reconstruct(V fused, const V* input_frame = nullptr) {
        V x = ctx_.relu(deconv(fused, "recon.up[0]"));
        x = ctx_.relu(deconv(x, "recon.up[1]"));
        x = conv(x, "recon.out", 3, 1, 1);
        if (cfg_.global_skip) {
            if (!input_frame) throw ShapeError("global skip requires the input frame");
            x = ctx_.add(x, *input_frame);
        }
        return x;
    }

    Ctx& ctx() { return ctx_; }

private:
    V conv(V x, const std::string& prefix, int k, int stride, int pad) {
        nn::ConvGeom g{k, stride, pad};
        return ctx_.conv2d(x, ctx_.param(prefix + ".weight"), ctx_.param(prefix + ".bias"), g);
    }

    V deconv(V x, const std::string& prefix) {
        nn::ConvGeom g{4, 2, 1};
        return ctx_.deconv2d(x, ctx_.param(prefix + ".weight"), ctx_.param(prefix + ".bias"), g);
    }

    void check_arity(const std::vector<V>& neighbors) const {
        if (static_cast<int>(neighbors.size()) != cfg_.n_neighbors()) {
            throw ShapeError("fusion expects " + std::to_string(cfg_.n_neighbors()) +
                             " neighbor feature maps (past " + std::to_string(cfg_.n_past) +
                             " + future " + std::to_string(cfg_.n_future) + "), got " +
                             std::to_string(neighbors.size()));
        }
    }

    Ctx& ctx_;
    ModelConfig cfg_;
};

// Copies frame t of a [T,C,H,W] video into a [C,H,W] tensor.
Tensor slice_frame(const Tensor& video, int t);

// Recurrent forward over a [T,C,H,W] video. Throws when T < P + F + 1 in
// Valid mode. Outputs cover t in [P, T-1-F] (Valid) or [0, T-1] (Replicate).
template <class Ctx>
SequenceOutput<typename Ctx::Value> forward_sequence(Model<Ctx>& model, const Tensor& video,
                                                     Boundary boundary = Boundary::Valid) {
    using V = typename Ctx::Value;
    const ModelConfig& cfg = model.config();
    if (video.ndim() != 4) throw ShapeError("video must be [T,C,H,W], got " + shape_str(video.shape()));
    const int t_count = video.dim(0);
    const int past = cfg.n_past;
    const int future = cfg.n_future;
    if (boundary == Boundary::Valid && t_count < cfg.min_seq_len()) {
        throw ShapeError("sequence too short: T=" + std::to_string(t_count) + " < minimum length " +
                         std::to_string(cfg.min_seq_len()) + " (past " + std::to_string(past) +
                         " + future " + std::to_string(future) + " + 1)");
    }
    if (video.dim(2) % cfg.downsample_factor != 0 || video.dim(3) % cfg.downsample_factor != 0) {
        throw ShapeError("frame size " + std::to_string(video.dim(2)) + "x" + std::to_string(video.dim(3)) +
                         " not divisible by " + std::to_string(cfg.downsample_factor));
    }

    Ctx& ctx = model.ctx();
    const int fh = video.dim(2) / cfg.downsample_factor;
    const int fw = video.dim(3) / cfg.downsample_factor;

    std::vector<V> frames;
    frames.reserve(static_cast<std::size_t>(t_count));
    for (int t = 0; t < t_count; ++t) frames.push_back(ctx.input(slice_frame(video, t)));

    V hidden = ctx.input(Tensor({cfg.hidden(), fh, fw}));
    std::vector<V> features;
    features.reserve(static_cast<std::size_t>(t_count));
    for (int t = 0; t < t_count; ++t) {
        auto [f_t, h_t] = model.cell(frames[static_cast<std::size_t>(t)], hidden);
        features.push_back(f_t);
        hidden = h_t;
    }

    SequenceOutput<V> out;
    out.t_lo = (boundary == Boundary::Valid) ? past : 0;
    out.t_hi = (boundary == Boundary::Valid) ? t_count - 1 - future : t_count - 1;
    for (int t = out.t_lo; t <= out.t_hi; ++t) {
        std::vector<V> neighbors;
        neighbors.reserve(static_cast<std::size_t>(cfg.n_neighbors()));
        for (int i = -past; i <= future; ++i) {
            if (i == 0) continue;
            const int idx = std::clamp(t + i, 0, t_count - 1);
            neighbors.push_back(features[static_cast<std::size_t>(idx)]);
        }
        V fused = model.fuse(features[static_cast<std::size_t>(t)], neighbors);
        out.frames.push_back(model.reconstruct(fused, &frames[static_cast<std::size_t>(t)]));
    }
    return out;
}

// Convenience: immediate forward pass returning plain tensors.
SequenceOutput<Tensor> run_sequence(const ModelConfig& cfg, const ParamSet& params,
                                    const Tensor& video, Boundary boundary = Boundary::Valid);

}  // namespace estrnn
