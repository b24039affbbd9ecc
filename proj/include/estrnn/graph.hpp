#pragma once

#include <functional>
#include <string>
#include <vector>

#include "estrnn/nn_kernels.hpp"
#include "estrnn/tensor.hpp"

namespace estrnn {

// Reverse-mode tape. Values are computed eagerly; backward closures replay
// the recorded operations in reverse. One Graph per optimization step; the
// recurrent unrolling over a frame sequence lives in a single tape so that
// hidden-state gradients flow through time.
class Graph {
public:
    using Var = int;

    Var input(Tensor value);
    Var param(Tensor value);  // leaf that accumulates a gradient

    Var conv2d(Var x, Var w, Var b, nn::ConvGeom geom);
    Var deconv2d(Var x, Var w, Var b, nn::ConvGeom geom);
    Var linear(Var x, Var w, Var b);
    Var relu(Var x);
    Var sigmoid(Var x);
    Var add(Var a, Var b);
    Var concat(const std::vector<Var>& xs);
    Var gap(Var x);
    Var scale_channels(Var x, Var gate);

    // Scalar-valued loss nodes; targets are constants, not graph nodes.
    Var mse_vs(Var pred, Tensor target);
    Var charbonnier_vs(Var pred, Tensor target, double eps);
    // scale * sum(scalars)
    Var sum_scaled(const std::vector<Var>& scalars, double scale);

    const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }
    const std::vector<int>& shape(Var v) const { return value(v).shape(); }

    // Runs reverse accumulation seeded with d(loss) = 1. `loss` must be scalar.
    void backward(Var loss);

    // Gradient of a leaf/param after backward(); zero tensor if it never
    // received a contribution.
    const Tensor& grad(Var v);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_ready = false;
        std::function<void(Graph&)> back;  // empty for leaves
    };

    Var emit(Tensor value, bool requires_grad, std::function<void(Graph&)> back);
    Tensor& grad_buf(Var v);
    bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v)].requires_grad; }

    std::vector<Node> nodes_;
};

}  // namespace estrnn
