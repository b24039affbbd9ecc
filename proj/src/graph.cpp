#include "estrnn/graph.hpp"

#include <cmath>
#include <utility>

#include "estrnn/errors.hpp"

namespace estrnn {

Graph::Var Graph::emit(Tensor value, bool requires_grad, std::function<void(Graph&)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
}

Tensor& Graph::grad_buf(Var v) {
    Node& n = nodes_[static_cast<std::size_t>(v)];
    if (!n.grad_ready) {
        n.grad = Tensor(n.value.shape());
        n.grad_ready = true;
    }
    return n.grad;
}

Graph::Var Graph::input(Tensor value) {
    return emit(std::move(value), false, {});
}

Graph::Var Graph::param(Tensor value) {
    return emit(std::move(value), true, {});
}

Graph::Var Graph::conv2d(Var x, Var w, Var b, nn::ConvGeom geom) {
    const Tensor& bias = value(b);
    Tensor y = nn::conv2d(value(x), value(w), &bias, geom);
    const bool rg = needs(x) || needs(w) || needs(b);
    Var self = emit(std::move(y), rg, {});
    nodes_[static_cast<std::size_t>(self)].back = [self, x, w, b, geom](Graph& g) {
        const Tensor& dy = g.grad_buf(self);
        if (g.needs(x)) {
            const Tensor& xv = g.value(x);
            Tensor dx = nn::conv2d_grad_input(dy, g.value(w), geom, xv.dim(1), xv.dim(2));
            g.grad_buf(x) += dx;
        }
        if (g.needs(w)) nn::conv2d_grad_weight(dy, g.value(x), geom, g.grad_buf(w));
        if (g.needs(b)) nn::conv2d_grad_bias(dy, g.grad_buf(b));
    };
    return self;
}

Graph::Var Graph::deconv2d(Var x, Var w, Var b, nn::ConvGeom geom) {
    const Tensor& bias = value(b);
    Tensor y = nn::deconv2d(value(x), value(w), &bias, geom);
    const bool rg = needs(x) || needs(w) || needs(b);
    Var self = emit(std::move(y), rg, {});
    nodes_[static_cast<std::size_t>(self)].back = [self, x, w, b, geom](Graph& g) {
        const Tensor& dy = g.grad_buf(self);
        if (g.needs(x)) g.grad_buf(x) += nn::deconv2d_grad_input(dy, g.value(w), geom);
        if (g.needs(w)) nn::deconv2d_grad_weight(dy, g.value(x), geom, g.grad_buf(w));
        if (g.needs(b)) nn::conv2d_grad_bias(dy, g.grad_buf(b));
    };
    return self;
}

Graph::Var Graph::linear(Var x, Var w, Var b) {
    const Tensor& bias = value(b);
    Tensor y = nn::linear(value(x), value(w), &bias);
    const bool rg = needs(x) || needs(w) || needs(b);
    Var self = emit(std::move(y), rg, {});
    nodes_[static_cast<std::size_t>(self)].back = [self, x, w, b](Graph& g) {
        const Tensor& dy = g.grad_buf(self);
        if (g.needs(x)) g.grad_buf(x) += nn::linear_grad_input(dy, g.value(w));
        if (g.needs(w)) nn::linear_grad_weight(dy, g.value(x), g.grad_buf(w));
        if (g.needs(b)) g.grad_buf(b) += dy;
    };
    return self;
}

Graph::Var Graph::relu(Var x) {
    Tensor y = nn::relu(value(x));
    Var self = emit(std::move(y), needs(x), {});
    nodes_[static_cast<std::size_t>(self)].back = [self, x](Graph& g) {
        if (g.needs(x)) nn::relu_grad(g.grad_buf(self), g.value(x), g.grad_buf(x));
    };
    return self;
}

Graph::Var Graph::sigmoid(Var x) {
    Tensor y = nn::sigmoid(value(x));
    Var self = emit(std::move(y), needs(x), {});
    nodes_[static_cast<std::size_t>(self)].back = [self, x](Graph& g) {
        if (g.needs(x)) nn::sigmoid_grad(g.grad_buf(self), g.value(self), g.grad_buf(x));
    };
    return self;
}

Graph::Var Graph::add(Var a, Var b) {
    require_same_shape(value(a), value(b), "graph add");
    Tensor y = value(a);
    y += value(b);
    Var self = emit(std::move(y), needs(a) || needs(b), {});
    nodes_[static_cast<std::size_t>(self)].back = [self, a, b](Graph& g) {
        const Tensor& dy = g.grad_buf(self);
        if (g.needs(a)) g.grad_buf(a) += dy;
        if (g.needs(b)) g.grad_buf(b) += dy;
    };
    return self;
}

Graph::Var Graph::concat(const std::vector<Var>& xs) {
    std::vector<const Tensor*> parts;
    parts.reserve(xs.size());
    bool rg = false;
    for (Var v : xs) {
        parts.push_back(&value(v));
        rg = rg || needs(v);
    }
    Tensor y = nn::concat_channels(parts);
    Var self = emit(std::move(y), rg, {});
    nodes_[static_cast<std::size_t>(self)].back = [self, xs](Graph& g) {
        const Tensor& dy = g.grad_buf(self);
        std::int64_t offset = 0;
        for (Var v : xs) {
            const std::int64_t n = g.value(v).size();
            if (g.needs(v)) {
                Tensor& dst = g.grad_buf(v);
                const double* src = dy.data() + offset;
                for (std::int64_t i = 0; i < n; ++i) dst[i] += src[i];
            }
            offset += n;
        }
    };
    return self;
}

Graph::Var Graph::gap(Var x) {
    Tensor y = nn::global_avg_pool(value(x));
    Var self = emit(std::move(y), needs(x), {});
    nodes_[static_cast<std::size_t>(self)].back = [self, x](Graph& g) {
        if (g.needs(x)) nn::global_avg_pool_grad(g.grad_buf(self), g.value(x).shape(), g.grad_buf(x));
    };
    return self;
}

Graph::Var Graph::scale_channels(Var x, Var gate) {
    Tensor y = nn::scale_channels(value(x), value(gate));
    Var self = emit(std::move(y), needs(x) || needs(gate), {});
    nodes_[static_cast<std::size_t>(self)].back = [self, x, gate](Graph& g) {
        const Tensor& dy = g.grad_buf(self);
        const Tensor& xv = g.value(x);
        const Tensor& gv = g.value(gate);
        const std::int64_t hw = static_cast<std::int64_t>(xv.dim(1)) * xv.dim(2);
        if (g.needs(x)) {
            Tensor& dx = g.grad_buf(x);
            for (int c = 0; c < xv.dim(0); ++c) {
                const double gc = gv[c];
                for (std::int64_t i = 0; i < hw; ++i) dx[c * hw + i] += dy[c * hw + i] * gc;
            }
        }
        if (g.needs(gate)) {
            Tensor& dg = g.grad_buf(gate);
            for (int c = 0; c < xv.dim(0); ++c) {
                double s = 0.0;
                for (std::int64_t i = 0; i < hw; ++i) s += dy[c * hw + i] * xv[c * hw + i];
                dg[c] += s;
            }
        }
    };
    return self;
}

Graph::Var Graph::mse_vs(Var pred, Tensor target) {
    const Tensor& p = value(pred);
    require_same_shape(p, target, "mse loss");
    double acc = 0.0;
    for (std::int64_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - target[i];
        acc += d * d;
    }
    Tensor y({1});
    y[0] = acc / static_cast<double>(p.size());
    Var self = emit(std::move(y), needs(pred), {});
    nodes_[static_cast<std::size_t>(self)].back = [self, pred, t = std::move(target)](Graph& g) {
        if (!g.needs(pred)) return;
        const double g0 = g.grad_buf(self)[0];
        const Tensor& p = g.value(pred);
        Tensor& dp = g.grad_buf(pred);
        const double scale = 2.0 * g0 / static_cast<double>(p.size());
        for (std::int64_t i = 0; i < p.size(); ++i) dp[i] += scale * (p[i] - t[i]);
    };
    return self;
}

Graph::Var Graph::charbonnier_vs(Var pred, Tensor target, double eps) {
    if (eps <= 0.0) throw ConfigError("charbonnier loss requires eps > 0, got " + std::to_string(eps));
    const Tensor& p = value(pred);
    require_same_shape(p, target, "charbonnier loss");
    double acc = 0.0;
    for (std::int64_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - target[i];
        acc += std::sqrt(d * d + eps * eps);
    }
    Tensor y({1});
    y[0] = acc / static_cast<double>(p.size());
    Var self = emit(std::move(y), needs(pred), {});
    nodes_[static_cast<std::size_t>(self)].back = [self, pred, eps, t = std::move(target)](Graph& g) {
        if (!g.needs(pred)) return;
        const double g0 = g.grad_buf(self)[0];
        const Tensor& p = g.value(pred);
        Tensor& dp = g.grad_buf(pred);
        const double inv_n = 1.0 / static_cast<double>(p.size());
        for (std::int64_t i = 0; i < p.size(); ++i) {
            const double d = p[i] - t[i];
            dp[i] += g0 * inv_n * d / std::sqrt(d * d + eps * eps);
        }
    };
    return self;
}

Graph::Var Graph::sum_scaled(const std::vector<Var>& scalars, double scale) {
    double acc = 0.0;
    bool rg = false;
    for (Var v : scalars) {
        acc += value(v)[0];
        rg = rg || needs(v);
    }
    Tensor y({1});
    y[0] = acc * scale;
    Var self = emit(std::move(y), rg, {});
    nodes_[static_cast<std::size_t>(self)].back = [self, scalars, scale](Graph& g) {
        const double g0 = g.grad_buf(self)[0];
        for (Var v : scalars) {
            if (g.needs(v)) g.grad_buf(v)[0] += g0 * scale;
        }
    };
    return self;
}

void Graph::backward(Var loss) {
    if (value(loss).size() != 1) throw ShapeError("backward() expects a scalar loss node");
    grad_buf(loss)[0] = 1.0;
    for (Var v = loss; v >= 0; --v) {
        Node& n = nodes_[static_cast<std::size_t>(v)];
        if (n.requires_grad && n.grad_ready && n.back) n.back(*this);
    }
}

const Tensor& Graph::grad(Var v) {
    return grad_buf(v);
}

}  // namespace estrnn
