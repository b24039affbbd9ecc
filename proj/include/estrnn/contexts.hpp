#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "estrnn/graph.hpp"
#include "estrnn/nn_kernels.hpp"
#include "estrnn/params.hpp"
#include "estrnn/tensor.hpp"

namespace estrnn {

// Immediate executor: runs the layer kernels directly. Values are shared
// tensors so intermediates are freed as soon as the model code drops them.
class EvalCtx {
public:
    using Value = std::shared_ptr<const Tensor>;

    explicit EvalCtx(const ParamSet& params) : params_(&params) {}

    Value param(const std::string& name) const {
        // Non-owning alias; the ParamSet outlives the forward pass.
        return Value(Value{}, &params_->at(name));
    }

    Value input(Tensor t) const { return std::make_shared<const Tensor>(std::move(t)); }

    const std::vector<int>& shape(const Value& v) const { return v->shape(); }
    const Tensor& tensor(const Value& v) const { return *v; }

    Value conv2d(const Value& x, const Value& w, const Value& b, nn::ConvGeom g) const {
        return input(nn::conv2d(*x, *w, b.get(), g));
    }
    Value deconv2d(const Value& x, const Value& w, const Value& b, nn::ConvGeom g) const {
        return input(nn::deconv2d(*x, *w, b.get(), g));
    }
    Value linear(const Value& x, const Value& w, const Value& b) const {
        return input(nn::linear(*x, *w, b.get()));
    }
    Value relu(const Value& x) const { return input(nn::relu(*x)); }
    Value sigmoid(const Value& x) const { return input(nn::sigmoid(*x)); }
    Value add(const Value& a, const Value& b) const {
        Tensor y = *a;
        y += *b;
        return input(std::move(y));
    }
    Value concat(const std::vector<Value>& xs) const {
        std::vector<const Tensor*> parts;
        parts.reserve(xs.size());
        for (const Value& v : xs) parts.push_back(v.get());
        return input(nn::concat_channels(parts));
    }
    Value gap(const Value& x) const { return input(nn::global_avg_pool(*x)); }
    Value scale_channels(const Value& x, const Value& gate) const {
        return input(nn::scale_channels(*x, *gate));
    }

private:
    const ParamSet* params_;
};

// Recording executor: every op lands on the tape; parameters become gradient
// leaves, memoized per name so repeated use across time steps accumulates
// into one gradient buffer.
class GraphCtx {
public:
    using Value = Graph::Var;

    GraphCtx(Graph& graph, const ParamSet& params) : graph_(&graph), params_(&params) {}

    Value param(const std::string& name) {
        auto it = param_vars_.find(name);
        if (it != param_vars_.end()) return it->second;
        const Value v = graph_->param(params_->at(name));
        param_vars_.emplace(name, v);
        return v;
    }

    Value input(Tensor t) { return graph_->input(std::move(t)); }

    const std::vector<int>& shape(Value v) const { return graph_->shape(v); }
    const Tensor& tensor(Value v) const { return graph_->value(v); }

    Value conv2d(Value x, Value w, Value b, nn::ConvGeom g) { return graph_->conv2d(x, w, b, g); }
    Value deconv2d(Value x, Value w, Value b, nn::ConvGeom g) { return graph_->deconv2d(x, w, b, g); }
    Value linear(Value x, Value w, Value b) { return graph_->linear(x, w, b); }
    Value relu(Value x) { return graph_->relu(x); }
    Value sigmoid(Value x) { return graph_->sigmoid(x); }
    Value add(Value a, Value b) { return graph_->add(a, b); }
    Value concat(const std::vector<Value>& xs) { return graph_->concat(xs); }
    Value gap(Value x) { return graph_->gap(x); }
    Value scale_channels(Value x, Value gate) { return graph_->scale_channels(x, gate); }

    Graph& graph() { return *graph_; }

    // Parameter gradient accumulated by the last backward pass; zero if the
    // parameter never entered the graph.
    const Tensor* grad_of(const std::string& name) {
        auto it = param_vars_.find(name);
        if (it == param_vars_.end()) return nullptr;
        return &graph_->grad(it->second);
    }

    const std::unordered_map<std::string, Value>& param_vars() const { return param_vars_; }

private:
    Graph* graph_;
    const ParamSet* params_;
    std::unordered_map<std::string, Value> param_vars_;
};

}  // namespace estrnn
