#pragma once

#include <vector>

#include "estrnn/tensor.hpp"

namespace estrnn::nn {

// Geometry of a 2d convolution. Output size (H + 2*pad - k) / stride + 1
// must divide exactly; callers arrange padding so that it does.
struct ConvGeom {
    int k = 3;
    int stride = 1;
    int pad = 1;
};

int conv_out_dim(int in, const ConvGeom& g);
int deconv_out_dim(int in, const ConvGeom& g);

// y = conv(x, w) + b.  x [Ci,H,W], w [Co,Ci,k,k], b [Co] (may be null).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* b, const ConvGeom& g);

// Gradient w.r.t. x of conv2d: dy [Co,Ho,Wo] -> dx [Ci,H,W].
Tensor conv2d_grad_input(const Tensor& dy, const Tensor& w, const ConvGeom& g, int in_h, int in_w);

// Gradient w.r.t. w of conv2d: accumulates into dw (shape of w).
void conv2d_grad_weight(const Tensor& dy, const Tensor& x, const ConvGeom& g, Tensor& dw);

// Spatial sum of dy per output channel, accumulated into db [Co].
void conv2d_grad_bias(const Tensor& dy, Tensor& db);

// Transposed convolution. x [Ci,H,W], w [Ci,Co,k,k], b [Co] (may be null).
// Output [Co, (H-1)*stride - 2*pad + k, ...].
Tensor deconv2d(const Tensor& x, const Tensor& w, const Tensor* b, const ConvGeom& g);
Tensor deconv2d_grad_input(const Tensor& dy, const Tensor& w, const ConvGeom& g);
void deconv2d_grad_weight(const Tensor& dy, const Tensor& x, const ConvGeom& g, Tensor& dw);

// y = W x + b.  x [In], w [Out,In], b [Out] (may be null).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b);
Tensor linear_grad_input(const Tensor& dy, const Tensor& w);
void linear_grad_weight(const Tensor& dy, const Tensor& x, Tensor& dw);

Tensor relu(const Tensor& x);
void relu_grad(const Tensor& dy, const Tensor& x, Tensor& dx_accum);

Tensor sigmoid(const Tensor& x);
void sigmoid_grad(const Tensor& dy, const Tensor& y, Tensor& dx_accum);

// Channel-wise global average pool: [C,H,W] -> [C].
Tensor global_avg_pool(const Tensor& x);
void global_avg_pool_grad(const Tensor& dy, const std::vector<int>& in_shape, Tensor& dx_accum);

// Concatenate [C_i,H,W] maps along channels.
Tensor concat_channels(const std::vector<const Tensor*>& xs);

// y[c,h,w] = x[c,h,w] * gate[c].
Tensor scale_channels(const Tensor& x, const Tensor& gate);

}  // namespace estrnn::nn
