#pragma once

#include "estrnn/tensor.hpp"

namespace estrnn {

// Mean squared error over all elements: (1/TCHW) * sum (a-b)^2.
double mse_loss(const Tensor& out, const Tensor& gt);

// Elementwise-mean Charbonnier penalty: (1/TCHW) * sum sqrt((a-b)^2 + eps^2).
// Equals eps exactly when out == gt; tends to mean |a-b| as eps -> 0.
double charbonnier_loss(const Tensor& out, const Tensor& gt, double eps);

}  // namespace estrnn
