#include "estrnn/losses.hpp"

#include <cmath>

#include "estrnn/errors.hpp"

namespace estrnn {

double mse_loss(const Tensor& out, const Tensor& gt) {
    require_same_shape(out, gt, "mse_loss");
    double acc = 0.0;
    for (std::int64_t i = 0; i < out.size(); ++i) {
        const double d = out[i] - gt[i];
        acc += d * d;
    }
    return acc / static_cast<double>(out.size());
}

double charbonnier_loss(const Tensor& out, const Tensor& gt, double eps) {
    require_same_shape(out, gt, "charbonnier_loss");
    if (eps <= 0.0) throw ConfigError("charbonnier_loss requires eps > 0, got " + std::to_string(eps));
    double acc = 0.0;
    for (std::int64_t i = 0; i < out.size(); ++i) {
        const double d = out[i] - gt[i];
        acc += std::sqrt(d * d + eps * eps);
    }
    return acc / static_cast<double>(out.size());
}

}  // namespace estrnn
