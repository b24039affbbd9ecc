#pragma once

#include "estrnn/train_config.hpp"

namespace estrnn {

// Learning rate at a zero-based epoch.
//   step:   lr0 * decay^floor(epoch / every)
//   cosine: eta_min + (lr0 - eta_min) * (1 + cos(pi * epoch / epochs)) / 2
double lr_at(const TrainConfig& cfg, int epoch);

}  // namespace estrnn
