#include "estrnn/schedule.hpp"

#include <cmath>

#include "estrnn/errors.hpp"

namespace estrnn {

double lr_at(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw ConfigError("epoch must be >= 0, got " + std::to_string(epoch));
    if (cfg.schedule == "step") {
        return cfg.lr0 * std::pow(cfg.step_decay, static_cast<double>(epoch / cfg.step_every));
    }
    if (cfg.schedule == "cosine") {
        const double phase = M_PI * static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
        return cfg.eta_min + (cfg.lr0 - cfg.eta_min) * (1.0 + std::cos(phase)) / 2.0;
    }
    throw ConfigError("unknown schedule '" + cfg.schedule + "'");
}

}  // namespace estrnn
