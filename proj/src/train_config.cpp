#include "estrnn/train_config.hpp"

#include "estrnn/errors.hpp"

namespace estrnn {

TrainConfig TrainConfig::defaults(const std::string& recipe) {
    TrainConfig c;
    c.recipe = recipe;
    if (recipe == "synthetic") {
        // lr 1e-4 halved every 200 epochs, MSE, batch 4, 10-frame subsequences.
    } else if (recipe == "bsd") {
        c.lr0 = 3e-4;
        c.schedule = "cosine";
        c.loss = "charbonnier";
        c.batch_size = 8;
        c.subseq_len = 8;
    } else {
        throw ConfigError("train.recipe must be 'synthetic' or 'bsd', got '" + recipe + "'");
    }
    return c;
}

void TrainConfig::validate(int model_min_seq_len) const {
    if (recipe != "synthetic" && recipe != "bsd") {
        throw ConfigError("train.recipe must be 'synthetic' or 'bsd', got '" + recipe + "'");
    }
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (subseq_len < model_min_seq_len) {
        throw ConfigError("train.subseq_len must be >= past + future + 1 = " +
                          std::to_string(model_min_seq_len) + ", got " + std::to_string(subseq_len));
    }
    if (patch < 4 || patch % 4 != 0) {
        throw ConfigError("train.patch must be a positive multiple of 4, got " + std::to_string(patch));
    }
    if (lr0 <= 0.0) throw ConfigError("train.lr0 must be > 0");
    if (schedule != "step" && schedule != "cosine") {
        throw ConfigError("train.schedule must be 'step' or 'cosine', got '" + schedule + "'");
    }
    if (step_decay <= 0.0 || step_decay > 1.0) throw ConfigError("train.step_decay must be in (0, 1]");
    if (step_every < 1) throw ConfigError("train.step_every must be >= 1");
    if (eta_min < 0.0) throw ConfigError("train.eta_min must be >= 0");
    if (loss != "mse" && loss != "charbonnier") {
        throw ConfigError("train.loss must be 'mse' or 'charbonnier', got '" + loss + "'");
    }
    if (charbonnier_eps <= 0.0) throw ConfigError("train.charbonnier_eps must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("train.beta1 must be in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("train.beta2 must be in [0, 1)");
    if (adam_eps <= 0.0) throw ConfigError("train.adam_eps must be > 0");
    if (grad_clip < 0.0) throw ConfigError("train.grad_clip must be >= 0");
    if (val_every < 0) throw ConfigError("train.val_every must be >= 0");
    if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
    if (steps_per_epoch < 0) throw ConfigError("train.steps_per_epoch must be >= 0");
}

}  // namespace estrnn
