#pragma once

#include <cstdint>
#include <string>

namespace estrnn {

// Optimization recipe. Two named presets cover the reference schedules:
//   synthetic: MSE loss, lr 1e-4 halved every 200 epochs, batch 4, T=10
//   bsd:       Charbonnier loss, cosine annealing from 3e-4, batch 8, T=8
struct TrainConfig {
    std::string recipe = "synthetic";
    int epochs = 500;
    int batch_size = 4;
    int subseq_len = 10;  // frames per training subsequence
    int patch = 256;      // square crop size in pixels
    double lr0 = 1e-4;
    std::string schedule = "step";  // step | cosine
    double step_decay = 0.5;
    int step_every = 200;
    double eta_min = 0.0;           // cosine floor
    std::string loss = "mse";       // mse | charbonnier
    double charbonnier_eps = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    bool flip_augment = true;
    double grad_clip = 0.0;  // global-norm clip; 0 disables
    int val_every = 10;      // epochs between validation PSNR passes; 0 disables
    int checkpoint_every = 10;
    int steps_per_epoch = 0;  // 0 = one step per training sequence
    std::uint64_t seed = 0;

    static TrainConfig defaults(const std::string& recipe);

    // Cross-field checks need the temporal window of the model config.
    void validate(int model_min_seq_len) const;

    bool operator==(const TrainConfig&) const = default;
};

}  // namespace estrnn
