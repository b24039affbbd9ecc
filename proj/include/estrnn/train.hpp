#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "estrnn/config.hpp"
#include "estrnn/dataset.hpp"
#include "estrnn/params.hpp"
#include "estrnn/train_config.hpp"

namespace estrnn {

// Adam moment buffers, aligned with ParamSet entry order.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::int64_t t = 0;

    void init(const ParamSet& params);
};

// Bias-corrected Adam update; lr = 0 leaves parameters bit-unchanged.
void adam_step(ParamSet& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps);

// Scales grads so their global L2 norm is at most max_norm (no-op if <= 0).
void clip_grad_norm(std::vector<Tensor>& grads, double max_norm);

// Mean loss over the batch's valid output frames plus parameter gradients
// (ParamSet order). Exposed for tests; train() drives it.
double batch_loss_and_grads(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                            const ParamSet& params, const std::vector<PatchSample>& batch,
                            std::vector<Tensor>& grads);

// Loss of a forward pass on one sequence against ground truth, valid frames
// only; the plain-evaluation twin of the tape path.
double sequence_loss(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                     const ParamSet& params, const Tensor& blur, const Tensor& sharp);

// Full training state for exact resumption (float64 container on disk).
struct TrainCheckpoint {
    ModelConfig model_cfg;
    TrainConfig train_cfg;
    ParamSet params;
    AdamState adam;
    int epoch = 0;  // epochs completed
    std::string rng_state;

    void save(const std::filesystem::path& path) const;
    static TrainCheckpoint load(const std::filesystem::path& path);
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double val_psnr = 0.0;
    bool has_val = false;
};

struct TrainResult {
    ParamSet params;
    std::vector<EpochLog> log;
    int epochs_done = 0;
};

// Optimizes over the dataset's train split. Writes metrics.csv, periodic
// checkpoint.bin (resumable) and model.estrnn (float32 export) under out_dir.
// Aborts with NumericError naming epoch/step if the loss turns non-finite.
TrainResult train(const TrainConfig& train_cfg, const ModelConfig& model_cfg, const Dataset& dataset,
                  const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& resume_from = std::nullopt,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    int n_sampled = 0;
    std::vector<std::string> families_covered;
};

// Central-difference verification of the analytic gradients on a micro model:
// |analytic - (f(x+h)-f(x-h))/2h| relative error, maximized over coordinates
// sampled from every layer family (dense conv, local fusion, gate linear,
// transposed conv). Double precision throughout.
GradCheckReport gradient_check(const ModelConfig& cfg, int n_samples, double h, std::uint64_t seed,
                               int frame_size = 16);

}  // namespace estrnn
