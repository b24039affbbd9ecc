#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "estrnn/config.hpp"
#include "estrnn/cost.hpp"
#include "estrnn/dataset.hpp"
#include "estrnn/model.hpp"
#include "estrnn/params.hpp"

namespace estrnn {

struct SequenceMetrics {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
    double blur_psnr = 0.0;  // no-op baseline: input vs ground truth
    double blur_ssim = 0.0;
};

struct EvalReport {
    std::vector<SequenceMetrics> rows;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double blur_mean_psnr = 0.0;
    double blur_mean_ssim = 0.0;
};

// Deterministic per-sequence PSNR/SSIM of the model on a dataset split, plus
// the "Blur" bottom-score baseline. Outputs are clamped to [0,1] before
// scoring; sequences are evaluated in parallel (bounded by ESTRNN_THREADS).
EvalReport evaluate_dataset(const ModelConfig& cfg, const ParamSet& params, const Dataset& dataset,
                            const std::string& split, Boundary boundary = Boundary::Valid);

// CSV: name,psnr,ssim rows per sequence, then mean and blur_baseline rows.
void write_eval_csv(const EvalReport& report, const std::filesystem::path& path);

struct BenchRow {
    std::string name;
    double gmacs = 0.0;
    double mparams = 0.0;
    double ms_per_frame = 0.0;
    double fps = 0.0;
    std::optional<double> psnr;
    std::optional<double> ssim;
};

struct BenchReport {
    std::string hardware;
    int height = 0;
    int width = 0;
    std::vector<BenchRow> rows;
};

// Median wall-clock per output frame over `runs` timed passes after `warmup`
// discarded passes; single-threaded model evaluation.
double benchmark_ms_per_frame(const ModelConfig& cfg, const ParamSet& params, int height, int width,
                              int runs = 20, int warmup = 3);

std::string hardware_description();

// Efficiency table: analytic cost + parameter count per entry, wall clock if
// requested, PSNR/SSIM if a dataset split is supplied.
void write_efficiency_csv(const BenchReport& report, const std::filesystem::path& path);

// Plot-ready scatter data: log10_gmacs,psnr,label (PSNR blank when unknown).
void write_scatter_csv(const BenchReport& report, const std::filesystem::path& path);

}  // namespace estrnn
