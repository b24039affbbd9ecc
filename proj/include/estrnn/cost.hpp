#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "estrnn/config.hpp"
#include "estrnn/layers.hpp"

namespace estrnn {

// Multiply-accumulate count of one layer evaluated once per frame.
// Convention: 1 MAC = one multiply-accumulate (not 2 FLOPs); bias adds and
// activations are excluded. Transposed convolutions are counted at their
// output resolution; linear layers run once per frame regardless of size.
std::uint64_t macs_conv_layer(LayerKind kind, int cin, int cout, int k, int stride, int hout,
                              int wout);

struct LayerCost {
    std::string name;
    std::string kind;
    std::uint64_t macs = 0;
    std::uint64_t params = 0;
};

struct CostReport {
    std::string config_name;
    int height = 0;
    int width = 0;
    std::vector<LayerCost> layers;
    std::uint64_t total_macs = 0;
    std::uint64_t total_params = 0;
    double ms_per_frame = -1.0;  // < 0 when no wall-clock run was attached
    double fps = -1.0;

    double gmacs() const { return static_cast<double>(total_macs) * 1e-9; }
    double mparams() const { return static_cast<double>(total_params) * 1e-6; }
};

// Per-frame amortized cost of the configured model at the given resolution.
// Neighbor features are computed once per frame and reused by the fusion of
// nearby frames, so each cell layer and each attention branch counts once.
CostReport macs_model(const ModelConfig& cfg, int height, int width);

// CSV with one row per layer plus a total row; metadata in '#' comment lines.
void write_cost_csv(const CostReport& report, const std::filesystem::path& path);

}  // namespace estrnn
