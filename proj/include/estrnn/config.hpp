#pragma once

#include <string>

namespace estrnn {

// Architecture hyperparameters. Variants are named "B{n_blocks}C{n_channels}"
// plus "F{n_future}P{n_past}" for the temporal fusion window.
struct ModelConfig {
    int n_blocks = 9;
    int n_channels = 80;
    int growth_rate = 0;   // 0 = auto: n_channels / 2 (cost-calibrated default)
    int rdb_layers = 3;    // dense conv layers per block
    int n_past = 2;
    int n_future = 2;
    bool use_fusion = true;
    bool use_rdb_cell = true;
    bool use_gsa = true;
    int downsample_factor = 4;  // fixed by the architecture
    int hidden_channels = 0;    // 0 = auto: n_channels
    int se_reduction = 4;       // bottleneck ratio of the attention gate
    bool global_skip = false;   // add the input frame to the reconstruction

    int growth() const { return growth_rate > 0 ? growth_rate : std::max(1, n_channels / 2); }
    int hidden() const { return hidden_channels > 0 ? hidden_channels : n_channels; }
    int gate_mid() const { return std::max(1, 2 * n_channels / se_reduction); }
    int n_neighbors() const { return n_past + n_future; }
    int min_seq_len() const { return n_past + n_future + 1; }

    std::string variant_name() const;  // "B9C80"
    std::string frames_name() const;   // "F2P2"

    // Resolved copy: auto fields made explicit, for snapshots and checkpoints.
    ModelConfig resolved() const;

    // Throws ConfigError naming the offending field.
    void validate() const;

    // Parses "B9C80", "F2P2" or a combination like "B9C80F2P2" into overrides
    // on top of *this.
    void apply_variant(const std::string& name);

    bool operator==(const ModelConfig&) const = default;
};

}  // namespace estrnn
