#include "estrnn/layers.hpp"

#include <algorithm>

#include "estrnn/errors.hpp"

namespace estrnn {

std::int64_t LayerSpec::param_count() const {
    const std::int64_t kk = (kind == LayerKind::Linear) ? 1 : static_cast<std::int64_t>(k) * k;
    return kk * cin * cout + cout;  // weight + bias
}

std::vector<int> LayerSpec::weight_shape() const {
    switch (kind) {
        case LayerKind::Linear:
            return {cout, cin};
        case LayerKind::Transposed:
            return {cin, cout, k, k};
        case LayerKind::Conv:
        case LayerKind::Conv1x1:
            return {cout, cin, k, k};
    }
    return {};
}

namespace {

void add_conv(std::vector<LayerSpec>& out, std::string name, int cin, int cout, int k, int stride,
              int pad, LayerGrid grid) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = (k == 1 && stride == 1) ? LayerKind::Conv1x1 : LayerKind::Conv;
    s.cin = cin;
    s.cout = cout;
    s.k = k;
    s.stride = stride;
    s.pad = pad;
    s.grid = grid;
    out.push_back(std::move(s));
}

void add_linear(std::vector<LayerSpec>& out, std::string name, int cin, int cout) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::Linear;
    s.cin = cin;
    s.cout = cout;
    s.grid = LayerGrid::None;
    out.push_back(std::move(s));
}

void add_deconv(std::vector<LayerSpec>& out, std::string name, int cin, int cout, LayerGrid grid) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::Transposed;
    s.cin = cin;
    s.cout = cout;
    s.k = 4;
    s.stride = 2;
    s.pad = 1;
    s.grid = grid;
    out.push_back(std::move(s));
}

// The feature-extraction block used throughout the cell: a residual dense
// block, or a plain two-conv residual block when the RDB cell is ablated.
void add_block(std::vector<LayerSpec>& out, const ModelConfig& cfg, const std::string& prefix,
               int channels, LayerGrid grid) {
    if (cfg.use_rdb_cell) {
        const int g = cfg.growth();
        for (int i = 0; i < cfg.rdb_layers; ++i) {
            add_conv(out, prefix + ".dense[" + std::to_string(i) + "]", channels + i * g, g, 3, 1, 1, grid);
        }
        add_conv(out, prefix + ".lfuse", channels + cfg.rdb_layers * g, channels, 1, 1, 0, grid);
    } else {
        add_conv(out, prefix + ".rb.conv[0]", channels, channels, 3, 1, 1, grid);
        add_conv(out, prefix + ".rb.conv[1]", channels, channels, 3, 1, 1, grid);
    }
}

}  // namespace

std::vector<LayerSpec> describe_layers(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<LayerSpec> out;
    const int c = cfg.n_channels;
    const int hid = cfg.hidden();

    // Recurrent cell: downsampler, embed fusion, block stack, global fusion,
    // hidden-state update.
    add_conv(out, "cell.down[0].conv", 3, c, 5, 2, 2, LayerGrid::Half);
    add_block(out, cfg, "cell.down[0].rdb", c, LayerGrid::Half);
    add_conv(out, "cell.down[1].conv", c, c, 5, 2, 2, LayerGrid::Quarter);
    add_block(out, cfg, "cell.down[1].rdb", c, LayerGrid::Quarter);
    add_conv(out, "cell.embed_fuse", c + hid, c, 1, 1, 0, LayerGrid::Quarter);
    for (int j = 0; j < cfg.n_blocks; ++j) {
        add_block(out, cfg, "cell.block[" + std::to_string(j) + "]", c, LayerGrid::Quarter);
    }
    add_conv(out, "cell.global_fuse", cfg.n_blocks * c, c, 1, 1, 0, LayerGrid::Quarter);
    add_conv(out, "cell.hidden.conv", c, hid, 3, 1, 1, LayerGrid::Quarter);
    add_block(out, cfg, "cell.hidden.rdb", hid, LayerGrid::Quarter);

    // Temporal fusion feeding the reconstructor.
    if (!cfg.use_fusion) {
        add_conv(out, "fusion.direct", c, c, 1, 1, 0, LayerGrid::Quarter);
    } else {
        if (cfg.use_gsa) {
            for (int n = 0; n < cfg.n_neighbors(); ++n) {
                const std::string b = "fusion.branch[" + std::to_string(n) + "]";
                add_linear(out, b + ".gate.fc[0]", 2 * c, cfg.gate_mid());
                add_linear(out, b + ".gate.fc[1]", cfg.gate_mid(), c);
                add_conv(out, b + ".proj[0]", 2 * c, c, 1, 1, 0, LayerGrid::Quarter);
                add_conv(out, b + ".proj[1]", c, c, 1, 1, 0, LayerGrid::Quarter);
            }
        }
        add_conv(out, "fusion.fuse", (cfg.n_neighbors() + 1) * c, c, 1, 1, 0, LayerGrid::Quarter);
    }

    // Reconstructor: two stride-2 transposed convs back to full resolution,
    // then projection to RGB.
    const int c2 = std::max(1, c / 2);
    const int c4 = std::max(1, c / 4);
    add_deconv(out, "recon.up[0]", c, c2, LayerGrid::Half);
    add_deconv(out, "recon.up[1]", c2, c4, LayerGrid::Full);
    add_conv(out, "recon.out", c4, 3, 3, 1, 1, LayerGrid::Full);
    return out;
}

}  // namespace estrnn
