#include "estrnn/cost.hpp"

#include <fstream>

#include "estrnn/errors.hpp"

namespace estrnn {

std::uint64_t macs_conv_layer(LayerKind kind, int cin, int cout, int k, int stride, int hout,
                              int wout) {
    if (cin <= 0 || cout <= 0 || k <= 0 || stride <= 0) {
        throw ConfigError("macs_conv_layer: dimensions must be positive");
    }
    const auto ci = static_cast<std::uint64_t>(cin);
    const auto co = static_cast<std::uint64_t>(cout);
    switch (kind) {
        case LayerKind::Linear:
            return ci * co;
        case LayerKind::Conv:
        case LayerKind::Conv1x1:
        case LayerKind::Transposed:
            if (hout <= 0 || wout <= 0) throw ConfigError("macs_conv_layer: output size must be positive");
            return static_cast<std::uint64_t>(k) * k * ci * co * static_cast<std::uint64_t>(hout) *
                   static_cast<std::uint64_t>(wout);
    }
    return 0;
}

namespace {

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Conv1x1: return "conv1x1";
        case LayerKind::Transposed: return "transposed";
        case LayerKind::Linear: return "linear";
    }
    return "?";
}

}  // namespace

CostReport macs_model(const ModelConfig& cfg, int height, int width) {
    cfg.validate();
    if (height <= 0 || width <= 0 || height % 4 != 0 || width % 4 != 0) {
        throw ConfigError("macs_model: resolution " + std::to_string(width) + "x" +
                          std::to_string(height) + " must be positive and divisible by 4");
    }
    CostReport report;
    report.config_name = cfg.variant_name() + "-" + cfg.frames_name();
    report.height = height;
    report.width = width;
    for (const LayerSpec& layer : describe_layers(cfg)) {
        int hout = 0;
        int wout = 0;
        switch (layer.grid) {
            case LayerGrid::Full: hout = height; wout = width; break;
            case LayerGrid::Half: hout = height / 2; wout = width / 2; break;
            case LayerGrid::Quarter: hout = height / 4; wout = width / 4; break;
            case LayerGrid::None: hout = 1; wout = 1; break;
        }
        LayerCost c;
        c.name = layer.name;
        c.kind = kind_name(layer.kind);
        c.macs = macs_conv_layer(layer.kind, layer.cin, layer.cout, layer.k, layer.stride, hout, wout);
        c.params = static_cast<std::uint64_t>(layer.param_count());
        report.total_macs += c.macs;
        report.total_params += c.params;
        report.layers.push_back(std::move(c));
    }
    return report;
}

void write_cost_csv(const CostReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write cost report '" + path.string() + "'");
    out << "# config=" << report.config_name << " resolution=" << report.width << "x"
        << report.height << "\n";
    out << "layer,kind,macs,params\n";
    for (const LayerCost& c : report.layers) {
        out << c.name << ',' << c.kind << ',' << c.macs << ',' << c.params << '\n';
    }
    out << "total,," << report.total_macs << ',' << report.total_params << '\n';
    out << "# total_gmacs=" << report.gmacs() << " total_mparams=" << report.mparams() << "\n";
}

}  // namespace estrnn
