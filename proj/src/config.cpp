#include "estrnn/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "estrnn/errors.hpp"

namespace estrnn {

std::string ModelConfig::variant_name() const {
    std::ostringstream os;
    os << 'B' << n_blocks << 'C' << n_channels;
    return os.str();
}

std::string ModelConfig::frames_name() const {
    std::ostringstream os;
    os << 'F' << n_future << 'P' << n_past;
    return os.str();
}

ModelConfig ModelConfig::resolved() const {
    ModelConfig r = *this;
    r.growth_rate = growth();
    r.hidden_channels = hidden();
    return r;
}

void ModelConfig::validate() const {
    if (n_blocks < 1) throw ConfigError("model.n_blocks must be >= 1, got " + std::to_string(n_blocks));
    if (n_channels < 1) throw ConfigError("model.n_channels must be >= 1, got " + std::to_string(n_channels));
    if (growth_rate < 0) throw ConfigError("model.growth_rate must be >= 1 (or 0 for auto)");
    if (rdb_layers < 1) throw ConfigError("model.rdb_layers must be >= 1, got " + std::to_string(rdb_layers));
    if (n_past < 0) throw ConfigError("model.n_past must be >= 0, got " + std::to_string(n_past));
    if (n_future < 0) throw ConfigError("model.n_future must be >= 0, got " + std::to_string(n_future));
    if (use_gsa && !use_fusion) {
        throw ConfigError("model.use_gsa requires model.use_fusion: the attention module is part of "
                          "the neighbor-fusion path");
    }
    if (downsample_factor != 4) {
        throw ConfigError("model.downsample_factor is fixed at 4, got " + std::to_string(downsample_factor));
    }
    if (hidden_channels < 0) throw ConfigError("model.hidden_channels must be >= 1 (or 0 for auto)");
    if (se_reduction < 1) throw ConfigError("model.se_reduction must be >= 1, got " + std::to_string(se_reduction));
}

void ModelConfig::apply_variant(const std::string& name) {
    // Tokens: letter followed by digits, e.g. B9 C80 F2 P2.
    std::size_t i = 0;
    if (name.empty()) throw ConfigError("empty architecture name");
    while (i < name.size()) {
        const char tag = static_cast<char>(std::toupper(static_cast<unsigned char>(name[i])));
        ++i;
        std::size_t j = i;
        while (j < name.size() && std::isdigit(static_cast<unsigned char>(name[j]))) ++j;
        if (j == i) throw ConfigError("bad architecture name '" + name + "': expected digits after '" + tag + "'");
        const int v = std::stoi(name.substr(i, j - i));
        switch (tag) {
            case 'B': n_blocks = v; break;
            case 'C': n_channels = v; break;
            case 'F': n_future = v; break;
            case 'P': n_past = v; break;
            default:
                throw ConfigError("bad architecture name '" + name + "': unknown tag '" +
                                  std::string(1, tag) + "' (expected B/C/F/P)");
        }
        i = j;
    }
    validate();
}

}  // namespace estrnn
