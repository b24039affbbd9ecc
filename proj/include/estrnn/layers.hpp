#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "estrnn/config.hpp"

namespace estrnn {

enum class LayerKind { Conv, Conv1x1, Transposed, Linear };

// Spatial grid a layer's output lives on, relative to the input frame.
enum class LayerGrid { Full, Half, Quarter, None };

// One weighted layer of the model. This single description drives both the
// parameter registry (names and shapes) and the analytic cost model, so the
// two cannot drift apart.
struct LayerSpec {
    std::string name;  // parameter prefix; weight/bias live at name + ".weight"/".bias"
    LayerKind kind = LayerKind::Conv;
    int cin = 0;
    int cout = 0;
    int k = 1;
    int stride = 1;
    int pad = 0;
    LayerGrid grid = LayerGrid::Quarter;

    std::int64_t param_count() const;
    std::vector<int> weight_shape() const;
};

// Enumerates every weighted layer of the configured model, in registry order.
std::vector<LayerSpec> describe_layers(const ModelConfig& cfg);

}  // namespace estrnn
