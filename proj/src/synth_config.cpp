#include "estrnn/synth_config.hpp"

#include <cmath>

#include "estrnn/errors.hpp"

namespace estrnn {

void SynthesisConfig::validate() const {
    if (n_subframes < 1) throw ConfigError("synthesis.n_subframes must be >= 1");
    if (crf != "identity" && crf != "gamma") {
        throw ConfigError("synthesis.crf must be 'identity' or 'gamma', got '" + crf + "'");
    }
    if (gamma <= 0.0) throw ConfigError("synthesis.gamma must be > 0");
    if (stride < 1) throw ConfigError("synthesis.stride must be >= 1");
    if (noise_sigma < 0.0) throw ConfigError("synthesis.noise_sigma must be >= 0");
    if (center_mode != "floor" && center_mode != "ceil") {
        throw ConfigError("synthesis.center_mode must be 'floor' or 'ceil', got '" + center_mode + "'");
    }
    if (train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0 ||
        std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
        throw ConfigError("synthesis split fractions must be nonnegative and sum to 1");
    }
}

int SynthesisConfig::center_index() const {
    // Exact for odd windows; even windows land half a subframe off center and
    // either neighbor is a valid pick.
    if (center_mode == "ceil") return n_subframes / 2;
    return (n_subframes - 1) / 2;
}

}  // namespace estrnn
