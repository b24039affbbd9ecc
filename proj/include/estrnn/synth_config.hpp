#pragma once

#include <cstdint>
#include <string>

namespace estrnn {

// Blur synthesis parameters: a sliding window of n_subframes consecutive
// high-fps frames is averaged in linear space to form one blurry frame; the
// window center provides the paired sharp frame.
struct SynthesisConfig {
    int n_subframes = 8;
    std::string crf = "gamma";  // identity | gamma
    double gamma = 2.2;
    int stride = 8;              // subframes advanced per output pair
    double noise_sigma = 0.0;    // Gaussian std in encoded RGB space
    std::string center_mode = "floor";  // floor | ceil pick for even windows
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
    std::uint64_t seed = 0;

    void validate() const;

    // Zero-based index of the sharp subframe within a window.
    int center_index() const;

    bool operator==(const SynthesisConfig&) const = default;
};

}  // namespace estrnn
