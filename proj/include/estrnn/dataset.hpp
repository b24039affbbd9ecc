#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "estrnn/blur.hpp"
#include "estrnn/rng.hpp"
#include "estrnn/tensor.hpp"
#include "estrnn/video.hpp"

namespace estrnn {

// Handle to one paired sequence inside a synthesized dataset.
struct SequenceRef {
    std::string name;
    std::filesystem::path blur_dir;
    std::filesystem::path sharp_dir;
    int frames = 0;

    Tensor load_frame(bool blur, int t) const;                 // [3,H,W]
    VideoTensor load_range(bool blur, int t0, int count) const;  // [count,3,H,W]
};

// Read-side view of the on-disk dataset layout (manifest.json + split dirs).
class Dataset {
public:
    static Dataset open(const std::filesystem::path& root);

    const std::filesystem::path& root() const { return root_; }
    const DatasetManifest& manifest() const { return manifest_; }

    // Throws ConfigError for an unknown split name.
    std::vector<SequenceRef> split(const std::string& name) const;

private:
    std::filesystem::path root_;
    DatasetManifest manifest_;
};

// A training sample: aligned [T,3,patch,patch] crops of both streams with the
// same random window, crop offset, and flips.
struct PatchSample {
    Tensor blur;
    Tensor sharp;
};

PatchSample sample_subsequence_patch(const SequenceRef& seq, int subseq_len, int patch,
                                     bool flip_augment, Rng& rng);

// In-place spatial flips of a [T,C,H,W] stack (used jointly on both streams).
void flip_horizontal(Tensor& video);
void flip_vertical(Tensor& video);

}  // namespace estrnn
