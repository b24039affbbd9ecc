#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "estrnn/rng.hpp"
#include "estrnn/synth_config.hpp"
#include "estrnn/tensor.hpp"
#include "estrnn/video.hpp"

namespace estrnn {

enum class CrfDirection { Encode, Linearize };

// Camera response handling: gamma encode x -> x^(1/gamma) or linearize
// x -> x^gamma (identity CRF passes values through). Values must be in [0,1].
VideoTensor crf_transform(const VideoTensor& img, const SynthesisConfig& cfg, CrfDirection dir);

// Averages an encoded [N,3,H,W] window in linear space, re-encodes, then adds
// Gaussian noise (sigma in encoded space) clamped to [0,1].
Tensor synthesize_blur(const VideoTensor& subframes, const SynthesisConfig& cfg, Rng& rng);

// The window's sharp partner: subframe at the center-aligned exposure index.
Tensor select_center_sharp(const VideoTensor& subframes, const SynthesisConfig& cfg);

struct SequenceEntry {
    std::string name;
    int frames = 0;  // number of (blur, sharp) pairs
};

// On-disk dataset description. Layout per sequence:
//   <root>/<split>/<name>/blur/%08d.png  and  .../sharp/%08d.png
struct DatasetManifest {
    int format_version = 1;
    int height = 0;
    int width = 0;
    std::string blur_dir = "blur";
    std::string sharp_dir = "sharp";
    SynthesisConfig synthesis;
    std::map<std::string, std::vector<SequenceEntry>> splits;  // train/validation/test
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);

    void save(const std::filesystem::path& root) const;
    static DatasetManifest load(const std::filesystem::path& root);

    // Checks that every listed blur frame has a sharp partner on disk.
    void validate_files(const std::filesystem::path& root) const;

    int total_pairs() const;
};

// Number of sliding windows of width n advanced by stride over total frames.
int window_count(int total_frames, int n, int stride);

// Builds the paired dataset from a directory of high-fps sequences (one
// subdirectory of PNG frames per sequence). Sequences shorter than the window
// are skipped with a warning recorded in the manifest. Sequences fan out
// across threads bounded by ESTRNN_THREADS.
DatasetManifest build_dataset(const std::filesystem::path& highfps_dir, const SynthesisConfig& cfg,
                              const std::filesystem::path& out_root);

// Procedural high-fps footage (moving anti-aliased shapes over a gradient
// background) for demos and desk-scale experiments. Writes
// <dir>/seq%03d/%08d.png and returns the frame size used.
void generate_toy_highfps(const std::filesystem::path& dir, int n_sequences, int n_frames,
                          int height, int width, std::uint64_t seed);

}  // namespace estrnn
