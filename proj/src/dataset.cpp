#include "estrnn/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "estrnn/errors.hpp"
#include "estrnn/image_io.hpp"

namespace fs = std::filesystem;

namespace estrnn {

namespace {

std::string frame_file(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08d.png", index);
    return buf;
}

}  // namespace

Tensor SequenceRef::load_frame(bool blur, int t) const {
    if (t < 0 || t >= frames) {
        throw IoError("sequence '" + name + "': frame " + std::to_string(t) + " out of range [0," +
                      std::to_string(frames) + ")");
    }
    return read_png((blur ? blur_dir : sharp_dir) / frame_file(t));
}

VideoTensor SequenceRef::load_range(bool blur, int t0, int count) const {
    if (count < 1 || t0 < 0 || t0 + count > frames) {
        throw IoError("sequence '" + name + "': range [" + std::to_string(t0) + "," +
                      std::to_string(t0 + count) + ") outside [0," + std::to_string(frames) + ")");
    }
    Tensor first = load_frame(blur, t0);
    VideoTensor out{Tensor({count, first.dim(0), first.dim(1), first.dim(2)}), ColorSpace::Encoded};
    const std::int64_t per = first.size();
    std::copy(first.data(), first.data() + per, out.data.data());
    for (int k = 1; k < count; ++k) {
        Tensor frame = load_frame(blur, t0 + k);
        if (frame.size() != per) {
            throw IoError("sequence '" + name + "': frame size changes at index " + std::to_string(t0 + k));
        }
        std::copy(frame.data(), frame.data() + per, out.data.data() + k * per);
    }
    return out;
}

Dataset Dataset::open(const fs::path& root) {
    Dataset d;
    d.root_ = root;
    d.manifest_ = DatasetManifest::load(root);
    return d;
}

std::vector<SequenceRef> Dataset::split(const std::string& name) const {
    auto it = manifest_.splits.find(name);
    if (it == manifest_.splits.end()) {
        std::string known;
        for (const auto& [k, v] : manifest_.splits) {
            if (!known.empty()) known += ", ";
            known += k;
        }
        throw ConfigError("unknown split '" + name + "' (dataset has: " + known + ")");
    }
    std::vector<SequenceRef> out;
    out.reserve(it->second.size());
    for (const auto& e : it->second) {
        const fs::path seq = root_ / name / e.name;
        out.push_back({e.name, seq / manifest_.blur_dir, seq / manifest_.sharp_dir, e.frames});
    }
    return out;
}

void flip_horizontal(Tensor& video) {
    const int w = video.dim(video.ndim() - 1);
    const std::int64_t rows = video.size() / w;
    for (std::int64_t r = 0; r < rows; ++r) {
        double* row = video.data() + r * w;
        std::reverse(row, row + w);
    }
}

void flip_vertical(Tensor& video) {
    const int w = video.dim(video.ndim() - 1);
    const int h = video.dim(video.ndim() - 2);
    const std::int64_t planes = video.size() / (static_cast<std::int64_t>(h) * w);
    for (std::int64_t p = 0; p < planes; ++p) {
        double* plane = video.data() + p * h * w;
        for (int y = 0; y < h / 2; ++y) {
            std::swap_ranges(plane + static_cast<std::int64_t>(y) * w, plane + static_cast<std::int64_t>(y + 1) * w,
                             plane + static_cast<std::int64_t>(h - 1 - y) * w);
        }
    }
}

PatchSample sample_subsequence_patch(const SequenceRef& seq, int subseq_len, int patch,
                                     bool flip_augment, Rng& rng) {
    if (seq.frames < subseq_len) {
        throw ShapeError("sequence '" + seq.name + "' has " + std::to_string(seq.frames) +
                         " frames, shorter than subsequence length " + std::to_string(subseq_len));
    }
    const int t0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(seq.frames - subseq_len + 1)));
    VideoTensor blur = seq.load_range(true, t0, subseq_len);
    VideoTensor sharp = seq.load_range(false, t0, subseq_len);
    const int h = blur.height();
    const int w = blur.width();
    if (patch > h || patch > w) {
        throw ShapeError("patch " + std::to_string(patch) + " exceeds frame size " + std::to_string(h) +
                         "x" + std::to_string(w));
    }
    const int y0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(h - patch + 1)));
    const int x0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(w - patch + 1)));

    auto crop = [&](const VideoTensor& v) {
        Tensor out({subseq_len, v.channels(), patch, patch});
        for (int t = 0; t < subseq_len; ++t) {
            for (int c = 0; c < v.channels(); ++c) {
                for (int y = 0; y < patch; ++y) {
                    const double* src = v.data.data() +
                                        ((static_cast<std::int64_t>(t) * v.channels() + c) * h + (y0 + y)) * w + x0;
                    double* dst = out.data() +
                                  ((static_cast<std::int64_t>(t) * v.channels() + c) * patch + y) * patch;
                    std::copy(src, src + patch, dst);
                }
            }
        }
        return out;
    };

    PatchSample sample{crop(blur), crop(sharp)};
    if (flip_augment) {
        if (rng.bernoulli()) {
            flip_horizontal(sample.blur);
            flip_horizontal(sample.sharp);
        }
        if (rng.bernoulli()) {
            flip_vertical(sample.blur);
            flip_vertical(sample.sharp);
        }
    }
    return sample;
}

}  // namespace estrnn
