#include "estrnn/blur.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include "estrnn/errors.hpp"
#include "estrnn/image_io.hpp"
#include "estrnn/parallel.hpp"

namespace fs = std::filesystem;

namespace estrnn {

int env_thread_limit() {
    if (const char* env = std::getenv("ESTRNN_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int n, int max_threads, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min(n, max_threads));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

VideoTensor crf_transform(const VideoTensor& img, const SynthesisConfig& cfg, CrfDirection dir) {
    cfg.validate();
    for (std::int64_t i = 0; i < img.data.size(); ++i) {
        const double v = img.data[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw NumericError("crf_transform: pixel value " + std::to_string(v) + " outside [0,1]");
        }
    }
    const ColorSpace expected = (dir == CrfDirection::Encode) ? ColorSpace::Linear : ColorSpace::Encoded;
    if (img.space != expected) {
        throw ConfigError(std::string("crf_transform: ") +
                          (dir == CrfDirection::Encode ? "encode expects linear input"
                                                       : "linearize expects encoded input"));
    }
    VideoTensor out;
    out.data = img.data;
    out.space = (dir == CrfDirection::Encode) ? ColorSpace::Encoded : ColorSpace::Linear;
    if (cfg.crf == "gamma") {
        const double e = (dir == CrfDirection::Encode) ? 1.0 / cfg.gamma : cfg.gamma;
        for (std::int64_t i = 0; i < out.data.size(); ++i) out.data[i] = std::pow(out.data[i], e);
    }
    return out;
}

Tensor synthesize_blur(const VideoTensor& subframes, const SynthesisConfig& cfg, Rng& rng) {
    cfg.validate();
    validate_video(subframes, "synthesize_blur");
    if (subframes.space != ColorSpace::Encoded) {
        throw ConfigError("synthesize_blur expects encoded subframes");
    }
    const int n = subframes.frames();
    if (n != cfg.n_subframes) {
        throw ShapeError("synthesize_blur: got " + std::to_string(n) + " subframes, config says " +
                         std::to_string(cfg.n_subframes));
    }
    const VideoTensor linear = crf_transform(subframes, cfg, CrfDirection::Linearize);
    const std::int64_t per = linear.data.size() / n;
    Tensor mean({subframes.channels(), subframes.height(), subframes.width()});
    for (int t = 0; t < n; ++t) {
        const double* src = linear.data.data() + t * per;
        for (std::int64_t i = 0; i < per; ++i) mean[i] += src[i];
    }
    mean *= 1.0 / static_cast<double>(n);

    VideoTensor blur = crf_transform(single_frame_video(std::move(mean), ColorSpace::Linear), cfg,
                                     CrfDirection::Encode);
    Tensor out({subframes.channels(), subframes.height(), subframes.width()});
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = blur.data[i];
    if (cfg.noise_sigma > 0.0) {
        for (std::int64_t i = 0; i < out.size(); ++i) {
            out[i] = std::clamp(out[i] + cfg.noise_sigma * rng.normal(), 0.0, 1.0);
        }
    }
    return out;
}

Tensor select_center_sharp(const VideoTensor& subframes, const SynthesisConfig& cfg) {
    validate_video(subframes, "select_center_sharp");
    const int n = subframes.frames();
    const int idx = std::min(cfg.center_index(), n - 1);
    Tensor sharp({subframes.channels(), subframes.height(), subframes.width()});
    const std::int64_t per = sharp.size();
    const double* src = subframes.data.data() + idx * per;
    for (std::int64_t i = 0; i < per; ++i) sharp[i] = src[i];
    return sharp;
}

int window_count(int total_frames, int n, int stride) {
    if (n < 1 || stride < 1) throw ConfigError("window_count: n and stride must be >= 1");
    if (total_frames < n) return 0;
    return (total_frames - n) / stride + 1;
}

namespace {

std::string frame_file(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08d.png", index);
    return buf;
}

const std::vector<std::string> kSplitOrder = {"train", "validation", "test"};

}  // namespace

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json j;
    j["format_version"] = format_version;
    j["resolution"] = {{"height", height}, {"width", width}};
    j["blur_dir"] = blur_dir;
    j["sharp_dir"] = sharp_dir;
    j["synthesis"] = {{"n_subframes", synthesis.n_subframes},
                      {"crf", synthesis.crf},
                      {"gamma", synthesis.gamma},
                      {"stride", synthesis.stride},
                      {"noise_sigma", synthesis.noise_sigma},
                      {"center_mode", synthesis.center_mode},
                      {"train_frac", synthesis.train_frac},
                      {"val_frac", synthesis.val_frac},
                      {"test_frac", synthesis.test_frac},
                      {"seed", synthesis.seed}};
    nlohmann::json js = nlohmann::json::object();
    for (const auto& [split, entries] : splits) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : entries) arr.push_back({{"name", e.name}, {"frames", e.frames}});
        js[split] = std::move(arr);
    }
    j["splits"] = std::move(js);
    j["warnings"] = warnings;
    return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    m.height = j.at("resolution").at("height").get<int>();
    m.width = j.at("resolution").at("width").get<int>();
    m.blur_dir = j.at("blur_dir").get<std::string>();
    m.sharp_dir = j.at("sharp_dir").get<std::string>();
    const auto& s = j.at("synthesis");
    m.synthesis.n_subframes = s.at("n_subframes").get<int>();
    m.synthesis.crf = s.at("crf").get<std::string>();
    m.synthesis.gamma = s.at("gamma").get<double>();
    m.synthesis.stride = s.at("stride").get<int>();
    m.synthesis.noise_sigma = s.at("noise_sigma").get<double>();
    m.synthesis.center_mode = s.at("center_mode").get<std::string>();
    m.synthesis.train_frac = s.at("train_frac").get<double>();
    m.synthesis.val_frac = s.at("val_frac").get<double>();
    m.synthesis.test_frac = s.at("test_frac").get<double>();
    m.synthesis.seed = s.at("seed").get<std::uint64_t>();
    for (const auto& [split, arr] : j.at("splits").items()) {
        std::vector<SequenceEntry> entries;
        for (const auto& e : arr) {
            entries.push_back({e.at("name").get<std::string>(), e.at("frames").get<int>()});
        }
        m.splits[split] = std::move(entries);
    }
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    return m;
}

void DatasetManifest::save(const fs::path& root) const {
    fs::create_directories(root);
    std::ofstream out(root / "manifest.json");
    if (!out) throw IoError("cannot write manifest under '" + root.string() + "'");
    out << to_json().dump(2) << '\n';
}

DatasetManifest DatasetManifest::load(const fs::path& root) {
    fs::path file = fs::is_directory(root) ? root / "manifest.json" : root;
    std::ifstream in(file);
    if (!in) throw IoError("cannot open manifest '" + file.string() + "'");
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

void DatasetManifest::validate_files(const fs::path& root) const {
    for (const auto& [split, entries] : splits) {
        for (const auto& e : entries) {
            const fs::path blur = root / split / e.name / blur_dir;
            const fs::path sharp = root / split / e.name / sharp_dir;
            for (int i = 0; i < e.frames; ++i) {
                const std::string f = frame_file(i);
                if (!fs::exists(blur / f)) throw IoError("manifest mismatch: missing " + (blur / f).string());
                if (!fs::exists(sharp / f)) throw IoError("manifest mismatch: missing " + (sharp / f).string());
            }
        }
    }
}

int DatasetManifest::total_pairs() const {
    int n = 0;
    for (const auto& [split, entries] : splits) {
        for (const auto& e : entries) n += e.frames;
    }
    return n;
}

DatasetManifest build_dataset(const fs::path& highfps_dir, const SynthesisConfig& cfg,
                              const fs::path& out_root) {
    cfg.validate();
    if (!fs::is_directory(highfps_dir)) {
        throw IoError("high-fps input directory '" + highfps_dir.string() + "' not found");
    }

    struct SeqSource {
        std::string name;
        std::vector<fs::path> frames;
    };
    std::vector<SeqSource> sources;
    for (const auto& entry : fs::directory_iterator(highfps_dir)) {
        if (!entry.is_directory()) continue;
        SeqSource s;
        s.name = entry.path().filename().string();
        for (const auto& f : fs::directory_iterator(entry.path())) {
            if (f.path().extension() == ".png") s.frames.push_back(f.path());
        }
        std::sort(s.frames.begin(), s.frames.end());
        if (!s.frames.empty()) sources.push_back(std::move(s));
    }
    std::sort(sources.begin(), sources.end(),
              [](const SeqSource& a, const SeqSource& b) { return a.name < b.name; });
    if (sources.empty()) {
        throw IoError("no sequences (subdirectories with PNG frames) under '" + highfps_dir.string() + "'");
    }

    const int n_seq = static_cast<int>(sources.size());
    int n_train = static_cast<int>(std::lround(cfg.train_frac * n_seq));
    int n_val = static_cast<int>(std::lround(cfg.val_frac * n_seq));
    n_train = std::min(n_train, n_seq);
    n_val = std::min(n_val, n_seq - n_train);
    auto split_of = [&](int i) -> const std::string& {
        if (i < n_train) return kSplitOrder[0];
        if (i < n_train + n_val) return kSplitOrder[1];
        return kSplitOrder[2];
    };

    const Rng base(cfg.seed);
    struct SeqResult {
        std::string warning;
        SequenceEntry entry;
        int height = 0, width = 0;
        bool produced = false;
    };
    std::vector<SeqResult> results(sources.size());

    parallel_for(n_seq, env_thread_limit(), [&](int i) {
        const SeqSource& src = sources[static_cast<std::size_t>(i)];
        SeqResult& res = results[static_cast<std::size_t>(i)];
        const int total = static_cast<int>(src.frames.size());
        if (total < cfg.n_subframes) {
            res.warning = "sequence '" + src.name + "' skipped: " + std::to_string(total) +
                          " subframes < n_subframes " + std::to_string(cfg.n_subframes);
            return;
        }
        Rng rng = base.fork(static_cast<std::uint64_t>(i));
        const int pairs = window_count(total, cfg.n_subframes, cfg.stride);
        const fs::path seq_dir = out_root / split_of(i) / src.name;
        fs::create_directories(seq_dir / "blur");
        fs::create_directories(seq_dir / "sharp");
        for (int w = 0; w < pairs; ++w) {
            const int start = w * cfg.stride;
            Tensor first = read_png(src.frames[static_cast<std::size_t>(start)]);
            VideoTensor window{Tensor({cfg.n_subframes, 3, first.dim(1), first.dim(2)}),
                               ColorSpace::Encoded};
            const std::int64_t per = first.size();
            for (int k = 0; k < cfg.n_subframes; ++k) {
                Tensor frame = k == 0 ? std::move(first)
                                      : read_png(src.frames[static_cast<std::size_t>(start + k)]);
                if (frame.size() != per) {
                    throw IoError("sequence '" + src.name + "': frame size changes at " +
                                  src.frames[static_cast<std::size_t>(start + k)].string());
                }
                std::copy(frame.data(), frame.data() + per, window.data.data() + k * per);
            }
            Tensor blur = synthesize_blur(window, cfg, rng);
            Tensor sharp = select_center_sharp(window, cfg);
            write_png(seq_dir / "blur" / frame_file(w), blur);
            write_png(seq_dir / "sharp" / frame_file(w), sharp);
            if (w == 0) {
                res.height = window.height();
                res.width = window.width();
            }
        }
        res.entry = {src.name, pairs};
        res.produced = true;
    });

    DatasetManifest manifest;
    manifest.synthesis = cfg;
    for (const auto& split : kSplitOrder) manifest.splits[split] = {};
    for (int i = 0; i < n_seq; ++i) {
        const SeqResult& res = results[static_cast<std::size_t>(i)];
        if (!res.produced) {
            manifest.warnings.push_back(res.warning);
            continue;
        }
        if (manifest.height == 0) {
            manifest.height = res.height;
            manifest.width = res.width;
        } else if (manifest.height != res.height || manifest.width != res.width) {
            throw IoError("sequence '" + sources[static_cast<std::size_t>(i)].name +
                          "' resolution differs from the rest of the dataset");
        }
        manifest.splits[split_of(i)].push_back(res.entry);
    }
    if (manifest.total_pairs() == 0) {
        throw IoError("no sequence was long enough for n_subframes=" + std::to_string(cfg.n_subframes));
    }
    manifest.save(out_root);
    return manifest;
}

namespace {

// Smooth coverage of a disk edge, ~1.5 px anti-aliasing band.
double disk_coverage(double dist, double radius) {
    return std::clamp((radius - dist) / 1.5 + 0.5, 0.0, 1.0);
}

double torus_delta(double a, double b, double period) {
    double d = std::fabs(a - b);
    d = std::fmod(d, period);
    return std::min(d, period - d);
}

}  // namespace

void generate_toy_highfps(const fs::path& dir, int n_sequences, int n_frames, int height, int width,
                          std::uint64_t seed) {
    if (n_sequences < 1 || n_frames < 1) throw ConfigError("toy footage needs >= 1 sequence and frame");
    const Rng base(seed);
    fs::create_directories(dir);
    parallel_for(n_sequences, env_thread_limit(), [&](int s) {
        Rng rng = base.fork(static_cast<std::uint64_t>(s) + 1000);
        char name[16];
        std::snprintf(name, sizeof(name), "seq%03d", s);
        const fs::path seq_dir = dir / name;
        fs::create_directories(seq_dir);

        struct Disk {
            double x, y, vx, vy, r;
            double color[3];
        };
        std::vector<Disk> disks(4);
        for (Disk& d : disks) {
            d.x = rng.uniform(0.0, width);
            d.y = rng.uniform(0.0, height);
            // Fast enough that an 8-subframe window smears 8+ pixels.
            d.vx = (rng.bernoulli() ? 1.0 : -1.0) * rng.uniform(1.0, 2.2);
            d.vy = (rng.bernoulli() ? 1.0 : -1.0) * rng.uniform(1.0, 2.2);
            d.r = rng.uniform(0.1, 0.16) * std::min(width, height);
            for (double& c : d.color) c = rng.uniform(0.1, 0.95);
        }
        const double bg_fx = rng.uniform(1.0, 2.5);
        const double bg_fy = rng.uniform(1.0, 2.5);
        const double bg_phase = rng.uniform(0.0, 2.0 * M_PI);
        const double stripe_v = rng.uniform(1.2, 2.0);

        Tensor frame({3, height, width});
        for (int t = 0; t < n_frames; ++t) {
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) {
                    const double bx = std::sin(2.0 * M_PI * bg_fx * x / width + bg_phase);
                    const double by = std::sin(2.0 * M_PI * bg_fy * y / height);
                    double px[3];
                    for (int c = 0; c < 3; ++c) px[c] = 0.4 + 0.15 * bx * by + 0.05 * c;
                    const double sp = std::sin(2.0 * M_PI * (x + y) / 24.0 - stripe_v * t);
                    const double stripe = std::clamp((sp - 0.55) / 0.1, 0.0, 1.0);
                    px[1] += 0.25 * stripe;
                    px[2] += 0.15 * stripe;
                    for (const Disk& d : disks) {
                        const double dx = torus_delta(x, d.x + d.vx * t, width);
                        const double dy = torus_delta(y, d.y + d.vy * t, height);
                        const double cov = disk_coverage(std::sqrt(dx * dx + dy * dy), d.r);
                        if (cov > 0.0) {
                            for (int c = 0; c < 3; ++c) px[c] = px[c] * (1.0 - cov) + d.color[c] * cov;
                        }
                    }
                    for (int c = 0; c < 3; ++c) frame.at3(c, y, x) = std::clamp(px[c], 0.02, 0.98);
                }
            }
            write_png(seq_dir / frame_file(t), frame);
        }
    });
}

}  // namespace estrnn
