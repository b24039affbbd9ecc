#include "estrnn/evaluate.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "estrnn/errors.hpp"
#include "estrnn/metrics.hpp"
#include "estrnn/parallel.hpp"
#include "estrnn/rng.hpp"

namespace fs = std::filesystem;

namespace estrnn {

namespace {

Tensor clamp01(Tensor t) {
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], 0.0, 1.0);
    return t;
}

// [count,C,H,W] stack of frames t0..t0+count-1 of a video.
Tensor stack_range(const Tensor& video, int t0, int count) {
    Tensor out({count, video.dim(1), video.dim(2), video.dim(3)});
    const std::int64_t per = out.size() / count;
    std::copy(video.data() + t0 * per, video.data() + (t0 + count) * per, out.data());
    return out;
}

}  // namespace

EvalReport evaluate_dataset(const ModelConfig& cfg, const ParamSet& params, const Dataset& dataset,
                            const std::string& split, Boundary boundary) {
    cfg.validate();
    const std::vector<SequenceRef> seqs = dataset.split(split);
    if (seqs.empty()) throw ConfigError("split '" + split + "' has no sequences");
    if (dataset.manifest().height % 4 != 0 || dataset.manifest().width % 4 != 0) {
        throw ConfigError("dataset resolution " + std::to_string(dataset.manifest().width) + "x" +
                          std::to_string(dataset.manifest().height) +
                          " is not divisible by 4; pad or crop the frames before evaluating");
    }

    EvalReport report;
    report.rows.resize(seqs.size());
    parallel_for(static_cast<int>(seqs.size()), env_thread_limit(), [&](int i) {
        const SequenceRef& seq = seqs[static_cast<std::size_t>(i)];
        const Tensor blur = seq.load_range(true, 0, seq.frames).data;
        const Tensor sharp = seq.load_range(false, 0, seq.frames).data;
        auto out = run_sequence(cfg, params, blur, boundary);
        const int n_out = static_cast<int>(out.frames.size());
        Tensor pred({n_out, 3, blur.dim(2), blur.dim(3)});
        const std::int64_t per = pred.size() / n_out;
        for (int k = 0; k < n_out; ++k) {
            Tensor f = clamp01(std::move(out.frames[static_cast<std::size_t>(k)]));
            std::copy(f.data(), f.data() + per, pred.data() + k * per);
        }
        const Tensor gt = stack_range(sharp, out.t_lo, n_out);
        const Tensor blur_in = stack_range(blur, out.t_lo, n_out);
        SequenceMetrics& row = report.rows[static_cast<std::size_t>(i)];
        row.name = seq.name;
        row.psnr = psnr(pred, gt);
        row.ssim = ssim(pred, gt);
        row.blur_psnr = psnr(blur_in, gt);
        row.blur_ssim = ssim(blur_in, gt);
    });

    for (const SequenceMetrics& row : report.rows) {
        report.mean_psnr += row.psnr;
        report.mean_ssim += row.ssim;
        report.blur_mean_psnr += row.blur_psnr;
        report.blur_mean_ssim += row.blur_ssim;
    }
    const double n = static_cast<double>(report.rows.size());
    report.mean_psnr /= n;
    report.mean_ssim /= n;
    report.blur_mean_psnr /= n;
    report.blur_mean_ssim /= n;
    return report;
}

void write_eval_csv(const EvalReport& report, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write metrics '" + path.string() + "'");
    out << "name,psnr,ssim\n";
    for (const SequenceMetrics& row : report.rows) {
        out << row.name << ',' << row.psnr << ',' << row.ssim << '\n';
    }
    out << "mean," << report.mean_psnr << ',' << report.mean_ssim << '\n';
    out << "blur_baseline," << report.blur_mean_psnr << ',' << report.blur_mean_ssim << '\n';
}

double benchmark_ms_per_frame(const ModelConfig& cfg, const ParamSet& params, int height, int width,
                              int runs, int warmup) {
    cfg.validate();
    if (runs < 1) throw ConfigError("benchmark needs at least one timed run");
    // Enough frames that several outputs amortize the recurrent warm-up.
    const int t_len = cfg.min_seq_len() + 4;
    Rng rng(1234);
    Tensor video({t_len, 3, height, width});
    for (std::int64_t i = 0; i < video.size(); ++i) video[i] = rng.uniform();

    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(runs));
    for (int r = 0; r < warmup + runs; ++r) {
        const auto start = std::chrono::steady_clock::now();
        auto out = run_sequence(cfg, params, video);
        const auto stop = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(stop - start).count() /
                          static_cast<double>(out.frames.size());
        if (r >= warmup) samples.push_back(ms);
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    return (n % 2 == 1) ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

std::string hardware_description() {
    utsname info{};
    std::string desc = "unknown";
    if (uname(&info) == 0) {
        desc = std::string(info.sysname) + " " + info.machine;
    }
    desc += ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads, CPU fp64 path";
    return desc;
}

void write_efficiency_csv(const BenchReport& report, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write efficiency report '" + path.string() + "'");
    out << "# hardware=" << report.hardware << " resolution=" << report.width << "x" << report.height
        << "\n";
    out << "name,gmacs,mparams,ms_per_frame,fps,psnr,ssim\n";
    for (const BenchRow& row : report.rows) {
        out << row.name << ',' << row.gmacs << ',' << row.mparams << ',';
        if (row.ms_per_frame > 0.0) {
            out << row.ms_per_frame << ',' << row.fps;
        } else {
            out << ',';
        }
        out << ',';
        if (row.psnr) out << *row.psnr;
        out << ',';
        if (row.ssim) out << *row.ssim;
        out << '\n';
    }
}

void write_scatter_csv(const BenchReport& report, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scatter data '" + path.string() + "'");
    out << "log10_gmacs,psnr,label\n";
    for (const BenchRow& row : report.rows) {
        out << std::log10(row.gmacs) << ',';
        if (row.psnr) out << *row.psnr;
        out << ',' << row.name << '\n';
    }
}

}  // namespace estrnn
