#include "estrnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "estrnn/config_io.hpp"
#include "estrnn/errors.hpp"
#include "estrnn/graph.hpp"
#include "estrnn/losses.hpp"
#include "estrnn/metrics.hpp"
#include "estrnn/model.hpp"
#include "estrnn/parallel.hpp"
#include "estrnn/rng.hpp"
#include "estrnn/schedule.hpp"
#include "estrnn/serialize.hpp"

namespace fs = std::filesystem;

namespace estrnn {

void AdamState::init(const ParamSet& params) {
    m.clear();
    v.clear();
    t = 0;
    for (std::size_t i = 0; i < params.count(); ++i) {
        m.emplace_back(params.tensor(i).shape());
        v.emplace_back(params.tensor(i).shape());
    }
}

void adam_step(ParamSet& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.count(); ++i) {
        Tensor& p = params.tensor(i);
        const Tensor& g = grads[i];
        Tensor& mi = state.m[i];
        Tensor& vi = state.v[i];
        for (std::int64_t j = 0; j < p.size(); ++j) {
            mi[j] = beta1 * mi[j] + (1.0 - beta1) * g[j];
            vi[j] = beta2 * vi[j] + (1.0 - beta2) * g[j] * g[j];
            const double mhat = mi[j] / bc1;
            const double vhat = vi[j] / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void clip_grad_norm(std::vector<Tensor>& grads, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const Tensor& g : grads) {
        for (std::int64_t j = 0; j < g.size(); ++j) sq += g[j] * g[j];
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (Tensor& g : grads) g *= scale;
}

namespace {

Graph::Var frame_loss(Graph& graph, const TrainConfig& cfg, Graph::Var pred, Tensor gt) {
    if (cfg.loss == "charbonnier") return graph.charbonnier_vs(pred, std::move(gt), cfg.charbonnier_eps);
    return graph.mse_vs(pred, std::move(gt));
}

double plain_frame_loss(const TrainConfig& cfg, const Tensor& pred, const Tensor& gt) {
    if (cfg.loss == "charbonnier") return charbonnier_loss(pred, gt, cfg.charbonnier_eps);
    return mse_loss(pred, gt);
}

}  // namespace

double batch_loss_and_grads(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                            const ParamSet& params, const std::vector<PatchSample>& batch,
                            std::vector<Tensor>& grads) {
    if (batch.empty()) throw ConfigError("empty training batch");
    Graph graph;
    GraphCtx ctx(graph, params);
    Model<GraphCtx> model(ctx, model_cfg);
    std::vector<Graph::Var> losses;
    for (const PatchSample& sample : batch) {
        require_same_shape(sample.blur, sample.sharp, "training sample");
        auto out = forward_sequence(model, sample.blur);
        for (std::size_t i = 0; i < out.frames.size(); ++i) {
            const int t = out.t_lo + static_cast<int>(i);
            losses.push_back(frame_loss(graph, train_cfg, out.frames[i], slice_frame(sample.sharp, t)));
        }
    }
    const Graph::Var loss = graph.sum_scaled(losses, 1.0 / static_cast<double>(losses.size()));
    const double loss_value = graph.value(loss)[0];
    graph.backward(loss);

    grads.clear();
    grads.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        const Tensor* g = ctx.grad_of(params.name(i));
        grads.push_back(g ? *g : Tensor(params.tensor(i).shape()));
    }
    return loss_value;
}

double sequence_loss(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                     const ParamSet& params, const Tensor& blur, const Tensor& sharp) {
    auto out = run_sequence(model_cfg, params, blur);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.frames.size(); ++i) {
        const int t = out.t_lo + static_cast<int>(i);
        acc += plain_frame_loss(train_cfg, out.frames[i], slice_frame(sharp, t));
    }
    return acc / static_cast<double>(out.frames.size());
}

namespace {
constexpr char kCkptMagic[8] = {'E', 'S', 'T', 'R', 'N', 'N', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

void write_f64_tensor(std::ostream& out, const Tensor& t) {
    io::write_u32(out, static_cast<std::uint32_t>(t.ndim()));
    for (int d : t.shape()) io::write_u32(out, static_cast<std::uint32_t>(d));
    io::write_f64_array(out, t.data(), t.size());
}

Tensor read_f64_tensor(std::istream& in) {
    const std::uint32_t ndim = io::read_u32(in);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(io::read_u32(in));
    Tensor t(shape);
    io::read_f64_array(in, t.data(), t.size());
    return t;
}
}  // namespace

void TrainCheckpoint::save(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(kCkptMagic, sizeof(kCkptMagic));
    io::write_u32(out, kCkptVersion);
    io::write_string(out, config_to_json(model_cfg.resolved()).dump());
    io::write_string(out, config_to_json(train_cfg).dump());
    io::write_u32(out, static_cast<std::uint32_t>(epoch));
    io::write_string(out, rng_state);
    io::write_u64(out, static_cast<std::uint64_t>(adam.t));
    io::write_u32(out, static_cast<std::uint32_t>(params.count()));
    for (std::size_t i = 0; i < params.count(); ++i) {
        io::write_string(out, params.name(i));
        write_f64_tensor(out, params.tensor(i));
        write_f64_tensor(out, adam.m[i]);
        write_f64_tensor(out, adam.v[i]);
    }
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

TrainCheckpoint TrainCheckpoint::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open training checkpoint '" + path.string() + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCkptMagic, sizeof(kCkptMagic)) != 0) {
        throw IoError("'" + path.string() + "' is not a training checkpoint (bad magic)");
    }
    if (io::read_u32(in) != kCkptVersion) throw IoError("unsupported training checkpoint version");
    TrainCheckpoint ck;
    {
        Json mj = Json::parse(io::read_string(in));
        config_apply_json(ck.model_cfg, mj, "model");
        Json tj = Json::parse(io::read_string(in));
        config_apply_json(ck.train_cfg, tj, "train");
    }
    ck.epoch = static_cast<int>(io::read_u32(in));
    ck.rng_state = io::read_string(in);
    ck.adam.t = static_cast<std::int64_t>(io::read_u64(in));
    const std::uint32_t n = io::read_u32(in);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = io::read_string(in);
        ck.params.add(std::move(name), read_f64_tensor(in));
        ck.adam.m.push_back(read_f64_tensor(in));
        ck.adam.v.push_back(read_f64_tensor(in));
    }
    if (!in) throw IoError("truncated training checkpoint '" + path.string() + "'");
    return ck;
}

namespace {

// Center crop to dimensions divisible by 4 (validation runs on full frames).
Tensor center_crop_mod4(const Tensor& video) {
    const int h = video.dim(2);
    const int w = video.dim(3);
    const int ch = h - h % 4;
    const int cw = w - w % 4;
    if (ch == h && cw == w) return video;
    if (ch < 4 || cw < 4) throw ShapeError("frame too small to crop to a multiple of 4");
    const int y0 = (h - ch) / 2;
    const int x0 = (w - cw) / 2;
    Tensor out({video.dim(0), video.dim(1), ch, cw});
    for (int t = 0; t < video.dim(0); ++t) {
        for (int c = 0; c < video.dim(1); ++c) {
            for (int y = 0; y < ch; ++y) {
                const double* src = video.data() +
                                    ((static_cast<std::int64_t>(t) * video.dim(1) + c) * h + (y0 + y)) * w + x0;
                double* dst = out.data() + ((static_cast<std::int64_t>(t) * video.dim(1) + c) * ch + y) * cw;
                std::copy(src, src + cw, dst);
            }
        }
    }
    return out;
}

Tensor clamp01(Tensor t) {
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], 0.0, 1.0);
    return t;
}

double validation_psnr(const ModelConfig& model_cfg, const ParamSet& params,
                       const std::vector<SequenceRef>& sequences) {
    std::vector<double> per_seq(sequences.size(), 0.0);
    parallel_for(static_cast<int>(sequences.size()), env_thread_limit(), [&](int i) {
        const SequenceRef& seq = sequences[static_cast<std::size_t>(i)];
        const Tensor blur = center_crop_mod4(seq.load_range(true, 0, seq.frames).data);
        const Tensor sharp = center_crop_mod4(seq.load_range(false, 0, seq.frames).data);
        auto out = run_sequence(model_cfg, params, blur);
        double acc = 0.0;
        for (std::size_t k = 0; k < out.frames.size(); ++k) {
            const int t = out.t_lo + static_cast<int>(k);
            acc += psnr(clamp01(out.frames[k]), slice_frame(sharp, t));
        }
        per_seq[static_cast<std::size_t>(i)] = acc / static_cast<double>(out.frames.size());
    });
    double acc = 0.0;
    for (double v : per_seq) acc += v;
    return acc / static_cast<double>(per_seq.size());
}

void append_metric_row(std::ofstream& csv, const EpochLog& row) {
    csv << row.epoch << ',' << row.lr << ',' << row.loss << ',';
    if (row.has_val) csv << row.val_psnr;
    csv << '\n';
    csv.flush();
}

}  // namespace

TrainResult train(const TrainConfig& train_cfg, const ModelConfig& model_cfg, const Dataset& dataset,
                  const fs::path& out_dir, const std::optional<fs::path>& resume_from,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    model_cfg.validate();
    train_cfg.validate(model_cfg.min_seq_len());
    const std::vector<SequenceRef> train_seqs = dataset.split("train");
    if (train_seqs.empty()) throw ConfigError("dataset has no training sequences");
    std::vector<SequenceRef> val_seqs;
    if (dataset.manifest().splits.count("validation")) val_seqs = dataset.split("validation");

    fs::create_directories(out_dir);

    ParamSet params;
    AdamState adam;
    Rng rng(train_cfg.seed);
    int start_epoch = 0;
    if (resume_from) {
        TrainCheckpoint ck = TrainCheckpoint::load(*resume_from);
        if (!(ck.model_cfg.resolved() == model_cfg.resolved())) {
            throw ConfigError("resume checkpoint was trained with a different model config (" +
                              ck.model_cfg.variant_name() + " vs " + model_cfg.variant_name() + ")");
        }
        params = std::move(ck.params);
        adam = std::move(ck.adam);
        rng.restore(ck.rng_state);
        start_epoch = ck.epoch;
    } else {
        params = ParamSet::init(model_cfg, train_cfg.seed);
        adam.init(params);
    }

    const int steps_per_epoch =
        train_cfg.steps_per_epoch > 0 ? train_cfg.steps_per_epoch
                                      : std::max(1, static_cast<int>(train_seqs.size()));

    std::ofstream csv(out_dir / "metrics.csv", start_epoch > 0 ? std::ios::app : std::ios::trunc);
    if (!csv) throw IoError("cannot write metric log under '" + out_dir.string() + "'");
    if (start_epoch == 0) csv << "epoch,lr,loss,val_psnr\n";

    TrainResult result;
    std::vector<Tensor> grads;
    for (int epoch = start_epoch; epoch < train_cfg.epochs; ++epoch) {
        const double lr = lr_at(train_cfg, epoch);
        double epoch_loss = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            std::vector<PatchSample> batch;
            batch.reserve(static_cast<std::size_t>(train_cfg.batch_size));
            for (int b = 0; b < train_cfg.batch_size; ++b) {
                const auto& seq = train_seqs[rng.uniform_index(train_seqs.size())];
                batch.push_back(sample_subsequence_patch(seq, train_cfg.subseq_len, train_cfg.patch,
                                                         train_cfg.flip_augment, rng));
            }
            const double loss = batch_loss_and_grads(model_cfg, train_cfg, params, batch, grads);
            if (!std::isfinite(loss)) {
                throw NumericError("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + " step " + std::to_string(step));
            }
            clip_grad_norm(grads, train_cfg.grad_clip);
            adam_step(params, grads, adam, lr, train_cfg.beta1, train_cfg.beta2, train_cfg.adam_eps);
            epoch_loss += loss;
        }
        EpochLog row;
        row.epoch = epoch;
        row.lr = lr;
        row.loss = epoch_loss / steps_per_epoch;
        if (!val_seqs.empty() && train_cfg.val_every > 0 && (epoch + 1) % train_cfg.val_every == 0) {
            row.val_psnr = validation_psnr(model_cfg, params, val_seqs);
            row.has_val = true;
        }
        append_metric_row(csv, row);
        result.log.push_back(row);
        if (on_epoch) on_epoch(row);

        const bool last = epoch + 1 == train_cfg.epochs;
        if (last || (train_cfg.checkpoint_every > 0 && (epoch + 1) % train_cfg.checkpoint_every == 0)) {
            TrainCheckpoint ck;
            ck.model_cfg = model_cfg;
            ck.train_cfg = train_cfg;
            ck.params = params;
            ck.adam = adam;
            ck.epoch = epoch + 1;
            ck.rng_state = rng.state();
            ck.save(out_dir / "checkpoint.bin");
            ParamSet exported = params;
            for (std::size_t i = 0; i < exported.count(); ++i) quantize_to_f32(exported.tensor(i));
            exported.save(out_dir / "model.estrnn", model_cfg);
        }
    }
    result.params = std::move(params);
    result.epochs_done = train_cfg.epochs;
    return result;
}

namespace {

struct FamilyMatcher {
    const char* family;
    bool (*match)(const std::string&);
};

bool is_dense(const std::string& n) {
    return n.find(".dense[") != std::string::npos || n.find(".rb.conv[") != std::string::npos;
}
bool is_lfuse(const std::string& n) { return n.find(".lfuse.") != std::string::npos; }
bool is_gate(const std::string& n) { return n.find(".gate.fc[") != std::string::npos; }
bool is_deconv(const std::string& n) { return n.rfind("recon.up[", 0) == 0; }

}  // namespace

GradCheckReport gradient_check(const ModelConfig& cfg, int n_samples, double h, std::uint64_t seed,
                               int frame_size) {
    cfg.validate();
    if (n_samples < 4) throw ConfigError("gradient_check needs at least 4 samples");
    if (!cfg.use_rdb_cell || !cfg.use_gsa) {
        throw ConfigError("gradient_check covers the dense/lfuse/gate/deconv families; enable the "
                          "RDB cell and GSA");
    }

    const int t_len = cfg.min_seq_len();
    Rng rng(seed);
    ParamSet params = ParamSet::init(cfg, seed);

    Tensor video({t_len, 3, frame_size, frame_size});
    for (std::int64_t i = 0; i < video.size(); ++i) video[i] = rng.uniform();
    const int n_out = t_len - cfg.n_past - cfg.n_future;
    std::vector<Tensor> gt;
    for (int i = 0; i < n_out; ++i) {
        Tensor g({3, frame_size, frame_size});
        for (std::int64_t j = 0; j < g.size(); ++j) g[j] = rng.uniform();
        gt.push_back(std::move(g));
    }

    // Analytic gradients through the tape.
    Graph graph;
    GraphCtx ctx(graph, params);
    Model<GraphCtx> model(ctx, cfg);
    auto out = forward_sequence(model, video);
    std::vector<Graph::Var> losses;
    for (std::size_t i = 0; i < out.frames.size(); ++i) {
        losses.push_back(graph.mse_vs(out.frames[i], gt[i]));
    }
    const Graph::Var loss = graph.sum_scaled(losses, 1.0 / static_cast<double>(losses.size()));
    graph.backward(loss);

    auto eval_loss = [&](const ParamSet& p) {
        auto res = run_sequence(cfg, p, video);
        double acc = 0.0;
        for (std::size_t i = 0; i < res.frames.size(); ++i) acc += mse_loss(res.frames[i], gt[i]);
        return acc / static_cast<double>(res.frames.size());
    };

    const FamilyMatcher families[] = {
        {"dense conv", is_dense},
        {"local fusion", is_lfuse},
        {"gate linear", is_gate},
        {"transposed conv", is_deconv},
    };

    GradCheckReport report;
    const int per_family = (n_samples + 3) / 4;
    for (const auto& fam : families) {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < params.count(); ++i) {
            if (fam.match(params.name(i))) names.push_back(params.name(i));
        }
        if (names.empty()) throw ConfigError(std::string("no parameters in family ") + fam.family);
        report.families_covered.push_back(fam.family);
        int accepted = 0;
        int attempts = 0;
        while (accepted < per_family && attempts < per_family * 50) {
            ++attempts;
            const std::string& name = names[rng.uniform_index(names.size())];
            Tensor& tensor = params.at(name);
            const std::int64_t idx = static_cast<std::int64_t>(
                rng.uniform_index(static_cast<std::uint64_t>(tensor.size())));
            const Tensor* grad = ctx.grad_of(name);
            const double analytic = grad ? (*grad)[idx] : 0.0;
            if (!std::isfinite(analytic)) {
                throw NumericError("non-finite analytic gradient for parameter '" + name + "'");
            }
            const double saved = tensor[idx];
            auto central = [&](double step) {
                tensor[idx] = saved + step;
                const double lp = eval_loss(params);
                tensor[idx] = saved - step;
                const double lm = eval_loss(params);
                tensor[idx] = saved;
                return (lp - lm) / (2.0 * step);
            };
            const double numeric = central(h);
            // Finite differences estimate the derivative only on a locally
            // smooth neighborhood. If halving the step moves the estimate,
            // the interval straddles a ReLU kink; such draws carry no
            // information about the analytic gradient and are re-drawn.
            const double confirm = central(h / 2.0);
            const double drift = std::fabs(numeric - confirm) /
                                 std::max({std::fabs(numeric), std::fabs(confirm), 1e-6});
            if (drift > 1e-5) continue;
            const double rel = std::fabs(analytic - numeric) /
                               std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = name;
            }
            ++report.n_sampled;
            ++accepted;
        }
    }
    return report;
}

}  // namespace estrnn
