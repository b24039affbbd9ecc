#include "estrnn/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>

#include "estrnn/blur.hpp"
#include "estrnn/config_io.hpp"
#include "estrnn/dataset.hpp"
#include "estrnn/errors.hpp"
#include "estrnn/evaluate.hpp"
#include "estrnn/image_io.hpp"
#include "estrnn/model.hpp"
#include "estrnn/train.hpp"

namespace fs = std::filesystem;

namespace estrnn::cli {

namespace {

std::pair<std::string, std::string> split_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + kv + "' must look like section.key=value");
    }
    return {kv.substr(0, eq), kv.substr(eq + 1)};
}

std::pair<std::string, std::string> split_section(const std::string& key) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        throw ConfigError("override key '" + key + "' needs a section prefix "
                          "(model. / train. / synthesis.)");
    }
    return {key.substr(0, dot), key.substr(dot + 1)};
}

}  // namespace

ResolvedConfig parse_config(const fs::path& path, const std::vector<std::string>& overrides) {
    Json file = Json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path.string() + "'");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (!text.empty() && text.find_first_not_of(" \t\r\n") != std::string::npos) {
            file = Json::parse(text, nullptr, false);
            if (file.is_discarded()) throw ConfigError("config file '" + path.string() + "' is not valid JSON");
            if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
        }
    }
    for (const auto& [section, body] : file.items()) {
        if (section != "model" && section != "train" && section != "synthesis") {
            throw ConfigError("unknown config section '" + section +
                              "' (valid sections: model, train, synthesis)");
        }
        (void)body;
    }

    // The recipe decides the training defaults, so resolve it before anything
    // else: override wins over file wins over "synthetic".
    std::string recipe = "synthetic";
    if (file.contains("train") && file["train"].contains("recipe")) {
        if (!file["train"]["recipe"].is_string()) throw ConfigError("train.recipe: expected string");
        recipe = file["train"]["recipe"].get<std::string>();
    }
    for (const auto& kv : overrides) {
        const auto [key, value] = split_override(kv);
        if (key == "train.recipe") recipe = value;
    }

    ResolvedConfig cfg;
    cfg.train = TrainConfig::defaults(recipe);
    if (file.contains("model")) config_apply_json(cfg.model, file["model"], "model");
    if (file.contains("train")) config_apply_json(cfg.train, file["train"], "train");
    if (file.contains("synthesis")) config_apply_json(cfg.synthesis, file["synthesis"], "synthesis");

    for (const auto& kv : overrides) {
        const auto [key, value] = split_override(kv);
        const auto [section, field] = split_section(key);
        if (section == "model") {
            config_apply_override(cfg.model, field, value, "model");
        } else if (section == "train") {
            config_apply_override(cfg.train, field, value, "train");
        } else if (section == "synthesis") {
            config_apply_override(cfg.synthesis, field, value, "synthesis");
        } else {
            throw ConfigError("unknown config section '" + section +
                              "' in override '" + kv + "' (valid sections: model, train, synthesis)");
        }
    }

    cfg.model.validate();
    cfg.train.validate(cfg.model.min_seq_len());
    cfg.synthesis.validate();
    return cfg;
}

namespace {

void write_snapshot(const ResolvedConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Json j;
    j["model"] = config_to_json(cfg.model.resolved());
    j["train"] = config_to_json(cfg.train);
    j["synthesis"] = config_to_json(cfg.synthesis);
    std::ofstream out(out_dir / "resolved_config.json");
    if (!out) throw IoError("cannot write resolved config under '" + out_dir.string() + "'");
    out << j.dump(2) << '\n';
}

ResolvedConfig load_config(const Invocation& inv) {
    ResolvedConfig cfg = parse_config(inv.config_path, inv.overrides);
    if (inv.seed) {
        cfg.train.seed = *inv.seed;
        cfg.synthesis.seed = *inv.seed;
    }
    return cfg;
}

void require_output(const Invocation& inv) {
    if (inv.output.empty()) throw ConfigError("--output is required");
}

std::pair<int, int> parse_resolution(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw ConfigError("resolution '" + s + "' must look like 1280x720");
    try {
        const int w = std::stoi(s.substr(0, x));
        const int h = std::stoi(s.substr(x + 1));
        if (w <= 0 || h <= 0) throw std::invalid_argument("");
        return {w, h};
    } catch (const std::exception&) {
        throw ConfigError("resolution '" + s + "' must look like 1280x720");
    }
}

Boundary parse_boundary(const std::string& s) {
    if (s == "valid") return Boundary::Valid;
    if (s == "replicate") return Boundary::Replicate;
    throw ConfigError("boundary '" + s + "' must be 'valid' or 'replicate'");
}

std::string frame_file(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08d.png", index);
    return buf;
}

int cmd_synthesize(const Invocation& inv) {
    require_output(inv);
    ResolvedConfig cfg = load_config(inv);
    write_snapshot(cfg, inv.output);

    fs::path highfps = inv.input;
    if (!inv.toy.empty()) {
        int dims[4];
        int pos = 0;
        std::size_t start = 0;
        for (; pos < 4; ++pos) {
            const std::size_t x = inv.toy.find('x', start);
            const std::string tok =
                (x == std::string::npos) ? inv.toy.substr(start) : inv.toy.substr(start, x - start);
            try {
                dims[pos] = std::stoi(tok);
            } catch (const std::exception&) {
                dims[pos] = 0;
            }
            if (dims[pos] <= 0) throw ConfigError("--toy must look like SEQSxFRAMESxHxW, e.g. 2x96x64x64");
            if (x == std::string::npos) break;
            start = x + 1;
        }
        if (pos != 3) throw ConfigError("--toy must look like SEQSxFRAMESxHxW, e.g. 2x96x64x64");
        highfps = inv.output / "_highfps";
        generate_toy_highfps(highfps, dims[0], dims[1], dims[2], dims[3], cfg.synthesis.seed);
    }
    if (highfps.empty()) throw ConfigError("synthesize needs --input (high-fps sequences) or --toy");

    DatasetManifest manifest = build_dataset(highfps, cfg.synthesis, inv.output);
    for (const auto& [split, entries] : manifest.splits) {
        int pairs = 0;
        for (const auto& e : entries) pairs += e.frames;
        std::cout << split << ": " << entries.size() << " sequences, " << pairs << " pairs\n";
    }
    for (const auto& w : manifest.warnings) std::cout << "warning: " << w << '\n';
    return 0;
}

int cmd_train(const Invocation& inv) {
    require_output(inv);
    if (inv.input.empty()) throw ConfigError("train needs --input pointing at a dataset root");
    ResolvedConfig cfg = load_config(inv);
    write_snapshot(cfg, inv.output);
    Dataset dataset = Dataset::open(inv.input);
    dataset.manifest().validate_files(inv.input);
    std::optional<fs::path> resume;
    if (!inv.checkpoint.empty()) resume = inv.checkpoint;
    TrainResult result =
        train(cfg.train, cfg.model, dataset, inv.output, resume, [](const EpochLog& row) {
            std::cout << "epoch " << row.epoch << " lr " << row.lr << " loss " << row.loss;
            if (row.has_val) std::cout << " val_psnr " << row.val_psnr;
            std::cout << '\n';
        });
    std::cout << "trained " << result.epochs_done << " epochs; model at "
              << (inv.output / "model.estrnn").string() << '\n';
    return 0;
}

int cmd_deblur(const Invocation& inv) {
    require_output(inv);
    if (inv.checkpoint.empty()) throw ConfigError("deblur needs --checkpoint (model.estrnn)");
    if (inv.input.empty()) throw ConfigError("deblur needs --input (dataset root or frame directory)");
    ResolvedConfig snapshot = load_config(inv);
    auto [params, model_cfg] = ParamSet::load(inv.checkpoint);
    snapshot.model = model_cfg;
    write_snapshot(snapshot, inv.output);
    const Boundary boundary = parse_boundary(inv.boundary);

    struct Job {
        std::string name;
        fs::path dir;  // directory of PNG frames
    };
    std::vector<Job> jobs;
    if (fs::exists(inv.input / "manifest.json")) {
        Dataset dataset = Dataset::open(inv.input);
        for (const SequenceRef& seq : dataset.split(inv.split)) {
            jobs.push_back({seq.name, seq.blur_dir});
        }
    } else if (fs::is_directory(inv.input)) {
        jobs.push_back({inv.input.filename().string(), inv.input});
    } else {
        throw IoError("input '" + inv.input.string() + "' not found");
    }

    for (const Job& job : jobs) {
        std::vector<fs::path> files;
        for (const auto& f : fs::directory_iterator(job.dir)) {
            if (f.path().extension() == ".png") files.push_back(f.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw IoError("no PNG frames in '" + job.dir.string() + "'");
        Tensor first = read_png(files[0]);
        Tensor video({static_cast<int>(files.size()), 3, first.dim(1), first.dim(2)});
        const std::int64_t per = first.size();
        std::copy(first.data(), first.data() + per, video.data());
        for (std::size_t i = 1; i < files.size(); ++i) {
            Tensor frame = read_png(files[i]);
            if (frame.size() != per) throw IoError("frame size changes at '" + files[i].string() + "'");
            std::copy(frame.data(), frame.data() + per, video.data() + static_cast<std::int64_t>(i) * per);
        }
        auto out = run_sequence(model_cfg, params, video, boundary);
        const fs::path seq_out = inv.output / job.name;
        fs::create_directories(seq_out);
        for (std::size_t k = 0; k < out.frames.size(); ++k) {
            write_png(seq_out / frame_file(out.t_lo + static_cast<int>(k)), out.frames[k]);
        }
        std::cout << job.name << ": wrote " << out.frames.size() << " frames (t " << out.t_lo << ".."
                  << out.t_hi << ")\n";
    }
    return 0;
}

int cmd_eval(const Invocation& inv) {
    require_output(inv);
    if (inv.checkpoint.empty()) throw ConfigError("eval needs --checkpoint (model.estrnn)");
    if (inv.input.empty()) throw ConfigError("eval needs --input (dataset root)");
    ResolvedConfig snapshot = load_config(inv);
    auto [params, model_cfg] = ParamSet::load(inv.checkpoint);
    snapshot.model = model_cfg;
    write_snapshot(snapshot, inv.output);
    Dataset dataset = Dataset::open(inv.input);
    EvalReport report =
        evaluate_dataset(model_cfg, params, dataset, inv.split, parse_boundary(inv.boundary));
    write_eval_csv(report, inv.output / "metrics.csv");
    std::cout << "split " << inv.split << ": mean PSNR " << report.mean_psnr << " dB, mean SSIM "
              << report.mean_ssim << " (blur baseline " << report.blur_mean_psnr << " dB / "
              << report.blur_mean_ssim << ")\n";
    return 0;
}

BenchReport profile_report(const Invocation& inv, const ResolvedConfig& cfg) {
    const auto [width, height] = parse_resolution(inv.resolution);
    BenchReport report;
    report.hardware = hardware_description();
    report.height = height;
    report.width = width;

    struct Entry {
        std::string label;
        ModelConfig model;
        ParamSet params;
        bool has_params = false;
    };
    std::vector<Entry> entries;
    for (const std::string& arch : inv.archs) {
        Entry e;
        e.model = cfg.model;
        e.model.apply_variant(arch);
        e.label = e.model.variant_name() + "-" + e.model.frames_name();
        entries.push_back(std::move(e));
    }
    for (const fs::path& ck : inv.checkpoints) {
        Entry e;
        auto [params, model_cfg] = ParamSet::load(ck);
        e.model = model_cfg;
        e.params = std::move(params);
        e.has_params = true;
        e.label = ck.stem().string() + "-" + e.model.variant_name();
        entries.push_back(std::move(e));
    }
    if (entries.empty()) {
        Entry e;
        e.model = cfg.model;
        e.label = e.model.variant_name() + "-" + e.model.frames_name();
        entries.push_back(std::move(e));
    }

    std::optional<Dataset> dataset;
    if (!inv.input.empty()) dataset = Dataset::open(inv.input);

    for (Entry& e : entries) {
        CostReport cost = macs_model(e.model, height, width);
        write_cost_csv(cost, inv.output / ("cost_" + e.label + ".csv"));
        BenchRow row;
        row.name = e.label;
        row.gmacs = cost.gmacs();
        row.mparams = cost.mparams();
        if (inv.benchmark) {
            if (!e.has_params) e.params = ParamSet::init(e.model, cfg.train.seed);
            row.ms_per_frame = benchmark_ms_per_frame(e.model, e.params, height, width, inv.bench_runs);
            row.fps = 1000.0 / row.ms_per_frame;
        }
        if (dataset && e.has_params) {
            EvalReport ev = evaluate_dataset(e.model, e.params, *dataset, inv.split);
            row.psnr = ev.mean_psnr;
            row.ssim = ev.mean_ssim;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

int cmd_profile(const Invocation& inv) {
    require_output(inv);
    ResolvedConfig cfg = load_config(inv);
    write_snapshot(cfg, inv.output);
    BenchReport report = profile_report(inv, cfg);
    write_efficiency_csv(report, inv.output / "efficiency.csv");
    write_scatter_csv(report, inv.output / "scatter.csv");
    for (const BenchRow& row : report.rows) {
        std::cout << row.name << ": " << row.gmacs << " GMACs, " << row.mparams << " M params";
        if (row.ms_per_frame > 0) std::cout << ", " << row.ms_per_frame << " ms/frame (" << row.fps << " fps)";
        if (row.psnr) std::cout << ", PSNR " << *row.psnr;
        std::cout << '\n';
    }
    return 0;
}

// "60..90:5" or "a,b,c" -> expansion; otherwise the single value.
std::vector<std::string> expand_values(const std::string& value) {
    const auto dots = value.find("..");
    if (dots != std::string::npos) {
        const auto colon = value.find(':', dots);
        try {
            const int lo = std::stoi(value.substr(0, dots));
            const int hi = std::stoi(value.substr(dots + 2, colon == std::string::npos
                                                                ? std::string::npos
                                                                : colon - dots - 2));
            const int step = colon == std::string::npos ? 1 : std::stoi(value.substr(colon + 1));
            if (step < 1 || hi < lo) throw std::invalid_argument("");
            std::vector<std::string> out;
            for (int v = lo; v <= hi; v += step) out.push_back(std::to_string(v));
            return out;
        } catch (const std::exception&) {
            throw ConfigError("bad range override '" + value + "' (expected lo..hi:step)");
        }
    }
    if (value.find(',') != std::string::npos) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (true) {
            const auto comma = value.find(',', start);
            out.push_back(value.substr(start, comma == std::string::npos ? std::string::npos
                                                                         : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    }
    return {value};
}

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    }
    return out;
}

int cmd_sweep(const Invocation& inv) {
    require_output(inv);
    static const std::set<std::string> kTargets = {"profile", "train", "eval", "synthesize", "deblur"};
    if (!kTargets.count(inv.sweep_target)) {
        throw ConfigError("sweep target '" + inv.sweep_target +
                          "' must be one of profile, train, eval, synthesize, deblur");
    }
    // Cartesian expansion of the list-valued overrides, in the given order.
    std::vector<std::vector<std::string>> combos = {{}};
    std::vector<std::string> swept_keys;
    for (const auto& kv : inv.overrides) {
        const auto [key, value] = split_override(kv);
        const std::vector<std::string> values = expand_values(value);
        if (values.size() > 1) swept_keys.push_back(key);
        std::vector<std::vector<std::string>> next;
        for (const auto& combo : combos) {
            for (const auto& v : values) {
                auto extended = combo;
                extended.push_back(key + "=" + v);
                next.push_back(std::move(extended));
            }
        }
        combos = std::move(next);
    }

    BenchReport merged;
    bool merged_meta = false;
    for (const auto& combo : combos) {
        Invocation sub = inv;
        sub.subcommand = inv.sweep_target;
        sub.overrides = combo;
        sub.sweep_target.clear();
        std::string label;
        for (const auto& kv : combo) {
            const auto [key, value] = split_override(kv);
            if (std::find(swept_keys.begin(), swept_keys.end(), key) == swept_keys.end()) continue;
            if (!label.empty()) label += "_";
            label += sanitize(key + "=" + value);
        }
        if (label.empty()) label = "run";
        sub.output = inv.output / label;
        std::cout << "[sweep] " << label << '\n';
        if (inv.sweep_target == "profile") {
            ResolvedConfig cfg = load_config(sub);
            fs::create_directories(sub.output);
            write_snapshot(cfg, sub.output);
            BenchReport report = profile_report(sub, cfg);
            write_efficiency_csv(report, sub.output / "efficiency.csv");
            write_scatter_csv(report, sub.output / "scatter.csv");
            if (!merged_meta) {
                merged.hardware = report.hardware;
                merged.height = report.height;
                merged.width = report.width;
                merged_meta = true;
            }
            for (BenchRow row : report.rows) {
                row.name = label + "/" + row.name;
                merged.rows.push_back(std::move(row));
            }
        } else {
            const int rc = run(sub);
            if (rc != 0) return rc;
        }
    }
    if (inv.sweep_target == "profile") {
        write_efficiency_csv(merged, inv.output / "efficiency.csv");
        write_scatter_csv(merged, inv.output / "scatter.csv");
    }
    return 0;
}

}  // namespace

int run(const Invocation& inv) {
    try {
        if (inv.subcommand == "synthesize") return cmd_synthesize(inv);
        if (inv.subcommand == "train") return cmd_train(inv);
        if (inv.subcommand == "deblur") return cmd_deblur(inv);
        if (inv.subcommand == "eval") return cmd_eval(inv);
        if (inv.subcommand == "profile") return cmd_profile(inv);
        if (inv.subcommand == "sweep") return cmd_sweep(inv);
        throw ConfigError("unknown subcommand '" + inv.subcommand + "'");
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace estrnn::cli
