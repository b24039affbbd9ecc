#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "estrnn/cli.hpp"

namespace {

void add_common(CLI::App* cmd, estrnn::cli::Invocation& inv) {
    cmd->add_option("-c,--config", inv.config_path, "JSON config file");
    cmd->add_option("-s,--set", inv.overrides,
                    "Override a config field (section.key=value); repeatable. In sweep mode, "
                    "list values (60,70) or ranges (60..90:5) expand into one run each")
        ->take_all();
    cmd->add_option("-o,--output", inv.output, "Output directory (all artifacts land here)");
    std::uint64_t seed_storage = 0;
    cmd->add_option_function<std::uint64_t>(
           "--seed", [&inv](const std::uint64_t& v) { inv.seed = v; },
           "Seed for training / synthesis / benchmark init")
        ->expected(1);
    (void)seed_storage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ESTRNN video deblurring toolkit"};
    app.require_subcommand(1);

    estrnn::cli::Invocation inv;

    CLI::App* synth = app.add_subcommand("synthesize", "Build a paired blur/sharp dataset from high-fps footage");
    add_common(synth, inv);
    synth->add_option("-i,--input", inv.input, "Directory of high-fps sequences (one subdir of PNGs each)");
    synth->add_option("--toy", inv.toy, "Generate procedural footage first: SEQSxFRAMESxHxW, e.g. 2x96x64x64");

    CLI::App* train = app.add_subcommand("train", "Train a model on a synthesized dataset");
    add_common(train, inv);
    train->add_option("-i,--input", inv.input, "Dataset root (holds manifest.json)");
    train->add_option("--resume", inv.checkpoint, "Resume from a training checkpoint.bin");

    CLI::App* deblur = app.add_subcommand("deblur", "Deblur PNG sequences with a trained model");
    add_common(deblur, inv);
    deblur->add_option("-i,--input", inv.input, "Dataset root or a directory of PNG frames");
    deblur->add_option("--checkpoint", inv.checkpoint, "Model checkpoint (model.estrnn)");
    deblur->add_option("--split", inv.split, "Dataset split when --input is a dataset root");
    deblur->add_option("--boundary", inv.boundary, "valid (default) or replicate");

    CLI::App* eval = app.add_subcommand("eval", "PSNR/SSIM of a model over a dataset split");
    add_common(eval, inv);
    eval->add_option("-i,--input", inv.input, "Dataset root");
    eval->add_option("--checkpoint", inv.checkpoint, "Model checkpoint (model.estrnn)");
    eval->add_option("--split", inv.split, "Dataset split (default test)");
    eval->add_option("--boundary", inv.boundary, "valid (default) or replicate");

    CLI::App* profile = app.add_subcommand("profile", "Analytic GMACs/params and optional wall-clock benchmark");
    add_common(profile, inv);
    profile->add_option("--arch", inv.archs, "Architecture shorthand, repeatable (e.g. B9C80, B15C80F2P2)")
        ->take_all();
    profile->add_option("--checkpoint", inv.checkpoints, "Trained checkpoints to profile")->take_all();
    profile->add_option("--resolution", inv.resolution, "Frame size WxH (default 1280x720)");
    profile->add_flag("--benchmark", inv.benchmark, "Measure median wall-clock ms/frame");
    profile->add_option("--bench-runs", inv.bench_runs, "Timed runs for the median (default 20)");
    profile->add_option("-i,--input", inv.input, "Optional dataset root for PSNR/SSIM columns");
    profile->add_option("--split", inv.split, "Dataset split for the quality columns");

    CLI::App* sweep = app.add_subcommand("sweep", "Expand list-valued --set overrides into sequential runs");
    add_common(sweep, inv);
    sweep->add_option("target", inv.sweep_target, "Subcommand to run (profile, train, eval, synthesize, deblur)")
        ->required();
    sweep->add_option("-i,--input", inv.input, "Input forwarded to the target subcommand");
    sweep->add_option("--arch", inv.archs, "Architectures (profile target)")->take_all();
    sweep->add_option("--checkpoint", inv.checkpoints, "Checkpoints (profile target)")->take_all();
    sweep->add_option("--resolution", inv.resolution, "Frame size WxH");
    sweep->add_flag("--benchmark", inv.benchmark, "Benchmark flag for profile target");
    sweep->add_option("--bench-runs", inv.bench_runs, "Timed runs for the median");
    sweep->add_option("--split", inv.split, "Dataset split");
    sweep->add_option("--boundary", inv.boundary, "valid or replicate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return 2;
    }

    for (CLI::App* sub : {synth, train, deblur, eval, profile, sweep}) {
        if (sub->parsed()) {
            inv.subcommand = sub->get_name();
            break;
        }
    }
    return estrnn::cli::run(inv);
}
