// Command-line front end. Everything goes through the C interface so this
// binary exercises exactly what library consumers get.
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "cseg.h"

namespace {

int exit_code(cseg_status status) {
    if (status == CSEG_OK) return 0;
    std::fprintf(stderr, "cseg: error: %s\n", cseg_last_error());
    return status == CSEG_ERR_INTERNAL ? 2 : 1;
}

int bm_mode_from(const std::string& name) {
    return name == "as-printed" ? CSEG_BM_AS_PRINTED : CSEG_BM_MONOTONE_DECREASING;
}

const char* opt_str(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Background subtraction: adaptive background modeling, patch "
                 "network segmentation, and change-detection evaluation"};
    app.require_subcommand(1);

    const auto bm_values = CLI::IsMember({"monotone-decreasing", "as-printed"});

    // build-bg ----------------------------------------------------------
    auto* build = app.add_subcommand(
        "build-bg", "Run the background model over a frame directory and emit "
                    "background images plus a motion log");
    std::string bb_root, bb_out, bb_state, bb_mode = "monotone-decreasing";
    int bb_every = 1;
    double bb_tau = 0.08;
    build->add_option("--root", bb_root, "directory of input frames")->required();
    build->add_option("--out", bb_out, "output directory")->required();
    build->add_option("--every", bb_every, "write every Nth background")
        ->check(CLI::PositiveNumber);
    build->add_option("--tau", bb_tau, "naive segmenter threshold");
    build->add_option("--bm-mode", bb_mode, "memory-length interpretation")->check(bm_values);
    build->add_option("--state-out", bb_state, "write the final model state here");

    // train -------------------------------------------------------------
    auto* train = app.add_subcommand(
        "train", "Prepare samples from a dataset tree (or load a prepared "
                 "store) and train the patch network");
    std::string tr_root, tr_store, tr_store_out, tr_model, tr_history;
    std::string tr_mode = "monotone-decreasing";
    unsigned tr_seed = 0;
    int tr_epochs = 10, tr_batch = 150, tr_threads = 0;
    int tr_train_frames = 150, tr_val_frames = 20, tr_stride = 10, tr_max_patches = 0;
    int tr_height = 0, tr_width = 0;
    double tr_lr = 2.5e-3, tr_tau = 0.08;
    bool tr_verbose = false;
    train->add_option("--root", tr_root, "dataset tree (category/video layout)");
    train->add_option("--store", tr_store, "previously prepared sample store");
    train->add_option("--out", tr_model, "model output path")->required();
    train->add_option("--history", tr_history, "loss history path (default: <out>.history)");
    train->add_option("--store-out", tr_store_out, "save the prepared samples here");
    train->add_option("--seed", tr_seed, "RNG seed");
    train->add_option("--epochs", tr_epochs, "training epochs")->check(CLI::PositiveNumber);
    train->add_option("--batch", tr_batch, "mini-batch size")->check(CLI::PositiveNumber);
    train->add_option("--lr", tr_lr, "learning rate");
    train->add_option("--bm-mode", tr_mode, "memory-length interpretation")->check(bm_values);
    train->add_option("--tau", tr_tau, "naive segmenter threshold");
    train->add_option("--threads", tr_threads, "worker threads (0 = auto)");
    train->add_option("--train-frames", tr_train_frames, "training frames per video");
    train->add_option("--val-frames", tr_val_frames, "validation frames per video");
    train->add_option("--patch-stride", tr_stride, "patch grid spacing inside a frame");
    train->add_option("--max-patches", tr_max_patches,
                      "patch cap per frame (0 = keep all)");
    train->add_option("--height", tr_height, "resample frames to this height (0 = native)");
    train->add_option("--width", tr_width, "resample frames to this width (0 = native)");
    train->add_flag("--verbose", tr_verbose, "per-epoch progress on stderr");

    // segment -----------------------------------------------------------
    auto* segment = app.add_subcommand(
        "segment", "Segment a frame directory against the adaptive background "
                   "and write bin%06d.png masks");
    std::string sg_root, sg_model, sg_out, sg_mode = "monotone-decreasing";
    double sg_threshold = 0.3, sg_tau = 0.08;
    int sg_median = 9, sg_threads = 0, sg_height = 0, sg_width = 0;
    segment->add_option("--root", sg_root, "directory of input frames")->required();
    segment->add_option("--model", sg_model, "trained model file")->required();
    segment->add_option("--out", sg_out, "mask output directory")->required();
    segment->add_option("--threshold", sg_threshold, "foreground probability threshold");
    segment->add_option("--median", sg_median, "median filter kernel (1 disables)");
    segment->add_option("--bm-mode", sg_mode, "memory-length interpretation")->check(bm_values);
    segment->add_option("--tau", sg_tau, "naive segmenter threshold");
    segment->add_option("--threads", sg_threads, "worker threads (0 = auto)");
    segment->add_option("--height", sg_height, "run the network at this height (0 = native)");
    segment->add_option("--width", sg_width, "run the network at this width (0 = native)");

    // evaluate ----------------------------------------------------------
    auto* evaluate = app.add_subcommand(
        "evaluate", "Score predicted masks against a dataset tree's ground "
                    "truth and print the metric table");
    std::string ev_root, ev_masks, ev_txt, ev_json;
    evaluate->add_option("--root", ev_root, "dataset tree with ground truth")->required();
    evaluate->add_option("--masks", ev_masks, "mask tree (<masks>/<category>/<video>)")
        ->required();
    evaluate->add_option("--report-txt", ev_txt, "also write the table here");
    evaluate->add_option("--report-json", ev_json, "also write a JSON report here");

    // bench -------------------------------------------------------------
    auto* bench = app.add_subcommand(
        "bench", "Measure background-model, network and full-pipeline throughput");
    std::string bn_model;
    unsigned bn_seed = 0;
    int bn_height = 240, bn_width = 320, bn_frames = 50, bn_repeats = 3, bn_threads = 0;
    bench->add_option("--model", bn_model, "model file (default: fresh network)");
    bench->add_option("--height", bn_height, "frame height");
    bench->add_option("--width", bn_width, "frame width");
    bench->add_option("--frames", bn_frames, "frames per timed pass")
        ->check(CLI::PositiveNumber);
    bench->add_option("--repeats", bn_repeats, "timed passes per stage")
        ->check(CLI::PositiveNumber);
    bench->add_option("--threads", bn_threads, "worker threads (0 = auto)");
    bench->add_option("--seed", bn_seed, "scene RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (build->parsed()) {
        cseg_build_bg_options opt;
        cseg_build_bg_options_init(&opt);
        opt.frames_dir = bb_root.c_str();
        opt.out_dir = bb_out.c_str();
        opt.every = bb_every;
        opt.bm_mode = bm_mode_from(bb_mode);
        opt.naive_tau = bb_tau;
        opt.state_out = opt_str(bb_state);
        return exit_code(cseg_run_build_bg(&opt));
    }

    if (train->parsed()) {
        cseg_train_options opt;
        cseg_train_options_init(&opt);
        opt.root = opt_str(tr_root);
        opt.store = opt_str(tr_store);
        opt.model_out = tr_model.c_str();
        opt.history_out = opt_str(tr_history);
        opt.store_out = opt_str(tr_store_out);
        opt.seed = tr_seed;
        opt.epochs = tr_epochs;
        opt.batch = tr_batch;
        opt.lr = tr_lr;
        opt.bm_mode = bm_mode_from(tr_mode);
        opt.naive_tau = tr_tau;
        opt.threads = tr_threads;
        opt.train_frames_per_video = tr_train_frames;
        opt.val_frames_per_video = tr_val_frames;
        opt.patch_stride = tr_stride;
        opt.max_patches_per_frame = tr_max_patches;
        opt.target_height = tr_height;
        opt.target_width = tr_width;
        opt.quiet = tr_verbose ? 0 : 1;
        return exit_code(cseg_run_train(&opt));
    }

    if (segment->parsed()) {
        cseg_segment_options opt;
        cseg_segment_options_init(&opt);
        opt.frames_dir = sg_root.c_str();
        opt.model = sg_model.c_str();
        opt.out_dir = sg_out.c_str();
        opt.threshold = static_cast<float>(sg_threshold);
        opt.median = sg_median;
        opt.bm_mode = bm_mode_from(sg_mode);
        opt.naive_tau = sg_tau;
        opt.threads = sg_threads;
        opt.target_height = sg_height;
        opt.target_width = sg_width;
        return exit_code(cseg_run_segment(&opt));
    }

    if (evaluate->parsed()) {
        cseg_evaluate_options opt;
        cseg_evaluate_options_init(&opt);
        opt.root = ev_root.c_str();
        opt.masks = ev_masks.c_str();
        opt.report_txt = opt_str(ev_txt);
        opt.report_json = opt_str(ev_json);
        char* report = nullptr;
        const cseg_status status = cseg_run_evaluate(&opt, &report);
        if (status == CSEG_OK && report) std::fputs(report, stdout);
        cseg_free(report);
        return exit_code(status);
    }

    if (bench->parsed()) {
        cseg_bench_options opt;
        cseg_bench_options_init(&opt);
        opt.model = opt_str(bn_model);
        opt.height = bn_height;
        opt.width = bn_width;
        opt.frames = bn_frames;
        opt.repeats = bn_repeats;
        opt.threads = bn_threads;
        opt.seed = bn_seed;
        char* report = nullptr;
        const cseg_status status = cseg_run_bench(&opt, nullptr, &report);
        if (status == CSEG_OK && report) std::fputs(report, stdout);
        cseg_free(report);
        return exit_code(status);
    }

    return 1;  // unreachable: a subcommand is required
}
