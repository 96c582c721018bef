// checkout: retail-checkout counting pipeline command-line front end.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "checkout/background_roi.hpp"
#include "checkout/counting.hpp"
#include "checkout/dataset_prep.hpp"
#include "checkout/detection.hpp"
#include "checkout/error.hpp"
#include "checkout/evaluation.hpp"
#include "checkout/keyvalue.hpp"
#include "checkout/media.hpp"
#include "checkout/pipeline.hpp"
#include "checkout/simulator.hpp"
#include "checkout/tracker.hpp"

namespace fs = std::filesystem;
using namespace checkout;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitStage = 2;

// Named flags that map 1:1 onto pipeline config keys.
struct Overrides {
    std::map<std::string, std::string> values;
    std::vector<std::string> sets;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }

    KeyValues apply(KeyValues kv) const {
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw InputError("--set expects key=value, got " + s);
            kv.set(s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto& [k, v] : values) kv.set(k, v);
        return kv;
    }
};

std::vector<TrackUpdate> load_track_dump(const fs::path& path) {
    try {
        return parse_track_updates(read_text_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Region-based retail checkout counting pipeline"};
    app.require_subcommand(1);

    // roi
    auto* roi_cmd = app.add_subcommand("roi", "Estimate the background and extract the tray ROI");
    fs::path roi_seq, roi_out;
    RoiParams roi_params;
    roi_cmd->add_option("--seq", roi_seq, "Frame sequence directory")->required();
    roi_cmd->add_option("--out", roi_out, "Output directory")->required();
    roi_cmd->add_option("--fraction", roi_params.fraction, "Fraction of frames sampled for the median");
    roi_cmd->add_option("--k1", roi_params.k1, "Threshold constant K1");
    roi_cmd->add_option("--k2", roi_params.k2, "Threshold constant K2");
    roi_cmd->add_option("--seed", roi_params.seed, "Sampling seed");
    roi_cmd->add_option("--open-radius", roi_params.open_radius, "Opening radius (px)");
    roi_cmd->add_option("--close-radius", roi_params.close_radius, "Closing radius (px)");
    roi_cmd->add_flag("--invert", roi_params.invert, "Use the complement of the intensity band");

    // filter
    auto* filter_cmd = app.add_subcommand("filter", "Apply NMS and keep detections inside the ROI");
    fs::path filter_dets, filter_roi_dir, filter_out;
    double filter_nms = 0.5;
    RoiFilter filter_rule;
    filter_cmd->add_option("--dets", filter_dets, "Detection interchange file")->required();
    filter_cmd->add_option("--roi", filter_roi_dir, "ROI directory (roi.pgm, roi.meta)")->required();
    filter_cmd->add_option("--out", filter_out, "Filtered detection file")->required();
    filter_cmd->add_option("--nms", filter_nms, "NMS IoU threshold");
    filter_cmd->add_option("--min-overlap", filter_rule.min_overlap, "Area-overlap rule instead of box centre (0 = off)");

    // track
    auto* track_cmd = app.add_subcommand("track", "Track detections and dump per-frame track states");
    fs::path track_dets, track_out, track_config;
    int track_frames = 0;
    track_cmd->add_option("--dets", track_dets, "Detection interchange file")->required();
    track_cmd->add_option("--out", track_out, "Track dump file")->required();
    track_cmd->add_option("--config", track_config, "Tracker key=value config");
    track_cmd->add_option("--frames", track_frames, "Sequence length (default: through the last detection)");

    // count
    auto* count_cmd = app.add_subcommand("count", "Turn a track dump into count events and a submission");
    fs::path count_tracks_file, count_roi_dir, count_out, count_events;
    std::string count_fps = "30";
    int count_video = 1;
    CounterConfig count_cfg;
    count_cmd->add_option("--tracks", count_tracks_file, "Track dump file")->required();
    count_cmd->add_option("--roi", count_roi_dir, "ROI directory")->required();
    count_cmd->add_option("--out", count_out, "Submission file")->required();
    count_cmd->add_option("--fps", count_fps, "Frame rate, e.g. 30 or 30000/1001");
    count_cmd->add_option("--video-id", count_video, "Video id written to the submission");
    count_cmd->add_option("--merge-window", count_cfg.merge_window_s, "Same-class merge window in seconds (0 = off)");
    count_cmd->add_option("--events", count_events, "Also write the debug events CSV here");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run every stage and persist the artifacts");
    fs::path run_config;
    Overrides run_over;
    run_cmd->add_option("--config", run_config, "Pipeline key=value config file");
    run_over.add(run_cmd, "--seq", "seq", "Frame sequence directory");
    run_over.add(run_cmd, "--roi", "roi", "Precomputed ROI directory (skips background estimation)");
    run_over.add(run_cmd, "--dets", "dets", "Detection interchange file");
    run_over.add(run_cmd, "--out", "out", "Run directory");
    run_over.add(run_cmd, "--video-id", "video_id", "Video id");
    run_over.add(run_cmd, "--fps", "fps", "Frame rate when no sequence is given");
    run_over.add(run_cmd, "--fraction", "fraction", "Background sampling fraction");
    run_over.add(run_cmd, "--k1", "k1", "Threshold constant K1");
    run_over.add(run_cmd, "--k2", "k2", "Threshold constant K2");
    run_over.add(run_cmd, "--seed", "seed", "Sampling seed");
    run_over.add(run_cmd, "--nms", "nms", "NMS IoU threshold");
    run_cmd->add_flag_function("--invert", [&](std::int64_t) { run_over.values["invert"] = "1"; },
                               "Use the complement of the intensity band");
    run_cmd->add_flag_function("--track-global", [&](std::int64_t) { run_over.values["track_global"] = "1"; },
                               "Track all detections and count on ROI entry");
    run_cmd->add_option("--set", run_over.sets, "Override any config key (key=value), repeatable");

    // score
    auto* score_cmd = app.add_subcommand("score", "Score a submission against ground truth");
    fs::path score_sub, score_truth;
    bool per_video = false;
    score_cmd->add_option("--submission", score_sub, "Submission file")->required();
    score_cmd->add_option("--truth", score_truth, "Ground-truth intervals file")->required();
    score_cmd->add_flag("--per-video", per_video, "Also print one line per video");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic checkout scenario");
    fs::path sim_config, sim_out;
    sim_cmd->add_option("--config", sim_config, "Scenario key=value config file")->required();
    sim_cmd->add_option("--out", sim_out, "Output directory")->required();

    // prep
    auto* prep_cmd = app.add_subcommand("prep", "Extract boxes from masks and write augmented images");
    PrepOptions prep;
    std::vector<std::string> augs;
    prep_cmd->add_option("--images", prep.images_dir, "Image directory (PPM/PGM)")->required();
    prep_cmd->add_option("--masks", prep.masks_dir, "Mask directory (PGM, same stems)")->required();
    prep_cmd->add_option("--out", prep.out_dir, "Output directory")->required();
    prep_cmd->add_option("--mapping", prep.mapping_file, "mask_label=class_id mapping file");
    prep_cmd->add_option("--aug", augs, "Augmentations: mosaic,cutmix,blur,geo")->delimiter(',');
    prep_cmd->add_option("--seed", prep.seed, "Augmentation seed");
    prep_cmd->add_option("--mosaic-size", prep.mosaic_size, "Mosaic canvas side");
    prep_cmd->add_option("--blur-kernel", prep.blur_kernel, "Box blur kernel (odd)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*roi_cmd) {
            const auto seq = open_sequence(roi_seq);
            const auto r = compute_roi(seq, roi_params);
            fs::create_directories(roi_out);
            write_pnm(roi_out / "background.pgm", r.background.pixels);
            write_roi(roi_out, r.roi);
            std::cout << fmt::format("bounds=[{:.4f}, {:.4f}] bbox={},{},{},{} area={}\n", r.bounds.lower,
                                     r.bounds.upper, r.roi.bbox.x, r.roi.bbox.y, r.roi.bbox.w, r.roi.bbox.h,
                                     r.roi.area);
        } else if (*filter_cmd) {
            const auto dets = load_detections(filter_dets);
            const auto roi = read_roi(filter_roi_dir);
            const auto out = filter_roi(nms_all(dets, filter_nms), roi, filter_rule);
            write_text_file(filter_out, serialize_detections(out));
            std::cout << fmt::format("kept {} of {} detections\n", out.records.size(), dets.records.size());
        } else if (*track_cmd) {
            const auto cfg = track_config.empty() ? TrackerConfig{} : TrackerConfig::from(KeyValues::load(track_config));
            const auto dets = load_detections(track_dets);
            const auto updates = track_detections(dets, cfg, track_frames);
            write_text_file(track_out, serialize_track_updates(updates));
        } else if (*count_cmd) {
            const auto fps = Rational::parse(count_fps);
            if (fps.num <= 0 || fps.den <= 0) throw InputError("fps must be positive");
            const auto updates = load_track_dump(count_tracks_file);
            const auto roi = read_roi(count_roi_dir);
            const auto events = count_tracks(updates, roi, count_video, fps, count_cfg);
            write_text_file(count_out, write_submission(std::span<const CountEvent>(events)));
            if (!count_events.empty()) write_text_file(count_events, events_csv(events));
        } else if (*run_cmd) {
            KeyValues kv = run_config.empty() ? KeyValues{} : KeyValues::load(run_config);
            kv = run_over.apply(std::move(kv));
            const auto cfg = PipelineConfig::from(kv);
            const auto result = run_pipeline(cfg, &std::cerr);
            std::cout << result.submission;
        } else if (*score_cmd) {
            const auto records = parse_submission(read_text_file(score_sub));
            const auto truth = parse_truth(read_text_file(score_truth));
            if (per_video) {
                for (const auto& [video, tally] : match_per_video(records, truth)) {
                    std::cout << "video " << video << ": " << format_tally(tally) << "\n";
                }
            }
            std::cout << "TP FP FN F1\n" << format_tally(match(records, truth)) << "\n";
        } else if (*sim_cmd) {
            const auto cfg = ScenarioConfig::from(KeyValues::load(sim_config));
            const auto sc = write_scenario(cfg, sim_out);
            std::cout << fmt::format("{} frames, {} detections, {} objects\n", sc.meta.frame_count,
                                     sc.detections.records.size(), sc.truth.objects.size());
        } else if (*prep_cmd) {
            for (const auto& a : augs) {
                if (a == "mosaic") prep.mosaic = true;
                else if (a == "cutmix") prep.cutmix = true;
                else if (a == "blur") prep.blur = true;
                else if (a == "geo") prep.geo = true;
                else throw InputError("unknown augmentation '" + a + "'");
            }
            const int n = run_prep(prep);
            std::cout << "wrote " << n << " images\n";
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
