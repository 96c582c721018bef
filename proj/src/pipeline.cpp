#include "checkout/pipeline.hpp"

#include <chrono>
#include <future>
#include <ostream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "checkout/error.hpp"
#include "checkout/evaluation.hpp"

namespace checkout {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text_file(path)); }

PipelineConfig PipelineConfig::from(const KeyValues& kv) {
    PipelineConfig c;
    c.seq_dir = kv.get_string("seq", "");
    c.roi_dir = kv.get_string("roi", "");
    c.dets_file = kv.get_string("dets", "");
    c.out_dir = kv.get_string("out", "");
    c.video_id = static_cast<int>(kv.get_int("video_id", c.video_id));
    if (auto fps = kv.get("fps"); fps && !fps->empty()) {
        try {
            c.fps = Rational::parse(*fps);
        } catch (const FormatError& e) {
            throw InputError(std::string("config key 'fps': ") + e.what());
        }
    }
    c.roi.fraction = kv.get_double("fraction", c.roi.fraction);
    c.roi.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.roi.seed)));
    c.roi.k1 = kv.get_double("k1", c.roi.k1);
    c.roi.k2 = kv.get_double("k2", c.roi.k2);
    c.roi.invert = kv.get_bool("invert", c.roi.invert);
    c.roi.open_radius = static_cast<int>(kv.get_int("open_radius", c.roi.open_radius));
    c.roi.close_radius = static_cast<int>(kv.get_int("close_radius", c.roi.close_radius));
    c.nms_threshold = kv.get_double("nms", c.nms_threshold);
    c.roi_filter.min_overlap = kv.get_double("min_overlap", c.roi_filter.min_overlap);
    c.tracker = TrackerConfig::from(kv);
    c.counter.merge_window_s = kv.get_double("merge_window", c.counter.merge_window_s);
    c.track_global = kv.get_bool("track_global", c.track_global);
    return c;
}

KeyValues PipelineConfig::to_key_values() const {
    KeyValues kv;
    kv.set("seq", seq_dir.string());
    kv.set("roi", roi_dir.string());
    kv.set("dets", dets_file.string());
    kv.set("video_id", std::to_string(video_id));
    kv.set("fps", fps ? fps->str() : "");
    kv.set("fraction", format_shortest(roi.fraction));
    kv.set("seed", std::to_string(roi.seed));
    kv.set("k1", format_shortest(roi.k1));
    kv.set("k2", format_shortest(roi.k2));
    kv.set("invert", roi.invert ? "1" : "0");
    kv.set("open_radius", std::to_string(roi.open_radius));
    kv.set("close_radius", std::to_string(roi.close_radius));
    kv.set("nms", format_shortest(nms_threshold));
    kv.set("min_overlap", format_shortest(roi_filter.min_overlap));
    kv.set("n_init", std::to_string(tracker.n_init));
    kv.set("max_age", std::to_string(tracker.max_age));
    kv.set("budget", std::to_string(tracker.budget));
    kv.set("max_appearance_cost", format_shortest(tracker.max_appearance_cost));
    kv.set("max_iou_cost", format_shortest(tracker.max_iou_cost));
    kv.set("gate", format_shortest(tracker.gate));
    kv.set("merge_window", format_shortest(counter.merge_window_s));
    kv.set("track_global", track_global ? "1" : "0");
    return kv;
}

void PipelineConfig::validate() const {
    if (roi_dir.empty()) {
        if (seq_dir.empty()) throw InputError("roi: need a frame sequence (--seq) or a precomputed ROI (--roi)");
        if (!fs::exists(seq_dir / "sequence.meta")) throw InputError("roi: missing sequence.meta in " + seq_dir.string());
        if (!(roi.fraction > 0.0 && roi.fraction <= 1.0)) throw InputError("roi: fraction must be in (0, 1]");
        if (!(roi.k1 > 0.0) || !(roi.k2 > 0.0)) throw InputError("roi: k1 and k2 must be > 0");
        if (roi.open_radius < 0 || roi.close_radius < 0) throw InputError("roi: morphology radii must be >= 0");
    } else if (!fs::exists(roi_dir / "roi.pgm")) {
        throw InputError("roi: missing roi.pgm in " + roi_dir.string());
    }
    if (dets_file.empty()) throw InputError("detection: no detection file given");
    if (!fs::exists(dets_file)) throw InputError("detection: missing detection file " + dets_file.string());
    if (!(nms_threshold >= 0.0 && nms_threshold <= 1.0)) throw InputError("detection: nms threshold must be in [0, 1]");
    if (!(roi_filter.min_overlap >= 0.0 && roi_filter.min_overlap <= 1.0)) {
        throw InputError("detection: min_overlap must be in [0, 1]");
    }
    try {
        tracker.validate();
    } catch (const InputError& e) {
        throw InputError(std::string("tracking: ") + e.what());
    }
    if (counter.merge_window_s < 0.0) throw InputError("counting: merge_window must be >= 0");
    if (video_id < 1) throw InputError("counting: video_id must be >= 1");
    if (seq_dir.empty() && !fps) throw InputError("counting: fps is required when no frame sequence is given");
    if (fps && (fps->num <= 0 || fps->den <= 0)) throw InputError("counting: fps must be positive");
    if (out_dir.empty()) throw InputError("no output directory given");
}

namespace {

template <typename Fn>
auto run_stage(const std::string& name, std::vector<StageTiming>& timings, long long frames, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), frames});
        } else {
            auto out = fn();
            timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), frames});
            return out;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log) {
    config.validate();
    fs::create_directories(config.out_dir);
    PipelineResult result;
    auto& timings = result.timings;

    std::optional<FrameSequence> seq;
    if (!config.seq_dir.empty()) {
        seq = run_stage("roi", timings, 0, [&] { return open_sequence(config.seq_dir); });
    }
    const Rational fps = seq ? seq->meta().fps : *config.fps;

    // Stage 1: ROI, computed from the background or loaded.
    result.roi = run_stage("roi", timings, seq ? seq->meta().frame_count : 0, [&] {
        if (!config.roi_dir.empty()) return read_roi(config.roi_dir);
        RoiResult r = compute_roi(*seq, config.roi);
        write_pnm(config.out_dir / "background.pgm", r.background.pixels);
        return r.roi;
    });
    run_stage("roi", timings, 0, [&] { write_roi(config.out_dir / "roi", result.roi); });
    if (seq && (result.roi.bits.width != seq->meta().width || result.roi.bits.height != seq->meta().height)) {
        throw StageError("roi", "ROI mask size differs from the frame sequence");
    }

    // Stage 2: detections -> NMS -> ROI membership.
    DetectionSet raw = run_stage("detection", timings, 0, [&] { return load_detections(config.dets_file); });
    const int frame_count = seq ? seq->meta().frame_count : (raw.records.empty() ? 1 : raw.records.back().frame + 1);
    DetectionSet suppressed;
    DetectionSet filtered = run_stage("detection", timings, frame_count, [&] {
        if (!raw.records.empty() && raw.records.back().frame >= frame_count) {
            throw Error(fmt::format("detection frame {} beyond sequence length {}", raw.records.back().frame, frame_count));
        }
        suppressed = nms_all(raw, config.nms_threshold);
        auto out = filter_roi(suppressed, result.roi, config.roi_filter);
        write_text_file(config.out_dir / "filtered.txt", serialize_detections(out));
        return out;
    });

    // Stage 3: tracking.
    const auto updates = run_stage("tracking", timings, frame_count, [&] {
        auto u = track_detections(config.track_global ? suppressed : filtered, config.tracker, frame_count);
        write_text_file(config.out_dir / "tracks.txt", serialize_track_updates(u));
        return u;
    });

    // Stage 4: counting and submission.
    result.events = run_stage("counting", timings, frame_count, [&] {
        auto ev = count_tracks(updates, result.roi, config.video_id, fps, config.counter);
        write_text_file(config.out_dir / "events.csv", events_csv(ev));
        return ev;
    });
    result.submission = run_stage("submission", timings, 0, [&] {
        auto text = write_submission(std::span<const CountEvent>(result.events));
        write_text_file(config.out_dir / "submission.txt", text);
        return text;
    });

    run_stage("manifest", timings, 0, [&] {
        std::string manifest = "config_sha256=" + sha256_hex(config.to_key_values().dump()) + "\n";
        std::vector<std::pair<std::string, fs::path>> artifacts;
        if (config.roi_dir.empty()) artifacts.emplace_back("roi", "background.pgm");
        artifacts.emplace_back("roi", "roi/roi.pgm");
        artifacts.emplace_back("roi", "roi/roi.meta");
        artifacts.emplace_back("detection", "filtered.txt");
        artifacts.emplace_back("tracking", "tracks.txt");
        artifacts.emplace_back("counting", "events.csv");
        artifacts.emplace_back("submission", "submission.txt");
        for (const auto& [stage, rel] : artifacts) {
            manifest += fmt::format("{} {} sha256={}\n", stage, rel.generic_string(), sha256_file(config.out_dir / rel));
        }
        write_text_file(config.out_dir / "manifest.txt", manifest);
    });

    if (log) {
        for (const auto& t : timings) {
            if (t.frames <= 0) continue;
            *log << fmt::format("[{}] {} frames in {:.3f} s ({:.0f} frames/s)\n", t.stage, t.frames, t.seconds,
                                t.seconds > 0 ? t.frames / t.seconds : 0.0);
        }
    }
    return result;
}

std::vector<PipelineResult> run_batch(const std::vector<PipelineConfig>& configs) {
    std::vector<std::future<PipelineResult>> futures;
    futures.reserve(configs.size());
    for (const auto& c : configs) {
        futures.push_back(std::async(std::launch::async, [&c] { return run_pipeline(c); }));
    }
    std::vector<PipelineResult> out;
    out.reserve(futures.size());
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

}  // namespace checkout
