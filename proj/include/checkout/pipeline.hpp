#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "checkout/background_roi.hpp"
#include "checkout/counting.hpp"
#include "checkout/detection.hpp"
#include "checkout/keyvalue.hpp"
#include "checkout/tracker.hpp"

namespace checkout {

struct PipelineConfig {
    std::filesystem::path seq_dir;   // frame sequence; needed unless roi_dir is set
    std::filesystem::path roi_dir;   // precomputed roi.pgm/roi.meta; bypasses background estimation
    std::filesystem::path dets_file;
    std::filesystem::path out_dir;
    int video_id = 1;
    std::optional<Rational> fps;     // required when no sequence is given

    RoiParams roi;
    double nms_threshold = 0.5;
    RoiFilter roi_filter;
    TrackerConfig tracker;
    CounterConfig counter;
    bool track_global = false;       // track every detection, count on ROI entry

    /// Flat key=value overrides on top of defaults.
    static PipelineConfig from(const KeyValues& kv);
    /// Canonical key=value listing of every effective setting.
    KeyValues to_key_values() const;
    /// Throws InputError naming the offending stage.
    void validate() const;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
    long long frames = 0;
};

struct PipelineResult {
    std::string submission;
    std::vector<CountEvent> events;
    RoiMask roi;
    std::vector<StageTiming> timings;
};

/// roi -> detection filter -> tracking -> counting -> submission, persisting every artifact
/// under out_dir. Stage failures raise StageError; partial artifacts are kept.
PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

/// Independent videos processed concurrently, one tracker each. Results in input order.
std::vector<PipelineResult> run_batch(const std::vector<PipelineConfig>& configs);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace checkout
