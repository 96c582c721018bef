#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "checkout/background_roi.hpp"
#include "checkout/detection.hpp"
#include "checkout/evaluation.hpp"
#include "checkout/keyvalue.hpp"
#include "checkout/media.hpp"

namespace checkout {

struct ScenarioConfig {
    Rational fps{30, 1};
    double duration_s = 30.0;
    int width = 320;
    int height = 180;
    PixelRect tray{60, 30, 200, 120};
    int objects = 10;
    int class_min = 1;
    int class_max = 116;
    double speed_min = 1.5;  // px/frame
    double speed_max = 3.0;
    int size_min = 28;
    int size_max = 44;
    double noise_px = 0.0;
    double drop = 0.0;
    double fp_rate = 0.0;  // expected false positives per frame
    int embedding_dim = 128;
    double embedding_noise = 0.0;  // per-component Gaussian std before renormalising
    std::uint64_t seed = 1;
    int video_id = 1;
    bool render_frames = true;

    int frame_count() const;
    void validate() const;
    static ScenarioConfig from(const KeyValues& kv);
};

/// Constant-velocity path of one object's box centre.
struct ObjectTruth {
    int class_id = 1;
    int start_frame = 0;
    int end_frame = 0;  // inclusive
    double cx0 = 0.0;
    double cy0 = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double w = 0.0;
    double h = 0.0;
    int enter_frame = -1;  // first / last frame with the centre pixel on the tray
    int exit_frame = -1;
    double t_enter = 0.0;
    double t_exit = 0.0;

    BBox box_at(int frame) const;
};

struct ScenarioTruth {
    int video_id = 1;
    std::vector<ObjectTruth> objects;

    std::vector<GroundTruthInterval> intervals() const;
};

struct Scenario {
    DetectionSet detections;
    SequenceMeta meta;
    ScenarioTruth truth;
};

Scenario generate(const ScenarioConfig& config);

/// Evaluation ground-truth text for the scenario.
std::string write_truth(const ScenarioTruth& truth);

/// Flat rendering: dark surround, bright tray, mid-grey object boxes at their true positions.
void render_frames(const ScenarioConfig& config, const ScenarioTruth& truth, const std::filesystem::path& dir);

/// Exact tray mask.
RoiMask tray_mask(const ScenarioConfig& config);

/// dets.txt, truth.txt, tray_roi/, and frames/ when render_frames is set.
Scenario write_scenario(const ScenarioConfig& config, const std::filesystem::path& dir);

}  // namespace checkout
