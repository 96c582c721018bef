#pragma once

#include <deque>
#include <span>
#include <string>
#include <vector>

#include "checkout/detection.hpp"
#include "checkout/hungarian.hpp"
#include "checkout/kalman.hpp"
#include "checkout/keyvalue.hpp"

namespace checkout {

struct TrackerConfig {
    int n_init = 3;
    int max_age = 30;
    std::size_t budget = 100;
    double max_appearance_cost = 0.4;
    double max_iou_cost = 0.7;
    double gate = kChi2Gate4;
    KalmanNoise noise;

    void validate() const;
    /// Reads n_init, max_age, budget, max_appearance_cost, max_iou_cost, gate; missing keys keep defaults.
    static TrackerConfig from(const KeyValues& kv);
};

enum class TrackStatus { Tentative, Confirmed, Deleted };

const char* to_string(TrackStatus status);
TrackStatus parse_track_status(std::string_view text);

struct Track {
    int id = 0;
    int class_id = 0;
    KalmanState state;
    std::deque<std::vector<double>> gallery;
    TrackStatus status = TrackStatus::Tentative;
    int hits = 0;  // consecutive matches
    int age = 0;   // frames since last match
};

/// Snapshot entry emitted by Tracker::step for every live track and every track deleted that frame.
struct TrackUpdate {
    int frame = 0;
    int track_id = 0;
    int class_id = 0;
    BBox bbox;
    TrackStatus status = TrackStatus::Tentative;
    bool matched = false;
};

/// Minimum over the gallery of (1 - cosine similarity); 1.0 for an empty gallery.
double appearance_cost(const std::deque<std::vector<double>>& gallery, std::span<const double> embedding);

struct CascadeResult {
    std::vector<Match> matches;  // (track index, detection index)
    std::vector<std::size_t> unmatched_tracks;
    std::vector<std::size_t> unmatched_detections;
};

/// Appearance cascade over confirmed tracks (ascending age, Mahalanobis-gated), then IoU matching
/// of everything left. Tracks must already be predicted to the detections' frame.
CascadeResult match_cascade(std::span<const Track> tracks, std::span<const Detection> detections,
                            const TrackerConfig& config, const KalmanFilter& kf, bool use_appearance);

/// Single-video multi-object tracker. Not thread-safe; call step() with increasing frames.
class Tracker {
public:
    explicit Tracker(TrackerConfig config = {}, int embedding_dim = 0);

    std::vector<TrackUpdate> step(int frame, std::span<const Detection> detections);

    const std::vector<Track>& tracks() const { return tracks_; }
    const TrackerConfig& config() const { return config_; }
    int next_id() const { return next_id_; }

private:
    TrackerConfig config_;
    int embedding_dim_;
    KalmanFilter kf_;
    std::vector<Track> tracks_;
    int next_id_ = 1;
    int last_frame_ = -1;
};

/// Steps a tracker over frames [0, frame_count), feeding each frame's detections.
/// frame_count <= 0 means "through the last detection frame".
std::vector<TrackUpdate> track_detections(const DetectionSet& set, const TrackerConfig& config, int frame_count);

// Debug dump: `frame track_id class_id status x y w h`, shortest round-trip decimals.
std::string serialize_track_updates(std::span<const TrackUpdate> updates);
std::vector<TrackUpdate> parse_track_updates(std::string_view text);

}  // namespace checkout
