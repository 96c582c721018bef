#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "checkout/background_roi.hpp"
#include "checkout/media.hpp"
#include "checkout/tracker.hpp"

namespace checkout {

struct CountEvent {
    int video_id = 1;
    int class_id = 1;
    std::int64_t timestamp_s = 0;
    int track_id = 0;
    int first_frame = 0;

    friend bool operator==(const CountEvent&, const CountEvent&) = default;
};

/// floor(frame / fps) in exact integer arithmetic.
std::int64_t timestamp_of(std::int64_t frame, const Rational& fps);

struct CounterConfig {
    /// Same-class events closer than this many seconds collapse into the earlier one. 0 disables.
    double merge_window_s = 0.0;
};

/// Records the first frame each confirmed track is seen inside the ROI; write-once per track.
class Counter {
public:
    explicit Counter(CounterConfig config = {}) : config_(config) {}

    void observe(std::span<const TrackUpdate> updates, const RoiMask& roi, int frame);

    /// One event per recorded track, sorted by (timestamp, class_id, track_id).
    std::vector<CountEvent> finalize(int video_id, const Rational& fps) const;

    struct Entry {
        int class_id = 0;
        int first_frame = 0;
    };
    const std::map<int, Entry>& entries() const { return first_roi_; }

private:
    CounterConfig config_;
    std::map<int, Entry> first_roi_;
    int last_frame_ = -1;
};

/// Groups per-frame updates and drives a Counter over them.
std::vector<CountEvent> count_tracks(std::span<const TrackUpdate> updates, const RoiMask& roi, int video_id,
                                     const Rational& fps, const CounterConfig& config = {});

/// Debug CSV `video_id,class_id,timestamp_s,track_id,first_frame` with header.
std::string events_csv(std::span<const CountEvent> events);

}  // namespace checkout
