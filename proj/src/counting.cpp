#include "checkout/counting.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "checkout/detection.hpp"
#include "checkout/error.hpp"

namespace checkout {

std::int64_t timestamp_of(std::int64_t frame, const Rational& fps) {
    if (fps.num <= 0 || fps.den <= 0) throw std::invalid_argument("fps must be positive");
    if (frame < 0) throw std::invalid_argument("frame must be >= 0");
    // frame / (num/den) = frame * den / num; both non-negative so integer division floors.
    return frame * fps.den / fps.num;
}

void Counter::observe(std::span<const TrackUpdate> updates, const RoiMask& roi, int frame) {
    if (frame <= last_frame_) throw Error(fmt::format("out-of-order frame: {} after {}", frame, last_frame_));
    last_frame_ = frame;
    for (const auto& u : updates) {
        if (u.status != TrackStatus::Confirmed) continue;
        if (first_roi_.count(u.track_id)) continue;
        if (center_in_roi(u.bbox, roi)) first_roi_.emplace(u.track_id, Entry{u.class_id, frame});
    }
}

std::vector<CountEvent> Counter::finalize(int video_id, const Rational& fps) const {
    std::vector<CountEvent> events;
    events.reserve(first_roi_.size());
    for (const auto& [id, e] : first_roi_) {
        events.push_back(CountEvent{video_id, e.class_id, timestamp_of(e.first_frame, fps), id, e.first_frame});
    }
    std::sort(events.begin(), events.end(), [](const CountEvent& a, const CountEvent& b) {
        if (a.timestamp_s != b.timestamp_s) return a.timestamp_s < b.timestamp_s;
        if (a.class_id != b.class_id) return a.class_id < b.class_id;
        return a.track_id < b.track_id;
    });
    if (config_.merge_window_s <= 0.0) return events;

    // Keep an event only if no kept event of the same class started within the window.
    std::vector<CountEvent> merged;
    std::map<int, int> last_kept_frame;
    std::vector<CountEvent> by_frame = events;
    std::stable_sort(by_frame.begin(), by_frame.end(),
                     [](const CountEvent& a, const CountEvent& b) { return a.first_frame < b.first_frame; });
    const double window_frames = config_.merge_window_s * fps.value();
    std::vector<int> dropped;
    for (const auto& e : by_frame) {
        auto it = last_kept_frame.find(e.class_id);
        if (it != last_kept_frame.end() && e.first_frame - it->second < window_frames) {
            dropped.push_back(e.track_id);
            continue;
        }
        last_kept_frame[e.class_id] = e.first_frame;
    }
    for (const auto& e : events) {
        if (std::find(dropped.begin(), dropped.end(), e.track_id) == dropped.end()) merged.push_back(e);
    }
    return merged;
}

std::vector<CountEvent> count_tracks(std::span<const TrackUpdate> updates, const RoiMask& roi, int video_id,
                                     const Rational& fps, const CounterConfig& config) {
    Counter counter(config);
    std::size_t i = 0;
    while (i < updates.size()) {
        std::size_t j = i;
        while (j < updates.size() && updates[j].frame == updates[i].frame) ++j;
        counter.observe(updates.subspan(i, j - i), roi, updates[i].frame);
        i = j;
    }
    return counter.finalize(video_id, fps);
}

std::string events_csv(std::span<const CountEvent> events) {
    std::string out = "video_id,class_id,timestamp_s,track_id,first_frame\n";
    for (const auto& e : events) {
        out += fmt::format("{},{},{},{},{}\n", e.video_id, e.class_id, e.timestamp_s, e.track_id, e.first_frame);
    }
    return out;
}

}  // namespace checkout
