#include "checkout/tracker.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "checkout/error.hpp"

namespace checkout {

void TrackerConfig::validate() const {
    if (n_init < 1) throw InputError("n_init must be >= 1");
    if (max_age < 0) throw InputError("max_age must be >= 0");
    if (budget < 1) throw InputError("budget must be >= 1");
    if (!(max_appearance_cost >= 0.0 && max_appearance_cost <= 2.0)) throw InputError("max_appearance_cost must be in [0, 2]");
    if (!(max_iou_cost >= 0.0 && max_iou_cost <= 1.0)) throw InputError("max_iou_cost must be in [0, 1]");
    if (!(gate > 0.0)) throw InputError("gate must be > 0");
}

TrackerConfig TrackerConfig::from(const KeyValues& kv) {
    TrackerConfig c;
    c.n_init = static_cast<int>(kv.get_int("n_init", c.n_init));
    c.max_age = static_cast<int>(kv.get_int("max_age", c.max_age));
    const auto budget = kv.get_int("budget", static_cast<long long>(c.budget));
    if (budget < 1) throw InputError("budget must be >= 1");
    c.budget = static_cast<std::size_t>(budget);
    c.max_appearance_cost = kv.get_double("max_appearance_cost", c.max_appearance_cost);
    c.max_iou_cost = kv.get_double("max_iou_cost", c.max_iou_cost);
    c.gate = kv.get_double("gate", c.gate);
    c.validate();
    return c;
}

const char* to_string(TrackStatus status) {
    switch (status) {
        case TrackStatus::Tentative: return "tentative";
        case TrackStatus::Confirmed: return "confirmed";
        case TrackStatus::Deleted: return "deleted";
    }
    return "?";
}

TrackStatus parse_track_status(std::string_view text) {
    if (text == "tentative") return TrackStatus::Tentative;
    if (text == "confirmed") return TrackStatus::Confirmed;
    if (text == "deleted") return TrackStatus::Deleted;
    throw FormatError("unknown track status '" + std::string(text) + "'");
}

double appearance_cost(const std::deque<std::vector<double>>& gallery, std::span<const double> embedding) {
    if (gallery.empty()) return 1.0;
    double best = 2.0;
    for (const auto& g : gallery) {
        if (g.size() != embedding.size()) throw std::invalid_argument("appearance_cost: dimension mismatch");
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * embedding[i];
        best = std::min(best, 1.0 - dot);
    }
    return std::clamp(best, 0.0, 2.0);
}

namespace {

// Solve one assignment round over the given track/detection index subsets.
template <typename CostFn>
std::vector<Match> assign(const std::vector<std::size_t>& track_idx, const std::vector<std::size_t>& det_idx,
                          CostFn&& cost_fn) {
    if (track_idx.empty() || det_idx.empty()) return {};
    AssignmentProblem problem(track_idx.size(), det_idx.size());
    for (std::size_t r = 0; r < track_idx.size(); ++r) {
        for (std::size_t c = 0; c < det_idx.size(); ++c) {
            const auto cost = cost_fn(track_idx[r], det_idx[c]);
            if (cost) {
                problem.cost(r, c) = *cost;
            } else {
                problem.forbid(r, c);
            }
        }
    }
    std::vector<Match> out;
    for (auto [r, c] : hungarian(problem)) out.emplace_back(track_idx[r], det_idx[c]);
    return out;
}

void erase_matched(std::vector<std::size_t>& tracks, std::vector<std::size_t>& dets,
                   const std::vector<Match>& matches) {
    for (const auto& [t, d] : matches) {
        tracks.erase(std::remove(tracks.begin(), tracks.end(), t), tracks.end());
        dets.erase(std::remove(dets.begin(), dets.end(), d), dets.end());
    }
}

}  // namespace

CascadeResult match_cascade(std::span<const Track> tracks, std::span<const Detection> detections,
                            const TrackerConfig& config, const KalmanFilter& kf, bool use_appearance) {
    CascadeResult result;
    std::vector<std::size_t> unmatched_dets(detections.size());
    std::iota(unmatched_dets.begin(), unmatched_dets.end(), 0);

    std::vector<Vector4> measurements;
    measurements.reserve(detections.size());
    for (const auto& d : detections) measurements.push_back(to_measurement(d.bbox));

    std::vector<std::size_t> remaining_tracks;
    if (use_appearance) {
        std::vector<std::size_t> confirmed;
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            if (tracks[i].status == TrackStatus::Confirmed) {
                confirmed.push_back(i);
            } else {
                remaining_tracks.push_back(i);
            }
        }
        for (int level = 0; level <= config.max_age && !unmatched_dets.empty(); ++level) {
            std::vector<std::size_t> group;
            for (auto i : confirmed) {
                if (tracks[i].age == level) group.push_back(i);
            }
            if (group.empty()) continue;
            auto matches = assign(group, unmatched_dets, [&](std::size_t t, std::size_t d) -> std::optional<double> {
                const auto& trk = tracks[t];
                const auto& det = detections[d];
                if (trk.class_id != det.class_id) return std::nullopt;
                if (kf.gating_distance(trk.state, measurements[d]) > config.gate) return std::nullopt;
                const double cost = appearance_cost(trk.gallery, det.embedding);
                if (cost > config.max_appearance_cost) return std::nullopt;
                return cost;
            });
            erase_matched(confirmed, unmatched_dets, matches);
            result.matches.insert(result.matches.end(), matches.begin(), matches.end());
        }
        remaining_tracks.insert(remaining_tracks.end(), confirmed.begin(), confirmed.end());
        std::sort(remaining_tracks.begin(), remaining_tracks.end());
    } else {
        remaining_tracks.resize(tracks.size());
        std::iota(remaining_tracks.begin(), remaining_tracks.end(), 0);
    }

    std::vector<BBox> predicted;
    predicted.reserve(tracks.size());
    for (const auto& t : tracks) predicted.push_back(to_bbox(t.state.mean));
    auto iou_matches = assign(remaining_tracks, unmatched_dets, [&](std::size_t t, std::size_t d) -> std::optional<double> {
        if (tracks[t].class_id != detections[d].class_id) return std::nullopt;
        const double cost = 1.0 - iou(predicted[t], detections[d].bbox);
        if (cost > config.max_iou_cost) return std::nullopt;
        return cost;
    });
    erase_matched(remaining_tracks, unmatched_dets, iou_matches);
    result.matches.insert(result.matches.end(), iou_matches.begin(), iou_matches.end());

    std::sort(result.matches.begin(), result.matches.end());
    result.unmatched_tracks = std::move(remaining_tracks);
    result.unmatched_detections = std::move(unmatched_dets);
    return result;
}

Tracker::Tracker(TrackerConfig config, int embedding_dim)
    : config_(config), embedding_dim_(embedding_dim), kf_(config.noise) {
    config_.validate();
}

std::vector<TrackUpdate> Tracker::step(int frame, std::span<const Detection> detections) {
    if (frame <= last_frame_) {
        throw Error(fmt::format("out-of-order frame: {} after {}", frame, last_frame_));
    }
    last_frame_ = frame;
    for (const auto& d : detections) {
        if (d.frame != frame) throw std::invalid_argument("tracker step: detection from another frame");
        if (static_cast<int>(d.embedding.size()) != embedding_dim_) {
            throw std::invalid_argument("tracker step: embedding dimension mismatch");
        }
    }

    for (auto& t : tracks_) t.state = kf_.predict(t.state);

    const auto cascade = match_cascade(tracks_, detections, config_, kf_, embedding_dim_ > 0);

    for (const auto& [ti, di] : cascade.matches) {
        auto& t = tracks_[ti];
        const auto& d = detections[di];
        t.state = kf_.update(t.state, to_measurement(d.bbox));
        if (!d.embedding.empty()) {
            t.gallery.push_back(d.embedding);
            while (t.gallery.size() > config_.budget) t.gallery.pop_front();
        }
        ++t.hits;
        t.age = 0;
        if (t.status == TrackStatus::Tentative && t.hits >= config_.n_init) t.status = TrackStatus::Confirmed;
    }
    for (auto ti : cascade.unmatched_tracks) {
        auto& t = tracks_[ti];
        ++t.age;
        t.hits = 0;
        if (t.status == TrackStatus::Tentative || t.age > config_.max_age) t.status = TrackStatus::Deleted;
    }
    for (auto di : cascade.unmatched_detections) {
        const auto& d = detections[di];
        Track t;
        t.id = next_id_++;
        t.class_id = d.class_id;
        t.state = kf_.initiate(d.bbox);
        if (!d.embedding.empty()) t.gallery.push_back(d.embedding);
        t.hits = 1;
        t.age = 0;
        t.status = config_.n_init <= 1 ? TrackStatus::Confirmed : TrackStatus::Tentative;
        tracks_.push_back(std::move(t));
    }

    std::vector<TrackUpdate> updates;
    updates.reserve(tracks_.size());
    for (const auto& t : tracks_) {
        updates.push_back(TrackUpdate{frame, t.id, t.class_id, to_bbox(t.state.mean), t.status, t.age == 0});
    }
    std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::Deleted; });
    return updates;
}

std::vector<TrackUpdate> track_detections(const DetectionSet& set, const TrackerConfig& config, int frame_count) {
    Tracker tracker(config, set.embedding_dim);
    const int last_det_frame = set.records.empty() ? -1 : set.records.back().frame;
    const int frames = frame_count > 0 ? frame_count : last_det_frame + 1;
    if (last_det_frame >= frames) {
        throw Error(fmt::format("detection at frame {} beyond sequence length {}", last_det_frame, frames));
    }
    std::vector<TrackUpdate> all;
    std::size_t i = 0;
    for (int f = 0; f < frames; ++f) {
        std::size_t j = i;
        while (j < set.records.size() && set.records[j].frame == f) ++j;
        auto updates = tracker.step(f, std::span<const Detection>(set.records.data() + i, j - i));
        std::move(updates.begin(), updates.end(), std::back_inserter(all));
        i = j;
    }
    return all;
}

std::string serialize_track_updates(std::span<const TrackUpdate> updates) {
    std::string out = "# frame track_id class_id status x y w h\n";
    auto it = std::back_inserter(out);
    for (const auto& u : updates) {
        fmt::format_to(it, "{} {} {} {} {} {} {} {}\n", u.frame, u.track_id, u.class_id, to_string(u.status),
                       format_shortest(u.bbox.x), format_shortest(u.bbox.y), format_shortest(u.bbox.w),
                       format_shortest(u.bbox.h));
    }
    return out;
}

std::vector<TrackUpdate> parse_track_updates(std::string_view text) {
    std::vector<TrackUpdate> out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::vector<std::string> tok;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            if (j > i) tok.push_back(line.substr(i, j - i));
            i = j;
        }
        if (tok.empty()) continue;
        if (tok.size() != 8) throw FormatError("track dump: expected 8 fields", line_no);
        TrackUpdate u;
        auto frame = parse_int(tok[0]);
        auto id = parse_int(tok[1]);
        auto cls = parse_int(tok[2]);
        auto x = parse_double(tok[4]);
        auto y = parse_double(tok[5]);
        auto w = parse_double(tok[6]);
        auto h = parse_double(tok[7]);
        if (!frame || !id || !cls || !x || !y || !w || !h) throw FormatError("track dump: non-numeric field", line_no);
        try {
            u.status = parse_track_status(tok[3]);
        } catch (const FormatError& e) {
            throw FormatError(e.what(), line_no);
        }
        u.frame = static_cast<int>(*frame);
        u.track_id = static_cast<int>(*id);
        u.class_id = static_cast<int>(*cls);
        u.bbox = BBox{*x, *y, *w, *h};
        out.push_back(u);
    }
    return out;
}

}  // namespace checkout
