#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "checkout/counting.hpp"

namespace checkout {

/// One `video_id class_id timestamp` line of a challenge submission.
struct SubmissionRecord {
    int video_id = 1;
    int class_id = 1;
    std::int64_t timestamp_s = 0;

    friend bool operator==(const SubmissionRecord&, const SubmissionRecord&) = default;
};

/// Time span (seconds) during which one ground-truth item is over the tray.
struct GroundTruthInterval {
    int video_id = 1;
    int class_id = 1;
    double t_enter = 0.0;
    double t_exit = 0.0;
    int instance_id = 0;
};

struct MatchTally {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    MatchTally& operator+=(const MatchTally& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend bool operator==(const MatchTally&, const MatchTally&) = default;
};

/// Fields may be separated by spaces, tabs or commas. FormatError carries the line number.
std::vector<SubmissionRecord> parse_submission(std::string_view text);

/// One line per event, sorted (video_id, timestamp, class_id), single-space separated.
std::string write_submission(std::span<const CountEvent> events);
std::string write_submission(std::span<const SubmissionRecord> records);

/// Truth lines `video_id class_id t_enter t_exit`; instance ids are assigned in file order.
std::vector<GroundTruthInterval> parse_truth(std::string_view text);
std::string write_truth(std::span<const GroundTruthInterval> intervals);

/// Integer seconds [floor(t_enter), ceil(t_exit)] a submitted stamp may fall in.
bool window_contains(const GroundTruthInterval& interval, std::int64_t timestamp_s);

/// (record index, interval index) of every true positive under the greedy rule below.
std::vector<std::pair<std::size_t, std::size_t>> matched_pairs(std::span<const SubmissionRecord> records,
                                                                std::span<const GroundTruthInterval> intervals);
/// Greedy one-to-one matching in (video, timestamp, file order); earliest-entering interval wins.
MatchTally match(std::span<const SubmissionRecord> records, std::span<const GroundTruthInterval> intervals);

/// Per-video breakdown of the same greedy matching.
std::map<int, MatchTally> match_per_video(std::span<const SubmissionRecord> records,
                                          std::span<const GroundTruthInterval> intervals);

/// TP / (TP + (FP + FN) / 2); 0 when the tally is empty.
double f1(const MatchTally& tally);

/// `TP FP FN F1` with F1 to four decimals.
std::string format_tally(const MatchTally& tally);

}  // namespace checkout
