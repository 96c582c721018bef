#include "checkout/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "checkout/error.hpp"
#include "checkout/keyvalue.hpp"

namespace checkout {

namespace {

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        fn(text.substr(pos, end - pos), line_no);
        pos = end + 1;
    }
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto sep = [](char c) { return c == ' ' || c == '\t' || c == ',' || c == '\r'; };
    while (i < line.size()) {
        while (i < line.size() && sep(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !sep(line[j])) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

std::vector<SubmissionRecord> parse_submission(std::string_view text) {
    std::vector<SubmissionRecord> out;
    for_each_line(text, [&](std::string_view line, int line_no) {
        const auto f = split_fields(line);
        if (f.empty()) return;
        if (f.size() != 3) throw FormatError(fmt::format("expected 3 fields, got {}", f.size()), line_no);
        const auto v = parse_int(f[0]);
        const auto c = parse_int(f[1]);
        const auto t = parse_int(f[2]);
        if (!v || !c || !t) throw FormatError("non-integer field", line_no);
        if (*v < 1 || *c < 1) throw FormatError("video_id and class_id must be >= 1", line_no);
        if (*t < 0) throw FormatError("timestamp must be >= 0", line_no);
        out.push_back(SubmissionRecord{static_cast<int>(*v), static_cast<int>(*c), *t});
    });
    return out;
}

std::string write_submission(std::span<const SubmissionRecord> records) {
    std::vector<SubmissionRecord> sorted(records.begin(), records.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.video_id != b.video_id) return a.video_id < b.video_id;
        if (a.timestamp_s != b.timestamp_s) return a.timestamp_s < b.timestamp_s;
        return a.class_id < b.class_id;
    });
    std::string out;
    for (const auto& r : sorted) out += fmt::format("{} {} {}\n", r.video_id, r.class_id, r.timestamp_s);
    return out;
}

std::string write_submission(std::span<const CountEvent> events) {
    std::vector<SubmissionRecord> records;
    records.reserve(events.size());
    for (const auto& e : events) records.push_back(SubmissionRecord{e.video_id, e.class_id, e.timestamp_s});
    return write_submission(std::span<const SubmissionRecord>(records));
}

std::vector<GroundTruthInterval> parse_truth(std::string_view text) {
    std::vector<GroundTruthInterval> out;
    for_each_line(text, [&](std::string_view line, int line_no) {
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto f = split_fields(line);
        if (f.empty()) return;
        if (f.size() != 4) throw FormatError(fmt::format("truth: expected 4 fields, got {}", f.size()), line_no);
        const auto v = parse_int(f[0]);
        const auto c = parse_int(f[1]);
        const auto t0 = parse_double(f[2]);
        const auto t1 = parse_double(f[3]);
        if (!v || !c || !t0 || !t1) throw FormatError("truth: malformed field", line_no);
        if (!(*t0 >= 0.0 && *t0 <= *t1)) throw FormatError("truth: need 0 <= t_enter <= t_exit", line_no);
        out.push_back(GroundTruthInterval{static_cast<int>(*v), static_cast<int>(*c), *t0, *t1,
                                          static_cast<int>(out.size())});
    });
    return out;
}

std::string write_truth(std::span<const GroundTruthInterval> intervals) {
    auto seconds = [](double t) {
        std::string s = format_shortest(t);
        if (s.find_first_of(".e") == std::string::npos) s += ".0";
        return s;
    };
    std::string out;
    for (const auto& g : intervals) {
        out += fmt::format("{} {} {} {}\n", g.video_id, g.class_id, seconds(g.t_enter), seconds(g.t_exit));
    }
    return out;
}

bool window_contains(const GroundTruthInterval& interval, std::int64_t timestamp_s) {
    const auto lo = static_cast<std::int64_t>(std::floor(interval.t_enter));
    const auto hi = static_cast<std::int64_t>(std::ceil(interval.t_exit));
    return timestamp_s >= lo && timestamp_s <= hi;
}

std::vector<std::pair<std::size_t, std::size_t>> matched_pairs(std::span<const SubmissionRecord> records,
                                                                std::span<const GroundTruthInterval> intervals) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].video_id != records[b].video_id) return records[a].video_id < records[b].video_id;
        return records[a].timestamp_s < records[b].timestamp_s;
    });

    std::vector<char> used(intervals.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t idx : order) {
        const auto& r = records[idx];
        std::size_t best = intervals.size();
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            const auto& g = intervals[i];
            if (used[i] || g.video_id != r.video_id || g.class_id != r.class_id || !window_contains(g, r.timestamp_s)) {
                continue;
            }
            if (best == intervals.size() || g.t_enter < intervals[best].t_enter) best = i;
        }
        if (best != intervals.size()) {
            used[best] = 1;
            pairs.emplace_back(idx, best);
        }
    }
    return pairs;
}

MatchTally match(std::span<const SubmissionRecord> records, std::span<const GroundTruthInterval> intervals) {
    const auto tp = static_cast<std::int64_t>(matched_pairs(records, intervals).size());
    return MatchTally{tp, static_cast<std::int64_t>(records.size()) - tp, static_cast<std::int64_t>(intervals.size()) - tp};
}

std::map<int, MatchTally> match_per_video(std::span<const SubmissionRecord> records,
                                          std::span<const GroundTruthInterval> intervals) {
    std::map<int, std::vector<SubmissionRecord>> recs;
    std::map<int, std::vector<GroundTruthInterval>> truth;
    for (const auto& r : records) recs[r.video_id].push_back(r);
    for (const auto& g : intervals) truth[g.video_id].push_back(g);
    std::map<int, MatchTally> out;
    for (const auto& [v, _] : recs) out[v] = {};
    for (const auto& [v, _] : truth) out[v] = {};
    for (auto& [v, tally] : out) tally = match(recs[v], truth[v]);
    return out;
}

double f1(const MatchTally& tally) {
    const double denom = static_cast<double>(tally.tp) + 0.5 * static_cast<double>(tally.fp + tally.fn);
    if (denom <= 0.0) return 0.0;
    return static_cast<double>(tally.tp) / denom;
}

std::string format_tally(const MatchTally& tally) {
    return fmt::format("{} {} {} {:.4f}", tally.tp, tally.fp, tally.fn, f1(tally));
}

}  // namespace checkout
