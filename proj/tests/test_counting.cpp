#include <doctest.h>

#include "checkout/background_roi.hpp"
#include "checkout/counting.hpp"
#include "checkout/evaluation.hpp"

using namespace checkout;

namespace {

RoiMask tray() {
    BinaryGrid g(100, 100);
    for (int y = 20; y < 80; ++y)
        for (int x = 20; x < 80; ++x) g.at(x, y) = 1;
    return roi_from_bits(g);
}

TrackUpdate at(int frame, int id, int cls, double cx, TrackStatus s) {
    return TrackUpdate{frame, id, cls, BBox{cx - 5, 45, 10, 10}, s, true};
}

}  // namespace

TEST_SUITE("counting") {

TEST_CASE("timestamp_of") {
    CHECK(timestamp_of(450, {30, 1}) == 15);
    CHECK(timestamp_of(449, {30, 1}) == 14);
    CHECK(timestamp_of(0, {30000, 1001}) == 0);
    CHECK(timestamp_of(30000, {30000, 1001}) == 1001);
    CHECK(timestamp_of(29999, {30000, 1001}) == 1000);
    CHECK(timestamp_of(2997, {2997, 100}) == 100);
    CHECK_THROWS(timestamp_of(-1, {30, 1}));
    CHECK_THROWS(timestamp_of(1, {0, 1}));
}

TEST_CASE("first confirmed frame in the roi is write-once") {
    const auto roi = tray();
    Counter c;
    c.observe(std::vector<TrackUpdate>{at(100, 1, 6, 50, TrackStatus::Tentative)}, roi, 100);
    CHECK(c.entries().empty());
    c.observe(std::vector<TrackUpdate>{at(110, 1, 6, 10, TrackStatus::Confirmed)}, roi, 110);
    CHECK(c.entries().empty());
    c.observe(std::vector<TrackUpdate>{at(120, 1, 6, 50, TrackStatus::Confirmed)}, roi, 120);
    c.observe(std::vector<TrackUpdate>{at(130, 1, 6, 95, TrackStatus::Confirmed)}, roi, 130);
    c.observe(std::vector<TrackUpdate>{at(140, 1, 6, 50, TrackStatus::Confirmed)}, roi, 140);
    REQUIRE(c.entries().size() == 1);
    CHECK(c.entries().at(1).first_frame == 120);
    CHECK_THROWS(c.observe({}, roi, 140));
}

TEST_CASE("finalize") {
    const auto roi = tray();
    CHECK(Counter{}.finalize(1, {30, 1}).empty());

    Counter c;
    c.observe(std::vector<TrackUpdate>{at(450, 4, 6, 50, TrackStatus::Confirmed)}, roi, 450);
    const auto ev = c.finalize(1, {30, 1});
    REQUIRE(ev.size() == 1);
    CHECK(ev[0] == CountEvent{1, 6, 15, 4, 450});
}

TEST_CASE("sample events come out in timestamp order") {
    const auto roi = tray();
    std::vector<TrackUpdate> u{at(76 * 30, 1, 6, 50, TrackStatus::Confirmed),
                               at(15 * 30 + 7, 2, 76, 50, TrackStatus::Confirmed),
                               at(19 * 30 + 29, 3, 106, 50, TrackStatus::Confirmed)};
    std::sort(u.begin(), u.end(), [](auto& a, auto& b) { return a.frame < b.frame; });
    const auto ev = count_tracks(u, roi, 1, {30, 1});
    REQUIRE(ev.size() == 3);
    CHECK(ev[0].timestamp_s == 15);
    CHECK(ev[0].class_id == 76);
    CHECK(ev[1].timestamp_s == 19);
    CHECK(ev[1].class_id == 106);
    CHECK(ev[2].timestamp_s == 76);
    CHECK(ev[2].class_id == 6);
    CHECK(write_submission(std::span<const CountEvent>(ev)) == "1 76 15\n1 106 19\n1 6 76\n");
}

TEST_CASE("merge window") {
    const auto roi = tray();
    std::vector<TrackUpdate> u{at(10, 1, 5, 50, TrackStatus::Confirmed), at(20, 2, 5, 30, TrackStatus::Confirmed),
                               at(20, 3, 9, 60, TrackStatus::Confirmed), at(100, 4, 5, 50, TrackStatus::Confirmed)};
    CHECK(count_tracks(u, roi, 1, {30, 1}).size() == 4);
    const auto merged = count_tracks(u, roi, 1, {30, 1}, CounterConfig{1.0});
    REQUIRE(merged.size() == 3);
    for (const auto& e : merged) CHECK(e.track_id != 2);
}

TEST_CASE("events csv") {
    std::vector<CountEvent> ev{{1, 6, 15, 4, 450}};
    CHECK(events_csv(ev) == "video_id,class_id,timestamp_s,track_id,first_frame\n1,6,15,4,450\n");
}

}  // TEST_SUITE
