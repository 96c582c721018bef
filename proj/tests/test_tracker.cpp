#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "checkout/error.hpp"
#include "checkout/tracker.hpp"
#include "oracles.hpp"

using namespace checkout;

namespace {

Detection det_at(int frame, int cls, BBox box, std::vector<double> emb = {}) {
    Detection d;
    d.frame = frame;
    d.class_id = cls;
    d.confidence = 0.9;
    d.bbox = box;
    d.embedding = std::move(emb);
    return d;
}

std::vector<double> axis(int dim, int k, double sign = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(k)] = sign;
    return v;
}

Track confirmed_track(int id, int cls, BBox box, std::vector<double> emb) {
    KalmanFilter kf;
    Track t;
    t.id = id;
    t.class_id = cls;
    t.state = kf.predict(kf.initiate(box));
    t.gallery.push_back(std::move(emb));
    t.status = TrackStatus::Confirmed;
    t.hits = 3;
    return t;
}

}  // namespace

TEST_SUITE("tracking") {

TEST_CASE("appearance cost") {
    std::deque<std::vector<double>> g{axis(3, 0), axis(3, 1)};
    CHECK(appearance_cost(g, axis(3, 1)) == 0.0);
    CHECK(appearance_cost(g, axis(3, 2)) == 1.0);
    CHECK(appearance_cost({axis(3, 0)}, axis(3, 0, -1.0)) == 2.0);
    CHECK(appearance_cost({}, axis(3, 0)) == 1.0);
}

TEST_CASE("cascade basics") {
    KalmanFilter kf;
    TrackerConfig cfg;
    const BBox box{50, 50, 20, 40};
    std::vector<Track> tracks{confirmed_track(1, 6, box, axis(4, 0))};

    auto r = match_cascade(tracks, std::vector<Detection>{det_at(1, 6, box, axis(4, 0))}, cfg, kf, true);
    CHECK(r.matches == std::vector<Match>{{0, 0}});

    r = match_cascade(tracks, std::vector<Detection>{det_at(1, 7, box, axis(4, 0))}, cfg, kf, true);
    CHECK(r.matches.empty());
    CHECK(r.unmatched_tracks == std::vector<std::size_t>{0});
    CHECK(r.unmatched_detections == std::vector<std::size_t>{0});
}

TEST_CASE("cascade resolves crossed appearance affinities optimally") {
    KalmanFilter kf;
    TrackerConfig cfg;
    const BBox b0{50, 50, 30, 30}, b1{56, 50, 30, 30};
    const double c = std::sqrt(0.5);
    // Track 0 sees det 1 as closer in appearance, track 1 sees det 0.
    std::vector<Track> tracks{confirmed_track(1, 2, b0, {1, 0}), confirmed_track(2, 2, b1, {0, 1})};
    std::vector<Detection> dets{det_at(1, 2, b0, {c * 0.6, c * 1.28}), det_at(1, 2, b1, {0.98, 0.2})};
    for (auto& d : dets) {
        double n = 0;
        for (double e : d.embedding) n += e * e;
        for (double& e : d.embedding) e /= std::sqrt(n);
    }
    const auto r = match_cascade(tracks, dets, cfg, kf, true);
    std::vector<std::vector<double>> cost(2, std::vector<double>(2));
    for (int t = 0; t < 2; ++t)
        for (int d = 0; d < 2; ++d) cost[t][d] = appearance_cost(tracks[t].gallery, dets[d].embedding);
    REQUIRE(r.matches.size() == 2);
    double used = 0;
    for (auto [t, d] : r.matches) used += cost[t][d];
    CHECK(used == doctest::Approx(oracle::brute_force_assignment(cost)));
    CHECK(r.matches == std::vector<Match>{{0, 1}, {1, 0}});
}

TEST_CASE("lifecycle: confirmation after n_init frames") {
    Tracker tracker;
    const BBox box{10, 10, 20, 20};
    std::vector<TrackUpdate> last;
    for (int f = 1; f <= 3; ++f) {
        last = tracker.step(f, std::vector<Detection>{det_at(f, 1, box)});
        REQUIRE(last.size() == 1);
        CHECK(last[0].track_id == 1);
        CHECK(last[0].status == (f < 3 ? TrackStatus::Tentative : TrackStatus::Confirmed));
    }
    CHECK(tracker.next_id() == 2);
}

TEST_CASE("lifecycle: a tentative track is dropped on its first miss") {
    Tracker tracker;
    tracker.step(0, std::vector<Detection>{det_at(0, 1, {10, 10, 20, 20})});
    const auto u = tracker.step(1, {});
    REQUIRE(u.size() == 1);
    CHECK(u[0].status == TrackStatus::Deleted);
    CHECK(tracker.tracks().empty());
}

TEST_CASE("lifecycle: deletion after max_age misses and no id reuse") {
    TrackerConfig cfg;
    cfg.max_age = 5;
    Tracker tracker(cfg);
    const BBox box{10, 10, 20, 20};
    int f = 0;
    for (; f < 3; ++f) tracker.step(f, std::vector<Detection>{det_at(f, 1, box)});
    for (int miss = 1; miss <= cfg.max_age + 1; ++miss, ++f) {
        const auto u = tracker.step(f, {});
        REQUIRE(u.size() == 1);
        CHECK(u[0].status == (miss <= cfg.max_age ? TrackStatus::Confirmed : TrackStatus::Deleted));
        CHECK_FALSE(u[0].matched);
    }
    CHECK(tracker.tracks().empty());
    const auto u = tracker.step(f, std::vector<Detection>{det_at(f, 1, box)});
    REQUIRE(u.size() == 1);
    CHECK(u[0].track_id == 2);
}

TEST_CASE("frames must increase") {
    Tracker tracker;
    tracker.step(4, {});
    CHECK_THROWS_WITH_AS(tracker.step(4, {}), doctest::Contains("out-of-order frame"), Error);
}

TEST_CASE("two separated objects keep their identities") {
    for (int dim : {0, 8}) {
        DetectionSet set;
        set.embedding_dim = dim;
        for (int f = 0; f < 50; ++f) {
            set.records.push_back(det_at(f, 3, {10.0 + 2 * f, 20, 30, 30}, dim ? axis(dim, 0) : std::vector<double>{}));
            set.records.push_back(det_at(f, 3, {200.0 - 1.5 * f, 120 + 0.5 * f, 25, 35}, dim ? axis(dim, 1) : std::vector<double>{}));
        }
        set.sort();
        const auto updates = track_detections(set, TrackerConfig{}, 50);
        std::set<int> ids;
        std::map<int, double> first_y;
        for (const auto& u : updates) {
            ids.insert(u.track_id);
            CHECK(u.status != TrackStatus::Deleted);
            auto [it, inserted] = first_y.emplace(u.track_id, u.bbox.y);
            // The upper object stays near y=20, the lower one well below it.
            CHECK((it->second < 60) == (u.bbox.y < 60));
        }
        CHECK(ids.size() == 2);
    }
}

TEST_CASE("track dump round trip") {
    std::vector<TrackUpdate> u{{3, 1, 6, {1.5, 2.25, 30, 40.125}, TrackStatus::Confirmed, true},
                               {3, 2, 7, {-4, 0.1, 1e-3, 7}, TrackStatus::Tentative, false},
                               {4, 2, 7, {0, 0, 1, 1}, TrackStatus::Deleted, false}};
    const auto text = serialize_track_updates(u);
    const auto back = parse_track_updates(text);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].frame == u[i].frame);
        CHECK(back[i].track_id == u[i].track_id);
        CHECK(back[i].class_id == u[i].class_id);
        CHECK(back[i].bbox == u[i].bbox);
        CHECK(back[i].status == u[i].status);
    }
    CHECK(serialize_track_updates(back) == text);
    CHECK_THROWS_AS(parse_track_updates("1 2 3 lost 0 0 1 1\n"), FormatError);
    CHECK_THROWS_AS(parse_track_updates("1 2 3 confirmed 0 0 1\n"), FormatError);
}

TEST_CASE("config validation") {
    auto kv = KeyValues::parse("n_init=0\n");
    CHECK_THROWS_AS(TrackerConfig::from(kv), InputError);
    kv = KeyValues::parse("max_age=12\nmax_iou_cost=0.5\n");
    const auto c = TrackerConfig::from(kv);
    CHECK(c.max_age == 12);
    CHECK(c.max_iou_cost == 0.5);
    CHECK(c.n_init == 3);
}

}  // TEST_SUITE
