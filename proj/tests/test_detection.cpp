#include <doctest.h>

#include <random>

#include "checkout/background_roi.hpp"
#include "checkout/detection.hpp"
#include "checkout/error.hpp"
#include "oracles.hpp"

using namespace checkout;

namespace {

std::vector<double> unit_vector(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(dim));
    double s = 0.0;
    for (auto& e : v) {
        e = n(rng);
        s += e * e;
    }
    for (auto& e : v) e /= std::sqrt(s);
    return v;
}

DetectionSet random_set(std::size_t n, int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> frame(0, 200), cls(1, 116), conf(0, 10000), pos(-2000, 190000),
        size(1, 40000);
    DetectionSet set;
    set.embedding_dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        Detection d;
        d.frame = frame(rng);
        d.class_id = cls(rng);
        d.confidence = conf(rng) / 10000.0;
        d.bbox = BBox{pos(rng) / 100.0, pos(rng) / 100.0, size(rng) / 100.0, size(rng) / 100.0};
        if (dim > 0) d.embedding = unit_vector(dim, rng);
        set.records.push_back(std::move(d));
    }
    return set;
}

RoiMask rect_roi(int w, int h, int x, int y, int rw, int rh) {
    BinaryGrid g(w, h);
    for (int yy = y; yy < y + rh; ++yy)
        for (int xx = x; xx < x + rw; ++xx) g.at(xx, yy) = 1;
    return roi_from_bits(g);
}

Detection det(int cls, double conf, BBox box) {
    Detection d;
    d.class_id = cls;
    d.confidence = conf;
    d.bbox = box;
    return d;
}

}  // namespace

TEST_SUITE("detection") {

TEST_CASE("parse a basic line") {
    const auto set = parse_detections("12 6 0.91 100 200 50 40\n");
    REQUIRE(set.records.size() == 1);
    const auto& d = set.records[0];
    CHECK(d.frame == 12);
    CHECK(d.class_id == 6);
    CHECK(d.confidence == 0.91);
    CHECK(d.bbox == BBox{100, 200, 50, 40});
    CHECK(d.embedding.empty());
    CHECK(set.embedding_dim == 0);
}

TEST_CASE("parse rejects bad records with the line number") {
    std::mt19937_64 rng(1);
    auto line_with = [&](int dim) {
        std::string s = "3 5 0.5 1 2 3 4";
        for (double e : unit_vector(dim, rng)) s += " " + format_shortest(e);
        return s + "\n";
    };
    const std::string mixed = line_with(130) + line_with(128);
    try {
        parse_detections(mixed);
        FAIL("expected a FormatError");
    } catch (const FormatError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("dimension") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_detections("1 0 0.5 1 1 1 1\n"), FormatError);
    CHECK_THROWS_AS(parse_detections("1 117 0.5 1 1 1 1\n"), FormatError);
    CHECK_THROWS_AS(parse_detections("1 1 1.5 1 1 1 1\n"), FormatError);
    CHECK_THROWS_AS(parse_detections("1 1 0.5 1 1 0 1\n"), FormatError);
    CHECK_THROWS_AS(parse_detections("1 1 0.5 1 1 1\n"), FormatError);
    CHECK_THROWS_AS(parse_detections("-1 1 0.5 1 1 1 1\n"), FormatError);
    CHECK_THROWS_AS(parse_detections("1 1 0.5 1 1 1 1 0.5 0.5\n"), FormatError);
    CHECK_THROWS_AS(parse_detections("# embedding_dim=2\n1 1 0.5 1 1 1 1\n"), FormatError);
    CHECK(parse_detections("# num_classes=200\n1 150 0.5 1 1 1 1\n").records.size() == 1);
}

TEST_CASE("serialize") {
    DetectionSet empty;
    CHECK(serialize_detections(empty) == "# num_classes=116\n# embedding_dim=0\n");

    DetectionSet one;
    one.records.push_back(det(6, 0.91, {100, 200, 50, 40}));
    one.records[0].frame = 12;
    CHECK(serialize_detections(one) == "# num_classes=116\n# embedding_dim=0\n12 6 0.9100 100.00 200.00 50.00 40.00\n");
}

TEST_CASE("serialize and parse round trip") {
    for (int dim : {0, 4, 128}) {
        auto set = random_set(dim == 128 ? 200 : 1000, dim, 7 + dim);
        const auto text = serialize_detections(set);
        const auto parsed = parse_detections(text);
        CHECK(parsed.records.size() == set.records.size());
        CHECK(serialize_detections(parsed) == text);
    }
}

TEST_CASE("canonical order") {
    const auto set = parse_detections("5 1 0.2 0 0 1 1\n2 1 0.3 0 0 1 1\n5 2 0.9 0 0 1 1\n5 3 0.2 0 0 1 1\n");
    REQUIRE(set.records.size() == 4);
    CHECK(set.records[0].frame == 2);
    CHECK(set.records[1].class_id == 2);
    CHECK(set.records[2].class_id == 1);
    CHECK(set.records[3].class_id == 3);
    CHECK(set.by_frame().size() == 2);
}

TEST_CASE("iou") {
    CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
    CHECK(iou({0, 0, 10, 10}, {20, 20, 5, 5}) == 0.0);
    CHECK(iou({0, 0, 10, 10}, {10, 0, 10, 10}) == 0.0);
    CHECK(iou({0, 0, 10, 10}, {5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("nms") {
    const BBox a{0, 0, 100, 100};
    const BBox b{0, 0, 100, 90};  // IoU 0.9
    auto kept = nms(std::vector<Detection>{det(1, 0.8, b), det(1, 0.9, a)}, 0.5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].confidence == 0.9);

    kept = nms(std::vector<Detection>{det(1, 0.9, a), det(2, 0.8, b)}, 0.5);
    CHECK(kept.size() == 2);

    CHECK(nms(std::vector<Detection>{}, 0.5).empty());

    // IoU exactly at the threshold is not suppressed.
    kept = nms(std::vector<Detection>{det(1, 0.9, {0, 0, 10, 10}), det(1, 0.8, {5, 0, 10, 10})}, 1.0 / 3.0);
    CHECK(kept.size() == 2);
}

TEST_CASE("nms matches the quadratic reference") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> pos(0, 200), size(5, 60), conf(0, 1);
    std::uniform_int_distribution<int> cls(1, 3), count(0, 40);
    for (int t = 0; t < 100; ++t) {
        std::vector<Detection> dets;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) dets.push_back(det(cls(rng), std::round(conf(rng) * 20) / 20, {pos(rng), pos(rng), size(rng), size(rng)}));
        const auto kept = nms(dets, 0.4);
        const auto ref = oracle::nms_indices(dets, 0.4);
        REQUIRE(kept.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(kept[i].bbox == dets[ref[i]].bbox);
            CHECK(kept[i].class_id == dets[ref[i]].class_id);
        }
    }
}

TEST_CASE("roi membership by centre") {
    const auto roi = rect_roi(100, 80, 20, 20, 40, 30);
    CHECK(center_in_roi({30, 25, 10, 10}, roi));
    CHECK_FALSE(center_in_roi({5, 25, 20, 10}, roi));  // overlaps the edge, centre at x=15
    CHECK_FALSE(center_in_roi({500, 500, 10, 10}, roi));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-30, 110), size(1, 40);
    for (int i = 0; i < 1000; ++i) {
        const BBox b{pos(rng), pos(rng), size(rng), size(rng)};
        const double x0 = std::max(b.x, 0.0), x1 = std::min(b.x + b.w, 100.0);
        const double y0 = std::max(b.y, 0.0), y1 = std::min(b.y + b.h, 80.0);
        bool expect = false;
        if (x1 > x0 && y1 > y0) {
            const double cx = std::floor((x0 + x1) / 2), cy = std::floor((y0 + y1) / 2);
            expect = cx >= 20 && cx < 60 && cy >= 20 && cy < 50;
        }
        CHECK(center_in_roi(b, roi) == expect);
    }
}

TEST_CASE("filter_roi rules") {
    const auto roi = rect_roi(100, 80, 20, 20, 40, 30);
    DetectionSet set;
    set.records = {det(1, 0.9, {30, 25, 10, 10}), det(1, 0.8, {9, 20, 20, 10}), det(1, 0.7, {0, 0, 5, 5})};
    // Second box: center column 19 is outside, 9 of its 20 columns are inside.
    CHECK(filter_roi(set, roi).records.size() == 1);
    CHECK(filter_roi(set, roi, RoiFilter{0.45}).records.size() == 2);
    CHECK(filter_roi(set, roi, RoiFilter{0.46}).records.size() == 1);
}

}  // TEST_SUITE
