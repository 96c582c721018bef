#include <doctest.h>

#include <random>

#include "checkout/background_roi.hpp"
#include "checkout/error.hpp"
#include "checkout/media.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace checkout;

namespace {

BackgroundImage uniform_bg(int w, int h, std::uint8_t v) { return BackgroundImage{Image(w, h, 1, v)}; }

void fill_rect(BinaryGrid& g, int x, int y, int w, int h) {
    for (int yy = y; yy < y + h; ++yy)
        for (int xx = x; xx < x + w; ++xx) g.at(xx, yy) = 1;
}

}  // namespace

TEST_SUITE("background_roi") {

TEST_CASE("median of constant frames") {
    std::vector<Image> frames(9, Image(6, 4, 1, 77));
    const auto bg = median_background(frames);
    for (auto v : bg.pixels.data) CHECK(v == 77);
}

TEST_CASE("median ignores a transient outlier") {
    testutil::TempDir dir("bg_outlier");
    std::vector<Image> frames(30, Image(5, 5, 1, 10));
    frames[13].at(2, 3) = 200;
    write_sequence(dir.path(), SequenceMeta{Rational{30, 1}, 5, 5, 30, 1}, frames);
    const auto bg = estimate_background(open_sequence(dir.path()), 1.0, 0);
    CHECK(bg.pixels.at(2, 3) == 10);
    CHECK(bg.pixels == oracle::sort_median(frames));
}

TEST_CASE("median matches sort oracle, including even counts and RGB input") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> px(0, 255);
    for (int n : {1, 2, 7, 10}) {
        std::vector<Image> rgb;
        std::vector<Image> gray;
        for (int i = 0; i < n; ++i) {
            Image img(9, 6, 3);
            for (auto& v : img.data) v = static_cast<std::uint8_t>(px(rng));
            gray.push_back(to_gray(img));
            rgb.push_back(std::move(img));
        }
        CHECK(median_background(gray).pixels == oracle::sort_median(gray));
        CHECK(median_background(rgb).pixels == oracle::sort_median(gray));
    }
}

TEST_CASE("threshold bounds") {
    auto b = compute_threshold_bounds({128, 32, 1, 2});
    CHECK(b.lower == doctest::Approx(48.0));
    CHECK(b.upper == doctest::Approx(160.0 / 3.0));
    CHECK_FALSE(b.empty());

    b = compute_threshold_bounds({90, 0, 1, 1});
    CHECK(b.lower == doctest::Approx(90.0));
    CHECK(b.upper == doctest::Approx(45.0));
    CHECK(b.empty());

    b = compute_threshold_bounds({0, 0, 3, 5});
    CHECK(b.lower == 0.0);
    CHECK(b.upper == 0.0);

    CHECK_THROWS(compute_threshold_bounds({10, 1, 0, 2}));
    CHECK_THROWS(compute_threshold_bounds({10, 1, 1, -2}));
    CHECK_THROWS(compute_threshold_bounds({10, -1, 1, 2}));
}

TEST_CASE("intensity stats use the population deviation") {
    BackgroundImage bg{Image(4, 1, 1)};
    bg.pixels.data = {2, 4, 4, 6};
    const auto [mu, sigma] = intensity_stats(bg);
    CHECK(mu == doctest::Approx(4.0));
    CHECK(sigma == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("binarize") {
    const ThresholdBounds band{48.0, 160.0 / 3.0};
    CHECK(binarize(uniform_bg(10, 10, 50), band).count() == 100);
    CHECK(binarize(uniform_bg(10, 10, 200), band).count() == 0);
    CHECK(binarize(uniform_bg(10, 10, 50), ThresholdBounds{60, 40}).count() == 0);
    CHECK(binarize(uniform_bg(3, 3, 48), band).count() == 9);
}

TEST_CASE("morphology") {
    BinaryGrid g(11, 11);
    g.at(5, 5) = 1;
    CHECK(dilate(g, 2).count() == 25);
    CHECK(erode(dilate(g, 2), 2).count() == 1);
    BinaryGrid full(4, 4, 1);
    CHECK(erode(full, 1).count() == 16);
    CHECK(dilate(g, 0) == g);
    CHECK(invert(invert(g)) == g);
    CHECK(invert(g).count() == 120);
}

TEST_CASE("extract_roi keeps the rectangle and drops speckle") {
    BinaryGrid g(200, 150);
    fill_rect(g, 40, 30, 100, 60);
    std::mt19937 rng(1);
    int placed = 0;
    while (placed < 20) {
        const int x = std::uniform_int_distribution<int>(0, 199)(rng);
        const int y = std::uniform_int_distribution<int>(0, 149)(rng);
        if (x >= 35 && x < 145 && y >= 25 && y < 95) continue;
        bool neighbour = false;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (g.contains(x + dx, y + dy) && g.at(x + dx, y + dy)) neighbour = true;
        if (neighbour) continue;
        g.at(x, y) = 1;
        ++placed;
    }
    const auto roi = extract_roi(g, 2, 4);
    CHECK(roi.area == 6000);
    CHECK(roi.bbox == PixelRect{40, 30, 100, 60});
    BinaryGrid expected(200, 150);
    fill_rect(expected, 40, 30, 100, 60);
    CHECK(roi.bits == expected);
}

TEST_CASE("extract_roi picks the larger component and fills holes") {
    BinaryGrid g(100, 60);
    fill_rect(g, 5, 5, 25, 20);   // 500
    fill_rect(g, 60, 10, 20, 20); // 400
    auto roi = extract_roi(g, 0, 0);
    CHECK(roi.area == 500);
    CHECK(roi.bbox == PixelRect{5, 5, 25, 20});
    CHECK(roi.bits == oracle::largest_component(g));

    BinaryGrid ring(30, 30);
    fill_rect(ring, 5, 5, 20, 20);
    for (int y = 10; y < 15; ++y)
        for (int x = 10; x < 15; ++x) ring.at(x, y) = 0;
    roi = extract_roi(ring, 0, 0);
    CHECK(roi.area == 400);
}

TEST_CASE("extract_roi on random grids matches the component oracle") {
    std::mt19937 rng(9);
    for (int t = 0; t < 30; ++t) {
        BinaryGrid g(24, 18);
        for (auto& b : g.bits) b = std::bernoulli_distribution(0.45)(rng) ? 1 : 0;
        const auto comp = oracle::largest_component(g);
        if (comp.count() == 0) continue;
        const auto roi = extract_roi(g, 0, 0);
        // Hole filling can only add pixels to the oracle's component.
        for (std::size_t i = 0; i < comp.bits.size(); ++i) {
            if (comp.bits[i]) CHECK(roi.bits.bits[i] == 1);
        }
        CHECK(roi.area >= comp.count());
    }
}

TEST_CASE("extract_roi on an empty grid") {
    CHECK_THROWS_WITH_AS(extract_roi(BinaryGrid(10, 10), 2, 4), "no ROI found", Error);
    BinaryGrid speck(10, 10);
    speck.at(3, 3) = 1;
    CHECK_THROWS_WITH_AS(extract_roi(speck, 2, 4), "no ROI found", Error);
}

TEST_CASE("roi files round trip") {
    testutil::TempDir dir("roi_io");
    BinaryGrid g(40, 30);
    fill_rect(g, 3, 4, 10, 7);
    const auto roi = roi_from_bits(g);
    write_roi(dir.path(), roi);
    const auto back = read_roi(dir.path());
    CHECK(back.bits == roi.bits);
    CHECK(back.bbox == PixelRect{3, 4, 10, 7});
    CHECK(back.area == 70);
}

TEST_CASE("compute_roi finds a bright tray with the complement band") {
    testutil::TempDir dir("roi_tray");
    const int w = 80, h = 60;
    Image frame(w, h, 1, 40);
    for (int y = 15; y < 45; ++y)
        for (int x = 20; x < 64; ++x) frame.at(x, y) = 200;
    std::vector<Image> frames(20, frame);
    frames[4].at(30, 20) = 90;
    write_sequence(dir.path(), SequenceMeta{Rational{30, 1}, w, h, 20, 1}, frames);
    RoiParams p;
    p.fraction = 0.5;
    p.invert = true;
    const auto r = compute_roi(open_sequence(dir.path()), p);
    CHECK(r.roi.bbox == PixelRect{20, 15, 44, 30});
    CHECK(r.roi.area == 44u * 30u);
}

}  // TEST_SUITE
