#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "checkout/image.hpp"
#include "checkout/media.hpp"

namespace checkout {

/// Grayscale per-pixel temporal median of a sampled frame subset.
struct BackgroundImage {
    Image pixels;  // channels == 1
};

/// Inputs to the intensity band: background mean/std and the two tuning constants.
struct ThresholdParams {
    double mu = 0.0;
    double sigma = 0.0;
    double k1 = 1.0;
    double k2 = 2.0;

    void validate() const;
};

struct ThresholdBounds {
    double lower = 0.0;
    double upper = 0.0;

    bool empty() const { return lower > upper; }
};

/// Row-major 0/1 grid.
struct BinaryGrid {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryGrid() = default;
    BinaryGrid(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    std::size_t count() const;

    friend bool operator==(const BinaryGrid&, const BinaryGrid&) = default;
};

struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Single-component checkout-tray mask with its tight bounding box.
struct RoiMask {
    BinaryGrid bits;
    PixelRect bbox;
    std::size_t area = 0;

    bool covers(int x, int y) const { return bits.contains(x, y) && bits.at(x, y) != 0; }
};

BackgroundImage estimate_background(const FrameSequence& seq, double fraction, std::uint64_t seed);

/// Median over an explicit list of frames (all equal size, grayscale or RGB).
BackgroundImage median_background(const std::vector<Image>& frames);

/// Population mean and standard deviation of the background intensities.
std::pair<double, double> intensity_stats(const BackgroundImage& bg);

/// lower = (mu - k1*sigma) / k2, upper = (mu + k1*sigma) / (k1 + k2). Not clamped.
ThresholdBounds compute_threshold_bounds(const ThresholdParams& params);

/// Bit set iff lower <= pixel <= upper; an inverted interval gives an all-zero grid.
BinaryGrid binarize(const BackgroundImage& bg, const ThresholdBounds& bounds);

BinaryGrid invert(const BinaryGrid& grid);

// Square structuring element of side 2r+1; out-of-image neighbours are ignored.
BinaryGrid erode(const BinaryGrid& grid, int radius);
BinaryGrid dilate(const BinaryGrid& grid, int radius);

/// Opening, then closing, then the largest 4-connected component with holes filled.
/// Throws Error("no ROI found") if nothing survives.
RoiMask extract_roi(const BinaryGrid& mask, int open_radius, int close_radius);

RoiMask roi_from_bits(BinaryGrid bits);

struct RoiParams {
    double fraction = 0.10;
    std::uint64_t seed = 0;
    double k1 = 1.0;
    double k2 = 2.0;
    bool invert = false;
    int open_radius = 2;
    int close_radius = 4;
};

struct RoiResult {
    BackgroundImage background;
    ThresholdBounds bounds;
    RoiMask roi;
};

/// Background -> band -> mask -> cleanup in one call.
RoiResult compute_roi(const FrameSequence& seq, const RoiParams& params);

// roi.pgm (0/255) and roi.meta (`bbox=x,y,w,h`, `area=N`) inside `dir`.
void write_roi(const std::filesystem::path& dir, const RoiMask& roi);
RoiMask read_roi(const std::filesystem::path& dir);

}  // namespace checkout
