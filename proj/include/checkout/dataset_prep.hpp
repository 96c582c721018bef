#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "checkout/geometry.hpp"
#include "checkout/image.hpp"

namespace checkout {

struct LabeledBox {
    int class_id = 1;
    BBox box;

    friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

/// RGB training image with its box labels.
struct LabeledImage {
    Image pixels;
    std::vector<LabeledBox> boxes;
};

/// Per-pixel instance labels, 0 = background.
using SegMask = LabelGrid;

/// Tight box of every non-zero label value, ordered by label. class_id carries the raw label.
std::vector<LabeledBox> mask_to_bboxes(const SegMask& mask);

/// Minimum fraction of a box's area that must survive a clip for the box to be kept.
inline constexpr double kMinVisibleFraction = 0.25;

/// 2x2 grid around a seeded centre; every input is resized (nearest) to fill its quadrant.
LabeledImage mosaic(const std::array<LabeledImage, 4>& images, int out_size, std::uint64_t seed,
                    double min_visible = kMinVisibleFraction);
/// Same, with an explicit centre (exposed for deterministic tests).
LabeledImage mosaic_at(const std::array<LabeledImage, 4>& images, int out_size, int center_x, int center_y,
                       double min_visible = kMinVisibleFraction);

struct CutRegion {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
};

/// Replaces a seeded rectangle of area ratio (1 - lam) in `a` with the same pixels of `b`.
LabeledImage cutmix(const LabeledImage& a, const LabeledImage& b, double lam, std::uint64_t seed,
                    double min_visible = kMinVisibleFraction);
CutRegion cutmix_region(int width, int height, double lam, std::uint64_t seed);

/// k x k box filter, reflect-101 padding, rounded per channel.
Image blur(const Image& img, int kernel);

struct GeoParams {
    double scale = 1.0;            // [0.5, 2.0]
    BBox crop{0.0, 0.0, 1.0, 1.0};  // fractions of the unit square
    bool hflip = false;
    int rotate_quarters = 0;       // clockwise quarter turns
};

GeoParams random_geo_params(std::uint64_t seed);

/// crop -> nearest-neighbour scale -> horizontal flip -> rotation; boxes follow the same mapping.
LabeledImage geometric_distort(const LabeledImage& img, const GeoParams& params,
                               double min_visible = kMinVisibleFraction);

/// Nearest-neighbour resize.
Image resize_nearest(const Image& img, int width, int height);

// Label text files: one `class_id x y w h` line per box.
std::string serialize_labels(const std::vector<LabeledBox>& boxes);

struct PrepOptions {
    std::filesystem::path images_dir;
    std::filesystem::path masks_dir;
    std::filesystem::path out_dir;
    std::filesystem::path mapping_file;  // optional `mask_label=class_id` lines
    bool mosaic = false;
    bool cutmix = false;
    bool blur = false;
    bool geo = false;
    std::uint64_t seed = 0;
    int mosaic_size = 640;
    double cutmix_lam = 0.5;
    int blur_kernel = 5;
};

/// Extracts labels for every image/mask pair and writes the requested augmentations.
/// Returns the number of images written.
int run_prep(const PrepOptions& options);

}  // namespace checkout
