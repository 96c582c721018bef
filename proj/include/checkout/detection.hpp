#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "checkout/background_roi.hpp"
#include "checkout/geometry.hpp"

namespace checkout {

struct Detection {
    int frame = 0;
    int class_id = 1;
    double confidence = 0.0;
    BBox bbox;
    std::vector<double> embedding;  // empty when the stream carries no appearance data
};

/// Detections sorted by (frame ascending, confidence descending), stable otherwise.
struct DetectionSet {
    int num_classes = 116;
    int embedding_dim = 0;
    std::vector<Detection> records;

    /// Re-establishes the canonical order.
    void sort();
    /// Index range [first, last) of each frame's records; requires sorted records.
    std::vector<std::span<const Detection>> by_frame() const;
};

DetectionSet parse_detections(std::string_view text);
DetectionSet load_detections(const std::filesystem::path& path);

/// Canonical text: header comments, then `frame class conf x y w h [e1..eD]`.
std::string serialize_detections(const DetectionSet& set);

/// Greedy per-class suppression; output sorted by confidence descending, ties by input order.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold);

/// Applies nms frame by frame.
DetectionSet nms_all(const DetectionSet& set, double iou_threshold);

struct RoiFilter {
    /// 0 selects the bbox-centre rule; otherwise the fraction of box pixels on the mask must reach it.
    double min_overlap = 0.0;
};

/// Centre pixel of a box after clipping to the mask; false if the box lies fully outside.
bool center_in_roi(const BBox& box, const RoiMask& roi);

DetectionSet filter_roi(const DetectionSet& set, const RoiMask& roi, const RoiFilter& rule = {});

}  // namespace checkout
