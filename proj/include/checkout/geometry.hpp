#pragma once

#include <algorithm>
#include <optional>

namespace checkout {

/// Axis-aligned box in pixel coordinates, top-left origin.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    double right() const { return x + w; }
    double bottom() const { return y + h; }
    double center_x() const { return x + w / 2.0; }
    double center_y() const { return y + h / 2.0; }

    bool valid() const { return w > 0.0 && h > 0.0; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Intersection of two boxes; nullopt when they do not overlap with positive area.
inline std::optional<BBox> intersect(const BBox& a, const BBox& b) {
    const double x0 = std::max(a.x, b.x);
    const double y0 = std::max(a.y, b.y);
    const double x1 = std::min(a.right(), b.right());
    const double y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return std::nullopt;
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

/// Intersection-over-union in [0, 1].
double iou(const BBox& a, const BBox& b);

/// Clip a box to [0,width)x[0,height); nullopt if nothing remains.
inline std::optional<BBox> clip_to(const BBox& box, double width, double height) {
    return intersect(box, BBox{0.0, 0.0, width, height});
}

}  // namespace checkout
