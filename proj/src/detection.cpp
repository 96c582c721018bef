#include "checkout/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "checkout/error.hpp"
#include "checkout/keyvalue.hpp"

namespace checkout {

double iou(const BBox& a, const BBox& b) {
    const auto inter = intersect(a, b);
    if (!inter) return 0.0;
    const double i = inter->area();
    const double u = a.area() + b.area() - i;
    return u > 0.0 ? std::clamp(i / u, 0.0, 1.0) : 0.0;
}

void DetectionSet::sort() {
    std::stable_sort(records.begin(), records.end(), [](const Detection& a, const Detection& b) {
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.confidence > b.confidence;
    });
}

std::vector<std::span<const Detection>> DetectionSet::by_frame() const {
    std::vector<std::span<const Detection>> out;
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        while (j < records.size() && records[j].frame == records[i].frame) ++j;
        out.emplace_back(records.data() + i, j - i);
        i = j;
    }
    return out;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

// Six-decimal serialization perturbs each component by up to 5e-7, so the norm check
// allows that quantization on top of the 1e-6 unit-norm invariant.
double embedding_norm_tolerance(int dim) { return 1e-6 + 5e-7 * std::sqrt(static_cast<double>(dim)); }

void parse_header_comment(std::string_view body, DetectionSet& set, bool& dim_declared, int line_no) {
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) return;
    auto key = body.substr(0, eq);
    auto value = body.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.remove_suffix(1);
    while (!key.empty() && (key.front() == ' ' || key.front() == '\t')) key.remove_prefix(1);
    auto toks = split_ws(value);
    if (key != "num_classes" && key != "embedding_dim") return;
    if (toks.size() != 1) throw FormatError(fmt::format("malformed header '{}'", key), line_no);
    auto v = parse_int(toks[0]);
    if (!v || *v < 0) throw FormatError(fmt::format("malformed header '{}'", key), line_no);
    if (key == "num_classes") {
        if (*v < 1) throw FormatError("num_classes must be >= 1", line_no);
        set.num_classes = static_cast<int>(*v);
    } else {
        set.embedding_dim = static_cast<int>(*v);
        dim_declared = true;
    }
}

}  // namespace

DetectionSet parse_detections(std::string_view text) {
    DetectionSet set;
    bool dim_declared = false;
    bool seen_data = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            if (!seen_data) parse_header_comment(line.substr(hash + 1), set, dim_declared, line_no);
            line = line.substr(0, hash);
        }
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() < 7) throw FormatError(fmt::format("malformed line: expected at least 7 fields, got {}", tok.size()), line_no);

        Detection d;
        const auto frame = parse_int(tok[0]);
        const auto cls = parse_int(tok[1]);
        const auto conf = parse_double(tok[2]);
        const auto x = parse_double(tok[3]);
        const auto y = parse_double(tok[4]);
        const auto w = parse_double(tok[5]);
        const auto h = parse_double(tok[6]);
        if (!frame || !cls || !conf || !x || !y || !w || !h) throw FormatError("malformed line: non-numeric field", line_no);
        if (*frame < 0) throw FormatError("negative frame number", line_no);
        if (*cls < 1 || *cls > set.num_classes) {
            throw FormatError(fmt::format("class_id {} outside [1, {}]", *cls, set.num_classes), line_no);
        }
        if (!(*conf >= 0.0 && *conf <= 1.0)) throw FormatError(fmt::format("confidence out of range: {}", *conf), line_no);
        if (!std::isfinite(*x) || !std::isfinite(*y) || !(*w > 0.0) || !(*h > 0.0) || !std::isfinite(*w) ||
            !std::isfinite(*h)) {
            throw FormatError("invalid bbox", line_no);
        }
        d.frame = static_cast<int>(*frame);
        d.class_id = static_cast<int>(*cls);
        d.confidence = *conf;
        d.bbox = BBox{*x, *y, *w, *h};

        const int dim = static_cast<int>(tok.size()) - 7;
        if (!dim_declared && !seen_data) {
            set.embedding_dim = dim;
            dim_declared = true;
        }
        if (dim != set.embedding_dim) {
            throw FormatError(fmt::format("inconsistent embedding dimension: {} values, stream declares {}", dim,
                                          set.embedding_dim),
                              line_no);
        }
        if (dim > 0) {
            d.embedding.resize(static_cast<std::size_t>(dim));
            double norm2 = 0.0;
            for (int k = 0; k < dim; ++k) {
                const auto v = parse_double(tok[7 + static_cast<std::size_t>(k)]);
                if (!v || !std::isfinite(*v)) throw FormatError("malformed embedding value", line_no);
                d.embedding[static_cast<std::size_t>(k)] = *v;
                norm2 += *v * *v;
            }
            if (std::abs(std::sqrt(norm2) - 1.0) > embedding_norm_tolerance(dim)) {
                throw FormatError(fmt::format("embedding not unit-norm (|e| = {:.9f})", std::sqrt(norm2)), line_no);
            }
        }
        seen_data = true;
        set.records.push_back(std::move(d));
    }
    set.sort();
    return set;
}

DetectionSet load_detections(const std::filesystem::path& path) {
    try {
        return parse_detections(read_text_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string serialize_detections(const DetectionSet& set) {
    std::string out = fmt::format("# num_classes={}\n# embedding_dim={}\n", set.num_classes, set.embedding_dim);
    auto sorted = set;
    sorted.sort();
    auto it = std::back_inserter(out);
    for (const auto& d : sorted.records) {
        fmt::format_to(it, "{} {} {:.4f} {:.2f} {:.2f} {:.2f} {:.2f}", d.frame, d.class_id, d.confidence, d.bbox.x,
                       d.bbox.y, d.bbox.w, d.bbox.h);
        for (double e : d.embedding) fmt::format_to(it, " {:.6f}", e);
        out.push_back('\n');
    }
    return out;
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
    std::vector<Detection> kept;
    for (std::size_t idx : order) {
        const auto& cand = dets[idx];
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return k.class_id == cand.class_id && iou(k.bbox, cand.bbox) > iou_threshold;
        });
        if (!suppressed) kept.push_back(cand);
    }
    return kept;
}

DetectionSet nms_all(const DetectionSet& set, double iou_threshold) {
    DetectionSet out{set.num_classes, set.embedding_dim, {}};
    out.records.reserve(set.records.size());
    for (auto frame : set.by_frame()) {
        auto kept = nms(frame, iou_threshold);
        std::move(kept.begin(), kept.end(), std::back_inserter(out.records));
    }
    return out;
}

bool center_in_roi(const BBox& box, const RoiMask& roi) {
    const auto clipped = clip_to(box, roi.bits.width, roi.bits.height);
    if (!clipped) return false;
    const auto cx = static_cast<int>(std::floor(clipped->x + clipped->w / 2.0));
    const auto cy = static_cast<int>(std::floor(clipped->y + clipped->h / 2.0));
    return roi.covers(cx, cy);
}

namespace {

double roi_overlap(const BBox& box, const RoiMask& roi) {
    const auto clipped = clip_to(box, roi.bits.width, roi.bits.height);
    if (!clipped) return 0.0;
    const int x0 = static_cast<int>(std::floor(clipped->x));
    const int y0 = static_cast<int>(std::floor(clipped->y));
    const int x1 = static_cast<int>(std::ceil(clipped->right()));
    const int y1 = static_cast<int>(std::ceil(clipped->bottom()));
    std::size_t on = 0;
    std::size_t total = 0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            ++total;
            on += roi.covers(x, y) ? 1 : 0;
        }
    }
    return total ? static_cast<double>(on) / static_cast<double>(total) : 0.0;
}

}  // namespace

DetectionSet filter_roi(const DetectionSet& set, const RoiMask& roi, const RoiFilter& rule) {
    DetectionSet out{set.num_classes, set.embedding_dim, {}};
    for (const auto& d : set.records) {
        const bool keep = rule.min_overlap > 0.0 ? roi_overlap(d.bbox, roi) >= rule.min_overlap
                                                 : center_in_roi(d.bbox, roi);
        if (keep) out.records.push_back(d);
    }
    return out;
}

}  // namespace checkout
