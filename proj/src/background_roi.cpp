#include "checkout/background_roi.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <fmt/format.h>

#include "checkout/error.hpp"
#include "checkout/keyvalue.hpp"

namespace checkout {

std::size_t BinaryGrid::count() const {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

void ThresholdParams::validate() const {
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
    if (!(k1 > 0.0) || !(k2 > 0.0)) throw std::invalid_argument("k1 and k2 must be > 0");
}

BackgroundImage median_background(const std::vector<Image>& frames) {
    if (frames.empty()) throw Error("estimate_background: empty sequence");
    std::vector<Image> gray;
    gray.reserve(frames.size());
    for (const auto& f : frames) gray.push_back(to_gray(f));
    const int w = gray.front().width;
    const int h = gray.front().height;
    for (const auto& g : gray) {
        if (g.width != w || g.height != h) throw Error("estimate_background: frame size mismatch");
    }

    const std::size_t n = gray.size();
    const std::size_t mid = (n - 1) / 2;  // lower median for even n
    BackgroundImage bg{Image(w, h, 1)};
    std::vector<std::uint8_t> column(n);
    for (std::size_t p = 0; p < bg.pixels.data.size(); ++p) {
        for (std::size_t i = 0; i < n; ++i) column[i] = gray[i].data[p];
        std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid), column.end());
        bg.pixels.data[p] = column[mid];
    }
    return bg;
}

BackgroundImage estimate_background(const FrameSequence& seq, double fraction, std::uint64_t seed) {
    if (seq.meta().frame_count < 1) throw Error("estimate_background: empty sequence");
    const auto indices = sample_indices(seq.meta().frame_count, fraction, seed);
    std::vector<Image> frames;
    frames.reserve(indices.size());
    for (int idx : indices) frames.push_back(to_gray(seq.read_frame(idx).pixels));
    return median_background(frames);
}

std::pair<double, double> intensity_stats(const BackgroundImage& bg) {
    const auto& d = bg.pixels.data;
    if (d.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (auto v : d) sum += v;
    const double mean = sum / static_cast<double>(d.size());
    double sq = 0.0;
    for (auto v : d) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / static_cast<double>(d.size()))};
}

ThresholdBounds compute_threshold_bounds(const ThresholdParams& params) {
    params.validate();
    const double spread = params.k1 * params.sigma;
    return ThresholdBounds{(params.mu - spread) / params.k2, (params.mu + spread) / (params.k1 + params.k2)};
}

BinaryGrid binarize(const BackgroundImage& bg, const ThresholdBounds& bounds) {
    const auto& img = bg.pixels;
    BinaryGrid out(img.width, img.height);
    if (bounds.empty()) return out;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = img.data[i];
        out.bits[i] = (v >= bounds.lower && v <= bounds.upper) ? 1 : 0;
    }
    return out;
}

BinaryGrid invert(const BinaryGrid& grid) {
    BinaryGrid out = grid;
    for (auto& b : out.bits) b = b ? 0 : 1;
    return out;
}

namespace {

// Separable min (erode) or max (dilate) over a clipped (2r+1)^2 window.
BinaryGrid morph(const BinaryGrid& grid, int radius, bool take_max) {
    if (radius <= 0) return grid;
    const int w = grid.width;
    const int h = grid.height;
    BinaryGrid rows(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t acc = take_max ? 0 : 1;
            for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
                acc = take_max ? std::max(acc, grid.at(xx, y)) : std::min(acc, grid.at(xx, y));
            }
            rows.at(x, y) = acc;
        }
    }
    BinaryGrid out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t acc = take_max ? 0 : 1;
            for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius); ++yy) {
                acc = take_max ? std::max(acc, rows.at(x, yy)) : std::min(acc, rows.at(x, yy));
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

PixelRect tight_bbox(const BinaryGrid& grid) {
    int x0 = grid.width, y0 = grid.height, x1 = -1, y1 = -1;
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            if (!grid.at(x, y)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

}  // namespace

BinaryGrid erode(const BinaryGrid& grid, int radius) { return morph(grid, radius, false); }
BinaryGrid dilate(const BinaryGrid& grid, int radius) { return morph(grid, radius, true); }

RoiMask roi_from_bits(BinaryGrid bits) {
    RoiMask roi;
    roi.area = bits.count();
    roi.bbox = tight_bbox(bits);
    roi.bits = std::move(bits);
    return roi;
}

RoiMask extract_roi(const BinaryGrid& mask, int open_radius, int close_radius) {
    if (mask.bits.empty()) throw std::invalid_argument("extract_roi: empty grid");
    if (open_radius < 0 || close_radius < 0) throw std::invalid_argument("extract_roi: negative radius");

    BinaryGrid cleaned = dilate(erode(mask, open_radius), open_radius);
    cleaned = erode(dilate(cleaned, close_radius), close_radius);

    const int w = cleaned.width;
    const int h = cleaned.height;

    // Largest 4-connected component; earliest in raster order wins ties.
    std::vector<int> label(cleaned.bits.size(), 0);
    int best_label = 0;
    std::size_t best_area = 0;
    int next_label = 0;
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto idx = static_cast<std::size_t>(y) * w + x;
            if (!cleaned.bits[idx] || label[idx]) continue;
            ++next_label;
            std::size_t area = 0;
            label[idx] = next_label;
            queue.emplace_back(x, y);
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop_front();
                ++area;
                constexpr int dx[] = {1, -1, 0, 0};
                constexpr int dy[] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = cx + dx[k];
                    const int ny = cy + dy[k];
                    if (!cleaned.contains(nx, ny)) continue;
                    const auto nidx = static_cast<std::size_t>(ny) * w + nx;
                    if (cleaned.bits[nidx] && !label[nidx]) {
                        label[nidx] = next_label;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            if (area > best_area) {
                best_area = area;
                best_label = next_label;
            }
        }
    }
    if (best_label == 0) throw Error("no ROI found");

    BinaryGrid component(w, h);
    for (std::size_t i = 0; i < label.size(); ++i) component.bits[i] = label[i] == best_label ? 1 : 0;

    // Hole filling: background reachable from the border (8-connected) stays background.
    BinaryGrid outside(w, h);
    auto seed = [&](int x, int y) {
        if (!component.at(x, y) && !outside.at(x, y)) {
            outside.at(x, y) = 1;
            queue.emplace_back(x, y);
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        for (int ny = cy - 1; ny <= cy + 1; ++ny) {
            for (int nx = cx - 1; nx <= cx + 1; ++nx) {
                if (component.contains(nx, ny)) seed(nx, ny);
            }
        }
    }
    for (std::size_t i = 0; i < component.bits.size(); ++i) component.bits[i] = outside.bits[i] ? 0 : 1;
    return roi_from_bits(std::move(component));
}

RoiResult compute_roi(const FrameSequence& seq, const RoiParams& params) {
    RoiResult result;
    result.background = estimate_background(seq, params.fraction, params.seed);
    const auto [mu, sigma] = intensity_stats(result.background);
    result.bounds = compute_threshold_bounds(ThresholdParams{mu, sigma, params.k1, params.k2});
    BinaryGrid mask = binarize(result.background, result.bounds);
    if (params.invert) mask = invert(mask);
    result.roi = extract_roi(mask, params.open_radius, params.close_radius);
    return result;
}

void write_roi(const std::filesystem::path& dir, const RoiMask& roi) {
    std::filesystem::create_directories(dir);
    Image img(roi.bits.width, roi.bits.height, 1);
    for (std::size_t i = 0; i < roi.bits.bits.size(); ++i) img.data[i] = roi.bits.bits[i] ? 255 : 0;
    write_pnm(dir / "roi.pgm", img);
    write_text_file(dir / "roi.meta", fmt::format("bbox={},{},{},{}\narea={}\n", roi.bbox.x, roi.bbox.y,
                                                  roi.bbox.w, roi.bbox.h, roi.area));
}

RoiMask read_roi(const std::filesystem::path& dir) {
    const Image img = read_pnm(dir / "roi.pgm");
    if (img.channels != 1) throw FormatError("roi.pgm must be grayscale");
    BinaryGrid bits(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) bits.bits[i] = img.data[i] > 127 ? 1 : 0;
    RoiMask roi = roi_from_bits(std::move(bits));
    if (std::filesystem::exists(dir / "roi.meta")) {
        const auto kv = KeyValues::load(dir / "roi.meta");
        const auto area = kv.get_int("area", static_cast<long long>(roi.area));
        if (area != static_cast<long long>(roi.area)) throw FormatError("roi.meta area disagrees with roi.pgm");
    }
    if (roi.area == 0) throw FormatError("no ROI found: roi.pgm is empty");
    return roi;
}

}  // namespace checkout
