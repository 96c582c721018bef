#include "checkout/dataset_prep.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>

#include "checkout/error.hpp"
#include "checkout/keyvalue.hpp"

namespace checkout {

namespace fs = std::filesystem;

std::vector<LabeledBox> mask_to_bboxes(const SegMask& mask) {
    struct Extent {
        int x0, y0, x1, y1;
    };
    std::map<int, Extent> extents;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const int label = mask.at(x, y);
            if (label == 0) continue;
            auto [it, inserted] = extents.try_emplace(label, Extent{x, y, x, y});
            if (!inserted) {
                auto& e = it->second;
                e.x0 = std::min(e.x0, x);
                e.y0 = std::min(e.y0, y);
                e.x1 = std::max(e.x1, x);
                e.y1 = std::max(e.y1, y);
            }
        }
    }
    std::vector<LabeledBox> out;
    out.reserve(extents.size());
    for (const auto& [label, e] : extents) {
        out.push_back(LabeledBox{label, BBox{static_cast<double>(e.x0), static_cast<double>(e.y0),
                                             static_cast<double>(e.x1 - e.x0 + 1), static_cast<double>(e.y1 - e.y0 + 1)}});
    }
    return out;
}

Image resize_nearest(const Image& img, int width, int height) {
    Image out(width, height, img.channels);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(img.height - 1, static_cast<int>((y + 0.5) * img.height / height));
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(img.width - 1, static_cast<int>((x + 0.5) * img.width / width));
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

namespace {

// Clip `box` to `region`; keep it only if enough of its area survives.
std::optional<BBox> clip_keep(const BBox& box, const BBox& region, double min_visible) {
    const auto clipped = intersect(box, region);
    if (!clipped || clipped->area() < min_visible * box.area()) return std::nullopt;
    return clipped;
}

Image as_rgb(const Image& img) {
    if (img.channels == 3) return img;
    Image out(img.width, img.height, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
    }
    return out;
}

}  // namespace

LabeledImage mosaic_at(const std::array<LabeledImage, 4>& images, int out_size, int center_x, int center_y,
                       double min_visible) {
    if (out_size < 2) throw std::invalid_argument("mosaic: out_size must be >= 2");
    const int channels = images[0].pixels.channels;
    for (const auto& im : images) {
        if (im.pixels.channels != channels) throw std::invalid_argument("mosaic: mixed channel counts");
    }
    LabeledImage out{Image(out_size, out_size, channels), {}};
    const BBox canvas{0.0, 0.0, static_cast<double>(out_size), static_cast<double>(out_size)};
    const std::array<std::array<int, 4>, 4> quads = {{
        {0, 0, center_x, center_y},
        {center_x, 0, out_size - center_x, center_y},
        {0, center_y, center_x, out_size - center_y},
        {center_x, center_y, out_size - center_x, out_size - center_y},
    }};
    for (std::size_t q = 0; q < 4; ++q) {
        const auto [qx, qy, qw, qh] = quads[q];
        if (qw <= 0 || qh <= 0) continue;
        const auto& src = images[q];
        const Image tile = resize_nearest(src.pixels, qw, qh);
        for (int y = 0; y < qh; ++y) {
            for (int x = 0; x < qw; ++x) {
                for (int c = 0; c < channels; ++c) out.pixels.at(qx + x, qy + y, c) = tile.at(x, y, c);
            }
        }
        const double sx = static_cast<double>(qw) / src.pixels.width;
        const double sy = static_cast<double>(qh) / src.pixels.height;
        for (const auto& b : src.boxes) {
            const BBox mapped{qx + b.box.x * sx, qy + b.box.y * sy, b.box.w * sx, b.box.h * sy};
            if (auto kept = clip_keep(mapped, canvas, min_visible)) out.boxes.push_back({b.class_id, *kept});
        }
    }
    return out;
}

LabeledImage mosaic(const std::array<LabeledImage, 4>& images, int out_size, std::uint64_t seed, double min_visible) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> centre(out_size / 4, (3 * out_size) / 4);
    const int cx = centre(rng);
    const int cy = centre(rng);
    return mosaic_at(images, out_size, cx, cy, min_visible);
}

CutRegion cutmix_region(int width, int height, double lam, std::uint64_t seed) {
    if (!(lam > 0.0 && lam <= 1.0)) throw std::invalid_argument("cutmix: lam must be in (0, 1)");
    const double ratio = std::sqrt(1.0 - lam);
    CutRegion r;
    r.w = static_cast<int>(std::lround(width * ratio));
    r.h = static_cast<int>(std::lround(height * ratio));
    std::mt19937_64 rng(seed);
    r.x = std::uniform_int_distribution<int>(0, width - r.w)(rng);
    r.y = std::uniform_int_distribution<int>(0, height - r.h)(rng);
    return r;
}

LabeledImage cutmix(const LabeledImage& a, const LabeledImage& b, double lam, std::uint64_t seed, double min_visible) {
    if (a.pixels.width != b.pixels.width || a.pixels.height != b.pixels.height ||
        a.pixels.channels != b.pixels.channels) {
        throw std::invalid_argument("cutmix: image dimensions differ");
    }
    const auto region = cutmix_region(a.pixels.width, a.pixels.height, lam, seed);
    LabeledImage out{a.pixels, {}};
    for (int y = region.y; y < region.y + region.h; ++y) {
        for (int x = region.x; x < region.x + region.w; ++x) {
            for (int c = 0; c < a.pixels.channels; ++c) out.pixels.at(x, y, c) = b.pixels.at(x, y, c);
        }
    }
    const BBox hole{static_cast<double>(region.x), static_cast<double>(region.y), static_cast<double>(region.w),
                    static_cast<double>(region.h)};
    for (const auto& box : a.boxes) {
        const auto covered = intersect(box.box, hole);
        const double visible = box.box.area() - (covered ? covered->area() : 0.0);
        if (visible >= min_visible * box.box.area()) out.boxes.push_back(box);
    }
    for (const auto& box : b.boxes) {
        if (auto kept = clip_keep(box.box, hole, min_visible)) out.boxes.push_back({box.class_id, *kept});
    }
    return out;
}

namespace {

int reflect101(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

}  // namespace

Image blur(const Image& img, int kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("blur: kernel must be odd and >= 1");
    if (kernel == 1) return img;
    const int r = kernel / 2;
    const int area = kernel * kernel;
    Image out(img.width, img.height, img.channels);
    // Horizontal sums first, then vertical; both use reflected indices.
    std::vector<int> rows(img.data.size());
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                int s = 0;
                for (int dx = -r; dx <= r; ++dx) s += img.at(reflect101(x + dx, img.width), y, c);
                rows[img.index(x, y, c)] = s;
            }
        }
    }
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                int s = 0;
                for (int dy = -r; dy <= r; ++dy) s += rows[img.index(x, reflect101(y + dy, img.height), c)];
                out.at(x, y, c) = static_cast<std::uint8_t>((s + area / 2) / area);
            }
        }
    }
    return out;
}

GeoParams random_geo_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    GeoParams p;
    p.scale = 0.75 + 0.5 * unit(rng);
    const double cw = 0.6 + 0.4 * unit(rng);
    const double ch = 0.6 + 0.4 * unit(rng);
    p.crop = BBox{(1.0 - cw) * unit(rng), (1.0 - ch) * unit(rng), cw, ch};
    p.hflip = unit(rng) < 0.5;
    p.rotate_quarters = std::uniform_int_distribution<int>(0, 3)(rng);
    return p;
}

LabeledImage geometric_distort(const LabeledImage& img, const GeoParams& params, double min_visible) {
    if (!(params.scale >= 0.5 && params.scale <= 2.0)) throw std::invalid_argument("geometric_distort: scale outside [0.5, 2]");
    const auto& c = params.crop;
    constexpr double eps = 1e-12;
    if (c.x < 0.0 || c.y < 0.0 || !(c.w > 0.0) || !(c.h > 0.0) || c.right() > 1.0 + eps || c.bottom() > 1.0 + eps) {
        throw std::invalid_argument("geometric_distort: crop outside image");
    }
    const int W = img.pixels.width;
    const int H = img.pixels.height;
    const int x0 = static_cast<int>(std::lround(c.x * W));
    const int y0 = static_cast<int>(std::lround(c.y * H));
    const int x1 = std::min(W, static_cast<int>(std::lround(c.right() * W)));
    const int y1 = std::min(H, static_cast<int>(std::lround(c.bottom() * H)));
    if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("geometric_distort: crop outside image");

    // Crop.
    const int cw = x1 - x0;
    const int ch = y1 - y0;
    Image cur(cw, ch, img.pixels.channels);
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            for (int k = 0; k < cur.channels; ++k) cur.at(x, y, k) = img.pixels.at(x0 + x, y0 + y, k);
        }
    }
    std::vector<LabeledBox> boxes;
    const BBox crop_region{0.0, 0.0, static_cast<double>(cw), static_cast<double>(ch)};
    for (const auto& b : img.boxes) {
        const BBox shifted{b.box.x - x0, b.box.y - y0, b.box.w, b.box.h};
        if (auto kept = clip_keep(shifted, crop_region, min_visible)) boxes.push_back({b.class_id, *kept});
    }

    // Scale.
    if (params.scale != 1.0) {
        const int nw = std::max(1, static_cast<int>(std::lround(cw * params.scale)));
        const int nh = std::max(1, static_cast<int>(std::lround(ch * params.scale)));
        const double sx = static_cast<double>(nw) / cw;
        const double sy = static_cast<double>(nh) / ch;
        cur = resize_nearest(cur, nw, nh);
        for (auto& b : boxes) b.box = BBox{b.box.x * sx, b.box.y * sy, b.box.w * sx, b.box.h * sy};
    }

    if (params.hflip) {
        Image flipped(cur.width, cur.height, cur.channels);
        for (int y = 0; y < cur.height; ++y) {
            for (int x = 0; x < cur.width; ++x) {
                for (int k = 0; k < cur.channels; ++k) flipped.at(cur.width - 1 - x, y, k) = cur.at(x, y, k);
            }
        }
        cur = std::move(flipped);
        for (auto& b : boxes) b.box.x = cur.width - b.box.x - b.box.w;
    }

    const int quarters = ((params.rotate_quarters % 4) + 4) % 4;
    for (int q = 0; q < quarters; ++q) {
        // Clockwise: (x, y) -> (H - 1 - y, x).
        Image rotated(cur.height, cur.width, cur.channels);
        for (int y = 0; y < cur.height; ++y) {
            for (int x = 0; x < cur.width; ++x) {
                for (int k = 0; k < cur.channels; ++k) rotated.at(cur.height - 1 - y, x, k) = cur.at(x, y, k);
            }
        }
        for (auto& b : boxes) b.box = BBox{cur.height - b.box.y - b.box.h, b.box.x, b.box.h, b.box.w};
        cur = std::move(rotated);
    }
    const BBox canvas{0.0, 0.0, static_cast<double>(cur.width), static_cast<double>(cur.height)};
    for (auto& b : boxes) {
        if (auto inside = intersect(b.box, canvas)) b.box = *inside;
    }
    return LabeledImage{std::move(cur), std::move(boxes)};
}

std::string serialize_labels(const std::vector<LabeledBox>& boxes) {
    std::string out;
    for (const auto& b : boxes) {
        out += fmt::format("{} {} {} {} {}\n", b.class_id, format_shortest(b.box.x), format_shortest(b.box.y),
                           format_shortest(b.box.w), format_shortest(b.box.h));
    }
    return out;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

int run_prep(const PrepOptions& options) {
    if (!fs::is_directory(options.images_dir)) throw InputError("prep: images directory not found: " + options.images_dir.string());
    if (!fs::is_directory(options.masks_dir)) throw InputError("prep: masks directory not found: " + options.masks_dir.string());

    std::map<int, int> mapping;
    const bool mapped = !options.mapping_file.empty();
    if (mapped) {
        const auto kv = KeyValues::load(options.mapping_file);
        for (const auto& [k, v] : kv.items()) {
            const auto label = parse_int(k);
            const auto cls = parse_int(v);
            if (!label || !cls || *cls < 1) throw FormatError("mapping: bad entry " + k + "=" + v);
            mapping[static_cast<int>(*label)] = static_cast<int>(*cls);
        }
    }

    std::vector<fs::path> image_paths;
    for (const auto& e : fs::directory_iterator(options.images_dir)) {
        const auto ext = e.path().extension();
        if (ext == ".ppm" || ext == ".pgm") image_paths.push_back(e.path());
    }
    std::sort(image_paths.begin(), image_paths.end());

    std::vector<LabeledImage> images;
    std::vector<std::string> stems;
    for (const auto& p : image_paths) {
        const auto mask_path = options.masks_dir / (p.stem().string() + ".pgm");
        if (!fs::exists(mask_path)) throw InputError("prep: missing mask for " + p.filename().string());
        LabeledImage li{as_rgb(read_pnm(p)), {}};
        const SegMask mask = read_label_pgm(mask_path);
        if (mask.width != li.pixels.width || mask.height != li.pixels.height) {
            throw FormatError("prep: mask size differs from image " + p.filename().string());
        }
        for (auto b : mask_to_bboxes(mask)) {
            if (mapped) {
                auto it = mapping.find(b.class_id);
                if (it == mapping.end()) throw FormatError(fmt::format("prep: unmapped mask label {} in {}", b.class_id, mask_path.string()));
                b.class_id = it->second;
            }
            li.boxes.push_back(b);
        }
        images.push_back(std::move(li));
        stems.push_back(p.stem().string());
    }

    const auto img_dir = options.out_dir / "images";
    const auto lbl_dir = options.out_dir / "labels";
    fs::create_directories(img_dir);
    fs::create_directories(lbl_dir);
    int written = 0;
    auto emit = [&](const std::string& name, const LabeledImage& li) {
        write_pnm(img_dir / (name + ".ppm"), li.pixels);
        write_text_file(lbl_dir / (name + ".txt"), serialize_labels(li.boxes));
        ++written;
    };

    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& stem = stems[i];
        emit(stem, images[i]);
        if (options.blur) emit(stem + "_blur", LabeledImage{blur(images[i].pixels, options.blur_kernel), images[i].boxes});
        if (options.geo) emit(stem + "_geo", geometric_distort(images[i], random_geo_params(mix_seed(options.seed, 4 * i))));
        if (options.cutmix) {
            for (std::size_t step = 1; step < images.size(); ++step) {
                const auto& partner = images[(i + step) % images.size()];
                if (partner.pixels.width == images[i].pixels.width && partner.pixels.height == images[i].pixels.height) {
                    emit(stem + "_cutmix", cutmix(images[i], partner, options.cutmix_lam, mix_seed(options.seed, 4 * i + 1)));
                    break;
                }
            }
        }
        if (options.mosaic) {
            std::mt19937_64 rng(mix_seed(options.seed, 4 * i + 2));
            std::uniform_int_distribution<std::size_t> pick(0, images.size() - 1);
            const std::array<LabeledImage, 4> four{images[i], images[pick(rng)], images[pick(rng)], images[pick(rng)]};
            emit(stem + "_mosaic", mosaic(four, options.mosaic_size, mix_seed(options.seed, 4 * i + 3)));
        }
    }
    return written;
}

}  // namespace checkout
