#include "checkout/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "checkout/error.hpp"

namespace checkout {

namespace fs = std::filesystem;

namespace {

constexpr std::uint8_t kSurround = 40;
constexpr std::uint8_t kTray = 200;
constexpr std::uint8_t kObject = 110;

// Detection text keeps two decimals; snapping here makes the on-disk boxes exact.
double snap(double v) { return std::round(v * 100.0) / 100.0; }

std::vector<double> random_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = n01(rng);
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

bool on_tray(const PixelRect& tray, const BBox& box) {
    const auto cx = static_cast<int>(std::floor(box.center_x()));
    const auto cy = static_cast<int>(std::floor(box.center_y()));
    return cx >= tray.x && cx < tray.x + tray.w && cy >= tray.y && cy < tray.y + tray.h;
}

}  // namespace

int ScenarioConfig::frame_count() const {
    return static_cast<int>(std::floor(duration_s * fps.value() + 1e-9));
}

void ScenarioConfig::validate() const {
    if (fps.num <= 0 || fps.den <= 0) throw InputError("simulator: fps must be positive");
    if (!(duration_s > 0.0 && duration_s <= 60.0)) throw InputError("simulator: duration_s must be in (0, 60]");
    if (width < 16 || height < 16) throw InputError("simulator: frame too small");
    if (tray.x < 1 || tray.y < 1 || tray.w < 8 || tray.h < 8 || tray.x + tray.w >= width || tray.y + tray.h >= height) {
        throw InputError("simulator: tray must lie strictly inside the frame");
    }
    if (objects < 0) throw InputError("simulator: objects must be >= 0");
    if (class_min < 1 || class_max < class_min) throw InputError("simulator: bad class pool");
    if (!(speed_min > 0.0 && speed_max >= speed_min)) throw InputError("simulator: bad speed range");
    if (size_min < 2 || size_max < size_min) throw InputError("simulator: bad size range");
    if (size_max + 4 > tray.h) throw InputError("simulator: objects taller than the tray");
    if (noise_px < 0.0 || embedding_noise < 0.0) throw InputError("simulator: noise must be >= 0");
    for (double r : {drop, fp_rate}) {
        if (!(r >= 0.0 && r <= 1.0)) throw InputError("simulator: rates must be in [0, 1]");
    }
    if (embedding_dim < 0) throw InputError("simulator: embedding_dim must be >= 0");
    if (video_id < 1) throw InputError("simulator: video_id must be >= 1");
}

ScenarioConfig ScenarioConfig::from(const KeyValues& kv) {
    ScenarioConfig c;
    if (auto fps = kv.get("fps")) c.fps = Rational::parse(*fps);
    c.duration_s = kv.get_double("duration_s", c.duration_s);
    c.width = static_cast<int>(kv.get_int("width", c.width));
    c.height = static_cast<int>(kv.get_int("height", c.height));
    if (auto tray = kv.get("tray")) {
        int v[4];
        std::size_t start = 0;
        for (int i = 0; i < 4; ++i) {
            const auto comma = tray->find(',', start);
            const auto tok = tray->substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            auto n = parse_int(tok);
            if (!n || (i < 3 && comma == std::string::npos)) throw InputError("simulator: tray must be x,y,w,h");
            v[i] = static_cast<int>(*n);
            start = comma + 1;
        }
        c.tray = PixelRect{v[0], v[1], v[2], v[3]};
    }
    c.objects = static_cast<int>(kv.get_int("objects", c.objects));
    c.class_min = static_cast<int>(kv.get_int("class_min", c.class_min));
    c.class_max = static_cast<int>(kv.get_int("class_max", c.class_max));
    c.speed_min = kv.get_double("speed_min", c.speed_min);
    c.speed_max = kv.get_double("speed_max", c.speed_max);
    c.size_min = static_cast<int>(kv.get_int("size_min", c.size_min));
    c.size_max = static_cast<int>(kv.get_int("size_max", c.size_max));
    c.noise_px = kv.get_double("noise_px", c.noise_px);
    c.drop = kv.get_double("drop", c.drop);
    c.fp_rate = kv.get_double("fp_rate", c.fp_rate);
    c.embedding_dim = static_cast<int>(kv.get_int("embedding_dim", c.embedding_dim));
    c.embedding_noise = kv.get_double("embedding_noise", c.embedding_noise);
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
    c.video_id = static_cast<int>(kv.get_int("video_id", c.video_id));
    c.render_frames = kv.get_bool("render_frames", c.render_frames);
    c.validate();
    return c;
}

BBox ObjectTruth::box_at(int frame) const {
    const double t = frame - start_frame;
    const double cx = cx0 + vx * t;
    const double cy = cy0 + vy * t;
    return BBox{snap(cx - w / 2.0), snap(cy - h / 2.0), w, h};
}

std::vector<GroundTruthInterval> ScenarioTruth::intervals() const {
    std::vector<GroundTruthInterval> out;
    for (const auto& o : objects) {
        if (o.enter_frame < 0) continue;
        out.push_back(GroundTruthInterval{video_id, o.class_id, o.t_enter, o.t_exit, static_cast<int>(out.size())});
    }
    return out;
}

Scenario generate(const ScenarioConfig& config) {
    config.validate();
    const int frames = config.frame_count();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    Scenario sc;
    sc.meta = SequenceMeta{config.fps, config.width, config.height, frames, 1};
    sc.truth.video_id = config.video_id;
    sc.detections.num_classes = std::max(116, config.class_max);
    sc.detections.embedding_dim = config.embedding_dim;

    const auto& tray = config.tray;
    std::vector<std::vector<double>> identities;
    for (int i = 0; i < config.objects; ++i) {
        ObjectTruth o;
        o.class_id = uniform_int(config.class_min, config.class_max);
        o.w = uniform_int(config.size_min, config.size_max);
        o.h = uniform_int(config.size_min, std::min(config.size_max, tray.h - 4));
        const double speed = uniform(config.speed_min, config.speed_max);

        // Horizontal pass over the tray starting and ending in the surround, box fully in frame.
        const double left_room = tray.x - o.w / 2.0 - 1.0;
        const double right_room = config.width - (tray.x + tray.w) - o.w / 2.0 - 1.0;
        const double xs = tray.x - std::max(0.0, left_room) * uniform(0.5, 1.0);
        const double xe = tray.x + tray.w + std::max(0.0, right_room) * uniform(0.5, 1.0);
        const double lane_lo = tray.y + o.h / 2.0 + 2.0;
        const double lane_hi = tray.y + tray.h - o.h / 2.0 - 2.0;
        const double ys = uniform(lane_lo, lane_hi);
        const double ye = uniform(lane_lo, lane_hi);
        const bool rightward = unit(rng) < 0.5;
        const int span = static_cast<int>(std::ceil((xe - xs) / speed));
        if (span + 1 >= frames) throw InputError("simulator: duration too short for an object to cross the tray");
        o.start_frame = uniform_int(0, frames - 1 - span);
        o.end_frame = o.start_frame + span;
        o.cx0 = rightward ? xs : xe;
        o.cy0 = ys;
        o.vx = (rightward ? 1.0 : -1.0) * (xe - xs) / span;
        o.vy = (ye - ys) / span;

        for (int f = o.start_frame; f <= o.end_frame; ++f) {
            if (!on_tray(tray, o.box_at(f))) continue;
            if (o.enter_frame < 0) o.enter_frame = f;
            o.exit_frame = f;
        }
        o.t_enter = static_cast<double>(o.enter_frame) * config.fps.den / config.fps.num;
        o.t_exit = static_cast<double>(o.exit_frame) * config.fps.den / config.fps.num;
        sc.truth.objects.push_back(o);
        identities.push_back(config.embedding_dim > 0 ? random_unit(rng, config.embedding_dim) : std::vector<double>{});
    }

    std::normal_distribution<double> pos_noise(0.0, 1.0);
    std::normal_distribution<double> emb_noise(0.0, 1.0);
    auto perturbed = [&](const std::vector<double>& identity) {
        std::vector<double> e = identity;
        if (e.empty()) return e;
        double norm = 0.0;
        for (auto& x : e) {
            x += config.embedding_noise * emb_noise(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : e) x /= norm;
        return e;
    };

    for (int f = 0; f < frames; ++f) {
        for (std::size_t i = 0; i < sc.truth.objects.size(); ++i) {
            const auto& o = sc.truth.objects[i];
            if (f < o.start_frame || f > o.end_frame) continue;
            BBox box = o.box_at(f);
            if (config.noise_px > 0.0) {
                const double cx = box.center_x() + config.noise_px * pos_noise(rng);
                const double cy = box.center_y() + config.noise_px * pos_noise(rng);
                const double w = std::max(4.0, box.w + config.noise_px * pos_noise(rng));
                const double h = std::max(4.0, box.h + config.noise_px * pos_noise(rng));
                box = BBox{snap(cx - w / 2.0), snap(cy - h / 2.0), snap(w), snap(h)};
            }
            const double conf = uniform(0.6, 0.99);
            auto emb = perturbed(identities[i]);
            if (config.drop > 0.0 && unit(rng) < config.drop) continue;
            sc.detections.records.push_back(Detection{f, o.class_id, conf, box, std::move(emb)});
        }
        if (config.fp_rate > 0.0) {
            std::poisson_distribution<int> fp_count(config.fp_rate);
            const int n = fp_count(rng);
            for (int k = 0; k < n; ++k) {
                const double w = uniform_int(config.size_min, config.size_max);
                const double h = uniform_int(config.size_min, config.size_max);
                const BBox box{snap(uniform(0.0, config.width - w)), snap(uniform(0.0, config.height - h)), w, h};
                const int cls = uniform_int(config.class_min, config.class_max);
                const double conf = uniform(0.3, 0.7);
                auto emb = config.embedding_dim > 0 ? random_unit(rng, config.embedding_dim) : std::vector<double>{};
                sc.detections.records.push_back(Detection{f, cls, conf, box, std::move(emb)});
            }
        }
    }
    sc.detections.sort();
    return sc;
}

std::string write_truth(const ScenarioTruth& truth) {
    const auto intervals = truth.intervals();
    return write_truth(std::span<const GroundTruthInterval>(intervals));
}

RoiMask tray_mask(const ScenarioConfig& config) {
    BinaryGrid bits(config.width, config.height);
    for (int y = config.tray.y; y < config.tray.y + config.tray.h; ++y) {
        for (int x = config.tray.x; x < config.tray.x + config.tray.w; ++x) bits.at(x, y) = 1;
    }
    return roi_from_bits(std::move(bits));
}

void render_frames(const ScenarioConfig& config, const ScenarioTruth& truth, const fs::path& dir) {
    const int frames = config.frame_count();
    const SequenceMeta meta{config.fps, config.width, config.height, frames, 1};
    write_sequence_meta(dir, meta);
    Image base(config.width, config.height, 1, kSurround);
    for (int y = config.tray.y; y < config.tray.y + config.tray.h; ++y) {
        for (int x = config.tray.x; x < config.tray.x + config.tray.w; ++x) base.at(x, y) = kTray;
    }
    for (int f = 0; f < frames; ++f) {
        Image img = base;
        for (const auto& o : truth.objects) {
            if (f < o.start_frame || f > o.end_frame) continue;
            const BBox b = o.box_at(f);
            const int x0 = std::max(0, static_cast<int>(std::floor(b.x)));
            const int y0 = std::max(0, static_cast<int>(std::floor(b.y)));
            const int x1 = std::min(config.width, static_cast<int>(std::ceil(b.right())));
            const int y1 = std::min(config.height, static_cast<int>(std::ceil(b.bottom())));
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) img.at(x, y) = kObject;
            }
        }
        write_pnm(dir / frame_file_name(f, 1), img);
    }
}

Scenario write_scenario(const ScenarioConfig& config, const fs::path& dir) {
    Scenario sc = generate(config);
    fs::create_directories(dir);
    write_text_file(dir / "dets.txt", serialize_detections(sc.detections));
    write_text_file(dir / "truth.txt", write_truth(sc.truth));
    write_roi(dir / "tray_roi", tray_mask(config));
    if (config.render_frames) render_frames(config, sc.truth, dir / "frames");
    return sc;
}

}  // namespace checkout
