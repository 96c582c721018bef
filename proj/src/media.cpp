#include "checkout/media.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "checkout/error.hpp"
#include "checkout/keyvalue.hpp"

namespace checkout {

namespace fs = std::filesystem;

std::string Rational::str() const { return std::to_string(num) + "/" + std::to_string(den); }

Rational Rational::parse(const std::string& text) {
    std::int64_t num = 0;
    std::int64_t den = 1;
    if (const auto slash = text.find('/'); slash != std::string::npos) {
        auto n = parse_int(text.substr(0, slash));
        auto d = parse_int(text.substr(slash + 1));
        if (!n || !d) throw FormatError("bad rational: " + text);
        num = *n;
        den = *d;
    } else if (const auto dot = text.find('.'); dot != std::string::npos) {
        const std::string frac = text.substr(dot + 1);
        auto whole = parse_int(text.substr(0, dot).empty() ? "0" : text.substr(0, dot));
        auto part = frac.empty() ? std::optional<long long>(0) : parse_int(frac);
        if (!whole || !part || frac.size() > 12 || *part < 0 || (!frac.empty() && frac.front() == '-')) {
            throw FormatError("bad decimal: " + text);
        }
        den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        num = *whole * den + (text.front() == '-' ? -*part : *part);
    } else {
        auto n = parse_int(text);
        if (!n) throw FormatError("bad rational: " + text);
        num = *n;
    }
    if (den == 0) throw FormatError("zero denominator: " + text);
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const auto g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational{num, den};
}

void SequenceMeta::validate() const {
    if (fps.num <= 0 || fps.den <= 0) throw FormatError("fps must be positive");
    if (width < 1 || height < 1) throw FormatError("width and height must be >= 1");
    if (frame_count < 1) throw FormatError("frame_count must be >= 1");
    if (channels != 1 && channels != 3) throw FormatError("channels must be 1 or 3");
}

std::string frame_file_name(int index, int channels) {
    return fmt::format("frame_{:06d}.{}", index, channels == 3 ? "ppm" : "pgm");
}

FrameSequence::FrameSequence(fs::path dir, SequenceMeta meta) : dir_(std::move(dir)), meta_(meta) {}

fs::path FrameSequence::frame_path(int index) const { return dir_ / frame_file_name(index, meta_.channels); }

Frame FrameSequence::read_frame(int index) const {
    if (index < 0 || index >= meta_.frame_count) {
        throw std::out_of_range(fmt::format("frame index {} out of range [0, {})", index, meta_.frame_count));
    }
    Image img = read_pnm(frame_path(index));
    if (img.width != meta_.width || img.height != meta_.height || img.channels != meta_.channels) {
        throw FormatError(fmt::format("corrupt frame {}: {}x{}x{} does not match sequence {}x{}x{}", index,
                                      img.width, img.height, img.channels, meta_.width, meta_.height,
                                      meta_.channels));
    }
    return Frame{index, std::move(img)};
}

SequenceMeta read_sequence_meta(const fs::path& dir) {
    const auto sidecar = dir / "sequence.meta";
    if (!fs::exists(sidecar)) throw FormatError("missing sidecar: " + sidecar.string());
    const auto kv = KeyValues::load(sidecar);
    for (const char* key : {"fps", "width", "height", "frame_count", "channels"}) {
        if (!kv.contains(key)) throw FormatError(std::string("sequence.meta: missing key ") + key);
    }
    SequenceMeta meta;
    meta.fps = Rational::parse(*kv.get("fps"));
    try {
        meta.width = static_cast<int>(kv.get_int("width", 0));
        meta.height = static_cast<int>(kv.get_int("height", 0));
        meta.frame_count = static_cast<int>(kv.get_int("frame_count", 0));
        meta.channels = static_cast<int>(kv.get_int("channels", 0));
    } catch (const InputError& e) {
        throw FormatError(std::string("sequence.meta: ") + e.what());
    }
    meta.validate();
    return meta;
}

void write_sequence_meta(const fs::path& dir, const SequenceMeta& meta) {
    meta.validate();
    fs::create_directories(dir);
    write_text_file(dir / "sequence.meta",
                    fmt::format("fps={}\nwidth={}\nheight={}\nframe_count={}\nchannels={}\n", meta.fps.str(),
                                meta.width, meta.height, meta.frame_count, meta.channels));
}

FrameSequence open_sequence(const fs::path& dir) {
    const SequenceMeta meta = read_sequence_meta(dir);

    // Count frame files actually present, independent of the declared count.
    const std::string ext = meta.channels == 3 ? ".ppm" : ".pgm";
    int present = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() == 16 && name.rfind("frame_", 0) == 0 && entry.path().extension() == ext) {
            ++present;
        }
    }
    if (present != meta.frame_count) {
        throw FormatError(fmt::format("frame-count mismatch: sequence.meta declares {} frames, found {}",
                                      meta.frame_count, present));
    }

    FrameSequence seq(dir, meta);
    char head[64];
    for (int i = 0; i < meta.frame_count; ++i) {
        const auto path = seq.frame_path(i);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError("frame-count mismatch: missing " + path.filename().string());
        in.read(head, sizeof(head));
        std::vector<std::uint8_t> bytes(head, head + in.gcount());
        // Header-only check: pad a fake raster so decode validates magic and dimensions.
        bytes.resize(bytes.size() + static_cast<std::size_t>(meta.width) * meta.height * meta.channels);
        Image probe;
        try {
            probe = decode_pnm(bytes);
        } catch (const FormatError& e) {
            throw FormatError("malformed frame header in " + path.filename().string() + ": " + e.what());
        }
        if (probe.width != meta.width || probe.height != meta.height || probe.channels != meta.channels) {
            throw FormatError("malformed frame header in " + path.filename().string() +
                              ": dimensions disagree with sequence.meta");
        }
    }
    return seq;
}

void write_sequence(const fs::path& dir, const SequenceMeta& meta, const std::vector<Image>& frames) {
    if (static_cast<int>(frames.size()) != meta.frame_count) throw Error("write_sequence: frame count mismatch");
    write_sequence_meta(dir, meta);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (f.width != meta.width || f.height != meta.height || f.channels != meta.channels) {
            throw Error("write_sequence: frame dimensions disagree with meta");
        }
        write_pnm(dir / frame_file_name(static_cast<int>(i), meta.channels), f);
    }
}

std::vector<int> sample_indices(int frame_count, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must be in (0, 1]");
    if (frame_count < 1) throw std::invalid_argument("frame_count must be >= 1");
    // Guard against products like 0.1 * 1800 landing a hair above an integer.
    const double exact = fraction * frame_count;
    auto count = static_cast<int>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
    count = std::clamp(count, 1, frame_count);

    std::vector<int> all(static_cast<std::size_t>(frame_count));
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(count));
    std::mt19937_64 rng(seed);
    // Selection sampling keeps input order, so the output is already ascending.
    std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);
    return picked;
}

}  // namespace checkout
