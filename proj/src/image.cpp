#include "checkout/image.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "checkout/error.hpp"

namespace checkout {

namespace {

struct PnmHeader {
    char kind = 0;  // '5' or '6'
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t data_offset = 0;
};

// Netpbm header: magic, width, height, maxval separated by whitespace, `#` comments
// allowed between tokens, exactly one whitespace byte before the raster.
PnmHeader parse_header(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* field) {
        skip_space();
        long long v = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000) throw FormatError(std::string("PNM ") + field + " too large");
            ++pos;
            ++digits;
        }
        if (digits == 0) throw FormatError(std::string("PNM header: missing ") + field);
        return static_cast<int>(v);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw FormatError("not a binary PGM/PPM (expected P5 or P6)");
    }
    PnmHeader h;
    h.kind = static_cast<char>(bytes[1]);
    pos = 2;
    h.width = read_uint("width");
    h.height = read_uint("height");
    h.maxval = read_uint("maxval");
    if (pos >= bytes.size()) throw FormatError("PNM header: truncated");
    ++pos;  // single whitespace separator
    if (h.width < 1 || h.height < 1) throw FormatError("PNM header: zero dimension");
    if (h.maxval < 1 || h.maxval > 65535) throw FormatError("PNM header: bad maxval");
    h.data_offset = pos;
    return h;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Image decode_pnm(std::span<const std::uint8_t> bytes) {
    const auto h = parse_header(bytes);
    if (h.maxval != 255) throw FormatError("PNM maxval must be 255");
    Image img(h.width, h.height, h.kind == '5' ? 1 : 3);
    if (bytes.size() - h.data_offset < img.data.size()) throw FormatError("PNM raster truncated");
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), img.data.size(), img.data.begin());
    return img;
}

Image read_pnm(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    try {
        return decode_pnm(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw Error("PNM supports 1 or 3 channels");
    const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width) +
                               " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
    const auto bytes = encode_pnm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

LabelGrid read_label_pgm(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    const auto h = parse_header(bytes);
    if (h.kind != '5') throw FormatError(path.string() + ": label mask must be P5");
    LabelGrid grid{h.width, h.height, std::vector<std::uint16_t>(static_cast<std::size_t>(h.width) * h.height)};
    const std::size_t sample = h.maxval > 255 ? 2 : 1;
    if (bytes.size() - h.data_offset < grid.labels.size() * sample) {
        throw FormatError(path.string() + ": PGM raster truncated");
    }
    const auto* p = bytes.data() + h.data_offset;
    for (std::size_t i = 0; i < grid.labels.size(); ++i) {
        grid.labels[i] = sample == 2 ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
    }
    return grid;
}

void write_label_pgm(const std::filesystem::path& path, const LabelGrid& grid) {
    std::uint16_t maxval = 255;
    for (auto v : grid.labels) maxval = std::max(maxval, v);
    const bool wide = maxval > 255;
    std::string header = "P5\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n" +
                         std::to_string(wide ? 65535 : 255) + "\n";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << header;
    for (auto v : grid.labels) {
        if (wide) out.put(static_cast<char>(v >> 8));
        out.put(static_cast<char>(v & 0xff));
    }
}

Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image gray(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double l = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            gray.at(x, y) = static_cast<std::uint8_t>(std::lround(l));
        }
    }
    return gray;
}

}  // namespace checkout
