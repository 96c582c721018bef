#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace checkout {

/// Row-major 8-bit image with interleaved channels (1 = gray, 3 = RGB).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    std::uint8_t& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    std::uint8_t at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

    bool empty() const { return data.empty(); }

    friend bool operator==(const Image&, const Image&) = default;
};

/// 16-bit single-channel grid; used for segmentation label masks.
struct LabelGrid {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> labels;

    std::uint16_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint16_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// Binary PNM (P5/P6, maxval 255). Throws FormatError on malformed headers.
Image read_pnm(const std::filesystem::path& path);
Image decode_pnm(std::span<const std::uint8_t> bytes);
void write_pnm(const std::filesystem::path& path, const Image& img);
std::vector<std::uint8_t> encode_pnm(const Image& img);

/// P5 with maxval up to 65535 (big-endian samples above 255).
LabelGrid read_label_pgm(const std::filesystem::path& path);
void write_label_pgm(const std::filesystem::path& path, const LabelGrid& grid);

/// Luma 0.299 R + 0.587 G + 0.114 B, rounded to nearest.
Image to_gray(const Image& img);

}  // namespace checkout
