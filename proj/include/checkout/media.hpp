#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "checkout/image.hpp"

namespace checkout {

/// Exact frame rate as num/den (29.97 is 2997/100).
struct Rational {
    std::int64_t num = 30;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;

    /// Accepts "30", "30000/1001", "29.97". Result is reduced.
    static Rational parse(const std::string& text);

    friend bool operator==(const Rational&, const Rational&) = default;
};

struct SequenceMeta {
    Rational fps;
    int width = 0;
    int height = 0;
    int frame_count = 0;
    int channels = 1;

    void validate() const;

    friend bool operator==(const SequenceMeta&, const SequenceMeta&) = default;
};

struct Frame {
    int index = 0;
    Image pixels;
};

/// Directory-backed frame store: `sequence.meta` plus `frame_%06d.pgm|ppm`.
/// Immutable after open; read_frame may be called from any thread.
class FrameSequence {
public:
    FrameSequence(std::filesystem::path dir, SequenceMeta meta);

    const SequenceMeta& meta() const { return meta_; }
    const std::filesystem::path& dir() const { return dir_; }

    Frame read_frame(int index) const;
    std::filesystem::path frame_path(int index) const;

private:
    std::filesystem::path dir_;
    SequenceMeta meta_;
};

FrameSequence open_sequence(const std::filesystem::path& dir);

/// Writes the sidecar and every frame; frames must match meta dimensions.
void write_sequence(const std::filesystem::path& dir, const SequenceMeta& meta,
                    const std::vector<Image>& frames);
void write_sequence_meta(const std::filesystem::path& dir, const SequenceMeta& meta);
SequenceMeta read_sequence_meta(const std::filesystem::path& dir);

std::string frame_file_name(int index, int channels);

/// ceil(fraction * frame_count) distinct indices, uniform without replacement, ascending.
std::vector<int> sample_indices(int frame_count, double fraction, std::uint64_t seed);

}  // namespace checkout
