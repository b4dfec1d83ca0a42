#pragma once

// File formats shared by every stage and by external feature/track exporters.
//
//   FGRID  "FGRD" u32le H, W, C, then H*W*C f32le, row-major, channel-fastest
//   FGR4   "FGR4" u32le D0..D3, then D0*D1*D2*D3 f32le, last index fastest
//   masks  binary PGM (P5, maxval 255); pixel >= 128 is foreground
//   frames directory of binary PPM (P6, maxval 255) files numbered by a
//          trailing zero-padded integer, consecutive
//   tracks text: "TRACKS F m" then F lines of m triples "x y v", v in {0,1}

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "motionshot/geometry.hpp"

namespace mshot {

struct FeatureGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<float> data;

    FeatureGrid() = default;
    FeatureGrid(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
        : height(h), width(w), channels(c), data(h * w * c, fill) {}

    std::size_t pixels() const { return height * width; }

    std::span<float> at(std::size_t row, std::size_t col) {
        return {data.data() + (row * width + col) * channels, channels};
    }
    std::span<const float> at(std::size_t row, std::size_t col) const {
        return {data.data() + (row * width + col) * channels, channels};
    }
    std::span<const float> pixel(std::size_t index) const {
        return {data.data() + index * channels, channels};
    }

    friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;
};

struct BinaryMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1, row-major

    BinaryMask() = default;
    BinaryMask(std::size_t h, std::size_t w, bool fill = false) : height(h), width(w), bits(h * w, fill ? 1 : 0) {}

    bool at(std::size_t row, std::size_t col) const { return bits[row * width + col] != 0; }
    void set(std::size_t row, std::size_t col, bool v) { bits[row * width + col] = v ? 1 : 0; }

    /// False outside the image.
    bool contains(long row, long col) const {
        return row >= 0 && col >= 0 && static_cast<std::size_t>(row) < height &&
               static_cast<std::size_t>(col) < width && at(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
    }

    std::size_t count() const;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// 8-bit RGB image, interleaved, row-major.
struct Frame {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> rgb;

    Frame() = default;
    Frame(std::size_t h, std::size_t w, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    std::uint8_t* pixel(std::size_t row, std::size_t col) { return rgb.data() + 3 * (row * width + col); }
    const std::uint8_t* pixel(std::size_t row, std::size_t col) const { return rgb.data() + 3 * (row * width + col); }

    friend bool operator==(const Frame&, const Frame&) = default;
};

using FrameSequence = std::vector<Frame>;

struct TrackPoint {
    Point2 pos;
    bool visible = true;

    friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

/// F rows of m points. Invisible points carry their last visible coordinates.
struct TrackFile {
    std::size_t points = 0;
    std::vector<std::vector<TrackPoint>> frames;

    std::size_t frame_count() const { return frames.size(); }

    friend bool operator==(const TrackFile&, const TrackFile&) = default;
};

/// Dense four-index float tensor, last index fastest.
struct Tensor4 {
    std::array<std::size_t, 4> dims{0, 0, 0, 0};
    std::vector<float> data;

    Tensor4() = default;
    explicit Tensor4(std::array<std::size_t, 4> d, float fill = 0.0f)
        : dims(d), data(d[0] * d[1] * d[2] * d[3], fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t index(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
        return ((a * dims[1] + b) * dims[2] + c) * dims[3] + d;
    }
    float& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) { return data[index(a, b, c, d)]; }
    float operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const { return data[index(a, b, c, d)]; }

    friend bool operator==(const Tensor4&, const Tensor4&) = default;
};

void write_fgrid(const FeatureGrid& grid, const std::filesystem::path& path);
FeatureGrid read_fgrid(const std::filesystem::path& path);

void write_fgr4(const Tensor4& tensor, const std::filesystem::path& path);
Tensor4 read_fgr4(const std::filesystem::path& path);

void write_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask read_mask_pgm(const std::filesystem::path& path);

void write_frame_ppm(const Frame& frame, const std::filesystem::path& path);
Frame read_frame_ppm(const std::filesystem::path& path);

/// Writes frame_00000.ppm, frame_00001.ppm, ... into dir (created if needed).
void write_frames_ppm(const FrameSequence& frames, const std::filesystem::path& dir);
FrameSequence read_frames_ppm(const std::filesystem::path& dir);

/// Numbered PGM masks, same naming rule as frames.
void write_masks_pgm(const std::vector<BinaryMask>& masks, const std::filesystem::path& dir);
std::vector<BinaryMask> read_masks_pgm(const std::filesystem::path& dir);

void write_tracks(const TrackFile& tracks, const std::filesystem::path& path);
TrackFile read_tracks(const std::filesystem::path& path);
TrackFile parse_tracks(const std::string& text);
std::string format_tracks(const TrackFile& tracks);

/// Visible coordinates must lie within [-0.5, size - 0.5] on both axes.
void validate_tracks_in_bounds(const TrackFile& tracks, std::size_t height, std::size_t width);

}  // namespace mshot
