#pragma once

#include <filesystem>
#include <vector>

#include "motionshot/tensorio.hpp"

namespace mshot {

// Synthetic 16-frame clip of a textured disk translating diagonally by one
// pixel per frame over a dark background, plus a target ellipse mask and
// feature grids that encode each pixel's position in its object's own
// normalized frame, so matching pairs points with equal normalized position.
inline constexpr std::size_t kFixtureSize = 96;
inline constexpr std::size_t kFixtureFrames = 16;
inline constexpr double kFixtureRadius = 16.0;
inline constexpr std::uint8_t kFixtureBackground = 20;

struct SyntheticFixture {
    FrameSequence frames;
    std::vector<BinaryMask> masks;  // per-frame disk masks
    BinaryMask ref_mask;            // masks[0]
    BinaryMask tar_mask;
    std::vector<FeatureGrid> ref_sd;
    std::vector<FeatureGrid> tar_sd;
    FeatureGrid ref_dino;
    FeatureGrid tar_dino;
    std::vector<Point2> disk_centers;
    Point2 ellipse_center;
    Point2 ellipse_axes;  // semi-axes along x and y
};

SyntheticFixture make_synthetic_fixture();

/// Writes every input plus a run.cfg pointing at them; returns the config path.
std::filesystem::path write_synthetic_fixture(const SyntheticFixture& fixture, const std::filesystem::path& dir);

/// True where any channel is brighter than the midpoint between background
/// and the darkest texture value.
BinaryMask binarize_foreground(const Frame& frame);

}  // namespace mshot
