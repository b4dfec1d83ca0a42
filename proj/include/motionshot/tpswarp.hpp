#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "motionshot/motionseq.hpp"
#include "motionshot/tensorio.hpp"

namespace mshot {

/// U(r) = r^2 log r^2 for a Euclidean distance r, with U(0) = 0.
double tps_kernel(double r);

/// T(p) = A [p; 1] + sum_i w_i U(|c_i - p|).
struct TpsTransform {
    std::array<double, 6> affine{0, 1, 0, 0, 0, 1};  // x = a0 + a1 px + a2 py, y = a3 + a4 px + a5 py
    std::vector<Point2> centers;
    std::vector<Point2> weights;
    double lambda = 0.0;
};

/// Solves [[K + lambda I, P], [P^T, 0]] [w; a] = [targets; 0] with a partially
/// pivoted LU factorization. With lambda = 0 the map interpolates exactly and
/// minimizes bending energy among interpolants.
/// Throws NumericalError for fewer than 3 centers, coincident or collinear
/// centers, or a singular system.
TpsTransform tps_fit(std::span<const Point2> centers, std::span<const Point2> targets, double lambda);

/// lambda = relative * mean squared distance over distinct center pairs.
double tps_relative_lambda(std::span<const Point2> centers, double relative);

Point2 tps_eval(const TpsTransform& transform, Point2 p);

/// w^T K w summed over both output coordinates.
double tps_bending_energy(const TpsTransform& transform);

/// Source coordinate for every output pixel, row-major.
struct WarpField {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> x;
    std::vector<double> y;
};

WarpField evaluate_field(const TpsTransform& transform, std::size_t height, std::size_t width, std::size_t threads = 1);

/// Backward map: centers at the target keypoints, values at the reference
/// keypoints, so each output pixel knows where to read in the reference frame.
WarpField build_backward_field(std::span<const Point2> target, std::span<const Point2> reference, std::size_t height,
                               std::size_t width, double lambda, std::size_t threads = 1);

enum class WarpMode { full, masked };

struct WarpOptions {
    WarpMode mode = WarpMode::full;
    std::array<std::uint8_t, 3> fill{0, 0, 0};
    double lambda_relative = 1e-8;
    std::size_t threads = 1;
};

/// Bilinear sampling at field coordinates. A source inside the pixel extent
/// [-0.5, size - 0.5] is sampled with edge clamping; anything else gets the
/// fill color. Masked mode also fills where the nearest source pixel is
/// outside the mask.
Frame warp_frame(const Frame& frame, const WarpField& field, WarpMode mode, const BinaryMask* mask,
                 std::array<std::uint8_t, 3> fill);

/// Per frame, fits on points visible in both sequences, skipping points whose
/// frame-0 target position duplicates an earlier point (many-to-one matches).
/// Masks, when given for masked mode, hold either one mask or one per frame.
FrameSequence warp_sequence(const FrameSequence& frames, const KeypointSequence& reference,
                            const KeypointSequence& target, const WarpOptions& options,
                            std::span<const BinaryMask> masks = {});

}  // namespace mshot
