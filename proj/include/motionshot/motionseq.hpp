#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "motionshot/sampling.hpp"
#include "motionshot/tensorio.hpp"

namespace mshot {

/// F frames of m points with per-point visibility; same shape as a tracks file.
using KeypointSequence = TrackFile;

/// Centroid and second-moment orientation of a point set.
struct EllipsePose {
    Point2 center;
    double orientation = 0.0;  // radians, (-pi/2, pi/2]
};

struct GlobalDelta {
    double rotation = 0.0;  // radians, (-pi/2, pi/2]
    Point2 shift;
};

struct TrackerOptions {
    int patch = 11;   // odd side length
    int search = 15;  // max displacement per frame, pixels
    double min_correlation = 0.3;
};

/// Frame-to-frame normalized cross-correlation patch tracker. Patches are
/// sampled bilinearly at the sub-pixel track position; displacements are
/// searched on the integer grid. A point whose patch leaves the frame, whose
/// template is textureless, or whose best correlation is below the threshold
/// is marked invisible and holds its position.
KeypointSequence track_keypoints_ncc(const FrameSequence& frames, std::span<const Point2> initial,
                                     const TrackerOptions& options = {});

/// Moments are taken over points whose `use` flag is set (all when empty).
EllipsePose fit_ellipse_pose(std::span<const Point2> points, std::span<const bool> use = {});

GlobalDelta global_delta(const EllipsePose& from, const EllipsePose& to);

/// Rotates by delta.rotation about the set's own centroid, then shifts.
std::vector<Point2> apply_global(std::span<const Point2> points, const GlobalDelta& delta);

inline constexpr double kRadialGuard = 1e-6;

/// Transfers each reference point's residual radial scale and polar angle
/// shift (after removing delta.rotation) onto the globally moved target set.
/// Centroids are means over points with `use` set (all when empty); points
/// without the flag keep their global placement.
std::vector<Point2> local_polar_refine(std::span<const Point2> ref0, std::span<const Point2> ref_t,
                                       std::span<const Point2> moved, const GlobalDelta& delta,
                                       std::span<const bool> use = {});

/// Frame t of the result is the target set carried by the reference motion
/// from frame 0 to frame t (anchored, never chained). Poses and centroids use
/// the points visible in both frame 0 and frame t; target visibility mirrors
/// the reference.
KeypointSequence build_target_sequence(const KeypointSequence& reference, std::span<const Point2> target0);

std::vector<Point2> positions(const std::vector<TrackPoint>& row);

}  // namespace mshot
