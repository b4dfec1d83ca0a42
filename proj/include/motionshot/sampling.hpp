#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "motionshot/geometry.hpp"
#include "motionshot/tensorio.hpp"

namespace mshot {

/// Ordered closed boundary polyline through pixel centers. The last point is
/// 8-adjacent to the first; the closing segment is implied, not repeated.
/// Orientation is counter-clockwise as displayed (x right, y down), i.e. the
/// shoelace sum over (x_i y_{i+1} - x_{i+1} y_i) is negative.
struct Contour {
    std::vector<Point2> points;

    /// Sum of segment lengths including the closing segment.
    double perimeter() const;
};

/// Keypoints laid out as n_contour contour samples followed by interior samples.
struct KeypointSet {
    std::vector<Point2> points;
    std::size_t n_contour = 0;

    std::size_t size() const { return points.size(); }
    std::size_t n_interior() const { return points.size() - n_contour; }
};

/// 8-connected components; returns the largest one (ties go to the component
/// whose first pixel comes first in raster order) as a mask.
BinaryMask largest_component(const BinaryMask& mask);

/// Moore-neighbor tracing with Jacob's stopping criterion over the outer
/// boundary of the largest 8-connected component. Holes are ignored.
Contour trace_contour(const BinaryMask& mask);

/// Points at arc lengths 0, s, 2s, ... with s = perimeter / count.
std::vector<Point2> sample_contour_count(const Contour& contour, std::size_t count);

/// Points at arc lengths 0, interval, 2*interval, ... strictly below the
/// perimeter. An interval longer than the perimeter yields only the start
/// point and logs a warning.
std::vector<Point2> sample_contour_interval(const Contour& contour, double interval);

/// Poisson disk packing constant c in r = sqrt(area / (n pi c)).
inline constexpr double kPoissonPacking = 0.7;
inline constexpr int kPoissonAttempts = 30;

struct PoissonResult {
    std::vector<Point2> points;
    /// Every returned pair is at least this far apart. Equals the nominal
    /// radius unless relaxed retries were needed to reach the requested count.
    double min_distance = 0.0;
    double nominal_radius = 0.0;
};

/// Bridson dart throwing restricted to interior pixels of the largest
/// component (foreground pixels whose 8 neighbours are all foreground and
/// which are not on the traced contour). Holes are respected.
PoissonResult poisson_disk_interior(const BinaryMask& mask, std::size_t target_count, std::uint64_t seed);

/// True when the pixel nearest to p is an interior pixel in the sense above.
std::vector<std::uint8_t> interior_pixels(const BinaryMask& mask);

enum class ContourMode { count, interval };

struct SamplingOptions {
    std::size_t m = 30;
    double contour_fraction = 0.8;
    ContourMode mode = ContourMode::count;
    double interval = 200.0;
    std::uint64_t seed = 0;
};

/// Contour samples first, then Poisson interior samples. In count mode the
/// set has round(fraction * m) contour points and m minus that many interior
/// points; in interval mode the contour count is whatever the interval yields.
KeypointSet sample_structure_aware(const BinaryMask& mask, const SamplingOptions& options);

}  // namespace mshot
