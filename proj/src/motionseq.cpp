#include "motionshot/motionseq.hpp"

#include <cmath>
#include <memory>

#include "motionshot/error.hpp"

namespace mshot {

namespace {

bool used(std::span<const bool> use, std::size_t i) { return use.empty() || use[i]; }

Point2 masked_centroid(std::span<const Point2> pts, std::span<const bool> use) {
    Point2 sum;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!used(use, i)) continue;
        sum = sum + pts[i];
        ++n;
    }
    if (n == 0) throw ValidationError("no usable points to take a centroid over");
    return {sum.x / static_cast<double>(n), sum.y / static_cast<double>(n)};
}

void check_use(std::size_t n, std::span<const bool> use) {
    if (!use.empty() && use.size() != n) throw ValidationError("visibility flags do not match the point count");
}

}  // namespace

std::vector<Point2> positions(const std::vector<TrackPoint>& row) {
    std::vector<Point2> out;
    out.reserve(row.size());
    for (const auto& tp : row) out.push_back(tp.pos);
    return out;
}

EllipsePose fit_ellipse_pose(std::span<const Point2> points, std::span<const bool> use) {
    check_use(points.size(), use);
    std::size_t n = 0;
    for (std::size_t i = 0; i < points.size(); ++i) n += used(use, i) ? 1 : 0;
    if (n < 3) throw ValidationError("ellipse fit needs at least 3 points, got " + std::to_string(n));

    const Point2 c = masked_centroid(points, use);
    double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!used(use, i)) continue;
        const Point2 d = points[i] - c;
        mu20 += d.x * d.x;
        mu02 += d.y * d.y;
        mu11 += d.x * d.y;
    }
    const double scale = 1.0 + squared_norm(c);
    if (mu20 + mu02 <= 1e-20 * scale * static_cast<double>(n))
        throw ValidationError("ellipse fit: points are coincident");
    return {c, wrap_half_pi(0.5 * std::atan2(2.0 * mu11, mu20 - mu02))};
}

GlobalDelta global_delta(const EllipsePose& from, const EllipsePose& to) {
    return {wrap_half_pi(to.orientation - from.orientation), to.center - from.center};
}

std::vector<Point2> apply_global(std::span<const Point2> points, const GlobalDelta& delta) {
    if (points.empty()) return {};
    const Point2 pivot = centroid(points);
    std::vector<Point2> out;
    out.reserve(points.size());
    for (const Point2& p : points) out.push_back(rotate(p - pivot, delta.rotation) + pivot + delta.shift);
    return out;
}

namespace {

std::vector<Point2> apply_global_about(std::span<const Point2> points, const GlobalDelta& delta, Point2 pivot) {
    std::vector<Point2> out;
    out.reserve(points.size());
    for (const Point2& p : points) out.push_back(rotate(p - pivot, delta.rotation) + pivot + delta.shift);
    return out;
}

}  // namespace

std::vector<Point2> local_polar_refine(std::span<const Point2> ref0, std::span<const Point2> ref_t,
                                       std::span<const Point2> moved, const GlobalDelta& delta,
                                       std::span<const bool> use) {
    if (ref0.size() != ref_t.size() || ref0.size() != moved.size())
        throw ValidationError("polar refine: point counts differ");
    check_use(ref0.size(), use);
    const Point2 o_ref0 = masked_centroid(ref0, use);
    const Point2 o_reft = masked_centroid(ref_t, use);
    const Point2 o_moved = masked_centroid(moved, use);

    std::vector<Point2> out(moved.begin(), moved.end());
    for (std::size_t i = 0; i < moved.size(); ++i) {
        if (!used(use, i)) continue;
        const Point2 a = ref0[i] - o_ref0;
        const Point2 b = ref_t[i] - o_reft;
        const double r0 = norm(a);
        const double scale = r0 < kRadialGuard ? 1.0 : norm(b) / r0;
        const double dphi = wrap_pi(angle_of(b) - angle_of(a) - delta.rotation);
        const Point2 h = moved[i] - o_moved;
        out[i] = o_moved + polar(scale * norm(h), angle_of(h) + dphi);
    }
    return out;
}

KeypointSequence build_target_sequence(const KeypointSequence& reference, std::span<const Point2> target0) {
    if (reference.frames.empty()) throw ValidationError("reference sequence has no frames");
    if (reference.points != target0.size())
        throw ValidationError("reference has " + std::to_string(reference.points) + " points but the target set has " +
                              std::to_string(target0.size()));

    const auto& row0 = reference.frames.front();
    const std::vector<Point2> ref0 = positions(row0);

    KeypointSequence out;
    out.points = reference.points;
    out.frames.resize(reference.frame_count());
    for (std::size_t t = 0; t < reference.frame_count(); ++t) {
        const auto& row = reference.frames[t];
        std::vector<TrackPoint> target(row.size());
        if (t == 0) {
            for (std::size_t i = 0; i < row.size(); ++i) target[i] = {target0[i], row0[i].visible};
            out.frames[t] = std::move(target);
            continue;
        }
        // std::vector<bool> has no contiguous storage, so spans need a plain array.
        std::unique_ptr<bool[]> use_buf(new bool[row.size()]);
        std::size_t n_use = 0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            use_buf[i] = row0[i].visible && row[i].visible;
            n_use += use_buf[i] ? 1 : 0;
        }
        const std::span<const bool> use(use_buf.get(), row.size());
        const std::vector<Point2> ref_t = positions(row);

        std::vector<Point2> pts;
        if (n_use >= 3) {
            const GlobalDelta delta = global_delta(fit_ellipse_pose(ref0, use), fit_ellipse_pose(ref_t, use));
            const auto moved = apply_global_about(target0, delta, masked_centroid(target0, use));
            pts = local_polar_refine(ref0, ref_t, moved, delta, use);
        } else {
            // Too few shared points for a pose: carry the previous frame.
            pts = positions(out.frames[t - 1]);
        }
        for (std::size_t i = 0; i < row.size(); ++i) target[i] = {pts[i], row[i].visible};
        out.frames[t] = std::move(target);
    }
    return out;
}

}  // namespace mshot
