#include <algorithm>
#include <cmath>

#include "motionshot/error.hpp"
#include "motionshot/parallel.hpp"
#include "motionshot/tpswarp.hpp"

namespace mshot {

Frame warp_frame(const Frame& frame, const WarpField& field, WarpMode mode, const BinaryMask* mask,
                 std::array<std::uint8_t, 3> fill) {
    if (mode == WarpMode::masked && mask == nullptr) throw ValidationError("warp: masked mode needs a reference mask");
    if (mask && (mask->height != frame.height || mask->width != frame.width))
        throw ValidationError("warp: mask size differs from frame size");
    if (field.x.size() != field.height * field.width || field.y.size() != field.x.size())
        throw ValidationError("warp: malformed field");

    Frame out(field.height, field.width, fill);
    const double max_x = static_cast<double>(frame.width) - 1.0;
    const double max_y = static_cast<double>(frame.height) - 1.0;
    for (std::size_t r = 0; r < field.height; ++r) {
        for (std::size_t c = 0; c < field.width; ++c) {
            const std::size_t idx = r * field.width + c;
            const double sx = field.x[idx], sy = field.y[idx];
            if (!(sx >= -0.5 && sy >= -0.5 && sx <= max_x + 0.5 && sy <= max_y + 0.5)) continue;
            const double x = std::clamp(sx, 0.0, max_x);
            const double y = std::clamp(sy, 0.0, max_y);
            if (mode == WarpMode::masked &&
                !mask->at(static_cast<std::size_t>(std::floor(y + 0.5)), static_cast<std::size_t>(std::floor(x + 0.5))))
                continue;
            const auto x0 = static_cast<std::size_t>(x), y0 = static_cast<std::size_t>(y);
            const std::size_t x1 = std::min(x0 + 1, frame.width - 1), y1 = std::min(y0 + 1, frame.height - 1);
            const double tx = x - static_cast<double>(x0), ty = y - static_cast<double>(y0);
            const auto* p00 = frame.pixel(y0, x0);
            const auto* p01 = frame.pixel(y0, x1);
            const auto* p10 = frame.pixel(y1, x0);
            const auto* p11 = frame.pixel(y1, x1);
            auto* dst = out.pixel(r, c);
            for (int k = 0; k < 3; ++k) {
                const double top = p00[k] * (1.0 - tx) + p01[k] * tx;
                const double bottom = p10[k] * (1.0 - tx) + p11[k] * tx;
                const double v = top * (1.0 - ty) + bottom * ty;
                dst[k] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
            }
        }
    }
    return out;
}

FrameSequence warp_sequence(const FrameSequence& frames, const KeypointSequence& reference,
                            const KeypointSequence& target, const WarpOptions& options,
                            std::span<const BinaryMask> masks) {
    if (frames.size() != reference.frame_count() || frames.size() != target.frame_count())
        throw ValidationError("warp: " + std::to_string(frames.size()) + " frames but tracks cover " +
                              std::to_string(reference.frame_count()) + " and " + std::to_string(target.frame_count()));
    if (reference.points != target.points) throw ValidationError("warp: reference and target point counts differ");
    if (options.mode == WarpMode::masked && masks.size() != 1 && masks.size() != frames.size())
        throw ValidationError("warp: masked mode needs one mask or one per frame");

    std::vector<bool> distinct(target.points, true);
    const auto& t0 = target.frames.front();
    for (std::size_t i = 0; i < target.points; ++i)
        for (std::size_t j = 0; j < i && distinct[i]; ++j)
            if (distinct[j] && distance(t0[i].pos, t0[j].pos) < 1e-6) distinct[i] = false;

    FrameSequence out(frames.size());
    for (std::size_t t = 0; t < frames.size(); ++t) {
        std::vector<Point2> centers, values;
        for (std::size_t i = 0; i < target.points; ++i) {
            const auto& r = reference.frames[t][i];
            const auto& g = target.frames[t][i];
            if (!distinct[i] || !r.visible || !g.visible) continue;
            centers.push_back(g.pos);
            values.push_back(r.pos);
        }
        if (centers.size() < 3)
            throw ValidationError("warp: frame " + std::to_string(t) + " has only " + std::to_string(centers.size()) +
                                  " usable keypoints, need 3");
        const double lambda = tps_relative_lambda(centers, options.lambda_relative);
        const WarpField field =
            build_backward_field(centers, values, frames[t].height, frames[t].width, lambda, options.threads);
        const BinaryMask* mask = masks.empty() ? nullptr : &masks[masks.size() == 1 ? 0 : t];
        out[t] = warp_frame(frames[t], field, options.mode, mask, options.fill);
    }
    return out;
}

}  // namespace mshot
