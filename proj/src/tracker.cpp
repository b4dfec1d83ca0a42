#include <cmath>
#include <limits>

#include "motionshot/error.hpp"
#include "motionshot/motionseq.hpp"

namespace mshot {

namespace {

struct Gray {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> v;

    explicit Gray(const Frame& f) : height(f.height), width(f.width), v(f.height * f.width) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto* p = f.rgb.data() + 3 * i;
            v[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        }
    }

    // NaN outside [0, width-1] x [0, height-1].
    double sample(double x, double y) const {
        if (x < 0.0 || y < 0.0 || x > static_cast<double>(width - 1) || y > static_cast<double>(height - 1))
            return std::numeric_limits<double>::quiet_NaN();
        const auto x0 = static_cast<std::size_t>(x), y0 = static_cast<std::size_t>(y);
        const std::size_t x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
        const double tx = x - static_cast<double>(x0), ty = y - static_cast<double>(y0);
        const double top = v[y0 * width + x0] * (1.0 - tx) + v[y0 * width + x1] * tx;
        const double bottom = v[y1 * width + x0] * (1.0 - tx) + v[y1 * width + x1] * tx;
        return top * (1.0 - ty) + bottom * ty;
    }
};

// Samples a side x side block whose top-left sample sits at origin.
std::vector<double> sample_block(const Gray& g, Point2 origin, int side) {
    std::vector<double> out(static_cast<std::size_t>(side * side));
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i) out[static_cast<std::size_t>(j * side + i)] = g.sample(origin.x + i, origin.y + j);
    return out;
}

}  // namespace

KeypointSequence track_keypoints_ncc(const FrameSequence& frames, std::span<const Point2> initial,
                                     const TrackerOptions& options) {
    if (frames.empty()) throw ValidationError("tracker: no frames");
    if (options.patch < 1 || options.patch % 2 == 0) throw ValidationError("tracker: patch size must be odd and positive");
    if (options.search < 1) throw ValidationError("tracker: search radius must be at least 1");

    const int half = options.patch / 2;
    const int side = options.patch;
    const int span = 2 * options.search + side;
    const std::size_t n = static_cast<std::size_t>(side * side);

    KeypointSequence seq;
    seq.points = initial.size();
    std::vector<TrackPoint> row;
    for (const Point2& p : initial) row.push_back({p, true});
    seq.frames.push_back(row);

    Gray prev(frames.front());
    for (std::size_t t = 1; t < frames.size(); ++t) {
        Gray cur(frames[t]);
        for (auto& tp : row) {
            tp.visible = false;
            const auto tmpl = sample_block(prev, {tp.pos.x - half, tp.pos.y - half}, side);
            double tmean = 0.0;
            bool inside = true;
            for (double v : tmpl) {
                inside = inside && !std::isnan(v);
                tmean += v;
            }
            if (!inside) continue;
            tmean /= static_cast<double>(n);
            double tvar = 0.0;
            for (double v : tmpl) tvar += (v - tmean) * (v - tmean);
            if (tvar <= 1e-9 * static_cast<double>(n)) continue;  // textureless: correlation undefined

            const auto region = sample_block(cur, {tp.pos.x - half - options.search, tp.pos.y - half - options.search}, span);
            double best = -std::numeric_limits<double>::infinity();
            int best_r2 = 0;
            int best_dx = 0, best_dy = 0;
            for (int oy = -options.search; oy <= options.search; ++oy) {
                for (int ox = -options.search; ox <= options.search; ++ox) {
                    const int base_x = ox + options.search, base_y = oy + options.search;
                    double cmean = 0.0;
                    bool ok = true;
                    for (int j = 0; j < side && ok; ++j)
                        for (int i = 0; i < side; ++i) {
                            const double v = region[static_cast<std::size_t>((base_y + j) * span + base_x + i)];
                            if (std::isnan(v)) {
                                ok = false;
                                break;
                            }
                            cmean += v;
                        }
                    if (!ok) continue;
                    cmean /= static_cast<double>(n);
                    double cross = 0.0, cvar = 0.0;
                    for (int j = 0; j < side; ++j)
                        for (int i = 0; i < side; ++i) {
                            const double c = region[static_cast<std::size_t>((base_y + j) * span + base_x + i)] - cmean;
                            const double a = tmpl[static_cast<std::size_t>(j * side + i)] - tmean;
                            cross += a * c;
                            cvar += c * c;
                        }
                    if (cvar <= 1e-9 * static_cast<double>(n)) continue;
                    const double ncc = cross / std::sqrt(tvar * cvar);
                    const int r2 = ox * ox + oy * oy;
                    // Ties prefer the smaller displacement.
                    if (ncc > best + 1e-12 || (std::abs(ncc - best) <= 1e-12 && r2 < best_r2)) {
                        best = ncc;
                        best_r2 = r2;
                        best_dx = ox;
                        best_dy = oy;
                    }
                }
            }
            if (best < options.min_correlation) continue;
            tp.pos = tp.pos + Point2{static_cast<double>(best_dx), static_cast<double>(best_dy)};
            tp.visible = true;
        }
        seq.frames.push_back(row);
        prev = std::move(cur);
    }
    return seq;
}

}  // namespace mshot
