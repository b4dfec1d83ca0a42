#include <algorithm>
#include <array>
#include <deque>

#include "motionshot/error.hpp"
#include "motionshot/log.hpp"
#include "motionshot/sampling.hpp"

namespace mshot {

namespace {

// Moore neighbourhood in clockwise screen order, starting west.
constexpr std::array<std::array<int, 2>, 8> kRing{{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int ring_index(int dx, int dy) {
    for (int k = 0; k < 8; ++k)
        if (kRing[k][0] == dx && kRing[k][1] == dy) return k;
    return -1;
}

double shoelace(const std::vector<Point2>& pts) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point2& a = pts[i];
        const Point2& b = pts[(i + 1) % pts.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return s;
}

}  // namespace

double Contour::perimeter() const {
    if (points.size() < 2) return 0.0;
    double len = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) len += distance(points[i], points[(i + 1) % points.size()]);
    return len;
}

BinaryMask largest_component(const BinaryMask& mask) {
    const long h = static_cast<long>(mask.height);
    const long w = static_cast<long>(mask.width);
    std::vector<int> label(mask.bits.size(), -1);
    std::vector<std::size_t> sizes;
    std::deque<long> queue;
    for (long start = 0; start < h * w; ++start) {
        if (!mask.bits[start] || label[start] >= 0) continue;
        const int id = static_cast<int>(sizes.size());
        std::size_t size = 0;
        label[start] = id;
        queue.push_back(start);
        while (!queue.empty()) {
            const long idx = queue.front();
            queue.pop_front();
            ++size;
            const long r = idx / w, c = idx % w;
            for (const auto& d : kRing) {
                const long rr = r + d[1], cc = c + d[0];
                if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
                const long n = rr * w + cc;
                if (mask.bits[n] && label[n] < 0) {
                    label[n] = id;
                    queue.push_back(n);
                }
            }
        }
        sizes.push_back(size);
    }
    if (sizes.empty()) throw ValidationError("mask has no foreground pixels");
    const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    BinaryMask out(mask.height, mask.width);
    for (std::size_t i = 0; i < label.size(); ++i) out.bits[i] = label[i] == best ? 1 : 0;
    return out;
}

Contour trace_contour(const BinaryMask& mask) {
    const BinaryMask comp = largest_component(mask);
    const auto first = std::find(comp.bits.begin(), comp.bits.end(), std::uint8_t{1});
    const long w = static_cast<long>(comp.width);
    const long start_idx = first - comp.bits.begin();
    const long sx = start_idx % w, sy = start_idx / w;

    Contour contour;
    contour.points.push_back({static_cast<double>(sx), static_cast<double>(sy)});

    // The raster-first pixel's west neighbour is background (or outside).
    long cx = sx, cy = sy;
    long bx = sx - 1, by = sy;
    const std::size_t limit = 4 * comp.count() + 16;

    for (std::size_t step = 0; step < limit; ++step) {
        const int back = ring_index(static_cast<int>(bx - cx), static_cast<int>(by - cy));
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int dir = (back + k) % 8;
            if (comp.contains(cy + kRing[dir][1], cx + kRing[dir][0])) {
                found = dir;
                break;
            }
        }
        if (found < 0) return contour;  // isolated pixel

        const long nx = cx + kRing[found][0], ny = cy + kRing[found][1];
        // Jacob's criterion: stop when the start pixel is about to be left the
        // same way it was first left. Thin parts are walked on both sides.
        if (cx == sx && cy == sy && contour.points.size() > 1 && contour.points[1] == Point2{double(nx), double(ny)}) {
            contour.points.pop_back();
            break;
        }
        const int prev = (found + 7) % 8;
        bx = cx + kRing[prev][0];
        by = cy + kRing[prev][1];
        cx = nx;
        cy = ny;
        contour.points.push_back({static_cast<double>(cx), static_cast<double>(cy)});
    }

    if (shoelace(contour.points) > 0.0) std::reverse(contour.points.begin() + 1, contour.points.end());
    return contour;
}

namespace {

Point2 point_at_arc_length(const Contour& contour, const std::vector<double>& cumulative, double s) {
    const auto& pts = contour.points;
    // cumulative[i] is the arc length at pts[i]; segment i runs to pts[(i+1) % n].
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const std::size_t seg = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cumulative.begin()) - 1));
    const Point2 a = pts[seg];
    const Point2 b = pts[(seg + 1) % pts.size()];
    const double len = distance(a, b);
    if (len <= 0.0) return a;
    const double t = std::clamp((s - cumulative[seg]) / len, 0.0, 1.0);
    return a + t * (b - a);
}

std::vector<double> cumulative_lengths(const Contour& contour) {
    std::vector<double> cum(contour.points.size(), 0.0);
    for (std::size_t i = 1; i < contour.points.size(); ++i)
        cum[i] = cum[i - 1] + distance(contour.points[i - 1], contour.points[i]);
    return cum;
}

}  // namespace

std::vector<Point2> sample_contour_count(const Contour& contour, std::size_t count) {
    if (contour.points.empty()) throw ValidationError("cannot sample an empty contour");
    const double perimeter = contour.perimeter();
    const auto cum = cumulative_lengths(contour);
    std::vector<Point2> out;
    out.reserve(count);
    const double step = count ? perimeter / static_cast<double>(count) : 0.0;
    for (std::size_t k = 0; k < count; ++k) out.push_back(point_at_arc_length(contour, cum, step * static_cast<double>(k)));
    return out;
}

std::vector<Point2> sample_contour_interval(const Contour& contour, double interval) {
    if (contour.points.empty()) throw ValidationError("cannot sample an empty contour");
    if (!(interval > 0.0)) throw ValidationError("contour interval must be positive");
    const double perimeter = contour.perimeter();
    if (interval > perimeter)
        log_warning("contour interval " + std::to_string(interval) + " exceeds perimeter " + std::to_string(perimeter) +
                    "; sampling the start point only");
    const auto cum = cumulative_lengths(contour);
    std::vector<Point2> out{contour.points.front()};
    for (std::size_t k = 1;; ++k) {
        const double s = interval * static_cast<double>(k);
        if (s >= perimeter) break;
        out.push_back(point_at_arc_length(contour, cum, s));
    }
    return out;
}

}  // namespace mshot
