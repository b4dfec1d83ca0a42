#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "motionshot/error.hpp"
#include "motionshot/log.hpp"
#include "motionshot/sampling.hpp"

namespace mshot {

namespace {

// Portable uniform draws; std:: distributions differ between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

class BackgroundGrid {
public:
    BackgroundGrid(std::size_t width, std::size_t height, double radius)
        : radius_(radius), cell_(radius / std::numbers::sqrt2) {
        cols_ = static_cast<long>(std::ceil((static_cast<double>(width) + 1.0) / cell_)) + 1;
        rows_ = static_cast<long>(std::ceil((static_cast<double>(height) + 1.0) / cell_)) + 1;
        cells_.assign(static_cast<std::size_t>(cols_ * rows_), {});
    }

    void insert(Point2 p) { cells_[static_cast<std::size_t>(cell_of(p))].push_back(p); }

    bool is_free(Point2 p) const {
        const long cx = col_of(p.x), cy = col_of(p.y);
        for (long dy = -2; dy <= 2; ++dy) {
            for (long dx = -2; dx <= 2; ++dx) {
                const long x = cx + dx, y = cy + dy;
                if (x < 0 || y < 0 || x >= cols_ || y >= rows_) continue;
                for (const Point2& q : cells_[static_cast<std::size_t>(y * cols_ + x)])
                    if (squared_norm(p - q) < radius_ * radius_) return false;
            }
        }
        return true;
    }

private:
    // Coordinates start at -0.5, shifted so every in-image point maps to a valid cell.
    long col_of(double v) const { return static_cast<long>(std::floor((v + 0.5) / cell_)); }
    long cell_of(Point2 p) const { return col_of(p.y) * cols_ + col_of(p.x); }

    double radius_;
    double cell_;
    long cols_ = 0;
    long rows_ = 0;
    std::vector<std::vector<Point2>> cells_;
};

struct Region {
    const std::vector<std::uint8_t>& eligible;
    std::size_t width;
    std::size_t height;

    bool contains(Point2 p) const {
        const double fx = std::floor(p.x + 0.5), fy = std::floor(p.y + 0.5);
        if (fx < 0 || fy < 0 || fx >= static_cast<double>(width) || fy >= static_cast<double>(height)) return false;
        return eligible[static_cast<std::size_t>(fy) * width + static_cast<std::size_t>(fx)] != 0;
    }
};

// One Bridson pass at a fixed radius, avoiding the already accepted points.
// When the active list drains, unvisited eligible pixels (in shuffled order)
// seed new growth, so disconnected interior regions are covered too.
std::vector<Point2> bridson_pass(const Region& region, const std::vector<Point2>& existing, double radius, Rng& rng) {
    BackgroundGrid grid(region.width, region.height, radius);
    for (const Point2& p : existing) grid.insert(p);

    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < region.eligible.size(); ++i)
        if (region.eligible[i]) seeds.push_back(i);
    for (std::size_t i = seeds.size(); i > 1; --i) std::swap(seeds[i - 1], seeds[rng.below(i)]);

    std::vector<Point2> accepted;
    std::vector<Point2> active;
    std::size_t next_seed = 0;
    for (;;) {
        if (active.empty()) {
            while (next_seed < seeds.size()) {
                const std::size_t idx = seeds[next_seed++];
                const Point2 p{static_cast<double>(idx % region.width), static_cast<double>(idx / region.width)};
                if (grid.is_free(p)) {
                    grid.insert(p);
                    accepted.push_back(p);
                    active.push_back(p);
                    break;
                }
            }
            if (active.empty()) break;
        }
        const std::size_t pick = rng.below(active.size());
        const Point2 origin = active[pick];
        bool placed = false;
        for (int attempt = 0; attempt < kPoissonAttempts; ++attempt) {
            const double rho = radius * (1.0 + rng.uniform());
            const double theta = 2.0 * std::numbers::pi * rng.uniform();
            const Point2 cand = origin + polar(rho, theta);
            if (region.contains(cand) && grid.is_free(cand)) {
                grid.insert(cand);
                accepted.push_back(cand);
                active.push_back(cand);
                placed = true;
                break;
            }
        }
        if (!placed) {
            active[pick] = active.back();
            active.pop_back();
        }
    }
    return accepted;
}

// Greedy farthest-point choice of `count` candidates, starting from a random one.
std::vector<Point2> spread_subset(const std::vector<Point2>& candidates, const std::vector<Point2>& existing,
                                  std::size_t count, Rng& rng) {
    if (candidates.size() <= count) return candidates;
    std::vector<double> nearest(candidates.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        for (const Point2& e : existing) nearest[i] = std::min(nearest[i], squared_norm(candidates[i] - e));

    std::vector<Point2> chosen;
    std::vector<bool> used(candidates.size(), false);
    std::size_t next = existing.empty() ? rng.below(candidates.size())
                                        : static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) -
                                                                   nearest.begin());
    while (chosen.size() < count) {
        used[next] = true;
        chosen.push_back(candidates[next]);
        double best = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            nearest[i] = std::min(nearest[i], squared_norm(candidates[i] - candidates[next]));
        }
        std::size_t arg = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (!used[i] && nearest[i] > best) {
                best = nearest[i];
                arg = i;
            }
        }
        next = arg;
    }
    return chosen;
}

}  // namespace

std::vector<std::uint8_t> interior_pixels(const BinaryMask& mask) {
    const BinaryMask comp = largest_component(mask);
    const Contour contour = trace_contour(comp);
    std::vector<std::uint8_t> eligible(comp.bits.size(), 0);
    const long h = static_cast<long>(comp.height), w = static_cast<long>(comp.width);
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            bool inside = comp.contains(r, c);
            for (long dr = -1; dr <= 1 && inside; ++dr)
                for (long dc = -1; dc <= 1 && inside; ++dc) inside = comp.contains(r + dr, c + dc);
            eligible[static_cast<std::size_t>(r * w + c)] = inside ? 1 : 0;
        }
    }
    for (const Point2& p : contour.points)
        eligible[static_cast<std::size_t>(p.y) * comp.width + static_cast<std::size_t>(p.x)] = 0;
    return eligible;
}

PoissonResult poisson_disk_interior(const BinaryMask& mask, std::size_t target_count, std::uint64_t seed) {
    const std::size_t foreground = mask.count();
    if (foreground == 0) throw ValidationError("mask has no foreground pixels");
    if (target_count > foreground)
        throw ValidationError("requested " + std::to_string(target_count) + " interior points but the mask has only " +
                              std::to_string(foreground) + " foreground pixels");
    PoissonResult result;
    if (target_count == 0) return result;

    const double area = static_cast<double>(largest_component(mask).count());
    result.nominal_radius = std::sqrt(area / (static_cast<double>(target_count) * std::numbers::pi * kPoissonPacking));
    result.min_distance = result.nominal_radius;

    const auto eligible = interior_pixels(mask);
    const Region region{eligible, mask.width, mask.height};
    Rng rng(seed);

    double radius = result.nominal_radius;
    constexpr int kMaxRelaxations = 12;
    for (int round = 0; round <= kMaxRelaxations && result.points.size() < target_count; ++round) {
        const auto candidates = bridson_pass(region, result.points, radius, rng);
        if (!candidates.empty()) {
            const auto picked = spread_subset(candidates, result.points, target_count - result.points.size(), rng);
            result.points.insert(result.points.end(), picked.begin(), picked.end());
            result.min_distance = radius;
        }
        radius *= 0.5;
    }
    if (result.points.size() < target_count)
        log_warning("poisson disk sampling placed " + std::to_string(result.points.size()) + " of " +
                    std::to_string(target_count) + " interior points");
    return result;
}

}  // namespace mshot
