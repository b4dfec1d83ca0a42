#pragma once

// Test-side reference computations and random generators. Nothing here calls
// into the library under test except for its plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "motionshot/geometry.hpp"
#include "motionshot/tensorio.hpp"

namespace oracle {

using mshot::Point2;

// splitmix64; independent of the library's generator.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
    std::size_t range(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
    bool coin(double p = 0.5) { return unit() < p; }
    double normal() {
        const double u = std::max(unit(), 1e-300), v = unit();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
    }

private:
    std::uint64_t state_;
};

// Points spread in a box, rejecting any closer than min_gap to an earlier one.
inline std::vector<Point2> spread_points(Gen& g, std::size_t n, double lo, double hi, double min_gap) {
    std::vector<Point2> pts;
    while (pts.size() < n) {
        const Point2 p{g.uniform(lo, hi), g.uniform(lo, hi)};
        bool ok = true;
        for (const Point2& q : pts) ok = ok && mshot::distance(p, q) >= min_gap;
        if (ok) pts.push_back(p);
    }
    return pts;
}

// Union of a few random ellipses, optionally punched with a hole.
inline mshot::BinaryMask blob_mask(Gen& g, std::size_t h, std::size_t w) {
    mshot::BinaryMask m(h, w);
    const std::size_t blobs = g.range(1, 3);
    for (std::size_t b = 0; b < blobs; ++b) {
        const double cx = g.uniform(0.3, 0.7) * static_cast<double>(w), cy = g.uniform(0.3, 0.7) * static_cast<double>(h);
        const double ax = g.uniform(0.12, 0.3) * static_cast<double>(w), ay = g.uniform(0.12, 0.3) * static_cast<double>(h);
        const double th = g.uniform(0, std::numbers::pi);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                const double dx = static_cast<double>(c) - cx, dy = static_cast<double>(r) - cy;
                const double u = (dx * std::cos(th) + dy * std::sin(th)) / ax;
                const double v = (-dx * std::sin(th) + dy * std::cos(th)) / ay;
                if (u * u + v * v <= 1.0) m.set(r, c, true);
            }
    }
    if (g.coin(0.3)) {
        const double cx = g.uniform(0.4, 0.6) * static_cast<double>(w), cy = g.uniform(0.4, 0.6) * static_cast<double>(h);
        const double rad = g.uniform(2.0, 5.0);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                if (std::hypot(static_cast<double>(c) - cx, static_cast<double>(r) - cy) <= rad) m.set(r, c, false);
    }
    return m;
}

using Matrix = std::vector<std::vector<long double>>;

// Gaussian elimination with partial pivoting in long double. Solves A X = B
// for a multi-column right-hand side; returns false when a pivot vanishes.
inline bool solve(Matrix a, Matrix& b) {
    const std::size_t n = a.size(), k = b.front().size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-30L) return false;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double f = a[r][col] / a[col][col];
            if (f == 0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            for (std::size_t c = 0; c < k; ++c) b[r][c] -= f * b[col][c];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t c = 0; c < k; ++c) {
            long double s = b[i][c];
            for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * b[j][c];
            b[i][c] = s / a[i][i];
        }
    }
    return true;
}

inline long double tps_u(long double r2) { return r2 == 0 ? 0.0L : r2 * std::log(r2); }

// Thin-plate spline solved from scratch: weights then affine [a0 + a1 x + a2 y].
struct Tps {
    std::vector<Point2> centers;
    std::vector<std::array<long double, 2>> w;
    std::array<std::array<long double, 3>, 2> a{};

    std::array<long double, 2> eval(long double x, long double y) const {
        std::array<long double, 2> out{a[0][0] + a[0][1] * x + a[0][2] * y, a[1][0] + a[1][1] * x + a[1][2] * y};
        for (std::size_t i = 0; i < centers.size(); ++i) {
            const long double dx = x - centers[i].x, dy = y - centers[i].y;
            const long double u = tps_u(dx * dx + dy * dy);
            out[0] += w[i][0] * u;
            out[1] += w[i][1] * u;
        }
        return out;
    }
};

inline bool fit_tps(const std::vector<Point2>& c, const std::vector<Point2>& v, long double lambda, Tps& out) {
    const std::size_t m = c.size(), n = m + 3;
    Matrix a(n, std::vector<long double>(n, 0)), b(n, std::vector<long double>(2, 0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const long double dx = static_cast<long double>(c[i].x) - c[j].x, dy = static_cast<long double>(c[i].y) - c[j].y;
            a[i][j] = tps_u(dx * dx + dy * dy);
        }
        a[i][i] += lambda;
        a[i][m] = a[m][i] = 1;
        a[i][m + 1] = a[m + 1][i] = c[i].x;
        a[i][m + 2] = a[m + 2][i] = c[i].y;
        b[i][0] = v[i].x;
        b[i][1] = v[i].y;
    }
    if (!solve(a, b)) return false;
    out.centers = c;
    out.w.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.w[i] = {b[i][0], b[i][1]};
    for (int d = 0; d < 2; ++d)
        for (int k = 0; k < 3; ++k) out.a[d][k] = b[m + k][d];
    return true;
}

// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Eigenvalues come
// back descending; vectors[k] is the unit eigenvector of values[k].
struct Eigen {
    std::vector<long double> values;
    std::vector<std::vector<long double>> vectors;
};

inline Eigen jacobi(Matrix a) {
    const std::size_t n = a.size();
    Matrix v(n, std::vector<long double>(n, 0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1;
    for (int sweep = 0; sweep < 100; ++sweep) {
        long double off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-36L) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-300L) continue;
                const long double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
                const long double t = (theta >= 0 ? 1 : -1) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
                const long double cs = 1 / std::sqrt(t * t + 1), sn = t * cs;
                for (std::size_t k = 0; k < n; ++k) {
                    const long double akp = a[k][p], akq = a[k][q];
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const long double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const long double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = cs * vkp - sn * vkq;
                    v[k][q] = sn * vkp + cs * vkq;
                }
            }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
    Eigen e;
    for (std::size_t k : order) {
        e.values.push_back(a[k][k]);
        std::vector<long double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
        e.vectors.push_back(col);
    }
    return e;
}

inline double shoelace(const std::vector<Point2>& pts) {
    double s = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point2& a = pts[i];
        const Point2& b = pts[(i + 1) % pts.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return s;
}

inline double min_pairwise(const std::vector<Point2>& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, mshot::distance(pts[i], pts[j]));
    return best;
}

// Exhaustive nearest target pixel under squared L2, ties to the lowest index.
inline std::size_t argmin_scan(const mshot::FeatureGrid& tar, std::span<const float> query, const mshot::BinaryMask& mask) {
    std::size_t best = tar.pixels();
    long double best_d = std::numeric_limits<long double>::infinity();
    for (std::size_t i = 0; i < tar.pixels(); ++i) {
        if (!mask.bits[i]) continue;
        long double d = 0;
        const auto f = tar.pixel(i);
        for (std::size_t k = 0; k < f.size(); ++k) {
            const long double diff = static_cast<long double>(f[k]) - query[k];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

// softmax over frames written out directly from exp sums.
inline long double attention_entry(const mshot::Tensor4& q, const mshot::Tensor4& k, std::size_t p, std::size_t c,
                                   std::size_t i, std::size_t j) {
    const std::size_t F = q.dims[2], d = q.dims[3];
    auto logit = [&](std::size_t jj) {
        long double s = 0;
        for (std::size_t e = 0; e < d; ++e) s += static_cast<long double>(q(p, c, i, e)) * k(p, c, jj, e);
        return s / std::sqrt(static_cast<long double>(d));
    };
    long double denom = 0;
    for (std::size_t jj = 0; jj < F; ++jj) denom += std::exp(logit(jj));
    return std::exp(logit(j)) / denom;
}

}  // namespace oracle
