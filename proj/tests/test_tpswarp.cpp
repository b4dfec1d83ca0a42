#include <doctest.h>

#include <cmath>

#include "motionshot/error.hpp"
#include "motionshot/fixture.hpp"
#include "motionshot/tpswarp.hpp"
#include "oracles.hpp"

using namespace mshot;

namespace {

KeypointSequence constant_sequence(const std::vector<Point2>& pts, std::size_t frames) {
    KeypointSequence s;
    s.points = pts.size();
    std::vector<TrackPoint> row;
    for (const Point2& p : pts) row.push_back({p, true});
    s.frames.assign(frames, row);
    return s;
}

Frame noise_frame(oracle::Gen& g, std::size_t h, std::size_t w) {
    Frame f(h, w);
    for (auto& v : f.rgb) v = static_cast<std::uint8_t>(g.below(256));
    return f;
}

}  // namespace

TEST_CASE("kernel values") {
    CHECK(tps_kernel(2.0) == doctest::Approx(5.545177444479562).epsilon(1e-15));
    CHECK(tps_kernel(0.0) == 0.0);
    CHECK(tps_kernel(1.0) == 0.0);
    CHECK(tps_kernel(0.5) < 0.0);
}

TEST_CASE("spline agrees with a long double solve") {
    oracle::Gen g(51);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = g.range(3, 30);
        const auto c = oracle::spread_points(g, m, 0, 100, 2.0);
        std::vector<Point2> v;
        for (const Point2& p : c) v.push_back(p + Point2{g.uniform(-8, 8), g.uniform(-8, 8)});
        const double lambda = g.coin() ? 0.0 : g.uniform(0, 50);
        const TpsTransform t = tps_fit(c, v, lambda);
        oracle::Tps ref;
        REQUIRE(oracle::fit_tps(c, v, lambda, ref));
        for (int k = 0; k < 20; ++k) {
            const Point2 q{g.uniform(-20, 120), g.uniform(-20, 120)};
            const auto want = ref.eval(q.x, q.y);
            const Point2 got = tps_eval(t, q);
            CHECK(std::fabs(got.x - static_cast<double>(want[0])) < 1e-7);
            CHECK(std::fabs(got.y - static_cast<double>(want[1])) < 1e-7);
        }
        if (lambda == 0.0)
            for (std::size_t i = 0; i < m; ++i) CHECK(distance(tps_eval(t, c[i]), v[i]) < 1e-8);
    }
}

TEST_CASE("affine data gives zero bending") {
    oracle::Gen g(52);
    const auto c = oracle::spread_points(g, 12, 0, 80, 3.0);
    std::vector<Point2> v;
    for (const Point2& p : c) v.push_back({1.5 * p.x - 0.3 * p.y + 7, 0.2 * p.x + 0.9 * p.y - 4});
    const TpsTransform t = tps_fit(c, v, 0.0);
    for (const Point2& w : t.weights) CHECK(norm(w) < 1e-9);
    CHECK(std::fabs(tps_bending_energy(t)) < 1e-9);
    CHECK(t.affine[0] == doctest::Approx(7));
    CHECK(t.affine[1] == doctest::Approx(1.5));
    CHECK(t.affine[5] == doctest::Approx(0.9));
}

TEST_CASE("smoothing lowers bending energy") {
    oracle::Gen g(53);
    const auto c = oracle::spread_points(g, 15, 0, 50, 3.0);
    std::vector<Point2> v;
    for (const Point2& p : c) v.push_back(p + Point2{g.uniform(-3, 3), g.uniform(-3, 3)});
    const double e0 = tps_bending_energy(tps_fit(c, v, 0.0));
    const double e1 = tps_bending_energy(tps_fit(c, v, 100.0));
    CHECK(e0 > 0.0);
    CHECK(e1 < e0);
}

TEST_CASE("relative lambda uses mean squared pair distance") {
    const std::vector<Point2> c{{0, 0}, {3, 4}, {0, 8}};
    // pairs: 25, 64, 25
    CHECK(tps_relative_lambda(c, 1.0) == doctest::Approx(38.0));
    CHECK(tps_relative_lambda(c, 1e-8) == doctest::Approx(38e-8));
}

TEST_CASE("degenerate control sets are rejected") {
    const std::vector<Point2> two{{0, 0}, {1, 1}};
    CHECK_THROWS_AS(tps_fit(two, two, 0.0), NumericalError);
    const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {5, 5}};
    CHECK_THROWS_AS(tps_fit(line, line, 0.0), NumericalError);
    const std::vector<Point2> dup{{0, 0}, {1, 0}, {0, 1}, {1, 0}};
    CHECK_THROWS_AS(tps_fit(dup, dup, 0.0), NumericalError);
    CHECK_THROWS_AS(tps_fit(std::vector<Point2>{{0, 0}, {1, 0}, {0, 1}}, two, 0.0), ValidationError);
}

TEST_CASE("field evaluation matches pointwise evaluation for any thread count") {
    oracle::Gen g(54);
    const auto c = oracle::spread_points(g, 25, 0, 40, 2.0);
    std::vector<Point2> v;
    for (const Point2& p : c) v.push_back(p + Point2{g.uniform(-4, 4), g.uniform(-4, 4)});
    const TpsTransform t = tps_fit(c, v, 0.0);
    const WarpField one = evaluate_field(t, 37, 43, 1);
    for (std::size_t r = 0; r < 37; ++r)
        for (std::size_t col = 0; col < 43; ++col) {
            const Point2 want = tps_eval(t, {static_cast<double>(col), static_cast<double>(r)});
            CHECK(one.x[r * 43 + col] == doctest::Approx(want.x).epsilon(1e-10));
            CHECK(one.y[r * 43 + col] == doctest::Approx(want.y).epsilon(1e-10));
        }
    const WarpField four = evaluate_field(t, 37, 43, 4);
    CHECK(four.x == one.x);
    CHECK(four.y == one.y);
}

TEST_CASE("identity tracks leave frames unchanged") {
    oracle::Gen g(55);
    FrameSequence frames{noise_frame(g, 24, 30), noise_frame(g, 24, 30)};
    const auto pts = oracle::spread_points(g, 10, 0, 23, 2.0);
    const auto seq = constant_sequence(pts, 2);
    CHECK(warp_sequence(frames, seq, seq, {}) == frames);
}

TEST_CASE("integer translation shifts pixels and fills the uncovered border") {
    oracle::Gen g(56);
    const Frame f = noise_frame(g, 20, 20);
    const auto ref = oracle::spread_points(g, 8, 2, 17, 2.0);
    std::vector<Point2> tar;
    for (const Point2& p : ref) tar.push_back(p + Point2{3, 2});
    WarpOptions o;
    o.fill = {1, 2, 3};
    const Frame out = warp_sequence({f}, constant_sequence(ref, 1), constant_sequence(tar, 1), o)[0];
    for (std::size_t r = 0; r < 20; ++r)
        for (std::size_t c = 0; c < 20; ++c) {
            const std::uint8_t* px = out.pixel(r, c);
            if (r >= 2 && c >= 3) {
                CHECK(std::equal(px, px + 3, f.pixel(r - 2, c - 3)));
            } else {
                CHECK(px[0] == 1);
                CHECK(px[2] == 3);
            }
        }
}

TEST_CASE("masked mode fills where the source lies off the mask") {
    oracle::Gen g(57);
    const Frame f = noise_frame(g, 16, 16);
    BinaryMask m(16, 16);
    for (std::size_t r = 4; r < 12; ++r)
        for (std::size_t c = 4; c < 12; ++c) m.set(r, c, true);
    const auto pts = oracle::spread_points(g, 6, 1, 14, 2.0);
    WarpOptions o;
    o.mode = WarpMode::masked;
    const Frame out = warp_sequence({f}, constant_sequence(pts, 1), constant_sequence(pts, 1), o, std::span(&m, 1))[0];
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) {
            const std::uint8_t* want = m.at(r, c) ? f.pixel(r, c) : nullptr;
            if (want) CHECK(std::equal(want, want + 3, out.pixel(r, c)));
            else CHECK(out.pixel(r, c)[1] == 0);
        }
    CHECK_THROWS_AS(warp_sequence({f}, constant_sequence(pts, 1), constant_sequence(pts, 1), o), ValidationError);
}

TEST_CASE("scaling the target keypoints scales the disk area") {
    const SyntheticFixture fx = make_synthetic_fixture();
    const Point2 c = fx.disk_centers[0];
    std::vector<Point2> ref, tar;
    for (int k = 0; k < 16; ++k) {
        const double a = 2 * std::numbers::pi * k / 16;
        for (double rad : {6.0, 15.0}) {
            ref.push_back(c + polar(rad, a + rad));
            tar.push_back(c + polar(1.5 * rad, a + rad));
        }
    }
    const Frame out = warp_sequence({fx.frames[0]}, constant_sequence(ref, 1), constant_sequence(tar, 1), {})[0];
    const double area = static_cast<double>(binarize_foreground(out).count());
    const double base = static_cast<double>(fx.masks[0].count());
    CHECK(area / base == doctest::Approx(2.25).epsilon(0.05));
}

TEST_CASE("warp_sequence drops duplicate targets and needs three usable points") {
    oracle::Gen g(58);
    const Frame f = noise_frame(g, 16, 16);
    std::vector<Point2> ref{{2, 2}, {12, 3}, {7, 12}, {8, 8}}, tar{{2, 2}, {12, 3}, {7, 12}, {2, 2}};
    CHECK_NOTHROW(warp_sequence({f}, constant_sequence(ref, 1), constant_sequence(tar, 1), {}));

    auto hidden = constant_sequence(ref, 1);
    hidden.frames[0][1].visible = false;
    hidden.frames[0][2].visible = false;
    CHECK_THROWS_AS(warp_sequence({f}, hidden, constant_sequence(ref, 1), {}), ValidationError);
    CHECK_THROWS_AS(warp_sequence({f, f}, constant_sequence(ref, 1), constant_sequence(ref, 1), {}), ValidationError);
}
