#include <doctest.h>

#include <cmath>

#include "motionshot/error.hpp"
#include "motionshot/matching.hpp"
#include "oracles.hpp"

using namespace mshot;

namespace {

FeatureGrid random_grid(oracle::Gen& g, std::size_t h, std::size_t w, std::size_t c) {
    FeatureGrid out(h, w, c);
    for (float& v : out.data) v = static_cast<float>(g.normal());
    return out;
}

// Random orthogonal matrix via Gram-Schmidt on Gaussian columns.
std::vector<std::vector<double>> random_rotation(oracle::Gen& g, std::size_t n) {
    std::vector<std::vector<double>> q(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        for (double& v : q[k]) v = g.normal();
        for (std::size_t j = 0; j < k; ++j) {
            double dot = 0;
            for (std::size_t i = 0; i < n; ++i) dot += q[k][i] * q[j][i];
            for (std::size_t i = 0; i < n; ++i) q[k][i] -= dot * q[j][i];
        }
        double norm = 0;
        for (double v : q[k]) norm += v * v;
        for (double& v : q[k]) v /= std::sqrt(norm);
    }
    return q;
}

FeatureGrid rotate_channels(const FeatureGrid& in, const std::vector<std::vector<double>>& q) {
    FeatureGrid out(in.height, in.width, in.channels);
    for (std::size_t p = 0; p < in.pixels(); ++p)
        for (std::size_t k = 0; k < in.channels; ++k) {
            double s = 0;
            for (std::size_t i = 0; i < in.channels; ++i) s += q[k][i] * in.pixel(p)[i];
            out.data[p * in.channels + k] = static_cast<float>(s);
        }
    return out;
}

// Skewed data so each component's third moment is well away from zero.
FeatureGrid skewed_grid(oracle::Gen& g, std::size_t h, std::size_t w, std::size_t c) {
    FeatureGrid out(h, w, c);
    for (std::size_t p = 0; p < out.pixels(); ++p)
        for (std::size_t k = 0; k < c; ++k) {
            const double e = g.normal();
            out.data[p * c + k] = static_cast<float>((e * e - 1.0) * static_cast<double>(c - k));
        }
    return out;
}

}  // namespace

TEST_CASE("joint pca matches a Jacobi eigen-decomposition") {
    oracle::Gen g(31);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t c = g.range(3, 9), keep = g.range(1, c);
        const FeatureGrid a = random_grid(g, 6, 7, c), b = random_grid(g, 5, 4, c);
        const PcaResult res = pca_joint_reduce(a, b, keep);

        const std::size_t n = a.pixels() + b.pixels();
        std::vector<long double> mean(c, 0);
        auto row = [&](std::size_t r) { return r < a.pixels() ? a.pixel(r) : b.pixel(r - a.pixels()); };
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t k = 0; k < c; ++k) mean[k] += row(r)[k];
        for (auto& m : mean) m /= static_cast<long double>(n);
        oracle::Matrix cov(c, std::vector<long double>(c, 0));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t i = 0; i < c; ++i)
                for (std::size_t j = 0; j < c; ++j) cov[i][j] += (row(r)[i] - mean[i]) * (row(r)[j] - mean[j]) / n;
        const oracle::Eigen eig = oracle::jacobi(cov);

        REQUIRE(res.explained_variance.size() == keep);
        for (std::size_t k = 0; k < keep; ++k) {
            CHECK(res.explained_variance[k] == doctest::Approx(static_cast<double>(eig.values[k])).epsilon(1e-9));
            // Projections agree with the oracle direction up to sign.
            long double dot = 0;
            for (std::size_t i = 0; i < c; ++i) dot += eig.vectors[k][i] * res.components[k][i];
            CHECK(std::fabs(dot) == doctest::Approx(1.0).epsilon(1e-7));
            for (std::size_t r = 0; r < n; ++r) {
                long double proj = 0;
                for (std::size_t i = 0; i < c; ++i) proj += (row(r)[i] - mean[i]) * eig.vectors[k][i];
                const float got = r < a.pixels() ? res.ref.data[r * keep + k] : res.tar.data[(r - a.pixels()) * keep + k];
                CHECK(std::fabs(static_cast<long double>(got) - (dot < 0 ? -proj : proj)) < 1e-5L);
            }
        }
    }
}

TEST_CASE("pca output is invariant to an orthogonal change of channel basis") {
    oracle::Gen g(32);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t c = g.range(3, 8);
        const FeatureGrid a = skewed_grid(g, 8, 8, c), b = skewed_grid(g, 8, 8, c);
        const auto q = random_rotation(g, c);
        const PcaResult base = pca_joint_reduce(a, b, 2);
        const PcaResult turned = pca_joint_reduce(rotate_channels(a, q), rotate_channels(b, q), 2);
        for (std::size_t i = 0; i < base.ref.data.size(); ++i)
            CHECK(turned.ref.data[i] == doctest::Approx(base.ref.data[i]).epsilon(1e-3).scale(1.0));
        for (std::size_t i = 0; i < base.tar.data.size(); ++i)
            CHECK(turned.tar.data[i] == doctest::Approx(base.tar.data[i]).epsilon(1e-3).scale(1.0));
    }
}

TEST_CASE("pca rejects bad shapes") {
    oracle::Gen g(33);
    CHECK_THROWS_AS(pca_joint_reduce(random_grid(g, 3, 3, 4), random_grid(g, 3, 3, 5), 2), ValidationError);
    CHECK_THROWS_AS(pca_joint_reduce(random_grid(g, 3, 3, 4), random_grid(g, 3, 3, 4), 5), ValidationError);
    CHECK_THROWS_AS(pca_joint_reduce(FeatureGrid(3, 3, 4, 1.0f), FeatureGrid(3, 3, 4, 1.0f), 2), ValidationError);
}

TEST_CASE("bilinear upsampling uses pixel centers") {
    FeatureGrid ramp(1, 4, 1);
    ramp.data = {0, 1, 2, 3};
    const FeatureGrid up = upsample_bilinear(ramp, 1, 8);
    // Output x maps to source (x + 0.5) / 2 - 0.5, clamped to [0, 3].
    const std::vector<float> expect{0, 0.25f, 0.75f, 1.25f, 1.75f, 2.25f, 2.75f, 3};
    for (std::size_t i = 0; i < 8; ++i) CHECK(up.data[i] == doctest::Approx(expect[i]));

    oracle::Gen g(34);
    const FeatureGrid r = random_grid(g, 5, 6, 3);
    CHECK(upsample_bilinear(r, 5, 6) == r);
    const FeatureGrid flat = upsample_bilinear(FeatureGrid(3, 3, 2, 1.5f), 7, 11);
    for (float v : flat.data) CHECK(v == doctest::Approx(1.5f));
}

TEST_CASE("fusion normalizes each slice separately") {
    oracle::Gen g(35);
    FeatureGrid sd = random_grid(g, 4, 4, 5), dino = random_grid(g, 4, 4, 3);
    for (std::size_t k = 0; k < 5; ++k) sd.at(1, 1)[k] = 0;
    const FusedFeatureGrid f = fuse_features(sd, dino);
    REQUIRE(f.grid.channels == 8);
    for (std::size_t p = 0; p < 16; ++p) {
        const auto v = f.grid.pixel(p);
        double a = 0, b = 0;
        for (std::size_t k = 0; k < 5; ++k) a += v[k] * v[k];
        for (std::size_t k = 5; k < 8; ++k) b += v[k] * v[k];
        CHECK(a == doctest::Approx(p == 5 ? 0.0 : 1.0).epsilon(1e-6));
        CHECK(b == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK_THROWS_AS(fuse_features(sd, random_grid(g, 4, 5, 3)), ValidationError);
}

TEST_CASE("matching equals the exhaustive argmin including ties") {
    oracle::Gen g(36);
    for (int trial = 0; trial < 30; ++trial) {
        FusedFeatureGrid ref{random_grid(g, 16, 16, 6), 4, 2}, tar{random_grid(g, 16, 16, 6), 4, 2};
        // Duplicate target features create exact ties; copy some reference ones so ties are the winners.
        for (int d = 0; d < 20; ++d) {
            const std::size_t src = g.below(256), dst = g.below(256);
            std::copy_n(ref.grid.pixel(src).data(), 6, tar.grid.data.data() + dst * 6);
            std::copy_n(ref.grid.pixel(src).data(), 6, tar.grid.data.data() + g.below(256) * 6);
        }
        BinaryMask mask(16, 16);
        for (auto& b : mask.bits) b = g.coin(0.7) ? 1 : 0;
        mask.bits[0] = 1;
        KeypointSet kps;
        for (int i = 0; i < 30; ++i) kps.points.push_back({g.uniform(-0.49, 15.49), g.uniform(-0.49, 15.49)});
        const Correspondence got = match_keypoints(ref, tar, kps, mask, 1 + g.below(4));
        REQUIRE(got.size() == kps.size());
        for (std::size_t j = 0; j < kps.size(); ++j) {
            const std::size_t r = static_cast<std::size_t>(std::lround(kps.points[j].y));
            const std::size_t c = static_cast<std::size_t>(std::lround(kps.points[j].x));
            const std::size_t want = oracle::argmin_scan(tar.grid, ref.grid.at(r, c), mask);
            CHECK(got[j].target_index == want);
            CHECK(got[j].target == Point2{static_cast<double>(want % 16), static_cast<double>(want / 16)});
            CHECK(got[j].similarity <= 0.0);
        }
    }
}

TEST_CASE("identical features give identity matches") {
    oracle::Gen g(37);
    const FusedFeatureGrid f{random_grid(g, 12, 12, 5), 5, 0};
    KeypointSet kps;
    for (std::size_t i = 0; i < 20; ++i) kps.points.push_back({static_cast<double>(g.below(12)), static_cast<double>(g.below(12))});
    const Correspondence got = match_keypoints(f, f, kps, BinaryMask(12, 12, true));
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].target == kps.points[i]);
        CHECK(got[i].similarity == 0.0);
    }
}

TEST_CASE("matching rejects empty masks and off-image keypoints") {
    oracle::Gen g(38);
    const FusedFeatureGrid f{random_grid(g, 4, 4, 2), 2, 0};
    KeypointSet kps{{{1, 1}}, 1};
    CHECK_THROWS_AS(match_keypoints(f, f, kps, BinaryMask(4, 4)), ValidationError);
    kps.points[0] = {3.6, 0};
    CHECK_THROWS_AS(match_keypoints(f, f, kps, BinaryMask(4, 4, true)), ValidationError);
}

TEST_CASE("fused features clamp the component count per layer") {
    oracle::Gen g(39);
    FeatureInputs in{{random_grid(g, 8, 8, 6), random_grid(g, 4, 4, 3)},
                     {random_grid(g, 6, 6, 6), random_grid(g, 3, 3, 3)},
                     random_grid(g, 4, 4, 4),
                     random_grid(g, 3, 3, 4)};
    const auto [ref, tar] = build_fused_features(in, 4, 16, 16, 12, 12);
    CHECK(ref.sd_channels == 7);
    CHECK(ref.dino_channels == 4);
    CHECK(ref.grid.height == 16);
    CHECK(tar.grid.width == 12);
    CHECK(tar.grid.channels == 11);
}
