#include <doctest.h>

#include <cmath>

#include "motionshot/simd.hpp"
#include "motionshot/tpswarp.hpp"
#include "oracles.hpp"

using namespace mshot;

#if defined(MOTIONSHOT_HAVE_AVX2)

namespace {

std::vector<float> floats(oracle::Gen& g, std::size_t n, double scale = 1.0) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(scale * g.normal());
    return v;
}

std::vector<float> binary(oracle::Gen& g, std::size_t n) {
    std::vector<float> v(n);
    for (float& x : v) x = g.coin() ? 1.0f : 0.0f;
    return v;
}

}  // namespace

TEST_CASE("avx2 kernels agree with the scalar references") {
    if (!simd::isa_supported(simd::Isa::avx2)) {
        MESSAGE("avx2 not available on this CPU, skipping");
        return;
    }
    oracle::Gen g(71);
    // Lengths straddle the vector width so tails are covered.
    for (std::size_t n : {0, 1, 3, 7, 8, 9, 15, 16, 17, 31, 64, 100, 1023}) {
        const auto a = floats(g, n), b = floats(g, n), m = binary(g, n);
        const double sd_s = simd::scalar::squared_distance(a, b), sd_v = simd::avx2::squared_distance(a, b);
        CHECK(sd_v == doctest::Approx(sd_s).epsilon(1e-12));
        CHECK(simd::avx2::masked_squared_difference(a, b, m) ==
              doctest::Approx(simd::scalar::masked_squared_difference(a, b, m)).epsilon(1e-12));

        std::vector<float> gs(n), gv(n);
        simd::scalar::masked_difference_gradient(a, b, m, gs);
        simd::avx2::masked_difference_gradient(a, b, m, gv);
        CHECK(gs == gv);

        std::vector<float> ss(n), sv(n);
        simd::scalar::subtract_scaled(a, b, 0.37f, ss);
        simd::avx2::subtract_scaled(a, b, 0.37f, sv);
        CHECK(ss == sv);
    }
}

TEST_CASE("avx2 spline rows agree with the scalar reference") {
    if (!simd::isa_supported(simd::Isa::avx2)) return;
    oracle::Gen g(72);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = g.range(3, 60), width = g.range(1, 77);
        std::vector<double> cx(m), cy(m), wx(m), wy(m);
        for (std::size_t i = 0; i < m; ++i) {
            cx[i] = g.uniform(-10, 90);
            cy[i] = g.uniform(-10, 90);
            wx[i] = g.uniform(-1, 1);
            wy[i] = g.uniform(-1, 1);
        }
        // One center exactly on a pixel so the r = 0 branch is hit.
        cx[0] = 3;
        const double affine[6] = {g.normal(), 1 + 0.1 * g.normal(), 0.1 * g.normal(), g.normal(), 0.1 * g.normal(), 1};
        const simd::TpsRowArgs args{cx, cy, wx, wy, affine};
        const double y = std::floor(cy[0]);
        cy[0] = y;
        std::vector<double> xs(width), ys(width), xv(width), yv(width);
        simd::scalar::tps_row(args, y, xs, ys);
        simd::avx2::tps_row(args, y, xv, yv);
        for (std::size_t i = 0; i < width; ++i) {
            CHECK(std::isfinite(xv[i]));
            CHECK(std::fabs(xs[i] - xv[i]) <= 1e-9 * (1 + std::fabs(xs[i])));
            CHECK(std::fabs(ys[i] - yv[i]) <= 1e-9 * (1 + std::fabs(ys[i])));
        }
    }
}

#endif

TEST_CASE("scalar spline row matches the kernel definition") {
    const std::vector<double> cx{0, 4}, cy{0, 1}, wx{1, -2}, wy{0.5, 0};
    const double affine[6] = {1, 2, 3, 4, 5, 6};
    std::vector<double> ox(3), oy(3);
    simd::scalar::tps_row({cx, cy, wx, wy, affine}, 2.0, ox, oy);
    for (std::size_t i = 0; i < 3; ++i) {
        const double x = static_cast<double>(i);
        const double u0 = tps_kernel(std::hypot(x - 0, 2.0 - 0)), u1 = tps_kernel(std::hypot(x - 4, 2.0 - 1));
        CHECK(ox[i] == doctest::Approx(1 + 2 * x + 3 * 2 + u0 - 2 * u1));
        CHECK(oy[i] == doctest::Approx(4 + 5 * x + 6 * 2 + 0.5 * u0));
    }
}

TEST_CASE("forcing an instruction set") {
    const simd::Isa before = simd::active_isa();
    simd::force_isa(simd::Isa::scalar);
    CHECK(simd::active_isa() == simd::Isa::scalar);
    CHECK(simd::isa_name(simd::Isa::scalar) == "scalar");
    simd::force_isa(before);
}
