#include <cmath>
#include <cstddef>

#include "motionshot/simd.hpp"

namespace mshot::simd::scalar {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

double masked_squared_difference(std::span<const float> a, std::span<const float> b, std::span<const float> mask) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += static_cast<double>(mask[i]) * d * d;
    }
    return acc;
}

void masked_difference_gradient(std::span<const float> ref, std::span<const float> gen, std::span<const float> mask,
                                std::span<float> out) {
    for (std::size_t i = 0; i < ref.size(); ++i) out[i] = 2.0f * mask[i] * (gen[i] - ref[i]);
}

void subtract_scaled(std::span<const float> a, std::span<const float> b, float scale, std::span<float> out) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - scale * b[i];
}

void tps_row(const TpsRowArgs& args, double y, std::span<double> out_x, std::span<double> out_y) {
    const double* a = args.affine;
    const std::size_t m = args.center_x.size();
    for (std::size_t col = 0; col < out_x.size(); ++col) {
        const double x = static_cast<double>(col);
        double sx = a[0] + a[1] * x + a[2] * y;
        double sy = a[3] + a[4] * x + a[5] * y;
        for (std::size_t i = 0; i < m; ++i) {
            const double dx = x - args.center_x[i];
            const double dy = y - args.center_y[i];
            const double r2 = dx * dx + dy * dy;
            const double u = r2 > 0.0 ? r2 * std::log(r2) : 0.0;
            sx += args.weight_x[i] * u;
            sy += args.weight_y[i] * u;
        }
        out_x[col] = sx;
        out_y[col] = sy;
    }
}

}  // namespace mshot::simd::scalar
