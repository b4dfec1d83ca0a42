#pragma once

// Data-parallel inner loops. Each kernel has a portable scalar reference in
// mshot::simd::scalar and, on x86-64, an AVX2+FMA variant in mshot::simd::avx2.
// The free functions in mshot::simd dispatch to the best variant the running
// CPU supports. MOTIONSHOT_ISA=scalar|avx2 in the environment pins the choice.

#include <span>
#include <string_view>

namespace mshot::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
/// Throws ValidationError if the CPU lacks the requested ISA.
void force_isa(Isa isa);

/// Thin-plate-spline evaluation over one row of pixel centers.
struct TpsRowArgs {
    std::span<const double> center_x;
    std::span<const double> center_y;
    std::span<const double> weight_x;
    std::span<const double> weight_y;
    // out_x = a[0] + a[1] x + a[2] y + sum_i weight_x[i] U(r_i); out_y uses a[3..5].
    const double* affine;
};

/// Squared Euclidean distance, accumulated in double.
double squared_distance(std::span<const float> a, std::span<const float> b);

/// Sum over i of mask[i] * (a[i] - b[i])^2, accumulated in double.
double masked_squared_difference(std::span<const float> a, std::span<const float> b, std::span<const float> mask);

/// out[i] = 2 * mask[i] * (gen[i] - ref[i]).
void masked_difference_gradient(std::span<const float> ref, std::span<const float> gen, std::span<const float> mask,
                                std::span<float> out);

/// out[i] = a[i] - scale * b[i].
void subtract_scaled(std::span<const float> a, std::span<const float> b, float scale, std::span<float> out);

/// Evaluates the spline at (x, y) for x = 0 .. out_x.size()-1.
void tps_row(const TpsRowArgs& args, double y, std::span<double> out_x, std::span<double> out_y);

namespace scalar {
double squared_distance(std::span<const float> a, std::span<const float> b);
double masked_squared_difference(std::span<const float> a, std::span<const float> b, std::span<const float> mask);
void masked_difference_gradient(std::span<const float> ref, std::span<const float> gen, std::span<const float> mask,
                                std::span<float> out);
void subtract_scaled(std::span<const float> a, std::span<const float> b, float scale, std::span<float> out);
void tps_row(const TpsRowArgs& args, double y, std::span<double> out_x, std::span<double> out_y);
}  // namespace scalar

#if defined(MOTIONSHOT_HAVE_AVX2)
namespace avx2 {
double squared_distance(std::span<const float> a, std::span<const float> b);
double masked_squared_difference(std::span<const float> a, std::span<const float> b, std::span<const float> mask);
void masked_difference_gradient(std::span<const float> ref, std::span<const float> gen, std::span<const float> mask,
                                std::span<float> out);
void subtract_scaled(std::span<const float> a, std::span<const float> b, float scale, std::span<float> out);
void tps_row(const TpsRowArgs& args, double y, std::span<double> out_x, std::span<double> out_y);
}  // namespace avx2
#endif

}  // namespace mshot::simd
