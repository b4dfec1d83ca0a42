#include <atomic>
#include <cstdlib>
#include <string>

#include "motionshot/error.hpp"
#include "motionshot/simd.hpp"

namespace mshot::simd {

namespace {

Isa detect() {
    if (const char* env = std::getenv("MOTIONSHOT_ISA")) {
        const std::string want(env);
        if (want == "scalar") return Isa::scalar;
        if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
    }
    return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

bool use_avx2() {
#if defined(MOTIONSHOT_HAVE_AVX2)
    return current().load(std::memory_order_relaxed) == Isa::avx2;
#else
    return false;
#endif
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
    if (isa == Isa::scalar) return true;
#if defined(MOTIONSHOT_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
    if (!isa_supported(isa)) throw ValidationError("instruction set " + std::string(isa_name(isa)) + " not supported here");
    current().store(isa, std::memory_order_relaxed);
}

#if defined(MOTIONSHOT_HAVE_AVX2)
#define MSHOT_DISPATCH(call) return use_avx2() ? avx2::call : scalar::call
#else
#define MSHOT_DISPATCH(call) return scalar::call
#endif

double squared_distance(std::span<const float> a, std::span<const float> b) { MSHOT_DISPATCH(squared_distance(a, b)); }

double masked_squared_difference(std::span<const float> a, std::span<const float> b, std::span<const float> mask) {
    MSHOT_DISPATCH(masked_squared_difference(a, b, mask));
}

void masked_difference_gradient(std::span<const float> ref, std::span<const float> gen, std::span<const float> mask,
                                std::span<float> out) {
    MSHOT_DISPATCH(masked_difference_gradient(ref, gen, mask, out));
}

void subtract_scaled(std::span<const float> a, std::span<const float> b, float scale, std::span<float> out) {
    MSHOT_DISPATCH(subtract_scaled(a, b, scale, out));
}

void tps_row(const TpsRowArgs& args, double y, std::span<double> out_x, std::span<double> out_y) {
    MSHOT_DISPATCH(tps_row(args, y, out_x, out_y));
}

#undef MSHOT_DISPATCH

}  // namespace mshot::simd
