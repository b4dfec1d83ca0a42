// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "motionshot/simd.hpp"

namespace mshot::simd::avx2 {

namespace {

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Natural log for positive normal doubles. x = 2^e * m with m in [sqrt(1/2), sqrt(2)],
// then log(m) = 2 atanh(s), s = (m-1)/(m+1), |s| <= 0.1716, series to s^23.
__m256d log_pd(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i exp_bits = _mm256_srli_epi64(bits, 52);
    // 2^52 trick converts the small non-negative integer exponent to double.
    const __m256d two52 = _mm256_set1_pd(4503599627370496.0);
    __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(exp_bits, _mm256_castpd_si256(two52))), two52);
    e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));

    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
    const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
    e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d z = _mm256_mul_pd(s, s);
    __m256d p = _mm256_set1_pd(1.0 / 23.0);
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 21.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 19.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 17.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 15.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 13.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 11.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 9.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 7.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 5.0));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 3.0));
    // log(m) = 2s + 2s*z*p
    const __m256d two_s = _mm256_add_pd(s, s);
    const __m256d log_m = _mm256_fmadd_pd(_mm256_mul_pd(two_s, z), p, two_s);

    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
    return _mm256_fmadd_pd(e, ln2_hi, _mm256_fmadd_pd(e, ln2_lo, log_m));
}

}  // namespace

double squared_distance(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a.data() + i);
        const __m256 vb = _mm256_loadu_ps(b.data() + i);
        const __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                                         _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
        const __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                                         _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

double masked_squared_difference(std::span<const float> a, std::span<const float> b, std::span<const float> mask) {
    const std::size_t n = a.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_cvtps_pd(_mm_loadu_ps(a.data() + i)),
                                        _mm256_cvtps_pd(_mm_loadu_ps(b.data() + i)));
        const __m256d w = _mm256_cvtps_pd(_mm_loadu_ps(mask.data() + i));
        acc = _mm256_fmadd_pd(_mm256_mul_pd(w, d), d, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        total += static_cast<double>(mask[i]) * d * d;
    }
    return total;
}

void masked_difference_gradient(std::span<const float> ref, std::span<const float> gen, std::span<const float> mask,
                                std::span<float> out) {
    const std::size_t n = ref.size();
    const __m256 two = _mm256_set1_ps(2.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(gen.data() + i), _mm256_loadu_ps(ref.data() + i));
        const __m256 w = _mm256_mul_ps(two, _mm256_loadu_ps(mask.data() + i));
        _mm256_storeu_ps(out.data() + i, _mm256_mul_ps(w, d));
    }
    for (; i < n; ++i) out[i] = 2.0f * mask[i] * (gen[i] - ref[i]);
}

void subtract_scaled(std::span<const float> a, std::span<const float> b, float scale, std::span<float> out) {
    const std::size_t n = a.size();
    const __m256 s = _mm256_set1_ps(scale);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        // Separate multiply and subtract round like the scalar loop.
        const __m256 r = _mm256_sub_ps(_mm256_loadu_ps(a.data() + i), _mm256_mul_ps(s, _mm256_loadu_ps(b.data() + i)));
        _mm256_storeu_ps(out.data() + i, r);
    }
    for (; i < n; ++i) out[i] = a[i] - scale * b[i];
}

void tps_row(const TpsRowArgs& args, double y, std::span<double> out_x, std::span<double> out_y) {
    const double* a = args.affine;
    const std::size_t m = args.center_x.size();
    const std::size_t width = out_x.size();
    const __m256d vy = _mm256_set1_pd(y);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d step = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);

    std::size_t col = 0;
    for (; col + 4 <= width; col += 4) {
        const __m256d vx = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(col)), step);
        __m256d sx = _mm256_fmadd_pd(_mm256_set1_pd(a[1]), vx, _mm256_set1_pd(a[0] + a[2] * y));
        __m256d sy = _mm256_fmadd_pd(_mm256_set1_pd(a[4]), vx, _mm256_set1_pd(a[3] + a[5] * y));
        for (std::size_t i = 0; i < m; ++i) {
            const __m256d dx = _mm256_sub_pd(vx, _mm256_set1_pd(args.center_x[i]));
            const __m256d dy = _mm256_sub_pd(vy, _mm256_set1_pd(args.center_y[i]));
            const __m256d r2 = _mm256_fmadd_pd(dx, dx, _mm256_mul_pd(dy, dy));
            const __m256d positive = _mm256_cmp_pd(r2, zero, _CMP_GT_OQ);
            // log is only evaluated on lanes with r2 > 0; the others read log(1) = 0.
            const __m256d safe = _mm256_blendv_pd(_mm256_set1_pd(1.0), r2, positive);
            const __m256d u = _mm256_and_pd(_mm256_mul_pd(r2, log_pd(safe)), positive);
            sx = _mm256_fmadd_pd(_mm256_set1_pd(args.weight_x[i]), u, sx);
            sy = _mm256_fmadd_pd(_mm256_set1_pd(args.weight_y[i]), u, sy);
        }
        _mm256_storeu_pd(out_x.data() + col, sx);
        _mm256_storeu_pd(out_y.data() + col, sy);
    }
    if (col < width) {
        for (std::size_t c = col; c < width; ++c) {
            const double x = static_cast<double>(c);
            double tx = a[0] + a[1] * x + a[2] * y;
            double ty = a[3] + a[4] * x + a[5] * y;
            for (std::size_t i = 0; i < m; ++i) {
                const double dx = x - args.center_x[i];
                const double dy = y - args.center_y[i];
                const double r2 = dx * dx + dy * dy;
                const double u = r2 > 0.0 ? r2 * std::log(r2) : 0.0;
                tx += args.weight_x[i] * u;
                ty += args.weight_y[i] * u;
            }
            out_x[c] = tx;
            out_y[c] = ty;
        }
    }
}

}  // namespace mshot::simd::avx2
