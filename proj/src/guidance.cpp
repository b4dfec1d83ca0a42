#include "motionshot/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "motionshot/error.hpp"
#include "motionshot/simd.hpp"

namespace mshot {

namespace {

std::string shape_string(const Tensor4& t) {
    return "[" + std::to_string(t.dims[0]) + "," + std::to_string(t.dims[1]) + "," + std::to_string(t.dims[2]) + "," +
           std::to_string(t.dims[3]) + "]";
}

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
    if (a.dims != b.dims)
        throw ValidationError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

void require_square_rows(const Tensor4& t, const char* what) {
    if (t.dims[2] != t.dims[3])
        throw ValidationError(std::string(what) + ": expected [P][C][F][F], got " + shape_string(t));
}

}  // namespace

void GuidanceConfig::validate(std::size_t frames) const {
    if (total_steps < 1) throw ValidationError("guidance: total steps must be positive");
    if (guided_steps < 1 || guided_steps > total_steps)
        throw ValidationError("guidance: guided steps must lie in [1, total steps]");
    if (top_k < 1 || (frames > 0 && top_k > frames))
        throw ValidationError("guidance: k must lie in [1, F]");
    if (timestep < 0) throw ValidationError("guidance: timestep must be non-negative");
    if (attention_height < 1 || attention_width < 1 || heads < 1)
        throw ValidationError("guidance: attention grid and head count must be positive");
    if (!std::isfinite(strength)) throw ValidationError("guidance: strength must be finite");
}

TemporalAttention temporal_attention(const Tensor4& queries, const Tensor4& keys) {
    require_same_shape(queries, keys, "temporal_attention");
    const auto [P, C, F, d] = queries.dims;
    if (d < 1) throw ValidationError("temporal_attention: feature size must be at least 1");
    TemporalAttention out{Tensor4({P, C, F, F})};
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> logits(F);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < F; ++i) {
                const float* q = &queries.data[queries.index(p, c, i, 0)];
                for (std::size_t j = 0; j < F; ++j) {
                    const float* k = &keys.data[keys.index(p, c, j, 0)];
                    double dot = 0.0;
                    for (std::size_t e = 0; e < d; ++e) dot += static_cast<double>(q[e]) * k[e];
                    logits[j] = dot * inv_sqrt_d;
                }
                const double mx = *std::max_element(logits.begin(), logits.end());
                double sum = 0.0;
                for (double& l : logits) sum += (l = std::exp(l - mx));
                for (std::size_t j = 0; j < F; ++j) out.values(p, c, i, j) = static_cast<float>(logits[j] / sum);
            }
    return out;
}

SparseMask topk_mask(const TemporalAttention& attention, std::size_t k) {
    const Tensor4& a = attention.values;
    require_square_rows(a, "topk_mask");
    const std::size_t F = a.dims[3];
    if (k < 1 || k > F) throw ValidationError("topk_mask: k = " + std::to_string(k) + " outside [1, " + std::to_string(F) + "]");
    SparseMask out{Tensor4(a.dims)};
    std::vector<std::size_t> order(F);
    for (std::size_t row = 0; row < a.size() / F; ++row) {
        const float* v = a.data.data() + row * F;
        std::iota(order.begin(), order.end(), 0);
        // Stable: equal values keep ascending j.
        std::stable_sort(order.begin(), order.end(), [v](std::size_t x, std::size_t y) { return v[x] > v[y]; });
        for (std::size_t r = 0; r < k; ++r) out.bits.data[row * F + order[r]] = 1.0f;
    }
    return out;
}

double guidance_energy(const TemporalAttention& reference, const TemporalAttention& generated, const SparseMask& mask) {
    require_same_shape(reference.values, generated.values, "guidance_energy");
    require_same_shape(reference.values, mask.bits, "guidance_energy");
    return simd::masked_squared_difference(reference.values.data, generated.values.data, mask.bits.data);
}

Tensor4 guidance_gradient(const TemporalAttention& reference, const TemporalAttention& generated,
                          const SparseMask& mask) {
    require_same_shape(reference.values, generated.values, "guidance_gradient");
    require_same_shape(reference.values, mask.bits, "guidance_gradient");
    Tensor4 grad(reference.values.dims);
    simd::masked_difference_gradient(reference.values.data, generated.values.data, mask.bits.data, grad.data);
    return grad;
}

Tensor4 guided_noise(const Tensor4& eps, const Tensor4& grad_latent, double strength) {
    require_same_shape(eps, grad_latent, "guided_noise");
    Tensor4 out(eps.dims);
    simd::subtract_scaled(eps.data, grad_latent.data, static_cast<float>(strength), out.data);
    return out;
}

void validate_attention(const TemporalAttention& attention, double tol) {
    const Tensor4& a = attention.values;
    require_square_rows(a, "attention");
    const std::size_t F = a.dims[3];
    for (std::size_t row = 0; row < (F ? a.size() / F : 0); ++row) {
        double sum = 0.0;
        for (std::size_t j = 0; j < F; ++j) {
            const float v = a.data[row * F + j];
            if (!(v >= 0.0f)) throw ValidationError("attention: negative entry in row " + std::to_string(row));
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
            throw ValidationError("attention: row " + std::to_string(row) + " sums to " + std::to_string(sum));
    }
}

void validate_mask(const SparseMask& mask, std::size_t k) {
    const Tensor4& m = mask.bits;
    require_square_rows(m, "mask");
    const std::size_t F = m.dims[3];
    for (std::size_t row = 0; row < (F ? m.size() / F : 0); ++row) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < F; ++j) {
            const float v = m.data[row * F + j];
            if (v != 0.0f && v != 1.0f) throw ValidationError("mask: non-binary entry in row " + std::to_string(row));
            ones += v == 1.0f ? 1 : 0;
        }
        if (ones != k)
            throw ValidationError("mask: row " + std::to_string(row) + " has " + std::to_string(ones) + " ones, expected " +
                                  std::to_string(k));
    }
}

Tensor4 frame_projections(const FrameSequence& frames, const GuidanceConfig& config, double temperature) {
    if (frames.empty()) throw ValidationError("guidance: no frames");
    const std::size_t H = config.attention_height, W = config.attention_width, C = config.heads;
    const std::size_t F = frames.size();
    const std::size_t fh = frames.front().height, fw = frames.front().width;
    if (H > fh || W > fw) throw ValidationError("guidance: attention grid is finer than the frames");
    Tensor4 out({H * W, C, F, 3});
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t gy = 0; gy < H; ++gy) {
            const std::size_t y0 = gy * fh / H, y1 = (gy + 1) * fh / H;
            for (std::size_t gx = 0; gx < W; ++gx) {
                const std::size_t x0 = gx * fw / W, x1 = (gx + 1) * fw / W;
                double sum[3] = {0, 0, 0};
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t x = x0; x < x1; ++x)
                        for (int k = 0; k < 3; ++k) sum[k] += frames[f].pixel(y, x)[k];
                const double n = static_cast<double>((y1 - y0) * (x1 - x0)) * 255.0;
                for (std::size_t c = 0; c < C; ++c)
                    for (int k = 0; k < 3; ++k)
                        out(gy * W + gx, c, f, static_cast<std::size_t>(k)) = static_cast<float>(temperature * sum[k] / n);
            }
        }
    }
    return out;
}

GuidanceArtifacts guidance_pack(const Tensor4& queries, const Tensor4& keys, const GuidanceConfig& config,
                                const std::filesystem::path& attention_path, const std::filesystem::path& mask_path) {
    config.validate(queries.dims[2]);
    GuidanceArtifacts art{temporal_attention(queries, keys), {}};
    art.mask = topk_mask(art.attention, config.top_k);
    write_fgr4(art.attention.values, attention_path);
    write_fgr4(art.mask.bits, mask_path);

    const TemporalAttention reread{read_fgr4(attention_path)};
    const SparseMask reread_mask{read_fgr4(mask_path)};
    validate_attention(reread);
    validate_mask(reread_mask, config.top_k);
    if (reread.values != art.attention.values || reread_mask.bits != art.mask.bits)
        throw IoError("guidance: written tensors did not round-trip");
    return art;
}

}  // namespace mshot
