#include <algorithm>
#include <cmath>
#include <limits>

#include "motionshot/error.hpp"
#include "motionshot/log.hpp"
#include "motionshot/matching.hpp"
#include "motionshot/parallel.hpp"
#include "motionshot/simd.hpp"

namespace mshot {

FeatureGrid upsample_bilinear(const FeatureGrid& grid, std::size_t out_height, std::size_t out_width) {
    if (out_height < 1 || out_width < 1) throw ValidationError("upsample: output size must be at least 1x1");
    if (grid.height < 1 || grid.width < 1) throw ValidationError("upsample: empty input grid");
    FeatureGrid out(out_height, out_width, grid.channels);

    struct Tap {
        std::size_t i0, i1;
        double t;
    };
    auto taps = [](std::size_t in, std::size_t outn) {
        std::vector<Tap> v(outn);
        const double scale = static_cast<double>(in) / static_cast<double>(outn);
        for (std::size_t o = 0; o < outn; ++o) {
            double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in - 1));
            const auto i0 = static_cast<std::size_t>(std::floor(src));
            v[o] = {i0, std::min(i0 + 1, in - 1), src - static_cast<double>(i0)};
        }
        return v;
    };
    const auto ty = taps(grid.height, out_height);
    const auto tx = taps(grid.width, out_width);

    for (std::size_t r = 0; r < out_height; ++r) {
        for (std::size_t c = 0; c < out_width; ++c) {
            const auto& a = ty[r];
            const auto& b = tx[c];
            const auto v00 = grid.at(a.i0, b.i0), v01 = grid.at(a.i0, b.i1);
            const auto v10 = grid.at(a.i1, b.i0), v11 = grid.at(a.i1, b.i1);
            auto dst = out.at(r, c);
            for (std::size_t k = 0; k < grid.channels; ++k) {
                const double top = v00[k] * (1.0 - b.t) + v01[k] * b.t;
                const double bottom = v10[k] * (1.0 - b.t) + v11[k] * b.t;
                dst[k] = static_cast<float>(top * (1.0 - a.t) + bottom * a.t);
            }
        }
    }
    return out;
}

namespace {

void normalize_into(std::span<const float> src, std::span<float> dst) {
    double sq = 0.0;
    for (float v : src) sq += static_cast<double>(v) * v;
    const double n = std::sqrt(sq);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = n > 0.0 ? static_cast<float>(src[k] / n) : 0.0f;
}

}  // namespace

FusedFeatureGrid fuse_features(const FeatureGrid& sd, const FeatureGrid& dino) {
    if (sd.height != dino.height || sd.width != dino.width)
        throw ValidationError("fuse: diffusion grid " + std::to_string(sd.height) + "x" + std::to_string(sd.width) +
                              " and token grid " + std::to_string(dino.height) + "x" + std::to_string(dino.width) +
                              " differ in size; upsample first");
    FusedFeatureGrid out{FeatureGrid(sd.height, sd.width, sd.channels + dino.channels), sd.channels, dino.channels};
    for (std::size_t p = 0; p < sd.pixels(); ++p) {
        std::span<float> dst(out.grid.data.data() + p * out.grid.channels, out.grid.channels);
        normalize_into(sd.pixel(p), dst.first(sd.channels));
        normalize_into(dino.pixel(p), dst.subspan(sd.channels));
    }
    return out;
}

Correspondence match_keypoints(const FusedFeatureGrid& ref, const FusedFeatureGrid& tar, const KeypointSet& keypoints,
                               const BinaryMask& tar_mask, std::size_t threads) {
    const FeatureGrid& fr = ref.grid;
    const FeatureGrid& ft = tar.grid;
    if (fr.channels != ft.channels) throw ValidationError("match: fused channel counts differ");
    if (tar_mask.height != ft.height || tar_mask.width != ft.width)
        throw ValidationError("match: target mask size differs from target feature grid");

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < tar_mask.bits.size(); ++i)
        if (tar_mask.bits[i]) candidates.push_back(i);
    if (candidates.empty()) throw ValidationError("match: target mask is empty");

    Correspondence out(keypoints.size());
    parallel_for(keypoints.size(), threads, [&](std::size_t j) {
        const Point2 p = keypoints.points[j];
        const double col = std::floor(p.x + 0.5), row = std::floor(p.y + 0.5);
        if (col < 0 || row < 0 || col >= static_cast<double>(fr.width) || row >= static_cast<double>(fr.height))
            throw ValidationError("match: keypoint " + std::to_string(j) + " lies outside the reference image");
        const auto query = fr.at(static_cast<std::size_t>(row), static_cast<std::size_t>(col));

        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = candidates.front();
        for (std::size_t i : candidates) {
            const double d = simd::squared_distance(ft.pixel(i), query);
            if (d < best) {
                best = d;
                arg = i;
            }
        }
        out[j] = {arg, {static_cast<double>(arg % ft.width), static_cast<double>(arg / ft.width)}, -std::sqrt(best)};
    });
    return out;
}

std::pair<FusedFeatureGrid, FusedFeatureGrid> build_fused_features(const FeatureInputs& inputs, std::size_t n_pca,
                                                                   std::size_t ref_height, std::size_t ref_width,
                                                                   std::size_t tar_height, std::size_t tar_width) {
    if (inputs.ref_layers.empty() || inputs.ref_layers.size() != inputs.tar_layers.size())
        throw ValidationError("features: need the same non-zero number of reference and target diffusion layers");

    std::vector<FeatureGrid> ref_parts, tar_parts;
    for (std::size_t l = 0; l < inputs.ref_layers.size(); ++l) {
        const auto& rl = inputs.ref_layers[l];
        const auto& tl = inputs.tar_layers[l];
        std::size_t k = std::min(n_pca, rl.channels);
        if (k < n_pca)
            log_warning("layer " + std::to_string(l) + " has " + std::to_string(rl.channels) +
                        " channels; reducing to that many instead of " + std::to_string(n_pca));
        PcaResult pca = pca_joint_reduce(rl, tl, k);
        ref_parts.push_back(upsample_bilinear(pca.ref, ref_height, ref_width));
        tar_parts.push_back(upsample_bilinear(pca.tar, tar_height, tar_width));
    }
    auto concat = [](const std::vector<FeatureGrid>& parts) {
        std::size_t channels = 0;
        for (const auto& g : parts) channels += g.channels;
        FeatureGrid out(parts.front().height, parts.front().width, channels);
        for (std::size_t p = 0; p < out.pixels(); ++p) {
            float* dst = out.data.data() + p * channels;
            for (const auto& g : parts) {
                const auto src = g.pixel(p);
                dst = std::copy(src.begin(), src.end(), dst);
            }
        }
        return out;
    };
    const FeatureGrid ref_sd = concat(ref_parts);
    const FeatureGrid tar_sd = concat(tar_parts);
    const FeatureGrid ref_dino = upsample_bilinear(inputs.ref_dino, ref_height, ref_width);
    const FeatureGrid tar_dino = upsample_bilinear(inputs.tar_dino, tar_height, tar_width);
    return {fuse_features(ref_sd, ref_dino), fuse_features(tar_sd, tar_dino)};
}

}  // namespace mshot
