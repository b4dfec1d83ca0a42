#pragma once

#include <cstddef>
#include <filesystem>

#include "motionshot/tensorio.hpp"

namespace mshot {

/// [P][C][F][F] attention over frames: every (p, c, i) row is a probability
/// distribution over key frames j.
struct TemporalAttention {
    Tensor4 values;
};

/// Binary selector with exactly k ones in every (p, c, i) row.
struct SparseMask {
    Tensor4 bits;
};

struct GuidanceConfig {
    int timestep = 400;          // tau, timestep at which reference attention is read
    std::size_t top_k = 1;
    int total_steps = 300;       // DDIM steps
    int guided_steps = 180;      // guidance applies to the first guided_steps steps
    double strength = 1.0;       // lambda in eps_hat = eps - lambda * grad
    std::size_t attention_height = 8;
    std::size_t attention_width = 8;
    std::size_t heads = 1;

    void validate(std::size_t frames = 0) const;
    bool is_guided(int step_index) const { return step_index >= 0 && step_index < guided_steps; }
};

/// softmax_j(<Q[p,c,i], K[p,c,j]> / sqrt(d)) with the row max subtracted.
/// Q and K are [P][C][F][d].
TemporalAttention temporal_attention(const Tensor4& queries, const Tensor4& keys);

/// Marks the k largest entries of each row; ties go to the smaller j.
SparseMask topk_mask(const TemporalAttention& attention, std::size_t k);

/// || M * (A_ref - A_gen) ||^2, accumulated in double.
double guidance_energy(const TemporalAttention& reference, const TemporalAttention& generated, const SparseMask& mask);

/// d energy / d A_gen = 2 M * (A_gen - A_ref).
Tensor4 guidance_gradient(const TemporalAttention& reference, const TemporalAttention& generated,
                          const SparseMask& mask);

/// eps - strength * grad_latent. The latent gradient is supplied by the caller.
Tensor4 guided_noise(const Tensor4& eps, const Tensor4& grad_latent, double strength);

/// Throws ValidationError unless rows are non-negative and sum to 1 within tol.
void validate_attention(const TemporalAttention& attention, double tol = 1e-5);
/// Throws ValidationError unless entries are 0/1 with exactly k ones per row.
void validate_mask(const SparseMask& mask, std::size_t k);

/// Queries/keys derived from frames: each frame is box-averaged onto the
/// attention grid and the mean RGB (scaled to [0, 1] and multiplied by
/// `temperature`) becomes the d = 3 vector of every head. Stands in for the
/// projections a denoising network would provide.
Tensor4 frame_projections(const FrameSequence& frames, const GuidanceConfig& config, double temperature = 8.0);

struct GuidanceArtifacts {
    TemporalAttention attention;
    SparseMask mask;
};

/// Computes A_ref from (Q, K), derives its top-k mask and writes both as FGR4.
/// The written files are read back and revalidated.
GuidanceArtifacts guidance_pack(const Tensor4& queries, const Tensor4& keys, const GuidanceConfig& config,
                                const std::filesystem::path& attention_path, const std::filesystem::path& mask_path);

}  // namespace mshot
