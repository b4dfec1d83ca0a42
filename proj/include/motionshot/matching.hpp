#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "motionshot/sampling.hpp"
#include "motionshot/tensorio.hpp"

namespace mshot {

struct PcaResult {
    FeatureGrid ref;
    FeatureGrid tar;
    /// Variance along each kept direction, descending.
    std::vector<double> explained_variance;
    double total_variance = 0.0;
    std::vector<double> mean;                     // joint channel mean
    std::vector<std::vector<double>> components;  // unit directions, one per output channel
};

/// Stacks the pixels of both grids, mean-centers them jointly and projects
/// onto the top principal directions of the joint set. Component signs are
/// fixed so that the third moment of each projected coordinate is positive,
/// which makes the output independent of any orthogonal change of basis of
/// the input channels.
PcaResult pca_joint_reduce(const FeatureGrid& ref, const FeatureGrid& tar, std::size_t n_components);

/// Per-channel bilinear resize, pixel-center (align-corners false) convention,
/// edge-clamped.
FeatureGrid upsample_bilinear(const FeatureGrid& grid, std::size_t out_height, std::size_t out_width);

/// Fused per-pixel feature: unit-L2 diffusion slice followed by unit-L2 token
/// slice. A zero slice stays zero.
struct FusedFeatureGrid {
    FeatureGrid grid;
    std::size_t sd_channels = 0;
    std::size_t dino_channels = 0;
};

FusedFeatureGrid fuse_features(const FeatureGrid& sd, const FeatureGrid& dino);

struct Match {
    std::size_t target_index = 0;  // row-major pixel index in the target grid
    Point2 target;                 // pixel center of target_index
    double similarity = 0.0;       // negative L2 distance
};

using Correspondence = std::vector<Match>;

/// For every reference keypoint (feature read at its nearest pixel) picks the
/// masked target pixel of greatest similarity -||f_tar(i) - f_ref(j)||.
/// Ties go to the lowest row-major index; several keypoints may share a match.
Correspondence match_keypoints(const FusedFeatureGrid& ref, const FusedFeatureGrid& tar, const KeypointSet& keypoints,
                               const BinaryMask& tar_mask, std::size_t threads = 1);

/// Per-layer diffusion features of both images plus token features, reduced
/// and fused at the resolution of each image's mask.
struct FeatureInputs {
    std::vector<FeatureGrid> ref_layers;
    std::vector<FeatureGrid> tar_layers;
    FeatureGrid ref_dino;
    FeatureGrid tar_dino;
};

/// Each layer is jointly reduced to min(n_pca, layer channels) components and
/// upsampled; reduced layers are concatenated channel-wise before fusion.
std::pair<FusedFeatureGrid, FusedFeatureGrid> build_fused_features(const FeatureInputs& inputs, std::size_t n_pca,
                                                                   std::size_t ref_height, std::size_t ref_width,
                                                                   std::size_t tar_height, std::size_t tar_width);

}  // namespace mshot
