#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motionshot/guidance.hpp"
#include "motionshot/sampling.hpp"
#include "motionshot/tpswarp.hpp"

namespace mshot {

/// Every tunable of a run. Plain-text form is one `key = value` per line,
/// '#' starts a comment; see README for the key list. Relative paths in a
/// file are resolved against the file's directory.
struct PipelineConfig {
    // keypoint sampling
    std::size_t m = 30;
    double contour_fraction = 0.8;
    ContourMode contour_mode = ContourMode::count;
    double contour_interval = 200.0;

    // matching
    std::size_t n_pca = 64;

    // tracking
    int track_patch = 11;
    int track_search = 15;

    // warping
    double tps_lambda_relative = 1e-8;
    WarpMode warp_mode = WarpMode::full;
    std::array<std::uint8_t, 3> warp_fill{0, 0, 0};

    GuidanceConfig guidance;

    std::uint64_t seed = 0;
    std::size_t threads = 1;

    // inputs
    std::filesystem::path ref_frames;
    std::filesystem::path ref_mask;
    std::filesystem::path tar_mask;
    std::vector<std::filesystem::path> ref_sd;
    std::vector<std::filesystem::path> tar_sd;
    std::filesystem::path ref_dino;
    std::filesystem::path tar_dino;
    std::filesystem::path tracks;       // optional external reference tracks
    std::filesystem::path ref_masks;    // optional per-frame masks, required for masked warping
    std::filesystem::path attention_q;  // optional FGR4 queries; frame-derived when absent
    std::filesystem::path attention_k;
    std::filesystem::path out_dir = "motionshot_out";

    /// Sets one key from its text form. Throws ValidationError on an unknown
    /// key or unparsable value. Relative paths are joined onto `base`.
    void set(const std::string& key, const std::string& value, const std::filesystem::path& base = {});

    /// Text form of one key's value.
    std::string get(const std::string& key) const;

    /// Range checks that do not need the inputs. Throws ValidationError.
    void validate() const;

    /// Every key in schema order, one `key = value` per line.
    std::string to_text() const;

    /// Values of the given keys only, in the given order.
    std::string subset_text(const std::vector<std::string>& keys) const;

    SamplingOptions sampling() const;
    TrackerOptions tracker() const;
    WarpOptions warp() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
void apply_config_text(PipelineConfig& config, const std::string& text, const std::filesystem::path& base);

/// Keys understood by PipelineConfig::set, in schema order.
const std::vector<std::string>& config_keys();

}  // namespace mshot
