#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motionshot/config.hpp"
#include "motionshot/guidance.hpp"
#include "motionshot/matching.hpp"
#include "motionshot/motionseq.hpp"
#include "motionshot/tpswarp.hpp"

namespace mshot {

inline constexpr std::string_view kVersion = "0.3.0";

std::string sha256_hex(std::string_view bytes);
/// Hash of a file, or for a directory, of the sorted "name hash" lines of its files.
std::string sha256_path(const std::filesystem::path& path);

/// One frame, every point visible.
TrackFile single_frame_tracks(std::span<const Point2> points);

// Stage bodies shared by the subcommands and by run_pipeline. Each reads the
// inputs named in the config and returns its result without writing files.
KeypointSet stage_sample(const PipelineConfig& config);
std::vector<Point2> stage_match(const PipelineConfig& config, std::span<const Point2> keypoints);
TrackFile stage_track(const PipelineConfig& config, std::span<const Point2> keypoints);
TrackFile stage_retarget(const TrackFile& reference, std::span<const Point2> target0);
FrameSequence stage_warp(const PipelineConfig& config, const TrackFile& reference, const TrackFile& target);
GuidanceArtifacts stage_guidance(const PipelineConfig& config, const std::filesystem::path& attention_path,
                                 const std::filesystem::path& mask_path);

/// Copy of the frame with a small square drawn at every track position:
/// yellow when visible, blue otherwise.
Frame draw_keypoints(const Frame& frame, const std::vector<TrackPoint>& points);

struct StageReport {
    std::string name;
    bool cached = false;
};

struct RunReport {
    std::vector<StageReport> stages;
    std::filesystem::path manifest;
};

/// Validates the config, then runs sample, match, track, retarget, warp,
/// guidance and diagnostics in order under config.out_dir. A stage whose
/// inputs, relevant settings and previous outputs are unchanged is skipped.
/// Writes manifest.json last.
RunReport run_pipeline(const PipelineConfig& config, bool use_cache = true);

}  // namespace mshot
