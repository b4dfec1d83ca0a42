#include "motionshot/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "motionshot/error.hpp"
#include "motionshot/log.hpp"
#include "motionshot/simd.hpp"

namespace mshot {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::io, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

namespace {

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

std::string sha256_path(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("missing " + path.string());
    if (!fs::is_directory(path)) return sha256_hex(read_bytes(path));
    std::string listing;
    for (const auto& f : sorted_files(path))
        listing += fs::relative(f, path).generic_string() + " " + sha256_hex(read_bytes(f)) + "\n";
    return sha256_hex(listing);
}

TrackFile single_frame_tracks(std::span<const Point2> points) {
    TrackFile t{points.size(), {{}}};
    for (const Point2& p : points) t.frames[0].push_back({p, true});
    return t;
}

namespace {

BinaryMask load_mask(const fs::path& path, const char* key) {
    if (path.empty()) throw ValidationError(std::string("config: ") + key + " is not set");
    return read_mask_pgm(path);
}

std::vector<FeatureGrid> load_layers(const std::vector<fs::path>& paths, const char* key) {
    if (paths.empty()) throw ValidationError(std::string("config: ") + key + " is not set");
    std::vector<FeatureGrid> out;
    for (const auto& p : paths) out.push_back(read_fgrid(p));
    return out;
}

FeatureGrid load_grid(const fs::path& path, const char* key) {
    if (path.empty()) throw ValidationError(std::string("config: ") + key + " is not set");
    return read_fgrid(path);
}

FrameSequence load_frames(const PipelineConfig& config) {
    if (config.ref_frames.empty()) throw ValidationError("config: ref_frames is not set");
    FrameSequence frames = read_frames_ppm(config.ref_frames);
    if (frames.empty()) throw IoError(config.ref_frames.string() + ": no frames found");
    return frames;
}

}  // namespace

KeypointSet stage_sample(const PipelineConfig& config) {
    return sample_structure_aware(load_mask(config.ref_mask, "ref_mask"), config.sampling());
}

std::vector<Point2> stage_match(const PipelineConfig& config, std::span<const Point2> keypoints) {
    const BinaryMask ref_mask = load_mask(config.ref_mask, "ref_mask");
    const BinaryMask tar_mask = load_mask(config.tar_mask, "tar_mask");
    FeatureInputs in{load_layers(config.ref_sd, "ref_sd"), load_layers(config.tar_sd, "tar_sd"),
                     load_grid(config.ref_dino, "ref_dino"), load_grid(config.tar_dino, "tar_dino")};
    for (const Point2& p : keypoints)
        if (!(p.x >= -0.5 && p.y >= -0.5 && p.x < static_cast<double>(ref_mask.width) - 0.5 &&
              p.y < static_cast<double>(ref_mask.height) - 0.5))
            throw ValidationError("match: keypoint outside the reference image");
    const auto [ref, tar] = build_fused_features(in, config.n_pca, ref_mask.height, ref_mask.width, tar_mask.height,
                                                 tar_mask.width);
    const KeypointSet set{{keypoints.begin(), keypoints.end()}, 0};
    std::vector<Point2> out;
    for (const Match& m : match_keypoints(ref, tar, set, tar_mask, config.threads)) out.push_back(m.target);
    return out;
}

TrackFile stage_track(const PipelineConfig& config, std::span<const Point2> keypoints) {
    const FrameSequence frames = load_frames(config);
    if (config.tracks.empty()) return track_keypoints_ncc(frames, keypoints, config.tracker());

    TrackFile ext = read_tracks(config.tracks);
    if (ext.points != keypoints.size())
        throw ValidationError("tracks: " + std::to_string(ext.points) + " points, keypoints have " +
                              std::to_string(keypoints.size()));
    if (ext.frame_count() != frames.size())
        throw ValidationError("tracks: " + std::to_string(ext.frame_count()) + " frames, video has " +
                              std::to_string(frames.size()));
    for (std::size_t i = 0; i < keypoints.size(); ++i)
        if (distance(ext.frames[0][i].pos, keypoints[i]) > 1e-3)
            throw ValidationError("tracks: frame 0 point " + std::to_string(i) + " differs from the keypoint");
    validate_tracks_in_bounds(ext, frames.front().height, frames.front().width);
    return ext;
}

TrackFile stage_retarget(const TrackFile& reference, std::span<const Point2> target0) {
    return build_target_sequence(reference, target0);
}

FrameSequence stage_warp(const PipelineConfig& config, const TrackFile& reference, const TrackFile& target) {
    const FrameSequence frames = load_frames(config);
    std::vector<BinaryMask> masks;
    if (config.warp_mode == WarpMode::masked) {
        if (config.ref_masks.empty()) throw ValidationError("config: masked warping needs ref_masks");
        masks = read_masks_pgm(config.ref_masks);
        if (masks.size() != frames.size())
            throw ValidationError("warp: " + std::to_string(masks.size()) + " masks for " +
                                  std::to_string(frames.size()) + " frames");
    }
    return warp_sequence(frames, reference, target, config.warp(), masks);
}

GuidanceArtifacts stage_guidance(const PipelineConfig& config, const fs::path& attention_path, const fs::path& mask_path) {
    Tensor4 q, k;
    if (!config.attention_q.empty()) {
        q = read_fgr4(config.attention_q);
        k = read_fgr4(config.attention_k);
    } else {
        q = k = frame_projections(load_frames(config), config.guidance);
    }
    return guidance_pack(q, k, config.guidance, attention_path, mask_path);
}

Frame draw_keypoints(const Frame& frame, const std::vector<TrackPoint>& points) {
    Frame out = frame;
    for (const TrackPoint& tp : points) {
        const std::array<std::uint8_t, 3> color = tp.visible ? std::array<std::uint8_t, 3>{255, 230, 0}
                                                             : std::array<std::uint8_t, 3>{40, 80, 255};
        const long cx = std::lround(tp.pos.x), cy = std::lround(tp.pos.y);
        for (long y = cy - 1; y <= cy + 1; ++y)
            for (long x = cx - 1; x <= cx + 1; ++x) {
                if (x < 0 || y < 0 || x >= static_cast<long>(out.width) || y >= static_cast<long>(out.height)) continue;
                std::copy(color.begin(), color.end(), out.pixel(static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
            }
    }
    return out;
}

namespace {

struct Stage {
    std::string name;
    std::vector<std::string> keys;
    std::vector<std::pair<std::string, fs::path>> inputs;
    std::vector<std::string> outputs;  // relative to out_dir
    std::function<void()> body;
};

std::string outputs_text(const fs::path& out_dir, const std::vector<std::string>& outputs) {
    std::string text;
    for (const auto& rel : outputs) {
        const fs::path p = out_dir / rel;
        text += "output " + rel + " " + (fs::exists(p) ? sha256_path(p) : std::string("missing")) + "\n";
    }
    return text;
}

bool run_stage(const Stage& stage, const PipelineConfig& config, bool use_cache) {
    std::string key = "stage " + stage.name + "\n" + config.subset_text(stage.keys);
    for (const auto& [label, path] : stage.inputs) key += "input " + label + " " + sha256_path(path) + "\n";

    const fs::path stamp = config.out_dir / ".cache" / (stage.name + ".stamp");
    if (use_cache && fs::exists(stamp) && read_bytes(stamp) == key + outputs_text(config.out_dir, stage.outputs))
        return true;

    fs::remove(stamp);
    for (const auto& rel : stage.outputs) fs::remove_all(config.out_dir / rel);
    stage.body();
    fs::create_directories(stamp.parent_path());
    std::ofstream(stamp, std::ios::binary) << key + outputs_text(config.out_dir, stage.outputs);
    return false;
}

std::vector<Point2> first_row(const TrackFile& t) {
    if (t.frames.empty()) throw ValidationError("tracks file has no frames");
    return positions(t.frames.front());
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& config, bool use_cache) {
    config.validate();
    const fs::path out = config.out_dir;
    fs::create_directories(out);
    const auto at = [&](const std::string& rel) { return out / rel; };

    const std::vector<std::pair<std::string, fs::path>> features = [&] {
        std::vector<std::pair<std::string, fs::path>> f;
        for (std::size_t i = 0; i < config.ref_sd.size(); ++i) f.emplace_back("ref_sd" + std::to_string(i), config.ref_sd[i]);
        for (std::size_t i = 0; i < config.tar_sd.size(); ++i) f.emplace_back("tar_sd" + std::to_string(i), config.tar_sd[i]);
        f.emplace_back("ref_dino", config.ref_dino);
        f.emplace_back("tar_dino", config.tar_dino);
        return f;
    }();
    for (const auto& [label, path] : features)
        if (path.empty()) throw ValidationError("config: " + label + " is not set");
    if (config.ref_mask.empty()) throw ValidationError("config: ref_mask is not set");
    if (config.tar_mask.empty()) throw ValidationError("config: tar_mask is not set");
    if (config.ref_frames.empty()) throw ValidationError("config: ref_frames is not set");

    std::vector<Stage> stages;
    stages.push_back({"sample",
                      {"m", "contour_fraction", "contour_mode", "contour_interval", "seed"},
                      {{"ref_mask", config.ref_mask}},
                      {"keypoints_ref.tracks"},
                      [&] { write_tracks(single_frame_tracks(stage_sample(config).points), at("keypoints_ref.tracks")); }});

    auto match_inputs = features;
    match_inputs.emplace_back("ref_mask", config.ref_mask);
    match_inputs.emplace_back("tar_mask", config.tar_mask);
    match_inputs.emplace_back("keypoints_ref", at("keypoints_ref.tracks"));
    stages.push_back({"match", {"n_pca"}, match_inputs, {"keypoints_tar.tracks"}, [&] {
                          const auto kp = first_row(read_tracks(at("keypoints_ref.tracks")));
                          write_tracks(single_frame_tracks(stage_match(config, kp)), at("keypoints_tar.tracks"));
                      }});

    std::vector<std::pair<std::string, fs::path>> track_inputs{{"ref_frames", config.ref_frames},
                                                                {"keypoints_ref", at("keypoints_ref.tracks")}};
    if (!config.tracks.empty()) track_inputs.emplace_back("tracks", config.tracks);
    stages.push_back({"track", {"track_patch", "track_search"}, track_inputs, {"tracks_ref.tracks"}, [&] {
                          const auto kp = first_row(read_tracks(at("keypoints_ref.tracks")));
                          write_tracks(stage_track(config, kp), at("tracks_ref.tracks"));
                      }});

    stages.push_back({"retarget",
                      {},
                      {{"tracks_ref", at("tracks_ref.tracks")}, {"keypoints_tar", at("keypoints_tar.tracks")}},
                      {"tracks_tar.tracks"},
                      [&] {
                          const auto tar0 = first_row(read_tracks(at("keypoints_tar.tracks")));
                          write_tracks(stage_retarget(read_tracks(at("tracks_ref.tracks")), tar0), at("tracks_tar.tracks"));
                      }});

    std::vector<std::pair<std::string, fs::path>> warp_inputs{{"ref_frames", config.ref_frames},
                                                               {"tracks_ref", at("tracks_ref.tracks")},
                                                               {"tracks_tar", at("tracks_tar.tracks")}};
    if (config.warp_mode == WarpMode::masked && !config.ref_masks.empty())
        warp_inputs.emplace_back("ref_masks", config.ref_masks);
    stages.push_back({"warp", {"tps_lambda_relative", "warp_mode", "warp_fill"}, warp_inputs, {"warped"}, [&] {
                          write_frames_ppm(stage_warp(config, read_tracks(at("tracks_ref.tracks")),
                                                      read_tracks(at("tracks_tar.tracks"))),
                                           at("warped"));
                      }});

    std::vector<std::pair<std::string, fs::path>> guidance_inputs;
    if (config.attention_q.empty()) {
        guidance_inputs.emplace_back("ref_frames", config.ref_frames);
    } else {
        guidance_inputs.emplace_back("attention_q", config.attention_q);
        guidance_inputs.emplace_back("attention_k", config.attention_k);
    }
    stages.push_back({"guidance",
                      {"guidance_timestep", "guidance_top_k", "guidance_steps", "guidance_guided_steps",
                       "guidance_strength", "attention_height", "attention_width", "attention_heads"},
                      guidance_inputs,
                      {"attention_ref.fgr4", "attention_mask.fgr4"},
                      [&] { stage_guidance(config, at("attention_ref.fgr4"), at("attention_mask.fgr4")); }});

    stages.push_back({"diagnostics",
                      {},
                      {{"ref_frames", config.ref_frames},
                       {"tar_mask", config.tar_mask},
                       {"keypoints_tar", at("keypoints_tar.tracks")},
                       {"tracks_ref", at("tracks_ref.tracks")},
                       {"tracks_tar", at("tracks_tar.tracks")},
                       {"warped", at("warped")}},
                      {"diagnostics"},
                      [&] {
                          const FrameSequence frames = load_frames(config);
                          const FrameSequence warped = read_frames_ppm(at("warped"));
                          const TrackFile ref = read_tracks(at("tracks_ref.tracks"));
                          const TrackFile tar = read_tracks(at("tracks_tar.tracks"));
                          FrameSequence ref_overlay, warp_overlay;
                          for (std::size_t t = 0; t < frames.size(); ++t) {
                              ref_overlay.push_back(draw_keypoints(frames[t], ref.frames[t]));
                              warp_overlay.push_back(draw_keypoints(warped[t], tar.frames[t]));
                          }
                          write_frames_ppm(ref_overlay, at("diagnostics/reference"));
                          write_frames_ppm(warp_overlay, at("diagnostics/warped"));

                          const BinaryMask tar_mask = read_mask_pgm(config.tar_mask);
                          Frame target(tar_mask.height, tar_mask.width);
                          for (std::size_t i = 0; i < tar_mask.bits.size(); ++i)
                              std::fill_n(target.rgb.data() + 3 * i, 3, tar_mask.bits[i] ? 128 : 0);
                          const TrackFile kp = read_tracks(at("keypoints_tar.tracks"));
                          write_frame_ppm(draw_keypoints(target, kp.frames.front()), at("diagnostics/target_keypoints.ppm"));
                      }});

    RunReport report;
    for (const Stage& s : stages) {
        const bool cached = run_stage(s, config, use_cache);
        log_info(s.name + (cached ? ": cached" : ": done"));
        report.stages.push_back({s.name, cached});
    }

    nlohmann::ordered_json manifest;
    manifest["tool"] = "motionshot";
    manifest["version"] = kVersion;
    manifest["simd"] = simd::isa_name(simd::active_isa());
    auto& cfg = manifest["config"] = nlohmann::ordered_json::object();
    for (const auto& key : config_keys()) cfg[key] = config.get(key);
    auto& inputs = manifest["inputs"] = nlohmann::ordered_json::object();
    auto add_input = [&](const std::string& label, const fs::path& path) {
        inputs[label] = {{"path", path.generic_string()}, {"sha256", sha256_path(path)}};
    };
    add_input("ref_frames", config.ref_frames);
    add_input("ref_mask", config.ref_mask);
    add_input("tar_mask", config.tar_mask);
    for (const auto& [label, path] : features) add_input(label, path);
    if (!config.tracks.empty()) add_input("tracks", config.tracks);
    if (!config.ref_masks.empty()) add_input("ref_masks", config.ref_masks);
    if (!config.attention_q.empty()) {
        add_input("attention_q", config.attention_q);
        add_input("attention_k", config.attention_k);
    }
    auto& artifacts = manifest["artifacts"] = nlohmann::ordered_json::object();
    for (const auto& f : sorted_files(out)) {
        const std::string rel = fs::relative(f, out).generic_string();
        if (rel.starts_with(".cache/") || rel == "manifest.json") continue;
        artifacts[rel] = sha256_hex(read_bytes(f));
    }
    report.manifest = out / "manifest.json";
    std::ofstream(report.manifest, std::ios::binary) << manifest.dump(2) << "\n";
    if (!fs::exists(report.manifest)) throw IoError("cannot write " + report.manifest.string());
    return report;
}

}  // namespace mshot
