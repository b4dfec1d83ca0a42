#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "motionshot/config.hpp"
#include "motionshot/error.hpp"
#include "motionshot/fixture.hpp"
#include "motionshot/pipeline.hpp"
#include "motionshot/simd.hpp"

namespace fs = std::filesystem;
using namespace mshot;

namespace {

// Options every subcommand shares: a base config file, key=value overrides
// and a thread count. Overrides apply after the file, in command-line order.
struct Common {
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_file, "key = value config file")->check(CLI::ExistingFile);
        app->add_option("--set", overrides, "override one config key, key=value (repeatable)");
        app->add_option("--threads", threads, "worker threads");
        app->add_option("--seed", seed, "random seed");
    }

    PipelineConfig build() const {
        PipelineConfig cfg = config_file.empty() ? PipelineConfig{} : load_config(config_file);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (threads) cfg.threads = *threads;
        if (seed) cfg.seed = *seed;
        return cfg;
    }
};

std::vector<Point2> first_row(const fs::path& path) {
    const TrackFile t = read_tracks(path);
    if (t.frames.empty()) throw ValidationError(path.string() + ": no frames");
    return positions(t.frames.front());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MotionShot geometric motion-transfer pipeline"};
    app.require_subcommand(1);
    std::string isa;
    app.add_option("--isa", isa, "force a kernel variant")->check(CLI::IsMember({"scalar", "avx2"}));

    Common common;

    auto* sample = app.add_subcommand("sample", "structure-aware keypoints for a mask");
    std::string mask_path, out_path;
    std::optional<std::size_t> m;
    sample->add_option("--mask", mask_path, "reference mask (PGM)")->required();
    sample->add_option("--m", m, "total keypoints");
    sample->add_option("-o,--out", out_path, "output TRACKS file")->required();
    common.attach(sample);

    auto* match = app.add_subcommand("match", "match reference keypoints onto the target");
    std::vector<std::string> ref_sd, tar_sd;
    std::string ref_dino, tar_dino, keypoints_path, ref_mask, tar_mask;
    match->add_option("--ref-sd", ref_sd, "reference diffusion feature grids, one per layer")->required()->delimiter(',');
    match->add_option("--tar-sd", tar_sd, "target diffusion feature grids, same layers")->required()->delimiter(',');
    match->add_option("--ref-dino", ref_dino, "reference token features")->required();
    match->add_option("--tar-dino", tar_dino, "target token features")->required();
    match->add_option("--keypoints", keypoints_path, "reference keypoints (TRACKS)")->required();
    match->add_option("--ref-mask", ref_mask, "reference mask, sets the reference resolution")->required();
    match->add_option("--tar-mask", tar_mask, "target mask (PGM)")->required();
    match->add_option("-o,--out", out_path, "output TRACKS file")->required();
    common.attach(match);

    auto* track = app.add_subcommand("track", "track keypoints through the reference video");
    std::string frames_dir, external_tracks;
    track->add_option("--frames", frames_dir, "reference frame directory")->required();
    track->add_option("--keypoints", keypoints_path, "reference keypoints (TRACKS)")->required();
    track->add_option("--tracks", external_tracks, "use these tracks instead of the built-in tracker");
    track->add_option("-o,--out", out_path, "output TRACKS file")->required();
    common.attach(track);

    auto* retarget = app.add_subcommand("retarget", "carry the reference motion onto the matched target keypoints");
    std::string ref_tracks, tar_tracks;
    retarget->add_option("--ref-tracks", ref_tracks, "reference tracks")->required();
    retarget->add_option("--keypoints", keypoints_path, "matched target keypoints (TRACKS)")->required();
    retarget->add_option("-o,--out", out_path, "output TRACKS file")->required();
    common.attach(retarget);

    auto* warp = app.add_subcommand("warp", "thin-plate-spline warp of every reference frame");
    std::string masks_dir;
    warp->add_option("--frames", frames_dir, "reference frame directory")->required();
    warp->add_option("--ref-tracks", ref_tracks, "reference tracks")->required();
    warp->add_option("--tar-tracks", tar_tracks, "target tracks")->required();
    warp->add_option("--masks", masks_dir, "per-frame masks, enables masked mode");
    warp->add_option("-o,--out", out_path, "output frame directory")->required();
    common.attach(warp);

    auto* pack = app.add_subcommand("guidance-pack", "reference temporal attention and its top-k mask");
    std::string q_path, k_path, attention_out, mask_out;
    pack->add_option("--q", q_path, "queries [P][C][F][d] (FGR4)");
    pack->add_option("--k", k_path, "keys [P][C][F][d] (FGR4)");
    pack->add_option("--frames", frames_dir, "derive queries and keys from these frames instead");
    pack->add_option("--attention-out", attention_out, "attention output (FGR4)")->required();
    pack->add_option("--mask-out", mask_out, "mask output (FGR4)")->required();
    common.attach(pack);

    auto* run = app.add_subcommand("run", "all stages with caching and a manifest");
    std::string run_config;
    bool no_cache = false;
    run->add_option("config", run_config, "config file")->required()->check(CLI::ExistingFile);
    run->add_flag("--no-cache", no_cache, "rerun every stage");
    run->add_option("--set", common.overrides, "override one config key, key=value (repeatable)");
    run->add_option("--threads", common.threads, "worker threads");
    run->add_option("--seed", common.seed, "random seed");

    auto* synth = app.add_subcommand("synth", "write the synthetic moving-disk fixture and its run.cfg");
    std::string synth_dir;
    synth->add_option("dir", synth_dir, "output directory")->required();

    auto* dump = app.add_subcommand("config", "print the effective configuration");
    common.attach(dump);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code(ErrorKind::validation);
    }

    try {
        if (!isa.empty()) simd::force_isa(isa == "avx2" ? simd::Isa::avx2 : simd::Isa::scalar);

        if (*sample) {
            PipelineConfig cfg = common.build();
            cfg.ref_mask = mask_path;
            if (m) cfg.m = *m;
            cfg.validate();
            const KeypointSet kp = stage_sample(cfg);
            write_tracks(single_frame_tracks(kp.points), out_path);
            std::cout << kp.size() << " keypoints (" << kp.n_contour << " contour, " << kp.n_interior()
                      << " interior)\n";
        } else if (*match) {
            PipelineConfig cfg = common.build();
            cfg.ref_sd.assign(ref_sd.begin(), ref_sd.end());
            cfg.tar_sd.assign(tar_sd.begin(), tar_sd.end());
            cfg.ref_dino = ref_dino;
            cfg.tar_dino = tar_dino;
            cfg.ref_mask = ref_mask;
            cfg.tar_mask = tar_mask;
            cfg.validate();
            write_tracks(single_frame_tracks(stage_match(cfg, first_row(keypoints_path))), out_path);
        } else if (*track) {
            PipelineConfig cfg = common.build();
            cfg.ref_frames = frames_dir;
            cfg.tracks = external_tracks;
            cfg.validate();
            write_tracks(stage_track(cfg, first_row(keypoints_path)), out_path);
        } else if (*retarget) {
            common.build().validate();
            write_tracks(stage_retarget(read_tracks(ref_tracks), first_row(keypoints_path)), out_path);
        } else if (*warp) {
            PipelineConfig cfg = common.build();
            cfg.ref_frames = frames_dir;
            if (!masks_dir.empty()) {
                cfg.ref_masks = masks_dir;
                cfg.warp_mode = WarpMode::masked;
            }
            cfg.validate();
            fs::remove_all(out_path);
            write_frames_ppm(stage_warp(cfg, read_tracks(ref_tracks), read_tracks(tar_tracks)), out_path);
        } else if (*pack) {
            PipelineConfig cfg = common.build();
            if (q_path.empty() != k_path.empty()) throw ValidationError("--q and --k go together");
            if (q_path.empty() && frames_dir.empty()) throw ValidationError("give --q/--k or --frames");
            cfg.attention_q = q_path;
            cfg.attention_k = k_path;
            cfg.ref_frames = frames_dir;
            cfg.validate();
            const GuidanceArtifacts art = stage_guidance(cfg, attention_out, mask_out);
            const auto& d = art.attention.values.dims;
            std::cout << "attention [" << d[0] << "," << d[1] << "," << d[2] << "," << d[3] << "], k = " << cfg.guidance.top_k
                      << "\n";
        } else if (*run) {
            common.config_file = run_config;
            const RunReport report = run_pipeline(common.build(), !no_cache);
            std::cout << "manifest: " << report.manifest.string() << "\n";
        } else if (*synth) {
            std::cout << write_synthetic_fixture(make_synthetic_fixture(), synth_dir).string() << "\n";
        } else if (*dump) {
            std::cout << common.build().to_text();
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(ErrorKind::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
