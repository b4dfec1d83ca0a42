#include "motionshot/fixture.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "motionshot/error.hpp"

namespace mshot {

namespace fs = std::filesystem;

namespace {

constexpr std::uint8_t kForegroundThreshold = 60;

// Texture values stay in [90, 220].
std::array<std::uint8_t, 3> texture(double dx, double dy) {
    const double r = 155 + 65 * std::sin(0.9 * dx + 0.35 * dy);
    const double g = 155 + 65 * std::cos(0.45 * dx - 0.8 * dy);
    const double b = 155 + 50 * std::sin(0.6 * (dx + dy)) * std::cos(0.3 * dx);
    return {static_cast<std::uint8_t>(std::lround(r)), static_cast<std::uint8_t>(std::lround(g)),
            static_cast<std::uint8_t>(std::lround(b))};
}

// Smooth injective code of a normalized object position (u, v).
float encode(std::size_t channel, double u, double v) {
    const double pi = std::numbers::pi;
    switch (channel % 12) {
        case 0: return static_cast<float>(u);
        case 1: return static_cast<float>(v);
        case 2: return static_cast<float>(u * v);
        case 3: return static_cast<float>(u * u - v * v);
        case 4: return static_cast<float>(std::sin(pi * u / 2));
        case 5: return static_cast<float>(std::sin(pi * v / 2));
        case 6: return static_cast<float>(std::cos(pi * (u + v) / 3));
        case 7: return static_cast<float>(std::cos(pi * (u - v) / 3));
        case 8: return static_cast<float>(0.5 * u * u * u);
        case 9: return static_cast<float>(0.5 * v * v * v);
        case 10: return static_cast<float>(std::tanh(u + 0.5 * v));
        default: return static_cast<float>(std::tanh(v - 0.5 * u));
    }
}

// Grid cells cover the image; cell centers map back to image pixel coordinates.
FeatureGrid feature_grid(std::size_t cells, std::size_t channels, std::size_t offset, Point2 center, Point2 axes) {
    FeatureGrid g(cells, cells, channels);
    const double scale = static_cast<double>(kFixtureSize) / static_cast<double>(cells);
    for (std::size_t r = 0; r < cells; ++r)
        for (std::size_t c = 0; c < cells; ++c) {
            const double x = (static_cast<double>(c) + 0.5) * scale - 0.5;
            const double y = (static_cast<double>(r) + 0.5) * scale - 0.5;
            const double u = (x - center.x) / axes.x, v = (y - center.y) / axes.y;
            auto px = g.at(r, c);
            for (std::size_t k = 0; k < channels; ++k) px[k] = encode(k + offset, u, v);
        }
    return g;
}

BinaryMask ellipse_mask(Point2 center, Point2 axes) {
    BinaryMask m(kFixtureSize, kFixtureSize);
    for (std::size_t r = 0; r < kFixtureSize; ++r)
        for (std::size_t c = 0; c < kFixtureSize; ++c) {
            const double u = (static_cast<double>(c) - center.x) / axes.x;
            const double v = (static_cast<double>(r) - center.y) / axes.y;
            m.set(r, c, u * u + v * v <= 1.0);
        }
    return m;
}

}  // namespace

SyntheticFixture make_synthetic_fixture() {
    SyntheticFixture fx;
    fx.ellipse_center = {30.0, 40.0};
    fx.ellipse_axes = {22.0, 11.0};
    const Point2 disk_axes{kFixtureRadius, kFixtureRadius};
    for (std::size_t t = 0; t < kFixtureFrames; ++t) {
        const Point2 center{30.0 + static_cast<double>(t), 40.0 + static_cast<double>(t)};
        fx.disk_centers.push_back(center);
        Frame f(kFixtureSize, kFixtureSize, {kFixtureBackground, kFixtureBackground, kFixtureBackground});
        BinaryMask m = ellipse_mask(center, disk_axes);
        for (std::size_t r = 0; r < kFixtureSize; ++r)
            for (std::size_t c = 0; c < kFixtureSize; ++c) {
                if (!m.at(r, c)) continue;
                const auto rgb = texture(static_cast<double>(c) - center.x, static_cast<double>(r) - center.y);
                std::copy(rgb.begin(), rgb.end(), f.pixel(r, c));
            }
        fx.frames.push_back(std::move(f));
        fx.masks.push_back(std::move(m));
    }
    fx.ref_mask = fx.masks.front();
    fx.tar_mask = ellipse_mask(fx.ellipse_center, fx.ellipse_axes);

    const Point2 c0 = fx.disk_centers.front();
    fx.ref_sd = {feature_grid(48, 12, 0, c0, disk_axes), feature_grid(24, 8, 4, c0, disk_axes)};
    fx.tar_sd = {feature_grid(48, 12, 0, fx.ellipse_center, fx.ellipse_axes),
                 feature_grid(24, 8, 4, fx.ellipse_center, fx.ellipse_axes)};
    fx.ref_dino = feature_grid(24, 8, 2, c0, disk_axes);
    fx.tar_dino = feature_grid(24, 8, 2, fx.ellipse_center, fx.ellipse_axes);
    return fx;
}

fs::path write_synthetic_fixture(const SyntheticFixture& fx, const fs::path& dir) {
    fs::create_directories(dir);
    write_frames_ppm(fx.frames, dir / "frames");
    write_masks_pgm(fx.masks, dir / "masks");
    write_mask_pgm(fx.ref_mask, dir / "ref_mask.pgm");
    write_mask_pgm(fx.tar_mask, dir / "tar_mask.pgm");
    std::string ref_list, tar_list;
    for (std::size_t i = 0; i < fx.ref_sd.size(); ++i) {
        const std::string ref_name = "ref_sd" + std::to_string(i) + ".fgrid";
        const std::string tar_name = "tar_sd" + std::to_string(i) + ".fgrid";
        write_fgrid(fx.ref_sd[i], dir / ref_name);
        write_fgrid(fx.tar_sd[i], dir / tar_name);
        ref_list += (i ? "," : "") + ref_name;
        tar_list += (i ? "," : "") + tar_name;
    }
    write_fgrid(fx.ref_dino, dir / "ref_dino.fgrid");
    write_fgrid(fx.tar_dino, dir / "tar_dino.fgrid");

    const fs::path cfg = dir / "run.cfg";
    std::ofstream out(cfg);
    out << "# synthetic moving-disk fixture\n"
        << "ref_frames = frames\n"
        << "ref_masks = masks\n"
        << "ref_mask = ref_mask.pgm\n"
        << "tar_mask = tar_mask.pgm\n"
        << "ref_sd = " << ref_list << "\n"
        << "tar_sd = " << tar_list << "\n"
        << "ref_dino = ref_dino.fgrid\n"
        << "tar_dino = tar_dino.fgrid\n"
        << "n_pca = 8\n"
        << "seed = 7\n"
        << "out_dir = out\n";
    if (!out) throw IoError("cannot write " + cfg.string());
    return cfg;
}

BinaryMask binarize_foreground(const Frame& frame) {
    BinaryMask m(frame.height, frame.width);
    for (std::size_t r = 0; r < frame.height; ++r)
        for (std::size_t c = 0; c < frame.width; ++c) {
            const std::uint8_t* p = frame.pixel(r, c);
            m.set(r, c, std::max({p[0], p[1], p[2]}) > kForegroundThreshold);
        }
    return m;
}

}  // namespace mshot
