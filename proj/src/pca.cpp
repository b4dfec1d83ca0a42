#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "motionshot/error.hpp"
#include "motionshot/matching.hpp"

namespace mshot {

PcaResult pca_joint_reduce(const FeatureGrid& ref, const FeatureGrid& tar, std::size_t n_components) {
    if (ref.channels != tar.channels)
        throw ValidationError("pca: channel counts differ (" + std::to_string(ref.channels) + " vs " +
                              std::to_string(tar.channels) + ")");
    const std::size_t channels = ref.channels;
    const std::size_t rows = ref.pixels() + tar.pixels();
    if (n_components < 1 || n_components > channels || n_components > rows)
        throw ValidationError("pca: n_components " + std::to_string(n_components) + " must lie in [1, min(channels " +
                              std::to_string(channels) + ", pixels " + std::to_string(rows) + ")]");

    auto row = [&](std::size_t r) { return r < ref.pixels() ? ref.pixel(r) : tar.pixel(r - ref.pixels()); };

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(channels));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto v = row(r);
        for (std::size_t c = 0; c < channels; ++c) mean[static_cast<Eigen::Index>(c)] += v[c];
    }
    mean /= static_cast<double>(rows);

    Eigen::MatrixXd centered(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(channels));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto v = row(r);
        for (std::size_t c = 0; c < channels; ++c)
            centered(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c] - mean[static_cast<Eigen::Index>(c)];
    }
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows);
    const double total = cov.trace();
    if (!(total > 0.0)) throw ValidationError("pca: joint features have zero variance");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericalError("pca: eigendecomposition failed");

    PcaResult out;
    out.total_variance = total;
    out.mean.assign(mean.data(), mean.data() + mean.size());
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n_components));
    for (std::size_t k = 0; k < n_components; ++k) {
        // Eigen sorts ascending.
        const Eigen::Index src = static_cast<Eigen::Index>(channels - 1 - k);
        Eigen::VectorXd dir = solver.eigenvectors().col(src);
        const Eigen::VectorXd scores = centered * dir;
        const double third = scores.array().cube().sum();
        const double scale = scores.array().abs().cube().sum();
        bool flip = third < 0.0;
        if (std::abs(third) <= 1e-9 * scale) {
            Eigen::Index arg = 0;
            scores.array().abs().maxCoeff(&arg);
            flip = scores[arg] < 0.0;
        }
        if (flip) dir = -dir;
        basis.col(static_cast<Eigen::Index>(k)) = dir;
        out.explained_variance.push_back(std::max(0.0, solver.eigenvalues()[src]));
        out.components.emplace_back(dir.data(), dir.data() + dir.size());
    }

    const Eigen::MatrixXd projected = centered * basis;
    out.ref = FeatureGrid(ref.height, ref.width, n_components);
    out.tar = FeatureGrid(tar.height, tar.width, n_components);
    for (std::size_t r = 0; r < rows; ++r) {
        float* dst = r < ref.pixels() ? out.ref.data.data() + r * n_components
                                      : out.tar.data.data() + (r - ref.pixels()) * n_components;
        for (std::size_t k = 0; k < n_components; ++k)
            dst[k] = static_cast<float>(projected(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)));
    }
    return out;
}

}  // namespace mshot
