#include <cmath>

#include "motionshot/error.hpp"
#include "motionshot/log.hpp"
#include "motionshot/sampling.hpp"

namespace mshot {

KeypointSet sample_structure_aware(const BinaryMask& mask, const SamplingOptions& options) {
    if (options.m < 3) throw ValidationError("m must be at least 3, got " + std::to_string(options.m));
    if (!(options.contour_fraction >= 0.0 && options.contour_fraction <= 1.0))
        throw ValidationError("contour_fraction must lie in [0, 1]");

    const auto n_contour = static_cast<std::size_t>(std::lround(options.contour_fraction * static_cast<double>(options.m)));
    const std::size_t n_interior = options.m - n_contour;

    const Contour contour = trace_contour(mask);
    KeypointSet set;
    set.points = options.mode == ContourMode::count ? sample_contour_count(contour, n_contour)
                                                    : sample_contour_interval(contour, options.interval);
    set.n_contour = set.points.size();

    const PoissonResult interior = poisson_disk_interior(mask, n_interior, options.seed);
    set.points.insert(set.points.end(), interior.points.begin(), interior.points.end());
    if (options.mode == ContourMode::count && set.size() != options.m)
        log_warning("sampled " + std::to_string(set.size()) + " keypoints instead of " + std::to_string(options.m));
    return set;
}

}  // namespace mshot
