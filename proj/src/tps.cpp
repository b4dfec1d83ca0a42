#include <Eigen/Dense>
#include <cmath>

#include "motionshot/error.hpp"
#include "motionshot/parallel.hpp"
#include "motionshot/simd.hpp"
#include "motionshot/tpswarp.hpp"

namespace mshot {

double tps_kernel(double r) {
    const double r2 = r * r;
    return r2 > 0.0 ? r2 * std::log(r2) : 0.0;
}

namespace {

void check_geometry(std::span<const Point2> centers) {
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j)
            if (distance(centers[i], centers[j]) < 1e-9)
                throw NumericalError("tps: centers " + std::to_string(i) + " and " + std::to_string(j) + " coincide");

    const Point2 c = centroid(centers);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const Point2& p : centers) {
        const Point2 d = p - c;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    // Eigenvalues of the 2x2 scatter matrix; a vanishing minor one means a line.
    const double tr = sxx + syy;
    const double disc = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
    const double major = 0.5 * tr + disc;
    const double minor = 0.5 * tr - disc;
    if (minor <= 1e-12 * major)
        throw NumericalError("tps: all " + std::to_string(centers.size()) + " centers are collinear");
}

}  // namespace

TpsTransform tps_fit(std::span<const Point2> centers, std::span<const Point2> targets, double lambda) {
    if (centers.size() != targets.size()) throw ValidationError("tps: center and target counts differ");
    if (centers.size() < 3) throw NumericalError("tps: need at least 3 control points, got " + std::to_string(centers.size()));
    if (!(lambda >= 0.0)) throw ValidationError("tps: lambda must be non-negative");
    check_geometry(centers);

    const auto m = static_cast<Eigen::Index>(centers.size());
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(m + 3, m + 3);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 3, 2);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Point2 ci = centers[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m; ++j) system(i, j) = tps_kernel(distance(ci, centers[static_cast<std::size_t>(j)]));
        system(i, i) += lambda;
        system(i, m) = ci.x;
        system(i, m + 1) = ci.y;
        system(i, m + 2) = 1.0;
        system(m, i) = ci.x;
        system(m + 1, i) = ci.y;
        system(m + 2, i) = 1.0;
        rhs(i, 0) = targets[static_cast<std::size_t>(i)].x;
        rhs(i, 1) = targets[static_cast<std::size_t>(i)].y;
    }

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const Eigen::MatrixXd sol = lu.solve(rhs);
    const double residual = (system * sol - rhs).norm();
    if (!sol.allFinite() || residual > 1e-6 * (1.0 + rhs.norm()))
        throw NumericalError("tps: singular system (residual " + std::to_string(residual) + ")");

    TpsTransform t;
    t.lambda = lambda;
    t.centers.assign(centers.begin(), centers.end());
    t.weights.resize(centers.size());
    for (Eigen::Index i = 0; i < m; ++i) t.weights[static_cast<std::size_t>(i)] = {sol(i, 0), sol(i, 1)};
    // Solution rows m..m+2 hold the coefficients of x, y and 1 for each output coordinate.
    t.affine = {sol(m + 2, 0), sol(m, 0), sol(m + 1, 0), sol(m + 2, 1), sol(m, 1), sol(m + 1, 1)};
    return t;
}

double tps_relative_lambda(std::span<const Point2> centers, double relative) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j) {
            sum += squared_norm(centers[i] - centers[j]);
            ++pairs;
        }
    return pairs ? relative * sum / static_cast<double>(pairs) : 0.0;
}

Point2 tps_eval(const TpsTransform& t, Point2 p) {
    const auto& a = t.affine;
    Point2 out{a[0] + a[1] * p.x + a[2] * p.y, a[3] + a[4] * p.x + a[5] * p.y};
    for (std::size_t i = 0; i < t.centers.size(); ++i) {
        const double u = tps_kernel(distance(t.centers[i], p));
        out.x += t.weights[i].x * u;
        out.y += t.weights[i].y * u;
    }
    return out;
}

double tps_bending_energy(const TpsTransform& t) {
    double e = 0.0;
    for (std::size_t i = 0; i < t.centers.size(); ++i)
        for (std::size_t j = 0; j < t.centers.size(); ++j) {
            const double k = tps_kernel(distance(t.centers[i], t.centers[j]));
            e += k * (t.weights[i].x * t.weights[j].x + t.weights[i].y * t.weights[j].y);
        }
    return e;
}

WarpField evaluate_field(const TpsTransform& t, std::size_t height, std::size_t width, std::size_t threads) {
    WarpField field{height, width, std::vector<double>(height * width), std::vector<double>(height * width)};
    std::vector<double> cx, cy, wx, wy;
    for (std::size_t i = 0; i < t.centers.size(); ++i) {
        cx.push_back(t.centers[i].x);
        cy.push_back(t.centers[i].y);
        wx.push_back(t.weights[i].x);
        wy.push_back(t.weights[i].y);
    }
    const simd::TpsRowArgs args{cx, cy, wx, wy, t.affine.data()};
    parallel_for(height, threads, [&](std::size_t row) {
        simd::tps_row(args, static_cast<double>(row), std::span(field.x).subspan(row * width, width),
                      std::span(field.y).subspan(row * width, width));
    });
    return field;
}

WarpField build_backward_field(std::span<const Point2> target, std::span<const Point2> reference, std::size_t height,
                               std::size_t width, double lambda, std::size_t threads) {
    if (target.size() != reference.size()) throw ValidationError("warp: keypoint counts differ");
    return evaluate_field(tps_fit(target, reference, lambda), height, width, threads);
}

}  // namespace mshot
