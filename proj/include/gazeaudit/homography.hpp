#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gazeaudit {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

struct Correspondence {
    Point2 src;
    Point2 dst;
};

/// Planar projective map, stored row-major in canonical scale: h22 = 1 when
/// |h22| > 1e-12, unit Frobenius norm otherwise.
class Homography {
public:
    Homography(); // identity
    /// Canonicalises; throws Error(Degenerate) when singular or non-finite.
    explicit Homography(const std::array<double, 9>& row_major);

    static Homography translation(double dx, double dy);

    const std::array<double, 9>& matrix() const noexcept { return h_; }
    double operator()(int row, int col) const noexcept { return h_[static_cast<std::size_t>(row * 3 + col)]; }

    double determinant() const noexcept;

    friend bool operator==(const Homography&, const Homography&) = default;

private:
    std::array<double, 9> h_;
};

/// Perspective division; throws Error(Domain) when |w| < 1e-12.
Point2 project_point(const Homography& h, Point2 p);

/// Euclidean distance between H(src) and dst; +inf for points at infinity.
double reprojection_error(const Homography& h, const Correspondence& c);

/// Normalised direct linear transform. Needs >= 4 correspondences in general
/// position; throws Error(InvalidArgument) for fewer and Error(Degenerate) on
/// rank deficiency.
Homography estimate_homography_dlt(std::span<const Correspondence> corrs);

struct RobustOptions {
    double inlier_threshold = 3.0; // px
    int max_iters = 2000;
    double confidence = 0.999;
    std::uint64_t seed = 0;
};

struct RobustFit {
    Homography h;
    std::vector<bool> inliers;
    std::size_t inlier_count = 0;
};

/// RANSAC over minimal 4-point DLT fits with a final refit on the consensus
/// set. Deterministic for a given seed. Throws Error(Degenerate) when no
/// model reaches 4 inliers.
RobustFit estimate_homography_robust(std::span<const Correspondence> corrs, const RobustOptions& opts);

} // namespace gazeaudit
