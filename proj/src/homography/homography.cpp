#include "gazeaudit/homography.hpp"

#include "gazeaudit/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace gazeaudit {

namespace {

using Mat3 = Eigen::Matrix3d;

Mat3 to_eigen(const std::array<double, 9>& h) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            m(r, c) = h[static_cast<std::size_t>(r * 3 + c)];
    return m;
}

std::array<double, 9> from_eigen(const Mat3& m) {
    std::array<double, 9> h{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            h[static_cast<std::size_t>(r * 3 + c)] = m(r, c);
    return h;
}

// Similarity taking the centroid to the origin and the mean distance to sqrt(2).
Mat3 normalizer(std::span<const Correspondence> corrs, bool use_src) {
    double cx = 0.0, cy = 0.0;
    for (const auto& c : corrs) {
        const Point2& p = use_src ? c.src : c.dst;
        cx += p.x;
        cy += p.y;
    }
    const double n = static_cast<double>(corrs.size());
    cx /= n;
    cy /= n;
    double mean_dist = 0.0;
    for (const auto& c : corrs) {
        const Point2& p = use_src ? c.src : c.dst;
        mean_dist += std::hypot(p.x - cx, p.y - cy);
    }
    mean_dist /= n;
    if (!(mean_dist > 0.0))
        fail(ErrorCode::Degenerate, "degenerate configuration: coincident points");
    const double s = std::sqrt(2.0) / mean_dist;
    Mat3 t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

bool collinear(const Point2& a, const Point2& b, const Point2& c) {
    const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    const double scale = std::max({std::hypot(b.x - a.x, b.y - a.y), std::hypot(c.x - a.x, c.y - a.y),
                                   std::hypot(c.x - b.x, c.y - b.y)});
    return std::abs(cross) <= 1e-9 * scale * scale;
}

bool minimal_sample_degenerate(std::span<const Correspondence> s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i + 1; j < s.size(); ++j)
            for (std::size_t k = j + 1; k < s.size(); ++k)
                if (collinear(s[i].src, s[j].src, s[k].src) || collinear(s[i].dst, s[j].dst, s[k].dst))
                    return true;
    return false;
}

} // namespace

Homography::Homography() : h_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& row_major) : h_(row_major) {
    for (double v : h_)
        if (!std::isfinite(v))
            fail(ErrorCode::Degenerate, "homography has non-finite entries");
    if (std::abs(h_[8]) > 1e-12) {
        const double s = h_[8];
        for (double& v : h_)
            v /= s;
    } else {
        double norm = 0.0;
        for (double v : h_)
            norm += v * v;
        norm = std::sqrt(norm);
        if (!(norm > 0.0))
            fail(ErrorCode::Degenerate, "homography is the zero matrix");
        const auto first = std::find_if(h_.begin(), h_.end(), [](double v) { return std::abs(v) > 0.0; });
        const double s = (*first < 0 ? -norm : norm);
        for (double& v : h_)
            v /= s;
    }
    double fro = 0.0;
    for (double v : h_)
        fro += v * v;
    const double scale = std::pow(std::sqrt(fro), 3.0);
    if (!(std::abs(determinant()) > 1e-14 * scale))
        fail(ErrorCode::Degenerate, "homography is singular");
}

Homography Homography::translation(double dx, double dy) { return Homography({1, 0, dx, 0, 1, dy, 0, 0, 1}); }

double Homography::determinant() const noexcept { return to_eigen(h_).determinant(); }

Point2 project_point(const Homography& h, Point2 p) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
        fail(ErrorCode::InvalidArgument, "project_point: non-finite input point");
    const double x = h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2);
    const double y = h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2);
    const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
    if (std::abs(w) < 1e-12)
        fail(ErrorCode::Domain, "point maps to infinity under the homography");
    return {x / w, y / w};
}

double reprojection_error(const Homography& h, const Correspondence& c) {
    const double x = h(0, 0) * c.src.x + h(0, 1) * c.src.y + h(0, 2);
    const double y = h(1, 0) * c.src.x + h(1, 1) * c.src.y + h(1, 2);
    const double w = h(2, 0) * c.src.x + h(2, 1) * c.src.y + h(2, 2);
    if (std::abs(w) < 1e-12)
        return std::numeric_limits<double>::infinity();
    return std::hypot(x / w - c.dst.x, y / w - c.dst.y);
}

Homography estimate_homography_dlt(std::span<const Correspondence> corrs) {
    if (corrs.size() < 4)
        fail(ErrorCode::InvalidArgument, "homography estimation needs >= 4 correspondences, got " +
                                             std::to_string(corrs.size()));
    for (const auto& c : corrs)
        if (!std::isfinite(c.src.x) || !std::isfinite(c.src.y) || !std::isfinite(c.dst.x) || !std::isfinite(c.dst.y))
            fail(ErrorCode::InvalidArgument, "correspondence with non-finite coordinates");

    const Mat3 ts = normalizer(corrs, true);
    const Mat3 td = normalizer(corrs, false);
    const Eigen::Index rows = static_cast<Eigen::Index>(std::max<std::size_t>(2 * corrs.size(), 9));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, 9);
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        const Eigen::Vector3d p = ts * Eigen::Vector3d(corrs[i].src.x, corrs[i].src.y, 1.0);
        const Eigen::Vector3d q = td * Eigen::Vector3d(corrs[i].dst.x, corrs[i].dst.y, 1.0);
        const double x = p.x() / p.z(), y = p.y() / p.z();
        const double u = q.x() / q.z(), v = q.y() / q.z();
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(7) > 1e-10 * sv(0)))
        fail(ErrorCode::Degenerate, "degenerate configuration: rank-deficient system (sigma_8/sigma_1 = " +
                                        std::to_string(sv(0) > 0 ? sv(7) / sv(0) : 0.0) + ")");
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Mat3 hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    const Mat3 hm = td.inverse() * hn * ts;
    return Homography(from_eigen(hm));
}

RobustFit estimate_homography_robust(std::span<const Correspondence> corrs, const RobustOptions& opts) {
    if (corrs.size() < 4)
        fail(ErrorCode::InvalidArgument, "robust homography estimation needs >= 4 correspondences");
    if (!(opts.inlier_threshold > 0.0) || opts.max_iters < 1)
        fail(ErrorCode::InvalidArgument, "robust estimation: threshold and max_iters must be positive");

    const std::size_t n = corrs.size();
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    auto score = [&](const Homography& h, std::vector<bool>& mask, double& sse) {
        std::size_t count = 0;
        sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = reprojection_error(h, corrs[i]);
            mask[i] = e <= opts.inlier_threshold;
            if (mask[i]) {
                ++count;
                sse += e * e;
            }
        }
        return count;
    };

    std::optional<Homography> best;
    std::vector<bool> best_mask(n, false), mask(n, false);
    std::size_t best_count = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    std::size_t needed = static_cast<std::size_t>(opts.max_iters);
    std::array<Correspondence, 4> sample;
    for (std::size_t iter = 0; iter < needed && iter < static_cast<std::size_t>(opts.max_iters); ++iter) {
        std::array<std::size_t, 4> idx{};
        for (std::size_t k = 0; k < 4; ++k) {
            std::size_t cand;
            do {
                cand = pick(rng);
            } while (std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), cand) !=
                     idx.begin() + static_cast<std::ptrdiff_t>(k));
            idx[k] = cand;
            sample[k] = corrs[cand];
        }
        if (minimal_sample_degenerate(sample))
            continue;
        Homography h;
        try {
            h = estimate_homography_dlt(sample);
        } catch (const Error&) {
            continue;
        }
        double sse = 0.0;
        const std::size_t count = score(h, mask, sse);
        if (count > best_count || (count == best_count && count > 0 && sse < best_sse)) {
            best = h;
            best_mask = mask;
            best_count = count;
            best_sse = sse;
            const double w = static_cast<double>(count) / static_cast<double>(n);
            const double p_fail = 1.0 - std::pow(w, 4.0);
            if (p_fail <= 0.0) {
                needed = iter + 1;
            } else {
                const double k = std::log(1.0 - opts.confidence) / std::log(p_fail);
                if (std::isfinite(k))
                    needed = std::min(needed, static_cast<std::size_t>(std::ceil(k)) + 1);
            }
        }
    }
    if (!best || best_count < 4)
        fail(ErrorCode::Degenerate, "robust estimation found no model with >= 4 inliers");

    // Refit on the consensus set until the set stops changing.
    RobustFit fit{*best, best_mask, best_count};
    for (int round = 0; round < 10; ++round) {
        std::vector<Correspondence> in;
        for (std::size_t i = 0; i < n; ++i)
            if (fit.inliers[i])
                in.push_back(corrs[i]);
        Homography refit;
        try {
            refit = estimate_homography_dlt(in);
        } catch (const Error&) {
            break;
        }
        double sse = 0.0;
        const std::size_t count = score(refit, mask, sse);
        if (count < fit.inlier_count)
            break;
        const bool same = mask == fit.inliers;
        fit = {refit, mask, count};
        if (same)
            break;
    }
    return fit;
}

} // namespace gazeaudit
