#include "gazeaudit/saliency_map.hpp"

#include "gazeaudit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gazeaudit {

namespace {

// Upper bound on pixels; keeps width*height*4 bytes well inside size_t and
// rejects corrupt headers before allocating.
constexpr std::uint64_t kMaxPixels = std::uint64_t{1} << 31;

std::size_t checked_area(std::uint32_t w, std::uint32_t h) {
    if (w == 0 || h == 0)
        fail(ErrorCode::InvalidArgument, "zero-size saliency map");
    const std::uint64_t area = std::uint64_t{w} * h;
    if (area > kMaxPixels)
        fail(ErrorCode::InvalidArgument, "saliency map size overflow");
    return static_cast<std::size_t>(area);
}

} // namespace

SaliencyMap::SaliencyMap(std::uint32_t width, std::uint32_t height)
    : width_(width), height_(height), values_(checked_area(width, height), 0.0) {}

SaliencyMap::SaliencyMap(std::uint32_t width, std::uint32_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != checked_area(width, height))
        fail(ErrorCode::InvalidArgument, "saliency map value count does not match dimensions");
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v))
            fail(ErrorCode::InvalidArgument, "saliency map values must be finite and >= 0");
}

double SaliencyMap::sum() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double SaliencyMap::max() const noexcept {
    if (values_.empty())
        return 0.0;
    return *std::max_element(values_.begin(), values_.end());
}

SaliencyMap SaliencyMap::normalized_sum() const {
    const double total = sum();
    if (!(total > 0.0))
        fail(ErrorCode::Degenerate, "cannot normalize a zero-mass saliency map");
    SaliencyMap out = *this;
    for (double& v : out.values_)
        v /= total;
    return out;
}

SaliencyMap SaliencyMap::normalized_max() const {
    const double peak = max();
    if (!(peak > 0.0))
        fail(ErrorCode::Degenerate, "cannot normalize a zero-mass saliency map");
    SaliencyMap out = *this;
    for (double& v : out.values_)
        v /= peak;
    return out;
}

} // namespace gazeaudit
