#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gazeaudit {

/// Dense non-negative field over the scene image, row-major, double precision
/// in memory (SMAP files store float32).
class SaliencyMap {
public:
    SaliencyMap() = default;
    /// Zero-filled map. Throws on a zero dimension or size overflow.
    SaliencyMap(std::uint32_t width, std::uint32_t height);
    /// Takes ownership of `values`; throws on size mismatch, negative or
    /// non-finite entries.
    SaliencyMap(std::uint32_t width, std::uint32_t height, std::vector<double> values);

    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double at(std::uint32_t x, std::uint32_t y) const { return values_[index(x, y)]; }
    double& at(std::uint32_t x, std::uint32_t y) { return values_[index(x, y)]; }

    double sum() const noexcept;
    double max() const noexcept;

    /// Copy scaled to unit sum. Throws Error(Degenerate) on zero mass.
    SaliencyMap normalized_sum() const;
    /// Copy scaled to unit maximum. Throws Error(Degenerate) on zero mass.
    SaliencyMap normalized_max() const;

    friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

private:
    std::size_t index(std::uint32_t x, std::uint32_t y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    std::uint32_t width_ = 0;
    std::uint32_t height_ = 0;
    std::vector<double> values_;
};

} // namespace gazeaudit
