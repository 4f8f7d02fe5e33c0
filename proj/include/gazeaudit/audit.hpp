#pragma once

#include "gazeaudit/io.hpp"
#include "gazeaudit/manifest.hpp"
#include "gazeaudit/types.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gazeaudit {

struct FrameSegment {
    FrameIndex first = 0;
    FrameIndex last = 0;
    FrameIndex length() const { return last - first + 1; }
    friend bool operator==(const FrameSegment&, const FrameSegment&) = default;
};

struct GapReport {
    FrameIndex first = 0;
    FrameIndex last = 0;
    std::size_t span = 0;
    std::size_t present = 0;
    std::size_t missing = 0;
    double missing_fraction = 0.0;
    std::vector<FrameSegment> segments; // contiguous present runs
    std::vector<FrameSegment> gaps;     // contiguous missing runs
};

/// Sorted unique indices. The span is first..last of the indices, or
/// `declared` when given (indices must lie inside it).
GapReport detect_frame_gaps(std::span<const FrameIndex> indices, std::optional<FrameRange> declared = std::nullopt);

struct CategoryGap {
    std::size_t frames = 0;
    std::size_t missing = 0;
    double fraction = 0.0; // NaN when frames == 0
};

using ActionGapTable = std::array<CategoryGap, 7>; // indexed by ActionCategory

/// Every frame of the span takes the label of its nearest labelled frame
/// (ties at the midpoint go to the earlier label); missing frames are then
/// counted per category. Labels must be sorted by frame.
ActionGapTable per_action_gap_fractions(const GapReport& gaps,
                                        std::span<const std::pair<FrameIndex, ActionCategory>> labels);

enum class Exposure { Ok, Overexposed, Underexposed };
std::string_view to_string(Exposure e);

struct ExposureThresholds {
    double bright_level = 250.0;   // 8-bit luminance
    double bright_fraction = 0.5;  // share of pixels at or above bright_level
    double overexposed_mean = 240.0;
    double underexposed_mean = 15.0;
};

/// 16-bit images are compared on the 8-bit scale (value / 257).
Exposure classify_exposure(const GrayImage& image, const ExposureThresholds& th = {});

struct ExposureReport {
    std::size_t frames = 0; // decoded
    std::size_t overexposed = 0;
    std::size_t underexposed = 0;
    double overexposed_fraction = 0.0;
    double underexposed_fraction = 0.0;
    std::vector<std::pair<FrameIndex, Exposure>> per_frame;
    std::vector<std::pair<FrameIndex, std::string>> undecodable;
};

/// Decodes with up to `workers` threads; results are in frame order.
ExposureReport exposure_audit(const std::map<FrameIndex, std::filesystem::path>& frames,
                              const ExposureThresholds& th = {}, unsigned workers = 1);

struct TelemetryGap {
    FrameIndex from_frame = 0;
    FrameIndex to_frame = 0;
    double duration_s = 0.0;
};

struct TelemetryReport {
    std::size_t samples = 0;
    double rate_hz = 0.0; // median of 1 / dt
    bool low_confidence = false;
    std::vector<TelemetryGap> gaps; // dt > 2 / declared rate
    std::size_t non_increasing_time = 0;
    std::size_t missing_position = 0;
    std::size_t negative_speed = 0;
};

/// Throws InvalidArgument for fewer than 2 samples or a non-positive rate.
TelemetryReport validate_telemetry(std::span<const TelemetrySample> samples, double declared_rate_hz);

} // namespace gazeaudit
