#pragma once

#include "gazeaudit/annotations.hpp"
#include "gazeaudit/types.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gazeaudit {

struct SegmentationConfig {
    int median_window = 20;          // samples
    double accel_threshold = 0.4;    // m/s^2
    double stop_threshold_kmh = 1.0; // km/h
    std::optional<double> penalty;   // change-point penalty; auto when empty

    // Outlier rule: |v - median| > max(mad_factor * 1.4826 * MAD, outlier_floor_ms).
    double outlier_mad_factor = 3.0;
    double outlier_floor_ms = 5.0;
    // Shortest run of sub-threshold frames labeled Stopped; empty = round(fps).
    std::optional<int> min_stop_run;
    // Lower bound on the noise scale used by the auto penalty (m/s).
    double min_noise_sigma = 1e-3;

    /// Throws Error(InvalidArgument) when a field is out of range.
    void validate() const;
};

/// Per-frame speed in m/s over a gap-free frame span.
struct SpeedSeries {
    FrameIndex first_frame = 0;
    double fps = 0.0;
    std::vector<double> v;

    FrameIndex last_frame() const { return first_frame + static_cast<FrameIndex>(v.size()) - 1; }
};

struct Segment {
    FrameIndex start_frame = 0;
    FrameIndex end_frame = 0;
    double mean_accel = 0.0; // m/s^2, endpoint speeds over the segment duration
    Longitudinal longitudinal = Longitudinal::Maintain;
    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Centered moving median; window covers [i - (w-1)/2 ... i + w/2], truncated
/// at the series ends.
std::vector<double> moving_median(std::span<const double> x, int window);

/// Outlier replacement followed by the moving median, clamped to v >= 0.
/// Input speeds are km/h; output is m/s. Throws on empty input.
SpeedSeries clean_speed(std::span<const double> raw_kmh, FrameIndex first_frame, double fps,
                        const SegmentationConfig& cfg);

/// Telemetry to raw km/h per frame; frames missing inside the span are
/// linearly interpolated.
std::vector<double> speed_per_frame_kmh(std::span<const TelemetrySample> samples);

/// 3 ln(n) sigma^2 with sigma = 1.4826 MAD(first differences) / sqrt(2),
/// floored at `min_sigma`.
double auto_penalty(std::span<const double> v, double min_sigma);

/// Optimal penalized partition under the L2 mean-shift cost, computed with
/// PELT pruning. Returns the first index of every segment except the first.
std::vector<std::size_t> detect_change_points(std::span<const double> v, double penalty);

/// Segment cost sum(y - mean)^2 + penalty per extra segment, for a given
/// change-point list.
double partition_cost(std::span<const double> v, std::span<const std::size_t> change_points, double penalty);

std::vector<Segment> classify_segments(const SpeedSeries& series, std::span<const std::size_t> change_points,
                                       const SegmentationConfig& cfg);

std::vector<Longitudinal> segments_per_frame(std::span<const Segment> segments);

/// Six-way task label per frame. Excluded (u_turn/reverse) dominates, then
/// Stopped; lateral with Maintain is Lateral, with a speed change LatLon.
std::vector<ActionCategory> fuse_actions(std::span<const Longitudinal> longitudinal,
                                         std::span<const LateralClass> lateral);
std::vector<ActionCategory> fuse_actions(std::span<const Segment> segments,
                                         std::span<const LateralClass> lateral);

/// Full pipeline for one video.
struct SegmentationResult {
    SpeedSeries series;
    double penalty = 0.0;
    std::vector<std::size_t> change_points;
    std::vector<Segment> segments;
};
SegmentationResult segment_telemetry(std::span<const TelemetrySample> samples, double fps,
                                     const SegmentationConfig& cfg);

/// Per-frame labels of an annotation document: fused longitudinal+lateral
/// runs when longitudinal runs exist, otherwise the stored action runs.
/// Throws Error(Domain) when the runs do not cover the span.
std::vector<ActionCategory> effective_actions(const AnnotationDocument& doc);

struct ActionStatistics {
    std::array<std::size_t, kReportedActions.size()> counts{};
    std::size_t excluded = 0;
    std::size_t included = 0;
    std::array<double, kReportedActions.size()> percent{};
};

/// Percentages over included (non-Excluded) frames of all videos. Throws
/// Error(Domain) when nothing is labeled or everything is excluded.
ActionStatistics action_statistics(std::span<const std::vector<ActionCategory>> videos);

} // namespace gazeaudit
