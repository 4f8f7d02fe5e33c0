#pragma once

#include "gazeaudit/saliency_map.hpp"
#include "gazeaudit/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaudit {

enum class Metric { KLD, CC, SIM, NSS };
inline constexpr std::array kAllMetrics = {Metric::KLD, Metric::CC, Metric::SIM, Metric::NSS};
inline constexpr double kDefaultKldEpsilon = 1e-7;

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);
/// Comma-separated list, e.g. "kld,cc,sim,nss". Duplicates are rejected.
std::vector<Metric> parse_metric_list(std::string_view s);
bool higher_is_better(Metric m);

struct MetricValue {
    Metric name = Metric::KLD;
    double value = 0.0;
    bool degenerate = false;
};

struct PixelPoint {
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// KL(gt || pred) = sum Q ln(Q / (P + eps) + eps) after normalising both to
/// sum 1. Throws InvalidArgument on size mismatch and Degenerate when either
/// map has zero mass.
MetricValue kld(const SaliencyMap& pred, const SaliencyMap& gt, double eps = kDefaultKldEpsilon);

/// Pearson correlation over pixels. Throws Degenerate when either map is constant.
MetricValue cc(const SaliencyMap& pred, const SaliencyMap& gt);

/// Histogram intersection of the sum-normalised maps. Degenerate on zero mass.
MetricValue sim(const SaliencyMap& pred, const SaliencyMap& gt);

/// Mean population z-score of `pred` at the fixation pixels. A constant
/// prediction yields 0 with the degenerate flag set. Throws InvalidArgument
/// without fixations or with a pixel outside the map.
MetricValue nss(const SaliencyMap& pred, std::span<const PixelPoint> fixations);

/// Nearest pixels of the in-frame fixations.
std::vector<PixelPoint> fixation_pixels(std::span<const Fixation> fixations, ImageSize size);

/// Pixels holding the maximum of `map` (fallback fixation set when no gaze
/// record is available).
std::vector<PixelPoint> argmax_pixels(const SaliencyMap& map);

/// All fixations superposed with a spatial Gaussian and normalised to sum 1.
SaliencyMap aggregate_heatmap(std::span<const Fixation> fixations, ImageSize size, double sigma);

/// Per-frame metric values; nullopt marks an undefined (degenerate) value.
struct FrameScores {
    std::array<std::optional<double>, kAllMetrics.size()> values{};
    bool degenerate = false;

    std::optional<double> get(Metric m) const { return values[static_cast<std::size_t>(m)]; }
};

FrameScores score_frame(const SaliencyMap& pred, const SaliencyMap& gt, std::span<const PixelPoint> fixations,
                        std::span<const Metric> metrics, double eps = kDefaultKldEpsilon);

// ---- Scenario windows ---------------------------------------------------

struct ScenarioWindow {
    std::string video_id;
    FrameIndex first = 0;
    FrameIndex last = 0;
    IntersectionType type = IntersectionType::Unsignalized;
    Priority priority = Priority::RightOfWay;
    bool clipped = false;
};

/// Right-of-way windows cover [crossing - round(fps), crossing]; yield
/// windows start at the onset frame when present, else the same 1 s rule.
/// Windows starting before `video_first` are clipped and flagged. Events
/// without a priority are skipped. Throws Domain for events outside
/// [video_first, video_last].
std::vector<ScenarioWindow> build_scenario_windows(const std::string& video_id, std::span<const ContextEvent> events,
                                                   double fps, FrameIndex video_first, FrameIndex video_last);

/// Context class index type-major in kAllIntersectionTypes x kAllPriorities order.
std::size_t context_class_index(IntersectionType t, Priority p);
inline constexpr std::size_t kContextClasses = kAllIntersectionTypes.size() * kAllPriorities.size();
std::string context_class_name(std::size_t index);

// ---- Stratified report ----------------------------------------------------

struct EvaluatedFrame {
    std::string video_id;
    FrameIndex frame = 0;
    ActionCategory action = ActionCategory::Maintain;
    std::vector<std::size_t> context_classes; // indices, may be empty
    FrameScores scores;
};

struct ReportRow {
    std::string group;    // "overall", "action", "context"
    std::string category; // "all", action name or "<type>/<priority>"
    std::size_t n_frames = 0;
    std::array<std::optional<double>, kAllMetrics.size()> mean{};
    std::array<std::size_t, kAllMetrics.size()> n_valid{};
    std::size_t degenerate_frames = 0;
    std::vector<Metric> best;
    std::vector<Metric> worst;
};

struct StratifiedReport {
    std::vector<Metric> metrics;
    std::vector<ReportRow> rows;
};

struct StratifyOptions {
    bool by_action = true;
    bool by_context = true;
};

/// Frames labelled Excluded are dropped. Rows: overall, then the six action
/// categories, then the eight context classes, always emitted (count 0 rows
/// carry no means). Best/worst flags mark, per metric and group, the rows
/// with the best and worst mean when at least two rows have one.
StratifiedReport stratified_eval(std::span<const EvaluatedFrame> frames, std::span<const Metric> metrics,
                                 const StratifyOptions& opts = {});

std::string report_to_csv(const StratifiedReport& report);
std::string report_to_markdown(const StratifiedReport& report);

} // namespace gazeaudit
