#pragma once

#include "gazeaudit/manifest.hpp"
#include "gazeaudit/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaudit {

struct LongitudinalRun {
    FrameIndex start_frame = 0;
    FrameIndex end_frame = 0;
    Longitudinal label = Longitudinal::Maintain;
    double mean_accel = 0.0; // m/s^2
    friend bool operator==(const LongitudinalRun&, const LongitudinalRun&) = default;
};

struct LateralRun {
    FrameIndex start_frame = 0;
    FrameIndex end_frame = 0;
    LateralClass label = LateralClass::None;
    friend bool operator==(const LateralRun&, const LateralRun&) = default;
};

struct ActionRun {
    FrameIndex start_frame = 0;
    FrameIndex end_frame = 0;
    ActionCategory category = ActionCategory::Maintain;
    friend bool operator==(const ActionRun&, const ActionRun&) = default;
};

/// Per-video labeling document shared by the CLI, the service and the UI.
/// Runs are inclusive frame intervals.
struct AnnotationDocument {
    std::string video_id;
    FrameIndex first_frame = 0;
    FrameIndex last_frame = -1;
    std::vector<LongitudinalRun> longitudinal;
    std::vector<LateralRun> lateral;
    std::vector<ActionRun> actions;
    std::vector<ContextEvent> context_events;

    FrameRange range() const { return {first_frame, last_frame}; }
    friend bool operator==(const AnnotationDocument&, const AnnotationDocument&) = default;
};

inline constexpr std::string_view kAnnotationSchema = "gazeaudit.annotations/1";

/// Deterministic pretty-printed JSON.
std::string serialize_annotations(const AnnotationDocument& doc);
/// Parses and validates (see validate_annotations). Error(Parse) on schema
/// violations, Error(Domain) on range violations.
AnnotationDocument parse_annotations(std::string_view text, const std::string& source);
AnnotationDocument read_annotations(const fs::path& path);
void write_annotations(const AnnotationDocument& doc, const fs::path& path);

/// Runs ordered, non-overlapping and inside the document span (and inside
/// `video_range` when given); context events inside the span with
/// yield_onset_frame <= crossing_frame.
void validate_annotations(const AnnotationDocument& doc,
                          std::optional<FrameRange> video_range = std::nullopt);

/// Lateral class per frame of the document span (None where unlabeled).
std::vector<LateralClass> lateral_per_frame(const AnnotationDocument& doc);

/// Collapses a per-frame label sequence into inclusive runs.
std::vector<ActionRun> to_action_runs(FrameIndex first_frame, const std::vector<ActionCategory>& labels);

} // namespace gazeaudit
