#pragma once

#include "gazeaudit/audit.hpp"
#include "gazeaudit/context.hpp"
#include "gazeaudit/metrics.hpp"
#include "gazeaudit/protocols.hpp"
#include "gazeaudit/salmap.hpp"
#include "gazeaudit/segmentation.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gazeaudit {

/// Receives warnings and progress notes from batch commands.
using MessageSink = std::function<void(const std::string&)>;

struct SegmentCommand {
    std::filesystem::path manifest;
    std::string video;
    std::filesystem::path out;
    SegmentationConfig config;
};

struct SalmapCommand {
    std::filesystem::path manifest;
    std::string video;
    std::string recipe; // bdda | dreyeve | lbw
    std::filesystem::path out_dir;
    std::optional<double> sigma_spatial;
    std::optional<double> sigma_temporal;
    std::optional<int> window_halfwidth;
    OffFramePolicy off_frame = OffFramePolicy::Clamp;
    bool keep_in_vehicle = false;
};

struct SalmapSummary {
    std::size_t written = 0;
    std::vector<FrameIndex> skipped; // frames without usable gaze
};

struct EvalCommand {
    std::filesystem::path manifest;
    std::filesystem::path pred_dir;
    std::filesystem::path gt_dir;
    std::vector<Metric> metrics{kAllMetrics.begin(), kAllMetrics.end()};
    StratifyOptions stratify;
    std::filesystem::path out; // ".md" selects markdown
    double kld_epsilon = kDefaultKldEpsilon;
    std::string video; // empty: all videos
};

enum class HomauditMode { DriverToScene, Temporal };

struct HomauditCommand {
    HomauditMode mode = HomauditMode::DriverToScene;
    std::filesystem::path pairs_file;
    std::filesystem::path refs_file;
    ProtocolOptions options;
    std::filesystem::path out;
};

struct ContextCommand {
    std::filesystem::path manifest;
    std::filesystem::path osm; // empty: manifest-level extract
    std::string video;
    double radius_m = kDefaultMatchRadiusM;
    std::filesystem::path out;
};

struct AuditCommand {
    std::filesystem::path manifest;
    std::string video; // empty: all videos
    std::filesystem::path out;
    ExposureThresholds exposure;
    unsigned workers = 1;
};

struct StatsCommand {
    std::filesystem::path manifest;
    std::filesystem::path out;
};

/// Annotation path for a video: the manifest entry, else
/// `<manifest dir>/<id>.annotations.json`.
std::filesystem::path annotation_path(const DatasetManifest& manifest, const VideoEntry& video);

/// Longitudinal runs from the video's telemetry with lateral and context
/// fields left for manual labeling.
AnnotationDocument segment_video(const VideoEntry& video, const SegmentationConfig& cfg);

/// Context suggestions for a video from an extract.
std::vector<ContextEvent> suggest_video_context(const VideoEntry& video, const StreetGraph& graph, double radius_m,
                                                const MessageSink& sink = {});

/// All fixations of every observer after the default gaze filter.
std::vector<std::vector<Fixation>> load_observer_fixations(const VideoEntry& video, bool keep_in_vehicle = false);

void run_segment(const SegmentCommand& cmd, const MessageSink& sink = {});
SalmapSummary run_salmap(const SalmapCommand& cmd, const MessageSink& sink = {});
StratifiedReport run_eval(const EvalCommand& cmd, const MessageSink& sink = {});
ErrorReport run_homaudit(const HomauditCommand& cmd, const MessageSink& sink = {});
void run_context(const ContextCommand& cmd, const MessageSink& sink = {});
void run_audit(const AuditCommand& cmd, const MessageSink& sink = {});
void run_stats(const StatsCommand& cmd, const MessageSink& sink = {});

// Report emitters (deterministic, CSV with a header row).
std::string error_report_csv(const ErrorReport& report, HomauditMode mode);
std::string action_stats_csv(const ActionStatistics& actions, const ContextCounts& context);

} // namespace gazeaudit
