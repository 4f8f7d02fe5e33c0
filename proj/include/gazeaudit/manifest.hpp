#pragma once

#include "gazeaudit/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaudit {

namespace fs = std::filesystem;

/// One recording. Paths are absolute after loading (resolved against the
/// manifest's directory). Input paths (telemetry, gaze, frames,
/// homographies) must exist; output-side paths (annotations, predictions,
/// ground_truth) may be created later by the pipeline.
struct VideoEntry {
    std::string id;
    double fps = 0.0;
    ImageSize image_size;
    fs::path telemetry;
    std::vector<fs::path> gaze; // one file per observer
    fs::path frames;
    fs::path annotations;
    fs::path predictions;
    fs::path ground_truth;
    fs::path homographies;
    std::optional<FrameIndex> first_frame;
    std::optional<FrameIndex> num_frames;
};

struct DatasetManifest {
    std::string dataset_id;
    fs::path path;
    fs::path osm;
    std::vector<VideoEntry> videos;

    /// Throws Error(NotFound) for an unknown id.
    const VideoEntry& video(std::string_view id) const;
};

/// Parses and fully validates a manifest document. Any structural problem is
/// reported as Error(Parse) naming the offending field; dangling input paths
/// as Error(NotFound) naming the path.
DatasetManifest load_manifest(const fs::path& path);
DatasetManifest parse_manifest(std::string_view text, const fs::path& base_dir);

struct FrameRange {
    FrameIndex first = 0;
    FrameIndex last = -1;
    FrameIndex count() const { return last - first + 1; }
    bool contains(FrameIndex f) const { return f >= first && f <= last; }
};

/// Declared frame span: explicit first_frame/num_frames, else the telemetry
/// frame span, else the numbered frame images.
FrameRange video_frame_range(const VideoEntry& video);

} // namespace gazeaudit
