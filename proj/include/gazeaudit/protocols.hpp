#pragma once

#include "gazeaudit/homography.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gazeaudit {

/// Reference fixation seen in both views. For the temporal protocol only
/// `src` (the probe point in the non-key frame) is used.
struct ReferenceFixation {
    Point2 src;
    Point2 dst;
};

/// One (driver, scene) frame pair, or one (frame key+offset, key) pair.
struct FramePair {
    std::string pair_id;
    std::string video_id;
    int offset = 0;
    std::vector<Correspondence> correspondences;
    std::vector<ReferenceFixation> fixations;
};

struct ProtocolOptions {
    int runs = 10;
    int pairs_per_video = 1000;
    std::uint64_t seed = 0;
    double subset_fraction = 0.5;
    std::size_t min_subset = 8;
    double ransac_threshold = 0.0; // px; 0 selects plain DLT per run
    double image_width = 1920.0;   // eccentricity reference

    void validate() const;
};

inline constexpr std::size_t kEccentricityBins = 5;

struct ErrorSummary {
    std::size_t count = 0;
    double median = 0.0; // NaN when count == 0
    double frac_gt100 = 0.0;
    double frac_gt200 = 0.0;
};

struct ErrorReport {
    std::vector<double> errors; // every run of every fixation, in pair order
    ErrorSummary overall;
    std::array<ErrorSummary, kEccentricityBins> eccentricity{}; // sd protocol
    std::map<int, ErrorSummary> per_offset;                     // temporal protocol
    std::size_t pairs_used = 0;
};

ErrorSummary summarize_errors(std::vector<double> errors);

/// Bin of |x - W/2| / (W/2) in steps of 0.2, off-frame values in the last bin.
std::size_t eccentricity_bin(double x, double image_width);

/// Driver-to-scene projection error: per pair, `runs` homographies from
/// random correspondence subsets; error is the distance between the
/// projected driver-view fixation and the scene-view reference.
ErrorReport sd_error_protocol(std::span<const FramePair> pairs, const ProtocolOptions& opts);

/// Temporal remapping spread: per pair, the probe points are projected with
/// `runs` subset homographies; error is the distance to the mean projection.
/// Offset 0 pairs map through the identity.
ErrorReport temporal_window_error(std::span<const FramePair> pairs, const ProtocolOptions& opts);

/// Correspondences `pair_id,src_x,src_y,dst_x,dst_y`; references
/// `pair_id,video_id,offset,src_x,src_y,dst_x,dst_y` (dst may be empty for
/// the temporal protocol). Pair order follows the reference file.
std::vector<FramePair> read_frame_pairs(const std::filesystem::path& correspondences,
                                        const std::filesystem::path& references);

/// Seed derivation independent of scheduling: splitmix64(master ^ fnv1a(key)).
std::uint64_t derive_seed(std::uint64_t master, std::string_view key);

} // namespace gazeaudit
