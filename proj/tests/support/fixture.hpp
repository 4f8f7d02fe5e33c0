#pragma once

// Synthetic dataset generator shared by the unit, acceptance and service
// tests. Every generated quantity has a known ground truth.

#include "gazeaudit/annotations.hpp"
#include "gazeaudit/protocols.hpp"
#include "gazeaudit/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fixture {

namespace fs = std::filesystem;
using gazeaudit::FrameIndex;

// ---- Speed profiles ---------------------------------------------------------

struct Phase {
    int frames = 0;
    double accel = 0.0; // m/s^2; 0 holds the speed
};

/// Per-frame speed in m/s: frame 0 holds v0, each phase frame k adds
/// k * accel / fps to the phase start speed. Never negative.
std::vector<double> build_speed_profile(double v0, std::span<const Phase> phases, double fps);

/// The planted-ramp profiles used by the fixture videos.
std::vector<Phase> phases_a();
std::vector<Phase> phases_b();

/// Ground-truth longitudinal labels of a noiseless profile: Stopped on runs
/// of at least `min_stop_run` frames at or below `stop_kmh`, otherwise the
/// sign of the forward difference against `accel_th` (last frame Maintain).
std::vector<gazeaudit::Longitudinal> planted_longitudinal(std::span<const double> v_ms, double fps,
                                                          double accel_th = 0.4, double stop_kmh = 1.0,
                                                          int min_stop_run = -1);

// ---- Geography --------------------------------------------------------------

inline constexpr double kLat0 = 48.137;
inline constexpr double kLon0 = 11.575;

/// Local east/north metres to WGS84 around (kLat0, kLon0).
void local_to_geo(double x_m, double y_m, double& lat, double& lon);

/// Eastbound track along y = 0 integrating the speed profile.
std::vector<gazeaudit::TelemetrySample> telemetry_from_profile(std::span<const double> v_ms, double fps,
                                                               FrameIndex first_frame, double x0_m = 0.0);

enum class Junction { Signalized, Unsignalized4, TJunction, Roundabout, Ramp };

struct PlannedJunction {
    double x_m = 0.0;
    Junction kind = Junction::Unsignalized4;
};

/// OSM XML with a primary road along y = 0 from x_min to x_max and the given
/// junctions on it.
std::string street_extract_xml(std::span<const PlannedJunction> junctions, double x_min, double x_max);

// ---- Dataset ----------------------------------------------------------------

struct FixtureVideo {
    std::string id;
    FrameIndex first_frame = 0;
    std::vector<double> speed_ms;
    std::vector<double> x_m; // track position per frame
    std::vector<gazeaudit::Longitudinal> longitudinal;
    std::vector<gazeaudit::LateralClass> lateral;
    std::vector<gazeaudit::ContextEvent> events;
    std::vector<FrameIndex> present_frames;
    std::vector<FrameIndex> bright_frames;
    std::vector<FrameIndex> dark_frames;
    std::size_t observers = 2;

    FrameIndex last_frame() const { return first_frame + static_cast<FrameIndex>(speed_ms.size()) - 1; }
    /// Truth labels fused independently of the library.
    std::vector<gazeaudit::ActionCategory> actions() const;
};

struct FixtureDataset {
    fs::path root;
    fs::path manifest;
    fs::path osm;
    double fps = 30.0;
    gazeaudit::ImageSize size{48, 32};
    std::vector<FixtureVideo> videos;
    std::vector<PlannedJunction> junctions; // video A
};

struct FixtureOptions {
    std::uint64_t seed = 7;
    /// Write annotation files holding lateral runs and context events only
    /// (the segment command fills in the longitudinal runs).
    bool write_annotations = true;
    /// Also store the truth longitudinal runs in the annotation files.
    bool truth_longitudinal = false;
};

/// Two videos ("clip_a" from frame 0, "clip_b" from frame 100) with
/// telemetry, two gaze observers, PNG frames with planted gaps and exposure
/// faults, window homographies and an OSM extract.
FixtureDataset write_fixture_dataset(const fs::path& root, const FixtureOptions& opts = {});

/// Center-bias predictions for every frame of every video under
/// `dir/<video>/<frame>.smap`.
void write_predictions(const FixtureDataset& ds, const fs::path& dir, double sigma, double shift_px);

// ---- Homography correspondences --------------------------------------------

struct PairOptions {
    std::size_t pairs = 100;
    std::size_t correspondences = 40;
    std::size_t fixations = 10;
    double fixation_noise_px = 0.0; // planted on the reference (dst) side
    double correspondence_noise_px = 0.0;
    double width = 1920.0;
    double height = 1080.0;
    std::uint64_t seed = 1;
    std::string video_id = "v0";
    int offset = 0;
};

/// A random well-conditioned homography of the image plane.
gazeaudit::Homography random_homography(std::uint64_t seed, double width, double height);

std::vector<gazeaudit::FramePair> make_frame_pairs(const PairOptions& opts);
void write_frame_pairs(std::span<const gazeaudit::FramePair> pairs, const fs::path& correspondences,
                       const fs::path& references);

} // namespace fixture
