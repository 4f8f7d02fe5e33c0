#pragma once

#include "gazeaudit/homography.hpp"
#include "gazeaudit/saliency_map.hpp"
#include "gazeaudit/types.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace gazeaudit {

enum class Recipe { MultiObserver, TemporalWindow, SingleFixation };
enum class Combine { Sum, Max };
enum class OffFramePolicy { Clamp, Reject };

struct RecipeConfig {
    Recipe recipe = Recipe::MultiObserver;
    double sigma_spatial = 25.0; // px
    double sigma_temporal = 4.0; // frames
    int window_halfwidth = 12;   // frames
    Combine combine = Combine::Sum;
    OffFramePolicy off_frame = OffFramePolicy::Clamp;

    void validate() const;
};

/// Dataset recipe names: "bdda" (multi_observer, 25 px / 4 frames),
/// "dreyeve" (temporal_window, 25 px, +-12 frames), "lbw" (single_fixation, 60 px).
RecipeConfig recipe_defaults(std::string_view dataset_recipe);

struct GazeComposition {
    std::size_t total = 0;
    std::array<std::size_t, kAllGazeEvents.size()> counts{};

    std::size_t count(GazeEvent e) const { return counts[static_cast<std::size_t>(e)]; }
    double fraction(GazeEvent e) const;
};

/// Per-event counts over the whole stream. Throws InvalidArgument when empty.
GazeComposition gaze_composition(std::span<const GazeSample> samples);

struct FilterResult {
    std::vector<Fixation> fixations;
    GazeComposition composition; // over all input samples
    std::size_t dropped = 0;
    double dropped_fraction = 0.0;
};

inline constexpr std::array kDefaultDroppedEvents = {GazeEvent::Saccade, GazeEvent::Blink, GazeEvent::InVehicle};

/// Samples whose event is in `drop` are removed. Retained fixation-type
/// samples (fixation, in_vehicle, offscreen) become fixations; retained
/// saccades and blinks carry no location and are not emitted.
FilterResult filter_gaze(std::span<const GazeSample> samples, std::span<const GazeEvent> drop);

struct RawGazePoint {
    double t_ms = 0.0;
    double x = 0.0;
    double y = 0.0;
    FrameIndex frame = 0;
};

/// Dispersion-threshold identification. Dispersion is (max-min) in x plus
/// (max-min) in y; duration is last minus first timestamp. Fixations carry
/// the frame of their first point. Throws InvalidArgument on unsorted input.
std::vector<Fixation> detect_fixations_idt(std::span<const RawGazePoint> points, double dispersion_threshold,
                                           double min_duration_ms);

/// True when the fixation falls on a pixel: x in [-0.5, W-0.5), same for y.
bool in_frame(double x, double y, ImageSize size);

/// Adds (Sum) or maxes in (Max) weight * exp(-r^2 / 2 sigma^2), evaluated
/// at integer pixel centres within r <= 4 sigma.
void splat_gaussian(std::span<double> acc, ImageSize size, double x, double y, double sigma, double weight,
                    Combine combine);

/// Sum of Gaussians at in-frame fixations, normalised to sum 1. Throws
/// InvalidArgument without fixations and Degenerate when none is in frame.
SaliencyMap spatial_gaussian_map(std::span<const Fixation> fixations, double sigma, ImageSize size);

/// Temporal weight exp(-d^2 / 2 sigma_t^2), zero beyond ceil(4 sigma_t).
double temporal_weight(FrameIndex delta, double sigma_t);

/// Unnormalised multi-observer superposition at frame t.
SaliencyMap multi_observer_raw(std::span<const std::vector<Fixation>> observers, FrameIndex t, ImageSize size,
                               double sigma_s, double sigma_t);

/// multi_observer_raw normalised to sum 1; Degenerate on zero mass.
SaliencyMap multi_observer_map(std::span<const std::vector<Fixation>> observers, FrameIndex t, ImageSize size,
                               double sigma_s, double sigma_t);

/// Maps for every frame in [first, last]. Throws Degenerate naming the first
/// frame without mass.
std::vector<SaliencyMap> multi_observer_maps(std::span<const std::vector<Fixation>> observers, FrameIndex first,
                                             FrameIndex last, ImageSize size, double sigma_s, double sigma_t);

/// Homographies keyed by (key frame, source frame), mapping source-frame
/// pixels into the key frame.
using WindowHomographies = std::map<std::pair<FrameIndex, FrameIndex>, Homography>;

/// CSV `key_frame,frame,h00,h01,h02,h10,h11,h12,h20,h21,h22`.
WindowHomographies read_window_homographies(const std::filesystem::path& path);

/// Fixations within [key - halfwidth, key + halfwidth] remapped to the key
/// frame, combined by pixelwise max of unit-peak Gaussians and normalised to
/// max 1. Key-frame fixations use the identity.
SaliencyMap temporal_window_map(std::span<const Fixation> fixations, const WindowHomographies& homographies,
                                FrameIndex key, int halfwidth, double sigma, ImageSize size);

/// One wide Gaussian normalised to sum 1. Off-frame fixations are clamped to
/// the nearest edge pixel or rejected with Error(Domain).
SaliencyMap single_fixation_map(const Fixation& fixation, double sigma, ImageSize size,
                                OffFramePolicy policy = OffFramePolicy::Clamp);

/// Shannon entropy (nats) of the sum-normalised map.
double map_entropy(const SaliencyMap& map);

} // namespace gazeaudit
