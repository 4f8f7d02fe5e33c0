#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gazeaudit {

using FrameIndex = std::int64_t;

enum class GazeEvent { Fixation, Saccade, Blink, InVehicle, Offscreen };
inline constexpr std::array kAllGazeEvents = {GazeEvent::Fixation, GazeEvent::Saccade,
                                              GazeEvent::Blink, GazeEvent::InVehicle,
                                              GazeEvent::Offscreen};

// Six reported task categories plus Excluded (U-turns, reversing).
enum class ActionCategory { SpeedUp, SlowDown, Lateral, LatLon, Maintain, Stopped, Excluded };
inline constexpr std::array kReportedActions = {
    ActionCategory::SpeedUp, ActionCategory::SlowDown, ActionCategory::Lateral,
    ActionCategory::LatLon,  ActionCategory::Maintain, ActionCategory::Stopped};

enum class Longitudinal { SpeedUp, SlowDown, Maintain, Stopped };

enum class LateralClass { None, Turn, LaneChange, UTurn, Reverse };

enum class IntersectionType { Signalized, Unsignalized, Roundabout, HighwayRamp };
inline constexpr std::array kAllIntersectionTypes = {
    IntersectionType::Unsignalized, IntersectionType::Signalized,
    IntersectionType::Roundabout, IntersectionType::HighwayRamp};

enum class Priority { RightOfWay, Yield };
inline constexpr std::array kAllPriorities = {Priority::RightOfWay, Priority::Yield};

std::string_view to_string(GazeEvent e);
std::string_view to_string(ActionCategory c);
std::string_view to_string(Longitudinal l);
std::string_view to_string(LateralClass l);
std::string_view to_string(IntersectionType t);
std::string_view to_string(Priority p);

// Parsers throw Error(Parse) naming the offending token.
GazeEvent parse_gaze_event(std::string_view s);
ActionCategory parse_action_category(std::string_view s);
Longitudinal parse_longitudinal(std::string_view s);
LateralClass parse_lateral_class(std::string_view s);
IntersectionType parse_intersection_type(std::string_view s);
Priority parse_priority(std::string_view s);

ActionCategory to_action(Longitudinal l);

struct ImageSize {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct TelemetrySample {
    FrameIndex frame = 0;
    double t_sec = 0.0;
    double speed_kmh = 0.0;
    double lat = 0.0;
    double lon = 0.0;
    double heading_deg = 0.0;

    double speed_ms() const { return speed_kmh / 3.6; }
};

struct GazeSample {
    FrameIndex frame = 0;
    double x = 0.0;
    double y = 0.0;
    GazeEvent event = GazeEvent::Fixation;
};

struct Fixation {
    FrameIndex frame = 0;
    double x = 0.0;
    double y = 0.0;
    std::optional<double> duration_ms;
};

struct ContextEvent {
    FrameIndex crossing_frame = 0;
    IntersectionType intersection_type = IntersectionType::Unsignalized;
    std::optional<Priority> priority;
    std::optional<FrameIndex> yield_onset_frame;
    // Provenance of auto-suggested events; empty for manually placed ones.
    std::optional<std::int64_t> osm_node;
    bool confirmed = false;

    friend bool operator==(const ContextEvent&, const ContextEvent&) = default;
};

} // namespace gazeaudit
