#include "gazeaudit/types.hpp"

#include "gazeaudit/error.hpp"

#include <utility>

namespace gazeaudit {

namespace {

template <class E, std::size_t N>
E lookup(const std::pair<E, std::string_view> (&table)[N], std::string_view s,
         std::string_view what) {
    for (const auto& [value, name] : table)
        if (name == s)
            return value;
    fail(ErrorCode::Parse, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <class E, std::size_t N>
std::string_view name_of(const std::pair<E, std::string_view> (&table)[N], E e) {
    for (const auto& [value, name] : table)
        if (value == e)
            return name;
    return "?";
}

constexpr std::pair<GazeEvent, std::string_view> kGazeNames[] = {
    {GazeEvent::Fixation, "fixation"},
    {GazeEvent::Saccade, "saccade"},
    {GazeEvent::Blink, "blink"},
    {GazeEvent::InVehicle, "in_vehicle"},
    {GazeEvent::Offscreen, "offscreen"},
};

constexpr std::pair<ActionCategory, std::string_view> kActionNames[] = {
    {ActionCategory::SpeedUp, "SpeedUp"},   {ActionCategory::SlowDown, "SlowDown"},
    {ActionCategory::Lateral, "Lateral"},   {ActionCategory::LatLon, "LatLon"},
    {ActionCategory::Maintain, "Maintain"}, {ActionCategory::Stopped, "Stopped"},
    {ActionCategory::Excluded, "Excluded"},
};

constexpr std::pair<Longitudinal, std::string_view> kLongNames[] = {
    {Longitudinal::SpeedUp, "SpeedUp"},
    {Longitudinal::SlowDown, "SlowDown"},
    {Longitudinal::Maintain, "Maintain"},
    {Longitudinal::Stopped, "Stopped"},
};

constexpr std::pair<LateralClass, std::string_view> kLateralNames[] = {
    {LateralClass::None, "none"},         {LateralClass::Turn, "turn"},
    {LateralClass::LaneChange, "lane_change"}, {LateralClass::UTurn, "u_turn"},
    {LateralClass::Reverse, "reverse"},
};

constexpr std::pair<IntersectionType, std::string_view> kTypeNames[] = {
    {IntersectionType::Signalized, "signalized"},
    {IntersectionType::Unsignalized, "unsignalized"},
    {IntersectionType::Roundabout, "roundabout"},
    {IntersectionType::HighwayRamp, "highway_ramp"},
};

constexpr std::pair<Priority, std::string_view> kPriorityNames[] = {
    {Priority::RightOfWay, "right_of_way"},
    {Priority::Yield, "yield"},
};

} // namespace

std::string_view to_string(GazeEvent e) { return name_of(kGazeNames, e); }
std::string_view to_string(ActionCategory c) { return name_of(kActionNames, c); }
std::string_view to_string(Longitudinal l) { return name_of(kLongNames, l); }
std::string_view to_string(LateralClass l) { return name_of(kLateralNames, l); }
std::string_view to_string(IntersectionType t) { return name_of(kTypeNames, t); }
std::string_view to_string(Priority p) { return name_of(kPriorityNames, p); }

GazeEvent parse_gaze_event(std::string_view s) { return lookup(kGazeNames, s, "gaze event"); }
ActionCategory parse_action_category(std::string_view s) {
    return lookup(kActionNames, s, "action category");
}
Longitudinal parse_longitudinal(std::string_view s) {
    return lookup(kLongNames, s, "longitudinal label");
}
LateralClass parse_lateral_class(std::string_view s) {
    return lookup(kLateralNames, s, "lateral class");
}
IntersectionType parse_intersection_type(std::string_view s) {
    return lookup(kTypeNames, s, "intersection type");
}
Priority parse_priority(std::string_view s) { return lookup(kPriorityNames, s, "priority"); }

ActionCategory to_action(Longitudinal l) {
    switch (l) {
    case Longitudinal::SpeedUp: return ActionCategory::SpeedUp;
    case Longitudinal::SlowDown: return ActionCategory::SlowDown;
    case Longitudinal::Maintain: return ActionCategory::Maintain;
    case Longitudinal::Stopped: return ActionCategory::Stopped;
    }
    return ActionCategory::Maintain;
}

} // namespace gazeaudit
