#pragma once

#include "gazeaudit/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaudit {

using OsmId = std::int64_t;
using Tags = std::map<std::string, std::string, std::less<>>;

struct OsmNode {
    OsmId id = 0;
    double lat = 0.0;
    double lon = 0.0;
    Tags tags;
};

struct OsmWay {
    OsmId id = 0;
    std::vector<OsmId> nodes;
    Tags tags;

    std::string_view tag(std::string_view key) const;
};

struct GeoBounds {
    double min_lat = 0.0, max_lat = 0.0, min_lon = 0.0, max_lon = 0.0;
    bool contains(double lat, double lon, double margin_m = 0.0) const;
};

/// Highway-tagged ways and the nodes they reference, keyed by id.
struct StreetGraph {
    std::map<OsmId, OsmNode> nodes;
    std::map<OsmId, OsmWay> ways;
    GeoBounds bounds;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t way_count() const { return ways.size(); }
};

StreetGraph parse_osm_extract(const std::filesystem::path& path);
/// Throws Parse with the XML line for malformed input, Parse naming the way
/// for a dangling node reference, and InvalidArgument when no highway way
/// remains.
StreetGraph parse_osm_xml(std::string_view xml, const std::string& source);

inline constexpr double kEarthRadiusM = 6371008.8;
double haversine_m(double lat1, double lon1, double lat2, double lon2);

/// Highway classes open to motor traffic.
bool is_drivable(const OsmWay& way);

struct IntersectionCandidate {
    OsmId node = 0; // representative node (smallest id of a roundabout)
    double lat = 0.0;
    double lon = 0.0;
    int degree = 0;    // distinct drivable arms
    int way_count = 0; // distinct drivable ways through the node
    bool signal_tagged = false;
    bool roundabout_tagged = false;
    bool ramp = false;
    friend bool operator==(const IntersectionCandidate&, const IntersectionCandidate&) = default;
};

inline constexpr double kSignalSearchRadiusM = 30.0;

/// Nodes with >= 3 distinct drivable arms. Nodes on junction=roundabout
/// ways collapse into one candidate per connected roundabout. Ordered by node id.
std::vector<IntersectionCandidate> find_intersection_candidates(const StreetGraph& graph);

/// Tag-based suggestion: signalized, roundabout, highway_ramp, unsignalized.
IntersectionType classify_intersection(const IntersectionCandidate& c);

struct RouteIntersection {
    IntersectionCandidate candidate;
    FrameIndex nearest_frame = 0;
    double distance_m = 0.0;
};

struct RouteMatch {
    std::vector<RouteIntersection> hits; // ordered by nearest frame
    bool outside_extract = false;
};

inline constexpr double kDefaultMatchRadiusM = 25.0;

/// Candidates within `radius_m` of the track polyline. Every maximal run of
/// near track segments is one pass; its frame is the sample closest to the
/// candidate by great-circle distance. Samples without a position break the
/// polyline.
RouteMatch find_route_intersections(std::span<const TelemetrySample> track,
                                    std::span<const IntersectionCandidate> candidates, const GeoBounds& bounds,
                                    double radius_m = kDefaultMatchRadiusM);

/// Unconfirmed suggestions for every route pass.
std::vector<ContextEvent> suggest_context_events(const RouteMatch& match);

/// Keeps confirmed and manually placed events and replaces previous
/// unconfirmed suggestions. A suggestion is dropped when a kept event has
/// the same crossing frame, or the same node within `frame_tolerance`
/// frames. Result is ordered by crossing frame.
std::vector<ContextEvent> merge_context_events(std::span<const ContextEvent> existing,
                                               std::span<const ContextEvent> suggestions,
                                               FrameIndex frame_tolerance = 0);

struct ContextCounts {
    // [type index in kAllIntersectionTypes][priority index in kAllPriorities]
    std::array<std::array<std::size_t, kAllPriorities.size()>, kAllIntersectionTypes.size()> counts{};
    std::size_t unlabeled = 0;

    std::size_t at(IntersectionType t, Priority p) const;
    std::size_t type_total(IntersectionType t) const;
    std::size_t priority_total(Priority p) const;
    std::size_t total() const; // labeled events only
};

ContextCounts context_statistics(std::span<const ContextEvent> events);

} // namespace gazeaudit
