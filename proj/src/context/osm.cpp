#include "gazeaudit/context.hpp"

#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"

#include <expat.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <numbers>
#include <set>

namespace gazeaudit {

namespace {

struct ParseState {
    XML_Parser parser = nullptr;
    std::string source;
    std::string error;
    std::map<OsmId, OsmNode> all_nodes;
    std::map<OsmId, OsmWay> ways;
    std::optional<GeoBounds> declared_bounds;
    enum class In { None, Node, Way, Other } in = In::None;
    OsmNode node;
    OsmWay way;
    int depth = 0;

    void set_error(const std::string& msg) {
        if (error.empty())
            error = source + ":" + std::to_string(XML_GetCurrentLineNumber(parser)) + ": " + msg;
        XML_StopParser(parser, XML_FALSE);
    }
};

const char* attr(const XML_Char** atts, const char* name) {
    for (int i = 0; atts[i]; i += 2)
        if (std::strcmp(atts[i], name) == 0)
            return atts[i + 1];
    return nullptr;
}

bool to_int(const char* s, OsmId& out) {
    if (!s)
        return false;
    const char* end = s + std::strlen(s);
    auto [p, ec] = std::from_chars(s, end, out);
    return ec == std::errc() && p == end;
}

bool to_double(const char* s, double& out) {
    if (!s)
        return false;
    const char* end = s + std::strlen(s);
    auto [p, ec] = std::from_chars(s, end, out);
    return ec == std::errc() && p == end && std::isfinite(out);
}

void XMLCALL on_start(void* ud, const XML_Char* name, const XML_Char** atts) {
    auto& st = *static_cast<ParseState*>(ud);
    ++st.depth;
    const std::string_view el(name);
    if (st.in == ParseState::In::None) {
        if (el == "node") {
            st.in = ParseState::In::Node;
            st.node = {};
            if (!to_int(attr(atts, "id"), st.node.id))
                return st.set_error("<node> without a valid id");
            if (!to_double(attr(atts, "lat"), st.node.lat) || !to_double(attr(atts, "lon"), st.node.lon))
                return st.set_error("node " + std::to_string(st.node.id) + " without valid lat/lon");
            if (std::abs(st.node.lat) > 90.0 || std::abs(st.node.lon) > 180.0)
                return st.set_error("node " + std::to_string(st.node.id) + " has out-of-range coordinates");
        } else if (el == "way") {
            st.in = ParseState::In::Way;
            st.way = {};
            if (!to_int(attr(atts, "id"), st.way.id))
                return st.set_error("<way> without a valid id");
        } else if (el == "bounds") {
            GeoBounds b;
            if (to_double(attr(atts, "minlat"), b.min_lat) && to_double(attr(atts, "maxlat"), b.max_lat) &&
                to_double(attr(atts, "minlon"), b.min_lon) && to_double(attr(atts, "maxlon"), b.max_lon))
                st.declared_bounds = b;
        } else if (el != "osm") {
            st.in = ParseState::In::Other;
        }
        return;
    }
    if (el == "tag" && (st.in == ParseState::In::Node || st.in == ParseState::In::Way)) {
        const char* k = attr(atts, "k");
        const char* v = attr(atts, "v");
        if (!k || !v)
            return st.set_error("<tag> without k/v");
        (st.in == ParseState::In::Node ? st.node.tags : st.way.tags)[k] = v;
    } else if (el == "nd" && st.in == ParseState::In::Way) {
        OsmId ref = 0;
        if (!to_int(attr(atts, "ref"), ref))
            return st.set_error("way " + std::to_string(st.way.id) + ": <nd> without a valid ref");
        st.way.nodes.push_back(ref);
    }
}

void XMLCALL on_end(void* ud, const XML_Char* name) {
    auto& st = *static_cast<ParseState*>(ud);
    --st.depth;
    const std::string_view el(name);
    if (st.in == ParseState::In::Node && el == "node") {
        st.all_nodes[st.node.id] = std::move(st.node);
        st.in = ParseState::In::None;
    } else if (st.in == ParseState::In::Way && el == "way") {
        if (st.way.tags.count("highway"))
            st.ways[st.way.id] = std::move(st.way);
        st.in = ParseState::In::None;
    } else if (st.in == ParseState::In::Other && st.depth == 1) {
        st.in = ParseState::In::None;
    }
}

} // namespace

std::string_view OsmWay::tag(std::string_view key) const {
    auto it = tags.find(key);
    return it == tags.end() ? std::string_view{} : std::string_view(it->second);
}

bool GeoBounds::contains(double lat, double lon, double margin_m) const {
    const double dlat = margin_m / kEarthRadiusM * 180.0 / std::numbers::pi;
    const double coslat = std::max(std::cos(lat * std::numbers::pi / 180.0), 1e-6);
    const double dlon = dlat / coslat;
    return lat >= min_lat - dlat && lat <= max_lat + dlat && lon >= min_lon - dlon && lon <= max_lon + dlon;
}

StreetGraph parse_osm_xml(std::string_view xml, const std::string& source) {
    ParseState st;
    st.source = source;
    std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(XML_ParserCreate(nullptr),
                                                                                       &XML_ParserFree);
    if (!parser)
        fail(ErrorCode::Io, "cannot allocate XML parser");
    st.parser = parser.get();
    XML_SetUserData(st.parser, &st);
    XML_SetElementHandler(st.parser, on_start, on_end);
    if (xml.size() > static_cast<std::size_t>(std::numeric_limits<int>::max()))
        fail(ErrorCode::InvalidArgument, source + ": extract too large");
    const auto status = XML_Parse(st.parser, xml.data(), static_cast<int>(xml.size()), XML_TRUE);
    if (!st.error.empty())
        fail(ErrorCode::Parse, st.error);
    if (status != XML_STATUS_OK)
        fail(ErrorCode::Parse, source + ":" + std::to_string(XML_GetCurrentLineNumber(st.parser)) +
                                   ": malformed XML: " + XML_ErrorString(XML_GetErrorCode(st.parser)));

    StreetGraph g;
    for (const auto& [id, way] : st.ways) {
        if (way.nodes.size() < 2)
            fail(ErrorCode::Parse, source + ": way " + std::to_string(id) + " has fewer than 2 nodes");
        for (OsmId ref : way.nodes) {
            auto it = st.all_nodes.find(ref);
            if (it == st.all_nodes.end())
                fail(ErrorCode::Parse, source + ": way " + std::to_string(id) + " references missing node " +
                                           std::to_string(ref));
            g.nodes.emplace(ref, it->second);
        }
    }
    g.ways = std::move(st.ways);
    if (g.ways.empty())
        fail(ErrorCode::InvalidArgument, source + ": extract contains no highway ways");
    if (st.declared_bounds) {
        g.bounds = *st.declared_bounds;
    } else {
        g.bounds = {90.0, -90.0, 180.0, -180.0};
        for (const auto& [id, n] : g.nodes) {
            g.bounds.min_lat = std::min(g.bounds.min_lat, n.lat);
            g.bounds.max_lat = std::max(g.bounds.max_lat, n.lat);
            g.bounds.min_lon = std::min(g.bounds.min_lon, n.lon);
            g.bounds.max_lon = std::max(g.bounds.max_lon, n.lon);
        }
    }
    return g;
}

StreetGraph parse_osm_extract(const std::filesystem::path& path) {
    return parse_osm_xml(read_file(path), path.string());
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (lat2 - lat1) * rad;
    const double dlon = (lon2 - lon1) * rad;
    const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

bool is_drivable(const OsmWay& way) {
    static const std::set<std::string, std::less<>> kDrivable = {
        "motorway",     "trunk",          "primary",      "secondary",   "tertiary",
        "unclassified", "residential",    "service",      "living_street", "road",
        "motorway_link", "trunk_link",    "primary_link", "secondary_link", "tertiary_link"};
    return kDrivable.count(way.tag("highway")) > 0;
}

} // namespace gazeaudit
