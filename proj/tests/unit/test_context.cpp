#include "doctest.h"

#include "gazeaudit/context.hpp"
#include "gazeaudit/error.hpp"

#include "fixture.hpp"

#include <cmath>

using namespace gazeaudit;

namespace {

const std::vector<fixture::PlannedJunction> kStreet{{-80.0, fixture::Junction::Ramp},
                                                    {100.0, fixture::Junction::Signalized},
                                                    {300.0, fixture::Junction::Roundabout},
                                                    {500.0, fixture::Junction::TJunction},
                                                    {700.0, fixture::Junction::Unsignalized4}};

StreetGraph street() { return parse_osm_xml(fixture::street_extract_xml(kStreet, -150.0, 900.0), "street.osm"); }

std::vector<TelemetrySample> drive(double x0, double x1, double step) {
    std::vector<TelemetrySample> t;
    FrameIndex f = 0;
    for (double x = x0; x <= x1; x += step, ++f) {
        TelemetrySample s;
        s.frame = f;
        s.t_sec = static_cast<double>(f) / 30.0;
        s.speed_kmh = 36.0;
        fixture::local_to_geo(x, 0.0, s.lat, s.lon);
        s.heading_deg = 90.0;
        t.push_back(s);
    }
    return t;
}

} // namespace

TEST_CASE("haversine") {
    CHECK(haversine_m(0, 0, 0, 1) == doctest::Approx(kEarthRadiusM * M_PI / 180.0));
    double lat, lon;
    fixture::local_to_geo(100.0, 0.0, lat, lon);
    CHECK(haversine_m(fixture::kLat0, fixture::kLon0, lat, lon) == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("osm parsing keeps highway ways only") {
    const auto g = street();
    CHECK(g.bounds.contains(fixture::kLat0, fixture::kLon0));
    for (const auto& [id, w] : g.ways)
        CHECK_FALSE(w.tag("highway").empty());
    CHECK(g.ways.count(1000) == 1);
    CHECK_THROWS_AS(parse_osm_xml("<osm><node id='1'", "bad"), Error);
    CHECK_THROWS_AS(parse_osm_xml("<osm><way id='1'><nd ref='9'/><tag k='highway' v='primary'/></way></osm>", "d"),
                    Error);
    try {
        parse_osm_xml("<osm><node id='1' lat='0' lon='0'/></osm>", "empty");
        FAIL("accepted an extract without roads");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
}

TEST_CASE("intersection candidates and tag classification") {
    const auto g = street();
    const auto cands = find_intersection_candidates(g);
    REQUIRE(cands.size() == 5);
    std::vector<IntersectionType> types;
    for (const auto& c : cands)
        types.push_back(classify_intersection(c));
    // Candidates come out in node order, which follows x along the road.
    CHECK(types == std::vector<IntersectionType>{IntersectionType::HighwayRamp, IntersectionType::Signalized,
                                                 IntersectionType::Roundabout, IntersectionType::Unsignalized,
                                                 IntersectionType::Unsignalized});
    CHECK(cands[1].degree == 4);
    CHECK(cands[2].roundabout_tagged);
    CHECK(cands[2].degree == 3);
    CHECK(cands[3].degree == 3);
    OsmWay foot;
    foot.tags = {{"highway", "footway"}};
    CHECK_FALSE(is_drivable(foot));
    foot.tags = {{"highway", "motorway_link"}};
    CHECK(is_drivable(foot));
}

TEST_CASE("route matching finds each pass once") {
    const auto g = street();
    const auto cands = find_intersection_candidates(g);
    const auto track = drive(0.0, 800.0, 1.0);
    const auto match = find_route_intersections(track, cands, g.bounds);
    CHECK_FALSE(match.outside_extract);
    REQUIRE(match.hits.size() == 4);
    CHECK(match.hits[0].nearest_frame == 100);
    CHECK(match.hits[0].distance_m < 0.5);
    CHECK(match.hits[1].nearest_frame == 300);
    CHECK(match.hits[3].nearest_frame == 700);

    auto there_and_back = drive(0.0, 200.0, 1.0);
    auto back = drive(0.0, 200.0, 1.0);
    for (std::size_t i = 0; i < back.size(); ++i) {
        auto s = there_and_back[back.size() - 1 - i];
        s.frame = static_cast<FrameIndex>(back.size() + i);
        there_and_back.push_back(s);
    }
    const auto twice = find_route_intersections(there_and_back, cands, g.bounds);
    REQUIRE(twice.hits.size() == 2);
    CHECK(twice.hits[0].candidate.node == twice.hits[1].candidate.node);

    const auto far = drive(5000.0, 5100.0, 5.0);
    CHECK(find_route_intersections(far, cands, g.bounds).outside_extract);
}

TEST_CASE("gps dropouts break the polyline") {
    const auto g = street();
    const auto cands = find_intersection_candidates(g);
    auto track = drive(0.0, 200.0, 1.0);
    for (std::size_t i = 95; i <= 105; ++i)
        track[i].lat = track[i].lon = std::nan("");
    const auto m = find_route_intersections(track, cands, g.bounds, 3.0);
    CHECK(m.hits.empty());
}

TEST_CASE("suggestions merge without duplicating kept events") {
    const auto g = street();
    const auto cands = find_intersection_candidates(g);
    const auto sugg = suggest_context_events(find_route_intersections(drive(0.0, 800.0, 1.0), cands, g.bounds));
    REQUIRE(sugg.size() == 4);
    CHECK_FALSE(sugg[0].confirmed);
    CHECK(sugg[0].osm_node.has_value());
    CHECK(sugg[0].intersection_type == IntersectionType::Signalized);

    std::vector<ContextEvent> existing;
    ContextEvent manual;
    manual.crossing_frame = 300;
    manual.intersection_type = IntersectionType::Roundabout;
    manual.priority = Priority::Yield;
    existing.push_back(manual);
    ContextEvent confirmed = sugg[3];
    confirmed.crossing_frame = 702;
    confirmed.confirmed = true;
    existing.push_back(confirmed);
    ContextEvent stale = sugg[0];
    stale.crossing_frame = 90;
    existing.push_back(stale);

    const auto merged = merge_context_events(existing, sugg, 5);
    REQUIRE(merged.size() == 4);
    CHECK(merged[0].crossing_frame == 100);
    CHECK(merged[1] == manual);
    CHECK(merged[3] == confirmed);
    CHECK(merge_context_events(merged, sugg, 5) == merged);
}

TEST_CASE("context counts") {
    std::vector<ContextEvent> ev(5);
    ev[0].intersection_type = IntersectionType::Signalized;
    ev[0].priority = Priority::Yield;
    ev[1].intersection_type = IntersectionType::Signalized;
    ev[1].priority = Priority::Yield;
    ev[2].intersection_type = IntersectionType::Roundabout;
    ev[2].priority = Priority::RightOfWay;
    ev[3].intersection_type = IntersectionType::HighwayRamp;
    const auto c = context_statistics(ev);
    CHECK(c.at(IntersectionType::Signalized, Priority::Yield) == 2);
    CHECK(c.type_total(IntersectionType::Signalized) == 2);
    CHECK(c.priority_total(Priority::RightOfWay) == 1);
    CHECK(c.unlabeled == 2);
    CHECK(c.total() == 3);
}
