#include "gazeaudit/context.hpp"

#include "gazeaudit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <set>

namespace gazeaudit {

namespace {

bool is_roundabout_way(const OsmWay& w) {
    const auto j = w.tag("junction");
    return j == "roundabout" || j == "circular";
}

bool is_ramp_way(const OsmWay& w) {
    const auto h = w.tag("highway");
    return h == "motorway_link" || h == "trunk_link";
}

struct UnionFind {
    std::map<OsmId, OsmId> parent;
    OsmId find(OsmId x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent[x] = x;
            return x;
        }
        if (it->second == x)
            return x;
        const OsmId root = find(it->second);
        parent[x] = root;
        return root;
    }
    void unite(OsmId a, OsmId b) {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};

struct Adjacency {
    std::map<OsmId, std::set<OsmId>> neighbours;
    std::map<OsmId, std::set<OsmId>> ways_at;
};

Adjacency build_adjacency(const StreetGraph& g) {
    Adjacency adj;
    for (const auto& [id, w] : g.ways) {
        if (!is_drivable(w))
            continue;
        for (std::size_t i = 0; i < w.nodes.size(); ++i) {
            adj.ways_at[w.nodes[i]].insert(id);
            if (i + 1 < w.nodes.size() && w.nodes[i] != w.nodes[i + 1]) {
                adj.neighbours[w.nodes[i]].insert(w.nodes[i + 1]);
                adj.neighbours[w.nodes[i + 1]].insert(w.nodes[i]);
            }
        }
    }
    return adj;
}

bool signal_nearby(const StreetGraph& g, const Adjacency& adj, const std::set<OsmId>& start) {
    std::map<OsmId, double> dist;
    using Item = std::pair<double, OsmId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (OsmId s : start) {
        dist[s] = 0.0;
        pq.push({0.0, s});
    }
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u])
            continue;
        const auto& node = g.nodes.at(u);
        if (auto it = node.tags.find("highway"); it != node.tags.end() && it->second == "traffic_signals")
            return true;
        auto nit = adj.neighbours.find(u);
        if (nit == adj.neighbours.end())
            continue;
        for (OsmId v : nit->second) {
            const auto& nv = g.nodes.at(v);
            const double nd = d + haversine_m(node.lat, node.lon, nv.lat, nv.lon);
            if (nd > kSignalSearchRadiusM)
                continue;
            auto dit = dist.find(v);
            if (dit == dist.end() || nd < dit->second) {
                dist[v] = nd;
                pq.push({nd, v});
            }
        }
    }
    return false;
}

IntersectionCandidate make_candidate(const StreetGraph& g, const Adjacency& adj, const std::set<OsmId>& cluster,
                                     bool roundabout) {
    IntersectionCandidate c;
    c.node = *cluster.begin();
    std::set<OsmId> arms, ways;
    for (OsmId n : cluster) {
        const auto& node = g.nodes.at(n);
        c.lat += node.lat;
        c.lon += node.lon;
        if (auto it = adj.neighbours.find(n); it != adj.neighbours.end())
            for (OsmId v : it->second)
                if (!cluster.count(v))
                    arms.insert(v);
        if (auto it = adj.ways_at.find(n); it != adj.ways_at.end())
            ways.insert(it->second.begin(), it->second.end());
        if (auto it = node.tags.find("highway"); it != node.tags.end() && it->second == "mini_roundabout")
            roundabout = true;
    }
    c.lat /= static_cast<double>(cluster.size());
    c.lon /= static_cast<double>(cluster.size());
    c.degree = static_cast<int>(arms.size());
    c.way_count = static_cast<int>(ways.size());
    c.roundabout_tagged = roundabout;
    for (OsmId w : ways)
        if (is_ramp_way(g.ways.at(w)))
            c.ramp = true;
    c.signal_tagged = signal_nearby(g, adj, cluster);
    return c;
}

struct LocalPoint {
    double x = 0.0, y = 0.0;
};

double point_segment_distance(LocalPoint p, LocalPoint a, LocalPoint b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
    return std::hypot(a.x + t * vx - p.x, a.y + t * vy - p.y);
}

bool has_position(const TelemetrySample& s) { return std::isfinite(s.lat) && std::isfinite(s.lon); }

} // namespace

std::vector<IntersectionCandidate> find_intersection_candidates(const StreetGraph& g) {
    const Adjacency adj = build_adjacency(g);
    UnionFind uf;
    std::set<OsmId> on_roundabout;
    for (const auto& [id, w] : g.ways) {
        if (!is_drivable(w) || !is_roundabout_way(w))
            continue;
        for (OsmId n : w.nodes) {
            on_roundabout.insert(n);
            uf.unite(w.nodes.front(), n);
        }
    }
    std::map<OsmId, std::set<OsmId>> clusters;
    for (OsmId n : on_roundabout)
        clusters[uf.find(n)].insert(n);

    std::vector<IntersectionCandidate> out;
    for (const auto& [root, members] : clusters) {
        auto c = make_candidate(g, adj, members, true);
        if (c.degree >= 3)
            out.push_back(c);
    }
    for (const auto& [n, nbrs] : adj.neighbours) {
        if (on_roundabout.count(n) || nbrs.size() < 3)
            continue;
        out.push_back(make_candidate(g, adj, {n}, false));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
    return out;
}

IntersectionType classify_intersection(const IntersectionCandidate& c) {
    if (c.signal_tagged)
        return IntersectionType::Signalized;
    if (c.roundabout_tagged)
        return IntersectionType::Roundabout;
    if (c.ramp)
        return IntersectionType::HighwayRamp;
    return IntersectionType::Unsignalized;
}

RouteMatch find_route_intersections(std::span<const TelemetrySample> track,
                                    std::span<const IntersectionCandidate> candidates, const GeoBounds& bounds,
                                    double radius_m) {
    if (track.empty())
        fail(ErrorCode::InvalidArgument, "route matching requires a non-empty track");
    if (!(radius_m > 0.0))
        fail(ErrorCode::InvalidArgument, "match radius must be > 0");

    RouteMatch match;
    const bool any_inside = std::any_of(track.begin(), track.end(), [&](const TelemetrySample& s) {
        return has_position(s) && bounds.contains(s.lat, s.lon, radius_m);
    });
    if (!any_inside) {
        match.outside_extract = true;
        return match;
    }

    // Track pieces: consecutive positioned samples, or an isolated positioned sample.
    struct Piece {
        std::size_t a, b;
    };
    std::vector<Piece> pieces;
    for (std::size_t i = 0; i < track.size(); ++i) {
        if (!has_position(track[i]))
            continue;
        if (i + 1 < track.size() && has_position(track[i + 1]))
            pieces.push_back({i, i + 1});
        else if (i == 0 || !has_position(track[i - 1]))
            pieces.push_back({i, i});
    }

    constexpr double rad = std::numbers::pi / 180.0;
    for (const auto& c : candidates) {
        const double kx = kEarthRadiusM * rad * std::cos(c.lat * rad);
        const double ky = kEarthRadiusM * rad;
        const auto local = [&](const TelemetrySample& s) {
            return LocalPoint{(s.lon - c.lon) * kx, (s.lat - c.lat) * ky};
        };
        std::optional<std::size_t> run_end; // last sample index of the current near run
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        const auto close_run = [&] {
            if (run_end) {
                match.hits.push_back({c, track[best].frame, best_d});
                run_end.reset();
                best_d = std::numeric_limits<double>::infinity();
            }
        };
        const auto consider = [&](std::size_t i) {
            const double d = haversine_m(track[i].lat, track[i].lon, c.lat, c.lon);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        };
        for (const auto& p : pieces) {
            const double d = point_segment_distance({0.0, 0.0}, local(track[p.a]), local(track[p.b]));
            const bool near = d <= radius_m;
            if (!near || (run_end && *run_end != p.a))
                close_run();
            if (near) {
                consider(p.a);
                consider(p.b);
                run_end = p.b;
            }
        }
        close_run();
    }
    std::sort(match.hits.begin(), match.hits.end(), [](const RouteIntersection& a, const RouteIntersection& b) {
        return a.nearest_frame != b.nearest_frame ? a.nearest_frame < b.nearest_frame
                                                  : a.candidate.node < b.candidate.node;
    });
    return match;
}

std::vector<ContextEvent> suggest_context_events(const RouteMatch& match) {
    std::vector<ContextEvent> out;
    for (const auto& h : match.hits) {
        ContextEvent e;
        e.crossing_frame = h.nearest_frame;
        e.intersection_type = classify_intersection(h.candidate);
        e.osm_node = h.candidate.node;
        e.confirmed = false;
        out.push_back(e);
    }
    return out;
}

std::vector<ContextEvent> merge_context_events(std::span<const ContextEvent> existing,
                                               std::span<const ContextEvent> suggestions, FrameIndex frame_tolerance) {
    std::vector<ContextEvent> out;
    for (const auto& e : existing)
        if (e.confirmed || !e.osm_node)
            out.push_back(e);
    const std::size_t kept = out.size();
    for (const auto& s : suggestions) {
        const bool duplicate = std::any_of(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(kept),
                                           [&](const ContextEvent& e) {
                                               const FrameIndex gap = e.crossing_frame > s.crossing_frame
                                                                          ? e.crossing_frame - s.crossing_frame
                                                                          : s.crossing_frame - e.crossing_frame;
                                               return gap == 0 || (e.osm_node && s.osm_node &&
                                                                   *e.osm_node == *s.osm_node && gap <= frame_tolerance);
                                           });
        if (!duplicate)
            out.push_back(s);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ContextEvent& a, const ContextEvent& b) { return a.crossing_frame < b.crossing_frame; });
    return out;
}

std::size_t ContextCounts::at(IntersectionType t, Priority p) const {
    return counts[static_cast<std::size_t>(std::find(kAllIntersectionTypes.begin(), kAllIntersectionTypes.end(), t) -
                                           kAllIntersectionTypes.begin())]
                 [static_cast<std::size_t>(std::find(kAllPriorities.begin(), kAllPriorities.end(), p) -
                                           kAllPriorities.begin())];
}

std::size_t ContextCounts::type_total(IntersectionType t) const {
    std::size_t s = 0;
    for (Priority p : kAllPriorities)
        s += at(t, p);
    return s;
}

std::size_t ContextCounts::priority_total(Priority p) const {
    std::size_t s = 0;
    for (IntersectionType t : kAllIntersectionTypes)
        s += at(t, p);
    return s;
}

std::size_t ContextCounts::total() const {
    std::size_t s = 0;
    for (const auto& row : counts)
        s += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return s;
}

ContextCounts context_statistics(std::span<const ContextEvent> events) {
    ContextCounts c;
    for (const auto& e : events) {
        if (!e.priority) {
            ++c.unlabeled;
            continue;
        }
        const auto ti = static_cast<std::size_t>(
            std::find(kAllIntersectionTypes.begin(), kAllIntersectionTypes.end(), e.intersection_type) -
            kAllIntersectionTypes.begin());
        const auto pi = static_cast<std::size_t>(
            std::find(kAllPriorities.begin(), kAllPriorities.end(), *e.priority) - kAllPriorities.begin());
        ++c.counts[ti][pi];
    }
    return c;
}

} // namespace gazeaudit
