#include "fixture.hpp"

#include "gazeaudit/io.hpp"
#include "gazeaudit/saliency_map.hpp"
#include "gazeaudit/salmap.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace fixture {

using namespace gazeaudit;

namespace {

constexpr double kRadius = 6371008.8;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << s;
}

std::string frame_file(FrameIndex f, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06lld%s", static_cast<long long>(f), ext);
    return buf;
}

template <class T>
std::vector<T> fill_runs(std::size_t n, FrameIndex first, T def, std::initializer_list<std::tuple<FrameIndex, FrameIndex, T>> runs) {
    std::vector<T> out(n, def);
    for (const auto& [a, b, v] : runs)
        for (FrameIndex f = a; f <= b; ++f)
            out[static_cast<std::size_t>(f - first)] = v;
    return out;
}

template <class T>
std::vector<std::tuple<FrameIndex, FrameIndex, T>> to_runs(const std::vector<T>& labels, FrameIndex first) {
    std::vector<std::tuple<FrameIndex, FrameIndex, T>> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const FrameIndex f = first + static_cast<FrameIndex>(i);
        if (!out.empty() && std::get<2>(out.back()) == labels[i] && std::get<1>(out.back()) == f - 1)
            std::get<1>(out.back()) = f;
        else
            out.emplace_back(f, f, labels[i]);
    }
    return out;
}

} // namespace

std::vector<double> build_speed_profile(double v0, std::span<const Phase> phases, double fps) {
    std::vector<double> v{v0};
    for (const auto& ph : phases) {
        const double start = v.back();
        for (int k = 1; k <= ph.frames; ++k)
            v.push_back(ph.accel == 0.0 ? start : std::max(0.0, start + (k * ph.accel) / fps));
    }
    return v;
}

std::vector<Phase> phases_a() {
    return {{120, 0.0}, {50, 1.2},  {200, 0.0}, {240, -1.0}, {120, 0.0}, {100, 1.2},
            {100, 0.0}, {60, 0.3},  {150, 0.0}, {60, -1.0},  {120, 0.0}};
}

std::vector<Phase> phases_b() { return {{100, 0.0}, {150, -1.0}, {150, 0.0}, {50, 1.2}, {150, 0.0}}; }

std::vector<Longitudinal> planted_longitudinal(std::span<const double> v_ms, double fps, double accel_th,
                                              double stop_kmh, int min_stop_run) {
    const std::size_t n = v_ms.size();
    if (min_stop_run < 0)
        min_stop_run = std::max(1, static_cast<int>(std::lround(fps)));
    std::vector<Longitudinal> out(n, Longitudinal::Maintain);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = (v_ms[i + 1] - v_ms[i]) * fps;
        if (a >= accel_th)
            out[i] = Longitudinal::SpeedUp;
        else if (a <= -accel_th)
            out[i] = Longitudinal::SlowDown;
    }
    for (std::size_t i = 0; i < n;) {
        if (v_ms[i] * 3.6 > stop_kmh) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && v_ms[j] * 3.6 <= stop_kmh)
            ++j;
        if (j - i >= static_cast<std::size_t>(min_stop_run))
            std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.begin() + static_cast<std::ptrdiff_t>(j),
                      Longitudinal::Stopped);
        i = j;
    }
    return out;
}

void local_to_geo(double x_m, double y_m, double& lat, double& lon) {
    const double deg = 180.0 / std::numbers::pi;
    lat = kLat0 + y_m / kRadius * deg;
    lon = kLon0 + x_m / (kRadius * std::cos(kLat0 / deg)) * deg;
}

std::vector<TelemetrySample> telemetry_from_profile(std::span<const double> v_ms, double fps, FrameIndex first_frame,
                                                    double x0_m) {
    std::vector<TelemetrySample> out;
    double x = x0_m;
    for (std::size_t i = 0; i < v_ms.size(); ++i) {
        if (i > 0)
            x += v_ms[i - 1] / fps;
        TelemetrySample s;
        s.frame = first_frame + static_cast<FrameIndex>(i);
        s.t_sec = static_cast<double>(i) / fps;
        s.speed_kmh = v_ms[i] * 3.6;
        local_to_geo(x, 0.0, s.lat, s.lon);
        s.heading_deg = 90.0;
        out.push_back(s);
    }
    return out;
}

std::string street_extract_xml(std::span<const PlannedJunction> junctions, double x_min, double x_max) {
    struct Node {
        double x, y;
        std::string tags;
    };
    std::vector<Node> nodes;
    struct Way {
        std::vector<int> refs;
        std::string tags;
    };
    std::vector<Way> ways;
    auto add = [&](double x, double y, std::string tags = {}) {
        nodes.push_back({x, y, std::move(tags)});
        return static_cast<int>(nodes.size()); // 1-based ids
    };
    const std::string primary = R"(<tag k="highway" v="primary"/><tag k="name" v="Main Street"/>)";
    const std::string residential = R"(<tag k="highway" v="residential"/>)";

    std::vector<PlannedJunction> js(junctions.begin(), junctions.end());
    std::sort(js.begin(), js.end(), [](const auto& a, const auto& b) { return a.x_m < b.x_m; });

    Way main{{add(x_min, 0.0)}, primary};
    for (const auto& j : js) {
        if (j.kind == Junction::Roundabout) {
            const double r = 12.0;
            const int w = add(j.x_m - r, 0.0), s = add(j.x_m, -r), e = add(j.x_m + r, 0.0), n = add(j.x_m, r);
            main.refs.push_back(w);
            ways.push_back(main);
            ways.push_back({{w, s, e, n, w}, primary + R"(<tag k="junction" v="roundabout"/>)"});
            ways.push_back({{n, add(j.x_m, 70.0)}, residential});
            main = Way{{e}, primary};
            continue;
        }
        const int c = add(j.x_m, 0.0, j.kind == Junction::Signalized ? R"(<tag k="highway" v="traffic_signals"/>)" : "");
        main.refs.push_back(c);
        switch (j.kind) {
        case Junction::Signalized:
        case Junction::Unsignalized4:
            ways.push_back({{add(j.x_m, -80.0), c, add(j.x_m, 80.0)}, residential});
            break;
        case Junction::TJunction:
            ways.push_back({{c, add(j.x_m, 80.0)}, residential});
            break;
        case Junction::Ramp:
            ways.push_back({{c, add(j.x_m + 60.0, -60.0)}, R"(<tag k="highway" v="motorway_link"/>)"});
            break;
        case Junction::Roundabout:
            break;
        }
    }
    main.refs.push_back(add(x_max, 0.0));
    ways.push_back(main);
    // A footway crossing must not create a junction.
    ways.push_back({{add(x_min + 10.0, -30.0), add(x_min + 10.0, 30.0)}, R"(<tag k="highway" v="footway"/>)"});

    double min_lat, min_lon, max_lat, max_lon;
    local_to_geo(x_min - 50.0, -150.0, min_lat, min_lon);
    local_to_geo(x_max + 50.0, 150.0, max_lat, max_lon);
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"fixture\">\n";
    os << "  <bounds minlat=\"" << num(min_lat) << "\" minlon=\"" << num(min_lon) << "\" maxlat=\"" << num(max_lat)
       << "\" maxlon=\"" << num(max_lon) << "\"/>\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double lat, lon;
        local_to_geo(nodes[i].x, nodes[i].y, lat, lon);
        os << "  <node id=\"" << i + 1 << "\" lat=\"" << num(lat) << "\" lon=\"" << num(lon) << "\"";
        if (nodes[i].tags.empty())
            os << "/>\n";
        else
            os << ">" << nodes[i].tags << "</node>\n";
    }
    for (std::size_t k = 0; k < ways.size(); ++k) {
        os << "  <way id=\"" << 1000 + k << "\">";
        for (int r : ways[k].refs)
            os << "<nd ref=\"" << r << "\"/>";
        os << ways[k].tags << "</way>\n";
    }
    os << "</osm>\n";
    return os.str();
}

std::vector<ActionCategory> FixtureVideo::actions() const {
    std::vector<ActionCategory> out(longitudinal.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto lon = longitudinal[i];
        const auto lat = lateral[i];
        const bool lateral_present = lat == LateralClass::Turn || lat == LateralClass::LaneChange;
        ActionCategory c;
        if (lat == LateralClass::UTurn || lat == LateralClass::Reverse)
            c = ActionCategory::Excluded;
        else if (lon == Longitudinal::Stopped)
            c = ActionCategory::Stopped;
        else if (lateral_present)
            c = lon == Longitudinal::Maintain ? ActionCategory::Lateral : ActionCategory::LatLon;
        else if (lon == Longitudinal::SpeedUp)
            c = ActionCategory::SpeedUp;
        else if (lon == Longitudinal::SlowDown)
            c = ActionCategory::SlowDown;
        else
            c = ActionCategory::Maintain;
        out[i] = c;
    }
    return out;
}

namespace {

FixtureVideo make_video_a(double fps) {
    FixtureVideo v;
    v.id = "clip_a";
    v.first_frame = 0;
    const auto ph = phases_a();
    v.speed_ms = build_speed_profile(6.0, ph, fps);
    v.longitudinal = planted_longitudinal(v.speed_ms, fps);
    const std::size_t n = v.speed_ms.size();
    v.lateral = fill_runs<LateralClass>(n, 0, LateralClass::None,
                                        {{160, 179, LateralClass::LaneChange},
                                         {300, 359, LateralClass::Turn},
                                         {500, 540, LateralClass::Turn},
                                         {620, 660, LateralClass::Turn}});
    auto ev = [](FrameIndex f, IntersectionType t, std::optional<Priority> p, std::optional<FrameIndex> onset) {
        ContextEvent e;
        e.crossing_frame = f;
        e.intersection_type = t;
        e.priority = p;
        e.yield_onset_frame = onset;
        e.confirmed = true;
        return e;
    };
    v.events = {ev(200, IntersectionType::Signalized, Priority::RightOfWay, std::nullopt),
                ev(640, IntersectionType::Signalized, Priority::Yield, 600),
                ev(900, IntersectionType::Unsignalized, Priority::Yield, 880),
                ev(1100, IntersectionType::Roundabout, Priority::RightOfWay, std::nullopt),
                ev(1250, IntersectionType::Unsignalized, Priority::RightOfWay, std::nullopt)};
    for (FrameIndex f = 0; f <= v.last_frame(); ++f)
        if (!(f >= 300 && f <= 319) && !(f >= 1000 && f <= 1004))
            v.present_frames.push_back(f);
    for (FrameIndex f = 50; f < 60; ++f)
        v.bright_frames.push_back(f);
    for (FrameIndex f = 60; f < 65; ++f)
        v.dark_frames.push_back(f);
    return v;
}

FixtureVideo make_video_b(double fps) {
    FixtureVideo v;
    v.id = "clip_b";
    v.first_frame = 100;
    v.speed_ms = build_speed_profile(10.0, phases_b(), fps);
    v.longitudinal = planted_longitudinal(v.speed_ms, fps);
    const std::size_t n = v.speed_ms.size();
    v.lateral = fill_runs<LateralClass>(n, 100, LateralClass::None,
                                        {{220, 250, LateralClass::LaneChange}, {500, 539, LateralClass::UTurn}});
    auto ev = [](FrameIndex f, IntersectionType t, std::optional<Priority> p) {
        ContextEvent e;
        e.crossing_frame = f;
        e.intersection_type = t;
        e.priority = p;
        e.confirmed = true;
        return e;
    };
    v.events = {ev(260, IntersectionType::Unsignalized, Priority::RightOfWay),
                ev(450, IntersectionType::HighwayRamp, Priority::Yield),
                ev(600, IntersectionType::Signalized, std::nullopt)};
    for (FrameIndex f = v.first_frame; f <= v.last_frame(); ++f)
        if (f % 50 != 7)
            v.present_frames.push_back(f);
    v.observers = 3;
    return v;
}

AnnotationDocument annotation_doc(const FixtureVideo& v, bool with_longitudinal) {
    AnnotationDocument doc;
    doc.video_id = v.id;
    doc.first_frame = v.first_frame;
    doc.last_frame = v.last_frame();
    for (const auto& [a, b, lab] : to_runs(v.lateral, v.first_frame))
        if (lab != LateralClass::None)
            doc.lateral.push_back({a, b, lab});
    if (with_longitudinal)
        for (const auto& [a, b, lab] : to_runs(v.longitudinal, v.first_frame))
            doc.longitudinal.push_back({a, b, lab, 0.0});
    doc.context_events = v.events;
    return doc;
}

void write_gaze(const FixtureVideo& v, const FixtureDataset& ds, std::uint64_t seed, const fs::path& dir,
                std::vector<std::string>& rel) {
    const double w = ds.size.width, h = ds.size.height;
    for (std::size_t o = 0; o < v.observers; ++o) {
        std::mt19937_64 rng(seed * 1000003 + o);
        std::normal_distribution<double> noise(0.0, 1.5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::ostringstream os;
        os << "frame,x_px,y_px,event\n";
        for (FrameIndex f = v.first_frame; f <= v.last_frame(); ++f) {
            const double tx = w / 2 + 8.0 * std::sin(static_cast<double>(f) / 40.0);
            const double ty = h / 2 + 4.0 * std::cos(static_cast<double>(f) / 55.0);
            const double r = u(rng);
            char buf[96];
            if (r < 0.80)
                std::snprintf(buf, sizeof buf, "%lld,%.2f,%.2f,fixation\n", static_cast<long long>(f),
                              tx + noise(rng), ty + noise(rng));
            else if (r < 0.88)
                std::snprintf(buf, sizeof buf, "%lld,%.2f,%.2f,saccade\n", static_cast<long long>(f),
                              tx + 6 * noise(rng), ty + 6 * noise(rng));
            else if (r < 0.92)
                std::snprintf(buf, sizeof buf, "%lld,,,blink\n", static_cast<long long>(f));
            else if (r < 0.97)
                std::snprintf(buf, sizeof buf, "%lld,%.2f,%.2f,in_vehicle\n", static_cast<long long>(f),
                              tx + noise(rng), h - 2.0);
            else
                std::snprintf(buf, sizeof buf, "%lld,%.2f,%.2f,offscreen\n", static_cast<long long>(f), w + 20.0,
                              ty);
            os << buf;
        }
        const std::string name = v.id + "_gaze_" + std::to_string(o) + ".csv";
        write_text(dir / name, os.str());
        rel.push_back("gaze/" + name);
    }
}

} // namespace

FixtureDataset write_fixture_dataset(const fs::path& root, const FixtureOptions& opts) {
    FixtureDataset ds;
    ds.root = root;
    fs::remove_all(root);
    fs::create_directories(root);
    ds.videos = {make_video_a(ds.fps), make_video_b(ds.fps)};

    nlohmann::ordered_json manifest;
    manifest["dataset_id"] = "fixture";
    manifest["fps"] = ds.fps;
    manifest["width"] = ds.size.width;
    manifest["height"] = ds.size.height;
    manifest["osm"] = "streets.osm";
    manifest["videos"] = nlohmann::ordered_json::array();

    for (auto& v : ds.videos) {
        // Track positions and telemetry; clip_b drives a separate stretch.
        const double x0 = v.id == "clip_a" ? 0.0 : 2000.0;
        const auto tel = telemetry_from_profile(v.speed_ms, ds.fps, v.first_frame, x0);
        double x = x0;
        for (std::size_t i = 0; i < v.speed_ms.size(); ++i) {
            if (i > 0)
                x += v.speed_ms[i - 1] / ds.fps;
            v.x_m.push_back(x);
        }
        std::ostringstream tcsv;
        tcsv << "frame,t_sec,speed_kmh,lat,lon,heading_deg\n";
        for (const auto& s : tel)
            tcsv << s.frame << ',' << num(s.t_sec) << ',' << num(s.speed_kmh) << ',' << num(s.lat) << ','
                 << num(s.lon) << ',' << num(s.heading_deg) << '\n';
        write_text(root / "telemetry" / (v.id + ".csv"), tcsv.str());

        std::vector<std::string> gaze;
        write_gaze(v, ds, opts.seed + (v.id == "clip_a" ? 0 : 17), root / "gaze", gaze);

        // Frames: a horizontal gradient, with planted exposure faults.
        const fs::path fdir = root / "frames" / v.id;
        fs::create_directories(fdir);
        for (FrameIndex f : v.present_frames) {
            GrayImage img;
            img.width = ds.size.width;
            img.height = ds.size.height;
            img.pixels.resize(std::size_t{img.width} * img.height);
            const bool bright = std::binary_search(v.bright_frames.begin(), v.bright_frames.end(), f);
            const bool dark = std::binary_search(v.dark_frames.begin(), v.dark_frames.end(), f);
            for (std::uint32_t yy = 0; yy < img.height; ++yy)
                for (std::uint32_t xx = 0; xx < img.width; ++xx)
                    img.pixels[std::size_t{yy} * img.width + xx] =
                        bright ? 255 : dark ? 4 : static_cast<std::uint16_t>(60 + 2 * xx + (f % 7));
            write_png_gray(img, fdir / frame_file(f, ".png"));
        }

        // Window homographies: ego-motion as a horizontal drift of 0.5 px per frame.
        std::ostringstream hcsv;
        hcsv << "key_frame,frame,h00,h01,h02,h10,h11,h12,h20,h21,h22\n";
        for (FrameIndex key = v.first_frame; key <= v.last_frame(); ++key)
            for (FrameIndex f = std::max(v.first_frame, key - 12); f <= std::min(v.last_frame(), key + 12); ++f)
                hcsv << key << ',' << f << ",1,0," << num(0.5 * static_cast<double>(key - f)) << ",0,1,0,0,0,1\n";
        write_text(root / "homographies" / (v.id + ".csv"), hcsv.str());

        if (opts.write_annotations)
            write_text(root / "annotations" / (v.id + ".annotations.json"),
                       serialize_annotations(annotation_doc(v, opts.truth_longitudinal)));

        nlohmann::ordered_json jv;
        jv["id"] = v.id;
        jv["telemetry"] = "telemetry/" + v.id + ".csv";
        jv["gaze"] = gaze;
        jv["frames"] = "frames/" + v.id;
        jv["homographies"] = "homographies/" + v.id + ".csv";
        jv["annotations"] = "annotations/" + v.id + ".annotations.json";
        manifest["videos"].push_back(jv);
    }

    const auto& a = ds.videos[0];
    auto at = [&](FrameIndex f) { return a.x_m[static_cast<std::size_t>(f - a.first_frame)]; };
    ds.junctions = {{-80.0, Junction::Ramp},
                    {at(200), Junction::Signalized},
                    {at(640), Junction::Signalized},
                    {at(1100), Junction::Roundabout},
                    {at(1250) + 8.0, Junction::TJunction}};
    ds.osm = root / "streets.osm";
    write_text(ds.osm, street_extract_xml(ds.junctions, -150.0, a.x_m.back() + 150.0));
    ds.manifest = root / "manifest.json";
    write_text(ds.manifest, manifest.dump(2) + "\n");
    return ds;
}

void write_predictions(const FixtureDataset& ds, const fs::path& dir, double sigma, double shift_px) {
    for (const auto& v : ds.videos) {
        const fs::path vdir = dir / v.id;
        fs::create_directories(vdir);
        for (FrameIndex f = v.first_frame; f <= v.last_frame(); ++f) {
            Fixation c;
            c.frame = f;
            c.x = ds.size.width / 2.0 + shift_px * std::sin(static_cast<double>(f) / 25.0);
            c.y = ds.size.height / 2.0;
            write_saliency_map(spatial_gaussian_map({&c, 1}, sigma, ds.size), vdir / frame_file(f, ".smap"));
        }
    }
}

Homography random_homography(std::uint64_t seed, double width, double height) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        const double s = 1.0 + 0.2 * u(rng);
        const double th = 0.2 * u(rng);
        std::array<double, 9> m{s * std::cos(th) + 0.05 * u(rng),
                                -s * std::sin(th) + 0.05 * u(rng),
                                0.1 * width * u(rng),
                                s * std::sin(th) + 0.05 * u(rng),
                                s * std::cos(th) + 0.05 * u(rng),
                                0.1 * height * u(rng),
                                1e-5 * u(rng),
                                1e-5 * u(rng),
                                1.0};
        // Keep the projective denominator well away from zero over the image.
        bool ok = true;
        for (double x : {0.0, width})
            for (double y : {0.0, height})
                ok = ok && m[6] * x + m[7] * y + 1.0 > 0.5;
        if (ok)
            return Homography(m);
    }
}

std::vector<FramePair> make_frame_pairs(const PairOptions& opts) {
    std::vector<FramePair> out;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> ux(0.0, opts.width), uy(0.0, opts.height);
    std::normal_distribution<double> fix_noise(0.0, opts.fixation_noise_px > 0 ? opts.fixation_noise_px : 1.0);
    std::normal_distribution<double> corr_noise(0.0,
                                                opts.correspondence_noise_px > 0 ? opts.correspondence_noise_px : 1.0);
    for (std::size_t p = 0; p < opts.pairs; ++p) {
        FramePair fp;
        fp.pair_id = opts.video_id + "_p" + std::to_string(p);
        fp.video_id = opts.video_id;
        fp.offset = opts.offset;
        const Homography h = random_homography(rng(), opts.width, opts.height);
        for (std::size_t k = 0; k < opts.correspondences; ++k) {
            const Point2 s{ux(rng), uy(rng)};
            Point2 d = project_point(h, s);
            if (opts.correspondence_noise_px > 0) {
                d.x += corr_noise(rng);
                d.y += corr_noise(rng);
            }
            fp.correspondences.push_back({s, d});
        }
        for (std::size_t k = 0; k < opts.fixations; ++k) {
            const Point2 s{ux(rng), uy(rng)};
            Point2 d = project_point(h, s);
            if (opts.fixation_noise_px > 0) {
                d.x += fix_noise(rng);
                d.y += fix_noise(rng);
            }
            fp.fixations.push_back({s, d});
        }
        out.push_back(std::move(fp));
    }
    return out;
}

void write_frame_pairs(std::span<const FramePair> pairs, const fs::path& correspondences,
                       const fs::path& references) {
    std::ostringstream c, r;
    c << "pair_id,src_x,src_y,dst_x,dst_y\n";
    r << "pair_id,video_id,offset,src_x,src_y,dst_x,dst_y\n";
    for (const auto& p : pairs) {
        for (const auto& k : p.correspondences)
            c << p.pair_id << ',' << num(k.src.x) << ',' << num(k.src.y) << ',' << num(k.dst.x) << ','
              << num(k.dst.y) << '\n';
        for (const auto& f : p.fixations)
            r << p.pair_id << ',' << p.video_id << ',' << p.offset << ',' << num(f.src.x) << ',' << num(f.src.y)
              << ',' << num(f.dst.x) << ',' << num(f.dst.y) << '\n';
    }
    write_text(correspondences, c.str());
    write_text(references, r.str());
}

} // namespace fixture
