#include "gazeaudit/annotations.hpp"

#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"

#include "json.hpp"

namespace gazeaudit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& source, const std::string& field, const std::string& msg) {
    fail(ErrorCode::Parse, source + ": " + field + ": " + msg);
}

const json& member(const json& obj, const char* key, const std::string& source, const std::string& field) {
    auto it = obj.find(key);
    if (it == obj.end())
        bad(source, field + "." + key, "required field missing");
    return *it;
}

FrameIndex frame_field(const json& obj, const char* key, const std::string& source, const std::string& field) {
    const json& v = member(obj, key, source, field);
    if (!v.is_number_integer())
        bad(source, field + "." + key, "must be an integer frame index");
    return v.get<FrameIndex>();
}

template <class Parse>
auto enum_field(const json& obj, const char* key, const std::string& source, const std::string& field, Parse parse) {
    const json& v = member(obj, key, source, field);
    if (!v.is_string())
        bad(source, field + "." + key, "must be a string");
    try {
        return parse(v.get<std::string>());
    } catch (const Error& e) {
        bad(source, field + "." + key, e.what());
    }
}

const json& array_field(const json& doc, const char* key, const std::string& source) {
    static const json empty = json::array();
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null())
        return empty;
    if (!it->is_array())
        bad(source, key, "must be an array");
    return *it;
}

template <class Run>
void check_runs(const std::vector<Run>& runs, FrameRange range, const char* name) {
    FrameIndex prev_end = range.first - 1;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        const std::string where = std::string(name) + "[" + std::to_string(i) + "]";
        if (r.end_frame < r.start_frame)
            fail(ErrorCode::Domain, where + ": end_frame before start_frame");
        if (!range.contains(r.start_frame) || !range.contains(r.end_frame))
            fail(ErrorCode::Domain, where + ": frames [" + std::to_string(r.start_frame) + "," +
                                        std::to_string(r.end_frame) + "] outside video span [" +
                                        std::to_string(range.first) + "," + std::to_string(range.last) + "]");
        if (r.start_frame <= prev_end)
            fail(ErrorCode::Domain, where + ": overlaps or precedes the previous run");
        prev_end = r.end_frame;
    }
}

} // namespace

std::string serialize_annotations(const AnnotationDocument& doc) {
    ordered_json out;
    out["schema"] = kAnnotationSchema;
    out["video_id"] = doc.video_id;
    out["first_frame"] = doc.first_frame;
    out["last_frame"] = doc.last_frame;
    auto& lon = out["longitudinal"] = ordered_json::array();
    for (const auto& r : doc.longitudinal)
        lon.push_back({{"start_frame", r.start_frame},
                       {"end_frame", r.end_frame},
                       {"label", to_string(r.label)},
                       {"mean_accel", r.mean_accel}});
    auto& lat = out["lateral"] = ordered_json::array();
    for (const auto& r : doc.lateral)
        lat.push_back({{"start_frame", r.start_frame}, {"end_frame", r.end_frame}, {"class", to_string(r.label)}});
    auto& act = out["actions"] = ordered_json::array();
    for (const auto& r : doc.actions)
        act.push_back({{"start_frame", r.start_frame}, {"end_frame", r.end_frame}, {"category", to_string(r.category)}});
    auto& ctx = out["context_events"] = ordered_json::array();
    for (const auto& e : doc.context_events) {
        ordered_json j;
        j["crossing_frame"] = e.crossing_frame;
        j["intersection_type"] = to_string(e.intersection_type);
        j["priority"] = e.priority ? ordered_json(to_string(*e.priority)) : ordered_json(nullptr);
        j["yield_onset_frame"] = e.yield_onset_frame ? ordered_json(*e.yield_onset_frame) : ordered_json(nullptr);
        j["osm_node"] = e.osm_node ? ordered_json(*e.osm_node) : ordered_json(nullptr);
        j["confirmed"] = e.confirmed;
        ctx.push_back(std::move(j));
    }
    return out.dump(2) + "\n";
}

AnnotationDocument parse_annotations(std::string_view text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, source + ": malformed document: " + e.what());
    }
    if (!doc.is_object())
        bad(source, "<root>", "must be an object");
    if (auto it = doc.find("schema"); it != doc.end() && (!it->is_string() || it->get<std::string>() != kAnnotationSchema))
        bad(source, "schema", "unsupported schema (expected " + std::string(kAnnotationSchema) + ")");

    AnnotationDocument a;
    const json& vid = member(doc, "video_id", source, "<root>");
    if (!vid.is_string())
        bad(source, "video_id", "must be a string");
    a.video_id = vid.get<std::string>();
    a.first_frame = frame_field(doc, "first_frame", source, "<root>");
    a.last_frame = frame_field(doc, "last_frame", source, "<root>");

    const auto& lon = array_field(doc, "longitudinal", source);
    for (std::size_t i = 0; i < lon.size(); ++i) {
        const std::string f = "longitudinal[" + std::to_string(i) + "]";
        LongitudinalRun r;
        r.start_frame = frame_field(lon[i], "start_frame", source, f);
        r.end_frame = frame_field(lon[i], "end_frame", source, f);
        r.label = enum_field(lon[i], "label", source, f, parse_longitudinal);
        if (auto it = lon[i].find("mean_accel"); it != lon[i].end() && !it->is_null()) {
            if (!it->is_number())
                bad(source, f + ".mean_accel", "must be a number");
            r.mean_accel = it->get<double>();
        }
        a.longitudinal.push_back(r);
    }
    const auto& lat = array_field(doc, "lateral", source);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const std::string f = "lateral[" + std::to_string(i) + "]";
        a.lateral.push_back({frame_field(lat[i], "start_frame", source, f), frame_field(lat[i], "end_frame", source, f),
                             enum_field(lat[i], "class", source, f, parse_lateral_class)});
    }
    const auto& act = array_field(doc, "actions", source);
    for (std::size_t i = 0; i < act.size(); ++i) {
        const std::string f = "actions[" + std::to_string(i) + "]";
        a.actions.push_back({frame_field(act[i], "start_frame", source, f), frame_field(act[i], "end_frame", source, f),
                             enum_field(act[i], "category", source, f, parse_action_category)});
    }
    const auto& ctx = array_field(doc, "context_events", source);
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        const std::string f = "context_events[" + std::to_string(i) + "]";
        const json& j = ctx[i];
        ContextEvent e;
        e.crossing_frame = frame_field(j, "crossing_frame", source, f);
        e.intersection_type = enum_field(j, "intersection_type", source, f, parse_intersection_type);
        if (auto it = j.find("priority"); it != j.end() && !it->is_null())
            e.priority = enum_field(j, "priority", source, f, parse_priority);
        if (auto it = j.find("yield_onset_frame"); it != j.end() && !it->is_null())
            e.yield_onset_frame = frame_field(j, "yield_onset_frame", source, f);
        if (auto it = j.find("osm_node"); it != j.end() && !it->is_null()) {
            if (!it->is_number_integer())
                bad(source, f + ".osm_node", "must be an integer");
            e.osm_node = it->get<std::int64_t>();
        }
        if (auto it = j.find("confirmed"); it != j.end() && !it->is_null()) {
            if (!it->is_boolean())
                bad(source, f + ".confirmed", "must be a boolean");
            e.confirmed = it->get<bool>();
        }
        a.context_events.push_back(e);
    }
    validate_annotations(a);
    return a;
}

AnnotationDocument read_annotations(const fs::path& path) {
    return parse_annotations(read_file(path), path.string());
}

void write_annotations(const AnnotationDocument& doc, const fs::path& path) {
    validate_annotations(doc);
    write_file_atomic(path, serialize_annotations(doc));
}

void validate_annotations(const AnnotationDocument& doc, std::optional<FrameRange> video_range) {
    if (doc.last_frame < doc.first_frame)
        fail(ErrorCode::Domain, "annotations: last_frame before first_frame");
    const FrameRange span = doc.range();
    if (video_range && (!video_range->contains(span.first) || !video_range->contains(span.last)))
        fail(ErrorCode::Domain, "annotations: span [" + std::to_string(span.first) + "," +
                                    std::to_string(span.last) + "] outside video frames [" +
                                    std::to_string(video_range->first) + "," +
                                    std::to_string(video_range->last) + "]");
    check_runs(doc.longitudinal, span, "longitudinal");
    check_runs(doc.lateral, span, "lateral");
    check_runs(doc.actions, span, "actions");
    for (std::size_t i = 0; i < doc.context_events.size(); ++i) {
        const auto& e = doc.context_events[i];
        const std::string where = "context_events[" + std::to_string(i) + "]";
        if (!span.contains(e.crossing_frame))
            fail(ErrorCode::Domain, where + ": crossing_frame " + std::to_string(e.crossing_frame) + " outside video span");
        if (e.yield_onset_frame) {
            if (*e.yield_onset_frame > e.crossing_frame)
                fail(ErrorCode::Domain, where + ": yield_onset_frame after crossing_frame");
            if (!span.contains(*e.yield_onset_frame))
                fail(ErrorCode::Domain, where + ": yield_onset_frame outside video span");
        }
    }
}

std::vector<LateralClass> lateral_per_frame(const AnnotationDocument& doc) {
    std::vector<LateralClass> out(static_cast<std::size_t>(doc.range().count()), LateralClass::None);
    for (const auto& r : doc.lateral)
        for (FrameIndex f = r.start_frame; f <= r.end_frame; ++f)
            out[static_cast<std::size_t>(f - doc.first_frame)] = r.label;
    return out;
}

std::vector<ActionRun> to_action_runs(FrameIndex first_frame, const std::vector<ActionCategory>& labels) {
    std::vector<ActionRun> runs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const FrameIndex f = first_frame + static_cast<FrameIndex>(i);
        if (!runs.empty() && runs.back().category == labels[i] && runs.back().end_frame == f - 1)
            runs.back().end_frame = f;
        else
            runs.push_back({f, f, labels[i]});
    }
    return runs;
}

} // namespace gazeaudit
