#include "gazeaudit/manifest.hpp"

#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"

#include "json.hpp"

#include <cmath>
#include <set>

namespace gazeaudit {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& msg) {
    fail(ErrorCode::Parse, "manifest: " + field + ": " + msg);
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string get_string(const json& obj, const char* key, const std::string& field, bool required) {
    const json* v = find(obj, key);
    if (!v) {
        if (required)
            schema_error(field + "." + key, "required field missing");
        return {};
    }
    if (!v->is_string())
        schema_error(field + "." + key, "must be a string");
    return v->get<std::string>();
}

std::optional<double> get_number(const json& obj, const char* key, const std::string& field) {
    const json* v = find(obj, key);
    if (!v)
        return std::nullopt;
    if (!v->is_number())
        schema_error(field + "." + key, "must be a number");
    return v->get<double>();
}

std::optional<std::int64_t> get_integer(const json& obj, const char* key, const std::string& field) {
    const json* v = find(obj, key);
    if (!v)
        return std::nullopt;
    if (!v->is_number_integer())
        schema_error(field + "." + key, "must be an integer");
    return v->get<std::int64_t>();
}

std::uint32_t get_dimension(const json& obj, const json& top, const char* key, const std::string& field) {
    auto v = get_integer(obj, key, field);
    if (!v)
        v = get_integer(top, key, "manifest");
    if (!v)
        schema_error(field + "." + key, "required field missing");
    if (*v <= 0 || *v > 65535)
        schema_error(field + "." + key, "must be in 1..65535");
    return static_cast<std::uint32_t>(*v);
}

fs::path resolve(const fs::path& base, const std::string& rel) {
    if (rel.empty())
        return {};
    fs::path p(rel);
    return (p.is_absolute() ? p : base / p).lexically_normal();
}

void require_exists(const fs::path& p, const std::string& field) {
    std::error_code ec;
    if (!p.empty() && !fs::exists(p, ec))
        fail(ErrorCode::NotFound, "manifest: " + field + ": referenced path does not exist: " + p.string());
}

} // namespace

const VideoEntry& DatasetManifest::video(std::string_view id) const {
    for (const auto& v : videos)
        if (v.id == id)
            return v;
    fail(ErrorCode::NotFound, "unknown video id '" + std::string(id) + "'");
}

DatasetManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, std::string("manifest: malformed document: ") + e.what());
    }
    if (!doc.is_object())
        schema_error("<root>", "must be an object");

    DatasetManifest m;
    m.dataset_id = get_string(doc, "dataset_id", "manifest", true);
    if (m.dataset_id.empty())
        schema_error("manifest.dataset_id", "must not be empty");
    m.osm = resolve(base_dir, get_string(doc, "osm", "manifest", false));
    require_exists(m.osm, "manifest.osm");

    const json* videos = find(doc, "videos");
    if (!videos)
        schema_error("manifest.videos", "required field missing");
    if (!videos->is_array())
        schema_error("manifest.videos", "must be an array");

    std::set<std::string> seen;
    for (std::size_t i = 0; i < videos->size(); ++i) {
        const json& jv = (*videos)[i];
        const std::string field = "videos[" + std::to_string(i) + "]";
        if (!jv.is_object())
            schema_error(field, "must be an object");
        VideoEntry v;
        v.id = get_string(jv, "id", field, true);
        if (v.id.empty() || v.id.find_first_of("/\\") != std::string::npos || v.id == "." || v.id == "..")
            schema_error(field + ".id", "must be a non-empty name without path separators");
        if (!seen.insert(v.id).second)
            schema_error(field + ".id", "duplicate video id '" + v.id + "'");

        auto fps = get_number(jv, "fps", field);
        if (!fps)
            fps = get_number(doc, "fps", "manifest");
        if (!fps)
            schema_error(field + ".fps", "required field missing");
        if (!(*fps > 0.0) || !std::isfinite(*fps))
            schema_error(field + ".fps", "must be > 0");
        v.fps = *fps;
        v.image_size = {get_dimension(jv, doc, "width", field), get_dimension(jv, doc, "height", field)};

        v.telemetry = resolve(base_dir, get_string(jv, "telemetry", field, false));
        require_exists(v.telemetry, field + ".telemetry");
        if (const json* g = find(jv, "gaze")) {
            if (g->is_string()) {
                v.gaze.push_back(resolve(base_dir, g->get<std::string>()));
            } else if (g->is_array()) {
                for (const auto& item : *g) {
                    if (!item.is_string())
                        schema_error(field + ".gaze", "entries must be strings");
                    v.gaze.push_back(resolve(base_dir, item.get<std::string>()));
                }
            } else {
                schema_error(field + ".gaze", "must be a string or an array of strings");
            }
            for (const auto& p : v.gaze)
                require_exists(p, field + ".gaze");
        }
        v.frames = resolve(base_dir, get_string(jv, "frames", field, false));
        require_exists(v.frames, field + ".frames");
        v.homographies = resolve(base_dir, get_string(jv, "homographies", field, false));
        require_exists(v.homographies, field + ".homographies");
        v.annotations = resolve(base_dir, get_string(jv, "annotations", field, false));
        v.predictions = resolve(base_dir, get_string(jv, "predictions", field, false));
        v.ground_truth = resolve(base_dir, get_string(jv, "ground_truth", field, false));

        v.first_frame = get_integer(jv, "first_frame", field);
        v.num_frames = get_integer(jv, "num_frames", field);
        if (v.first_frame && *v.first_frame < 0)
            schema_error(field + ".first_frame", "must be >= 0");
        if (v.num_frames && *v.num_frames < 0)
            schema_error(field + ".num_frames", "must be >= 0");
        m.videos.push_back(std::move(v));
    }
    return m;
}

DatasetManifest load_manifest(const fs::path& path) {
    const auto text = read_file(path);
    auto base = fs::absolute(path).parent_path();
    auto m = parse_manifest(text, base);
    m.path = fs::absolute(path).lexically_normal();
    return m;
}

FrameRange video_frame_range(const VideoEntry& video) {
    if (video.num_frames) {
        const FrameIndex first = video.first_frame.value_or(0);
        return {first, first + *video.num_frames - 1};
    }
    if (!video.telemetry.empty()) {
        const auto samples = read_telemetry_csv(video.telemetry);
        if (!samples.empty())
            return {video.first_frame.value_or(samples.front().frame), samples.back().frame};
    }
    if (!video.frames.empty()) {
        const auto files = list_numbered_files(video.frames);
        if (!files.empty())
            return {video.first_frame.value_or(files.begin()->first), files.rbegin()->first};
    }
    fail(ErrorCode::Domain, "video '" + video.id + "' has no declared frame span "
                            "(set num_frames, telemetry or frames)");
}

} // namespace gazeaudit
