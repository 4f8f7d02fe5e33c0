#include "gazeaudit/service.hpp"

#include "gazeaudit/annotations.hpp"
#include "gazeaudit/context.hpp"
#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"
#include "gazeaudit/manifest.hpp"
#include "gazeaudit/pipeline.hpp"

#include "httplib.h"
#include "json.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <thread>

namespace gazeaudit {

namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse: return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Domain: return 422;
    case ErrorCode::Degenerate: return 422;
    case ErrorCode::Io: return 500;
    }
    return 500;
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(json{{"error", msg}, {"status", status}}.dump(), "application/json");
}

std::string content_type_for(const fs::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".png")
        return "image/png";
    if (ext == ".jpg" || ext == ".jpeg")
        return "image/jpeg";
    return "application/octet-stream";
}

fs::path revision_path(const fs::path& doc) { return fs::path(doc.string() + ".rev"); }

std::int64_t read_revision(const fs::path& doc) {
    const auto rp = revision_path(doc);
    if (!fs::exists(rp))
        return fs::exists(doc) ? 1 : 0;
    const std::string text = read_file(rp);
    try {
        return std::stoll(text);
    } catch (const std::exception&) {
        fail(ErrorCode::Parse, "corrupt revision file " + rp.string());
    }
}

} // namespace

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535)
        fail(ErrorCode::InvalidArgument, "port must be in [0, 65535], got " + std::to_string(port));
    if (token && token->empty())
        fail(ErrorCode::InvalidArgument, "auth token must not be empty");
    segmentation.validate();
    if (!(match_radius_m > 0.0))
        fail(ErrorCode::InvalidArgument, "match radius must be > 0");
}

struct AnnotationService::Impl {
    ServiceConfig config;
    DatasetManifest manifest;
    httplib::Server server;
    std::thread thread;
    int bound_port = 0;

    std::map<std::string, std::unique_ptr<std::shared_mutex>, std::less<>> locks;
    std::mutex cache_mutex;
    std::map<std::string, std::map<FrameIndex, fs::path>, std::less<>> frame_cache;
    std::optional<StreetGraph> graph;
    bool graph_loaded = false;

    explicit Impl(ServiceConfig cfg) : config(std::move(cfg)), manifest(load_manifest(config.manifest)) {
        for (const auto& v : manifest.videos)
            locks.emplace(v.id, std::make_unique<std::shared_mutex>());
        routes();
    }

    std::shared_mutex& lock_for(const std::string& id) { return *locks.at(id); }

    const std::map<FrameIndex, fs::path>& frames(const VideoEntry& v) {
        std::lock_guard lk(cache_mutex);
        auto it = frame_cache.find(v.id);
        if (it == frame_cache.end())
            it = frame_cache.emplace(v.id, v.frames.empty() ? std::map<FrameIndex, fs::path>{}
                                                             : list_numbered_files(v.frames))
                     .first;
        return it->second;
    }

    const StreetGraph* street_graph() {
        std::lock_guard lk(cache_mutex);
        if (!graph_loaded) {
            graph_loaded = true;
            if (!manifest.osm.empty())
                graph = parse_osm_extract(manifest.osm);
        }
        return graph ? &*graph : nullptr;
    }

    json describe(const VideoEntry& v) {
        const auto range = video_frame_range(v);
        return json{{"id", v.id},
                    {"fps", v.fps},
                    {"width", v.image_size.width},
                    {"height", v.image_size.height},
                    {"first_frame", range.first},
                    {"last_frame", range.last}};
    }

    template <class F>
    httplib::Server::Handler guarded(F&& f) {
        return [this, f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_error(res, http_status(e.code()), e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        };
    }

    void routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Authorization, Content-Type, X-Base-Revision"},
                                    {"Access-Control-Allow-Methods", "GET, PUT, OPTIONS"},
                                    {"Access-Control-Expose-Headers", "X-Revision"}});

        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (req.method == "OPTIONS") {
                res.status = 204;
                return httplib::Server::HandlerResponse::Handled;
            }
            if (config.token && req.get_header_value("Authorization") != "Bearer " + *config.token) {
                send_error(res, 401, "missing or invalid bearer token");
                return httplib::Server::HandlerResponse::Handled;
            }
            return httplib::Server::HandlerResponse::Unhandled;
        });

        server.Get("/videos", guarded([this](const httplib::Request&, httplib::Response& res) {
                       json out = json::array();
                       for (const auto& v : manifest.videos)
                           out.push_back(describe(v));
                       res.set_content(out.dump(2), "application/json");
                   }));

        server.Get(R"(/videos/([^/]+)/meta)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto& v = manifest.video(req.matches[1].str());
                       json out = describe(v);
                       out["frame_images"] = frames(v).size();
                       out["has_telemetry"] = !v.telemetry.empty();
                       out["observers"] = v.gaze.size();
                       out["read_only"] = config.read_only;
                       res.set_content(out.dump(2), "application/json");
                   }));

        server.Get(R"(/videos/([^/]+)/frames/(-?\d+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto& v = manifest.video(req.matches[1].str());
                       const FrameIndex n = std::stoll(req.matches[2].str());
                       const auto& fr = frames(v);
                       auto it = fr.find(n);
                       if (it == fr.end())
                           fail(ErrorCode::NotFound,
                                "video '" + v.id + "' has no image for frame " + std::to_string(n));
                       res.set_content(read_file(it->second), content_type_for(it->second));
                   }));

        server.Get(R"(/videos/([^/]+)/telemetry)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto& v = manifest.video(req.matches[1].str());
                       if (v.telemetry.empty())
                           fail(ErrorCode::NotFound, "video '" + v.id + "' has no telemetry");
                       json out = json::array();
                       for (const auto& s : read_telemetry_csv(v.telemetry))
                           out.push_back({{"frame", s.frame},
                                          {"t_sec", s.t_sec},
                                          {"speed_kmh", s.speed_kmh},
                                          {"lat", number_or_null(s.lat)},
                                          {"lon", number_or_null(s.lon)},
                                          {"heading_deg", number_or_null(s.heading_deg)}});
                       res.set_content(out.dump(), "application/json");
                   }));

        server.Get(R"(/videos/([^/]+)/annotations)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto& v = manifest.video(req.matches[1].str());
                       const auto path = annotation_path(manifest, v);
                       std::shared_lock lk(lock_for(v.id));
                       std::string body;
                       if (fs::exists(path)) {
                           body = read_file(path);
                       } else {
                           AnnotationDocument doc;
                           doc.video_id = v.id;
                           const auto range = video_frame_range(v);
                           doc.first_frame = range.first;
                           doc.last_frame = range.last;
                           body = serialize_annotations(doc);
                       }
                       res.set_header("X-Revision", std::to_string(read_revision(path)));
                       res.set_content(body, "application/json");
                   }));

        server.Put(R"(/videos/([^/]+)/annotations)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto& v = manifest.video(req.matches[1].str());
                       if (config.read_only)
                           return send_error(res, 403, "service is read-only");
                       if (!req.has_header("X-Base-Revision"))
                           return send_error(res, 428, "X-Base-Revision header required");
                       std::int64_t base = 0;
                       try {
                           base = std::stoll(req.get_header_value("X-Base-Revision"));
                       } catch (const std::exception&) {
                           return send_error(res, 400, "X-Base-Revision must be an integer");
                       }
                       const AnnotationDocument doc = parse_annotations(req.body, "request body");
                       if (doc.video_id != v.id)
                           return send_error(res, 400, "document video_id '" + doc.video_id +
                                                           "' does not match '" + v.id + "'");
                       validate_annotations(doc, video_frame_range(v));

                       const auto path = annotation_path(manifest, v);
                       std::unique_lock lk(lock_for(v.id));
                       const std::int64_t current = read_revision(path);
                       if (base != current) {
                           res.set_header("X-Revision", std::to_string(current));
                           return send_error(res, 409, "stale revision " + std::to_string(base) + ", current is " +
                                                           std::to_string(current));
                       }
                       const std::int64_t next = current + 1;
                       fs::create_directories(path.parent_path());
                       write_file_atomic(path, req.body);
                       write_file_atomic(revision_path(path), std::to_string(next) + "\n");
                       res.set_header("X-Revision", std::to_string(next));
                       res.set_content(json{{"revision", next}}.dump(), "application/json");
                   }));

        server.Get(R"(/videos/([^/]+)/suggestions)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto& v = manifest.video(req.matches[1].str());
                       AnnotationDocument doc = segment_video(v, config.segmentation);
                       if (const StreetGraph* g = street_graph()) {
                           for (const auto& e : suggest_video_context(v, *g, config.match_radius_m))
                               if (doc.range().contains(e.crossing_frame))
                                   doc.context_events.push_back(e);
                       }
                       res.set_content(serialize_annotations(doc), "application/json");
                   }));

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty())
                send_error(res, res.status, res.status == 404 ? "no such endpoint" : "request failed");
        });
    }
};

AnnotationService::AnnotationService(ServiceConfig config) {
    config.validate();
    impl_ = std::make_unique<Impl>(std::move(config));
}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::start() {
    if (impl_->thread.joinable())
        fail(ErrorCode::Conflict, "service already started");
    auto& cfg = impl_->config;
    if (cfg.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(cfg.host);
        if (impl_->bound_port < 0)
            fail(ErrorCode::Io, "cannot bind " + cfg.host);
    } else {
        if (!impl_->server.bind_to_port(cfg.host, cfg.port))
            fail(ErrorCode::Io, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port) + " (port in use?)");
        impl_->bound_port = cfg.port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->bound_port;
}

void AnnotationService::stop() {
    if (!impl_)
        return;
    if (impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

int AnnotationService::port() const { return impl_->bound_port; }

bool AnnotationService::running() const { return impl_->server.is_running(); }

} // namespace gazeaudit
