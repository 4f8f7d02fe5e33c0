#include "gazeaudit/gazeaudit.h"

#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"
#include "gazeaudit/manifest.hpp"
#include "gazeaudit/metrics.hpp"
#include "gazeaudit/pipeline.hpp"
#include "gazeaudit/salmap.hpp"
#include "gazeaudit/service.hpp"

#include <memory>
#include <new>
#include <string>

using namespace gazeaudit;

struct ga_manifest {
    DatasetManifest manifest;
};

struct ga_salmap {
    SaliencyMap map;
};

struct ga_service {
    std::unique_ptr<AnnotationService> service;
};

namespace {

thread_local std::string g_last_error;

ga_status to_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return GA_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return GA_ERR_IO;
    case ErrorCode::Parse: return GA_ERR_PARSE;
    case ErrorCode::Domain: return GA_ERR_DOMAIN;
    case ErrorCode::Degenerate: return GA_ERR_DEGENERATE;
    case ErrorCode::NotFound: return GA_ERR_NOT_FOUND;
    case ErrorCode::Conflict: return GA_ERR_CONFLICT;
    }
    return GA_ERR_INTERNAL;
}

template <class F>
ga_status guard(F&& f) {
    g_last_error.clear();
    try {
        f();
        return GA_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return GA_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return GA_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p)
        fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

std::string str(const char* s) { return s ? s : ""; }

std::string required(const char* s, const char* what) {
    if (!s || !*s)
        fail(ErrorCode::InvalidArgument, std::string(what) + " is required");
    return s;
}

MessageSink make_sink(ga_message_fn fn, void* user) {
    if (!fn)
        return {};
    return [fn, user](const std::string& msg) { fn(msg.c_str(), user); };
}

} // namespace

extern "C" {

const char* ga_version(void) { return GAZEAUDIT_VERSION; }

const char* ga_status_string(ga_status status) {
    switch (status) {
    case GA_OK: return "ok";
    case GA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GA_ERR_IO: return "i/o error";
    case GA_ERR_PARSE: return "parse error";
    case GA_ERR_DOMAIN: return "domain error";
    case GA_ERR_DEGENERATE: return "degenerate input";
    case GA_ERR_NOT_FOUND: return "not found";
    case GA_ERR_CONFLICT: return "conflict";
    case GA_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* ga_last_error(void) { return g_last_error.c_str(); }

ga_status ga_manifest_load(const char* path, ga_manifest** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = new ga_manifest{load_manifest(path)};
    });
}

void ga_manifest_free(ga_manifest* manifest) { delete manifest; }

size_t ga_manifest_video_count(const ga_manifest* manifest) {
    return manifest ? manifest->manifest.videos.size() : 0;
}

ga_status ga_manifest_video_id(const ga_manifest* manifest, size_t index, const char** out) {
    return guard([&] {
        require(manifest, "manifest");
        require(out, "out");
        if (index >= manifest->manifest.videos.size())
            fail(ErrorCode::InvalidArgument, "video index " + std::to_string(index) + " out of range");
        *out = manifest->manifest.videos[index].id.c_str();
    });
}

ga_status ga_manifest_video_range(const ga_manifest* manifest, const char* video_id, int64_t* first,
                                  int64_t* last) {
    return guard([&] {
        require(manifest, "manifest");
        require(video_id, "video_id");
        const auto range = video_frame_range(manifest->manifest.video(video_id));
        if (first)
            *first = range.first;
        if (last)
            *last = range.last;
    });
}

ga_status ga_salmap_create(uint32_t width, uint32_t height, const double* values, ga_salmap** out) {
    return guard([&] {
        require(out, "out");
        if (values) {
            const std::size_t n = static_cast<std::size_t>(width) * height;
            *out = new ga_salmap{SaliencyMap(width, height, std::vector<double>(values, values + n))};
        } else {
            *out = new ga_salmap{SaliencyMap(width, height)};
        }
    });
}

ga_status ga_salmap_read(const char* path, ga_salmap** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = new ga_salmap{read_saliency_map(path)};
    });
}

ga_status ga_salmap_write(const ga_salmap* map, const char* path) {
    return guard([&] {
        require(map, "map");
        require(path, "path");
        write_saliency_map(map->map, path);
    });
}

void ga_salmap_free(ga_salmap* map) { delete map; }

uint32_t ga_salmap_width(const ga_salmap* map) { return map ? map->map.width() : 0; }

uint32_t ga_salmap_height(const ga_salmap* map) { return map ? map->map.height() : 0; }

const double* ga_salmap_data(const ga_salmap* map) { return map ? map->map.values().data() : nullptr; }

ga_status ga_salmap_gaussian(uint32_t width, uint32_t height, const double* xy, size_t count, double sigma,
                             ga_salmap** out) {
    return guard([&] {
        require(out, "out");
        if (count > 0)
            require(xy, "xy");
        std::vector<Fixation> fx(count);
        for (std::size_t i = 0; i < count; ++i) {
            fx[i].x = xy[2 * i];
            fx[i].y = xy[2 * i + 1];
        }
        *out = new ga_salmap{spatial_gaussian_map(fx, sigma, {width, height})};
    });
}

ga_status ga_metric_compute(ga_metric metric, const ga_salmap* prediction, const ga_salmap* ground_truth,
                            const uint32_t* fixations, size_t fixation_count, double kld_epsilon, double* out) {
    bool degenerate = false;
    const ga_status st = guard([&] {
        require(prediction, "prediction");
        require(out, "out");
        MetricValue v;
        switch (metric) {
        case GA_METRIC_KLD:
            require(ground_truth, "ground_truth");
            v = kld(prediction->map, ground_truth->map, kld_epsilon > 0.0 ? kld_epsilon : kDefaultKldEpsilon);
            break;
        case GA_METRIC_CC:
            require(ground_truth, "ground_truth");
            v = cc(prediction->map, ground_truth->map);
            break;
        case GA_METRIC_SIM:
            require(ground_truth, "ground_truth");
            v = sim(prediction->map, ground_truth->map);
            break;
        case GA_METRIC_NSS: {
            if (fixation_count > 0)
                require(fixations, "fixations");
            std::vector<PixelPoint> px(fixation_count);
            for (std::size_t i = 0; i < fixation_count; ++i)
                px[i] = {fixations[2 * i], fixations[2 * i + 1]};
            v = nss(prediction->map, px);
            break;
        }
        default: fail(ErrorCode::InvalidArgument, "unknown metric " + std::to_string(static_cast<int>(metric)));
        }
        *out = v.value;
        degenerate = v.degenerate;
    });
    if (st == GA_OK && degenerate) {
        g_last_error = "metric undefined for constant prediction";
        return GA_ERR_DEGENERATE;
    }
    return st;
}

ga_status ga_metric_list_check(const char* list) {
    return guard([&] {
        require(list, "list");
        parse_metric_list(list);
    });
}

void ga_segment_options_init(ga_segment_options* opts) {
    if (!opts)
        return;
    const SegmentationConfig d;
    *opts = {};
    opts->median_window = d.median_window;
    opts->accel_threshold = d.accel_threshold;
    opts->stop_threshold_kmh = d.stop_threshold_kmh;
    opts->penalty = 0.0;
}

ga_status ga_run_segment(const ga_segment_options* opts, ga_message_fn sink, void* user) {
    return guard([&] {
        require(opts, "opts");
        SegmentCommand cmd;
        cmd.manifest = required(opts->manifest, "manifest");
        cmd.video = required(opts->video, "video");
        cmd.out = required(opts->out, "out");
        cmd.config.median_window = opts->median_window;
        cmd.config.accel_threshold = opts->accel_threshold;
        cmd.config.stop_threshold_kmh = opts->stop_threshold_kmh;
        if (opts->penalty > 0.0)
            cmd.config.penalty = opts->penalty;
        run_segment(cmd, make_sink(sink, user));
    });
}

void ga_salmap_options_init(ga_salmap_options* opts) {
    if (!opts)
        return;
    *opts = {};
    opts->recipe = "bdda";
    opts->window_halfwidth = -1;
}

ga_status ga_run_salmap(const ga_salmap_options* opts, ga_message_fn sink, void* user) {
    return guard([&] {
        require(opts, "opts");
        SalmapCommand cmd;
        cmd.manifest = required(opts->manifest, "manifest");
        cmd.video = required(opts->video, "video");
        cmd.recipe = str(opts->recipe);
        cmd.out_dir = required(opts->out_dir, "out_dir");
        if (opts->sigma_spatial > 0.0)
            cmd.sigma_spatial = opts->sigma_spatial;
        if (opts->sigma_temporal > 0.0)
            cmd.sigma_temporal = opts->sigma_temporal;
        if (opts->window_halfwidth >= 0)
            cmd.window_halfwidth = opts->window_halfwidth;
        cmd.off_frame = opts->reject_off_frame ? OffFramePolicy::Reject : OffFramePolicy::Clamp;
        cmd.keep_in_vehicle = opts->keep_in_vehicle != 0;
        run_salmap(cmd, make_sink(sink, user));
    });
}

void ga_eval_options_init(ga_eval_options* opts) {
    if (!opts)
        return;
    *opts = {};
    opts->by_action = 1;
    opts->by_context = 1;
    opts->kld_epsilon = kDefaultKldEpsilon;
}

ga_status ga_run_eval(const ga_eval_options* opts, ga_message_fn sink, void* user) {
    return guard([&] {
        require(opts, "opts");
        EvalCommand cmd;
        cmd.manifest = required(opts->manifest, "manifest");
        cmd.pred_dir = required(opts->pred_dir, "pred_dir");
        cmd.gt_dir = required(opts->gt_dir, "gt_dir");
        if (opts->metrics && *opts->metrics)
            cmd.metrics = parse_metric_list(opts->metrics);
        cmd.stratify.by_action = opts->by_action != 0;
        cmd.stratify.by_context = opts->by_context != 0;
        cmd.out = required(opts->out, "out");
        if (opts->kld_epsilon > 0.0)
            cmd.kld_epsilon = opts->kld_epsilon;
        cmd.video = str(opts->video);
        run_eval(cmd, make_sink(sink, user));
    });
}

void ga_homaudit_options_init(ga_homaudit_options* opts) {
    if (!opts)
        return;
    const ProtocolOptions d;
    *opts = {};
    opts->mode = GA_HOMAUDIT_DRIVER_TO_SCENE;
    opts->runs = d.runs;
    opts->pairs_per_video = d.pairs_per_video;
    opts->seed = d.seed;
    opts->subset_fraction = d.subset_fraction;
    opts->ransac_threshold = d.ransac_threshold;
    opts->image_width = d.image_width;
}

ga_status ga_run_homaudit(const ga_homaudit_options* opts, ga_message_fn sink, void* user) {
    return guard([&] {
        require(opts, "opts");
        HomauditCommand cmd;
        cmd.mode = opts->mode == GA_HOMAUDIT_TEMPORAL ? HomauditMode::Temporal : HomauditMode::DriverToScene;
        cmd.pairs_file = required(opts->pairs_file, "pairs_file");
        cmd.refs_file = required(opts->refs_file, "refs_file");
        cmd.out = required(opts->out, "out");
        cmd.options.runs = opts->runs;
        cmd.options.pairs_per_video = opts->pairs_per_video;
        cmd.options.seed = opts->seed;
        cmd.options.subset_fraction = opts->subset_fraction;
        cmd.options.ransac_threshold = opts->ransac_threshold;
        cmd.options.image_width = opts->image_width;
        run_homaudit(cmd, make_sink(sink, user));
    });
}

void ga_context_options_init(ga_context_options* opts) {
    if (!opts)
        return;
    *opts = {};
    opts->radius_m = kDefaultMatchRadiusM;
}

ga_status ga_run_context(const ga_context_options* opts, ga_message_fn sink, void* user) {
    return guard([&] {
        require(opts, "opts");
        ContextCommand cmd;
        cmd.manifest = required(opts->manifest, "manifest");
        cmd.osm = str(opts->osm);
        cmd.video = required(opts->video, "video");
        cmd.radius_m = opts->radius_m;
        cmd.out = required(opts->out, "out");
        run_context(cmd, make_sink(sink, user));
    });
}

void ga_audit_options_init(ga_audit_options* opts) {
    if (!opts)
        return;
    *opts = {};
    opts->workers = 1;
}

ga_status ga_run_audit(const ga_audit_options* opts, ga_message_fn sink, void* user) {
    return guard([&] {
        require(opts, "opts");
        AuditCommand cmd;
        cmd.manifest = required(opts->manifest, "manifest");
        cmd.video = str(opts->video);
        cmd.out = required(opts->out, "out");
        cmd.workers = opts->workers;
        run_audit(cmd, make_sink(sink, user));
    });
}

void ga_stats_options_init(ga_stats_options* opts) {
    if (opts)
        *opts = {};
}

ga_status ga_run_stats(const ga_stats_options* opts, ga_message_fn sink, void* user) {
    return guard([&] {
        require(opts, "opts");
        StatsCommand cmd;
        cmd.manifest = required(opts->manifest, "manifest");
        cmd.out = required(opts->out, "out");
        run_stats(cmd, make_sink(sink, user));
    });
}

void ga_service_options_init(ga_service_options* opts) {
    if (!opts)
        return;
    *opts = {};
    opts->host = "127.0.0.1";
    opts->port = 8080;
}

ga_status ga_service_create(const ga_service_options* opts, ga_service** out) {
    return guard([&] {
        require(opts, "opts");
        require(out, "out");
        ServiceConfig cfg;
        cfg.host = opts->host ? opts->host : "127.0.0.1";
        cfg.port = opts->port;
        cfg.manifest = required(opts->manifest, "manifest");
        cfg.read_only = opts->read_only != 0;
        if (opts->token)
            cfg.token = std::string(opts->token);
        *out = new ga_service{std::make_unique<AnnotationService>(std::move(cfg))};
    });
}

ga_status ga_service_start(ga_service* service, int* port) {
    return guard([&] {
        require(service, "service");
        const int p = service->service->start();
        if (port)
            *port = p;
    });
}

void ga_service_stop(ga_service* service) {
    if (service)
        service->service->stop();
}

void ga_service_free(ga_service* service) { delete service; }

} // extern "C"
