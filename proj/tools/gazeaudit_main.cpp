// Command-line front end. Talks to the library only through the C API.

#include "gazeaudit/gazeaudit.h"

#include "CLI11.hpp"

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

void print_message(const char* msg, void*) { std::cerr << msg << '\n'; }

int report(ga_status st) {
    if (st == GA_OK)
        return kExitOk;
    std::cerr << "error: " << ga_status_string(st) << ": " << ga_last_error() << '\n';
    return kExitDomain;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int serve(ga_service_options opts) {
    ga_service* svc = nullptr;
    if (ga_status st = ga_service_create(&opts, &svc); st != GA_OK)
        return report(st);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr); // before the server threads start

    int port = 0;
    if (ga_status st = ga_service_start(svc, &port); st != GA_OK) {
        ga_service_free(svc);
        return report(st);
    }
    std::cerr << "serving on http://" << opts.host << ':' << port << (opts.read_only ? " (read-only)" : "") << '\n';
    int sig = 0;
    sigwait(&set, &sig);
    std::cerr << "stopping\n";
    ga_service_stop(svc);
    ga_service_free(svc);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driver-attention dataset audit toolkit", "gazeaudit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ga_version()));

    auto metric_list = CLI::Validator(
        [](std::string& s) -> std::string {
            return ga_metric_list_check(s.c_str()) == GA_OK ? std::string() : std::string(ga_last_error());
        },
        "METRICS");

    // segment
    ga_segment_options seg;
    ga_segment_options_init(&seg);
    std::string seg_manifest, seg_video, seg_out, seg_penalty = "auto";
    auto* c_seg = app.add_subcommand("segment", "Longitudinal action labels from telemetry");
    c_seg->add_option("--manifest", seg_manifest, "Dataset manifest")->required();
    c_seg->add_option("--video", seg_video, "Video id")->required();
    c_seg->add_option("--out", seg_out, "Annotations file to write")->required();
    c_seg->add_option("--accel-th", seg.accel_threshold, "Acceleration threshold (m/s^2)")->capture_default_str();
    c_seg->add_option("--stop-th", seg.stop_threshold_kmh, "Stopped threshold (km/h)")->capture_default_str();
    c_seg->add_option("--median-window", seg.median_window, "Median filter window (samples)")->capture_default_str();
    c_seg->add_option("--penalty", seg_penalty, "Change-point penalty or 'auto'")
        ->check([](const std::string& s) -> std::string {
            if (s == "auto")
                return {};
            try {
                std::size_t pos = 0;
                const double v = std::stod(s, &pos);
                if (pos == s.size() && v > 0.0)
                    return {};
            } catch (const std::exception&) {
            }
            return "penalty must be 'auto' or a positive number";
        })
        ->capture_default_str();

    // salmap
    ga_salmap_options sal;
    ga_salmap_options_init(&sal);
    std::string sal_manifest, sal_video, sal_recipe, sal_out;
    bool sal_reject = false, sal_keep = false;
    auto* c_sal = app.add_subcommand("salmap", "Ground-truth saliency maps from gaze");
    c_sal->add_option("--recipe", sal_recipe, "bdda, dreyeve or lbw")
        ->required()
        ->check(CLI::IsMember({"bdda", "dreyeve", "lbw"}));
    c_sal->add_option("--manifest", sal_manifest, "Dataset manifest")->required();
    c_sal->add_option("--video", sal_video, "Video id")->required();
    c_sal->add_option("--out-dir", sal_out, "Output directory for SMAP files")->required();
    c_sal->add_option("--sigma-s", sal.sigma_spatial, "Spatial sigma (px)")->check(CLI::PositiveNumber);
    c_sal->add_option("--sigma-t", sal.sigma_temporal, "Temporal sigma (frames)")->check(CLI::PositiveNumber);
    c_sal->add_option("--window", sal.window_halfwidth, "Temporal half-window (frames)")->check(CLI::NonNegativeNumber);
    c_sal->add_flag("--reject-off-frame", sal_reject, "Single-fixation recipe: fail on off-frame gaze");
    c_sal->add_flag("--keep-in-vehicle", sal_keep, "Keep in-vehicle gaze samples");

    // eval
    ga_eval_options ev;
    ga_eval_options_init(&ev);
    std::string ev_manifest, ev_pred, ev_gt, ev_metrics = "kld,cc,sim,nss", ev_stratify = "action,context", ev_out,
                                                ev_video;
    auto* c_ev = app.add_subcommand("eval", "Score predicted maps against ground truth");
    c_ev->add_option("--manifest", ev_manifest, "Dataset manifest")->required();
    c_ev->add_option("--pred-dir", ev_pred, "Predicted maps, one subdirectory per video")->required();
    c_ev->add_option("--gt-dir", ev_gt, "Ground-truth maps, one subdirectory per video")->required();
    c_ev->add_option("--metrics", ev_metrics, "Comma list of kld,cc,sim,nss")
        ->check(metric_list)
        ->capture_default_str();
    c_ev->add_option("--stratify", ev_stratify, "Comma list of action,context or 'none'")
        ->check([](const std::string& s) -> std::string {
            if (s == "none")
                return {};
            std::size_t start = 0;
            while (start <= s.size()) {
                const auto end = std::min(s.find(',', start), s.size());
                const auto tok = s.substr(start, end - start);
                if (tok != "action" && tok != "context")
                    return "unknown stratification '" + tok + "'";
                start = end + 1;
            }
            return {};
        })
        ->capture_default_str();
    c_ev->add_option("--out", ev_out, "Report path (.csv or .md)")->required();
    c_ev->add_option("--kld-eps", ev.kld_epsilon, "KLD regularization epsilon")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_ev->add_option("--video", ev_video, "Restrict to one video");

    // homaudit
    ga_homaudit_options ha;
    ga_homaudit_options_init(&ha);
    std::string ha_mode, ha_pairs, ha_refs, ha_out;
    auto* c_ha = app.add_subcommand("homaudit", "Homography reprojection error protocols");
    c_ha->add_option("--mode", ha_mode, "sd or temporal")->required()->check(CLI::IsMember({"sd", "temporal"}));
    c_ha->add_option("--pairs-file", ha_pairs, "Correspondence CSV")->required();
    c_ha->add_option("--refs-file", ha_refs, "Reference fixation CSV")->required();
    c_ha->add_option("--runs", ha.runs, "Random-subset runs per pair")->capture_default_str();
    c_ha->add_option("--pairs", ha.pairs_per_video, "Frame pairs sampled per video")->capture_default_str();
    c_ha->add_option("--seed", ha.seed, "Master seed")->capture_default_str();
    c_ha->add_option("--subset", ha.subset_fraction, "Correspondence subset fraction")->capture_default_str();
    c_ha->add_option("--ransac-th", ha.ransac_threshold, "RANSAC inlier threshold in px (0 = off)")
        ->capture_default_str();
    c_ha->add_option("--image-width", ha.image_width, "Scene width for eccentricity bins")->capture_default_str();
    c_ha->add_option("--out", ha_out, "Report CSV")->required();

    // context
    ga_context_options cx;
    ga_context_options_init(&cx);
    std::string cx_osm, cx_manifest, cx_video, cx_out;
    auto* c_cx = app.add_subcommand("context", "Suggest intersection events from a street-network extract");
    c_cx->add_option("--osm", cx_osm, "OSM XML extract (default: manifest 'osm')");
    c_cx->add_option("--manifest", cx_manifest, "Dataset manifest")->required();
    c_cx->add_option("--video", cx_video, "Video id")->required();
    c_cx->add_option("--radius", cx.radius_m, "Match radius (m)")->check(CLI::PositiveNumber)->capture_default_str();
    c_cx->add_option("--out", cx_out, "Annotations file to update")->required();

    // audit
    ga_audit_options au;
    ga_audit_options_init(&au);
    std::string au_manifest, au_video, au_out;
    auto* c_au = app.add_subcommand("audit", "Frame, exposure, telemetry and gaze audit");
    c_au->add_option("--manifest", au_manifest, "Dataset manifest")->required();
    c_au->add_option("--video", au_video, "Restrict to one video");
    c_au->add_option("--out", au_out, "Report CSV")->required();
    c_au->add_option("--workers", au.workers, "Image decoding threads")->check(CLI::Range(1u, 64u))->capture_default_str();

    // stats
    std::string st_manifest, st_out;
    auto* c_st = app.add_subcommand("stats", "Task and context distributions");
    c_st->add_option("--manifest", st_manifest, "Dataset manifest")->required();
    c_st->add_option("--out", st_out, "Report CSV")->required();

    // serve
    ga_service_options sv;
    ga_service_options_init(&sv);
    std::string sv_manifest, sv_host = "127.0.0.1";
    bool sv_ro = false;
    auto* c_sv = app.add_subcommand("serve", "Local annotation API (token from GAZEAUDIT_TOKEN)");
    c_sv->add_option("--manifest", sv_manifest, "Dataset manifest")->required();
    c_sv->add_option("--host", sv_host, "Bind address")->capture_default_str();
    c_sv->add_option("--port", sv.port, "Port")->check(CLI::Range(1, 65535))->capture_default_str();
    c_sv->add_flag("--read-only", sv_ro, "Reject writes");

    if (argc < 2) {
        std::cerr << app.help();
        return kExitUsage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*c_seg) {
        seg.manifest = seg_manifest.c_str();
        seg.video = seg_video.c_str();
        seg.out = seg_out.c_str();
        seg.penalty = seg_penalty == "auto" ? 0.0 : std::stod(seg_penalty);
        return report(ga_run_segment(&seg, print_message, nullptr));
    }
    if (*c_sal) {
        sal.manifest = sal_manifest.c_str();
        sal.video = sal_video.c_str();
        sal.recipe = sal_recipe.c_str();
        sal.out_dir = sal_out.c_str();
        sal.reject_off_frame = sal_reject;
        sal.keep_in_vehicle = sal_keep;
        return report(ga_run_salmap(&sal, print_message, nullptr));
    }
    if (*c_ev) {
        ev.manifest = ev_manifest.c_str();
        ev.pred_dir = ev_pred.c_str();
        ev.gt_dir = ev_gt.c_str();
        ev.metrics = ev_metrics.c_str();
        ev.by_action = ev_stratify.find("action") != std::string::npos;
        ev.by_context = ev_stratify.find("context") != std::string::npos;
        ev.out = ev_out.c_str();
        ev.video = opt(ev_video);
        return report(ga_run_eval(&ev, print_message, nullptr));
    }
    if (*c_ha) {
        ha.mode = ha_mode == "temporal" ? GA_HOMAUDIT_TEMPORAL : GA_HOMAUDIT_DRIVER_TO_SCENE;
        ha.pairs_file = ha_pairs.c_str();
        ha.refs_file = ha_refs.c_str();
        ha.out = ha_out.c_str();
        return report(ga_run_homaudit(&ha, print_message, nullptr));
    }
    if (*c_cx) {
        cx.osm = opt(cx_osm);
        cx.manifest = cx_manifest.c_str();
        cx.video = cx_video.c_str();
        cx.out = cx_out.c_str();
        return report(ga_run_context(&cx, print_message, nullptr));
    }
    if (*c_au) {
        au.manifest = au_manifest.c_str();
        au.video = opt(au_video);
        au.out = au_out.c_str();
        return report(ga_run_audit(&au, print_message, nullptr));
    }
    if (*c_st) {
        ga_stats_options so;
        ga_stats_options_init(&so);
        so.manifest = st_manifest.c_str();
        so.out = st_out.c_str();
        return report(ga_run_stats(&so, print_message, nullptr));
    }
    if (*c_sv) {
        sv.manifest = sv_manifest.c_str();
        sv.host = sv_host.c_str();
        sv.read_only = sv_ro;
        const char* token = std::getenv("GAZEAUDIT_TOKEN");
        sv.token = token && *token ? token : nullptr;
        return serve(sv);
    }
    return kExitUsage;
}
