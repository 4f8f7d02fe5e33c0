#include "gazeaudit/pipeline.hpp"

#include "gazeaudit/annotations.hpp"
#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace gazeaudit {

namespace {

void note(const MessageSink& sink, const std::string& msg) {
    if (sink)
        sink(msg);
}

std::string frame_name(FrameIndex f, std::string_view ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(f));
    return std::string(buf) + std::string(ext);
}

std::vector<const VideoEntry*> select_videos(const DatasetManifest& m, const std::string& id) {
    std::vector<const VideoEntry*> out;
    if (!id.empty()) {
        out.push_back(&m.video(id));
        return out;
    }
    for (const auto& v : m.videos)
        out.push_back(&v);
    return out;
}

void require_dir(const std::filesystem::path& dir, const std::string& what) {
    if (!std::filesystem::is_directory(dir))
        fail(ErrorCode::NotFound, what + " directory not found: " + dir.string());
}

std::string csv_num(double v) { return format_double(v); }

std::map<FrameIndex, std::vector<Fixation>> by_frame(const std::vector<std::vector<Fixation>>& observers) {
    std::map<FrameIndex, std::vector<Fixation>> out;
    for (const auto& obs : observers)
        for (const auto& f : obs)
            out[f.frame].push_back(f);
    return out;
}

} // namespace

std::filesystem::path annotation_path(const DatasetManifest& manifest, const VideoEntry& video) {
    if (!video.annotations.empty())
        return video.annotations;
    return manifest.path.parent_path() / (video.id + ".annotations.json");
}

AnnotationDocument segment_video(const VideoEntry& video, const SegmentationConfig& cfg) {
    if (video.telemetry.empty())
        fail(ErrorCode::NotFound, "video '" + video.id + "' has no telemetry file");
    const auto samples = read_telemetry_csv(video.telemetry);
    if (samples.empty())
        fail(ErrorCode::Domain, "video '" + video.id + "': telemetry is empty");
    const auto result = segment_telemetry(samples, video.fps, cfg);
    AnnotationDocument doc;
    doc.video_id = video.id;
    doc.first_frame = result.series.first_frame;
    doc.last_frame = result.series.last_frame();
    for (const auto& s : result.segments)
        doc.longitudinal.push_back({s.start_frame, s.end_frame, s.longitudinal, s.mean_accel});
    return doc;
}

std::vector<ContextEvent> suggest_video_context(const VideoEntry& video, const StreetGraph& graph, double radius_m,
                                                const MessageSink& sink) {
    if (video.telemetry.empty())
        fail(ErrorCode::NotFound, "video '" + video.id + "' has no telemetry file");
    const auto samples = read_telemetry_csv(video.telemetry);
    if (samples.empty())
        fail(ErrorCode::Domain, "video '" + video.id + "': telemetry is empty");
    const auto candidates = find_intersection_candidates(graph);
    const auto match = find_route_intersections(samples, candidates, graph.bounds, radius_m);
    if (match.outside_extract)
        note(sink, "warning: video '" + video.id + "': track lies entirely outside the extract bounds");
    return suggest_context_events(match);
}

std::vector<std::vector<Fixation>> load_observer_fixations(const VideoEntry& video, bool keep_in_vehicle) {
    std::vector<GazeEvent> drop(kDefaultDroppedEvents.begin(), kDefaultDroppedEvents.end());
    if (keep_in_vehicle)
        drop.erase(std::remove(drop.begin(), drop.end(), GazeEvent::InVehicle), drop.end());
    std::vector<std::vector<Fixation>> out;
    for (const auto& path : video.gaze) {
        const auto samples = read_gaze_csv(path);
        out.push_back(filter_gaze(samples, drop).fixations);
    }
    return out;
}

void run_segment(const SegmentCommand& cmd, const MessageSink& sink) {
    cmd.config.validate();
    const auto manifest = load_manifest(cmd.manifest);
    const auto& video = manifest.video(cmd.video);
    AnnotationDocument doc = segment_video(video, cmd.config);
    if (std::filesystem::exists(cmd.out)) {
        // Manual labels survive re-segmentation when the span is unchanged.
        const auto previous = read_annotations(cmd.out);
        if (previous.first_frame == doc.first_frame && previous.last_frame == doc.last_frame) {
            doc.lateral = previous.lateral;
            doc.context_events = previous.context_events;
        } else {
            note(sink, "warning: existing annotations at " + cmd.out.string() +
                           " cover a different span; manual labels were not carried over");
        }
    }
    doc.actions = to_action_runs(doc.first_frame, effective_actions(doc));
    validate_annotations(doc);
    write_annotations(doc, cmd.out);
    note(sink, "segment: " + std::to_string(doc.longitudinal.size()) + " longitudinal runs for '" + video.id + "'");
}

SalmapSummary run_salmap(const SalmapCommand& cmd, const MessageSink& sink) {
    RecipeConfig cfg = recipe_defaults(cmd.recipe);
    if (cmd.sigma_spatial)
        cfg.sigma_spatial = *cmd.sigma_spatial;
    if (cmd.sigma_temporal)
        cfg.sigma_temporal = *cmd.sigma_temporal;
    if (cmd.window_halfwidth)
        cfg.window_halfwidth = *cmd.window_halfwidth;
    cfg.off_frame = cmd.off_frame;
    cfg.validate();

    const auto manifest = load_manifest(cmd.manifest);
    const auto& video = manifest.video(cmd.video);
    if (video.gaze.empty())
        fail(ErrorCode::NotFound, "video '" + video.id + "' has no gaze file");
    if (video.image_size.width == 0 || video.image_size.height == 0)
        fail(ErrorCode::Domain, "video '" + video.id + "' has no image size");
    const auto range = video_frame_range(video);
    const auto observers = load_observer_fixations(video, cmd.keep_in_vehicle);
    std::filesystem::create_directories(cmd.out_dir);

    SalmapSummary summary;
    const ImageSize size = video.image_size;
    auto emit = [&](FrameIndex f, const SaliencyMap& m) {
        write_saliency_map(m, cmd.out_dir / frame_name(f, ".smap"));
        ++summary.written;
    };

    switch (cfg.recipe) {
    case Recipe::MultiObserver:
        for (FrameIndex f = range.first; f <= range.last; ++f) {
            const SaliencyMap raw = multi_observer_raw(observers, f, size, cfg.sigma_spatial, cfg.sigma_temporal);
            if (!(raw.sum() > 0.0)) {
                summary.skipped.push_back(f);
                continue;
            }
            emit(f, raw.normalized_sum());
        }
        break;
    case Recipe::TemporalWindow: {
        WindowHomographies hs;
        if (!video.homographies.empty())
            hs = read_window_homographies(video.homographies);
        else if (cfg.window_halfwidth > 0)
            fail(ErrorCode::NotFound, "video '" + video.id + "' has no homographies file (needed for window " +
                                          std::to_string(cfg.window_halfwidth) + ")");
        std::vector<Fixation> all;
        for (const auto& obs : observers)
            all.insert(all.end(), obs.begin(), obs.end());
        std::stable_sort(all.begin(), all.end(), [](const Fixation& a, const Fixation& b) { return a.frame < b.frame; });
        for (FrameIndex f = range.first; f <= range.last; ++f) {
            const auto lo = std::lower_bound(all.begin(), all.end(), f - cfg.window_halfwidth,
                                             [](const Fixation& a, FrameIndex v) { return a.frame < v; });
            const auto hi = std::upper_bound(all.begin(), all.end(), f + cfg.window_halfwidth,
                                             [](FrameIndex v, const Fixation& a) { return v < a.frame; });
            if (lo == hi) {
                summary.skipped.push_back(f);
                continue;
            }
            try {
                emit(f, temporal_window_map({&*lo, static_cast<std::size_t>(hi - lo)}, hs, f, cfg.window_halfwidth,
                                            cfg.sigma_spatial, size));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Degenerate)
                    throw;
                summary.skipped.push_back(f);
            }
        }
        break;
    }
    case Recipe::SingleFixation: {
        const auto frames = by_frame(observers);
        for (FrameIndex f = range.first; f <= range.last; ++f) {
            auto it = frames.find(f);
            if (it == frames.end()) {
                summary.skipped.push_back(f);
                continue;
            }
            emit(f, single_fixation_map(it->second.front(), cfg.sigma_spatial, size, cfg.off_frame));
        }
        break;
    }
    }
    note(sink, "salmap: wrote " + std::to_string(summary.written) + " maps, skipped " +
                   std::to_string(summary.skipped.size()) + " frames without gaze");
    return summary;
}

StratifiedReport run_eval(const EvalCommand& cmd, const MessageSink& sink) {
    if (cmd.metrics.empty())
        fail(ErrorCode::InvalidArgument, "no metric selected");
    require_dir(cmd.pred_dir, "prediction");
    require_dir(cmd.gt_dir, "ground-truth");
    const auto manifest = load_manifest(cmd.manifest);
    const bool need_labels = cmd.stratify.by_action || cmd.stratify.by_context;

    std::vector<EvaluatedFrame> frames;
    for (const VideoEntry* video : select_videos(manifest, cmd.video)) {
        const auto gt_files = list_numbered_files(cmd.gt_dir / video->id);
        if (gt_files.empty()) {
            note(sink, "warning: no ground-truth maps for video '" + video->id + "'");
            continue;
        }
        require_dir(cmd.pred_dir / video->id, "prediction");
        const auto pred_files = list_numbered_files(cmd.pred_dir / video->id);
        std::vector<FrameIndex> missing;
        for (const auto& [f, p] : gt_files)
            if (!pred_files.count(f))
                missing.push_back(f);
        if (!missing.empty()) {
            std::string list;
            for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
                list += (i ? "," : "") + std::to_string(missing[i]);
            if (missing.size() > 20)
                list += ",...";
            fail(ErrorCode::NotFound, "video '" + video->id + "': " + std::to_string(missing.size()) +
                                          " prediction maps missing in " + (cmd.pred_dir / video->id).string() +
                                          " (frames " + list + ")");
        }

        std::optional<AnnotationDocument> doc;
        std::vector<ActionCategory> actions;
        std::vector<ScenarioWindow> windows;
        if (need_labels) {
            const auto path = annotation_path(manifest, *video);
            if (!std::filesystem::exists(path))
                fail(ErrorCode::NotFound, "video '" + video->id + "': annotations not found: " + path.string());
            doc = read_annotations(path);
            actions = effective_actions(*doc);
            windows = build_scenario_windows(video->id, doc->context_events, video->fps, doc->first_frame,
                                             doc->last_frame);
        }
        std::map<FrameIndex, std::vector<Fixation>> fixations;
        if (!video->gaze.empty())
            fixations = by_frame(load_observer_fixations(*video));

        for (const auto& [f, gt_path] : gt_files) {
            EvaluatedFrame ef;
            ef.video_id = video->id;
            ef.frame = f;
            if (doc) {
                if (!doc->range().contains(f))
                    fail(ErrorCode::Domain, "video '" + video->id + "': frame " + std::to_string(f) +
                                                " lies outside the annotated span");
                ef.action = actions[static_cast<std::size_t>(f - doc->first_frame)];
                for (const auto& w : windows)
                    if (f >= w.first && f <= w.last)
                        ef.context_classes.push_back(context_class_index(w.type, w.priority));
            }
            if (ef.action == ActionCategory::Excluded)
                continue;
            const SaliencyMap gt = read_saliency_map(gt_path);
            const SaliencyMap pred = read_saliency_map(pred_files.at(f));
            std::vector<PixelPoint> pixels;
            if (video->gaze.empty()) {
                pixels = argmax_pixels(gt);
            } else if (auto it = fixations.find(f); it != fixations.end()) {
                pixels = fixation_pixels(it->second, {gt.width(), gt.height()});
            }
            ef.scores = score_frame(pred, gt, pixels, cmd.metrics, cmd.kld_epsilon);
            frames.push_back(std::move(ef));
        }
    }
    StratifiedReport report = stratified_eval(frames, cmd.metrics, cmd.stratify);
    const bool markdown = cmd.out.extension() == ".md";
    write_file_atomic(cmd.out, markdown ? report_to_markdown(report) : report_to_csv(report));
    note(sink, "eval: " + std::to_string(frames.size()) + " frames evaluated");
    return report;
}

ErrorReport run_homaudit(const HomauditCommand& cmd, const MessageSink& sink) {
    cmd.options.validate();
    const auto pairs = read_frame_pairs(cmd.pairs_file, cmd.refs_file);
    ErrorReport report = cmd.mode == HomauditMode::DriverToScene ? sd_error_protocol(pairs, cmd.options)
                                                                   : temporal_window_error(pairs, cmd.options);
    write_file_atomic(cmd.out, error_report_csv(report, cmd.mode));
    note(sink, "homaudit: " + std::to_string(report.pairs_used) + " pairs, " + std::to_string(report.errors.size()) +
                   " errors");
    return report;
}

void run_context(const ContextCommand& cmd, const MessageSink& sink) {
    const auto manifest = load_manifest(cmd.manifest);
    const auto& video = manifest.video(cmd.video);
    const auto osm = cmd.osm.empty() ? manifest.osm : cmd.osm;
    if (osm.empty())
        fail(ErrorCode::InvalidArgument, "no street-network extract given (use --osm or the manifest 'osm' field)");
    const StreetGraph graph = parse_osm_extract(osm);
    const auto suggestions = suggest_video_context(video, graph, cmd.radius_m, sink);

    AnnotationDocument doc;
    if (std::filesystem::exists(cmd.out)) {
        doc = read_annotations(cmd.out);
        if (doc.video_id != video.id)
            fail(ErrorCode::Conflict, cmd.out.string() + " belongs to video '" + doc.video_id + "'");
    } else {
        const auto range = video_frame_range(video);
        doc.video_id = video.id;
        doc.first_frame = range.first;
        doc.last_frame = range.last;
    }
    std::vector<ContextEvent> in_span;
    for (const auto& e : suggestions)
        if (doc.range().contains(e.crossing_frame))
            in_span.push_back(e);
    const auto tolerance = static_cast<FrameIndex>(std::llround(video.fps));
    doc.context_events = merge_context_events(doc.context_events, in_span, tolerance);
    validate_annotations(doc);
    write_annotations(doc, cmd.out);
    note(sink, "context: " + std::to_string(in_span.size()) + " suggested events for '" + video.id + "'");
}

void run_audit(const AuditCommand& cmd, const MessageSink& sink) {
    const auto manifest = load_manifest(cmd.manifest);
    std::ostringstream os;
    os << "video_id,span_frames,present_frames,missing_frames,missing_fraction,segments,min_segment,max_segment,"
          "overexposed,overexposed_fraction,underexposed,underexposed_fraction,undecodable,"
          "telemetry_rate_hz,telemetry_gaps,telemetry_gap_s,telemetry_low_confidence,gaze_samples";
    for (GazeEvent e : kAllGazeEvents)
        os << ",gaze_" << to_string(e);
    for (ActionCategory a : kReportedActions)
        os << ",missing_" << to_string(a);
    os << '\n';

    struct Totals {
        std::size_t span = 0, present = 0, missing = 0, segments = 0, exposure_frames = 0, over = 0, under = 0,
                    undecodable = 0, tgaps = 0, gaze = 0;
        double tgap_s = 0.0;
        std::array<std::size_t, kAllGazeEvents.size()> gaze_counts{};
        ActionGapTable actions{};
    } tot;

    for (const VideoEntry* video : select_videos(manifest, cmd.video)) {
        os << video->id;
        // Frame gaps and exposure.
        std::map<FrameIndex, std::filesystem::path> files;
        if (!video->frames.empty())
            files = list_numbered_files(video->frames);
        std::optional<GapReport> gaps;
        if (!files.empty()) {
            std::vector<FrameIndex> idx;
            for (const auto& [f, p] : files)
                idx.push_back(f);
            std::optional<FrameRange> declared;
            if (video->num_frames)
                declared = video_frame_range(*video);
            gaps = detect_frame_gaps(idx, declared);
            FrameIndex mn = gaps->segments.front().length(), mx = mn;
            for (const auto& s : gaps->segments) {
                mn = std::min(mn, s.length());
                mx = std::max(mx, s.length());
            }
            os << ',' << gaps->span << ',' << gaps->present << ',' << gaps->missing << ','
               << csv_num(gaps->missing_fraction) << ',' << gaps->segments.size() << ',' << mn << ',' << mx;
            tot.span += gaps->span;
            tot.present += gaps->present;
            tot.missing += gaps->missing;
            tot.segments += gaps->segments.size();
            const auto ex = exposure_audit(files, cmd.exposure, cmd.workers);
            for (const auto& [f, why] : ex.undecodable)
                note(sink, "warning: video '" + video->id + "': frame " + std::to_string(f) + " undecodable: " + why);
            os << ',' << ex.overexposed << ',' << csv_num(ex.overexposed_fraction) << ',' << ex.underexposed << ','
               << csv_num(ex.underexposed_fraction) << ',' << ex.undecodable.size();
            tot.exposure_frames += ex.frames;
            tot.over += ex.overexposed;
            tot.under += ex.underexposed;
            tot.undecodable += ex.undecodable.size();
        } else {
            os << ",,,,,,,,,,,,";
        }
        // Telemetry.
        std::vector<TelemetrySample> samples;
        if (!video->telemetry.empty())
            samples = read_telemetry_csv(video->telemetry);
        if (samples.size() >= 2) {
            const auto tr = validate_telemetry(samples, video->fps);
            double gap_s = 0.0;
            for (const auto& g : tr.gaps)
                gap_s += g.duration_s;
            os << ',' << csv_num(tr.rate_hz) << ',' << tr.gaps.size() << ',' << csv_num(gap_s) << ','
               << (tr.low_confidence ? 1 : 0);
            tot.tgaps += tr.gaps.size();
            tot.tgap_s += gap_s;
        } else {
            os << ",,,,";
        }
        // Gaze composition.
        std::vector<GazeSample> gaze;
        for (const auto& p : video->gaze) {
            auto s = read_gaze_csv(p);
            gaze.insert(gaze.end(), s.begin(), s.end());
        }
        if (!gaze.empty()) {
            const auto gc = gaze_composition(gaze);
            os << ',' << gc.total;
            for (GazeEvent e : kAllGazeEvents)
                os << ',' << csv_num(gc.fraction(e));
            tot.gaze += gc.total;
            for (std::size_t k = 0; k < gc.counts.size(); ++k)
                tot.gaze_counts[k] += gc.counts[k];
        } else {
            os << ',';
            for (std::size_t k = 0; k < kAllGazeEvents.size(); ++k)
                os << ',';
        }
        // Missing frames per action.
        const auto ann = annotation_path(manifest, *video);
        if (gaps && std::filesystem::exists(ann)) {
            const auto doc = read_annotations(ann);
            const auto actions = effective_actions(doc);
            std::vector<std::pair<FrameIndex, ActionCategory>> labels;
            for (const auto& [f, p] : files)
                if (doc.range().contains(f))
                    labels.emplace_back(f, actions[static_cast<std::size_t>(f - doc.first_frame)]);
            if (labels.empty()) {
                for (std::size_t k = 0; k < kReportedActions.size(); ++k)
                    os << ',';
            } else {
                const auto table = per_action_gap_fractions(*gaps, labels);
                for (ActionCategory a : kReportedActions) {
                    const auto& c = table[static_cast<std::size_t>(a)];
                    os << ',' << csv_num(c.fraction);
                    tot.actions[static_cast<std::size_t>(a)].frames += c.frames;
                    tot.actions[static_cast<std::size_t>(a)].missing += c.missing;
                }
            }
        } else {
            for (std::size_t k = 0; k < kReportedActions.size(); ++k)
                os << ',';
        }
        os << '\n';
    }

    const auto frac = [](std::size_t a, std::size_t b) {
        return b == 0 ? std::string() : csv_num(static_cast<double>(a) / static_cast<double>(b));
    };
    os << "ALL," << tot.span << ',' << tot.present << ',' << tot.missing << ',' << frac(tot.missing, tot.span) << ','
       << tot.segments << ",,," << tot.over << ',' << frac(tot.over, tot.exposure_frames) << ',' << tot.under << ','
       << frac(tot.under, tot.exposure_frames) << ',' << tot.undecodable << ",," << tot.tgaps << ','
       << csv_num(tot.tgap_s) << ",," << tot.gaze;
    for (std::size_t k = 0; k < kAllGazeEvents.size(); ++k)
        os << ',' << frac(tot.gaze_counts[k], tot.gaze);
    for (ActionCategory a : kReportedActions) {
        const auto& c = tot.actions[static_cast<std::size_t>(a)];
        os << ',' << frac(c.missing, c.frames);
    }
    os << '\n';
    write_file_atomic(cmd.out, os.str());
}

void run_stats(const StatsCommand& cmd, const MessageSink& sink) {
    const auto manifest = load_manifest(cmd.manifest);
    std::vector<std::vector<ActionCategory>> per_video;
    std::vector<ContextEvent> events;
    for (const auto& video : manifest.videos) {
        const auto path = annotation_path(manifest, video);
        if (!std::filesystem::exists(path))
            fail(ErrorCode::NotFound, "video '" + video.id + "': annotations not found: " + path.string());
        const auto doc = read_annotations(path);
        per_video.push_back(effective_actions(doc));
        events.insert(events.end(), doc.context_events.begin(), doc.context_events.end());
    }
    const auto actions = action_statistics(per_video);
    const auto context = context_statistics(events);
    if (context.unlabeled > 0)
        note(sink, "warning: " + std::to_string(context.unlabeled) + " context events without priority excluded");
    write_file_atomic(cmd.out, action_stats_csv(actions, context));
}

std::string error_report_csv(const ErrorReport& report, HomauditMode mode) {
    std::ostringstream os;
    os << "section,key,count,median_px,frac_gt100,frac_gt200\n";
    const auto row = [&](const std::string& section, const std::string& key, const ErrorSummary& s) {
        os << section << ',' << key << ',' << s.count << ',' << (s.count ? csv_num(s.median) : "") << ','
           << csv_num(s.frac_gt100) << ',' << csv_num(s.frac_gt200) << '\n';
    };
    os << "meta,pairs_used," << report.pairs_used << ",,,\n";
    row("overall", "all", report.overall);
    if (mode == HomauditMode::DriverToScene) {
        for (std::size_t b = 0; b < kEccentricityBins; ++b) {
            char key[32];
            std::snprintf(key, sizeof key, "%.1f-%.1f", 0.2 * static_cast<double>(b),
                          0.2 * static_cast<double>(b + 1));
            row("eccentricity", key, report.eccentricity[b]);
        }
    } else {
        for (const auto& [offset, s] : report.per_offset)
            row("offset", std::to_string(offset), s);
    }
    return os.str();
}

std::string action_stats_csv(const ActionStatistics& actions, const ContextCounts& context) {
    std::ostringstream os;
    os << "section,category,count,percent\n";
    for (std::size_t i = 0; i < kReportedActions.size(); ++i)
        os << "action," << to_string(kReportedActions[i]) << ',' << actions.counts[i] << ','
           << csv_num(actions.percent[i]) << '\n';
    os << "action,Excluded," << actions.excluded << ",\n";
    const std::size_t total = context.total();
    for (IntersectionType t : kAllIntersectionTypes)
        for (Priority p : kAllPriorities) {
            const auto n = context.at(t, p);
            os << "context," << to_string(t) << '/' << to_string(p) << ',' << n << ','
               << (total ? csv_num(100.0 * static_cast<double>(n) / static_cast<double>(total)) : "") << '\n';
        }
    os << "context,unlabeled," << context.unlabeled << ",\n";
    return os.str();
}

} // namespace gazeaudit
