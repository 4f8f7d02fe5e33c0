#include "gazeaudit/segmentation.hpp"

#include "gazeaudit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gazeaudit {

namespace {

double median_of(std::vector<double>& scratch) {
    const std::size_t n = scratch.size();
    const std::size_t mid = n / 2;
    std::nth_element(scratch.begin(), scratch.begin() + mid, scratch.end());
    const double upper = scratch[mid];
    if (n % 2 == 1)
        return upper;
    const double lower = *std::max_element(scratch.begin(), scratch.begin() + mid);
    return 0.5 * (lower + upper);
}

struct Window {
    std::size_t lo, hi; // inclusive
};

Window centered(std::size_t i, std::size_t n, int w) {
    const std::size_t back = static_cast<std::size_t>((w - 1) / 2);
    const std::size_t fwd = static_cast<std::size_t>(w / 2);
    return {i >= back ? i - back : 0, std::min(n - 1, i + fwd)};
}

Longitudinal label_for(double accel, double threshold) {
    if (accel >= threshold)
        return Longitudinal::SpeedUp;
    if (accel <= -threshold)
        return Longitudinal::SlowDown;
    return Longitudinal::Maintain;
}

} // namespace

void SegmentationConfig::validate() const {
    if (median_window < 1)
        fail(ErrorCode::InvalidArgument, "median_window must be >= 1");
    if (!(accel_threshold > 0.0))
        fail(ErrorCode::InvalidArgument, "accel_threshold must be > 0");
    if (!(stop_threshold_kmh > 0.0))
        fail(ErrorCode::InvalidArgument, "stop_threshold must be > 0");
    if (penalty && !(*penalty > 0.0))
        fail(ErrorCode::InvalidArgument, "penalty must be > 0");
    if (!(outlier_mad_factor > 0.0) || !(outlier_floor_ms > 0.0))
        fail(ErrorCode::InvalidArgument, "outlier parameters must be > 0");
    if (min_stop_run && *min_stop_run < 1)
        fail(ErrorCode::InvalidArgument, "min_stop_run must be >= 1");
    if (!(min_noise_sigma > 0.0))
        fail(ErrorCode::InvalidArgument, "min_noise_sigma must be > 0");
}

std::vector<double> moving_median(std::span<const double> x, int window) {
    if (window < 1)
        fail(ErrorCode::InvalidArgument, "median window must be >= 1");
    std::vector<double> out(x.size());
    std::vector<double> scratch;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto w = centered(i, x.size(), window);
        scratch.assign(x.begin() + w.lo, x.begin() + w.hi + 1);
        out[i] = median_of(scratch);
    }
    return out;
}

SpeedSeries clean_speed(std::span<const double> raw_kmh, FrameIndex first_frame, double fps,
                        const SegmentationConfig& cfg) {
    cfg.validate();
    if (raw_kmh.empty())
        fail(ErrorCode::InvalidArgument, "clean_speed: empty speed sequence");
    if (!(fps > 0.0))
        fail(ErrorCode::InvalidArgument, "clean_speed: fps must be > 0");
    std::vector<double> v(raw_kmh.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(raw_kmh[i]))
            fail(ErrorCode::InvalidArgument, "clean_speed: non-finite speed at index " + std::to_string(i));
        v[i] = raw_kmh[i] / 3.6;
    }

    // Outliers are judged against the raw neighbourhood, not progressively.
    std::vector<double> despiked = v;
    std::vector<double> scratch;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto w = centered(i, v.size(), cfg.median_window);
        scratch.assign(v.begin() + w.lo, v.begin() + w.hi + 1);
        const double med = median_of(scratch);
        for (auto& s : scratch)
            s = std::abs(s - med);
        const double mad = median_of(scratch);
        const double bound = std::max(cfg.outlier_mad_factor * 1.4826 * mad, cfg.outlier_floor_ms);
        if (std::abs(v[i] - med) > bound)
            despiked[i] = med;
    }

    SpeedSeries s;
    s.first_frame = first_frame;
    s.fps = fps;
    s.v = moving_median(despiked, cfg.median_window);
    for (double& x : s.v)
        x = std::max(0.0, x);
    return s;
}

std::vector<double> speed_per_frame_kmh(std::span<const TelemetrySample> samples) {
    if (samples.empty())
        fail(ErrorCode::InvalidArgument, "no telemetry samples");
    const FrameIndex first = samples.front().frame;
    const FrameIndex last = samples.back().frame;
    std::vector<double> out(static_cast<std::size_t>(last - first + 1));
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (k > 0 && samples[k].frame <= samples[k - 1].frame)
            fail(ErrorCode::InvalidArgument, "telemetry frames must be strictly increasing");
        out[static_cast<std::size_t>(samples[k].frame - first)] = samples[k].speed_kmh;
        if (k > 0) {
            const auto& a = samples[k - 1];
            const auto& b = samples[k];
            for (FrameIndex f = a.frame + 1; f < b.frame; ++f) {
                const double t = static_cast<double>(f - a.frame) / static_cast<double>(b.frame - a.frame);
                out[static_cast<std::size_t>(f - first)] = a.speed_kmh + t * (b.speed_kmh - a.speed_kmh);
            }
        }
    }
    return out;
}

double auto_penalty(std::span<const double> v, double min_sigma) {
    const std::size_t n = v.size();
    double sigma = 0.0;
    if (n >= 2) {
        std::vector<double> d(n - 1);
        for (std::size_t i = 1; i < n; ++i)
            d[i - 1] = v[i] - v[i - 1];
        std::vector<double> scratch = d;
        const double med = median_of(scratch);
        for (auto& x : d)
            x = std::abs(x - med);
        sigma = 1.4826 * median_of(d) / std::sqrt(2.0);
    }
    sigma = std::max(sigma, min_sigma);
    return 3.0 * std::log(static_cast<double>(std::max<std::size_t>(n, 2))) * sigma * sigma;
}

std::vector<std::size_t> detect_change_points(std::span<const double> v, double penalty) {
    const std::size_t n = v.size();
    if (n < 2)
        fail(ErrorCode::InvalidArgument, "change-point detection needs at least 2 samples");
    if (!(penalty > 0.0) || !std::isfinite(penalty))
        fail(ErrorCode::InvalidArgument, "change-point penalty must be finite and > 0");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(v[i]))
            fail(ErrorCode::InvalidArgument, "non-finite value at index " + std::to_string(i));

    // Centered prefix sums keep the S2 - S1^2/len cancellation small.
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = v[i] - mean;
        s1[i + 1] = s1[i] + y;
        s2[i + 1] = s2[i] + y * y;
    }
    auto cost = [&](std::size_t a, std::size_t b) { // samples [a, b)
        const double s = s1[b] - s1[a];
        return std::max(0.0, (s2[b] - s2[a]) - s * s / static_cast<double>(b - a));
    };

    std::vector<double> best(n + 1, 0.0);
    std::vector<std::size_t> prev(n + 1, 0);
    best[0] = -penalty;
    std::vector<std::size_t> candidates{0};
    std::vector<double> scored;
    for (std::size_t t = 1; t <= n; ++t) {
        scored.resize(candidates.size());
        double f = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const std::size_t tau = candidates[k];
            scored[k] = best[tau] + cost(tau, t);
            const double total = scored[k] + penalty;
            if (total < f) {
                f = total;
                arg = tau;
            }
        }
        best[t] = f;
        prev[t] = arg;
        // Pruning; the slack keeps candidates that tie up to rounding.
        const double slack = 1e-9 * std::max(1.0, std::abs(f));
        std::size_t keep = 0;
        for (std::size_t k = 0; k < candidates.size(); ++k)
            if (scored[k] <= f + slack)
                candidates[keep++] = candidates[k];
        candidates.resize(keep);
        candidates.push_back(t);
    }

    std::vector<std::size_t> cps;
    for (std::size_t t = n; prev[t] > 0; t = prev[t])
        cps.push_back(prev[t]);
    std::reverse(cps.begin(), cps.end());
    return cps;
}

double partition_cost(std::span<const double> v, std::span<const std::size_t> change_points, double penalty) {
    double total = 0.0;
    std::size_t start = 0;
    auto seg = [&](std::size_t a, std::size_t b) {
        double m = 0.0;
        for (std::size_t i = a; i < b; ++i)
            m += v[i];
        m /= static_cast<double>(b - a);
        double c = 0.0;
        for (std::size_t i = a; i < b; ++i)
            c += (v[i] - m) * (v[i] - m);
        return c;
    };
    for (std::size_t cp : change_points) {
        total += seg(start, cp);
        start = cp;
    }
    total += seg(start, v.size());
    return total + penalty * static_cast<double>(change_points.size());
}

std::vector<Segment> classify_segments(const SpeedSeries& series, std::span<const std::size_t> change_points,
                                       const SegmentationConfig& cfg) {
    cfg.validate();
    const std::size_t n = series.v.size();
    if (n == 0)
        fail(ErrorCode::InvalidArgument, "classify_segments: empty series");
    if (!(series.fps > 0.0))
        fail(ErrorCode::InvalidArgument, "classify_segments: fps must be > 0");
    std::vector<std::size_t> bounds{0};
    for (std::size_t cp : change_points) {
        if (cp <= bounds.back() || cp >= n)
            fail(ErrorCode::InvalidArgument, "change points must be strictly increasing inside (0, n)");
        bounds.push_back(cp);
    }
    bounds.push_back(n);

    std::vector<Segment> coarse;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        const std::size_t s = bounds[k];
        // Acceleration between consecutive change points; the last segment
        // ends at the final sample.
        const std::size_t e = (k + 2 < bounds.size()) ? bounds[k + 1] : n - 1;
        if (e <= s)
            fail(ErrorCode::Domain, "zero-duration segment at frame " +
                                        std::to_string(series.first_frame + static_cast<FrameIndex>(s)));
        const double dt = static_cast<double>(e - s) / series.fps;
        const double accel = (series.v[e] - series.v[s]) / dt;
        coarse.push_back({series.first_frame + static_cast<FrameIndex>(s),
                          series.first_frame + static_cast<FrameIndex>(bounds[k + 1] - 1), accel,
                          label_for(accel, cfg.accel_threshold)});
    }

    // Stopped override on sufficiently long sub-threshold runs.
    const double stop_ms = cfg.stop_threshold_kmh / 3.6;
    const int min_run = cfg.min_stop_run.value_or(std::max(1, static_cast<int>(std::lround(series.fps))));
    std::vector<bool> stopped(n, false);
    for (std::size_t i = 0; i < n;) {
        if (series.v[i] > stop_ms) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && series.v[j] <= stop_ms)
            ++j;
        if (j - i >= static_cast<std::size_t>(min_run))
            std::fill(stopped.begin() + i, stopped.begin() + j, true);
        i = j;
    }

    std::vector<Segment> out;
    for (const auto& seg : coarse) {
        for (FrameIndex f = seg.start_frame; f <= seg.end_frame;) {
            const bool st = stopped[static_cast<std::size_t>(f - series.first_frame)];
            FrameIndex g = f;
            while (g + 1 <= seg.end_frame && stopped[static_cast<std::size_t>(g + 1 - series.first_frame)] == st)
                ++g;
            out.push_back({f, g, seg.mean_accel, st ? Longitudinal::Stopped : seg.longitudinal});
            f = g + 1;
        }
    }
    return out;
}

std::vector<Longitudinal> segments_per_frame(std::span<const Segment> segments) {
    std::vector<Longitudinal> out;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        if (k > 0 && segments[k].start_frame != segments[k - 1].end_frame + 1)
            fail(ErrorCode::InvalidArgument, "segments do not partition the frame span");
        for (FrameIndex f = segments[k].start_frame; f <= segments[k].end_frame; ++f)
            out.push_back(segments[k].longitudinal);
    }
    return out;
}

std::vector<ActionCategory> fuse_actions(std::span<const Longitudinal> longitudinal,
                                         std::span<const LateralClass> lateral) {
    if (longitudinal.size() != lateral.size())
        fail(ErrorCode::InvalidArgument, "fuse_actions: frame range mismatch (" +
                                             std::to_string(longitudinal.size()) + " longitudinal vs " +
                                             std::to_string(lateral.size()) + " lateral frames)");
    std::vector<ActionCategory> out(longitudinal.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto lon = longitudinal[i];
        const auto lat = lateral[i];
        if (lat == LateralClass::UTurn || lat == LateralClass::Reverse)
            out[i] = ActionCategory::Excluded;
        else if (lon == Longitudinal::Stopped)
            out[i] = ActionCategory::Stopped;
        else if (lat == LateralClass::None)
            out[i] = to_action(lon);
        else if (lon == Longitudinal::Maintain)
            out[i] = ActionCategory::Lateral;
        else
            out[i] = ActionCategory::LatLon;
    }
    return out;
}

std::vector<ActionCategory> fuse_actions(std::span<const Segment> segments, std::span<const LateralClass> lateral) {
    const auto lon = segments_per_frame(segments);
    return fuse_actions(lon, lateral);
}

SegmentationResult segment_telemetry(std::span<const TelemetrySample> samples, double fps,
                                     const SegmentationConfig& cfg) {
    cfg.validate();
    const auto raw = speed_per_frame_kmh(samples);
    SegmentationResult r;
    r.series = clean_speed(raw, samples.front().frame, fps, cfg);
    if (r.series.v.size() == 1) {
        // A single frame has no duration to measure acceleration over.
        const bool stopped = r.series.v[0] <= cfg.stop_threshold_kmh / 3.6;
        r.segments.push_back({r.series.first_frame, r.series.first_frame, 0.0,
                              stopped ? Longitudinal::Stopped : Longitudinal::Maintain});
        return r;
    }
    std::vector<double> raw_ms(raw.size());
    std::transform(raw.begin(), raw.end(), raw_ms.begin(), [](double k) { return k / 3.6; });
    r.penalty = cfg.penalty.value_or(auto_penalty(raw_ms, cfg.min_noise_sigma));
    r.change_points = detect_change_points(r.series.v, r.penalty);
    // A trailing one-sample segment has no duration; fold it into its predecessor.
    if (!r.change_points.empty() && r.change_points.back() == r.series.v.size() - 1)
        r.change_points.pop_back();
    r.segments = classify_segments(r.series, r.change_points, cfg);
    return r;
}

std::vector<ActionCategory> effective_actions(const AnnotationDocument& doc) {
    const auto span = doc.range();
    const auto n = static_cast<std::size_t>(span.count());
    auto covered = [&](const auto& runs) {
        FrameIndex next = span.first;
        for (const auto& r : runs) {
            if (r.start_frame != next)
                return false;
            next = r.end_frame + 1;
        }
        return next == span.last + 1;
    };
    if (!doc.longitudinal.empty()) {
        if (!covered(doc.longitudinal))
            fail(ErrorCode::Domain, "annotations for '" + doc.video_id + "': longitudinal runs do not cover the span");
        std::vector<Longitudinal> lon;
        lon.reserve(n);
        for (const auto& r : doc.longitudinal)
            lon.insert(lon.end(), static_cast<std::size_t>(r.end_frame - r.start_frame + 1), r.label);
        return fuse_actions(lon, lateral_per_frame(doc));
    }
    if (!doc.actions.empty()) {
        if (!covered(doc.actions))
            fail(ErrorCode::Domain, "annotations for '" + doc.video_id + "': action runs do not cover the span");
        std::vector<ActionCategory> out;
        out.reserve(n);
        for (const auto& r : doc.actions)
            out.insert(out.end(), static_cast<std::size_t>(r.end_frame - r.start_frame + 1), r.category);
        return out;
    }
    fail(ErrorCode::Domain, "annotations for '" + doc.video_id + "' carry no action labels");
}

ActionStatistics action_statistics(std::span<const std::vector<ActionCategory>> videos) {
    ActionStatistics st;
    std::size_t total = 0;
    for (const auto& labels : videos) {
        for (auto c : labels) {
            ++total;
            if (c == ActionCategory::Excluded) {
                ++st.excluded;
                continue;
            }
            const auto it = std::find(kReportedActions.begin(), kReportedActions.end(), c);
            ++st.counts[static_cast<std::size_t>(it - kReportedActions.begin())];
            ++st.included;
        }
    }
    if (total == 0)
        fail(ErrorCode::Domain, "action statistics: no labeled frames");
    if (st.included == 0)
        fail(ErrorCode::Domain, "action statistics: all frames are excluded");
    for (std::size_t k = 0; k < st.counts.size(); ++k)
        st.percent[k] = 100.0 * static_cast<double>(st.counts[k]) / static_cast<double>(st.included);
    return st;
}

} // namespace gazeaudit
