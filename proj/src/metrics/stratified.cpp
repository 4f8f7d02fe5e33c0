#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"
#include "gazeaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gazeaudit {

namespace {

struct Accumulator {
    std::size_t n_frames = 0;
    std::array<double, kAllMetrics.size()> sum{};
    std::array<std::size_t, kAllMetrics.size()> n_valid{};
    std::size_t degenerate = 0;

    void add(const FrameScores& s, std::span<const Metric> metrics) {
        ++n_frames;
        if (s.degenerate)
            ++degenerate;
        for (Metric m : metrics) {
            const auto k = static_cast<std::size_t>(m);
            if (s.values[k]) {
                sum[k] += *s.values[k];
                ++n_valid[k];
            }
        }
    }

    ReportRow row(std::string group, std::string category, std::span<const Metric> metrics) const {
        ReportRow r;
        r.group = std::move(group);
        r.category = std::move(category);
        r.n_frames = n_frames;
        r.degenerate_frames = degenerate;
        for (Metric m : metrics) {
            const auto k = static_cast<std::size_t>(m);
            r.n_valid[k] = n_valid[k];
            if (n_valid[k] > 0)
                r.mean[k] = sum[k] / static_cast<double>(n_valid[k]);
        }
        return r;
    }
};

void mark_best_worst(std::vector<ReportRow>& rows, std::size_t begin, std::size_t end, std::span<const Metric> metrics) {
    for (Metric m : metrics) {
        const auto k = static_cast<std::size_t>(m);
        std::size_t with_mean = 0;
        std::size_t best = end, worst = end;
        for (std::size_t i = begin; i < end; ++i) {
            if (!rows[i].mean[k])
                continue;
            ++with_mean;
            const double v = *rows[i].mean[k];
            const auto better = [&](double a, double b) { return higher_is_better(m) ? a > b : a < b; };
            if (best == end || better(v, *rows[best].mean[k]))
                best = i;
            if (worst == end || better(*rows[worst].mean[k], v))
                worst = i;
        }
        if (with_mean < 2 || *rows[best].mean[k] == *rows[worst].mean[k])
            continue;
        rows[best].best.push_back(m);
        rows[worst].worst.push_back(m);
    }
}

std::string join_flags(const std::vector<Metric>& ms) {
    std::string out;
    for (Metric m : ms) {
        if (!out.empty())
            out += ';';
        out += to_string(m);
    }
    return out;
}

std::string cell(const ReportRow& r, Metric m, std::span<const Metric> metrics) {
    if (std::find(metrics.begin(), metrics.end(), m) == metrics.end())
        return "";
    const auto& v = r.mean[static_cast<std::size_t>(m)];
    return v ? format_double(*v) : "";
}

} // namespace

std::size_t context_class_index(IntersectionType t, Priority p) {
    const auto ti = static_cast<std::size_t>(
        std::find(kAllIntersectionTypes.begin(), kAllIntersectionTypes.end(), t) - kAllIntersectionTypes.begin());
    const auto pi = static_cast<std::size_t>(
        std::find(kAllPriorities.begin(), kAllPriorities.end(), p) - kAllPriorities.begin());
    return ti * kAllPriorities.size() + pi;
}

std::string context_class_name(std::size_t index) {
    if (index >= kContextClasses)
        fail(ErrorCode::InvalidArgument, "context class index out of range");
    return std::string(to_string(kAllIntersectionTypes[index / kAllPriorities.size()])) + "/" +
           std::string(to_string(kAllPriorities[index % kAllPriorities.size()]));
}

std::vector<ScenarioWindow> build_scenario_windows(const std::string& video_id, std::span<const ContextEvent> events,
                                                   double fps, FrameIndex video_first, FrameIndex video_last) {
    if (!(fps > 0.0))
        fail(ErrorCode::InvalidArgument, "fps must be > 0");
    const auto one_second = static_cast<FrameIndex>(std::llround(fps));
    std::vector<ScenarioWindow> out;
    for (const auto& e : events) {
        if (e.crossing_frame < video_first || e.crossing_frame > video_last)
            fail(ErrorCode::Domain, "video '" + video_id + "': crossing frame " + std::to_string(e.crossing_frame) +
                                        " outside [" + std::to_string(video_first) + ", " +
                                        std::to_string(video_last) + "]");
        if (!e.priority)
            continue;
        ScenarioWindow w;
        w.video_id = video_id;
        w.type = e.intersection_type;
        w.priority = *e.priority;
        w.last = e.crossing_frame;
        if (*e.priority == Priority::Yield && e.yield_onset_frame) {
            if (*e.yield_onset_frame > e.crossing_frame)
                fail(ErrorCode::Domain, "video '" + video_id + "': yield onset after crossing frame " +
                                            std::to_string(e.crossing_frame));
            w.first = *e.yield_onset_frame;
        } else {
            w.first = e.crossing_frame - one_second;
        }
        if (w.first < video_first) {
            w.first = video_first;
            w.clipped = true;
        }
        out.push_back(w);
    }
    return out;
}

StratifiedReport stratified_eval(std::span<const EvaluatedFrame> frames, std::span<const Metric> metrics,
                                 const StratifyOptions& opts) {
    if (metrics.empty())
        fail(ErrorCode::InvalidArgument, "no metric selected");
    Accumulator overall;
    std::array<Accumulator, kReportedActions.size()> by_action;
    std::array<Accumulator, kContextClasses> by_context;
    for (const auto& f : frames) {
        if (f.action == ActionCategory::Excluded)
            continue;
        overall.add(f.scores, metrics);
        const auto a = static_cast<std::size_t>(
            std::find(kReportedActions.begin(), kReportedActions.end(), f.action) - kReportedActions.begin());
        by_action[a].add(f.scores, metrics);
        std::vector<std::size_t> classes = f.context_classes;
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        for (auto c : classes) {
            if (c >= kContextClasses)
                fail(ErrorCode::InvalidArgument, "context class index out of range");
            by_context[c].add(f.scores, metrics);
        }
    }

    StratifiedReport report;
    report.metrics.assign(metrics.begin(), metrics.end());
    report.rows.push_back(overall.row("overall", "all", metrics));
    if (opts.by_action) {
        const std::size_t begin = report.rows.size();
        for (std::size_t i = 0; i < kReportedActions.size(); ++i)
            report.rows.push_back(by_action[i].row("action", std::string(to_string(kReportedActions[i])), metrics));
        mark_best_worst(report.rows, begin, report.rows.size(), metrics);
    }
    if (opts.by_context) {
        const std::size_t begin = report.rows.size();
        for (std::size_t i = 0; i < kContextClasses; ++i)
            report.rows.push_back(by_context[i].row("context", context_class_name(i), metrics));
        mark_best_worst(report.rows, begin, report.rows.size(), metrics);
    }
    return report;
}

std::string report_to_csv(const StratifiedReport& report) {
    std::ostringstream os;
    os << "group,category,n_frames,kld,cc,sim,nss,degenerate_frames,best_flags,worst_flags\n";
    for (const auto& r : report.rows) {
        os << r.group << ',' << r.category << ',' << r.n_frames;
        for (Metric m : kAllMetrics)
            os << ',' << cell(r, m, report.metrics);
        os << ',' << r.degenerate_frames << ',' << join_flags(r.best) << ',' << join_flags(r.worst) << '\n';
    }
    return os.str();
}

std::string report_to_markdown(const StratifiedReport& report) {
    std::ostringstream os;
    os << "| group | category | n_frames |";
    for (Metric m : report.metrics)
        os << ' ' << to_string(m) << " |";
    os << " degenerate_frames |\n|---|---|---:|";
    for (std::size_t i = 0; i < report.metrics.size(); ++i)
        os << "---:|";
    os << "---:|\n";
    for (const auto& r : report.rows) {
        os << "| " << r.group << " | " << r.category << " | " << r.n_frames << " |";
        for (Metric m : report.metrics) {
            std::string v = cell(r, m, report.metrics);
            if (v.empty())
                v = "-";
            if (std::find(r.best.begin(), r.best.end(), m) != r.best.end())
                v = "**" + v + "** (best)";
            else if (std::find(r.worst.begin(), r.worst.end(), m) != r.worst.end())
                v = "_" + v + "_ (worst)";
            os << ' ' << v << " |";
        }
        os << ' ' << r.degenerate_frames << " |\n";
    }
    return os.str();
}

} // namespace gazeaudit
