#include "gazeaudit/salmap.hpp"

#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gazeaudit {

namespace {

bool is_fixation_type(GazeEvent e) {
    return e == GazeEvent::Fixation || e == GazeEvent::InVehicle || e == GazeEvent::Offscreen;
}

void check_size(ImageSize size) {
    if (size.width == 0 || size.height == 0)
        fail(ErrorCode::InvalidArgument, "image size must be non-zero");
}

void check_sigma(double sigma, const char* what) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        fail(ErrorCode::InvalidArgument, std::string(what) + " must be a positive finite number");
}

std::vector<Fixation> sorted_by_frame(std::span<const Fixation> fixations) {
    std::vector<Fixation> out(fixations.begin(), fixations.end());
    std::stable_sort(out.begin(), out.end(), [](const Fixation& a, const Fixation& b) { return a.frame < b.frame; });
    return out;
}

std::vector<double> raw_multi_observer(const std::vector<std::vector<Fixation>>& sorted_observers, FrameIndex t,
                                       ImageSize size, double sigma_s, double sigma_t) {
    std::vector<double> acc(static_cast<std::size_t>(size.width) * size.height, 0.0);
    const auto reach = static_cast<FrameIndex>(std::ceil(4.0 * sigma_t));
    for (const auto& obs : sorted_observers) {
        auto lo = std::lower_bound(obs.begin(), obs.end(), t - reach,
                                   [](const Fixation& f, FrameIndex v) { return f.frame < v; });
        for (auto it = lo; it != obs.end() && it->frame <= t + reach; ++it) {
            if (!in_frame(it->x, it->y, size))
                continue;
            const double w = temporal_weight(it->frame - t, sigma_t);
            if (w > 0.0)
                splat_gaussian(acc, size, it->x, it->y, sigma_s, w, Combine::Sum);
        }
    }
    return acc;
}

} // namespace

void RecipeConfig::validate() const {
    check_sigma(sigma_spatial, "spatial sigma");
    if (recipe == Recipe::MultiObserver)
        check_sigma(sigma_temporal, "temporal sigma");
    if (window_halfwidth < 0)
        fail(ErrorCode::InvalidArgument, "window half-width must be >= 0");
    if (recipe == Recipe::MultiObserver && combine != Combine::Sum)
        fail(ErrorCode::InvalidArgument, "multi_observer recipe requires combine=sum");
    if (recipe == Recipe::TemporalWindow && combine != Combine::Max)
        fail(ErrorCode::InvalidArgument, "temporal_window recipe requires combine=max");
}

RecipeConfig recipe_defaults(std::string_view name) {
    RecipeConfig c;
    if (name == "bdda") {
        c.recipe = Recipe::MultiObserver;
        c.sigma_spatial = 25.0;
        c.sigma_temporal = 4.0;
        c.combine = Combine::Sum;
    } else if (name == "dreyeve") {
        c.recipe = Recipe::TemporalWindow;
        c.sigma_spatial = 25.0;
        c.window_halfwidth = 12;
        c.combine = Combine::Max;
    } else if (name == "lbw") {
        c.recipe = Recipe::SingleFixation;
        c.sigma_spatial = 60.0;
        c.combine = Combine::Sum;
    } else {
        fail(ErrorCode::InvalidArgument, "unknown recipe '" + std::string(name) + "' (expected bdda|dreyeve|lbw)");
    }
    return c;
}

double GazeComposition::fraction(GazeEvent e) const {
    return total == 0 ? 0.0 : static_cast<double>(count(e)) / static_cast<double>(total);
}

GazeComposition gaze_composition(std::span<const GazeSample> samples) {
    if (samples.empty())
        fail(ErrorCode::InvalidArgument, "gaze composition of an empty stream");
    GazeComposition c;
    for (const auto& s : samples)
        ++c.counts[static_cast<std::size_t>(s.event)];
    c.total = samples.size();
    return c;
}

FilterResult filter_gaze(std::span<const GazeSample> samples, std::span<const GazeEvent> drop) {
    FilterResult r;
    r.composition.total = samples.size();
    for (const auto& s : samples) {
        ++r.composition.counts[static_cast<std::size_t>(s.event)];
        if (std::find(drop.begin(), drop.end(), s.event) != drop.end()) {
            ++r.dropped;
            continue;
        }
        if (is_fixation_type(s.event))
            r.fixations.push_back({s.frame, s.x, s.y, std::nullopt});
    }
    r.dropped_fraction = samples.empty() ? 0.0 : static_cast<double>(r.dropped) / static_cast<double>(samples.size());
    return r;
}

std::vector<Fixation> detect_fixations_idt(std::span<const RawGazePoint> pts, double dispersion_threshold,
                                           double min_duration_ms) {
    if (!(dispersion_threshold >= 0.0) || !(min_duration_ms >= 0.0))
        fail(ErrorCode::InvalidArgument, "I-DT thresholds must be non-negative");
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].t_ms > pts[i - 1].t_ms))
            fail(ErrorCode::InvalidArgument, "I-DT input timestamps must be strictly increasing (index " +
                                                 std::to_string(i) + ")");

    std::vector<Fixation> out;
    const std::size_t n = pts.size();
    std::size_t i = 0;
    while (i < n) {
        // Smallest window starting at i that spans the minimum duration.
        std::size_t j = i;
        while (j < n && pts[j].t_ms - pts[i].t_ms < min_duration_ms)
            ++j;
        if (j == n)
            break;
        double xmin = pts[i].x, xmax = pts[i].x, ymin = pts[i].y, ymax = pts[i].y;
        for (std::size_t k = i; k <= j; ++k) {
            xmin = std::min(xmin, pts[k].x);
            xmax = std::max(xmax, pts[k].x);
            ymin = std::min(ymin, pts[k].y);
            ymax = std::max(ymax, pts[k].y);
        }
        if ((xmax - xmin) + (ymax - ymin) > dispersion_threshold) {
            ++i;
            continue;
        }
        while (j + 1 < n) {
            const auto& p = pts[j + 1];
            const double d = (std::max(xmax, p.x) - std::min(xmin, p.x)) + (std::max(ymax, p.y) - std::min(ymin, p.y));
            if (d > dispersion_threshold)
                break;
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
            ++j;
        }
        double cx = 0.0, cy = 0.0;
        for (std::size_t k = i; k <= j; ++k) {
            cx += pts[k].x;
            cy += pts[k].y;
        }
        const auto cnt = static_cast<double>(j - i + 1);
        out.push_back({pts[i].frame, cx / cnt, cy / cnt, pts[j].t_ms - pts[i].t_ms});
        i = j + 1;
    }
    return out;
}

bool in_frame(double x, double y, ImageSize size) {
    return x >= -0.5 && x < static_cast<double>(size.width) - 0.5 && y >= -0.5 &&
           y < static_cast<double>(size.height) - 0.5;
}

void splat_gaussian(std::span<double> acc, ImageSize size, double x, double y, double sigma, double weight,
                    Combine combine) {
    const double radius = 4.0 * sigma;
    const auto x0 = static_cast<long>(std::max(0.0, std::ceil(x - radius)));
    const auto x1 = static_cast<long>(std::min(static_cast<double>(size.width) - 1.0, std::floor(x + radius)));
    const auto y0 = static_cast<long>(std::max(0.0, std::ceil(y - radius)));
    const auto y1 = static_cast<long>(std::min(static_cast<double>(size.height) - 1.0, std::floor(y + radius)));
    if (x0 > x1 || y0 > y1)
        return;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    const double r2max = radius * radius;
    std::vector<double> gx(static_cast<std::size_t>(x1 - x0 + 1));
    for (long px = x0; px <= x1; ++px) {
        const double d = static_cast<double>(px) - x;
        gx[static_cast<std::size_t>(px - x0)] = std::exp(-d * d * inv);
    }
    for (long py = y0; py <= y1; ++py) {
        const double dy = static_cast<double>(py) - y;
        const double gy = weight * std::exp(-dy * dy * inv);
        double* row = acc.data() + static_cast<std::size_t>(py) * size.width;
        for (long px = x0; px <= x1; ++px) {
            const double dx = static_cast<double>(px) - x;
            if (dx * dx + dy * dy > r2max)
                continue;
            const double v = gy * gx[static_cast<std::size_t>(px - x0)];
            double& cell = row[px];
            cell = combine == Combine::Sum ? cell + v : std::max(cell, v);
        }
    }
}

SaliencyMap spatial_gaussian_map(std::span<const Fixation> fixations, double sigma, ImageSize size) {
    check_size(size);
    check_sigma(sigma, "spatial sigma");
    if (fixations.empty())
        fail(ErrorCode::InvalidArgument, "spatial map requires at least one fixation");
    std::vector<double> acc(static_cast<std::size_t>(size.width) * size.height, 0.0);
    std::size_t used = 0;
    for (const auto& f : fixations) {
        if (!in_frame(f.x, f.y, size))
            continue;
        splat_gaussian(acc, size, f.x, f.y, sigma, 1.0, Combine::Sum);
        ++used;
    }
    if (used == 0)
        fail(ErrorCode::Degenerate, "all fixations are outside the frame");
    return SaliencyMap(size.width, size.height, std::move(acc)).normalized_sum();
}

double temporal_weight(FrameIndex delta, double sigma_t) {
    const auto d = static_cast<double>(delta);
    if (std::abs(d) > std::ceil(4.0 * sigma_t))
        return 0.0;
    return std::exp(-d * d / (2.0 * sigma_t * sigma_t));
}

SaliencyMap multi_observer_raw(std::span<const std::vector<Fixation>> observers, FrameIndex t, ImageSize size,
                               double sigma_s, double sigma_t) {
    check_size(size);
    check_sigma(sigma_s, "spatial sigma");
    check_sigma(sigma_t, "temporal sigma");
    if (observers.empty())
        fail(ErrorCode::InvalidArgument, "multi-observer map requires at least one observer");
    std::vector<std::vector<Fixation>> sorted;
    for (const auto& o : observers)
        sorted.push_back(sorted_by_frame(o));
    return SaliencyMap(size.width, size.height, raw_multi_observer(sorted, t, size, sigma_s, sigma_t));
}

SaliencyMap multi_observer_map(std::span<const std::vector<Fixation>> observers, FrameIndex t, ImageSize size,
                               double sigma_s, double sigma_t) {
    const SaliencyMap raw = multi_observer_raw(observers, t, size, sigma_s, sigma_t);
    if (!(raw.sum() > 0.0))
        fail(ErrorCode::Degenerate, "frame " + std::to_string(t) + " has zero gaze mass");
    return raw.normalized_sum();
}

std::vector<SaliencyMap> multi_observer_maps(std::span<const std::vector<Fixation>> observers, FrameIndex first,
                                             FrameIndex last, ImageSize size, double sigma_s, double sigma_t) {
    check_size(size);
    check_sigma(sigma_s, "spatial sigma");
    check_sigma(sigma_t, "temporal sigma");
    if (observers.empty())
        fail(ErrorCode::InvalidArgument, "multi-observer map requires at least one observer");
    if (last < first)
        fail(ErrorCode::InvalidArgument, "empty frame range");
    std::vector<std::vector<Fixation>> sorted;
    for (const auto& o : observers)
        sorted.push_back(sorted_by_frame(o));
    std::vector<SaliencyMap> out;
    for (FrameIndex t = first; t <= last; ++t) {
        SaliencyMap raw(size.width, size.height, raw_multi_observer(sorted, t, size, sigma_s, sigma_t));
        if (!(raw.sum() > 0.0))
            fail(ErrorCode::Degenerate, "frame " + std::to_string(t) + " has zero gaze mass");
        out.push_back(raw.normalized_sum());
    }
    return out;
}

WindowHomographies read_window_homographies(const std::filesystem::path& path) {
    const auto table = CsvTable::read(path);
    const auto key = table.column("key_frame");
    const auto frame = table.column("frame");
    std::array<std::size_t, 9> cols{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            cols[static_cast<std::size_t>(r * 3 + c)] =
                table.column("h" + std::to_string(r) + std::to_string(c));
    WindowHomographies out;
    for (std::size_t row = 0; row < table.rows(); ++row) {
        std::array<double, 9> h{};
        for (std::size_t k = 0; k < 9; ++k)
            h[k] = table.number(row, cols[k]);
        const auto id = std::make_pair(table.integer(row, key), table.integer(row, frame));
        try {
            if (!out.emplace(id, Homography(h)).second)
                fail(ErrorCode::Parse, "duplicate homography");
        } catch (const Error& e) {
            fail(ErrorCode::Parse, path.string() + ":" + std::to_string(table.line(row)) + ": " + e.what());
        }
    }
    return out;
}

SaliencyMap temporal_window_map(std::span<const Fixation> fixations, const WindowHomographies& homographies,
                                FrameIndex key, int halfwidth, double sigma, ImageSize size) {
    check_size(size);
    check_sigma(sigma, "spatial sigma");
    if (halfwidth < 0)
        fail(ErrorCode::InvalidArgument, "window half-width must be >= 0");
    std::vector<double> acc(static_cast<std::size_t>(size.width) * size.height, 0.0);
    std::size_t in_window = 0;
    for (const auto& f : fixations) {
        if (f.frame < key - halfwidth || f.frame > key + halfwidth)
            continue;
        ++in_window;
        Point2 p{f.x, f.y};
        if (f.frame != key) {
            auto it = homographies.find({key, f.frame});
            if (it == homographies.end())
                fail(ErrorCode::NotFound, "no homography from frame " + std::to_string(f.frame) + " to key frame " +
                                              std::to_string(key));
            p = project_point(it->second, p);
        }
        if (!in_frame(p.x, p.y, size))
            continue;
        splat_gaussian(acc, size, p.x, p.y, sigma, 1.0, Combine::Max);
    }
    if (in_window == 0)
        fail(ErrorCode::InvalidArgument, "no fixation within the window of key frame " + std::to_string(key));
    SaliencyMap m(size.width, size.height, std::move(acc));
    if (!(m.max() > 0.0))
        fail(ErrorCode::Degenerate, "key frame " + std::to_string(key) + ": all remapped fixations are off-frame");
    return m.normalized_max();
}

SaliencyMap single_fixation_map(const Fixation& fixation, double sigma, ImageSize size, OffFramePolicy policy) {
    check_size(size);
    check_sigma(sigma, "spatial sigma");
    if (!std::isfinite(fixation.x) || !std::isfinite(fixation.y))
        fail(ErrorCode::InvalidArgument, "fixation with non-finite coordinates");
    double x = fixation.x, y = fixation.y;
    if (!in_frame(x, y, size)) {
        if (policy == OffFramePolicy::Reject)
            fail(ErrorCode::Domain, "fixation (" + format_double(x) + ", " + format_double(y) + ") is off-frame");
        x = std::clamp(x, 0.0, static_cast<double>(size.width) - 1.0);
        y = std::clamp(y, 0.0, static_cast<double>(size.height) - 1.0);
    }
    std::vector<double> acc(static_cast<std::size_t>(size.width) * size.height, 0.0);
    splat_gaussian(acc, size, x, y, sigma, 1.0, Combine::Sum);
    return SaliencyMap(size.width, size.height, std::move(acc)).normalized_sum();
}

double map_entropy(const SaliencyMap& map) {
    const SaliencyMap p = map.normalized_sum();
    double h = 0.0;
    for (double v : p.values())
        if (v > 0.0)
            h -= v * std::log(v);
    return h;
}

} // namespace gazeaudit
