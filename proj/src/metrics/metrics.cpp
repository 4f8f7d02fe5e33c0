#include "gazeaudit/metrics.hpp"

#include "gazeaudit/error.hpp"
#include "gazeaudit/salmap.hpp"

#include <algorithm>
#include <cmath>

namespace gazeaudit {

namespace {

void check_same_size(const SaliencyMap& a, const SaliencyMap& b, std::string_view metric) {
    if (a.width() != b.width() || a.height() != b.height())
        fail(ErrorCode::InvalidArgument,
             std::string(metric) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                 std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                 ")");
}

SaliencyMap as_distribution(const SaliencyMap& m, std::string_view metric, std::string_view which) {
    if (!(m.sum() > 0.0))
        fail(ErrorCode::Degenerate, std::string(metric) + ": " + std::string(which) + " map has zero mass");
    return m.normalized_sum();
}

struct Moments {
    double mean = 0.0;
    double sd = 0.0; // population
};

Moments moments(std::span<const double> v) {
    const auto n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / n)};
}

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

} // namespace

std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::KLD: return "kld";
    case Metric::CC: return "cc";
    case Metric::SIM: return "sim";
    case Metric::NSS: return "nss";
    }
    return "?";
}

Metric parse_metric(std::string_view s) {
    for (Metric m : kAllMetrics)
        if (to_string(m) == s)
            return m;
    fail(ErrorCode::InvalidArgument, "unknown metric '" + std::string(s) + "' (expected kld|cc|sim|nss)");
}

std::vector<Metric> parse_metric_list(std::string_view s) {
    std::vector<Metric> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto token = s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        const Metric m = parse_metric(token);
        if (std::find(out.begin(), out.end(), m) != out.end())
            fail(ErrorCode::InvalidArgument, "metric '" + std::string(token) + "' listed twice");
        out.push_back(m);
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

bool higher_is_better(Metric m) { return m != Metric::KLD; }

MetricValue kld(const SaliencyMap& pred, const SaliencyMap& gt, double eps) {
    check_same_size(pred, gt, "kld");
    if (!(eps >= 0.0))
        fail(ErrorCode::InvalidArgument, "kld: epsilon must be >= 0");
    const SaliencyMap q = as_distribution(gt, "kld", "ground-truth");
    const SaliencyMap p = as_distribution(pred, "kld", "prediction");
    double s = 0.0;
    const auto qv = q.values();
    const auto pv = p.values();
    for (std::size_t i = 0; i < qv.size(); ++i)
        if (qv[i] > 0.0)
            s += qv[i] * std::log(qv[i] / (pv[i] + eps) + eps);
    return {Metric::KLD, s, false};
}

MetricValue cc(const SaliencyMap& pred, const SaliencyMap& gt) {
    check_same_size(pred, gt, "cc");
    const auto a = pred.values();
    const auto b = gt.values();
    if (is_constant(a) || is_constant(b))
        fail(ErrorCode::Degenerate, "cc: undefined for a constant map");
    const Moments ma = moments(a), mb = moments(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma.mean, db = b[i] - mb.mean;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    const double r = sab / std::sqrt(saa * sbb);
    return {Metric::CC, std::clamp(r, -1.0, 1.0), false};
}

MetricValue sim(const SaliencyMap& pred, const SaliencyMap& gt) {
    check_same_size(pred, gt, "sim");
    const SaliencyMap p = as_distribution(pred, "sim", "prediction");
    const SaliencyMap q = as_distribution(gt, "sim", "ground-truth");
    double s = 0.0;
    const auto pv = p.values();
    const auto qv = q.values();
    for (std::size_t i = 0; i < pv.size(); ++i)
        s += std::min(pv[i], qv[i]);
    return {Metric::SIM, std::min(s, 1.0), false};
}

MetricValue nss(const SaliencyMap& pred, std::span<const PixelPoint> fixations) {
    if (fixations.empty())
        fail(ErrorCode::InvalidArgument, "nss: no in-frame fixation");
    for (const auto& f : fixations)
        if (f.x >= pred.width() || f.y >= pred.height())
            fail(ErrorCode::InvalidArgument, "nss: fixation pixel outside the map");
    const auto v = pred.values();
    if (is_constant(v))
        return {Metric::NSS, 0.0, true};
    const Moments m = moments(v);
    double s = 0.0;
    for (const auto& f : fixations)
        s += (pred.at(f.x, f.y) - m.mean) / m.sd;
    return {Metric::NSS, s / static_cast<double>(fixations.size()), false};
}

std::vector<PixelPoint> fixation_pixels(std::span<const Fixation> fixations, ImageSize size) {
    std::vector<PixelPoint> out;
    for (const auto& f : fixations) {
        if (!in_frame(f.x, f.y, size))
            continue;
        const auto x = static_cast<std::uint32_t>(std::clamp(std::floor(f.x + 0.5), 0.0, size.width - 1.0));
        const auto y = static_cast<std::uint32_t>(std::clamp(std::floor(f.y + 0.5), 0.0, size.height - 1.0));
        out.push_back({x, y});
    }
    return out;
}

std::vector<PixelPoint> argmax_pixels(const SaliencyMap& map) {
    std::vector<PixelPoint> out;
    const double mx = map.max();
    for (std::uint32_t y = 0; y < map.height(); ++y)
        for (std::uint32_t x = 0; x < map.width(); ++x)
            if (map.at(x, y) == mx)
                out.push_back({x, y});
    return out;
}

SaliencyMap aggregate_heatmap(std::span<const Fixation> fixations, ImageSize size, double sigma) {
    if (fixations.empty())
        fail(ErrorCode::InvalidArgument, "aggregate heatmap requires at least one fixation");
    return spatial_gaussian_map(fixations, sigma, size);
}

FrameScores score_frame(const SaliencyMap& pred, const SaliencyMap& gt, std::span<const PixelPoint> fixations,
                        std::span<const Metric> metrics, double eps) {
    FrameScores out;
    for (Metric m : metrics) {
        auto& slot = out.values[static_cast<std::size_t>(m)];
        try {
            MetricValue v;
            switch (m) {
            case Metric::KLD: v = kld(pred, gt, eps); break;
            case Metric::CC: v = cc(pred, gt); break;
            case Metric::SIM: v = sim(pred, gt); break;
            case Metric::NSS:
                if (fixations.empty()) {
                    out.degenerate = true;
                    continue;
                }
                v = nss(pred, fixations);
                break;
            }
            if (v.degenerate)
                out.degenerate = true;
            else
                slot = v.value;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Degenerate)
                throw;
            out.degenerate = true;
        }
    }
    return out;
}

} // namespace gazeaudit
