#include "gazeaudit/audit.hpp"

#include "gazeaudit/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace gazeaudit {

GapReport detect_frame_gaps(std::span<const FrameIndex> indices, std::optional<FrameRange> declared) {
    if (indices.empty())
        fail(ErrorCode::InvalidArgument, "frame gap detection needs at least one frame index");
    for (std::size_t i = 1; i < indices.size(); ++i)
        if (!(indices[i] > indices[i - 1]))
            fail(ErrorCode::InvalidArgument, "frame indices must be sorted and unique (at position " +
                                                 std::to_string(i) + ")");
    GapReport r;
    r.first = declared ? declared->first : indices.front();
    r.last = declared ? declared->last : indices.back();
    if (indices.front() < r.first || indices.back() > r.last)
        fail(ErrorCode::Domain, "frame indices fall outside the declared span [" + std::to_string(r.first) + ", " +
                                    std::to_string(r.last) + "]");
    r.span = static_cast<std::size_t>(r.last - r.first + 1);
    r.present = indices.size();
    r.missing = r.span - r.present;
    r.missing_fraction = static_cast<double>(r.missing) / static_cast<double>(r.span);

    FrameIndex expected = r.first;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] > expected)
            r.gaps.push_back({expected, indices[i] - 1});
        if (i == 0 || indices[i] != indices[i - 1] + 1)
            r.segments.push_back({indices[i], indices[i]});
        else
            r.segments.back().last = indices[i];
        expected = indices[i] + 1;
    }
    if (expected <= r.last)
        r.gaps.push_back({expected, r.last});
    return r;
}

ActionGapTable per_action_gap_fractions(const GapReport& gaps,
                                        std::span<const std::pair<FrameIndex, ActionCategory>> labels) {
    if (labels.empty())
        fail(ErrorCode::InvalidArgument, "per-action gap fractions need at least one label");
    for (std::size_t i = 1; i < labels.size(); ++i)
        if (!(labels[i].first > labels[i - 1].first))
            fail(ErrorCode::InvalidArgument, "labels must be sorted by frame and unique");

    ActionGapTable table{};
    std::size_t gap_idx = 0;
    std::size_t next = 0; // first label with frame >= f
    for (FrameIndex f = gaps.first; f <= gaps.last; ++f) {
        while (next < labels.size() && labels[next].first < f)
            ++next;
        ActionCategory cat;
        if (next < labels.size() && labels[next].first == f) {
            cat = labels[next].second;
        } else if (next == 0) {
            cat = labels.front().second;
        } else if (next == labels.size()) {
            cat = labels.back().second;
        } else {
            const FrameIndex before = f - labels[next - 1].first;
            const FrameIndex after = labels[next].first - f;
            cat = before <= after ? labels[next - 1].second : labels[next].second;
        }
        while (gap_idx < gaps.gaps.size() && gaps.gaps[gap_idx].last < f)
            ++gap_idx;
        const bool missing = gap_idx < gaps.gaps.size() && gaps.gaps[gap_idx].first <= f;
        auto& c = table[static_cast<std::size_t>(cat)];
        ++c.frames;
        if (missing)
            ++c.missing;
    }
    for (auto& c : table)
        c.fraction = c.frames == 0 ? std::numeric_limits<double>::quiet_NaN()
                                   : static_cast<double>(c.missing) / static_cast<double>(c.frames);
    return table;
}

std::string_view to_string(Exposure e) {
    switch (e) {
    case Exposure::Ok: return "ok";
    case Exposure::Overexposed: return "overexposed";
    case Exposure::Underexposed: return "underexposed";
    }
    return "?";
}

Exposure classify_exposure(const GrayImage& image, const ExposureThresholds& th) {
    if (image.pixels.empty())
        fail(ErrorCode::InvalidArgument, "exposure of an empty image");
    const double scale = image.bit_depth == 16 ? 1.0 / 257.0 : 1.0;
    double sum = 0.0;
    std::size_t bright = 0;
    for (auto p : image.pixels) {
        const double v = p * scale;
        sum += v;
        if (v >= th.bright_level)
            ++bright;
    }
    const auto n = static_cast<double>(image.pixels.size());
    const double mean = sum / n;
    if (static_cast<double>(bright) >= th.bright_fraction * n || mean >= th.overexposed_mean)
        return Exposure::Overexposed;
    if (mean <= th.underexposed_mean)
        return Exposure::Underexposed;
    return Exposure::Ok;
}

ExposureReport exposure_audit(const std::map<FrameIndex, std::filesystem::path>& frames,
                              const ExposureThresholds& th, unsigned workers) {
    std::vector<std::pair<FrameIndex, std::filesystem::path>> items(frames.begin(), frames.end());
    std::vector<std::optional<Exposure>> result(items.size());
    std::vector<std::string> errors(items.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            try {
                result[i] = classify_exposure(read_png_gray(items[i].second), th);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    workers = std::clamp<unsigned>(workers, 1u, 64u);
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers && w < items.size(); ++w)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();

    ExposureReport r;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!result[i]) {
            r.undecodable.emplace_back(items[i].first, errors[i]);
            continue;
        }
        ++r.frames;
        r.per_frame.emplace_back(items[i].first, *result[i]);
        if (*result[i] == Exposure::Overexposed)
            ++r.overexposed;
        else if (*result[i] == Exposure::Underexposed)
            ++r.underexposed;
    }
    if (r.frames > 0) {
        r.overexposed_fraction = static_cast<double>(r.overexposed) / static_cast<double>(r.frames);
        r.underexposed_fraction = static_cast<double>(r.underexposed) / static_cast<double>(r.frames);
    }
    return r;
}

TelemetryReport validate_telemetry(std::span<const TelemetrySample> samples, double declared_rate_hz) {
    if (samples.size() < 2)
        fail(ErrorCode::InvalidArgument, "telemetry validation needs at least 2 samples");
    if (!(declared_rate_hz > 0.0))
        fail(ErrorCode::InvalidArgument, "declared telemetry rate must be > 0");
    TelemetryReport r;
    r.samples = samples.size();
    std::vector<double> rates;
    const double gap_dt = 2.0 / declared_rate_hz;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!std::isfinite(s.lat) || !std::isfinite(s.lon))
            ++r.missing_position;
        if (s.speed_kmh < 0.0)
            ++r.negative_speed;
        if (i == 0)
            continue;
        const double dt = s.t_sec - samples[i - 1].t_sec;
        if (!(dt > 0.0)) {
            ++r.non_increasing_time;
            continue;
        }
        rates.push_back(1.0 / dt);
        if (dt > gap_dt)
            r.gaps.push_back({samples[i - 1].frame, s.frame, dt});
    }
    if (rates.empty())
        fail(ErrorCode::Domain, "telemetry timestamps never increase; rate undefined");
    std::sort(rates.begin(), rates.end());
    const std::size_t n = rates.size();
    r.rate_hz = n % 2 ? rates[n / 2] : 0.5 * (rates[n / 2 - 1] + rates[n / 2]);
    r.low_confidence = n < 2;
    return r;
}

} // namespace gazeaudit
