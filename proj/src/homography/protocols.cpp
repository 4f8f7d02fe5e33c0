#include "gazeaudit/protocols.hpp"

#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

namespace gazeaudit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double median_sorted(const std::vector<double>& s) {
    const std::size_t n = s.size();
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

std::vector<Correspondence> draw_subset(const std::vector<Correspondence>& all, const ProtocolOptions& opts,
                                        std::mt19937_64& rng) {
    const std::size_t n = all.size();
    std::size_t k = static_cast<std::size_t>(std::lround(opts.subset_fraction * static_cast<double>(n)));
    k = std::min(n, std::max(k, opts.min_subset));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<Correspondence> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.push_back(all[idx[i]]);
    return out;
}

Homography fit_run(const FramePair& pair, const ProtocolOptions& opts, std::mt19937_64& rng) {
    const auto subset = draw_subset(pair.correspondences, opts, rng);
    if (opts.ransac_threshold > 0.0) {
        RobustOptions ro;
        ro.inlier_threshold = opts.ransac_threshold;
        ro.seed = rng();
        return estimate_homography_robust(subset, ro).h;
    }
    return estimate_homography_dlt(subset);
}

// At most pairs_per_video pairs per video, chosen without replacement by a
// per-video generator; selection keeps the input order.
std::vector<const FramePair*> select_pairs(std::span<const FramePair> pairs, const ProtocolOptions& opts) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<std::size_t>> by_video;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [it, inserted] = by_video.try_emplace(pairs[i].video_id);
        if (inserted)
            order.push_back(pairs[i].video_id);
        it->second.push_back(i);
    }
    std::vector<std::size_t> chosen;
    for (const auto& vid : order) {
        auto idx = by_video[vid];
        const auto cap = static_cast<std::size_t>(opts.pairs_per_video);
        if (idx.size() > cap) {
            std::mt19937_64 rng(derive_seed(opts.seed, "video:" + vid));
            for (std::size_t i = 0; i < cap; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
                std::swap(idx[i], idx[pick(rng)]);
            }
            idx.resize(cap);
        }
        chosen.insert(chosen.end(), idx.begin(), idx.end());
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<const FramePair*> out;
    for (auto i : chosen)
        out.push_back(&pairs[i]);
    return out;
}

void check_pair(const FramePair& p) {
    if (p.fixations.empty())
        fail(ErrorCode::InvalidArgument, "pair '" + p.pair_id + "' has no reference fixation");
    if (p.offset != 0 && p.correspondences.size() < 4)
        fail(ErrorCode::InvalidArgument, "pair '" + p.pair_id + "' has insufficient correspondences (" +
                                             std::to_string(p.correspondences.size()) + " < 4)");
}

} // namespace

void ProtocolOptions::validate() const {
    if (runs < 1)
        fail(ErrorCode::InvalidArgument, "runs must be >= 1");
    if (pairs_per_video < 1)
        fail(ErrorCode::InvalidArgument, "pairs per video must be >= 1");
    if (!(subset_fraction > 0.0 && subset_fraction <= 1.0))
        fail(ErrorCode::InvalidArgument, "subset fraction must be in (0, 1]");
    if (min_subset < 4)
        fail(ErrorCode::InvalidArgument, "minimum subset must be >= 4");
    if (ransac_threshold < 0.0)
        fail(ErrorCode::InvalidArgument, "ransac threshold must be >= 0");
    if (!(image_width > 0.0))
        fail(ErrorCode::InvalidArgument, "image width must be > 0");
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return splitmix64(master ^ h);
}

ErrorSummary summarize_errors(std::vector<double> errors) {
    ErrorSummary s;
    s.count = errors.size();
    if (errors.empty()) {
        s.median = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    std::sort(errors.begin(), errors.end());
    s.median = median_sorted(errors);
    const auto n = static_cast<double>(errors.size());
    const auto gt = [&](double bound) {
        return static_cast<double>(errors.end() - std::upper_bound(errors.begin(), errors.end(), bound)) / n;
    };
    s.frac_gt100 = gt(100.0);
    s.frac_gt200 = gt(200.0);
    return s;
}

std::size_t eccentricity_bin(double x, double image_width) {
    const double half = image_width / 2.0;
    const double e = std::abs(x - half) / half;
    const auto bin = static_cast<std::size_t>(std::floor(e / 0.2));
    return std::min(bin, kEccentricityBins - 1);
}

ErrorReport sd_error_protocol(std::span<const FramePair> pairs, const ProtocolOptions& opts) {
    opts.validate();
    ErrorReport report;
    std::array<std::vector<double>, kEccentricityBins> binned;
    for (const FramePair* p : select_pairs(pairs, opts)) {
        check_pair(*p);
        if (p->correspondences.size() < 4)
            fail(ErrorCode::InvalidArgument, "pair '" + p->pair_id + "' has insufficient correspondences");
        std::mt19937_64 rng(derive_seed(opts.seed, "pair:" + p->pair_id));
        for (int run = 0; run < opts.runs; ++run) {
            const Homography h = fit_run(*p, opts, rng);
            for (const auto& f : p->fixations) {
                double e = std::numeric_limits<double>::infinity();
                try {
                    const Point2 q = project_point(h, f.src);
                    e = std::hypot(q.x - f.dst.x, q.y - f.dst.y);
                } catch (const Error&) {
                }
                report.errors.push_back(e);
                binned[eccentricity_bin(f.dst.x, opts.image_width)].push_back(e);
            }
        }
        ++report.pairs_used;
    }
    report.overall = summarize_errors(report.errors);
    for (std::size_t b = 0; b < kEccentricityBins; ++b)
        report.eccentricity[b] = summarize_errors(std::move(binned[b]));
    return report;
}

ErrorReport temporal_window_error(std::span<const FramePair> pairs, const ProtocolOptions& opts) {
    opts.validate();
    ErrorReport report;
    std::map<int, std::vector<double>> by_offset;
    for (const FramePair* p : select_pairs(pairs, opts)) {
        check_pair(*p);
        std::mt19937_64 rng(derive_seed(opts.seed, "pair:" + p->pair_id));
        std::vector<std::vector<Point2>> projections(p->fixations.size());
        for (int run = 0; run < opts.runs; ++run) {
            const Homography h = p->offset == 0 ? Homography() : fit_run(*p, opts, rng);
            for (std::size_t k = 0; k < p->fixations.size(); ++k)
                projections[k].push_back(project_point(h, p->fixations[k].src));
        }
        for (const auto& runs : projections) {
            Point2 mean{};
            for (const auto& q : runs) {
                mean.x += q.x;
                mean.y += q.y;
            }
            mean.x /= static_cast<double>(runs.size());
            mean.y /= static_cast<double>(runs.size());
            for (const auto& q : runs) {
                const double e = p->offset == 0 ? 0.0 : std::hypot(q.x - mean.x, q.y - mean.y);
                report.errors.push_back(e);
                by_offset[p->offset].push_back(e);
            }
        }
        ++report.pairs_used;
    }
    report.overall = summarize_errors(report.errors);
    for (auto& [offset, errs] : by_offset)
        report.per_offset[offset] = summarize_errors(std::move(errs));
    return report;
}

std::vector<FramePair> read_frame_pairs(const std::filesystem::path& correspondences,
                                        const std::filesystem::path& references) {
    const auto refs = CsvTable::read(references);
    const auto r_pair = refs.column("pair_id"), r_video = refs.column("video_id"), r_off = refs.column("offset"),
               r_sx = refs.column("src_x"), r_sy = refs.column("src_y"), r_dx = refs.column("dst_x"),
               r_dy = refs.column("dst_y");
    std::vector<FramePair> pairs;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < refs.rows(); ++r) {
        const std::string& id = refs.cell(r, r_pair);
        auto [it, inserted] = index.try_emplace(id, pairs.size());
        if (inserted) {
            FramePair p;
            p.pair_id = id;
            p.video_id = refs.cell(r, r_video);
            p.offset = static_cast<int>(refs.integer(r, r_off));
            pairs.push_back(std::move(p));
        }
        FramePair& p = pairs[it->second];
        if (p.video_id != refs.cell(r, r_video) || p.offset != static_cast<int>(refs.integer(r, r_off)))
            fail(ErrorCode::Parse, references.string() + ":" + std::to_string(refs.line(r)) +
                                       ": pair '" + id + "' has inconsistent video_id/offset");
        ReferenceFixation f;
        f.src = {refs.number(r, r_sx), refs.number(r, r_sy)};
        const bool has_dst = !refs.cell(r, r_dx).empty() && !refs.cell(r, r_dy).empty();
        f.dst = has_dst ? Point2{refs.number(r, r_dx), refs.number(r, r_dy)}
                        : Point2{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        p.fixations.push_back(f);
    }

    const auto corr = CsvTable::read(correspondences);
    const auto c_pair = corr.column("pair_id"), c_sx = corr.column("src_x"), c_sy = corr.column("src_y"),
               c_dx = corr.column("dst_x"), c_dy = corr.column("dst_y");
    for (std::size_t r = 0; r < corr.rows(); ++r) {
        auto it = index.find(corr.cell(r, c_pair));
        if (it == index.end())
            continue; // correspondences of pairs without a reference fixation are unused
        pairs[it->second].correspondences.push_back(
            {{corr.number(r, c_sx), corr.number(r, c_sy)}, {corr.number(r, c_dx), corr.number(r, c_dy)}});
    }
    return pairs;
}

} // namespace gazeaudit
