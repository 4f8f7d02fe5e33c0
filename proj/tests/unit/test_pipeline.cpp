#include "doctest.h"

#include "gazeaudit/error.hpp"
#include "gazeaudit/io.hpp"
#include "gazeaudit/pipeline.hpp"

#include "fixture.hpp"
#include "tempdir.hpp"

#include <cmath>
#include <map>

using namespace gazeaudit;

namespace {

struct Sink {
    std::vector<std::string> messages;
    MessageSink fn() {
        return [this](const std::string& m) { messages.push_back(m); };
    }
    bool saw(std::string_view needle) const {
        for (const auto& m : messages)
            if (m.find(needle) != std::string::npos)
                return true;
        return false;
    }
};

std::string cell(const std::string& csv, const std::string& row_key, const std::string& column) {
    const auto t = CsvTable::parse(csv, "report");
    const auto c = t.column(column);
    for (std::size_t r = 0; r < t.rows(); ++r)
        if (t.cell(r, 0) == row_key)
            return t.cell(r, c);
    FAIL("row not found: " << row_key);
    return {};
}

void segment_all(const fixture::FixtureDataset& ds) {
    for (const auto& v : ds.videos)
        run_segment({ds.manifest, v.id, ds.root / "annotations" / (v.id + ".annotations.json"), {}});
}

} // namespace

TEST_CASE("segment writes truth labels and keeps manual fields") {
    fixture::TempDir dir("pipe_seg");
    const auto ds = fixture::write_fixture_dataset(dir / "ds");
    segment_all(ds);
    for (const auto& v : ds.videos) {
        const auto doc = read_annotations(ds.root / "annotations" / (v.id + ".annotations.json"));
        CHECK(doc.first_frame == v.first_frame);
        CHECK(doc.last_frame == v.last_frame());
        CHECK(doc.context_events == v.events);
        CHECK(lateral_per_frame(doc) == v.lateral);
        CHECK(effective_actions(doc) == v.actions());
        std::vector<Longitudinal> lon;
        for (const auto& r : doc.longitudinal)
            lon.insert(lon.end(), static_cast<std::size_t>(r.end_frame - r.start_frame + 1), r.label);
        CHECK(lon == v.longitudinal);
    }

    Sink sink;
    AnnotationDocument other;
    other.video_id = "clip_a";
    other.first_frame = 0;
    other.last_frame = 10;
    other.lateral = {{0, 5, LateralClass::Turn}};
    const auto path = dir / "short.json";
    write_annotations(other, path);
    run_segment({ds.manifest, "clip_a", path, {}}, sink.fn());
    CHECK(sink.saw("different span"));
    CHECK(read_annotations(path).lateral.empty());

    CHECK_THROWS_AS(run_segment({ds.manifest, "nope", dir / "x.json", {}}), Error);
}

TEST_CASE("stats reproduce the counting oracle") {
    fixture::TempDir dir("pipe_stats");
    const auto ds = fixture::write_fixture_dataset(dir / "ds");
    CHECK_THROWS_AS(run_stats({ds.manifest, dir / "early.csv"}), Error); // no longitudinal labels yet
    segment_all(ds);
    Sink sink;
    run_stats({ds.manifest, dir / "stats.csv"}, sink.fn());
    CHECK(sink.saw("1 context events without priority"));
    const auto csv = read_file(dir / "stats.csv");

    std::map<ActionCategory, std::size_t> counts;
    std::size_t included = 0;
    for (const auto& v : ds.videos)
        for (auto a : v.actions()) {
            ++counts[a];
            included += a != ActionCategory::Excluded;
        }
    const auto t = CsvTable::parse(csv, "stats");
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (t.cell(r, 0) != "action")
            continue;
        const auto a = parse_action_category(t.cell(r, 1));
        CHECK(static_cast<std::size_t>(t.integer(r, 2)) == counts[a]);
        if (a != ActionCategory::Excluded)
            CHECK(t.number(r, 3) == doctest::Approx(100.0 * counts[a] / included).epsilon(1e-9));
    }
    std::map<std::string, std::size_t> ctx;
    std::size_t unlabeled = 0;
    for (const auto& v : ds.videos)
        for (const auto& e : v.events) {
            if (e.priority)
                ++ctx[std::string(to_string(e.intersection_type)) + "/" + std::string(to_string(*e.priority))];
            else
                ++unlabeled;
        }
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (t.cell(r, 0) != "context")
            continue;
        if (t.cell(r, 1) == "unlabeled")
            CHECK(static_cast<std::size_t>(t.integer(r, 2)) == unlabeled);
        else
            CHECK(static_cast<std::size_t>(t.integer(r, 2)) == ctx[t.cell(r, 1)]);
    }
}

TEST_CASE("audit reports planted gaps and exposure faults") {
    fixture::TempDir dir("pipe_audit");
    const auto ds = fixture::write_fixture_dataset(dir / "ds");
    segment_all(ds);
    run_audit({ds.manifest, "", dir / "audit.csv", {}, 2});
    const auto csv = read_file(dir / "audit.csv");
    for (const auto& v : ds.videos) {
        const auto span = static_cast<std::size_t>(v.last_frame() - v.first_frame + 1);
        CHECK(cell(csv, v.id, "span_frames") == std::to_string(span));
        CHECK(cell(csv, v.id, "missing_frames") == std::to_string(span - v.present_frames.size()));
        CHECK(cell(csv, v.id, "overexposed") == std::to_string(v.bright_frames.size()));
        CHECK(cell(csv, v.id, "underexposed") == std::to_string(v.dark_frames.size()));
        CHECK(std::stod(cell(csv, v.id, "telemetry_rate_hz")) == doctest::Approx(ds.fps));
        CHECK(cell(csv, v.id, "telemetry_gaps") == "0");
    }
    CHECK(cell(csv, "clip_a", "segments") == "3");
    CHECK(cell(csv, "clip_b", "segments") == "13");
    CHECK(cell(csv, "ALL", "missing_frames") == "37");
    CHECK(std::stod(cell(csv, "clip_a", "gaze_blink")) > 0.0);

    run_audit({ds.manifest, "clip_b", dir / "b.csv", {}, 1});
    CHECK(CsvTable::read(dir / "b.csv").rows() == 2);
}

TEST_CASE("salmap recipes write one map per frame with gaze") {
    fixture::TempDir dir("pipe_salmap");
    const auto ds = fixture::write_fixture_dataset(dir / "ds");
    const auto& b = ds.videos[1];
    const auto span = static_cast<std::size_t>(b.last_frame() - b.first_frame + 1);
    for (const char* recipe : {"bdda", "dreyeve", "lbw"}) {
        SalmapCommand cmd;
        cmd.manifest = ds.manifest;
        cmd.video = b.id;
        cmd.recipe = recipe;
        cmd.out_dir = dir / recipe;
        const auto s = run_salmap(cmd);
        CHECK(s.written + s.skipped.size() == span);
        const auto files = list_numbered_files(cmd.out_dir);
        CHECK(files.size() == s.written);
        for (const auto& [f, p] : files) {
            const auto m = read_saliency_map(p);
            CHECK(m.width() == ds.size.width);
            if (std::string(recipe) == "dreyeve")
                CHECK(m.max() == doctest::Approx(1.0));
            else
                CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-5));
            if (f > b.first_frame + 20)
                break;
        }
    }
    SalmapCommand bad;
    bad.manifest = ds.manifest;
    bad.video = b.id;
    bad.recipe = "salicon";
    bad.out_dir = dir / "bad";
    CHECK_THROWS_AS(run_salmap(bad), Error);
}

TEST_CASE("eval stratifies by action and scenario") {
    fixture::TempDir dir("pipe_eval");
    const auto ds = fixture::write_fixture_dataset(dir / "ds");
    segment_all(ds);
    std::map<std::string, std::vector<FrameIndex>> skipped;
    for (const auto& v : ds.videos) {
        SalmapCommand cmd;
        cmd.manifest = ds.manifest;
        cmd.video = v.id;
        cmd.recipe = "bdda";
        cmd.out_dir = dir / "gt" / v.id;
        skipped[v.id] = run_salmap(cmd).skipped;
    }
    fixture::write_predictions(ds, dir / "pred", 10.0, 3.0);

    EvalCommand cmd;
    cmd.manifest = ds.manifest;
    cmd.pred_dir = dir / "pred";
    cmd.gt_dir = dir / "gt";
    cmd.out = dir / "report.csv";
    const auto report = run_eval(cmd);
    REQUIRE(report.rows.size() == 15);

    // Frame-count oracle from the fixture truth.
    std::size_t overall = 0;
    std::map<std::string, std::size_t> per_class;
    for (const auto& v : ds.videos) {
        const auto acts = v.actions();
        for (FrameIndex f = v.first_frame; f <= v.last_frame(); ++f) {
            if (std::find(skipped[v.id].begin(), skipped[v.id].end(), f) != skipped[v.id].end())
                continue;
            if (acts[static_cast<std::size_t>(f - v.first_frame)] == ActionCategory::Excluded)
                continue;
            ++overall;
            for (const auto& e : v.events) {
                if (!e.priority)
                    continue;
                const FrameIndex first = e.yield_onset_frame ? *e.yield_onset_frame : e.crossing_frame - 30;
                if (f >= first && f <= e.crossing_frame)
                    ++per_class[std::string(to_string(e.intersection_type)) + "/" +
                                std::string(to_string(*e.priority))];
            }
        }
    }
    CHECK(report.rows[0].n_frames == overall);
    for (const auto& r : report.rows)
        if (r.group == "context")
            CHECK(r.n_frames == per_class[r.category]);
    const auto cc = *report.rows[0].mean[static_cast<std::size_t>(Metric::CC)];
    CHECK(cc > 0.0);
    CHECK(cc <= 1.0);
    CHECK(read_file(cmd.out) == report_to_csv(report));

    cmd.out = dir / "report.md";
    run_eval(cmd);
    CHECK(read_file(cmd.out).rfind("| group |", 0) == 0);

    std::filesystem::remove(dir / "pred" / "clip_b" / "000300.smap");
    cmd.out = dir / "r2.csv";
    try {
        run_eval(cmd);
        FAIL("missing prediction accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotFound);
        CHECK(std::string(e.what()).find("300") != std::string::npos);
    }
}

TEST_CASE("homaudit report layout") {
    fixture::TempDir dir("pipe_hom");
    fixture::PairOptions po;
    po.pairs = 20;
    po.fixation_noise_px = 5.0;
    fixture::write_frame_pairs(fixture::make_frame_pairs(po), dir / "c.csv", dir / "r.csv");
    HomauditCommand cmd;
    cmd.pairs_file = dir / "c.csv";
    cmd.refs_file = dir / "r.csv";
    cmd.out = dir / "sd.csv";
    cmd.options.runs = 3;
    const auto rep = run_homaudit(cmd);
    const auto csv = read_file(cmd.out);
    CHECK(csv.rfind("section,key,count,median_px,frac_gt100,frac_gt200\nmeta,pairs_used,20,,,\noverall,all,600,", 0) ==
          0);
    CHECK(csv.find("eccentricity,0.8-1.0,") != std::string::npos);
    CHECK(rep.errors.size() == 600);
}

TEST_CASE("context suggestions land on the planted junctions") {
    fixture::TempDir dir("pipe_ctx");
    fixture::FixtureOptions opts;
    opts.write_annotations = false;
    const auto ds = fixture::write_fixture_dataset(dir / "ds", opts);
    const auto out = ds.root / "annotations" / "clip_a.annotations.json";
    run_context({ds.manifest, {}, "clip_a", kDefaultMatchRadiusM, out});
    const auto doc = read_annotations(out);
    std::vector<std::pair<FrameIndex, IntersectionType>> got;
    for (const auto& e : doc.context_events) {
        CHECK_FALSE(e.confirmed);
        got.emplace_back(e.crossing_frame, e.intersection_type);
    }
    // Oracle: first frame of minimum along-track distance to each planted junction within the radius.
    const auto& a = ds.videos[0];
    std::vector<std::pair<FrameIndex, IntersectionType>> want;
    for (const auto& j : ds.junctions) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < a.x_m.size(); ++i)
            if (std::abs(a.x_m[i] - j.x_m) < std::abs(a.x_m[best] - j.x_m))
                best = i;
        if (std::abs(a.x_m[best] - j.x_m) > kDefaultMatchRadiusM)
            continue;
        const auto type = j.kind == fixture::Junction::Signalized   ? IntersectionType::Signalized
                          : j.kind == fixture::Junction::Roundabout ? IntersectionType::Roundabout
                          : j.kind == fixture::Junction::Ramp       ? IntersectionType::HighwayRamp
                                                                    : IntersectionType::Unsignalized;
        want.emplace_back(a.first_frame + static_cast<FrameIndex>(best), type);
    }
    REQUIRE(want.size() == 4);
    CHECK(got == want);
    // Re-running is idempotent.
    run_context({ds.manifest, {}, "clip_a", kDefaultMatchRadiusM, out});
    CHECK(read_annotations(out) == doc);

    Sink sink;
    run_context({ds.manifest, {}, "clip_b", kDefaultMatchRadiusM, dir / "b.json"}, sink.fn());
    CHECK(sink.saw("outside the extract"));
    CHECK_THROWS_AS(run_context({ds.manifest, {}, "clip_b", kDefaultMatchRadiusM, out}), Error);
}
