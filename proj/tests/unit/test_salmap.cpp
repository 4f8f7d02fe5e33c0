#include "doctest.h"

#include "gazeaudit/error.hpp"
#include "gazeaudit/salmap.hpp"

#include "tempdir.hpp"

#include <cmath>
#include <fstream>
#include <random>

using namespace gazeaudit;

namespace {

double gauss(double dx, double dy, double sigma) {
    return dx * dx + dy * dy > 16.0 * sigma * sigma ? 0.0 : std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

SaliencyMap direct_map(const std::vector<std::pair<Fixation, double>>& weighted, double sigma, ImageSize size) {
    SaliencyMap m(size.width, size.height);
    for (std::uint32_t y = 0; y < size.height; ++y)
        for (std::uint32_t x = 0; x < size.width; ++x)
            for (const auto& [f, w] : weighted)
                m.at(x, y) += w * gauss(x - f.x, y - f.y, sigma);
    return m;
}

bool non_negative(const SaliencyMap& m) {
    for (double v : m.values())
        if (v < 0.0)
            return false;
    return true;
}

} // namespace

TEST_CASE("recipe defaults") {
    const auto b = recipe_defaults("bdda");
    CHECK(b.recipe == Recipe::MultiObserver);
    CHECK(b.sigma_spatial == 25.0);
    CHECK(b.sigma_temporal == 4.0);
    const auto d = recipe_defaults("dreyeve");
    CHECK(d.recipe == Recipe::TemporalWindow);
    CHECK(d.window_halfwidth == 12);
    CHECK(d.combine == Combine::Max);
    const auto l = recipe_defaults("lbw");
    CHECK(l.recipe == Recipe::SingleFixation);
    CHECK(l.sigma_spatial == 60.0);
    CHECK_THROWS_AS(recipe_defaults("salicon"), Error);
}

TEST_CASE("gaze filtering drops saccades, blinks and in-vehicle glances by default") {
    std::vector<GazeSample> s{{0, 1, 1, GazeEvent::Fixation}, {0, 0, 0, GazeEvent::Blink},
                              {1, 5, 5, GazeEvent::Saccade},  {1, 2, 2, GazeEvent::InVehicle},
                              {2, -9, 3, GazeEvent::Offscreen}};
    const auto r = filter_gaze(s, kDefaultDroppedEvents);
    CHECK(r.dropped == 3);
    CHECK(r.dropped_fraction == doctest::Approx(0.6));
    REQUIRE(r.fixations.size() == 2);
    CHECK(r.fixations[1].x == -9);
    CHECK(r.composition.count(GazeEvent::Blink) == 1);
    const std::array keep_vehicle{GazeEvent::Saccade, GazeEvent::Blink};
    CHECK(filter_gaze(s, keep_vehicle).fixations.size() == 3);
    CHECK(gaze_composition(s).fraction(GazeEvent::Fixation) == doctest::Approx(0.2));
    CHECK_THROWS_AS(gaze_composition(std::vector<GazeSample>{}), Error);
}

TEST_CASE("I-DT centroids and durations") {
    std::vector<RawGazePoint> pts;
    // 10 samples around (100, 100), a saccade sample, then 6 around (300, 50).
    for (int i = 0; i < 10; ++i)
        pts.push_back({i * 10.0, 100.0 + (i % 2), 100.0 - (i % 3), i});
    pts.push_back({100.0, 200.0, 80.0, 10});
    for (int i = 0; i < 6; ++i)
        pts.push_back({110.0 + i * 10.0, 300.0, 50.0 + (i % 2), 11 + i});
    const auto fx = detect_fixations_idt(pts, 5.0, 50.0);
    REQUIRE(fx.size() == 2);
    CHECK(fx[0].frame == 0);
    CHECK(fx[0].x == doctest::Approx(100.5));
    CHECK(fx[0].y == doctest::Approx((100.0 * 10 - (0 + 1 + 2 + 0 + 1 + 2 + 0 + 1 + 2 + 0)) / 10.0));
    CHECK(*fx[0].duration_ms == doctest::Approx(90.0));
    CHECK(fx[1].frame == 11);
    CHECK(fx[1].y == doctest::Approx(50.5));
    CHECK(*fx[1].duration_ms == doctest::Approx(50.0));
    std::swap(pts[0], pts[1]);
    CHECK_THROWS_AS(detect_fixations_idt(pts, 5.0, 50.0), Error);
}

TEST_CASE("spatial map equals a direct Gaussian sum") {
    const ImageSize size{40, 30};
    const std::vector<Fixation> fx{{0, 10.3, 12.7, {}}, {0, 25.0, 5.0, {}}, {0, 80.0, 5.0, {}}};
    const auto m = spatial_gaussian_map(fx, 4.0, size);
    const auto want = direct_map({{fx[0], 1.0}, {fx[1], 1.0}}, 4.0, size).normalized_sum();
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(m.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
    CHECK(m.sum() == doctest::Approx(1.0));
    CHECK_THROWS_AS(spatial_gaussian_map(std::vector<Fixation>{{0, -5, 0, {}}}, 4.0, size), Error);
}

TEST_CASE("temporal weights") {
    CHECK(temporal_weight(4, 4.0) / temporal_weight(0, 4.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(temporal_weight(-4, 4.0) == temporal_weight(4, 4.0));
    CHECK(temporal_weight(16, 4.0) > 0.0);
    CHECK(temporal_weight(17, 4.0) == 0.0);
}

TEST_CASE("multi-observer superposition weighs neighbouring frames") {
    const ImageSize size{32, 24};
    const std::vector<std::vector<Fixation>> obs{{{10, 8, 8, {}}, {14, 20, 12, {}}}, {{10, 16, 4, {}}}};
    const auto raw = multi_observer_raw(obs, 10, size, 3.0, 4.0);
    const auto want = direct_map({{obs[0][0], 1.0}, {obs[0][1], std::exp(-0.5)}, {obs[1][0], 1.0}}, 3.0, size);
    for (std::size_t i = 0; i < raw.size(); ++i)
        CHECK(raw.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
    const auto maps = multi_observer_maps(obs, 9, 11, size, 3.0, 4.0);
    REQUIRE(maps.size() == 3);
    for (const auto& m : maps) {
        CHECK(m.sum() == doctest::Approx(1.0));
        CHECK(non_negative(m));
    }
    CHECK_THROWS_AS(multi_observer_map(obs, 200, size, 3.0, 4.0), Error);
}

TEST_CASE("temporal window map of separated fixations is the pointwise max") {
    const ImageSize size{120, 60};
    const double sigma = 4.0;
    WindowHomographies hs;
    hs[{50, 47}] = Homography::translation(40, 0);
    const std::vector<Fixation> fx{{50, 20, 30, {}}, {47, 20, 30, {}}, {80, 5, 5, {}}};
    const auto m = temporal_window_map(fx, hs, 50, 12, sigma, size);
    const auto a = temporal_window_map(std::vector<Fixation>{fx[0]}, hs, 50, 12, sigma, size);
    const auto b = temporal_window_map(std::vector<Fixation>{fx[1]}, hs, 50, 12, sigma, size);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(m.values()[i] == std::max(a.values()[i], b.values()[i]));
    CHECK(m.max() == 1.0);
    CHECK(m.at(60, 30) == 1.0);
    CHECK(non_negative(m));
    CHECK_THROWS_AS(temporal_window_map(std::vector<Fixation>{{45, 1, 1, {}}}, hs, 50, 12, sigma, size), Error);
    CHECK_THROWS_AS(temporal_window_map(std::vector<Fixation>{{10, 1, 1, {}}}, hs, 50, 12, sigma, size), Error);
}

TEST_CASE("window homography files") {
    fixture::TempDir dir("wh");
    {
        std::ofstream out(dir / "h.csv");
        out << "key_frame,frame,h00,h01,h02,h10,h11,h12,h20,h21,h22\n5,4,1,0,2,0,1,0,0,0,1\n";
    }
    const auto hs = read_window_homographies(dir / "h.csv");
    REQUIRE(hs.size() == 1);
    CHECK(hs.at({5, 4}) == Homography::translation(2, 0));
}

TEST_CASE("single fixation maps clamp or reject off-frame gaze") {
    const ImageSize size{50, 40};
    const auto m = single_fixation_map({0, 25, 20, {}}, 6.0, size);
    CHECK(m.sum() == doctest::Approx(1.0));
    CHECK(m.max() == m.at(25, 20));
    const auto clamped = single_fixation_map({0, -30, 20, {}}, 6.0, size);
    CHECK(clamped.max() == clamped.at(0, 20));
    CHECK_THROWS_AS(single_fixation_map({0, -30, 20, {}}, 6.0, size, OffFramePolicy::Reject), Error);
}

TEST_CASE("entropy grows with spread") {
    const ImageSize size{64, 64};
    const auto narrow = single_fixation_map({0, 32, 32, {}}, 2.0, size);
    const auto wide = single_fixation_map({0, 32, 32, {}}, 8.0, size);
    CHECK(map_entropy(wide) > map_entropy(narrow));
    CHECK(map_entropy(SaliencyMap(4, 4, std::vector<double>(16, 1.0))) == doctest::Approx(std::log(16.0)));
}
