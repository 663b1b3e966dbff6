#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <plantshape/synth.hpp>
#include <plantshape/tracker.hpp>

using namespace plantshape;

TEST_CASE("with no lateral forces the stem grows straight up") {
    PlantParams p;
    p.phototropic_gain = 0.0;
    p.nutation_amp = 0.0;
    PlantState st = initial_plant_state();
    for (int i = 0; i < 200; ++i) st = step(st, LightCondition::Left, p);
    for (const auto& pt : st.stem.points) CHECK(pt.x == Catch::Approx(0.0).margin(1e-12));
    CHECK(st.stem.tip().y > 1.0);
}

TEST_CASE("constant left light with zero nutation pulls the tip monotonically left") {
    PlantParams p;
    p.nutation_amp = 0.0;
    PlantState st = initial_plant_state();
    double prev_x = st.stem.tip().x;
    for (int i = 0; i < 100; ++i) {
        st = step(st, LightCondition::Left, p);
        CHECK(st.stem.tip().x < prev_x);
        prev_x = st.stem.tip().x;
    }
}

TEST_CASE("mobility decays with the configured half-life") {
    PlantParams p;
    PlantState st = initial_plant_state();
    const auto initial = st.mobility;
    const int steps = 300;
    for (int i = 0; i < steps; ++i) st = step(st, LightCondition::Left, p);
    for (int i = 0; i < kStemPoints; ++i) {
        const double expected = initial[i] * std::pow(2.0, -double(steps) / p.stiffening_halflife);
        CHECK(st.mobility[i] == Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("the anchor never moves and tip height never decreases") {
    PlantParams p;
    PlantState st = initial_plant_state();
    double prev_tip_y = st.stem.tip().y;
    for (int i = 0; i < 500; ++i) {
        st = step(st, openloop_schedule(72)(i), p);
        CHECK(st.stem.points[0] == Point2{0.0, 0.0});
        CHECK(st.stem.tip().y >= prev_tip_y);
        prev_tip_y = st.stem.tip().y;
    }
}

TEST_CASE("one step produces one frame") {
    const auto frames = generate_dataset(PlantParams{}, openloop_schedule(72), 1);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].t == 0);
    CHECK_THROWS_AS(generate_dataset(PlantParams{}, openloop_schedule(72), 0),
                    std::invalid_argument);
}

TEST_CASE("864 steps of six-hour toggling contain 12 light intervals") {
    const auto frames = generate_dataset(PlantParams{}, openloop_schedule(72), 864);
    REQUIRE(frames.size() == 864);
    CHECK(count_light_runs(frames) == 12);
    CHECK(frames[0].light == LightCondition::Left);
    CHECK(frames[72].light == LightCondition::Right);
}

TEST_CASE("dataset generation is bit-identical on re-run") {
    const auto a = generate_dataset(PlantParams{}, openloop_schedule(72), 300);
    const auto b = generate_dataset(PlantParams{}, openloop_schedule(72), 300);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("opposite light schedules produce exactly mirrored sequences") {
    PlantParams p;
    const auto left_first = generate_dataset(p, openloop_schedule(40), 200);
    const auto right_first = generate_dataset(
        p,
        [](long i) { return (i / 40) % 2 == 0 ? LightCondition::Right : LightCondition::Left; },
        200);
    REQUIRE(left_first.size() == right_first.size());
    for (std::size_t i = 0; i < left_first.size(); ++i) {
        const TrackedFrame mirrored = mirror_x(left_first[i]);
        CHECK(mirrored.light == right_first[i].light);
        for (int k = 0; k < kStemPoints; ++k) {
            CHECK(right_first[i].stem.points[k].x ==
                  Catch::Approx(mirrored.stem.points[k].x).margin(1e-12));
            CHECK(right_first[i].stem.points[k].y ==
                  Catch::Approx(mirrored.stem.points[k].y).margin(1e-12));
        }
    }
}

TEST_CASE("stem points stay evenly spaced in y") {
    PlantParams p;
    PlantState st = initial_plant_state();
    for (int i = 0; i < 250; ++i) st = step(st, openloop_schedule(72)(i), p);
    const double tip_y = st.stem.tip().y;
    for (int i = 0; i < kStemPoints; ++i)
        CHECK(st.stem.points[i].y == Catch::Approx(tip_y * i / 9.0).margin(1e-9));
}

TEST_CASE("rendered stems escape the setup envelope where drawn") {
    RenderConfig rc;
    StemPolyline stem;
    for (int i = 0; i < kStemPoints; ++i) stem.points[i] = {0.0, double(i)};
    const RgbImage img = render_stem(stem, rc);
    const SetupEnvelope env = build_envelope({render_background(rc)});
    TrackerConfig cfg;
    cfg.downsample = 1;
    cfg.px_per_cm = rc.px_per_cm;
    const auto pixels = extract_plant_pixels(img, env, cfg);
    CHECK(!pixels.empty());
    // the tip pixel is among them
    const Point2 tip_px = cm_to_px(stem.tip(), rc);
    bool found = false;
    for (const auto& p : pixels)
        if (p.x == int(std::lround(tip_px.x)) && p.y == int(std::lround(tip_px.y))) found = true;
    CHECK(found);
}

TEST_CASE("an out-of-frame stem is clipped and flagged") {
    RenderConfig rc;
    StemPolyline stem;
    for (int i = 0; i < kStemPoints; ++i) stem.points[i] = {0.0, 20.0 * i}; // far past the top
    bool clipped = false;
    render_stem(stem, rc, &clipped);
    CHECK(clipped);

    StemPolyline inside;
    for (int i = 0; i < kStemPoints; ++i) inside.points[i] = {0.0, double(i)};
    clipped = false;
    render_stem(inside, rc, &clipped);
    CHECK(!clipped);
}

TEST_CASE("background render equals the envelope source") {
    RenderConfig rc;
    const RgbImage a = render_background(rc);
    const RgbImage b = render_background(rc);
    CHECK(a.data == b.data);
    std::ostringstream os;
    write_ppm(a, os);
    std::istringstream is(os.str());
    const RgbImage back = read_ppm(is);
    CHECK(back.width == a.width);
    CHECK(back.height == a.height);
    CHECK(back.data == a.data);
}

TEST_CASE("plant parameter validation rejects nonsense") {
    PlantParams p;
    p.growth_rate = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PlantParams{};
    p.nutation_period = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
