#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <plantshape/rng.hpp>
#include <plantshape/tasksim.hpp>

using namespace plantshape;

namespace {

// grows straight up 0.5 cm per step, drifting 0.3 cm toward the light
StemPolyline toy_forward(const StemPolyline& s, LightCondition b) {
    StemPolyline out = s;
    out.tip().y += 0.5;
    out.tip().x += 0.3 * light_sign(b);
    for (int i = 1; i < kStemPoints - 1; ++i)
        out.points[i] = {out.tip().x * i / 9.0, out.tip().y * i / 9.0};
    return out;
}

// point-sampling oracle for segment/rectangle intersection
bool sampled_hit(const Point2& a, const Point2& b, const Obstacle& o) {
    for (int k = 0; k <= 2000; ++k) {
        const double u = k / 2000.0;
        const double x = a.x + u * (b.x - a.x);
        const double y = a.y + u * (b.y - a.y);
        if (x >= o.left() && x <= o.right() && y >= o.bottom() && y <= o.top()) return true;
    }
    return false;
}

} // namespace

TEST_CASE("builtin scenario geometry matches the published layout") {
    const auto left = builtin_scenarios("left_target");
    REQUIRE(left.scenarios.size() == 4);
    for (const auto& sc : left.scenarios) {
        CHECK(sc.target.x == Catch::Approx(-5.12));
        CHECK(sc.target.y == Catch::Approx(17.9));
        CHECK(sc.target_radius == 2.0);
        REQUIRE(sc.obstacles.size() == 1);
        CHECK(sc.obstacles[0].width == 7.0);
        CHECK(sc.obstacles[0].height == 3.0);
        CHECK(sc.obstacles[0].center.y == Catch::Approx(8.8));
    }
    CHECK(left.scenarios[0].obstacles[0].center.x == Catch::Approx(-8.24));
    CHECK(left.scenarios[1].obstacles[0].center.x == Catch::Approx(-5.57));
    CHECK(left.scenarios[2].obstacles[0].center.x == Catch::Approx(-2.90));
    CHECK(left.scenarios[3].obstacles[0].center.x == Catch::Approx(2.43));

    const auto middle = builtin_scenarios("middle_target");
    REQUIRE(middle.scenarios.size() == 2);
    CHECK(middle.scenarios[0].target.x == 0.0);
    CHECK(middle.scenarios[0].obstacles[0].center.x == Catch::Approx(3.0));
    CHECK(middle.scenarios[1].obstacles[0].center.x == Catch::Approx(-3.0));

    CHECK_THROWS_AS(builtin_scenarios("sideways"), std::invalid_argument);
}

TEST_CASE("separated stems do not collide") {
    const Obstacle o({10.0, 10.0}, 7.0, 3.0); // x in [6.5, 13.5]
    StemPolyline s;
    for (int i = 0; i < kStemPoints; ++i) s.points[i] = {5.0, 2.0 * i}; // 1.5 cm clearance
    CHECK(!collides(s, o));
}

TEST_CASE("a crossing segment collides, matching a point-sampling oracle") {
    const Obstacle o({0.0, 10.0}, 7.0, 3.0);
    StemPolyline s;
    for (int i = 0; i < kStemPoints; ++i) s.points[i] = {-6.0 + 1.5 * i, 10.0};
    CHECK(collides(s, o));
    CHECK(sampled_hit(s.points[0], s.points[9], o));

    Rng rng(12);
    for (int n = 0; n < 300; ++n) {
        const Point2 a{rng.uniform(-12.0, 12.0), rng.uniform(5.0, 15.0)};
        const Point2 b{rng.uniform(-12.0, 12.0), rng.uniform(5.0, 15.0)};
        const bool exact = detail::segment_hits_rect(a, b, o);
        const bool sampled = sampled_hit(a, b, o);
        if (sampled) CHECK(exact); // sampling can only under-report touches
        if (!exact) CHECK(!sampled);
    }
}

TEST_CASE("touching the rectangle edge counts as a collision") {
    const Obstacle o({0.0, 10.0}, 7.0, 3.0); // left edge x = -3.5
    StemPolyline s;
    for (int i = 0; i < kStemPoints; ++i) s.points[i] = {-3.5, 8.5 + 0.3 * i};
    CHECK(collides(s, o));
}

TEST_CASE("controller inputs are scaled into [-1, 1]") {
    Scenario sc = builtin_scenarios("left_target").scenarios[0];
    const StemPolyline s = seedling_stem();
    std::vector<double> in;
    controller_inputs(s, sc, in);
    REQUIRE(in.size() == std::size_t(kControllerInputs));
    CHECK(in[0] == 0.0);                          // anchor x
    CHECK(in[1] == Catch::Approx(-1.0));          // anchor y = 0 -> -1
    CHECK(in[20] == Catch::Approx(-5.12 / 40.0)); // target x
    CHECK(in[21] == Catch::Approx((17.9 - 20.0) / 20.0));
    CHECK(in[22] == Catch::Approx(-8.24 / 40.0));
    CHECK(in[23] == Catch::Approx((8.8 - 20.0) / 20.0));
    CHECK(in[24] == Catch::Approx(7.0 / 80.0));
    CHECK(in[25] == Catch::Approx(3.0 / 40.0));
    for (double v : in) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("fitness worked examples reproduce exactly") {
    Scenario left;
    left.target = {-5.12, 17.9};
    CHECK(fitness(Point2{-5.12, 17.9}, left) == Catch::Approx(1.0).margin(1e-12));
    CHECK(fitness(Point2{0.0, 0.0}, left) == Catch::Approx(0.0).margin(1e-12));

    Scenario middle;
    middle.target = {0.0, 17.9};
    CHECK(fitness(Point2{2.0, 17.9}, middle) == Catch::Approx(15.9 / 17.9).margin(1e-12));

    Scenario degenerate;
    degenerate.target = {0.0, 0.0};
    CHECK_THROWS_AS(fitness(Point2{1.0, 1.0}, degenerate), std::invalid_argument);
}

TEST_CASE("an obstacle covering the seedling terminates immediately") {
    Scenario sc;
    sc.target = {0.0, 17.9};
    sc.obstacles.push_back(Obstacle{{0.0, 0.5}, 4.0, 2.0});
    int calls = 0;
    const auto trace = rollout(
        [&](const std::vector<double>&) {
            ++calls;
            return 0.4;
        },
        [](const StemPolyline& s, LightCondition) { return s; }, sc);
    CHECK(trace.cause == TerminalCause::Collision);
    CHECK(trace.stems.size() == 1);
    CHECK(calls == 0);
}

TEST_CASE("rollouts terminate on height with a consistent trace") {
    Scenario sc = builtin_scenarios("middle_target").scenarios[0];
    const auto trace = rollout([](const std::vector<double>&) { return 0.3; }, toy_forward, sc);
    CHECK(trace.cause == TerminalCause::HeightReached);
    CHECK(trace.stems.back().tip().y >= 21.0);
    CHECK(trace.stems.size() == trace.lights.size() + 1);
    CHECK(trace.lights.size() == trace.control.size());
    for (auto b : trace.lights) CHECK(b == LightCondition::Left); // C_t = 0.3 <= 0.5
    CHECK(trace.fitness_value == Catch::Approx(fitness(trace, sc)));
    // all earlier stems clear of the obstacle
    for (const auto& s : trace.stems) CHECK(!collides_any(s, sc.obstacles));

    const auto again = rollout([](const std::vector<double>&) { return 0.3; }, toy_forward, sc);
    CHECK(again.stems.size() == trace.stems.size());
    CHECK(again.stems.back() == trace.stems.back());
}

TEST_CASE("a frozen plant hits the step cap") {
    Scenario sc = builtin_scenarios("middle_target").scenarios[0];
    RolloutLimits lim;
    lim.max_steps = 25;
    const auto trace = rollout([](const std::vector<double>&) { return 0.9; },
                               [](const StemPolyline& s, LightCondition) { return s; }, sc, lim);
    CHECK(trace.cause == TerminalCause::StepCap);
    CHECK(trace.lights.size() == 25);
    for (auto b : trace.lights) CHECK(b == LightCondition::Right); // C_t = 0.9 > 0.5
}

TEST_CASE("a collision trace ends at the first intersecting stem") {
    Scenario sc;
    sc.target = {0.0, 17.9};
    sc.obstacles.push_back(Obstacle{{1.8, 6.0}, 3.0, 2.0});
    // always RIGHT drives the toy tip straight into the obstacle
    const auto trace = rollout([](const std::vector<double>&) { return 1.0; }, toy_forward, sc);
    CHECK(trace.cause == TerminalCause::Collision);
    CHECK(collides_any(trace.stems.back(), sc.obstacles));
    for (std::size_t i = 0; i + 1 < trace.stems.size(); ++i)
        CHECK(!collides_any(trace.stems[i], sc.obstacles));
}

TEST_CASE("genome evaluation averages scenario fitnesses") {
    // two single-scenario sets vs the combined set, using an LSTM forward model
    LstmModel model;
    model.init_weights(42);
    neat::NeatParams np;
    neat::InnovationDb db(kControllerInputs + 2, 0);
    Rng rng(4);
    const neat::Genome g = neat::minimal_genome(kControllerInputs, 1, db, rng, np);

    RolloutLimits lim;
    lim.max_steps = 40; // untrained model; keep it short
    const auto set = builtin_scenarios("middle_target");
    ScenarioSet only_a{"a", {set.scenarios[0]}};
    ScenarioSet only_b{"b", {set.scenarios[1]}};
    const double fa = evaluate_genome(g, model, only_a, lim);
    const double fb = evaluate_genome(g, model, only_b, lim);
    const double fboth = evaluate_genome(g, model, set, lim);
    CHECK(fboth == Catch::Approx((fa + fb) / 2.0).margin(1e-12));
}

TEST_CASE("trace CSV has one row per state and the documented columns") {
    Scenario sc = builtin_scenarios("middle_target").scenarios[0];
    RolloutLimits lim;
    lim.max_steps = 5;
    const auto trace = rollout([](const std::vector<double>&) { return 0.2; }, toy_forward, sc, lim);
    std::ostringstream os;
    write_trace_csv(trace, os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header.substr(0, 14) == "step,light,c_t");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == trace.stems.size());
}
