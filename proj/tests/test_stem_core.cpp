#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <plantshape/geometry.hpp>
#include <plantshape/rng.hpp>
#include <plantshape/synth.hpp>

using namespace plantshape;

namespace {

StemPolyline random_stem(Rng& rng) {
    StemPolyline s;
    for (auto& p : s.points) p = {rng.uniform(-20.0, 20.0), rng.uniform(0.0, 40.0)};
    return s;
}

} // namespace

TEST_CASE("StemPolyline rejects wrong point counts") {
    std::vector<Point2> nine(9), eleven(11);
    CHECK_THROWS_AS(StemPolyline(nine), std::invalid_argument);
    CHECK_THROWS_AS(StemPolyline(eleven), std::invalid_argument);
    CHECK_NOTHROW(StemPolyline(std::vector<Point2>(10)));
}

TEST_CASE("mirror_x fixes vertical stems and flips tips") {
    StemPolyline vertical;
    for (int i = 0; i < kStemPoints; ++i) vertical.points[i] = {0.0, double(i)};
    CHECK(mirror_x(vertical) == vertical);

    StemPolyline s = vertical;
    s.tip() = {3.0, 17.9};
    CHECK(mirror_x(s).tip() == Point2{-3.0, 17.9});
}

TEST_CASE("mirror_x is an involution on random stems") {
    Rng rng(42);
    for (int n = 0; n < 100; ++n) {
        const StemPolyline s = random_stem(rng);
        CHECK(mirror_x(mirror_x(s)) == s);
    }
}

TEST_CASE("mirror_x on frames and regression vectors flips light and x") {
    TrackedFrame f;
    f.light = LightCondition::Left;
    f.stem.points[5] = {2.0, 3.0};
    const TrackedFrame m = mirror_x(f);
    CHECK(m.light == LightCondition::Right);
    CHECK(m.stem.points[5] == Point2{-2.0, 3.0});
    CHECK(mirror_x(m) == f);

    RegressionVector v;
    v.current[0] = 1.5;
    v.current[1] = 2.5;
    v.light = LightCondition::Right;
    const RegressionVector mv = mirror_x(v);
    CHECK(mv.current[0] == -1.5);
    CHECK(mv.current[1] == 2.5);
    CHECK(mv.light == LightCondition::Left);
    CHECK(mirror_x(mv) == v);
}

TEST_CASE("stem_coords and stem_from_coords are inverse for anchored stems") {
    Rng rng(7);
    for (int n = 0; n < 50; ++n) {
        StemPolyline s = random_stem(rng);
        s.points[0] = {0.0, 0.0};
        CHECK(stem_from_coords(stem_coords(s)) == s);
    }
}

TEST_CASE("empty frame sequence serializes to a header-only file") {
    std::ostringstream os;
    serialize_frames({}, os);
    CHECK(os.str() == std::string(kFrameFileHeader) + "\n");
    std::istringstream is(os.str());
    CHECK(deserialize_frames(is).empty());
}

TEST_CASE("single frame round-trips identically") {
    TrackedFrame f;
    for (int i = 0; i < kStemPoints; ++i) f.stem.points[i] = {0.0, double(i)};
    f.light = LightCondition::Left;
    f.t = 0;
    std::ostringstream os;
    serialize_frames({f}, os);
    std::istringstream is(os.str());
    const auto back = deserialize_frames(is);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == f);
}

TEST_CASE("1000-frame sequence round-trips byte-identically") {
    const auto frames = generate_dataset(PlantParams{}, openloop_schedule(72), 1000);
    REQUIRE(frames.size() == 1000);
    std::ostringstream first;
    serialize_frames(frames, first);
    std::istringstream is(first.str());
    const auto back = deserialize_frames(is);
    REQUIRE(back.size() == frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) CHECK(back[i] == frames[i]);
    std::ostringstream second;
    serialize_frames(back, second);
    CHECK(first.str() == second.str());
}

TEST_CASE("frame parse errors carry line numbers") {
    std::istringstream missing_header("not a header\n");
    CHECK_THROWS_WITH(deserialize_frames(missing_header),
                      Catch::Matchers::ContainsSubstring("line 1"));

    std::istringstream short_line(std::string(kFrameFileHeader) + "\n0 L 1 2\n");
    CHECK_THROWS_WITH(deserialize_frames(short_line),
                      Catch::Matchers::ContainsSubstring("line 2"));

    std::ostringstream os;
    TrackedFrame f;
    serialize_frames({f, f}, os);
    std::string corrupted = os.str();
    corrupted.replace(corrupted.rfind('0'), 1, "x");
    std::istringstream is(corrupted);
    CHECK_THROWS_WITH(deserialize_frames(is), Catch::Matchers::ContainsSubstring("line 3"));
}

TEST_CASE("regression vectors round-trip exactly") {
    Rng rng(11);
    std::vector<RegressionVector> vecs(25);
    for (auto& v : vecs) {
        for (auto& c : v.current) c = rng.uniform(-10.0, 10.0);
        for (auto& n : v.next) n = rng.uniform(-10.0, 10.0);
        v.light = rng.next_double() < 0.5 ? LightCondition::Left : LightCondition::Right;
    }
    std::ostringstream os;
    serialize_regression(vecs, os);
    std::istringstream is(os.str());
    const auto back = deserialize_regression(is);
    REQUIRE(back.size() == vecs.size());
    for (std::size_t i = 0; i < vecs.size(); ++i) CHECK(back[i] == vecs[i]);
}

TEST_CASE("Obstacle validates its dimensions") {
    CHECK_THROWS_AS(Obstacle({0.0, 0.0}, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Obstacle({0.0, 0.0}, 1.0, -2.0), std::invalid_argument);
    const Obstacle o({1.0, 8.8}, 7.0, 3.0);
    CHECK(o.left() == -2.5);
    CHECK(o.right() == 4.5);
    CHECK(o.bottom() == Catch::Approx(7.3));
    CHECK(o.top() == Catch::Approx(10.3));
}
