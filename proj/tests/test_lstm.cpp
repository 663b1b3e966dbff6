#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <plantshape/lstm.hpp>
#include <plantshape/rng.hpp>

using namespace plantshape;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

std::vector<Sample> random_batch(Rng& rng, int n, int in, int out) {
    std::vector<Sample> batch(n);
    for (auto& s : batch) {
        s.input.resize(in);
        s.target.resize(out);
        for (auto& v : s.input) v = rng.uniform(-1.0, 1.0);
        for (auto& v : s.target) v = rng.uniform(-1.0, 1.0);
    }
    return batch;
}

} // namespace

TEST_CASE("an all-zero network outputs the zero vector") {
    LstmModel m(4, 3, 2);
    LstmState st(3);
    const auto y = forward(m, {0.5, -0.5, 1.0, 0.2}, st);
    REQUIRE(y.size() == 2);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
}

TEST_CASE("a scalar LSTM cell matches the hand-computed update") {
    LstmModel m(1, 1, 1);
    auto& p = m.params();
    p[m.wx(0)] = 0.5;  p[m.wh(0)] = 0.0; p[m.b(0)] = 0.1;  // input gate
    p[m.wx(1)] = -0.3; p[m.wh(1)] = 0.0; p[m.b(1)] = 1.0;  // forget gate
    p[m.wx(2)] = 0.8;  p[m.wh(2)] = 0.0; p[m.b(2)] = -0.2; // candidate
    p[m.wx(3)] = 0.4;  p[m.wh(3)] = 0.0; p[m.b(3)] = 0.3;  // output gate
    p[m.wy()] = 2.0;
    p[m.by()] = 0.25;

    const double x = 0.7;
    auto sg = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double gi = sg(0.5 * x + 0.1);
    const double gg = std::tanh(0.8 * x - 0.2);
    const double go = sg(0.4 * x + 0.3);
    const double c = gi * gg; // zero previous cell state
    const double h = go * std::tanh(c);
    const double y_expected = 2.0 * h + 0.25;

    LstmState st(1);
    const auto y = forward(m, {x}, st);
    CHECK(y[0] == Catch::Approx(y_expected).margin(1e-15));
    CHECK(st.c[0] == Catch::Approx(c).margin(1e-15));
    CHECK(st.h[0] == Catch::Approx(h).margin(1e-15));
}

TEST_CASE("state threading changes the output when recurrence matters") {
    LstmModel m(2, 3, 2);
    m.init_weights(5);
    const std::vector<double> x = {0.4, -0.9};

    LstmState threaded(3);
    forward(m, x, threaded);
    const auto second_threaded = forward(m, x, threaded);

    LstmState fresh(3);
    const auto second_fresh = forward(m, x, fresh);

    bool differs = false;
    for (std::size_t i = 0; i < second_threaded.size(); ++i)
        if (second_threaded[i] != second_fresh[i]) differs = true;
    CHECK(differs);
}

TEST_CASE("forward rejects non-finite and misshaped inputs") {
    LstmModel m(2, 2, 1);
    LstmState st(2);
    CHECK_THROWS_AS(forward(m, {1.0}, st), std::invalid_argument);
    CHECK_THROWS_AS(forward(m, {1.0, std::nan("")}, st), std::invalid_argument);
}

TEST_CASE("mae_loss worked examples") {
    CHECK(mae_loss({{1.0, 2.0}}, {{1.0, 2.0}}) == 0.0);
    std::vector<double> pred(18, 0.5), truth(18, 0.0);
    CHECK(mae_loss({pred}, {truth}) == Catch::Approx(0.5));
    // two samples with per-sample MAEs 0.2 and 0.4
    CHECK(mae_loss({{0.2, 0.2}, {0.4, 0.4}}, {{0.0, 0.0}, {0.0, 0.0}}) == Catch::Approx(0.3));
    CHECK_THROWS_AS(mae_loss({{1.0}}, {{1.0}, {2.0}}), std::invalid_argument);
}

TEST_CASE("gradients vanish on a zero-residual batch") {
    LstmModel m(3, 2, 2);
    m.init_weights(3);
    Sample s;
    s.input = {0.2, -0.1, 0.5};
    LstmState st(2);
    s.target = forward(m, s.input, st);
    std::vector<double> grad;
    const double loss = gradients(m, {s}, grad);
    CHECK(loss == 0.0);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        LstmModel m(4, 3, 3);
        m.init_weights(rng.next_u64());
        auto batch = random_batch(rng, 5, 4, 3);
        std::vector<double> grad;
        gradients(m, batch, grad);

        const double h = 1e-5;
        std::vector<double> dummy;
        for (std::size_t i = 0; i < m.params().size(); i += 7) {
            const double orig = m.params()[i];
            m.params()[i] = orig + h;
            const double up = gradients(m, batch, dummy);
            m.params()[i] = orig - h;
            const double down = gradients(m, batch, dummy);
            m.params()[i] = orig;
            const double fd = (up - down) / (2.0 * h);
            CHECK(rel_err(grad[i], fd) < 1e-4);
        }
    }
}

TEST_CASE("an Adam step with zero gradient leaves parameters unchanged") {
    Adam adam(4, 0.1, 0.9, 0.999, 1e-8);
    std::vector<double> params = {1.0, -2.0, 0.5, 0.0};
    const auto before = params;
    adam.step(params, {0.0, 0.0, 0.0, 0.0});
    CHECK(params == before);
}

TEST_CASE("training is deterministic under a fixed seed") {
    Rng rng(88);
    std::vector<RegressionVector> data(120);
    for (auto& v : data) {
        for (auto& c : v.current) c = rng.uniform(-1.0, 1.0);
        for (auto& n : v.next) n = rng.uniform(-1.0, 1.0);
        v.light = rng.next_double() < 0.5 ? LightCondition::Left : LightCondition::Right;
    }
    TrainConfig cfg;
    cfg.max_epochs = 4;
    cfg.shuffle_seed = 9;

    LstmModel a, b;
    a.init_weights(1);
    b.init_weights(1);
    const auto ra = train(a, data, cfg);
    const auto rb = train(b, data, cfg);
    CHECK(ra.train_loss == rb.train_loss);
    CHECK(ra.val_loss == rb.val_loss);
    CHECK(ra.stop_epoch == rb.stop_epoch);
    CHECK(ra.test_mae == rb.test_mae);
    CHECK(a.params() == b.params());
}

TEST_CASE("early stopping never runs more than patience past the best epoch") {
    Rng rng(321);
    std::vector<RegressionVector> data(150);
    for (auto& v : data) {
        for (auto& c : v.current) c = rng.uniform(-1.0, 1.0);
        for (auto& n : v.next) n = rng.uniform(-1.0, 1.0); // pure noise, quick to stagnate
    }
    TrainConfig cfg;
    cfg.max_epochs = 80;
    cfg.patience = 5;
    LstmModel m;
    m.init_weights(2);
    const auto report = train(m, data, cfg);
    CHECK(report.stop_epoch <= cfg.max_epochs);
    CHECK(report.stop_epoch - report.best_epoch <= cfg.patience);
    CHECK(int(report.train_loss.size()) == report.stop_epoch);
}

TEST_CASE("a constant-target dataset is driven below 1e-4 training loss") {
    Rng rng(55);
    std::vector<RegressionVector> data(3000);
    std::array<double, kStemCoords> constant{};
    for (int i = 0; i < kStemCoords; ++i) constant[i] = 0.1 + 0.01 * i;
    for (auto& v : data) {
        for (auto& c : v.current) c = rng.uniform(-0.5, 0.5);
        v.next = constant;
    }
    TrainConfig cfg;
    cfg.max_epochs = 50;
    cfg.patience = 50;
    LstmModel m;
    m.init_weights(4);
    const auto report = train(m, data, cfg);
    CHECK(report.train_loss.back() < 1e-4);
}

TEST_CASE("predict_stem pins the anchor at the origin") {
    LstmModel m;
    m.init_weights(6);
    StemPolyline s;
    for (int i = 0; i < kStemPoints; ++i) s.points[i] = {0.2 * i, double(i)};
    s.points[0] = {0.0, 0.0};
    const StemPolyline out = m.input_dim() == kLstmInputs
                                 ? predict_stem(m, s, LightCondition::Left)
                                 : StemPolyline{};
    CHECK(out.points[0] == Point2{0.0, 0.0});
    CHECK(out.finite());
}

TEST_CASE("checkpoints round-trip the model exactly") {
    LstmModel m(5, 4, 3);
    m.init_weights(77);
    std::ostringstream os;
    save_checkpoint(m, 123456789u, os);
    std::istringstream is(os.str());
    std::uint64_t seed = 0;
    const LstmModel back = load_checkpoint(is, &seed);
    CHECK(seed == 123456789u);
    CHECK(back.input_dim() == 5);
    CHECK(back.hidden() == 4);
    CHECK(back.output_dim() == 3);
    CHECK(back.params() == m.params());

    std::istringstream bad("wrong header\n");
    CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);
}
