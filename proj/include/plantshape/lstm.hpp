#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"

namespace plantshape {

inline constexpr int kLstmInputs = 19;  // 18 stem coords + light bit
inline constexpr int kLstmHidden = 50;
inline constexpr int kLstmOutputs = 18;

// Stem coordinates are fed to the network in units of kCoordScale cm so the
// gate pre-activations stay in their sensitive range for full-height plants.
inline constexpr double kCoordScale = 25.0;

// Single-layer LSTM with a linear readout. Parameters live in one flat
// vector (gate order i, f, g, o; per gate: input weights, recurrent
// weights, bias; then readout weights and bias) so the optimizer and the
// finite-difference check can treat the model as a plain parameter vector.
class LstmModel {
public:
    LstmModel() : LstmModel(kLstmInputs, kLstmHidden, kLstmOutputs) {}

    LstmModel(int input_dim, int hidden, int output_dim)
        : input_dim_(input_dim), hidden_(hidden), output_dim_(output_dim),
          params_(param_count(input_dim, hidden, output_dim), 0.0) {
        if (input_dim < 1 || hidden < 1 || output_dim < 1)
            throw std::invalid_argument("model dimensions must be positive");
    }

    static std::size_t param_count(int in, int hid, int out) {
        return 4 * (std::size_t(hid) * in + std::size_t(hid) * hid + hid) +
               std::size_t(out) * hid + out;
    }

    int input_dim() const { return input_dim_; }
    int hidden() const { return hidden_; }
    int output_dim() const { return output_dim_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // flat-layout offsets
    std::size_t wx(int gate) const { return gate_base(gate); }
    std::size_t wh(int gate) const { return gate_base(gate) + std::size_t(hidden_) * input_dim_; }
    std::size_t b(int gate) const {
        return gate_base(gate) + std::size_t(hidden_) * input_dim_ + std::size_t(hidden_) * hidden_;
    }
    std::size_t wy() const { return gate_base(4); }
    std::size_t by() const { return gate_base(4) + std::size_t(output_dim_) * hidden_; }

    // Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases except
    // the forget gate bias at 1.0.
    void init_weights(std::uint64_t seed) {
        Rng rng(seed);
        const double kx = 1.0 / std::sqrt(double(input_dim_));
        const double kh = 1.0 / std::sqrt(double(hidden_));
        for (int g = 0; g < 4; ++g) {
            double* px = params_.data() + wx(g);
            for (int i = 0; i < hidden_ * input_dim_; ++i) px[i] = rng.uniform(-kx, kx);
            double* ph = params_.data() + wh(g);
            for (int i = 0; i < hidden_ * hidden_; ++i) ph[i] = rng.uniform(-kh, kh);
            double* pb = params_.data() + b(g);
            for (int i = 0; i < hidden_; ++i) pb[i] = (g == 1) ? 1.0 : 0.0;
        }
        double* py = params_.data() + wy();
        for (int i = 0; i < output_dim_ * hidden_; ++i) py[i] = rng.uniform(-kh, kh);
        double* pb = params_.data() + by();
        for (int i = 0; i < output_dim_; ++i) pb[i] = 0.0;
    }

private:
    std::size_t gate_base(int gate) const {
        return std::size_t(gate) *
               (std::size_t(hidden_) * input_dim_ + std::size_t(hidden_) * hidden_ + hidden_);
    }

    int input_dim_;
    int hidden_;
    int output_dim_;
    std::vector<double> params_;
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;

    explicit LstmState(int hidden = kLstmHidden) : h(hidden, 0.0), c(hidden, 0.0) {}
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Caches every intermediate of one cell step, for backprop.
struct LstmTrace {
    std::vector<double> gi, gf, gg, go; // post-activation gates / candidate
    std::vector<double> c, tanh_c, h, y;
};

inline void lstm_step(const LstmModel& m, const double* x, const double* h_prev,
                      const double* c_prev, LstmTrace& tr) {
    const int I = m.input_dim();
    const int H = m.hidden();
    const int O = m.output_dim();
    const double* P = m.params().data();
    tr.gi.resize(H);
    tr.gf.resize(H);
    tr.gg.resize(H);
    tr.go.resize(H);
    tr.c.resize(H);
    tr.tanh_c.resize(H);
    tr.h.resize(H);
    tr.y.resize(O);

    std::vector<double>* gate_out[4] = {&tr.gi, &tr.gf, &tr.gg, &tr.go};
    for (int g = 0; g < 4; ++g) {
        const double* Wx = P + m.wx(g);
        const double* Wh = P + m.wh(g);
        const double* B = P + m.b(g);
        std::vector<double>& out = *gate_out[g];
        for (int r = 0; r < H; ++r) {
            double z = B[r];
            const double* wxr = Wx + std::size_t(r) * I;
            for (int k = 0; k < I; ++k) z += wxr[k] * x[k];
            const double* whr = Wh + std::size_t(r) * H;
            for (int k = 0; k < H; ++k) z += whr[k] * h_prev[k];
            out[r] = (g == 2) ? std::tanh(z) : sigmoid(z);
        }
    }
    for (int r = 0; r < H; ++r) {
        tr.c[r] = tr.gf[r] * c_prev[r] + tr.gi[r] * tr.gg[r];
        tr.tanh_c[r] = std::tanh(tr.c[r]);
        tr.h[r] = tr.go[r] * tr.tanh_c[r];
    }
    const double* Wy = P + m.wy();
    const double* By = P + m.by();
    for (int r = 0; r < O; ++r) {
        double z = By[r];
        const double* wyr = Wy + std::size_t(r) * H;
        for (int k = 0; k < H; ++k) z += wyr[k] * tr.h[k];
        tr.y[r] = z;
    }
}

} // namespace detail

// One recurrent step: (output, new state) from (input, state).
inline std::vector<double> forward(const LstmModel& m, const std::vector<double>& input,
                                   LstmState& state) {
    if (int(input.size()) != m.input_dim())
        throw std::invalid_argument("input size does not match model");
    for (double v : input)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite input");
    detail::LstmTrace tr;
    detail::lstm_step(m, input.data(), state.h.data(), state.c.data(), tr);
    state.h = tr.h;
    state.c = tr.c;
    return tr.y;
}

struct Sample {
    std::vector<double> input;  // input_dim
    std::vector<double> target; // output_dim
};

inline Sample to_sample(const RegressionVector& v) {
    Sample s;
    s.input.reserve(v.current.size() + 1);
    for (double c : v.current) s.input.push_back(c / kCoordScale);
    s.input.push_back(v.light == LightCondition::Left ? 0.0 : 1.0);
    s.target.reserve(v.next.size());
    for (double c : v.next) s.target.push_back(c / kCoordScale);
    return s;
}

// Mean absolute error: mean over the batch of per-sample coordinate-mean
// absolute residuals.
inline double mae_loss(const std::vector<std::vector<double>>& pred,
                       const std::vector<std::vector<double>>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("batch shape mismatch");
    double total = 0.0;
    for (std::size_t n = 0; n < pred.size(); ++n) {
        if (pred[n].size() != truth[n].size()) throw std::invalid_argument("sample shape mismatch");
        double s = 0.0;
        for (std::size_t j = 0; j < pred[n].size(); ++j) s += std::abs(pred[n][j] - truth[n][j]);
        total += s / double(pred[n].size());
    }
    return total / double(pred.size());
}

// Analytic gradient of the batch MAE w.r.t. every parameter, one-step
// sequences with zero initial state. Returns the loss; grad is accumulated
// from zero. The |.| subgradient at 0 is taken as 0.
inline double gradients(const LstmModel& m, const std::vector<Sample>& batch,
                        std::vector<double>& grad) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const int I = m.input_dim();
    const int H = m.hidden();
    const int O = m.output_dim();
    grad.assign(m.params().size(), 0.0);
    const double* P = m.params().data();
    double* G = grad.data();

    std::vector<double> zero_h(H, 0.0), zero_c(H, 0.0);
    detail::LstmTrace tr;
    std::vector<double> dy(O), dh(H), dc(H), dz(H);
    const double inv = 1.0 / (double(batch.size()) * O);
    double loss = 0.0;

    for (const auto& s : batch) {
        if (int(s.input.size()) != I || int(s.target.size()) != O)
            throw std::invalid_argument("sample dimensions do not match model");
        detail::lstm_step(m, s.input.data(), zero_h.data(), zero_c.data(), tr);

        double sample_abs = 0.0;
        for (int r = 0; r < O; ++r) {
            const double res = tr.y[r] - s.target[r];
            sample_abs += std::abs(res);
            dy[r] = res > 0.0 ? inv : (res < 0.0 ? -inv : 0.0);
        }
        loss += sample_abs * inv;
        for (double v : tr.y)
            if (!std::isfinite(v)) throw std::runtime_error("non-finite forward output");

        // readout
        double* GWy = G + m.wy();
        double* GBy = G + m.by();
        std::fill(dh.begin(), dh.end(), 0.0);
        const double* Wy = P + m.wy();
        for (int r = 0; r < O; ++r) {
            GBy[r] += dy[r];
            double* gwr = GWy + std::size_t(r) * H;
            const double* wyr = Wy + std::size_t(r) * H;
            for (int k = 0; k < H; ++k) {
                gwr[k] += dy[r] * tr.h[k];
                dh[k] += wyr[k] * dy[r];
            }
        }

        // cell (c_prev = 0, so the forget path contributes nothing upstream)
        for (int r = 0; r < H; ++r) {
            const double dtanh = dh[r] * tr.go[r];
            dc[r] = dtanh * (1.0 - tr.tanh_c[r] * tr.tanh_c[r]);
        }

        // gate order i, f, g, o
        for (int g = 0; g < 4; ++g) {
            for (int r = 0; r < H; ++r) {
                double dgate;
                switch (g) {
                case 0: dgate = dc[r] * tr.gg[r]; break;
                case 1: dgate = 0.0; break; // dc * c_prev
                case 2: dgate = dc[r] * tr.gi[r]; break;
                default: dgate = dh[r] * tr.tanh_c[r]; break;
                }
                if (g == 2) {
                    dz[r] = dgate * (1.0 - tr.gg[r] * tr.gg[r]);
                } else {
                    const double a = (g == 0) ? tr.gi[r] : (g == 1) ? tr.gf[r] : tr.go[r];
                    dz[r] = dgate * a * (1.0 - a);
                }
            }
            double* GWx = G + m.wx(g);
            double* GB = G + m.b(g);
            for (int r = 0; r < H; ++r) {
                if (dz[r] == 0.0) continue;
                GB[r] += dz[r];
                double* gxr = GWx + std::size_t(r) * I;
                for (int k = 0; k < I; ++k) gxr[k] += dz[r] * s.input[k];
                // h_prev = 0: recurrent weight gradients vanish for one-step
                // sequences, nothing to accumulate.
            }
        }
    }
    return loss;
}

struct TrainConfig {
    int batch_size = 30;
    int max_epochs = 200;
    double lr = 0.001;
    int patience = 10;
    double split_train = 0.70;
    double split_val = 0.20;
    double split_test = 0.10;
    std::uint64_t shuffle_seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (std::abs(split_train + split_val + split_test - 1.0) > 1e-9)
            throw std::invalid_argument("split fractions must sum to 1");
        if (max_epochs < 1 || patience < 1) throw std::invalid_argument("bad epoch settings");
    }
};

struct TrainReport {
    std::vector<double> train_loss; // per epoch
    std::vector<double> val_loss;   // per epoch
    int stop_epoch = 0;             // 1-based epoch at which training stopped
    int best_epoch = 0;             // epoch of the restored weights
    double test_mae = 0.0;
};

class Adam {
public:
    Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, t_);
        const double c2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
            params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
        }
    }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

namespace detail {

inline double dataset_mae(const LstmModel& m, const std::vector<Sample>& set) {
    if (set.empty()) return 0.0;
    std::vector<double> zero_h(m.hidden(), 0.0), zero_c(m.hidden(), 0.0);
    LstmTrace tr;
    double total = 0.0;
    for (const auto& s : set) {
        lstm_step(m, s.input.data(), zero_h.data(), zero_c.data(), tr);
        double acc = 0.0;
        for (int r = 0; r < m.output_dim(); ++r) acc += std::abs(tr.y[r] - s.target[r]);
        total += acc / double(m.output_dim());
    }
    return total / double(set.size());
}

} // namespace detail

// Shuffle, 70/20/10 split, Adam on batches, early stopping on validation
// loss with best-weights restoration. Each pair is a length-1 sequence with
// zero initial state.
inline TrainReport train(LstmModel& model, const std::vector<RegressionVector>& data,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("empty training data");

    std::vector<Sample> samples;
    samples.reserve(data.size());
    for (const auto& v : data) samples.push_back(to_sample(v));

    Rng rng(cfg.shuffle_seed);
    for (std::size_t i = samples.size(); i > 1; --i)
        std::swap(samples[i - 1], samples[rng.next_below(i)]);

    const std::size_t n = samples.size();
    const std::size_t n_train = std::size_t(cfg.split_train * double(n));
    const std::size_t n_val = std::size_t(cfg.split_val * double(n));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw std::invalid_argument("dataset too small for the requested split");
    std::vector<Sample> train_set(samples.begin(), samples.begin() + n_train);
    std::vector<Sample> val_set(samples.begin() + n_train, samples.begin() + n_train + n_val);
    std::vector<Sample> test_set(samples.begin() + n_train + n_val, samples.end());

    Adam adam(model.params().size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    std::vector<double> grad;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = model.params();
    int best_epoch = 0;
    int since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        std::vector<Sample> batch;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            batch.clear();
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
            epoch_loss += gradients(model, batch, grad);
            adam.step(model.params(), grad);
            ++batches;
        }
        report.train_loss.push_back(epoch_loss / double(batches));
        const double lv = detail::dataset_mae(model, val_set);
        report.val_loss.push_back(lv);

        if (lv < best_val) {
            best_val = lv;
            best_params = model.params();
            best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }
        report.stop_epoch = epoch;
        if (since_best >= cfg.patience) break;
    }

    model.params() = best_params;
    report.best_epoch = best_epoch;
    report.test_mae = detail::dataset_mae(model, test_set);
    return report;
}

// Next-stem prediction: 18 coords + light bit in, 18 coords out, anchor
// pinned at the origin. State is reset every step, consistent with training
// on shuffled one-step pairs.
inline StemPolyline predict_stem(const LstmModel& model, const StemPolyline& stem,
                                 LightCondition light) {
    if (model.input_dim() != kLstmInputs || model.output_dim() != kLstmOutputs)
        throw std::invalid_argument("model dimensions do not match stem prediction");
    std::vector<double> input(kLstmInputs);
    const auto coords = stem_coords(stem);
    for (int i = 0; i < kStemCoords; ++i) input[i] = coords[i] / kCoordScale;
    input[kStemCoords] = light == LightCondition::Left ? 0.0 : 1.0;
    LstmState st(model.hidden());
    const auto out = forward(model, input, st);
    std::array<double, kStemCoords> next{};
    for (int i = 0; i < kStemCoords; ++i) next[i] = out[i] * kCoordScale;
    return stem_from_coords(next);
}

// ---------------------------------------------------------------------------
// Checkpoint format: versioned text, exact round-trip.

inline constexpr const char* kCheckpointHeader = "# plantshape lstm v1";

inline void save_checkpoint(const LstmModel& m, std::uint64_t seed, std::ostream& os) {
    os << kCheckpointHeader << '\n';
    os << m.input_dim() << ' ' << m.hidden() << ' ' << m.output_dim() << ' ' << seed << '\n';
    char buf[32];
    for (double v : m.params()) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << '\n';
    }
}

inline LstmModel load_checkpoint(std::istream& is, std::uint64_t* seed_out = nullptr) {
    std::string line;
    if (!std::getline(is, line) || line != kCheckpointHeader)
        throw std::runtime_error("missing checkpoint header");
    int in, hid, out;
    std::uint64_t seed;
    if (!(is >> in >> hid >> out >> seed)) throw std::runtime_error("bad checkpoint dimensions");
    LstmModel m(in, hid, out);
    for (auto& v : m.params())
        if (!(is >> v)) throw std::runtime_error("truncated checkpoint");
    if (seed_out) *seed_out = seed;
    return m;
}

} // namespace plantshape
