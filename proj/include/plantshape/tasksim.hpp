#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "lstm.hpp"
#include "neat.hpp"

namespace plantshape {

inline constexpr int kControllerInputs = 26; // 20 stem coords + 2 target + 4 obstacle

// Workspace extents used to scale controller inputs into [-1, 1].
inline constexpr double kWorkspaceXHalf = 40.0; // x in [-40, 40] cm
inline constexpr double kWorkspaceYMax = 40.0;  // y in [0, 40] cm

struct ScenarioSet {
    std::string tag; // "left_target" or "middle_target"
    std::vector<Scenario> scenarios;
};

// The six task configurations of the two experiments. Obstacles are
// 7 x 3 cm rectangles; "height 8.8 cm" is read as the rectangle center.
inline ScenarioSet builtin_scenarios(const std::string& tag) {
    ScenarioSet set;
    set.tag = tag;
    if (tag == "left_target") {
        const Point2 target{-5.12, 17.9};
        const double base_x = -8.24;
        const double xs[4] = {base_x, base_x + 2.67, base_x + 2.67 + 2.67,
                              base_x + 2.67 + 2.67 + 5.33};
        for (double x : xs) {
            Scenario sc;
            sc.target = target;
            sc.target_radius = 2.0;
            sc.obstacles.push_back(Obstacle{Point2{x, 8.8}, 7.0, 3.0});
            set.scenarios.push_back(sc);
        }
    } else if (tag == "middle_target") {
        for (double x : {3.0, -3.0}) {
            Scenario sc;
            sc.target = {0.0, 17.9};
            sc.target_radius = 2.0;
            sc.obstacles.push_back(Obstacle{Point2{x, 8.8}, 7.0, 3.0});
            set.scenarios.push_back(sc);
        }
    } else {
        throw std::invalid_argument("unknown scenario set tag: " + tag);
    }
    return set;
}

namespace detail {

// Liang-Barsky segment vs closed rectangle; touching counts as intersection.
inline bool segment_hits_rect(const Point2& p, const Point2& q, const Obstacle& o) {
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    double t0 = 0.0, t1 = 1.0;
    const double pvals[4] = {-dx, dx, -dy, dy};
    const double qvals[4] = {p.x - o.left(), o.right() - p.x, p.y - o.bottom(), o.top() - p.y};
    for (int i = 0; i < 4; ++i) {
        if (pvals[i] == 0.0) {
            if (qvals[i] < 0.0) return false; // parallel and outside
        } else {
            const double r = qvals[i] / pvals[i];
            if (pvals[i] < 0.0) {
                if (r > t1) return false;
                if (r > t0) t0 = r;
            } else {
                if (r < t0) return false;
                if (r < t1) t1 = r;
            }
        }
    }
    return t0 <= t1;
}

} // namespace detail

// True iff any of the 9 stem segments touches the closed rectangle.
inline bool collides(const StemPolyline& stem, const Obstacle& obstacle) {
    for (int i = 0; i + 1 < kStemPoints; ++i)
        if (detail::segment_hits_rect(stem.points[i], stem.points[i + 1], obstacle)) return true;
    return false;
}

inline bool collides_any(const StemPolyline& stem, const std::vector<Obstacle>& obstacles) {
    for (const auto& o : obstacles)
        if (collides(stem, o)) return true;
    return false;
}

// 26 controller inputs, scaled to [-1, 1] by the workspace extents. The
// first obstacle is encoded as center x, center y, width, height; width and
// height are scaled by the full workspace ranges.
inline void controller_inputs(const StemPolyline& stem, const Scenario& scenario,
                              std::vector<double>& out) {
    out.resize(kControllerInputs);
    auto sx = [](double x) { return x / kWorkspaceXHalf; };
    auto sy = [](double y) { return (y - kWorkspaceYMax / 2.0) / (kWorkspaceYMax / 2.0); };
    for (int i = 0; i < kStemPoints; ++i) {
        out[2 * i] = sx(stem.points[i].x);
        out[2 * i + 1] = sy(stem.points[i].y);
    }
    out[20] = sx(scenario.target.x);
    out[21] = sy(scenario.target.y);
    if (scenario.obstacles.empty()) throw std::invalid_argument("scenario without obstacle");
    const Obstacle& o = scenario.obstacles[0];
    out[22] = sx(o.center.x);
    out[23] = sy(o.center.y);
    out[24] = o.width / (2.0 * kWorkspaceXHalf);
    out[25] = o.height / kWorkspaceYMax;
    return;
}

enum class TerminalCause { HeightReached, Collision, StepCap };

struct RolloutLimits {
    int max_steps = 1500;         // safety cap; about 5.2 simulated days
    double target_height = 21.0;  // cm; tip height that ends a run
};

struct RolloutTrace {
    std::vector<StemPolyline> stems;       // visited states, initial first
    std::vector<LightCondition> lights;    // action taken at each step
    std::vector<double> control;           // raw C_t values
    TerminalCause cause = TerminalCause::StepCap;
    double fitness_value = 0.0;
};

// Controller: 26 scaled inputs -> C_t in (0,1).
using ControlFn = std::function<double(const std::vector<double>&)>;
// Forward model: (stem, light) -> next stem.
using ForwardFn = std::function<StemPolyline(const StemPolyline&, LightCondition)>;

inline StemPolyline seedling_stem(double height_cm = 1.0) {
    StemPolyline s;
    for (int i = 0; i < kStemPoints; ++i) s.points[i] = {0.0, height_cm * i / 9.0};
    return s;
}

// Tip-distance reward along each axis, normalized by the theoretical best.
inline double fitness(const Point2& final_tip, const Scenario& scenario) {
    const double ax = std::abs(scenario.target.x);
    const double ay = std::abs(scenario.target.y);
    if (ax + ay == 0.0) throw std::invalid_argument("degenerate target at the origin");
    const double xr = ax - std::abs(scenario.target.x - final_tip.x);
    const double yr = ay - std::abs(scenario.target.y - final_tip.y);
    return (xr + yr) / (ax + ay);
}

inline double fitness(const RolloutTrace& trace, const Scenario& scenario) {
    if (trace.stems.empty()) throw std::invalid_argument("empty trace");
    return fitness(trace.stems.back().tip(), scenario);
}

// Step-wise simulation: controller picks the light, the forward model moves
// the plant, terminated by collision, tip height, or the step cap.
inline RolloutTrace rollout(const ControlFn& controller, const ForwardFn& model,
                            const Scenario& scenario, const RolloutLimits& limits = {}) {
    RolloutTrace trace;
    StemPolyline stem = seedling_stem();
    trace.stems.push_back(stem);
    std::vector<double> inputs;
    if (collides_any(stem, scenario.obstacles)) {
        trace.cause = TerminalCause::Collision;
        trace.fitness_value = fitness(stem.tip(), scenario);
        return trace;
    }
    for (int step_i = 0; step_i < limits.max_steps; ++step_i) {
        controller_inputs(stem, scenario, inputs);
        const double ct = controller(inputs);
        const LightCondition light = ct <= 0.5 ? LightCondition::Left : LightCondition::Right;
        trace.lights.push_back(light);
        trace.control.push_back(ct);
        stem = model(stem, light);
        trace.stems.push_back(stem);
        if (collides_any(stem, scenario.obstacles)) {
            trace.cause = TerminalCause::Collision;
            trace.fitness_value = fitness(stem.tip(), scenario);
            return trace;
        }
        if (stem.tip().y >= limits.target_height) {
            trace.cause = TerminalCause::HeightReached;
            trace.fitness_value = fitness(stem.tip(), scenario);
            return trace;
        }
    }
    trace.cause = TerminalCause::StepCap;
    trace.fitness_value = fitness(stem.tip(), scenario);
    return trace;
}

// ---------------------------------------------------------------------------
// Fast evaluation path for evolution: no trace storage, preallocated LSTM
// buffers, phenotype reused across scenarios.

class LstmForward {
public:
    explicit LstmForward(const LstmModel& model) : model_(model), zero_h_(model.hidden(), 0.0),
                                                   zero_c_(model.hidden(), 0.0) {
        if (model.input_dim() != kLstmInputs || model.output_dim() != kLstmOutputs)
            throw std::invalid_argument("forward model has wrong dimensions");
        input_.resize(kLstmInputs);
    }

    StemPolyline next(const StemPolyline& stem, LightCondition light) {
        const auto coords = stem_coords(stem);
        for (int i = 0; i < kStemCoords; ++i) input_[i] = coords[i] / kCoordScale;
        input_[kStemCoords] = light == LightCondition::Left ? 0.0 : 1.0;
        detail::lstm_step(model_, input_.data(), zero_h_.data(), zero_c_.data(), tr_);
        std::array<double, kStemCoords> next_coords{};
        for (int i = 0; i < kStemCoords; ++i) next_coords[i] = tr_.y[i] * kCoordScale;
        return stem_from_coords(next_coords);
    }

    ForwardFn as_fn() {
        return [this](const StemPolyline& s, LightCondition b) { return next(s, b); };
    }

private:
    const LstmModel& model_;
    std::vector<double> zero_h_, zero_c_, input_;
    detail::LstmTrace tr_;
};

// Fitness of one rollout without recording the trace.
inline double rollout_fitness(neat::Phenotype& phenotype, LstmForward& model,
                              const Scenario& scenario, const RolloutLimits& limits,
                              std::vector<double>& inputs) {
    phenotype.reset();
    StemPolyline stem = seedling_stem();
    if (collides_any(stem, scenario.obstacles)) return fitness(stem.tip(), scenario);
    for (int step_i = 0; step_i < limits.max_steps; ++step_i) {
        controller_inputs(stem, scenario, inputs);
        const double ct = phenotype.activate(inputs)[0];
        const LightCondition light = ct <= 0.5 ? LightCondition::Left : LightCondition::Right;
        stem = model.next(stem, light);
        if (collides_any(stem, scenario.obstacles) || stem.tip().y >= limits.target_height) break;
    }
    return fitness(stem.tip(), scenario);
}

// Mean fitness across all scenarios of the set; this is the eval_fn handed
// to the evolutionary loop.
inline double evaluate_genome(const neat::Genome& genome, const LstmModel& model,
                              const ScenarioSet& set, const RolloutLimits& limits = {},
                              double sigmoid_slope = 4.9) {
    if (set.scenarios.empty()) throw std::invalid_argument("empty scenario set");
    neat::Phenotype phenotype(genome, sigmoid_slope);
    LstmForward forward(model);
    std::vector<double> inputs;
    double total = 0.0;
    for (const auto& sc : set.scenarios)
        total += rollout_fitness(phenotype, forward, sc, limits, inputs);
    return total / double(set.scenarios.size());
}

// Trace CSV: one row per step (pre-action stem, chosen light, C_t); the
// final row holds the terminal stem with the last action repeated.
inline void write_trace_csv(const RolloutTrace& trace, std::ostream& os) {
    os << "step,light,c_t";
    for (int i = 0; i < kStemPoints; ++i) os << ",x" << i << ",y" << i;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < trace.stems.size(); ++i) {
        const std::size_t ai = std::min(i, trace.lights.size() - 1);
        os << i << ',' << (trace.lights.empty() ? '-' : light_code(trace.lights[ai])) << ',';
        if (!trace.control.empty()) {
            std::snprintf(buf, sizeof buf, "%.17g", trace.control[ai]);
            os << buf;
        }
        for (const auto& p : trace.stems[i].points) {
            std::snprintf(buf, sizeof buf, "%.17g", p.x);
            os << ',' << buf;
            std::snprintf(buf, sizeof buf, "%.17g", p.y);
            os << ',' << buf;
        }
        os << '\n';
    }
}

} // namespace plantshape
